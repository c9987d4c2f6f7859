//! Divergence-free vector potential `F` with `curl F = B0` in `Ω`, `ν·F = 0` on `∂Ω`,
//! from the stream function `Δφ = B0`, `φ = 0` on `∂Ω`, `F = (-∂₂φ, ∂₁φ)`.

use serde::Serialize;

use super::field::FieldProfile;
use super::omega::Omega;
use crate::error::{Error, Result};

/// Smallest admissible boundary fraction in the Shortley-Weller stencil.
const MIN_THETA: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct GaugeResiduals {
    /// `L²` norm of `curl F - B0` over nodes two cells away from `∂Ω`.
    pub curl: f64,
    /// `L²` norm of `div F` over the same nodes.
    pub div: f64,
    /// `max |ν·F|` at nodes adjacent to `∂Ω`, `ν` taken at the nearest boundary point.
    pub boundary_normal: f64,
    pub iterations: usize,
    pub solver_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeField {
    pub origin: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub inside: Vec<bool>,
    pub phi: Vec<f64>,
    /// `F = (fx, fy)` at inside nodes, 0 elsewhere.
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
    pub residuals: GaugeResiduals,
}

impl GaugeField {
    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    /// Largest `|F - exact|` over inside nodes.
    pub fn max_error(&self, exact: impl Fn([f64; 2]) -> [f64; 2]) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.nx {
            for j in 0..self.ny {
                let k = i * self.ny + j;
                if self.inside[k] {
                    let e = exact(self.node(i, j));
                    m = m.max((self.fx[k] - e[0]).hypot(self.fy[k] - e[1]));
                }
            }
        }
        m
    }
}

/// Arm lengths (fractions of `h`) to the boundary in directions `+x, -x, +y, -y`.
fn arms(omega: &Omega, p: [f64; 2], h: f64, inside_nb: [bool; 4]) -> [f64; 4] {
    let dirs = [[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]];
    let mut t = [1.0; 4];
    for k in 0..4 {
        if !inside_nb[k] {
            let q = [p[0] + dirs[k][0], p[1] + dirs[k][1]];
            t[k] = omega.segment_exit(p, q).unwrap_or(1.0).max(MIN_THETA);
        }
    }
    t
}

/// Arms shorter than this fraction of `h` are skipped when differentiating `φ`.
const SHORT_ARM: f64 = 0.1;

/// Slope at 0 of the quadratic through `(x_i, y_i)`.
fn lagrange_slope(x: [f64; 3], y: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        // l_i(t) = (t - x_a)(t - x_b) / ((x_i - x_a)(x_i - x_b)), l_i'(0) = -(x_a + x_b) / (...)
        s += y[i] * -(x[a] + x[b]) / ((x[i] - x[a]) * (x[i] - x[b]));
    }
    s
}

/// Sparse row: diagonal plus up to four neighbours.
struct Row {
    diag: f64,
    nb: Vec<(usize, f64)>,
}

fn matvec(rows: &[Row], x: &[f64], y: &mut [f64]) {
    for (k, r) in rows.iter().enumerate() {
        let mut s = r.diag * x[k];
        for &(j, a) in &r.nb {
            s += a * x[j];
        }
        y[k] = s;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned BiCGSTAB.
fn bicgstab(rows: &[Row], b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    let dinv: Vec<f64> = rows.iter().map(|r| 1.0 / r.diag).collect();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
            y[k] = dinv[k] * p[k];
        }
        matvec(rows, &y, &mut v);
        alpha = rho / dot(&r0, &v);
        for k in 0..n {
            s[k] = r[k] - alpha * v[k];
        }
        if dot(&s, &s).sqrt() <= tol * bnorm {
            for k in 0..n {
                x[k] += alpha * y[k];
            }
            return Ok((x, it, dot(&s, &s).sqrt() / bnorm));
        }
        for k in 0..n {
            z[k] = dinv[k] * s[k];
        }
        matvec(rows, &z, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for k in 0..n {
            x[k] += alpha * y[k] + omega * z[k];
            r[k] = s[k] - omega * t[k];
        }
        let rn = dot(&r, &r).sqrt();
        if rn <= tol * bnorm {
            return Ok((x, it, rn / bnorm));
        }
        if !rn.is_finite() || omega == 0.0 {
            break;
        }
    }
    let mut ax = vec![0.0; n];
    matvec(rows, &x, &mut ax);
    let res = ax.iter().zip(b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt() / bnorm;
    if res <= tol {
        return Ok((x, max_iter, res));
    }
    Err(Error::NotConverged {
        method: "BiCGSTAB",
        iterations: max_iter,
        history: vec![res],
    })
}

/// Solves for `F` on a lattice of spacing `resolution`. `Ω` must be simply connected,
/// which discs and simple polygons are.
pub fn compute_gauge_field(field: &FieldProfile, omega: &Omega, resolution: f64) -> Result<GaugeField> {
    let h = resolution;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("resolution must be positive, got {h}")));
    }
    let (lo, hi) = omega.bounding_box();
    let origin = [lo[0] - h, lo[1] - h];
    let nx = ((hi[0] - lo[0]) / h).ceil() as usize + 3;
    let ny = ((hi[1] - lo[1]) / h).ceil() as usize + 3;
    if nx.saturating_mul(ny) > 20_000_000 {
        return Err(Error::InvalidArgument(format!("resolution {h} gives a {nx}x{ny} lattice")));
    }
    let node = |i: usize, j: usize| [origin[0] + i as f64 * h, origin[1] + j as f64 * h];
    let inside: Vec<bool> = (0..nx * ny).map(|k| omega.contains(node(k / ny, k % ny))).collect();
    let mut index = vec![usize::MAX; nx * ny];
    let mut count = 0;
    for k in 0..nx * ny {
        if inside[k] {
            index[k] = count;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidArgument("no lattice node inside the domain".into()));
    }
    let nbk = |i: usize, j: usize| [(i + 1) * ny + j, (i - 1) * ny + j, i * ny + j + 1, i * ny + j - 1];
    let mut rows = Vec::with_capacity(count);
    let mut rhs = Vec::with_capacity(count);
    let mut theta = Vec::with_capacity(count);
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let k = i * ny + j;
            if !inside[k] {
                continue;
            }
            let nb = nbk(i, j);
            let inb = [inside[nb[0]], inside[nb[1]], inside[nb[2]], inside[nb[3]]];
            let t = arms(omega, node(i, j), h, inb);
            let h2 = h * h;
            // Shortley-Weller: u'' ≈ 2/(h²) [u₊/(t₊(t₊+t₋)) + u₋/(t₋(t₊+t₋)) - u₀/(t₊t₋)]
            let cx = [2.0 / (h2 * t[0] * (t[0] + t[1])), 2.0 / (h2 * t[1] * (t[0] + t[1]))];
            let cy = [2.0 / (h2 * t[2] * (t[2] + t[3])), 2.0 / (h2 * t[3] * (t[2] + t[3]))];
            let diag = -2.0 / (h2 * t[0] * t[1]) - 2.0 / (h2 * t[2] * t[3]);
            let coef = [cx[0], cx[1], cy[0], cy[1]];
            let mut row = Row { diag, nb: Vec::new() };
            for d in 0..4 {
                if inb[d] {
                    row.nb.push((index[nb[d]], coef[d]));
                }
            }
            rows.push(row);
            rhs.push(field.value(node(i, j)));
            theta.push(t);
        }
    }
    let (sol, iterations, solver_residual) = bicgstab(&rows, &rhs, 1e-12, 20 * (nx + ny) + 2000)?;
    let mut phi = vec![0.0; nx * ny];
    for k in 0..nx * ny {
        if inside[k] {
            phi[k] = sol[index[k]];
        }
    }
    // three-point derivative on the (possibly shortened) arms, boundary values 0
    let mut fx = vec![0.0; nx * ny];
    let mut fy = vec![0.0; nx * ny];
    let mut row = 0;
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let k = i * ny + j;
            if !inside[k] {
                continue;
            }
            let t = theta[row];
            row += 1;
            let stride = [ny as isize, 1];
            let at = |m: isize| -> Option<f64> {
                let m = usize::try_from(m).ok()?;
                (m < nx * ny && inside[m]).then(|| phi[m])
            };
            // derivative along axis `a` from the arms (t₊, t₋)
            let deriv = |a: usize, tp: f64, tm: f64| -> f64 {
                let (up, um) = (at(k as isize + stride[a]).unwrap_or(0.0), at(k as isize - stride[a]).unwrap_or(0.0));
                if tp.min(tm) >= SHORT_ARM {
                    return lagrange_slope([tp * h, -tm * h, 0.0], [up, um, phi[k]]);
                }
                // a short arm makes phi[k] tiny; skip it and use the next node behind
                let (sign, t) = if tp < tm { (-1isize, tp) } else { (1, tm) };
                let far = at(k as isize + 2 * sign * stride[a]);
                let near = at(k as isize + sign * stride[a]);
                match (near, far) {
                    (Some(n1), Some(n2)) => {
                        let s = sign as f64;
                        lagrange_slope([-s * t * h, s * h, 2.0 * s * h], [0.0, n1, n2])
                    }
                    _ => lagrange_slope([tp * h, -tm * h, 0.0], [up, um, phi[k]]),
                }
            };
            let dx = deriv(0, t[0], t[1]);
            let dy = deriv(1, t[2], t[3]);
            fx[k] = -dy;
            fy[k] = dx;
        }
    }
    let deep = |i: usize, j: usize| {
        i >= 2 && j >= 2 && i + 2 < nx && j + 2 < ny && (0..5).all(|a| (0..5).all(|b| inside[(i + a - 2) * ny + j + b - 2]))
    };
    let (mut curl, mut div) = (0.0, 0.0);
    let mut boundary_normal = 0.0f64;
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let k = i * ny + j;
            if !inside[k] {
                continue;
            }
            if deep(i, j) {
                let c = (fy[k + ny] - fy[k - ny]) / (2.0 * h) - (fx[k + 1] - fx[k - 1]) / (2.0 * h);
                let d = (fx[k + ny] - fx[k - ny]) / (2.0 * h) + (fy[k + 1] - fy[k - 1]) / (2.0 * h);
                curl += (c - field.value(node(i, j))).powi(2) * h * h;
                div += d * d * h * h;
            }
            let nb = nbk(i, j);
            if nb.iter().any(|&m| !inside[m]) {
                let nu = omega.outward_normal(node(i, j));
                boundary_normal = boundary_normal.max((nu[0] * fx[k] + nu[1] * fy[k]).abs());
            }
        }
    }
    Ok(GaugeField {
        origin,
        h,
        nx,
        ny,
        inside,
        phi,
        fx,
        fy,
        residuals: GaugeResiduals {
            curl: curl.sqrt(),
            div: div.sqrt(),
            boundary_normal,
            iterations,
            solver_residual,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::field::{Builtin, SampledField};

    #[test]
    fn unit_disc_constant_field() {
        let xs: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
        let f = FieldProfile::Sampled(SampledField::new(xs.clone(), xs, vec![1.0; 81]).unwrap());
        let mut errs = Vec::new();
        for h in [0.05, 0.025] {
            let g = compute_gauge_field(&f, &Omega::unit_disc(), h).unwrap();
            errs.push(g.max_error(|p| [-p[1] / 2.0, p[0] / 2.0]));
            assert!(g.residuals.curl < 1e-8 && g.residuals.div < 1e-10, "{:?}", g.residuals);
            assert!(g.residuals.boundary_normal < 1e-8, "{:?}", g.residuals);
        }
        // φ = (r² - 1)/4 is quadratic, so the scheme is exact up to the solver tolerance
        assert!(errs.iter().all(|&e| e < 1e-8), "{errs:?}");
    }

    #[test]
    fn zero_field_gives_zero_potential() {
        let xs: Vec<f64> = (0..5).map(|i| -2.0 + i as f64).collect();
        let f = FieldProfile::Sampled(SampledField::new(xs.clone(), xs, vec![0.0; 25]).unwrap());
        let g = compute_gauge_field(&f, &Omega::unit_disc(), 0.1).unwrap();
        assert!(g.fx.iter().chain(&g.fy).all(|&v| v == 0.0));
    }

    #[test]
    fn residuals_shrink_on_polygon() {
        let sq = Omega::polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]).unwrap();
        let f = FieldProfile::Builtin(Builtin::Parabola);
        let a = compute_gauge_field(&f, &sq, 0.1).unwrap();
        let b = compute_gauge_field(&f, &sq, 0.05).unwrap();
        assert!(b.residuals.curl < a.residuals.curl);
        assert!(b.residuals.div < 1e-9);
        assert!(b.residuals.boundary_normal < a.residuals.boundary_normal);
    }
}
