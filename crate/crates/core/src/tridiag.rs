//! Symmetric tridiagonal eigensolver (Sturm bisection + inverse iteration)
//! and a pivoted tridiagonal linear solver.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix with `diag.len() == off.len() + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(diag.len(), off.len() + 1, "tridiagonal shape mismatch");
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for i in 0..n - 1 {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i] * x[i];
        }
        y
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let (lo, hi) = self.gershgorin();
        let pivmin = f64::MIN_POSITIVE.max(f64::EPSILON * f64::EPSILON * (hi - lo).abs().max(1.0));
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        for _ in 0..256 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * scale {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(self - shift) x = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let lu = TridiagonalLu::factor(self, shift)?;
        Ok(lu.solve(rhs))
    }
}

/// LU factors of a general tridiagonal matrix, row interchanges as in LAPACK `gttrf`.
pub struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swap: Vec<bool>,
}

impl TridiagonalLu {
    pub fn factor(m: &SymTridiagonal, shift: f64) -> Result<Self> {
        let lower = m.off.clone();
        let upper = m.off.clone();
        let diag: Vec<f64> = m.diag.iter().map(|d| d - shift).collect();
        Self::factor_general(lower, diag, upper)
    }

    /// Factors the tridiagonal matrix with sub-diagonal `dl`, diagonal `d`, super-diagonal `du`.
    pub fn factor_general(mut dl: Vec<f64>, mut d: Vec<f64>, mut du: Vec<f64>) -> Result<Self> {
        let n = d.len();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        let scale = d.iter().chain(dl.iter()).chain(du.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
        let tiny = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
                swap[i] = true;
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite tridiagonal factor".into()));
        }
        Ok(Self { dl, d, du, du2, swap })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut b = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        if n == 0 {
            return b;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
        b
    }
}

/// Result of the tridiagonal eigensolver: eigenvalue and unit-Euclidean-norm vector.
#[derive(Clone, Debug)]
pub struct RawEigen {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

const INVERSE_ITERATIONS: usize = 8;
const RESTARTS: usize = 3;

/// Lowest `k` eigenpairs by bisection + inverse iteration.
///
/// `rayleigh` computes the Rayleigh quotient of a unit vector; callers with a
/// cancellation-free quadratic form pass it in to sharpen the eigenvalue.
pub fn lowest_eigenpairs<F>(m: &SymTridiagonal, k: usize, rayleigh: F) -> Result<Vec<RawEigen>>
where
    F: Fn(&[f64]) -> f64,
{
    let n = m.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("requested {k} eigenpairs of a {n}x{n} matrix")));
    }
    let (glo, ghi) = m.gershgorin();
    let norm = glo.abs().max(ghi.abs()).max(1.0);
    let mut pairs: Vec<RawEigen> = Vec::with_capacity(k);
    for idx in 0..k {
        let estimate = m.eigenvalue(idx);
        let mut best: Option<RawEigen> = None;
        for restart in 0..=RESTARTS {
            let perturb = norm * f64::EPSILON * (4.0 + 64.0 * restart as f64);
            let lu = TridiagonalLu::factor(m, estimate - perturb)?;
            let mut x: Vec<f64> = (0..n)
                .map(|i| {
                    let s = (i + 1) as f64 / (n + 1) as f64;
                    1.0 + 0.1 * ((idx + restart + 1) as f64 * 7.3 * s).sin()
                })
                .collect();
            normalize(&mut x);
            let mut value = estimate;
            let mut residual = f64::INFINITY;
            for _ in 0..INVERSE_ITERATIONS {
                let mut y = lu.solve(&x);
                for p in &pairs {
                    let c = dot(&y, &p.vector);
                    y.iter_mut().zip(&p.vector).for_each(|(a, b)| *a -= c * b);
                }
                if normalize(&mut y) == 0.0 {
                    break;
                }
                x = y;
                value = rayleigh(&x);
                let ax = m.apply(&x);
                residual = ax
                    .iter()
                    .zip(&x)
                    .map(|(a, v)| (a - value * v).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if residual <= 1e-10 * (1.0 + value.abs()) {
                    break;
                }
            }
            let candidate = RawEigen {
                value,
                vector: x,
                residual,
            };
            let done = residual <= 1e-8 * (1.0 + value.abs());
            if best.as_ref().is_none_or(|b| candidate.residual < b.residual) {
                best = Some(candidate);
            }
            if done {
                break;
            }
        }
        let best = best.expect("at least one attempt");
        if best.residual > 1e-8 * (1.0 + best.value.abs()) {
            return Err(Error::EigenNotConverged {
                index: idx + 1,
                residual: best.residual,
            });
        }
        pairs.push(best);
    }
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(pairs)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) -> f64 {
    let nrm = dot(x, x).sqrt();
    if nrm > 0.0 && nrm.is_finite() {
        x.iter_mut().for_each(|v| *v /= nrm);
        nrm
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize, h: f64) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0 / (h * h); n], vec![-1.0 / (h * h); n - 1])
    }

    #[test]
    fn dirichlet_laplacian_spectrum() {
        // -d^2/dt^2 on (-T, T), T = pi/2: eigenvalues k^2 (exact discrete formula below)
        let t = std::f64::consts::FRAC_PI_2;
        let n = 2001;
        let h = 2.0 * t / (n - 1) as f64;
        let m = laplacian(n - 2, h);
        let pairs = lowest_eigenpairs(&m, 5, |v| dot(v, &m.apply(v))).unwrap();
        for (k, p) in pairs.iter().enumerate() {
            let kk = (k + 1) as f64;
            let exact_discrete = 4.0 / (h * h) * (kk * std::f64::consts::PI * h / (4.0 * t)).sin().powi(2);
            assert!((p.value - exact_discrete).abs() < 1e-8 * exact_discrete, "{k}");
            assert!((p.value - kk * kk).abs() < 1e-4 * kk * kk);
        }
    }

    #[test]
    fn pivoted_solve_matches_apply() {
        let m = SymTridiagonal::new(vec![1.0, -2.0, 0.5, 3.0, 1e-3], vec![2.0, 1.0, -1.0, 0.25]);
        let x = vec![0.3, -1.0, 2.0, 0.7, -0.1];
        let b = m.apply(&x);
        let y = m.solve_shifted(0.0, &b).unwrap();
        for (a, c) in x.iter().zip(&y) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn sturm_count_is_monotone() {
        let m = laplacian(50, 0.1);
        let mut prev = 0;
        for i in 0..100 {
            let c = m.count_below(i as f64 * 5.0);
            assert!(c >= prev);
            prev = c;
        }
        assert_eq!(prev, 50);
    }
}
