//! The one-dimensional functional
//! `E(f) = int |f'|^2 + V(t, alpha) f^2 - b f^2 + (b/2) f^4`, its positive
//! minimizer, the fixed-point structure around the ground state `u_alpha`,
//! and the optimal parameter `xi(b)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::optimize::{golden_section, local_minima};
use crate::spectral::{
    embed, resolvent_with, Accuracy, GroundConstants, Potential, SchrodingerOperator, Spectrum,
    DEFAULT_TAU0_BRACKET,
};
use crate::tridiag::TridiagonalLu;

/// Discrete energy on the full grid. Derivatives are forward differences on
/// each cell, so the quadratic part is exactly `h f^T A f` for the operator
/// matrix `A` with zero end values.
pub fn energy_1d(grid: &Grid1D, potential: Potential, f: &[f64], alpha: f64, b: f64) -> f64 {
    let h = grid.spacing();
    let kin: f64 = f.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / h;
    let density: Vec<f64> = f
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x2 = x * x;
            (potential.value(grid.node(i), alpha) - b) * x2 + 0.5 * b * x2 * x2
        })
        .collect();
    kin + grid.integrate(&density)
}

/// Gradient of [`energy_1d`] with respect to the interior samples.
pub fn energy_gradient_1d(op: &SchrodingerOperator, f_interior: &[f64], b: f64) -> Vec<f64> {
    let h = op.spacing();
    euler_lagrange(op, f_interior, b).into_iter().map(|r| 2.0 * h * r).collect()
}

/// `A f - b f + b f^3` on interior nodes.
fn euler_lagrange(op: &SchrodingerOperator, f: &[f64], b: f64) -> Vec<f64> {
    op.apply(f)
        .into_iter()
        .zip(f)
        .map(|(af, x)| af - b * x + b * x * x * x)
        .collect()
}

fn weighted_norm(v: &[f64], h: f64) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() * h).sqrt()
}

/// Positive minimizer `f_{alpha,b}` (or the zero state) with cached norms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GLProfile {
    pub alpha: f64,
    pub b: f64,
    pub samples: Vec<f64>,
    pub l2_norm: f64,
    pub l4_fourth: f64,
    pub sup_norm: f64,
    /// `<f, u_alpha>`
    pub delta: f64,
    /// `lambda(alpha)` on the profile's grid.
    pub lambda: f64,
    /// Discrete Euler-Lagrange residual in L2.
    pub residual: f64,
    pub grid: Grid1D,
    pub potential: Potential,
}

impl GLProfile {
    pub fn is_trivial(&self) -> bool {
        self.l2_norm == 0.0
    }

    pub fn energy(&self) -> f64 {
        energy_1d(&self.grid, self.potential, &self.samples, self.alpha, self.b)
    }

    pub fn b1_norm(&self) -> f64 {
        self.grid.b1_norm(&self.samples)
    }

    /// `int (1/2) dV/dalpha f^2`, which is `int (t^2/2 + alpha) f^2` for the Montgomery potential.
    pub fn feynman_hellmann(&self) -> f64 {
        let g: Vec<f64> = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, x)| 0.5 * self.potential.alpha_derivative(self.grid.node(i), self.alpha) * x * x)
            .collect();
        self.grid.integrate(&g)
    }

    fn assemble(
        alpha: f64,
        b: f64,
        samples: Vec<f64>,
        u: &[f64],
        lambda: f64,
        residual: f64,
        grid: &Grid1D,
        potential: Potential,
    ) -> Self {
        Self {
            alpha,
            b,
            l2_norm: grid.norm2(&samples),
            l4_fourth: grid.l4_fourth(&samples),
            sup_norm: samples.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            delta: grid.inner(&samples, u),
            lambda,
            residual,
            samples,
            grid: grid.clone(),
            potential,
        }
    }
}

/// Energy record at one `(alpha, b)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundEnergyRecord {
    pub alpha: f64,
    pub b: f64,
    /// Direct evaluation of the functional at the minimizer.
    pub energy: f64,
    /// `||f||_4^4`
    pub f4norm: f64,
    /// `-(b/2) ||f||_4^4`
    pub identity_energy: f64,
    /// `|energy - identity_energy| / |identity_energy|`, 0 for the zero state.
    pub identity_residual: f64,
    /// `int (t^2/2 + alpha) f^2 / ||f||_2^2`, 0 for the zero state.
    pub feynman_hellmann_residual: f64,
}

impl GroundEnergyRecord {
    fn from_profile(p: &GLProfile) -> Self {
        let energy = p.energy();
        let identity_energy = -0.5 * p.b * p.l4_fourth;
        let (identity_residual, fh) = if p.is_trivial() {
            (0.0, 0.0)
        } else {
            (
                (energy - identity_energy).abs() / identity_energy.abs(),
                p.feynman_hellmann() / (p.l2_norm * p.l2_norm),
            )
        };
        Self {
            alpha: p.alpha,
            b: p.b,
            energy,
            f4norm: p.l4_fourth,
            identity_energy,
            identity_residual,
            feynman_hellmann_residual: fh,
        }
    }
}

/// Residuals of the resolvent identities for one profile.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResolventReport {
    /// `|(b - lambda) delta - b <f^3, u>|`
    pub projection: f64,
    /// `|| f + b R(f^3) - delta u ||_2`
    pub fixed_point: f64,
}

/// Row of the ratio table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioRow {
    pub b: f64,
    pub xi: f64,
    pub energy: f64,
    /// `-(b - lambda0)^2 / (2 b ||u0||_4^4)`
    pub model: f64,
    pub ratio: f64,
    /// `||f||_4^4 b^2 ||u0||_4^4 / (b - lambda0)^2`
    pub l4_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioTable {
    pub lambda0: f64,
    pub u0_l4_fourth: f64,
    pub rows: Vec<RatioRow>,
    /// `|r_{k+1} - 1| <= |r_k - 1| + 1e-3` along the sequence.
    pub monotone: bool,
}

/// Solver settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GlSettings {
    /// `b` may not exceed `lambda0 + b_cap_offset` in [`Gl1d::find_xi`].
    pub b_cap_offset: f64,
    pub newton_max_iter: usize,
    pub flow_max_iter: usize,
    /// Stopping rule for Newton: EL residual below this times `||f||_2`.
    pub residual_tol: f64,
    pub prescan_points: usize,
    pub xi_tol: f64,
}

impl Default for GlSettings {
    fn default() -> Self {
        Self {
            b_cap_offset: 0.05,
            newton_max_iter: 60,
            flow_max_iter: 50_000,
            residual_tol: 1e-11,
            prescan_points: 41,
            xi_tol: 1e-7,
        }
    }
}

/// Solver for the 1D problem on one grid; every spectral quantity it uses is
/// the eigenvalue of the same grid matrix.
#[derive(Clone, Debug)]
pub struct Gl1d {
    spectrum: Spectrum,
    constants: GroundConstants,
    pub settings: GlSettings,
}

impl Gl1d {
    pub fn new(grid: Grid1D, potential: Potential) -> Result<Self> {
        let spectrum = Spectrum::new(grid, potential, Accuracy::Discrete);
        let constants = spectrum.ground_constants(DEFAULT_TAU0_BRACKET)?;
        Ok(Self {
            spectrum,
            constants,
            settings: GlSettings::default(),
        })
    }

    pub fn montgomery(grid: Grid1D) -> Result<Self> {
        Self::new(grid, Potential::Montgomery)
    }

    pub fn with_settings(mut self, settings: GlSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn grid(&self) -> &Grid1D {
        self.spectrum.grid()
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn constants(&self) -> &GroundConstants {
        &self.constants
    }

    pub fn lambda0(&self) -> f64 {
        self.constants.lambda0
    }

    pub fn energy(&self, f: &[f64], alpha: f64, b: f64) -> f64 {
        energy_1d(self.grid(), self.spectrum.potential(), f, alpha, b)
    }

    /// Minimizer at `(alpha, b)`; `init` (full-grid samples) overrides the
    /// scaled ground state.
    pub fn minimize_profile(&self, alpha: f64, b: f64, init: Option<&[f64]>) -> Result<GLProfile> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidArgument(format!("b must be positive, got {b}")));
        }
        let grid = self.grid();
        let potential = self.spectrum.potential();
        let op = self.spectrum.operator(alpha)?.op;
        let ground = self.spectrum.ground(alpha)?;
        let lambda = ground.value;
        if b <= lambda + 1e-10 {
            let zero = vec![0.0; grid.len()];
            return Ok(GLProfile::assemble(alpha, b, zero, &ground.vector, lambda, 0.0, grid, potential));
        }
        let h = grid.spacing();
        let u = &ground.vector[1..grid.len() - 1];
        let start: Vec<f64> = match init {
            Some(f) if f.len() == grid.len() && f.iter().any(|&x| x > 0.0) => f[1..grid.len() - 1].to_vec(),
            Some(f) if f.len() != grid.len() => {
                return Err(Error::InvalidArgument(format!(
                    "initial profile has {} samples, grid has {}",
                    f.len(),
                    grid.len()
                )))
            }
            _ => {
                let u4 = grid.l4_fourth(&ground.vector);
                let amp = ((b - lambda) / (b * u4)).sqrt();
                u.iter().map(|x| amp * x.max(0.0)).collect()
            }
        };

        let mut history = Vec::new();
        let f = match self.newton(&op, start.clone(), b, &mut history) {
            Some(f) => f,
            None => {
                let flowed = self.gradient_flow(&op, start, b, &mut history);
                self.newton(&op, flowed, b, &mut history).ok_or_else(|| Error::NotConverged {
                    method: "gradient flow + Newton",
                    iterations: history.len(),
                    history: history.iter().rev().take(8).rev().cloned().collect(),
                })?
            }
        };
        let residual = weighted_norm(&euler_lagrange(&op, &f, b), h);
        let samples = embed(&f);
        Ok(GLProfile::assemble(alpha, b, samples, &ground.vector, lambda, residual, grid, potential))
    }

    /// Damped Newton on the Euler-Lagrange system. Returns `None` when the
    /// iteration stalls or leaves the positive cone.
    fn newton(&self, op: &SchrodingerOperator, mut f: Vec<f64>, b: f64, history: &mut Vec<f64>) -> Option<Vec<f64>> {
        let h = op.spacing();
        let n = f.len();
        let off = op.off_diagonal();
        let diag0 = op.diagonal();
        let mut r = euler_lagrange(op, &f, b);
        let mut rn = weighted_norm(&r, h);
        for _ in 0..self.settings.newton_max_iter {
            let fnorm = weighted_norm(&f, h);
            history.push(rn);
            if fnorm == 0.0 {
                return None;
            }
            if rn <= self.settings.residual_tol * fnorm {
                break;
            }
            let d: Vec<f64> = diag0.iter().zip(&f).map(|(d, x)| d - b + 3.0 * b * x * x).collect();
            let lu = TridiagonalLu::factor_general(vec![off; n - 1], d, vec![off; n - 1]).ok()?;
            let step = lu.solve(&r);
            let mut s = 1.0;
            let mut accepted = false;
            while s > 1e-4 {
                let trial: Vec<f64> = f.iter().zip(&step).map(|(x, d)| x - s * d).collect();
                let tr = euler_lagrange(op, &trial, b);
                let tn = weighted_norm(&tr, h);
                if tn < (1.0 - 1e-4 * s) * rn {
                    f = trial;
                    r = tr;
                    rn = tn;
                    accepted = true;
                    break;
                }
                s *= 0.5;
            }
            if !accepted {
                // Roundoff floor: accept if already well below the invariant tolerance.
                if rn <= 1e-9 * fnorm {
                    break;
                }
                return None;
            }
        }
        let fnorm = weighted_norm(&f, h);
        let min = f.iter().cloned().fold(f64::INFINITY, f64::min);
        if fnorm == 0.0 || min < -1e-12 * fnorm || rn > 1e-9 * fnorm {
            return None;
        }
        f.iter_mut().for_each(|x| *x = x.max(0.0));
        Some(f)
    }

    /// Semi-implicit gradient flow `(1 + tau A) f' = f + tau b (f - f^3)`,
    /// projected onto `f >= 0`.
    fn gradient_flow(&self, op: &SchrodingerOperator, mut f: Vec<f64>, b: f64, history: &mut Vec<f64>) -> Vec<f64> {
        let h = op.spacing();
        let tau = 0.1 / b;
        let m = op.matrix();
        let lu = match TridiagonalLu::factor(&m, -1.0 / tau) {
            Ok(lu) => lu,
            Err(_) => return f,
        };
        for k in 0..self.settings.flow_max_iter {
            let rhs: Vec<f64> = f.iter().map(|x| (x + tau * b * (x - x * x * x)) / tau).collect();
            let mut next = lu.solve(&rhs);
            next.iter_mut().for_each(|x| *x = x.max(0.0));
            if k % 100 == 0 {
                let rn = weighted_norm(&euler_lagrange(op, &next, b), h);
                history.push(rn);
                if rn <= 1e-6 * weighted_norm(&next, h) {
                    return next;
                }
            }
            f = next;
        }
        f
    }

    pub fn ground_energy(&self, alpha: f64, b: f64) -> Result<GroundEnergyRecord> {
        let p = self.minimize_profile(alpha, b, None)?;
        Ok(GroundEnergyRecord::from_profile(&p))
    }

    pub fn record(&self, profile: &GLProfile) -> GroundEnergyRecord {
        GroundEnergyRecord::from_profile(profile)
    }

    /// Fixed-point solve of `f = delta u + G(f)`, `G(f) = -b R(f^3)`, written as
    /// `f = delta (u + v)` with `v` orthogonal to `u`:
    /// `delta^2 = (b - lambda) / (b <(u+v)^3, u>)`, `v = -b delta^2 R((u+v)^3)`.
    pub fn picard_solve(&self, alpha: f64, b: f64) -> Result<GLProfile> {
        let grid = self.grid();
        let pairs = self.spectrum.eigenpairs(alpha, 2)?;
        let (ground, lambda2) = (&pairs[0], pairs[1].value);
        let lambda = ground.value;
        if b <= lambda + 1e-10 {
            return self.minimize_profile(alpha, b, None);
        }
        let op = self.spectrum.operator(alpha)?.op;
        let u = &ground.vector;
        let n = grid.len();
        let mut v = vec![0.0; n];
        let mut f_prev: Option<Vec<f64>> = None;
        let mut prev_step: Option<f64> = None;
        let mut history = Vec::new();
        for it in 0..500 {
            let w: Vec<f64> = u.iter().zip(&v).map(|(a, c)| a + c).collect();
            let w3: Vec<f64> = w.iter().map(|x| x * x * x).collect();
            let denom = b * grid.inner(&w3, u);
            if !(denom > 0.0) {
                return Err(Error::NoContraction { ratio: f64::INFINITY });
            }
            let delta2 = (b - lambda) / denom;
            let f: Vec<f64> = w.iter().map(|x| delta2.sqrt() * x).collect();
            let rw = resolvent_with(&op, grid, ground, lambda2, b, &w3)?;
            v = rw.iter().map(|x| -b * delta2 * x).collect();
            if let Some(fp) = &f_prev {
                let diff: Vec<f64> = f.iter().zip(fp).map(|(a, c)| a - c).collect();
                let step = grid.norm2(&diff);
                history.push(step);
                if step <= 1e-10 {
                    let fin: Vec<f64> = u.iter().zip(&v).map(|(a, c)| delta2.sqrt() * (a + c)).collect();
                    let interior = &fin[1..n - 1];
                    let residual = weighted_norm(&euler_lagrange(&op, interior, b), grid.spacing());
                    return Ok(GLProfile::assemble(alpha, b, fin, u, lambda, residual, grid, self.spectrum.potential()));
                }
                if let Some(ps) = prev_step {
                    let ratio = step / ps;
                    if it >= 2 && ratio >= 0.9 && step > 1e-13 {
                        return Err(Error::NoContraction { ratio });
                    }
                }
                prev_step = Some(step);
            }
            f_prev = Some(f);
        }
        Err(Error::NotConverged {
            method: "picard",
            iterations: 500,
            history: history.iter().rev().take(8).rev().cloned().collect(),
        })
    }

    /// Residuals of `(b - lambda) delta = b <f^3, u>` and `f + b R(f^3) = delta u`.
    pub fn verify_resolvent_identities(&self, profile: &GLProfile) -> Result<ResolventReport> {
        verify_resolvent_identities(profile)
    }

    /// `xi(b)`: minimizer of `alpha -> b(alpha, b)` over `(z1(b), z2(b))`.
    pub fn find_xi(&self, b: f64) -> Result<(f64, GroundEnergyRecord)> {
        let (xi, profile) = self.find_xi_profile(b)?;
        Ok((xi, GroundEnergyRecord::from_profile(&profile)))
    }

    /// As [`Gl1d::find_xi`], returning the minimizing profile.
    pub fn find_xi_profile(&self, b: f64) -> Result<(f64, GLProfile)> {
        let c = &self.constants;
        let cap = c.lambda0 + self.settings.b_cap_offset;
        if b > cap {
            return Err(Error::InvalidArgument(format!(
                "b = {b} exceeds the configured cap lambda0 + {} = {cap}",
                self.settings.b_cap_offset
            )));
        }
        let (z1, z2) = self.spectrum.z_interval(b, c.tau0, c.lambda0)?;
        let m = self.settings.prescan_points.max(5);
        let alphas: Vec<f64> = (1..=m).map(|i| z1 + (z2 - z1) * i as f64 / (m + 1) as f64).collect();
        let energies: Vec<f64> = alphas
            .par_iter()
            .map(|&a| Ok(self.minimize_profile(a, b, None)?.energy()))
            .collect::<Result<_>>()?;
        let mut padded = Vec::with_capacity(m + 2);
        padded.push(0.0);
        padded.extend_from_slice(&energies);
        padded.push(0.0);
        let minima = local_minima(&padded);
        if minima.len() != 1 {
            return Err(Error::NotUnimodal { count: minima.len() });
        }
        let k = minima[0];
        let lo = if k == 1 { z1 } else { alphas[k - 2] };
        let hi = if k == m { z2 } else { alphas[k] };
        let mut warm: Option<Vec<f64>> = None;
        let (xi, _) = golden_section(
            |a| -> Result<f64> {
                let p = self.minimize_profile(a, b, warm.as_deref())?;
                let e = p.energy();
                if !p.is_trivial() {
                    warm = Some(p.samples);
                }
                Ok(e)
            },
            lo,
            hi,
            self.settings.xi_tol,
        )?;
        let profile = self.minimize_profile(xi, b, warm.as_deref())?;
        let fh = profile.feynman_hellmann();
        let scale = profile.l2_norm * profile.l2_norm;
        if fh.abs() > 1e-5 * scale {
            return Err(Error::InvalidArgument(format!(
                "Feynman-Hellmann condition fails at xi = {xi}: {fh:.3e} vs {:.3e}",
                1e-5 * scale
            )));
        }
        Ok((xi, profile))
    }

    /// `r(b) = b(xi(b), b) / (-(b - lambda0)^2 / (2 b ||u0||_4^4))` along a sequence.
    pub fn asymptotic_ratio_table(&self, b_sequence: &[f64]) -> Result<RatioTable> {
        let c = &self.constants;
        for &b in b_sequence {
            if !(b > c.lambda0 && b <= c.lambda0 + 0.05 + 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "b = {b} outside (lambda0, lambda0 + 0.05] with lambda0 = {}",
                    c.lambda0
                )));
            }
        }
        let rows: Vec<RatioRow> = b_sequence
            .par_iter()
            .map(|&b| {
                let (xi, rec) = self.find_xi(b)?;
                let gap = b - c.lambda0;
                let model = -gap * gap / (2.0 * b * c.u0_l4_fourth);
                Ok(RatioRow {
                    b,
                    xi,
                    energy: rec.energy,
                    model,
                    ratio: rec.energy / model,
                    l4_ratio: rec.f4norm * b * b * c.u0_l4_fourth / (gap * gap),
                })
            })
            .collect::<Result<_>>()?;
        let monotone = rows
            .windows(2)
            .all(|w| (w[1].ratio - 1.0).abs() <= (w[0].ratio - 1.0).abs() + 1e-3);
        Ok(RatioTable {
            lambda0: c.lambda0,
            u0_l4_fourth: c.u0_l4_fourth,
            rows,
            monotone,
        })
    }
}

/// Residuals of the two resolvent identities, recomputing `u_alpha`, `lambda`
/// and `lambda_2` on the profile's grid.
pub fn verify_resolvent_identities(profile: &GLProfile) -> Result<ResolventReport> {
    if profile.is_trivial() {
        return Ok(ResolventReport {
            projection: 0.0,
            fixed_point: 0.0,
        });
    }
    let grid = &profile.grid;
    let spectrum = Spectrum::new(grid.clone(), profile.potential, Accuracy::Discrete);
    let pairs = spectrum.eigenpairs(profile.alpha, 2)?;
    let ground = &pairs[0];
    let op = spectrum.operator(profile.alpha)?.op;
    let b = profile.b;
    let f = &profile.samples;
    let f3: Vec<f64> = f.iter().map(|x| x * x * x).collect();
    let delta = grid.inner(f, &ground.vector);
    let projection = ((b - ground.value) * delta - b * grid.inner(&f3, &ground.vector)).abs();
    let rf3 = resolvent_with(&op, grid, ground, pairs[1].value, b, &f3)?;
    let diff: Vec<f64> = f
        .iter()
        .zip(&rf3)
        .zip(&ground.vector)
        .map(|((fi, ri), ui)| fi + b * ri - delta * ui)
        .collect();
    Ok(ResolventReport {
        projection,
        fixed_point: grid.norm2(&diff),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn solver() -> &'static Gl1d {
        static S: OnceLock<Gl1d> = OnceLock::new();
        S.get_or_init(|| Gl1d::montgomery(Grid1D::new(8.0, 2001).unwrap()).unwrap())
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let s = solver();
        let f = vec![0.0; s.grid().len()];
        assert_eq!(s.energy(&f, 0.3, 0.7), 0.0);
        let lam = s.spectrum().lambda(0.3).unwrap();
        let p = s.minimize_profile(0.3, lam - 0.01, None).unwrap();
        assert!(p.is_trivial());
        assert_eq!(s.record(&p).energy, 0.0);
    }

    #[test]
    fn threshold_energy_is_quartic_part() {
        let s = solver();
        let g = s.spectrum().ground(-0.2).unwrap();
        let e = s.energy(&g.vector, -0.2, g.value);
        let expected = 0.5 * g.value * s.grid().l4_fourth(&g.vector);
        assert!((e - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn minimizer_satisfies_energy_identity_and_bounds() {
        let s = solver();
        let c = s.constants().clone();
        let p = s.minimize_profile(c.tau0, c.lambda0 + 1e-3, None).unwrap();
        assert!(p.samples.iter().all(|&x| x >= 0.0));
        assert!(p.sup_norm <= 1.0);
        assert!(p.residual <= 1e-7 * p.l2_norm);
        let rec = s.record(&p);
        assert!(rec.identity_residual < 1e-9, "{}", rec.identity_residual);
        assert!(rec.energy < 0.0);
    }

    #[test]
    fn gradient_vanishes_and_matches_finite_differences() {
        let s = solver();
        let c = s.constants().clone();
        let (alpha, b) = (c.tau0 + 0.02, c.lambda0 + 5e-3);
        let p = s.minimize_profile(alpha, b, None).unwrap();
        let op = s.spectrum().operator(alpha).unwrap().op;
        let n = s.grid().len();
        let fi = &p.samples[1..n - 1];
        let grad = energy_gradient_1d(&op, fi, b);
        assert!(grad.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1e-7);

        // away from the minimizer the gradient must match directional differences
        let g: Vec<f64> = fi.iter().enumerate().map(|(i, x)| x * (1.0 + 0.3 * (i as f64 * 0.01).sin())).collect();
        let grad = energy_gradient_1d(&op, &g, b);
        let dir: Vec<f64> = (0..n - 2).map(|i| (i as f64 * 0.037).cos() * fi[i].sqrt()).collect();
        let eps = 1e-5;
        let e = |sgn: f64| {
            let v: Vec<f64> = g.iter().zip(&dir).map(|(a, d)| a + sgn * eps * d).collect();
            s.energy(&embed(&v), alpha, b)
        };
        let fd = (e(1.0) - e(-1.0)) / (2.0 * eps);
        let an: f64 = grad.iter().zip(&dir).map(|(a, d)| a * d).sum();
        assert!((fd - an).abs() <= 1e-5 * an.abs(), "{fd} vs {an}");
    }

    #[test]
    fn resolvent_identities_hold() {
        let s = solver();
        let c = s.constants().clone();
        let p = s.minimize_profile(c.tau0, c.lambda0 + 1e-3, None).unwrap();
        let r = s.verify_resolvent_identities(&p).unwrap();
        assert!(r.projection <= 1e-7 && r.fixed_point <= 1e-7, "{r:?}");
    }

    #[test]
    fn picard_matches_newton() {
        let s = solver();
        let c = s.constants().clone();
        let b = c.lambda0 + 1e-3;
        let p = s.minimize_profile(c.tau0, b, None).unwrap();
        let q = s.picard_solve(c.tau0, b).unwrap();
        let d: Vec<f64> = p.samples.iter().zip(&q.samples).map(|(a, b)| a - b).collect();
        assert!(s.grid().norm2(&d) <= 1e-6);
    }

    #[test]
    fn picard_refuses_far_from_threshold() {
        let s = solver();
        assert!(s.picard_solve(-0.3, 3.0).is_err());
    }

    #[test]
    fn xi_is_negative_and_stationary() {
        let s = solver();
        let b = s.lambda0() + 1e-2;
        let (xi, rec) = s.find_xi(b).unwrap();
        assert!(xi < 0.0);
        assert!(rec.energy < 0.0);
        assert!(rec.feynman_hellmann_residual.abs() <= 1e-5);
        for da in [-0.05, 0.05] {
            assert!(s.ground_energy(xi + da, b).unwrap().energy >= rec.energy);
        }
    }

    #[test]
    fn b_cap_is_enforced() {
        let s = solver();
        assert!(s.find_xi(s.lambda0() + 0.2).is_err());
        assert!(s.find_xi(s.lambda0() - 0.01).is_err());
    }
}
