//! The Montgomery family `P(alpha) = -d^2/dt^2 + (t^2/2 + alpha)^2` on a
//! truncated line: assembly, low eigenpairs, the spectral curve and its
//! minimum, and the regularized resolvent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::optimize::{bisect, golden_section};
use crate::tridiag::{self, SymTridiagonal, TridiagonalLu};

/// Potential family indexed by `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `(t^2/2 + alpha)^2`
    Montgomery,
    /// `(2 - 2 cos((t^2/2 + alpha) s)) / s^2`, the fiber potential seen by a
    /// plane wave `exp(i alpha x1)` on a link lattice of spacing `s` in `x1`.
    Lattice { spacing: f64 },
}

impl Potential {
    pub fn value(&self, t: f64, alpha: f64) -> f64 {
        let q = 0.5 * t * t + alpha;
        match *self {
            Potential::Montgomery => q * q,
            Potential::Lattice { spacing } => {
                let half = 0.5 * q * spacing;
                let s = half.sin();
                4.0 * s * s / (spacing * spacing)
            }
        }
    }

    /// `d V / d alpha`.
    pub fn alpha_derivative(&self, t: f64, alpha: f64) -> f64 {
        let q = 0.5 * t * t + alpha;
        match *self {
            Potential::Montgomery => 2.0 * q,
            Potential::Lattice { spacing } => 2.0 * (q * spacing).sin() / spacing,
        }
    }

    fn check(&self, grid: &Grid1D, alpha: f64) -> Result<()> {
        grid.check_confinement(alpha.abs())?;
        if let Potential::Lattice { spacing } = *self {
            let t = grid.half_width();
            let phase = (0.5 * t * t + alpha.abs()) * spacing;
            if !(spacing > 0.0) || phase > std::f64::consts::PI {
                return Err(Error::InvalidGrid(format!(
                    "lattice spacing {spacing} aliases the potential inside |t| <= {t} (phase {phase:.3} > pi)"
                )));
            }
        }
        Ok(())
    }
}

/// Symmetric tridiagonal discretization of `-d^2/dt^2 + V(t)` on the interior
/// nodes of a [`Grid1D`], Dirichlet at both ends.
#[derive(Clone, Debug)]
pub struct SchrodingerOperator {
    h: f64,
    potential: Vec<f64>,
}

impl SchrodingerOperator {
    /// `potential` holds one value per interior node.
    pub fn new(h: f64, potential: Vec<f64>) -> Self {
        Self { h, potential }
    }

    pub fn from_grid<F: Fn(f64) -> f64>(grid: &Grid1D, v: F) -> Self {
        let n = grid.len();
        let potential = (1..n - 1).map(|i| v(grid.node(i))).collect();
        Self::new(grid.spacing(), potential)
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn dim(&self) -> usize {
        self.potential.len()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let k = 2.0 / (self.h * self.h);
        self.potential.iter().map(|v| k + v).collect()
    }

    pub fn off_diagonal(&self) -> f64 {
        -1.0 / (self.h * self.h)
    }

    pub fn matrix(&self) -> SymTridiagonal {
        SymTridiagonal::new(self.diagonal(), vec![self.off_diagonal(); self.dim().saturating_sub(1)])
    }

    /// Applies the operator to interior samples.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let k = 1.0 / (self.h * self.h);
        (0..n)
            .map(|i| {
                let left = if i > 0 { v[i - 1] } else { 0.0 };
                let right = if i + 1 < n { v[i + 1] } else { 0.0 };
                k * (2.0 * v[i] - left - right) + self.potential[i] * v[i]
            })
            .collect()
    }

    /// `sum (v_{i+1} - v_i)^2 / h^2 + sum V_i v_i^2` with zero end values;
    /// equals `v^T A v` without the cancellation of the matrix form.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let n = self.dim();
        let mut kin = v[0] * v[0] + v[n - 1] * v[n - 1];
        for w in v.windows(2) {
            kin += (w[1] - w[0]).powi(2);
        }
        let pot: f64 = self.potential.iter().zip(v).map(|(p, x)| p * x * x).sum();
        kin / (self.h * self.h) + pot
    }

    /// Lowest `k` eigenpairs (`1 <= k <= 5`), vectors returned on interior nodes with
    /// unit discrete L2 norm (weight `h`) and positive mean.
    pub fn lowest(&self, k: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        if !(1..=5).contains(&k) {
            return Err(Error::InvalidArgument(format!("k must be in 1..=5, got {k}")));
        }
        let m = self.matrix();
        let raw = tridiag::lowest_eigenpairs(&m, k, |v| self.quadratic_form(v) / tridiag::dot(v, v))?;
        let scale = 1.0 / self.h.sqrt();
        Ok(raw
            .into_iter()
            .map(|e| {
                let sign = if e.vector.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
                (e.value, e.vector.iter().map(|x| sign * scale * x).collect())
            })
            .collect())
    }
}

/// Eigenvalue and L2-normalized eigenfunction sampled on all grid nodes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// 1-based eigenvalue index.
    pub index: usize,
}

/// Discretized `P(alpha)` together with the grid it lives on.
#[derive(Clone, Debug)]
pub struct MontgomeryOperator {
    pub alpha: f64,
    pub grid: Grid1D,
    pub potential: Potential,
    pub op: SchrodingerOperator,
}

impl MontgomeryOperator {
    pub fn matrix(&self) -> SymTridiagonal {
        self.op.matrix()
    }
}

pub fn assemble_montgomery(alpha: f64, grid: &Grid1D) -> Result<MontgomeryOperator> {
    assemble(Potential::Montgomery, alpha, grid)
}

pub fn assemble(potential: Potential, alpha: f64, grid: &Grid1D) -> Result<MontgomeryOperator> {
    if !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha = {alpha}")));
    }
    potential.check(grid, alpha)?;
    let op = SchrodingerOperator::from_grid(grid, |t| potential.value(t, alpha));
    Ok(MontgomeryOperator {
        alpha,
        grid: grid.clone(),
        potential,
        op,
    })
}

/// Lowest `k` eigenpairs of an assembled operator, as full-grid samples.
pub fn lowest_eigenpairs(op: &MontgomeryOperator, k: usize) -> Result<Vec<EigenPair>> {
    let pairs = op.op.lowest(k)?;
    Ok(pairs
        .into_iter()
        .enumerate()
        .map(|(i, (value, v))| EigenPair {
            value,
            vector: embed(&v),
            index: i + 1,
        })
        .collect())
}

/// Pads interior samples with the two Dirichlet zeros.
pub(crate) fn embed(interior: &[f64]) -> Vec<f64> {
    let mut full = Vec::with_capacity(interior.len() + 2);
    full.push(0.0);
    full.extend_from_slice(interior);
    full.push(0.0);
    full
}

/// How `lambda(alpha)` is reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Accuracy {
    /// Eigenvalue of the matrix on the given grid; consistent with every other
    /// quantity computed on that grid.
    Discrete,
    /// Richardson combination of the grid and its 2x refinement.
    Extrapolated,
}

/// Two-grid convergence report attached to an extrapolated eigenvalue.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub alpha: f64,
    pub value: f64,
    pub coarse: f64,
    pub fine: f64,
    /// `(fine - coarse) / 3`, the Richardson correction applied to `fine`.
    pub richardson_diff: f64,
    pub coarse_points: usize,
    pub fine_points: usize,
}

/// Spectral curve samples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralCurve {
    pub alphas: Vec<f64>,
    pub values: Vec<f64>,
    pub second_values: Option<Vec<f64>>,
    pub grid_half_width: f64,
    pub grid_points: usize,
}

/// Spectral quantities of the family `-d^2/dt^2 + V(t, alpha)` on one grid.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid1D,
    fine: Option<Grid1D>,
    potential: Potential,
    accuracy: Accuracy,
}

/// Default finite-difference steps.
pub const LAMBDA_PRIME_STEP: f64 = 1e-4;
pub const LAMBDA_SECOND_STEP: f64 = 1e-2;

impl Spectrum {
    pub fn new(grid: Grid1D, potential: Potential, accuracy: Accuracy) -> Self {
        let fine = (accuracy == Accuracy::Extrapolated).then(|| grid.refined());
        Self {
            grid,
            fine,
            potential,
            accuracy,
        }
    }

    /// Montgomery family, Richardson-extrapolated eigenvalues.
    pub fn montgomery(grid: Grid1D) -> Self {
        Self::new(grid, Potential::Montgomery, Accuracy::Extrapolated)
    }

    /// Montgomery family, eigenvalues of the grid matrix itself.
    pub fn montgomery_discrete(grid: Grid1D) -> Self {
        Self::new(grid, Potential::Montgomery, Accuracy::Discrete)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn potential(&self) -> Potential {
        self.potential
    }

    pub fn accuracy(&self) -> Accuracy {
        self.accuracy
    }

    pub fn operator(&self, alpha: f64) -> Result<MontgomeryOperator> {
        assemble(self.potential, alpha, &self.grid)
    }

    fn check_alpha(&self, alpha: f64) -> Result<()> {
        if !self.grid.contains_alpha(alpha) {
            let (lo, hi) = self.grid.alpha_range();
            return Err(Error::InvalidArgument(format!(
                "alpha = {alpha} outside the grid's declared range [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// Lowest `k` eigenpairs on the working grid.
    pub fn eigenpairs(&self, alpha: f64, k: usize) -> Result<Vec<EigenPair>> {
        self.check_alpha(alpha)?;
        lowest_eigenpairs(&self.operator(alpha)?, k)
    }

    /// Ground state `(lambda, u_alpha)` on the working grid.
    pub fn ground(&self, alpha: f64) -> Result<EigenPair> {
        Ok(self.eigenpairs(alpha, 1)?.remove(0))
    }

    fn discrete_on(&self, grid: &Grid1D, alpha: f64) -> Result<(f64, Vec<f64>)> {
        let op = assemble(self.potential, alpha, grid)?;
        Ok(op.op.lowest(1)?.remove(0))
    }

    /// `lambda(alpha)` with its two-grid report. In discrete mode the report
    /// still carries the refined value but `value` is the working-grid eigenvalue.
    pub fn lambda_of_alpha(&self, alpha: f64) -> Result<LambdaEstimate> {
        self.check_alpha(alpha)?;
        let fine_grid = self.fine.clone().unwrap_or_else(|| self.grid.refined());
        let coarse = self.discrete_on(&self.grid, alpha)?.0;
        let fine = self.discrete_on(&fine_grid, alpha)?.0;
        let richardson_diff = (fine - coarse) / 3.0;
        let value = match self.accuracy {
            Accuracy::Discrete => coarse,
            Accuracy::Extrapolated => fine + richardson_diff,
        };
        Ok(LambdaEstimate {
            alpha,
            value,
            coarse,
            fine,
            richardson_diff,
            coarse_points: self.grid.len(),
            fine_points: fine_grid.len(),
        })
    }

    /// `lambda(alpha)` alone.
    pub fn lambda(&self, alpha: f64) -> Result<f64> {
        self.check_alpha(alpha)?;
        match self.accuracy {
            Accuracy::Discrete => Ok(self.discrete_on(&self.grid, alpha)?.0),
            Accuracy::Extrapolated => Ok(self.lambda_of_alpha(alpha)?.value),
        }
    }

    fn feynman_hellmann_on(&self, grid: &Grid1D, alpha: f64) -> Result<f64> {
        let (_, u) = self.discrete_on(grid, alpha)?;
        let h = grid.spacing();
        Ok(u
            .iter()
            .enumerate()
            .map(|(i, x)| self.potential.alpha_derivative(grid.node(i + 1), alpha) * x * x)
            .sum::<f64>()
            * h)
    }

    /// `lambda'(alpha) = int dV/dalpha |u_alpha|^2`.
    pub fn lambda_prime(&self, alpha: f64) -> Result<f64> {
        self.check_alpha(alpha)?;
        let coarse = self.feynman_hellmann_on(&self.grid, alpha)?;
        match &self.fine {
            None => Ok(coarse),
            Some(fine_grid) => {
                let fine = self.feynman_hellmann_on(fine_grid, alpha)?;
                Ok(fine + (fine - coarse) / 3.0)
            }
        }
    }

    /// Minimizer of `lambda` inside `bracket`, golden section to `1e-8` in alpha.
    pub fn find_tau0(&self, bracket: (f64, f64)) -> Result<(f64, f64)> {
        let (lo, hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
        if hi > 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bracket [{lo}, {hi}] must lie in (-inf, 0]"
            )));
        }
        let f_lo = self.lambda(lo)?;
        let f_hi = self.lambda(hi)?;
        let (tau0, lambda0) = golden_section(|a| self.lambda(a), lo, hi, 1e-8)?;
        let margin = 1e-12 * lambda0.abs().max(1.0);
        if !(lambda0 < f_lo - margin && lambda0 < f_hi - margin) {
            return Err(Error::NoInteriorMinimum { lo, hi });
        }
        if tau0 >= 0.0 {
            return Err(Error::InvalidArgument(format!("minimizer tau0 = {tau0} is not negative")));
        }
        Ok((tau0, lambda0))
    }

    /// Centered second difference of `lambda` at `tau0`; the returned step is the
    /// first of `1e-2, 5e-3, 2.5e-3` whose value agrees with the half step within 10%.
    pub fn lambda_second_derivative(&self, tau0: f64) -> Result<f64> {
        let center = self.lambda(tau0)?;
        let diff = |s: f64| -> Result<f64> {
            Ok((self.lambda(tau0 + s)? + self.lambda(tau0 - s)? - 2.0 * center) / (s * s))
        };
        let mut step = LAMBDA_SECOND_STEP;
        let mut current = diff(step)?;
        let mut worst = f64::INFINITY;
        for _ in 0..3 {
            let half = diff(0.5 * step)?;
            let rel = (current - half).abs() / half.abs().max(f64::MIN_POSITIVE);
            if rel <= 0.1 {
                if current <= 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "second derivative {current} at tau0 = {tau0} is not positive"
                    )));
                }
                return Ok(current);
            }
            worst = worst.min(rel);
            step *= 0.5;
            current = half;
        }
        Err(Error::StepHalving {
            what: "lambda''",
            relative: worst,
            limit: 0.1,
        })
    }

    /// The two solutions `z1 < tau0 < z2` of `lambda(alpha) = b`.
    pub fn z_interval(&self, b: f64, tau0: f64, lambda0: f64) -> Result<(f64, f64)> {
        if b <= lambda0 {
            return Err(Error::EmptyInterval {
                level: b,
                reason: format!("b <= lambda0 = {lambda0}"),
            });
        }
        let (amin, amax) = self.grid.alpha_range();
        let g = |a: f64| -> Result<f64> { Ok(self.lambda(a)? - b) };
        let side = |dir: f64| -> Result<f64> {
            let mut step = 1e-3;
            let mut inner = tau0;
            loop {
                let outer = (tau0 + dir * step).clamp(amin, amax);
                if g(outer)? >= 0.0 {
                    let (lo, hi) = if dir < 0.0 { (outer, inner) } else { (inner, outer) };
                    return bisect(g, lo, hi, 1e-14)?.ok_or_else(|| Error::EmptyInterval {
                        level: b,
                        reason: "no sign change".into(),
                    });
                }
                if outer == amin || outer == amax {
                    return Err(Error::EmptyInterval {
                        level: b,
                        reason: format!("lambda stays below b on the scanned range [{amin}, {amax}]"),
                    });
                }
                inner = outer;
                step *= 2.0;
            }
        };
        let z1 = side(-1.0)?;
        let z2 = side(1.0)?;
        Ok((z1, z2))
    }

    /// `w = (P(alpha) - b)^{-1} (1 - pi_alpha) g` with `<w, u_alpha> = 0`.
    pub fn regularized_resolvent_apply(&self, alpha: f64, b: f64, g: &[f64]) -> Result<Vec<f64>> {
        let pairs = self.eigenpairs(alpha, 2)?;
        resolvent_with(&self.operator(alpha)?.op, &self.grid, &pairs[0], pairs[1].value, b, g)
    }

    /// Samples `lambda` (and optionally `lambda_2`) over `alphas` in parallel.
    pub fn curve(&self, alphas: &[f64], with_second: bool) -> Result<SpectralCurve> {
        let rows: Vec<(f64, Option<f64>)> = alphas
            .par_iter()
            .map(|&a| -> Result<(f64, Option<f64>)> {
                let l1 = self.lambda(a)?;
                let l2 = if with_second {
                    Some(self.eigenpairs(a, 2)?[1].value)
                } else {
                    None
                };
                Ok((l1, l2))
            })
            .collect::<Result<_>>()?;
        Ok(SpectralCurve {
            alphas: alphas.to_vec(),
            values: rows.iter().map(|r| r.0).collect(),
            second_values: with_second.then(|| rows.iter().map(|r| r.1.unwrap_or(f64::NAN)).collect()),
            grid_half_width: self.grid.half_width(),
            grid_points: self.grid.len(),
        })
    }
}

/// `(tau0, lambda0)` and the quantities derived from the ground state at `tau0`,
/// all on one grid and one potential.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundConstants {
    pub tau0: f64,
    pub lambda0: f64,
    pub lambda_second: f64,
    pub lambda2_at_tau0: f64,
    /// `||u_0||_4^4`
    pub u0_l4_fourth: f64,
    pub half_width: f64,
    pub points: usize,
    pub potential: Potential,
    pub accuracy: Accuracy,
}

/// Bracket used when none is supplied; contains the Montgomery minimum with room on both sides.
pub const DEFAULT_TAU0_BRACKET: (f64, f64) = (-1.0, 0.0);

impl Spectrum {
    pub fn ground_constants(&self, bracket: (f64, f64)) -> Result<GroundConstants> {
        let (tau0, lambda0) = self.find_tau0(bracket)?;
        let lambda_second = self.lambda_second_derivative(tau0)?;
        let pairs = self.eigenpairs(tau0, 2)?;
        Ok(GroundConstants {
            tau0,
            lambda0,
            lambda_second,
            lambda2_at_tau0: pairs[1].value,
            u0_l4_fourth: self.grid.l4_fourth(&pairs[0].vector),
            half_width: self.grid.half_width(),
            points: self.grid.len(),
            potential: self.potential,
            accuracy: self.accuracy,
        })
    }
}

/// Regularized resolvent given the operator, its ground pair and second eigenvalue.
pub(crate) fn resolvent_with(
    op: &SchrodingerOperator,
    grid: &Grid1D,
    ground: &EigenPair,
    lambda2: f64,
    b: f64,
    g: &[f64],
) -> Result<Vec<f64>> {
    let gap2 = (lambda2 - b).abs();
    if gap2 < 1e-10 {
        return Err(Error::IllConditioned { b, gap: gap2 });
    }
    let u = &ground.vector;
    let c = grid.inner(g, u);
    let rhs: Vec<f64> = g[1..g.len() - 1]
        .iter()
        .zip(&u[1..u.len() - 1])
        .map(|(gi, ui)| gi - c * ui)
        .collect();
    let m = op.matrix();
    let gap1 = (ground.value - b).abs();
    let mut w = if gap1 > 1e-9 {
        TridiagonalLu::factor(&m, b)?.solve(&rhs)
    } else {
        // Shifted solve plus refinement; the ground direction is projected out below.
        let shift = b - 1e-6;
        let lu = TridiagonalLu::factor(&m, shift)?;
        let mut w = lu.solve(&rhs);
        for _ in 0..4 {
            project_out(&mut w, &u[1..u.len() - 1], grid.spacing());
            let aw = op.apply(&w);
            let r: Vec<f64> = rhs
                .iter()
                .zip(aw.iter().zip(&w))
                .map(|(r, (a, x))| r - (a - b * x))
                .collect();
            let d = lu.solve(&r);
            w.iter_mut().zip(&d).for_each(|(x, y)| *x += y);
        }
        w
    };
    project_out(&mut w, &u[1..u.len() - 1], grid.spacing());
    Ok(embed(&w))
}

fn project_out(w: &mut [f64], u: &[f64], h: f64) {
    let c = tridiag::dot(w, u) * h;
    w.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
}

/// `lambda(alpha)` on the default grid with its two-grid report.
pub fn lambda_of_alpha(alpha: f64, grid: &Grid1D) -> Result<LambdaEstimate> {
    Spectrum::montgomery(grid.clone()).lambda_of_alpha(alpha)
}

/// `(tau0, lambda0)` for the Montgomery family.
pub fn find_tau0(grid: &Grid1D, bracket: (f64, f64)) -> Result<(f64, f64)> {
    Spectrum::montgomery(grid.clone()).find_tau0(bracket)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> Grid1D {
        Grid1D::new(8.0, 1601).unwrap()
    }

    #[test]
    fn diagonal_entries_match_potential() {
        let g = Grid1D::new(8.0, 2001).unwrap();
        let op = assemble_montgomery(0.0, &g).unwrap();
        let h = g.spacing();
        // node 1000 is t = 0 -> interior index 999
        assert_eq!(g.node(1000), 0.0);
        let d = op.op.diagonal();
        assert!((d[999] - 2.0 / (h * h)).abs() < 1e-9);
        let op = assemble_montgomery(-1.0, &g).unwrap();
        // the well bottom t = sqrt 2
        assert!((Potential::Montgomery.value(2f64.sqrt(), -1.0)).abs() < 1e-15);
        assert!(op.op.off_diagonal() == -1.0 / (h * h));
    }

    #[test]
    fn confinement_is_enforced() {
        let g = Grid1D::with_alpha_range(5.0, 201, (-1.0, 1.0)).unwrap();
        assert!(assemble_montgomery(-4.0, &g).is_err());
        assert!(assemble(Potential::Lattice { spacing: 0.3 }, 0.0, &g).is_err());
        assert!(assemble(Potential::Lattice { spacing: 0.2 }, 0.0, &g).is_ok());
    }

    #[test]
    fn ground_state_is_positive_and_normalized() {
        let s = Spectrum::montgomery_discrete(small_grid());
        let pairs = s.eigenpairs(-0.35, 3).unwrap();
        let g = s.grid();
        for p in &pairs {
            assert!((g.norm2(&p.vector) - 1.0).abs() < 1e-12);
        }
        let u = &pairs[0].vector;
        assert!(u[1..u.len() - 1].iter().all(|&x| x > 0.0));
        assert!(pairs.windows(2).all(|w| w[0].value < w[1].value));
    }

    #[test]
    fn lambda_at_zero_respects_bound() {
        let est = lambda_of_alpha(0.0, &small_grid()).unwrap();
        assert!(est.value <= (0.75f64).powf(4.0 / 3.0));
        assert!(est.value > 0.57);
        assert!(est.richardson_diff.abs() < 1e-5);
    }

    #[test]
    fn resolvent_kills_ground_mode() {
        let s = Spectrum::montgomery_discrete(small_grid());
        let u = s.ground(-0.3).unwrap().vector;
        let w = s.regularized_resolvent_apply(-0.3, 0.58, &u).unwrap();
        assert!(s.grid().norm2(&w) < 1e-10);
    }

    #[test]
    fn resolvent_at_exact_eigenvalue() {
        let s = Spectrum::montgomery_discrete(small_grid());
        let ground = s.ground(-0.3).unwrap();
        let g: Vec<f64> = s.grid().nodes().iter().map(|t| (-t * t).exp() * (1.0 + t)).collect();
        let mut g = g;
        let last = g.len() - 1;
        g[0] = 0.0;
        g[last] = 0.0;
        let w = s.regularized_resolvent_apply(-0.3, ground.value, &g).unwrap();
        let grid = s.grid();
        assert!(grid.inner(&w, &ground.vector).abs() < 1e-10);
        // (P - b) w = (1 - pi) g
        let op = s.operator(-0.3).unwrap().op;
        let aw = op.apply(&w[1..last]);
        let c = grid.inner(&g, &ground.vector);
        let res: Vec<f64> = (1..last)
            .map(|i| aw[i - 1] - ground.value * w[i] - (g[i] - c * ground.vector[i]))
            .collect();
        let r = (res.iter().map(|x| x * x).sum::<f64>() * grid.spacing()).sqrt();
        assert!(r < 1e-8, "residual {r}");
    }

    #[test]
    fn lambda_prime_sign_far_right() {
        let s = Spectrum::montgomery(small_grid());
        assert!(s.lambda_prime(2.5).unwrap() > 0.0);
        assert!(s.lambda_prime(-2.5).unwrap() < 0.0);
    }

    #[test]
    fn out_of_range_alpha_is_rejected() {
        let s = Spectrum::montgomery(small_grid());
        assert!(s.lambda(5.0).is_err());
        assert!(s.find_tau0((-1.0, 0.5)).is_err());
    }

    #[test]
    fn z_interval_rejects_levels_below_minimum() {
        let s = Spectrum::montgomery_discrete(small_grid());
        assert!(matches!(s.z_interval(0.5, -0.35, 0.5698), Err(Error::EmptyInterval { .. })));
    }
}
