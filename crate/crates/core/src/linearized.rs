//! Lowest eigenvalue `gamma(beta, b)` of the linearization
//! `-d^2/dt^2 + V(t, xi(b) + beta) - b (1 - f^2)` around the optimal profile.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gl1d::{GLProfile, Gl1d};
use crate::spectral::{embed, SchrodingerOperator};

/// Default scan: 201 points on `[-1, 1]`.
pub const DEFAULT_BETA_RANGE: (f64, f64) = (-1.0, 1.0);
pub const DEFAULT_BETA_STEPS: usize = 201;

/// `Q_{beta,b}` with the profile at `(xi(b), b)` frozen.
#[derive(Clone, Debug)]
pub struct LinearizedOperator {
    pub b: f64,
    pub xi: f64,
    pub profile: GLProfile,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GammaCurve {
    pub b: f64,
    pub xi: f64,
    pub betas: Vec<f64>,
    pub values: Vec<f64>,
    pub min_beta: f64,
    pub min_value: f64,
}

impl LinearizedOperator {
    /// Solves for `xi(b)` and the profile on the solver's grid.
    pub fn new(gl: &Gl1d, b: f64) -> Result<Self> {
        let (xi, profile) = gl.find_xi_profile(b)?;
        Ok(Self { b, xi, profile })
    }

    fn operator(&self, beta: f64) -> Result<SchrodingerOperator> {
        let grid = &self.profile.grid;
        let alpha = self.xi + beta;
        if !grid.contains_alpha(alpha) {
            return Err(Error::InvalidArgument(format!(
                "xi + beta = {alpha} outside the grid's alpha range {:?}",
                grid.alpha_range()
            )));
        }
        grid.check_confinement(alpha.abs())?;
        let n = grid.len();
        let pot = self.profile.potential;
        let f = &self.profile.samples;
        let v = (1..n - 1)
            .map(|i| pot.value(grid.node(i), alpha) - self.b * (1.0 - f[i] * f[i]))
            .collect();
        Ok(SchrodingerOperator::new(grid.spacing(), v))
    }

    /// Lowest eigenvalue and its normalized eigenfunction (full grid).
    pub fn ground_state(&self, beta: f64) -> Result<(f64, Vec<f64>)> {
        let (value, v) = self.operator(beta)?.lowest(1)?.remove(0);
        Ok((value, embed(&v)))
    }

    pub fn gamma(&self, beta: f64) -> Result<f64> {
        Ok(self.ground_state(beta)?.0)
    }

    /// `(gamma_beta(0), gamma_betabeta(0))`. The second difference starts at step
    /// `1e-2` and halves until two consecutive values agree within 10%.
    pub fn derivatives_at_zero(&self) -> Result<(f64, f64)> {
        let g0 = self.gamma(0.0)?;
        let s1 = 1e-4;
        let first = (self.gamma(s1)? - self.gamma(-s1)?) / (2.0 * s1);
        if first.abs() > 1e-5 {
            return Err(Error::InvalidArgument(format!(
                "gamma_beta(0) = {first:.3e} is not zero within 1e-5"
            )));
        }
        let second = |s: f64| -> Result<f64> { Ok((self.gamma(s)? + self.gamma(-s)? - 2.0 * g0) / (s * s)) };
        let mut step = 1e-2;
        let mut current = second(step)?;
        let mut worst = f64::INFINITY;
        for _ in 0..3 {
            let half = second(0.5 * step)?;
            let rel = (current - half).abs() / half.abs().max(f64::MIN_POSITIVE);
            if rel <= 0.1 {
                return Ok((first, current));
            }
            worst = worst.min(rel);
            step *= 0.5;
            current = half;
        }
        Err(Error::StepHalving {
            what: "gamma''",
            relative: worst,
            limit: 0.1,
        })
    }

    /// Samples `gamma` over sorted `betas`; the minimum must be `>= -1e-6` and
    /// sit within one scan step of `beta = 0`.
    pub fn scan(&self, betas: &[f64]) -> Result<GammaCurve> {
        if betas.is_empty() || betas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("betas must be non-empty and strictly increasing".into()));
        }
        let values: Vec<f64> = betas.par_iter().map(|&x| self.gamma(x)).collect::<Result<_>>()?;
        let (k, &min_value) = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        let min_beta = betas[k];
        let step = betas
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0f64, f64::max);
        if min_value < -1e-6 {
            return Err(Error::InvalidArgument(format!(
                "gamma({min_beta}) = {min_value:.3e} is below -1e-6"
            )));
        }
        if min_beta.abs() > step * (1.0 + 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "minimum of gamma at beta = {min_beta}, more than one step ({step}) from 0"
            )));
        }
        Ok(GammaCurve {
            b: self.b,
            xi: self.xi,
            betas: betas.to_vec(),
            values,
            min_beta,
            min_value,
        })
    }
}

/// Evenly spaced betas.
pub fn beta_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    let steps = steps.max(2);
    (0..steps)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
            // snap the center so beta = 0 is sampled exactly on symmetric ranges
            if x.abs() < 1e-14 * (hi - lo) {
                0.0
            } else {
                x
            }
        })
        .collect()
}

pub fn gamma(gl: &Gl1d, beta: f64, b: f64) -> Result<f64> {
    LinearizedOperator::new(gl, b)?.gamma(beta)
}

pub fn gamma_derivatives_at_zero(gl: &Gl1d, b: f64) -> Result<(f64, f64)> {
    LinearizedOperator::new(gl, b)?.derivatives_at_zero()
}

pub fn gamma_scan(gl: &Gl1d, b: f64, betas: &[f64]) -> Result<GammaCurve> {
    LinearizedOperator::new(gl, b)?.scan(betas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use std::sync::OnceLock;

    fn setup() -> &'static (Gl1d, LinearizedOperator) {
        static S: OnceLock<(Gl1d, LinearizedOperator)> = OnceLock::new();
        S.get_or_init(|| {
            let gl = Gl1d::montgomery(Grid1D::new(8.0, 2001).unwrap()).unwrap();
            let lin = LinearizedOperator::new(&gl, gl.lambda0() + 1e-3).unwrap();
            (gl, lin)
        })
    }

    #[test]
    fn gamma_vanishes_at_zero_with_profile_ground_state() {
        let (_, lin) = setup();
        let (g0, w) = lin.ground_state(0.0).unwrap();
        assert!(g0.abs() < 1e-6);
        let grid = &lin.profile.grid;
        let nf = lin.profile.l2_norm;
        let d: Vec<f64> = w.iter().zip(&lin.profile.samples).map(|(a, f)| a - f / nf).collect();
        assert!(grid.norm2(&d) < 1e-6);
    }

    #[test]
    fn gamma_is_sandwiched_by_shifted_lambda() {
        let (gl, lin) = setup();
        for beta in [-0.7, -0.2, 0.1, 0.5] {
            let g = lin.gamma(beta).unwrap();
            let l = gl.spectrum().lambda(lin.xi + beta).unwrap() - lin.b;
            assert!(g >= l - 1e-8);
            assert!(g <= l + lin.profile.sup_norm.powi(2) + 1e-8);
        }
        assert!(lin.gamma(3.0).unwrap() > 0.1);
    }

    #[test]
    fn curvature_matches_lambda_second() {
        let (gl, lin) = setup();
        let (first, second) = lin.derivatives_at_zero().unwrap();
        assert!(first.abs() <= 1e-5);
        let l2 = gl.constants().lambda_second;
        assert!((second - l2).abs() <= 0.1 * l2);
    }

    #[test]
    fn beta_grid_hits_zero() {
        let b = beta_grid(-1.0, 1.0, 201);
        assert_eq!(b[100], 0.0);
        assert_eq!(b.len(), 201);
    }
}
