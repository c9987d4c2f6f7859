use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform symmetric grid on `[-T, T]` carrying the transverse variable `t`.
///
/// Sampled functions live on all `n` nodes; the two end nodes carry the
/// Dirichlet condition and are always zero for the operators built here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    half_width: f64,
    n: usize,
    alpha_range: (f64, f64),
}

impl Grid1D {
    pub const DEFAULT_HALF_WIDTH: f64 = 8.0;
    pub const DEFAULT_POINTS: usize = 4001;
    pub const DEFAULT_ALPHA_RANGE: (f64, f64) = (-3.0, 3.0);
    /// Lower bound on `(T^2/2 - max|alpha|)^2` at the truncation edge.
    pub const POTENTIAL_FLOOR: f64 = 100.0;

    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        Self::with_alpha_range(half_width, n, Self::DEFAULT_ALPHA_RANGE)
    }

    /// Builds a grid and checks the quartic-confinement rule for every
    /// `alpha` in `alpha_range`.
    pub fn with_alpha_range(half_width: f64, n: usize, alpha_range: (f64, f64)) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 points, got {n}")));
        }
        let (lo, hi) = alpha_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidGrid(format!("bad alpha range [{lo}, {hi}]")));
        }
        let grid = Self {
            half_width,
            n,
            alpha_range,
        };
        let worst = lo.abs().max(hi.abs());
        grid.check_confinement(worst)?;
        Ok(grid)
    }

    pub fn check_confinement(&self, alpha_abs: f64) -> Result<()> {
        let edge = self.half_width * self.half_width / 2.0 - alpha_abs;
        if edge <= 0.0 || edge * edge < Self::POTENTIAL_FLOOR {
            return Err(Error::InvalidGrid(format!(
                "T = {} too small for |alpha| = {alpha_abs}: (T^2/2 - |alpha|)^2 = {:.3} < {}",
                self.half_width,
                edge.max(0.0).powi(2),
                Self::POTENTIAL_FLOOR
            )));
        }
        Ok(())
    }

    pub fn contains_alpha(&self, alpha: f64) -> bool {
        alpha >= self.alpha_range.0 && alpha <= self.alpha_range.1
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn alpha_range(&self) -> (f64, f64) {
        self.alpha_range
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        // Symmetric construction keeps t_{n-1-i} = -t_i exactly.
        let h = self.spacing();
        let mid = (self.n - 1) as f64 / 2.0;
        (i as f64 - mid) * h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// The grid with twice as many intervals on the same window.
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * self.n - 1,
            ..self.clone()
        }
    }

    /// Same spacing policy, wider window: `(T + dt, 2n - 1)` style.
    pub fn widened(&self, extra: f64, n: usize) -> Result<Self> {
        Self::with_alpha_range(self.half_width + extra, n, self.alpha_range)
    }

    /// Trapezoid rule over the full grid.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        let inner: f64 = f.iter().sum();
        self.spacing() * (inner - 0.5 * (f[0] + f[self.n - 1]))
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        let h = self.spacing();
        let last = self.n - 1;
        let s: f64 = f.iter().zip(g).map(|(a, b)| a * b).sum();
        h * (s - 0.5 * (f[0] * g[0] + f[last] * g[last]))
    }

    pub fn norm2(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    /// `int f^4 dt`.
    pub fn l4_fourth(&self, f: &[f64]) -> f64 {
        let g: Vec<f64> = f.iter().map(|x| x.powi(4)).collect();
        self.integrate(&g)
    }

    /// `sqrt(||f||^2 + ||f'||^2 + ||t^2 f||^2)` with midpoint differences.
    pub fn b1_norm(&self, f: &[f64]) -> f64 {
        let h = self.spacing();
        let grad: f64 = f.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / h;
        let weighted: Vec<f64> = f
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let t = self.node(i);
                (t * t * v).powi(2) + v * v
            })
            .collect();
        (self.integrate(&weighted) + grad).sqrt()
    }

    /// Linear interpolation of grid samples at an arbitrary `t` (zero outside).
    pub fn interpolate(&self, f: &[f64], t: f64) -> f64 {
        let h = self.spacing();
        let x = (t + self.half_width) / h;
        if x < 0.0 || x > (self.n - 1) as f64 {
            return 0.0;
        }
        let i = (x.floor() as usize).min(self.n - 2);
        let w = x - i as f64;
        f[i] * (1.0 - w) + f[i + 1] * w
    }
}

impl Default for Grid1D {
    fn default() -> Self {
        Self::new(Self::DEFAULT_HALF_WIDTH, Self::DEFAULT_POINTS).expect("default grid is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_symmetric_and_span_window() {
        let g = Grid1D::new(8.0, 4001).unwrap();
        let t = g.nodes();
        assert_eq!(t[0], -8.0);
        assert_eq!(t[4000], 8.0);
        assert_eq!(t[2000], 0.0);
        assert!((g.spacing() * 4000.0 - 16.0).abs() < 1e-12);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        for i in 0..4001 {
            assert_eq!(t[i], -t[4000 - i]);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid1D::new(0.0, 10).is_err());
        assert!(Grid1D::new(8.0, 2).is_err());
        // T = 4: (8 - 3)^2 = 25 < floor
        assert!(Grid1D::new(4.0, 101).is_err());
        assert!(Grid1D::with_alpha_range(5.5, 111, (-1.0, 1.0)).is_ok());
    }

    #[test]
    fn trapezoid_integrates_gaussian() {
        let g = Grid1D::new(8.0, 2001).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|t| (-t * t).exp()).collect();
        assert!((g.integrate(&f) - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }
}
