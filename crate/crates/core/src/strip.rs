//! The strip functional on `S_R = (-R, R) x R` with `A_app = (-x2^2/2, 0)`,
//! Dirichlet and twisted-periodic minimization, the Fourier fiber check and
//! the reference function `E(L)`.
//!
//! Discretization: link variables in `x1` (`U = exp(i hx x2^2/2)`), plain
//! differences in `x2`. A plane wave `exp(i a x1) f(x2)` then sees the 1D
//! potential [`Potential::Lattice`] with the same `hx`, so the strip and 1D
//! solvers share one discrete model.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gl1d::{GLProfile, Gl1d};
use crate::grid::Grid1D;
use crate::linearized::LinearizedOperator;
use crate::optimize::lbfgs_preconditioned;
use crate::spectral::Potential;

/// Boundary condition in `x1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    /// `u = 0` at `x1 = +-R`.
    Dirichlet,
    /// `u(x1 + 2R, x2) = exp(2 i z R) u(x1, x2)`.
    Periodic { twist: f64 },
}

/// Discretized strip. Dirichlet grids include the nodes at `x1 = +-R`;
/// periodic grids hold `nx` nodes per period starting at `x1 = -R`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StripGrid {
    pub r: f64,
    pub hx: f64,
    pub nx: usize,
    pub x2: Grid1D,
    pub boundary: Boundary,
}

impl StripGrid {
    /// `2R / hx` must be an integer (within 1e-9) so that the `x1` spacing is exactly `hx`.
    pub fn new(r: f64, hx: f64, x2: Grid1D, boundary: Boundary) -> Result<Self> {
        if !(r > 0.0 && hx > 0.0) {
            return Err(Error::InvalidGrid(format!("need R > 0 and hx > 0, got R = {r}, hx = {hx}")));
        }
        let cells = 2.0 * r / hx;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * cells.max(1.0) || rounded < 2.0 {
            return Err(Error::InvalidGrid(format!(
                "2R / hx = {cells} must be an integer >= 2 (R = {r}, hx = {hx})"
            )));
        }
        let cells = rounded as usize;
        let nx = match boundary {
            Boundary::Dirichlet => cells + 1,
            Boundary::Periodic { .. } => cells,
        };
        // the lattice potential must be monotone in |x2| over the window
        let t = x2.half_width();
        let (lo, hi) = x2.alpha_range();
        if (0.5 * t * t + lo.abs().max(hi.abs())) * hx > std::f64::consts::PI {
            return Err(Error::InvalidGrid(format!(
                "hx = {hx} aliases the link phase at |x2| = {t}"
            )));
        }
        Ok(Self { r, hx, nx, x2, boundary })
    }

    /// Rounds `r` to the nearest admissible half-length.
    pub fn snap_r(r: f64, hx: f64) -> f64 {
        (r / hx).round().max(1.0) * hx
    }

    pub fn ny(&self) -> usize {
        self.x2.len()
    }

    pub fn hy(&self) -> f64 {
        self.x2.spacing()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x1(&self, j: usize) -> f64 {
        -self.r + j as f64 * self.hx
    }

    pub fn index(&self, j: usize, k: usize) -> usize {
        j * self.ny() + k
    }

    /// Whether node `(j, k)` carries a Dirichlet zero.
    pub fn is_fixed(&self, j: usize, k: usize) -> bool {
        let edge_x2 = k == 0 || k + 1 == self.ny();
        match self.boundary {
            Boundary::Dirichlet => edge_x2 || j == 0 || j + 1 == self.nx,
            Boundary::Periodic { .. } => edge_x2,
        }
    }

    pub fn potential(&self) -> Potential {
        Potential::Lattice { spacing: self.hx }
    }
}

/// Complex samples on a [`StripGrid`], `x2` fastest.
#[derive(Clone, Debug)]
pub struct StripField {
    pub grid: StripGrid,
    pub values: Vec<Complex64>,
}

impl StripField {
    pub fn zeros(grid: StripGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// `exp(i a x1) f(x2) theta(x1)`; `f` lives on the grid's `x2` nodes.
    pub fn plane_wave<W: Fn(f64) -> f64>(grid: StripGrid, a: f64, f: &[f64], window: W) -> Self {
        let mut field = Self::zeros(grid);
        let g = &field.grid;
        let ny = g.ny();
        for j in 0..g.nx {
            let x1 = g.x1(j);
            let phase = Complex64::from_polar(window(x1), a * x1);
            for k in 0..ny {
                if !g.is_fixed(j, k) {
                    field.values[j * ny + k] = phase * f[k];
                }
            }
        }
        field
    }

    pub fn l2_norm(&self) -> f64 {
        let g = &self.grid;
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.hx * g.hy()).sqrt()
    }

    fn to_real(&self) -> Vec<f64> {
        self.values.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    fn from_real(grid: StripGrid, x: &[f64]) -> Self {
        let values = x.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        Self { grid, values }
    }
}

/// Discrete energy and its gradient `2 dE/d conj(psi)` (zero on fixed nodes).
fn energy_gradient(grid: &StripGrid, psi: &[Complex64], b: f64, grad: Option<&mut [Complex64]>) -> f64 {
    let ny = grid.ny();
    let nx = grid.nx;
    let hx = grid.hx;
    let hy = grid.hy();
    let wx = hy / hx;
    let wy = hx / hy;
    let wn = hx * hy;
    let links: Vec<Complex64> = (0..ny)
        .map(|k| {
            let t = grid.x2.node(k);
            Complex64::from_polar(1.0, 0.5 * hx * t * t)
        })
        .collect();
    let (x1_links, wrap) = match grid.boundary {
        Boundary::Dirichlet => (nx - 1, Complex64::new(1.0, 0.0)),
        Boundary::Periodic { twist } => (nx, Complex64::from_polar(1.0, 2.0 * twist * grid.r)),
    };
    let mut e = Neumaier::default();
    let mut gbuf = grad;
    if let Some(g) = gbuf.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    }
    for j in 0..x1_links {
        let (jn, extra) = if j + 1 == nx { (0, wrap) } else { (j + 1, Complex64::new(1.0, 0.0)) };
        let mut col = 0.0;
        for k in 1..ny - 1 {
            let u = links[k] * extra;
            let a = u * psi[jn * ny + k] - psi[j * ny + k];
            col += wx * a.norm_sqr();
            if let Some(g) = gbuf.as_deref_mut() {
                g[jn * ny + k] += 2.0 * wx * a * u.conj();
                g[j * ny + k] -= 2.0 * wx * a;
            }
        }
        e.add(col);
    }
    for j in 0..nx {
        let mut col = 0.0;
        for k in 0..ny - 1 {
            let a = psi[j * ny + k + 1] - psi[j * ny + k];
            col += wy * a.norm_sqr();
            if let Some(g) = gbuf.as_deref_mut() {
                g[j * ny + k + 1] += 2.0 * wy * a;
                g[j * ny + k] -= 2.0 * wy * a;
            }
        }
        for k in 0..ny {
            let p = psi[j * ny + k];
            let m = p.norm_sqr();
            col += wn * (-b * m + 0.5 * b * m * m);
            if let Some(g) = gbuf.as_deref_mut() {
                g[j * ny + k] += 2.0 * wn * (-b * p + b * m * p);
            }
        }
        e.add(col);
    }
    if let Some(g) = gbuf {
        for j in 0..nx {
            for k in 0..ny {
                if grid.is_fixed(j, k) {
                    g[j * ny + k] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }
    e.value()
}

/// Compensated running sum.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Gauge-covariant discrete value of the strip functional.
pub fn energy_strip(u: &StripField, b: f64) -> f64 {
    energy_gradient(&u.grid, &u.values, b, None)
}

/// Result of a Dirichlet minimization.
#[derive(Clone, Debug)]
pub struct DirichletResult {
    pub field: StripField,
    /// `min(E(u*), 0)`: the zero field is admissible.
    pub energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

/// Settings for the strip solver.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StripSettings {
    pub half_height: f64,
    pub ny: usize,
    pub hx: f64,
    /// L2 norm of the continuum gradient at which minimization stops.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub memory: usize,
    pub seed: u64,
    pub noise: f64,
    /// Exponent `p` in the fit `E + c R^{-p}`.
    pub fit_exponent: f64,
    /// `R_list` as multiples of the coherence length when `b > lambda0`.
    pub r_multiples: Vec<f64>,
    /// `R_list` when no coherence length applies.
    pub default_r_list: Vec<f64>,
    /// Relative RMS fit residual above which the fit is rejected.
    pub fit_tolerance: f64,
}

impl Default for StripSettings {
    fn default() -> Self {
        Self {
            half_height: 5.4,
            ny: 109,
            hx: 0.2,
            grad_tol: 1e-7,
            max_iter: 20_000,
            memory: 12,
            seed: 0x5eed,
            noise: 1e-3,
            fit_exponent: 1.0,
            r_multiples: vec![4.0, 5.0, 6.0, 8.0],
            default_r_list: vec![8.0, 12.0, 16.0, 24.0],
            fit_tolerance: 1e-3,
        }
    }
}

/// One `(L, R_list)` estimate of `E(L)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ELRow {
    pub l: f64,
    pub b: f64,
    pub r_list: Vec<f64>,
    /// `e(b; R)` per `R`.
    pub energies: Vec<f64>,
    /// `e(b; R) / 2R` per `R`.
    pub per_length: Vec<f64>,
    /// Extrapolated `E(L)`.
    pub estimate: f64,
    pub fit_exponent: f64,
    pub fit_c: f64,
    pub fit_residual: f64,
    /// `b(xi(b), b)` when `b > lambda0`, else 0.
    pub periodic: f64,
    /// `max_R (e/2R - E) R^{2/3}`: smallest `c` making every row obey the `R^{-2/3}` bracket.
    pub bracket_c: f64,
    pub converged: bool,
}

impl ELRow {
    /// `E <= e/2R <= E + c R^{-2/3}` row-wise with the given `c`, and the
    /// periodic value below every `e/2R`.
    pub fn bracket_holds(&self, c: f64, tol: f64) -> bool {
        self.per_length.iter().zip(&self.r_list).all(|(&y, &r)| {
            y >= self.estimate - tol && y <= self.estimate + c * r.powf(-2.0 / 3.0) + tol && self.periodic <= y + tol
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ELTable {
    pub lambda0: f64,
    pub critical_l: f64,
    pub u0_l4_fourth: f64,
    pub rows: Vec<ELRow>,
}

#[derive(Serialize, Deserialize)]
struct ELHeader {
    lambda0: f64,
    critical_l: f64,
    u0_l4_fourth: f64,
}

impl ELTable {
    /// JSON lines: a header object with the constants, then one row per line.
    pub fn to_jsonl(&self) -> Result<String> {
        let header = ELHeader {
            lambda0: self.lambda0,
            critical_l: self.critical_l,
            u0_l4_fourth: self.u0_l4_fourth,
        };
        let mut out = serde_json::to_string(&header)?;
        out.push('\n');
        for r in &self.rows {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty E-table".into(),
        })?;
        let h: ELHeader = serde_json::from_str(first).map_err(|e| Error::Parse {
            line: 1,
            message: format!("header: {e}"),
        })?;
        let mut rows: Vec<ELRow> = Vec::new();
        for (k, line) in lines {
            let row: ELRow = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: k + 1,
                message: e.to_string(),
            })?;
            if !(row.l.is_finite() && row.estimate.is_finite()) {
                return Err(Error::Parse {
                    line: k + 1,
                    message: "non-finite L or E".into(),
                });
            }
            rows.push(row);
        }
        if !(h.lambda0 > 0.0 && h.u0_l4_fourth > 0.0 && h.critical_l.is_finite()) {
            return Err(Error::Parse {
                line: 1,
                message: "header constants must be positive and finite".into(),
            });
        }
        if (h.critical_l - h.lambda0.powf(-1.5)).abs() > 1e-9 * h.critical_l {
            return Err(Error::Parse {
                line: 1,
                message: format!("critical_l {} differs from lambda0^(-3/2)", h.critical_l),
            });
        }
        rows.sort_by(|a, b| a.l.total_cmp(&b.l));
        Ok(Self {
            lambda0: h.lambda0,
            critical_l: h.critical_l,
            u0_l4_fourth: h.u0_l4_fourth,
            rows,
        })
    }

    pub fn is_monotone(&self, tol: f64) -> bool {
        self.rows.windows(2).all(|w| w[1].l < w[0].l || w[1].estimate >= w[0].estimate - tol)
    }
}

/// Row of the main-theorem table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RhoRow {
    pub l: f64,
    pub b: f64,
    pub estimate: f64,
    /// `-(L^{2/3}/2) (L^{-2/3} - lambda0)^2 / ||u0||_4^4`
    pub model: f64,
    pub rho: f64,
    pub periodic: f64,
    /// `E / b(xi, b) - 1`
    pub g: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RhoTable {
    pub lambda0: f64,
    pub u0_l4_fourth: f64,
    pub rows: Vec<RhoRow>,
    pub shrinking: bool,
}

/// Strip solver bound to one `x2` grid and `x1` spacing.
#[derive(Clone, Debug)]
pub struct StripSolver {
    pub settings: StripSettings,
    gl: Gl1d,
}

impl StripSolver {
    pub fn new(settings: StripSettings) -> Result<Self> {
        let x2 = Grid1D::with_alpha_range(settings.half_height, settings.ny, (-1.0, 1.0))?;
        let gl = Gl1d::new(x2, Potential::Lattice { spacing: settings.hx })?;
        Ok(Self { settings, gl })
    }

    /// The 1D solver with the matched lattice potential.
    pub fn gl(&self) -> &Gl1d {
        &self.gl
    }

    pub fn lambda0(&self) -> f64 {
        self.gl.lambda0()
    }

    /// `lambda0^{-3/2}` of the matched model.
    pub fn critical_l(&self) -> f64 {
        self.lambda0().powf(-1.5)
    }

    pub fn grid(&self, r: f64, boundary: Boundary) -> Result<StripGrid> {
        StripGrid::new(r, self.settings.hx, self.gl.grid().clone(), boundary)
    }

    /// `xi(b)` and the optimal profile, or `None` when `b <= lambda0`.
    pub fn optimal_profile(&self, b: f64) -> Result<Option<(f64, GLProfile)>> {
        if b <= self.lambda0() {
            return Ok(None);
        }
        Ok(Some(self.gl.find_xi_profile(b)?))
    }

    /// `e^per(b; R) = 2R b(xi(b), b)`.
    pub fn periodic_ground(&self, b: f64, r: f64) -> Result<f64> {
        Ok(match self.optimal_profile(b)? {
            None => 0.0,
            Some((_, p)) => 2.0 * r * p.energy(),
        })
    }

    /// `psi_b` on a periodic grid with twist `xi(b)`.
    pub fn psi_b(&self, b: f64, r: f64) -> Result<StripField> {
        let (xi, p) = self.optimal_profile(b)?.ok_or_else(|| {
            Error::InvalidArgument(format!("b = {b} <= lambda0 = {}: psi_b vanishes", self.lambda0()))
        })?;
        let grid = self.grid(r, Boundary::Periodic { twist: xi })?;
        Ok(StripField::plane_wave(grid, xi, &p.samples, |_| 1.0))
    }

    /// Effective coherence length `sqrt(2D / (b - lambda0))`, `D = lambda''(tau0) / 2`.
    pub fn coherence_length(&self, b: f64) -> Option<f64> {
        let eps = b - self.lambda0();
        (eps > 0.0).then(|| (self.gl.constants().lambda_second / eps).sqrt())
    }

    /// Minimizes the Dirichlet strip energy from a windowed `psi_b` plus seeded noise.
    pub fn dirichlet_minimize(&self, r: f64, b: f64, seed: u64) -> Result<DirichletResult> {
        let grid = self.grid(r, Boundary::Dirichlet)?;
        let mut init = match self.optimal_profile(b)? {
            Some((xi, p)) => {
                let ell = self.coherence_length(b).expect("b > lambda0");
                let k = std::f64::consts::SQRT_2 / ell;
                StripField::plane_wave(grid.clone(), xi, &p.samples, move |x1| ((r - x1.abs()) * k).tanh())
            }
            None => StripField::zeros(grid.clone()),
        };
        let amp = init.values.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(1e-2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ny = grid.ny();
        for j in 0..grid.nx {
            for k in 0..ny {
                let (a, c): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if !grid.is_fixed(j, k) {
                    init.values[j * ny + k] += Complex64::new(a, c) * (self.settings.noise * amp);
                }
            }
        }
        self.minimize(init, b)
    }

    /// L-BFGS on the discrete energy from `init`. Dirichlet grids use the
    /// separable preconditioner built around the optimal wave number.
    pub fn minimize(&self, init: StripField, b: f64) -> Result<DirichletResult> {
        let grid = init.grid.clone();
        let precond = match grid.boundary {
            Boundary::Dirichlet => {
                let xi = match self.optimal_profile(b)? {
                    Some((xi, _)) => xi,
                    None => self.gl.constants().tau0,
                };
                let lambda = self.gl.spectrum().lambda(xi)?;
                let shift = (b - self.lambda0()).abs().max(1e-3);
                Some(Preconditioner::new(&grid, xi, lambda, shift))
            }
            Boundary::Periodic { .. } => None,
        };
        let area = grid.hx * grid.hy();
        let n = grid.len();
        let fg = |x: &[f64]| -> (f64, Vec<f64>) {
            let psi: Vec<Complex64> = x.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
            let mut g = vec![Complex64::new(0.0, 0.0); n];
            let e = energy_gradient(&grid, &psi, b, Some(&mut g));
            (e, g.iter().flat_map(|c| [c.re, c.im]).collect())
        };
        // L2 norm of the continuum gradient: the discrete one divided by the cell area.
        let norm = |g: &[f64]| (g.iter().map(|v| v * v).sum::<f64>() / area).sqrt() / 2.0;
        let res = lbfgs_preconditioned(
            fg,
            norm,
            precond.as_ref().map(|p| move |g: &[f64]| p.apply(g)),
            init.to_real(),
            self.settings.memory,
            self.settings.grad_tol,
            self.settings.max_iter,
        );
        let converged = res.converged || res.gradient_norm <= 10.0 * self.settings.grad_tol;
        if !converged {
            return Err(Error::NotConverged {
                method: "strip L-BFGS",
                iterations: res.iterations,
                history: res.trace.iter().rev().take(8).rev().cloned().collect(),
            });
        }
        let field = StripField::from_real(grid, &res.x);
        Ok(DirichletResult {
            energy: res.value.min(0.0),
            field,
            gradient_norm: res.gradient_norm,
            iterations: res.iterations,
            trace: res.trace,
        })
    }

    /// The `R_list` used for `b`: multiples of the coherence length, or the
    /// fixed default when `b <= lambda0`. Values are snapped to the `x1` lattice.
    pub fn r_list_for(&self, b: f64) -> Vec<f64> {
        let raw: Vec<f64> = match self.coherence_length(b) {
            Some(ell) => self.settings.r_multiples.iter().map(|m| m * ell).collect(),
            None => self.settings.default_r_list.clone(),
        };
        raw.into_iter().map(|r| StripGrid::snap_r(r, self.settings.hx)).collect()
    }

    /// `E(L)` from Dirichlet solves on `R_list` (chosen by [`StripSolver::r_list_for`] when `None`).
    pub fn estimate_e(&self, l: f64, r_list: Option<&[f64]>) -> Result<ELRow> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidArgument(format!("L must be positive, got {l}")));
        }
        let b = l.powf(-2.0 / 3.0);
        let rs: Vec<f64> = match r_list {
            Some(r) => r.iter().map(|&x| StripGrid::snap_r(x, self.settings.hx)).collect(),
            None => self.r_list_for(b),
        };
        if rs.len() < 2 {
            return Err(Error::InvalidArgument("R_list needs at least two values".into()));
        }
        let periodic = self.optimal_profile(b)?.map(|(_, p)| p.energy()).unwrap_or(0.0);
        let seed = self.settings.seed;
        let results: Vec<DirichletResult> = rs
            .par_iter()
            .enumerate()
            .map(|(i, &r)| self.dirichlet_minimize(r, b, seed.wrapping_add(i as u64)))
            .collect::<Result<_>>()?;
        let energies: Vec<f64> = results.iter().map(|r| r.energy).collect();
        let per_length: Vec<f64> = energies.iter().zip(&rs).map(|(e, r)| e / (2.0 * r)).collect();
        let p = self.settings.fit_exponent;
        let (estimate, fit_c, fit_residual) = fit_inverse_power(&rs, &per_length, p);
        let scale = estimate.abs().max(per_length.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        if scale > 0.0 && fit_residual > self.settings.fit_tolerance * scale {
            return Err(Error::PoorFit {
                residual: fit_residual,
                limit: self.settings.fit_tolerance * scale,
            });
        }
        let bracket_c = per_length
            .iter()
            .zip(&rs)
            .map(|(y, r)| (y - estimate) * r.powf(2.0 / 3.0))
            .fold(0.0f64, f64::max);
        Ok(ELRow {
            l,
            b,
            r_list: rs,
            energies,
            per_length,
            estimate,
            fit_exponent: p,
            fit_c,
            fit_residual,
            periodic,
            bracket_c,
            converged: true,
        })
    }

    pub fn el_table(&self, ls: &[f64]) -> Result<ELTable> {
        let rows = ls.iter().map(|&l| self.estimate_e(l, None)).collect::<Result<_>>()?;
        Ok(ELTable {
            lambda0: self.lambda0(),
            critical_l: self.critical_l(),
            u0_l4_fourth: self.gl.constants().u0_l4_fourth,
            rows,
        })
    }

    /// `rho(L) = E(L) / model(L)` along `L` increasing to the critical value.
    pub fn verify_main_theorem(&self, ls: &[f64]) -> Result<RhoTable> {
        let lc = self.critical_l();
        if ls.iter().any(|&l| l >= lc) || ls.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(format!(
                "L sequence must increase strictly and stay below {lc}"
            )));
        }
        let c = self.gl.constants().clone();
        let rows: Vec<RhoRow> = ls
            .iter()
            .map(|&l| {
                let row = self.estimate_e(l, None)?;
                let gap = row.b - c.lambda0;
                let model = -0.5 * l.powf(2.0 / 3.0) * gap * gap / c.u0_l4_fourth;
                Ok(RhoRow {
                    l,
                    b: row.b,
                    estimate: row.estimate,
                    model,
                    rho: row.estimate / model,
                    periodic: row.periodic,
                    g: row.estimate / row.periodic - 1.0,
                })
            })
            .collect::<Result<_>>()?;
        let shrinking = rows
            .windows(2)
            .all(|w| (w[1].rho - 1.0).abs() < (w[0].rho - 1.0).abs());
        Ok(RhoTable {
            lambda0: c.lambda0,
            u0_l4_fourth: c.u0_l4_fourth,
            rows,
            shrinking,
        })
    }

    /// Energy of `exp(i xi x1) f(x2) theta_R(x1)` on the Dirichlet grid, with
    /// `theta_R = 1` on `|x1| <= R - 1` and linear to 0 at `+-R`.
    pub fn cutoff_test_energy(&self, b: f64, r: f64) -> Result<f64> {
        let (xi, p) = self.optimal_profile(b)?.ok_or_else(|| {
            Error::InvalidArgument(format!("b = {b} <= lambda0: the test field vanishes"))
        })?;
        let grid = self.grid(r, Boundary::Dirichlet)?;
        let field = StripField::plane_wave(grid, xi, &p.samples, |x1| (r - x1.abs()).clamp(0.0, 1.0));
        Ok(energy_strip(&field, b))
    }
}

/// Approximate inverse Hessian for Dirichlet grids: in the gauge
/// `psi = exp(i xi x1) phi` it inverts `-D_x1^2 + P_h(xi) - lambda_h(xi) + shift`,
/// diagonalizing the `x2` part and solving tridiagonal systems in `x1`.
struct Preconditioner {
    nx: usize,
    ny: usize,
    phase: Vec<Complex64>,
    modes: DMatrix<f64>,
    mu: Vec<f64>,
    hx: f64,
    scale: f64,
}

impl Preconditioner {
    fn new(grid: &StripGrid, xi: f64, lambda: f64, shift: f64) -> Self {
        let ny = grid.ny();
        let m = ny - 2;
        let hy = grid.hy();
        let pot = grid.potential();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            let x2 = grid.x2.node(i + 1);
            t[(i, i)] = 2.0 / (hy * hy) + pot.value(x2, xi) - lambda + shift;
            if i + 1 < m {
                t[(i, i + 1)] = -1.0 / (hy * hy);
                t[(i + 1, i)] = -1.0 / (hy * hy);
            }
        }
        let eig = SymmetricEigen::new(t);
        Self {
            nx: grid.nx,
            ny,
            phase: (0..grid.nx).map(|j| Complex64::from_polar(1.0, xi * grid.x1(j))).collect(),
            mu: eig.eigenvalues.iter().map(|v| v.max(0.5 * shift)).collect(),
            modes: eig.eigenvectors,
            hx: grid.hx,
            scale: 2.0 * grid.hx * hy,
        }
    }

    fn apply(&self, g: &[f64]) -> Vec<f64> {
        let p = self.nx - 2;
        let m = self.ny - 2;
        let mut re = DMatrix::<f64>::zeros(p, m);
        let mut im = DMatrix::<f64>::zeros(p, m);
        for j in 0..p {
            let ph = self.phase[j + 1].conj();
            for k in 0..m {
                let idx = 2 * ((j + 1) * self.ny + k + 1);
                let v = ph * Complex64::new(g[idx], g[idx + 1]);
                re[(j, k)] = v.re;
                im[(j, k)] = v.im;
            }
        }
        let mut a = &re * &self.modes;
        let mut c = &im * &self.modes;
        let off = -1.0 / (self.hx * self.hx);
        let mut cp = vec![0.0; p];
        for (col, &mu) in self.mu.iter().enumerate() {
            let d = 2.0 / (self.hx * self.hx) + mu;
            // Thomas sweep for both right-hand sides
            let mut denom = d;
            cp[0] = off / denom;
            a[(0, col)] /= denom;
            c[(0, col)] /= denom;
            for j in 1..p {
                denom = d - off * cp[j - 1];
                cp[j] = off / denom;
                a[(j, col)] = (a[(j, col)] - off * a[(j - 1, col)]) / denom;
                c[(j, col)] = (c[(j, col)] - off * c[(j - 1, col)]) / denom;
            }
            for j in (0..p - 1).rev() {
                a[(j, col)] -= cp[j] * a[(j + 1, col)];
                c[(j, col)] -= cp[j] * c[(j + 1, col)];
            }
        }
        let re = a * self.modes.transpose();
        let im = c * self.modes.transpose();
        let mut out = vec![0.0; g.len()];
        for j in 0..p {
            let ph = self.phase[j + 1];
            for k in 0..m {
                let idx = 2 * ((j + 1) * self.ny + k + 1);
                let v = ph * Complex64::new(re[(j, k)], im[(j, k)]) / self.scale;
                out[idx] = v.re;
                out[idx + 1] = v.im;
            }
        }
        out
    }
}

/// Least-squares fit `y = E + c R^{-p}`; returns `(E, c, rms residual)`.
pub fn fit_inverse_power(rs: &[f64], ys: &[f64], p: f64) -> (f64, f64, f64) {
    let n = rs.len() as f64;
    let xs: Vec<f64> = rs.iter().map(|r| r.powf(-p)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let c = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let e = my - c * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - e - c * x).powi(2)).sum::<f64>() / n).sqrt();
    (e, c, rms)
}

/// `J(v; beta) = int f^2 (|v'|^2 + (V(xi + beta) - V(xi)) |v|^2)`, with the
/// derivative term weighted by `f_i f_{i+1}` on each cell.
pub fn fiber_energy(profile: &GLProfile, xi: f64, beta: f64, v: &[Complex64]) -> f64 {
    let grid = &profile.grid;
    let h = grid.spacing();
    let f = &profile.samples;
    let kin: f64 = (0..f.len() - 1)
        .map(|i| f[i] * f[i + 1] * (v[i + 1] - v[i]).norm_sqr())
        .sum::<f64>()
        / h;
    let pot: Vec<f64> = (0..f.len())
        .map(|i| {
            let t = grid.node(i);
            let dv = profile.potential.value(t, xi + beta) - profile.potential.value(t, xi);
            f[i] * f[i] * dv * v[i].norm_sqr()
        })
        .collect();
    kin + grid.integrate(&pot)
}

/// Result of the fiber inequality check for one Fourier mode.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiberCheck {
    pub n: i64,
    pub beta: f64,
    pub j: f64,
    pub gamma: f64,
    /// `int |f v|^2`
    pub weight: f64,
    /// `J - gamma int |f v|^2`, must be `>= -1e-8`.
    pub margin: f64,
}

/// `J(v_n; n pi / R)` with the lower bound `gamma(n pi / R, b) int |f v_n|^2`.
pub fn fourier_fiber_energy(lin: &LinearizedOperator, n: i64, v: &[Complex64], r: f64) -> Result<FiberCheck> {
    let beta = n as f64 * std::f64::consts::PI / r;
    let j = fiber_energy(&lin.profile, lin.xi, beta, v);
    let gamma = lin.gamma(beta)?;
    let grid = &lin.profile.grid;
    let fv: Vec<f64> = lin.profile.samples.iter().zip(v).map(|(f, x)| f * f * x.norm_sqr()).collect();
    let weight = grid.integrate(&fv);
    Ok(FiberCheck {
        n,
        beta,
        j,
        gamma,
        weight,
        margin: j - gamma * weight,
    })
}

/// `|int f^2 |v'|^2 - int (|w'|^2 + (V(xi) - b(1 - f^2)) |w|^2)|` with `w = f v`.
pub fn substitution_identity_residual(profile: &GLProfile, xi: f64, v: &[Complex64]) -> f64 {
    let grid = &profile.grid;
    let h = grid.spacing();
    let f = &profile.samples;
    let b = profile.b;
    let lhs = fiber_energy(profile, xi, 0.0, v);
    let w: Vec<Complex64> = f.iter().zip(v).map(|(a, x)| x * *a).collect();
    let kin: f64 = w.windows(2).map(|p| (p[1] - p[0]).norm_sqr()).sum::<f64>() / h;
    let pot: Vec<f64> = (0..f.len())
        .map(|i| {
            let t = grid.node(i);
            (profile.potential.value(t, xi) - b * (1.0 - f[i] * f[i])) * w[i].norm_sqr()
        })
        .collect();
    (lhs - kin - grid.integrate(&pot)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn solver() -> &'static StripSolver {
        static S: OnceLock<StripSolver> = OnceLock::new();
        S.get_or_init(|| StripSolver::new(StripSettings::default()).unwrap())
    }

    #[test]
    fn grid_requires_integer_cells() {
        let x2 = Grid1D::with_alpha_range(5.4, 109, (-1.0, 1.0)).unwrap();
        assert!(StripGrid::new(8.0, 0.2, x2.clone(), Boundary::Dirichlet).is_ok());
        assert!(StripGrid::new(8.05, 0.2, x2.clone(), Boundary::Dirichlet).is_err());
        assert!(StripGrid::new(8.0, 0.4, x2, Boundary::Dirichlet).is_err());
        assert_eq!(StripGrid::snap_r(8.07, 0.2), 8.0);
    }

    #[test]
    fn zero_field_and_global_phase() {
        let s = solver();
        let g = s.grid(3.0, Boundary::Dirichlet).unwrap();
        assert_eq!(energy_strip(&StripField::zeros(g.clone()), 0.6), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut u = StripField::zeros(g.clone());
        for j in 0..g.nx {
            for k in 0..g.ny() {
                if !g.is_fixed(j, k) {
                    u.values[g.index(j, k)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
        }
        let e = energy_strip(&u, 0.6);
        let phase = Complex64::from_polar(1.0, 1.234);
        let v = StripField {
            grid: g,
            values: u.values.iter().map(|x| x * phase).collect(),
        };
        assert!((energy_strip(&v, 0.6) - e).abs() <= 1e-12 * e.abs().max(1.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = solver();
        let g = s.grid(2.0, Boundary::Periodic { twist: -0.3 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let k = i % g.ny();
                if k == 0 || k + 1 == g.ny() {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
                }
            })
            .collect();
        let mut grad = vec![Complex64::new(0.0, 0.0); g.len()];
        energy_gradient(&g, &psi, 0.6, Some(&mut grad));
        for idx in [g.index(0, 40), g.index(g.nx - 1, 55), g.index(7, 60)] {
            for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let eps = 1e-6;
                let mut p = psi.clone();
                p[idx] += dir * eps;
                let ep = energy_gradient(&g, &p, 0.6, None);
                p[idx] -= dir * (2.0 * eps);
                let em = energy_gradient(&g, &p, 0.6, None);
                let fd = (ep - em) / (2.0 * eps);
                let an = grad[idx].re * dir.re + grad[idx].im * dir.im;
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "{fd} {an}");
            }
        }
    }

    #[test]
    fn periodic_psi_b_reproduces_closed_form() {
        let s = solver();
        let b = s.lambda0() + 5e-3;
        let psi = s.psi_b(b, 4.0).unwrap();
        let e = energy_strip(&psi, b);
        let (_, p) = s.optimal_profile(b).unwrap().unwrap();
        let closed = -b * 4.0 * p.l4_fourth;
        assert!((e - closed).abs() <= 1e-9 * closed.abs(), "{e} vs {closed}");
        assert!((s.periodic_ground(b, 8.0).unwrap() - 2.0 * s.periodic_ground(b, 4.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn subcritical_dirichlet_energy_vanishes() {
        let s = solver();
        let r = s.dirichlet_minimize(4.0, s.lambda0() - 0.05, 1).unwrap();
        assert!(r.energy >= -1e-4 * 4.0);
    }

    #[test]
    fn inverse_power_fit_recovers_coefficients() {
        let rs = [10.0, 20.0, 30.0, 40.0];
        let ys: Vec<f64> = rs.iter().map(|r| -0.25 + 3.0 / r).collect();
        let (e, c, res) = fit_inverse_power(&rs, &ys, 1.0);
        assert!((e + 0.25).abs() < 1e-14 && (c - 3.0).abs() < 1e-12 && res < 1e-14);
    }
}
