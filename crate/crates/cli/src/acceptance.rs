//! Acceptance checks, one or more per criterion. Used by `glref all` and by the
//! `acceptance` test target.
//!
//! Two literal checks disagree with the underlying analysis and are flagged
//! `literal_defect`; each is paired with a corrected companion check.

use std::time::Instant;

use anyhow::Result;
use serde::Serialize;

use glref::domain::{
    classify_assumption, consistency_with_leading, disk_covering, extract_zero_set, near_critical_energy, Builtin,
    Classification, EReference, FieldProfile, Omega, QUADRATURE_RTOL,
};
use glref::gl1d::{verify_resolvent_identities, Gl1d, RatioTable};
use glref::linearized::{beta_grid, LinearizedOperator};
use glref::spectral::{Potential, Spectrum};
use glref::strip::{energy_strip, ELTable, RhoTable, StripSettings, StripSolver};
use glref::Grid1D;

use crate::config::RunConfig;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub id: String,
    pub criterion: u8,
    pub name: String,
    pub passed: bool,
    pub observed: String,
    pub expected: String,
    /// Set when the literal criterion contradicts the analysis; the value says why.
    pub literal_defect: Option<String>,
    /// Wall-clock seconds; kept out of the JSON report so artifacts stay reproducible.
    #[serde(skip)]
    pub seconds: Option<f64>,
}

impl Check {
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!(
            "{status} [{:>3}] {}: observed {}; expected {}",
            self.id, self.name, self.observed, self.expected
        );
        if let Some(t) = self.seconds {
            s.push_str(&format!(" ({t:.1} s)"));
        }
        if let Some(d) = &self.literal_defect {
            s.push_str(&format!(" [literal defect: {d}]"));
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoCaseRow {
    pub field: String,
    pub classification: Classification,
    pub c0: f64,
    pub gamma: f64,
    pub gamma_len: f64,
    pub rho: f64,
    pub integral: f64,
    pub gamma_kappa_len: f64,
    pub energy: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
    pub ratio_table_1d: Option<RatioTable>,
    pub main_theorem_table: Option<RhoTable>,
    pub el_table: Option<ELTable>,
    pub two_case_table: Vec<TwoCaseRow>,
}

impl Report {
    /// Every check passes except the flagged literal ones.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.literal_defect.is_some())
    }
}

struct Sink<'a> {
    report: Report,
    log: &'a mut dyn FnMut(&str),
}

impl Sink<'_> {
    fn push(&mut self, c: Check) {
        (self.log)(&c.line());
        self.report.checks.push(c);
    }

    fn make(id: &str, name: &str, passed: bool, observed: String, expected: &str) -> Check {
        let criterion = id.trim_end_matches(|c: char| c.is_ascii_alphabetic() || c == '!').parse().unwrap_or(0);
        Check {
            id: id.into(),
            criterion,
            name: name.into(),
            passed,
            observed,
            expected: expected.into(),
            literal_defect: None,
            seconds: None,
        }
    }

    fn check(&mut self, id: &str, name: &str, passed: bool, observed: String, expected: &str) {
        self.push(Self::make(id, name, passed, observed, expected));
    }

    fn timed(&mut self, id: &str, name: &str, seconds: f64, budget: f64) {
        let ok = seconds < budget;
        let observed = if ok { "within budget" } else { "over budget" };
        let mut c = Self::make(id, name, ok, observed.into(), &format!("< {budget} s"));
        c.seconds = Some(seconds);
        self.push(c);
    }

    fn defect(&mut self, id: &str, name: &str, passed: bool, observed: String, expected: &str, why: &str) {
        let mut c = Self::make(id, name, passed, observed, expected);
        c.literal_defect = Some(why.into());
        self.push(c);
    }

    /// Runs one criterion block; an error becomes a failed check.
    fn block(&mut self, criterion: u8, f: impl FnOnce(&mut Self) -> Result<()>) {
        if let Err(e) = f(self) {
            self.check(&format!("{criterion}!"), "numerical failure", false, format!("{e:#}"), "no error");
        }
    }
}

fn sci(v: &[f64], digits: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.digits$e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Runs every criterion, logging one line per check as it completes.
pub fn run(cfg: &RunConfig, log: &mut dyn FnMut(&str)) -> Result<Report> {
    let mut s = Sink {
        report: Report::default(),
        log,
    };
    let mut spectrum_state: Option<(Spectrum, f64, f64)> = None;
    s.block(1, |s| {
        let t = Instant::now();
        let spectrum = Spectrum::new(cfg.spectral_grid()?, Potential::Montgomery, cfg.accuracy()?);
        let c = spectrum.ground_constants(cfg.tau0_bracket()?)?;
        let elapsed = t.elapsed().as_secs_f64();
        s.check("1a", "lambda0 near 0.57", (c.lambda0 - 0.57).abs() <= 0.01, format!("{:.10}", c.lambda0), "|lambda0 - 0.57| <= 0.01");
        s.timed("1b", "find_tau0 runtime", elapsed, 10.0);
        let l0 = spectrum.lambda(0.0)?;
        let ub = 0.75f64.powf(4.0 / 3.0);
        s.check(
            "1c",
            "lambda0 < lambda(0) < (3/4)^(4/3)",
            c.lambda0 < l0 && l0 < ub,
            format!("{:.10} < {l0:.10} < {ub:.10}", c.lambda0),
            "strict inequalities",
        );
        spectrum_state = Some((spectrum, c.tau0, elapsed));
        Ok(())
    });

    s.block(2, |s| {
        let (spectrum, tau0, before) = spectrum_state.as_ref().ok_or_else(|| anyhow::anyhow!("criterion 1 failed"))?;
        let t = Instant::now();
        let lp = spectrum.lambda_prime(*tau0)?;
        s.check("2a", "lambda'(tau0) = 0", lp.abs() <= 1e-5, format!("{lp:.3e}"), "|lambda'| <= 1e-5");
        let l2 = spectrum.lambda_second_derivative(*tau0)?;
        s.check("2b", "lambda''(tau0) > 0", l2 > 0.0, format!("{l2:.10}"), "> 0");
        s.check("2c", "tau0 < 0", *tau0 < 0.0, format!("{tau0:.10}"), "< 0");
        let h = 1e-4;
        let mut worst = 0.0f64;
        for k in 0..20 {
            let a = -1.5 + 0.1 * k as f64;
            let fh = spectrum.lambda_prime(a)?;
            let fd = (spectrum.lambda(a + h)? - spectrum.lambda(a - h)?) / (2.0 * h);
            worst = worst.max(rel(fh, fd));
        }
        s.check("2d", "Feynman-Hellmann vs finite differences on 20 points", worst <= 1e-4, format!("{worst:.3e}"), "<= 1e-4 relative");
        s.timed("2e", "spectral curve runtime", before + t.elapsed().as_secs_f64(), 60.0);
        Ok(())
    });

    let gl = Gl1d::montgomery(cfg.gl1d_grid()?)?;
    let (tau0, lambda0) = (gl.constants().tau0, gl.lambda0());
    s.block(3, |s| {
        let mut worst = 0.0f64;
        let mut pairs = 0;
        for da in [-0.2, -0.1, 0.0, 0.1, 0.2] {
            let a = tau0 + da;
            let la = gl.spectrum().lambda(a)?;
            let top = lambda0 + 0.05;
            for b in [la + 0.25 * (top - la), top] {
                let r = gl.ground_energy(a, b)?;
                worst = worst.max(r.identity_residual);
                pairs += 1;
            }
        }
        s.check(
            "3a",
            &format!("energy = -(b/2)||f||_4^4 on {pairs} pairs"),
            worst <= 1e-9,
            format!("{worst:.3e}"),
            "<= 1e-9 relative",
        );
        let a = tau0 + 0.5;
        let la = gl.spectrum().lambda(a)?;
        let zeros: Vec<f64> = [la - 1e-3, la - 0.1, la]
            .iter()
            .map(|&b| gl.ground_energy(a, b).map(|r| r.energy))
            .collect::<glref::Result<_>>()?;
        s.check(
            "3b",
            "trivial minimizer for b <= lambda(alpha)",
            zeros.iter().all(|&e| e == 0.0),
            format!("{zeros:?}"),
            "exactly 0",
        );
        Ok(())
    });

    s.block(4, |s| {
        let mut dist = 0.0f64;
        let mut resid = 0.0f64;
        for d in [1e-2, 1e-3] {
            for a in [tau0 - 0.02, tau0, tau0 + 0.02] {
                let b = lambda0 + d;
                let p = gl.picard_solve(a, b)?;
                let m = gl.minimize_profile(a, b, None)?;
                let diff: Vec<f64> = p.samples.iter().zip(&m.samples).map(|(x, y)| x - y).collect();
                dist = dist.max(gl.grid().norm2(&diff));
                let r = verify_resolvent_identities(&m)?;
                resid = resid.max(r.projection.max(r.fixed_point));
            }
        }
        s.check("4a", "Picard vs variational profile", dist <= 1e-6, format!("{dist:.3e}"), "L2 distance <= 1e-6");
        s.check("4b", "resolvent identity residuals", resid <= 1e-7, format!("{resid:.3e}"), "<= 1e-7");
        Ok(())
    });

    s.block(5, |s| {
        let t = Instant::now();
        let bs: Vec<f64> = [1e-2, 3e-3, 1e-3].iter().map(|d| lambda0 + d).collect();
        let table = gl.asymptotic_ratio_table(&bs)?;
        let dev: Vec<f64> = table.rows.iter().map(|r| (r.ratio - 1.0).abs()).collect();
        s.check("5a", "|r - 1| at b = lambda0 + 1e-3", dev[2] <= 0.1, format!("{:.3e}", dev[2]), "<= 0.1");
        s.check(
            "5b",
            "|r - 1| decreasing along b - lambda0 = 1e-2, 3e-3, 1e-3",
            dev.windows(2).all(|w| w[1] < w[0]),
            sci(&dev, 3),
            "strictly decreasing",
        );
        s.timed("5c", "ratio table runtime", t.elapsed().as_secs_f64(), 300.0);
        s.report.ratio_table_1d = Some(table);
        Ok(())
    });

    s.block(6, |s| {
        let betas = beta_grid(-1.0, 1.0, 201);
        for (k, d) in [1e-2, 1e-3].into_iter().enumerate() {
            let lin = LinearizedOperator::new(&gl, lambda0 + d)?;
            let g0 = lin.gamma(0.0)?;
            s.check(&format!("6{}", ['a', 'c'][k]), &format!("gamma(0, lambda0 + {d:e}) = 0"), g0.abs() <= 1e-6, format!("{g0:.3e}"), "|gamma| <= 1e-6");
            let min = match lin.scan(&betas) {
                Ok(c) => c.min_value,
                Err(e) => {
                    s.check(&format!("6{}", ['b', 'd'][k]), "beta scan", false, e.to_string(), "min >= -1e-6");
                    continue;
                }
            };
            s.check(&format!("6{}", ['b', 'd'][k]), &format!("min gamma over 201 betas, b = lambda0 + {d:e}"), min >= -1e-6, format!("{min:.3e}"), ">= -1e-6");
            if k == 1 {
                let (_, second) = lin.derivatives_at_zero()?;
                let l2 = gl.constants().lambda_second;
                s.check("6e", "gamma_bb(0) vs lambda''(tau0)", rel(second, l2) <= 0.1, format!("{second:.6} vs {l2:.6}"), "within 10%");
            }
        }
        Ok(())
    });

    let settings = cfg.strip_settings()?;
    let solver = StripSolver::new(settings.clone())?;
    let seed = cfg.u64("seed")?;
    s.block(7, |s| {
        let b = solver.lambda0() + 5e-3;
        let (_, profile) = solver.optimal_profile(b)?.ok_or_else(|| anyhow::anyhow!("b above lambda0 expected"))?;
        for (k, r) in [8.0, 16.0].into_iter().enumerate() {
            let per = solver.periodic_ground(b, r)?;
            let closed = -b * r * profile.l4_fourth;
            let wave = energy_strip(&solver.psi_b(b, r)?, b);
            let e = solver.dirichlet_minimize(r, b, seed)?.energy;
            s.check(
                &format!("7{}", ['a', 'c'][k]),
                &format!("e_per = -bR||f||_4^4 and plane-wave energy, R = {r}"),
                rel(per, closed) <= 1e-9 && rel(wave, per) <= 1e-9,
                format!("{per:.12e}, {closed:.12e}, {wave:.12e}"),
                "agree to 1e-9 relative",
            );
            s.check(
                &format!("7{}", ['b', 'd'][k]),
                &format!("e(b; R) >= e_per(b; R), R = {r}"),
                e >= per - 1e-9 * per.abs(),
                format!("{e:.12e} >= {per:.12e}"),
                "ordering",
            );
        }
        let (order, errs) = periodic_refinement(&settings)?;
        s.check(
            "7e",
            "discrete periodic energy vs continuum closed form under (hx, hy) halving",
            order.iter().all(|p| (p - 2.0).abs() <= 0.3),
            format!("errors {}, orders {order:.3?}", sci(&errs, 3)),
            "observed order 2 +- 0.3",
        );
        Ok(())
    });

    s.block(8, |s| {
        let lc = solver.critical_l();
        let offsets = cfg.list("strip.l_offsets")?;
        let ls: Vec<f64> = offsets.iter().map(|d| lc + d).collect();
        let table = solver.el_table(&ls)?;
        let find = |d: f64| table.rows.iter().zip(&offsets).find(|(_, o)| (**o - d).abs() < 1e-12).map(|(r, _)| r.estimate);
        match find(0.1) {
            Some(e) => s.check("8a", "E(lambda0^(-3/2) + 0.1) = 0", e.abs() <= 1e-4, format!("{e:.3e}"), "|E| <= 1e-4"),
            None => s.check("8a", "E(lambda0^(-3/2) + 0.1) = 0", false, "offset 0.1 missing from strip.l_offsets".into(), "row present"),
        }
        match find(-0.1) {
            Some(e) => s.check("8b", "E(lambda0^(-3/2) - 0.1) < 0", e < 0.0, format!("{e:.6e}"), "< 0"),
            None => s.check("8b", "E(lambda0^(-3/2) - 0.1) < 0", false, "offset -0.1 missing from strip.l_offsets".into(), "row present"),
        }
        let es: Vec<f64> = table.rows.iter().map(|r| r.estimate).collect();
        s.check("8c", &format!("E monotone over {} L values", es.len()), table.is_monotone(0.0), sci(&es, 6), "nondecreasing");
        let cs: Vec<f64> = table.rows.iter().map(|r| r.bracket_c).collect();
        let c_max = cs.iter().copied().fold(0.0, f64::max);
        let holds = table.rows.iter().all(|r| r.bracket_holds(c_max, 1e-9));
        s.check(
            "8d",
            "E <= e/2R <= E + c R^(-2/3) row-wise with one c",
            holds && cs.iter().all(|c| c.is_finite() && *c >= 0.0),
            format!("c per row {}, c = {c_max:.3e}", sci(&cs, 3)),
            "bracket holds with a finite common c",
        );
        s.report.el_table = Some(table);
        Ok(())
    });

    s.block(9, |s| {
        let t = Instant::now();
        let ls: Vec<f64> = [1e-2, 3e-3, 1e-3].iter().map(|d| (solver.lambda0() + d).powf(-1.5)).collect();
        let table = solver.verify_main_theorem(&ls)?;
        let dev: Vec<f64> = table.rows.iter().map(|r| (r.rho - 1.0).abs()).collect();
        s.check("9a", "|rho - 1| at L^(-2/3) = lambda0 + 1e-2", dev[0] <= 0.15, format!("{:.3e}", dev[0]), "<= 0.15");
        s.check(
            "9b",
            "|rho - 1| shrinking as L increases to lambda0^(-3/2)",
            dev.windows(2).all(|w| w[1] < w[0]),
            sci(&dev, 3),
            "strictly decreasing",
        );
        s.timed("9c", "main theorem runtime", t.elapsed().as_secs_f64(), 1800.0);
        s.report.main_theorem_table = Some(table);
        Ok(())
    });

    s.block(10, |s| geometry(s));

    let (_, bundle) = {
        let spectrum = Spectrum::new(cfg.spectral_grid()?, Potential::Montgomery, cfg.accuracy()?);
        let c = spectrum.ground_constants(cfg.tau0_bracket()?)?;
        ((), c)
    };
    s.block(11, |s| {
        let (l0, u4) = (bundle.lambda0, bundle.u0_l4_fourth);
        let disc = Omega::unit_disc();
        let chord = extract_zero_set(&FieldProfile::Builtin(Builtin::Linear), &disc, 0.01)?;
        let parabola = extract_zero_set(&FieldProfile::Builtin(Builtin::Parabola), &disc, 0.01)?;
        let rc = classify_assumption(&chord, l0)?;
        let rp = classify_assumption(&parabola, l0)?;
        let kappa = 50.0;
        let rho = 1e-3;
        let n = near_critical_energy(&chord, &rc, kappa, rho, u4, QUADRATURE_RTOL)?;
        let literal = (2.0 / 3.0 * rc.c0 * l0.powf(1.5) * rho).powi(2) * chord.length();
        let corrected = (2.0 / 3.0 * rc.c0 * l0.powf(2.5) * rho).powi(2) * chord.length();
        s.defect(
            "11a",
            "whole-curve integral vs ((2/3) c0 lambda0^(3/2) rho)^2 |Gamma| at rho = 1e-3",
            rel(n.integral, literal) <= 0.05,
            format!("ratio {:.6}", n.integral / literal),
            "within 5%",
            "expanding (L^(-2/3) - lambda0)^2 at L = lambda0^(-3/2) - c0 rho gives lambda0^(5/2), so the printed form is off by lambda0^2",
        );
        s.check(
            "11b",
            "whole-curve integral vs ((2/3) c0 lambda0^(5/2) rho)^2 |Gamma| at rho = 1e-3",
            rel(n.integral, corrected) <= 0.05,
            format!("ratio {:.6}", n.integral / corrected),
            "within 5%",
        );
        let rhos = [1e-2, 1e-3, 1e-4];
        let lens: Vec<f64> = rhos
            .iter()
            .map(|&r| near_critical_energy(&parabola, &rp, kappa, r, u4, QUADRATURE_RTOL).map(|n| n.gamma_kappa_len))
            .collect::<glref::Result<_>>()?;
        let slope = (lens[0] / lens[2]).ln() / (rhos[0] / rhos[2]).ln();
        s.check("11c", "finite case |Gamma_kappa| ~ rho^(1/2)", (slope - 0.5).abs() <= 0.05, format!("slope {slope:.4}, lengths {}", sci(&lens, 4)), "0.5 +- 0.05");

        for (name, curve, report) in [("y-x", &chord, &rc), ("y-x^2", &parabola, &rp)] {
            for r in [1e-2, 1e-3] {
                let n = near_critical_energy(curve, report, kappa, r, u4, QUADRATURE_RTOL)?;
                s.report.two_case_table.push(TwoCaseRow {
                    field: name.into(),
                    classification: report.classification,
                    c0: report.c0,
                    gamma: report.gamma_coef,
                    gamma_len: curve.length(),
                    rho: r,
                    integral: n.integral,
                    gamma_kappa_len: n.gamma_kappa_len,
                    energy: n.energy,
                });
            }
        }

        // leading-order energy with E(L) from strip solves, against the near-critical display
        let lattice_l0 = solver.lambda0();
        let rcl = classify_assumption(&chord, lattice_l0)?;
        let seq = [1e-2, 3e-3, 1e-3];
        let ls: Vec<f64> = seq.iter().map(|r| rcl.c0 * (rcl.gamma_coef - r)).collect();
        let table = solver.el_table(&ls)?;
        let e = EReference::from_table(&table, false)?;
        let ratios: Vec<f64> = seq
            .iter()
            .map(|&r| consistency_with_leading(&chord, &rcl, kappa, (rcl.gamma_coef - r) * kappa * kappa, &e, QUADRATURE_RTOL).map(|c| c.ratio))
            .collect::<glref::Result<_>>()?;
        let dev: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
        s.check(
            "11d",
            "leading-order / near-critical ratio with strip E(L), y-x",
            dev[0] <= 0.2 && dev.windows(2).all(|w| w[1] < w[0]),
            format!("ratios {ratios:.6?}"),
            "within 20% at rho = 1e-2, deviation decreasing",
        );
        let es = EReference::surrogate_only(l0, u4);
        let ratios: Vec<f64> = seq
            .iter()
            .map(|&r| consistency_with_leading(&parabola, &rp, kappa, (rp.gamma_coef - r) * kappa * kappa, &es, QUADRATURE_RTOL).map(|c| c.ratio))
            .collect::<glref::Result<_>>()?;
        let dev: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
        s.check(
            "11e",
            "leading-order / near-critical ratio with the closed-form E near L_c, y-x^2",
            dev[0] <= 0.2 && dev.windows(2).all(|w| w[1] < w[0]),
            format!("ratios {ratios:.6?}"),
            "within 20% at rho = 1e-2, deviation decreasing",
        );
        Ok(())
    });
    Ok(s.report)
}

/// Errors of the lattice ground energy `b(xi, b)` against the continuum value at
/// `b = lambda0 + 5e-3`, for `(hx, hy)` halved twice; returns the observed orders.
fn periodic_refinement(base: &StripSettings) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = base.half_height;
    let fine = |n: usize| -> Result<Gl1d> { Ok(Gl1d::montgomery(Grid1D::new(8.0, n)?)?) };
    let (g1, g2) = (fine(4001)?, fine(8001)?);
    let b = g2.lambda0() + 5e-3;
    let (_, r1) = g1.find_xi(b)?;
    let (_, r2) = g2.find_xi(b)?;
    let continuum = r2.energy + (r2.energy - r1.energy) / 3.0;
    let mut errs = Vec::new();
    for k in 0..3 {
        let scale = 1usize << k;
        let settings = StripSettings {
            hx: base.hx / scale as f64,
            ny: (base.ny - 1) * scale + 1,
            half_height: t,
            ..base.clone()
        };
        let solver = StripSolver::new(settings)?;
        let (_, rec) = solver.gl().find_xi(b)?;
        errs.push((rec.energy - continuum).abs());
    }
    let order = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok((order, errs))
}

fn geometry(s: &mut Sink) -> Result<()> {
    let disc = Omega::unit_disc();
    let chord = extract_zero_set(&FieldProfile::Builtin(Builtin::Linear), &disc, 0.0025)?;
    let parabola = extract_zero_set(&FieldProfile::Builtin(Builtin::Parabola), &disc, 0.0025)?;
    let g_err = chord
        .components
        .iter()
        .flat_map(|c| c.points.iter())
        .map(|p| (chord.field.grad_norm(*p) - 2f64.sqrt()).abs())
        .fold(0.0, f64::max);
    let xm = ((5f64.sqrt() - 1.0) / 2.0).sqrt();
    let prim = |x: f64| x * (1.0 + 4.0 * x * x).sqrt() / 2.0 + (2.0 * x).asinh() / 4.0;
    let exact = 2.0 * prim(xm);
    let rp = classify_assumption(&parabola, 0.57)?;
    let errs = [
        (chord.length() - 2.0).abs(),
        g_err,
        (parabola.length() - exact).abs(),
        (rp.c0 - 1.0).abs(),
    ];
    s.check(
        "10a",
        "zero-set analytics: chord length 2, |grad B0| = sqrt 2, parabola length, c0 = 1",
        errs.iter().all(|&e| e <= 1e-8) && chord.components.len() == 1 && parabola.components.len() == 1,
        sci(&errs, 3),
        "all <= 1e-8",
    );
    let ells = [0.04, 0.02, 0.01];
    let mut spacing_factors = Vec::new();
    let mut arc_factors = Vec::new();
    let mut counts = Vec::new();
    let mut chord_arc = 0.0f64;
    for (name, curve) in [("y-x", &chord), ("y-x^2", &parabola)] {
        let reports = ells.iter().map(|&l| disk_covering(curve, l)).collect::<glref::Result<Vec<_>>>()?;
        for w in reports.windows(2) {
            spacing_factors.push((name, w[0].spacing_defect / w[1].spacing_defect));
            if name == "y-x^2" {
                arc_factors.push(w[0].arc_defect / w[1].arc_defect);
            }
        }
        if name == "y-x" {
            chord_arc = reports.iter().map(|r| r.arc_defect).fold(0.0, f64::max);
        }
        counts.push((name, reports.iter().map(|r| r.count_defect).collect::<Vec<_>>()));
        if reports.iter().any(|r| !(r.disjoint && r.inside)) {
            s.check("10!", &format!("disks disjoint and inside Omega, {name}"), false, "violated".into(), "disjoint, inside");
        }
    }
    s.defect(
        "10b",
        "per-disk arc defect |int_{D(a,l)} ds - 2l| shrinks x4 under l-halving, y-x^2",
        arc_factors.iter().all(|f| (f - 4.0).abs() <= 0.8),
        format!("factors {arc_factors:.3?}"),
        "4 +- 20%",
        "for a curve of curvature k the disk arc is 2l + k^2 l^3 / 12 + O(l^5), so the factor is 8",
    );
    s.check(
        "10c",
        "per-disk arc defect follows the curvature law (factor 8 +- 20%), y-x^2; <= 1e-12 on the chord",
        arc_factors.iter().all(|f| (f - 8.0).abs() <= 1.6) && chord_arc <= 1e-12,
        format!("factors {arc_factors:.3?}, chord {chord_arc:.1e}"),
        "8 +- 20%, chord exact",
    );
    s.check(
        "10d",
        "arc-spacing defect |dist(a_j, a_j+1) - 2l| shrinks x4 under l-halving",
        spacing_factors.iter().all(|(_, f)| (f - 4.0).abs() <= 0.8),
        format!("{spacing_factors:.3?}"),
        "4 +- 20% on both fields",
    );
    s.check(
        "10e",
        "|N - |Gamma|/(2l)| bounded over l = 0.04, 0.02, 0.01",
        counts.iter().all(|(_, d)| d.iter().all(|&x| x <= d[0] + 1.0)),
        format!("{counts:.3?}"),
        "no growth beyond the l = 0.04 value + 1",
    );
    Ok(())
}
