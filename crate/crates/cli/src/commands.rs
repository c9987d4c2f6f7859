//! One runner per subcommand. Each writes its artifacts into the output
//! directory and returns a JSON summary.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use glref::domain::{
    classify_assumption, compute_gauge_field, disk_covering, extract_zero_set, leading_order_energy,
    near_critical_at, tracked_remainders, check_remainder, Classification, EReference,
};
use glref::gl1d::Gl1d;
use glref::io::{csv, ConstantsBundle};
use glref::linearized::{beta_grid, LinearizedOperator};
use glref::spectral::{Potential, Spectrum};
use glref::strip::{ELTable, StripSolver};

use crate::acceptance;
use crate::config::RunConfig;

pub struct Runner {
    pub cfg: RunConfig,
}

impl Runner {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        let out = cfg.out_dir();
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        let r = Self { cfg };
        r.write("config.resolved", &r.cfg.echo())?;
        Ok(r)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.cfg.out_dir().join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, &s)
    }

    /// Montgomery spectrum and its constants at the configured accuracy.
    pub fn constants(&self) -> Result<(Spectrum, ConstantsBundle)> {
        let spectrum = Spectrum::new(
            self.cfg.spectral_grid()?,
            Potential::Montgomery,
            self.cfg.accuracy()?,
        );
        let c = spectrum.ground_constants(self.cfg.tau0_bracket()?)?;
        Ok((spectrum, ConstantsBundle::new(&c)?))
    }

    fn gl1d(&self) -> Result<(Gl1d, ConstantsBundle)> {
        let gl = Gl1d::montgomery(self.cfg.gl1d_grid()?)?;
        let bundle = ConstantsBundle::new(gl.constants())?;
        Ok((gl, bundle))
    }

    pub fn spectrum(&self, find_tau0: bool) -> Result<Value> {
        let (lo, hi, n) = (
            self.cfg.f64("spectrum.alpha_min")?,
            self.cfg.f64("spectrum.alpha_max")?,
            self.cfg.usize("spectrum.alpha_steps")?,
        );
        if n < 2 || hi <= lo {
            bail!("spectrum range needs alpha_max > alpha_min and at least 2 steps");
        }
        let spectrum = Spectrum::new(self.cfg.spectral_grid()?, Potential::Montgomery, self.cfg.accuracy()?);
        let alphas: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let curve = spectrum.curve(&alphas, true)?;
        let second = curve.second_values.clone().unwrap_or_default();
        let rows = alphas.iter().enumerate().map(|(i, &a)| vec![a, curve.values[i], second[i]]);
        self.write("spectrum.csv", &csv(&["alpha", "lambda1", "lambda2"], rows)?)?;
        let mut summary = json!({ "curve": "spectrum.csv", "points": n });
        if find_tau0 {
            let c = spectrum.ground_constants(self.cfg.tau0_bracket()?)?;
            let bundle = ConstantsBundle::new(&c)?;
            let lambda_at_zero = spectrum.lambda(0.0)?;
            let report = json!({
                "constants": bundle,
                "lambda_at_zero": lambda_at_zero,
                "upper_bound": 0.75f64.powf(4.0 / 3.0),
                "lambda_prime_at_tau0": spectrum.lambda_prime(c.tau0)?,
            });
            self.write_json("constants.json", &report)?;
            summary["constants"] = report;
        }
        Ok(summary)
    }

    pub fn gl1d_table(&self) -> Result<Value> {
        let (gl, bundle) = self.gl1d()?;
        let bs: Vec<f64> = self.cfg.list("gl1d.b_offsets")?.iter().map(|d| gl.lambda0() + d).collect();
        if bs.is_empty() {
            bail!("gl1d.b_offsets is empty");
        }
        let table = gl.asymptotic_ratio_table(&bs)?;
        let (_, profile) = gl.find_xi_profile(bs[0])?;
        let rows = gl.grid().nodes().into_iter().zip(profile.samples.iter()).map(|(t, &f)| vec![t, f]);
        self.write("profile.csv", &csv(&["t", "f"], rows)?)?;
        let report = json!({ "constants": bundle, "ratio_table": table, "profile": { "b": bs[0], "xi": profile.alpha, "csv": "profile.csv" } });
        self.write_json("gl1d.json", &report)?;
        Ok(report)
    }

    pub fn gamma(&self) -> Result<Value> {
        let (gl, bundle) = self.gl1d()?;
        let betas = beta_grid(
            self.cfg.f64("gamma.beta_min")?,
            self.cfg.f64("gamma.beta_max")?,
            self.cfg.usize("gamma.beta_steps")?,
        );
        let mut scans = Vec::new();
        for (k, d) in self.cfg.list("gamma.b_offsets")?.into_iter().enumerate() {
            let b = gl.lambda0() + d;
            let lin = LinearizedOperator::new(&gl, b)?;
            let curve = lin.scan(&betas)?;
            let (first, second) = lin.derivatives_at_zero()?;
            let name = format!("gamma_{k}.csv");
            let rows = curve.betas.iter().zip(&curve.values).map(|(&x, &g)| vec![x, g]);
            self.write(&name, &csv(&["beta", "gamma"], rows)?)?;
            scans.push(json!({
                "b": b, "xi": lin.xi, "gamma_at_zero": lin.gamma(0.0)?, "min_beta": curve.min_beta,
                "min_value": curve.min_value, "gamma_beta": first, "gamma_beta_beta": second, "csv": name,
            }));
        }
        let report = json!({ "constants": bundle, "lambda_second": gl.constants().lambda_second, "scans": scans });
        self.write_json("gamma.json", &report)?;
        Ok(report)
    }

    pub fn strip(&self, ls: Option<Vec<f64>>) -> Result<Value> {
        let solver = StripSolver::new(self.cfg.strip_settings()?)?;
        let lc = solver.critical_l();
        let ls = match ls {
            Some(v) if !v.is_empty() => v,
            _ => {
                let explicit = self.cfg.list("strip.l_values")?;
                if explicit.is_empty() {
                    self.cfg.list("strip.l_offsets")?.iter().map(|d| lc + d).collect()
                } else {
                    explicit
                }
            }
        };
        if ls.iter().any(|&l| !(l > 0.0)) {
            bail!("L values must be positive");
        }
        let bundle = ConstantsBundle::new(solver.gl().constants())?;
        let table = solver.el_table(&ls)?;
        self.write("el_table.jsonl", &table.to_jsonl()?)?;
        let mut report = json!({ "constants": bundle, "critical_l": lc, "table": table, "jsonl": "el_table.jsonl" });
        if let Some(r) = self.cfg.opt_f64("strip.field_r")? {
            let b = ls[0].powf(-2.0 / 3.0);
            let res = solver.dirichlet_minimize(r, b, self.cfg.u64("seed")?)?;
            let g = &res.field.grid;
            let mut rows = Vec::with_capacity(g.len());
            for j in 0..g.nx {
                for k in 0..g.ny() {
                    let v = res.field.values[g.index(j, k)];
                    rows.push(vec![g.x1(j), g.x2.node(k), v.re, v.im]);
                }
            }
            self.write("field.csv", &csv(&["x1", "x2", "re", "im"], rows)?)?;
            report["field"] = json!({ "l": ls[0], "b": b, "r": r, "energy": res.energy, "iterations": res.iterations, "csv": "field.csv" });
        }
        self.write_json("strip.json", &report)?;
        Ok(report)
    }

    pub fn energy(&self) -> Result<Value> {
        let field = self.cfg.field("energy.field")?;
        let omega = self.cfg.omega("energy.omega")?;
        let kappa = self.cfg.f64("energy.kappa")?;
        let rtol = self.cfg.f64("energy.rtol")?;
        let curve = extract_zero_set(&field, &omega, self.cfg.f64("energy.resolution")?)?;
        let (e, provenance) = match self.cfg.opt_str("energy.e_table") {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading E-table {path}"))?;
                let table = ELTable::from_jsonl(&text)?;
                let e = EReference::from_table(&table, self.cfg.bool("energy.surrogate")?)?;
                (e, json!({ "source": "e_table", "path": path, "lambda0": table.lambda0, "u0_l4_fourth": table.u0_l4_fourth }))
            }
            None => {
                let (_, bundle) = self.constants()?;
                (EReference::surrogate_only(bundle.lambda0, bundle.u0_l4_fourth), json!({ "source": "montgomery", "constants": bundle }))
            }
        };
        let report = classify_assumption(&curve, e.lambda0)?;
        let rho_cfg = self.cfg.f64("energy.rho")?;
        let h = match self.cfg.opt_f64("energy.h")? {
            Some(h) => h,
            None => (report.gamma_coef - rho_cfg) * kappa * kappa,
        };
        if !(h > 0.0) {
            bail!("H = {h} must be positive");
        }
        let rho = report.gamma_coef - h / (kappa * kappa);
        let leading = leading_order_energy(&curve, kappa, h, &e, Some(&report), rtol)?;
        let near = if report.classification == Classification::ViolatesAssumption {
            None
        } else {
            Some(near_critical_at(&curve, &report, kappa, h, e.u0_l4_fourth, rtol)?)
        };
        let gauge = compute_gauge_field(&field, &omega, self.cfg.f64("energy.gauge_resolution")?)?;
        let exps: Vec<Value> = tracked_remainders()
            .iter()
            .map(|(name, r)| json!({ "bound": name, "check": check_remainder(*r, glref::domain::exponents::rho_band_exponent()) }))
            .collect();
        let out = json!({
            "c0": report.c0,
            "gamma": report.gamma_coef,
            "H_C2": report.h_c2(kappa),
            "Gamma_len": curve.length(),
            "Gamma_kappa_len": near.as_ref().map(|n| n.gamma_kappa_len),
            "leading": leading.value,
            "near_critical": near.as_ref().map(|n| n.energy),
            "near_critical_integral": near.as_ref().map(|n| n.integral),
            "classification": report.classification,
            "classification_reason": report.reason,
            "minima": report.minima,
            "kappa": kappa,
            "H": h,
            "rho": rho,
            "field": field.describe(),
            "omega": omega,
            "components": curve.components.len(),
            "surrogate_used": leading.surrogate_used,
            "provenance": provenance,
            "gauge_residuals": gauge.residuals,
            "remainder_exponents_at_rho_band_edge": exps,
        });
        self.write_json("energy.json", &out)?;
        Ok(out)
    }

    pub fn cover(&self) -> Result<Value> {
        let field = self.cfg.field("cover.field")?;
        let omega = self.cfg.omega("cover.omega")?;
        let curve = extract_zero_set(&field, &omega, self.cfg.f64("cover.resolution")?)?;
        let r = disk_covering(&curve, self.cfg.f64("cover.ell")?)?;
        let out = json!({ "field": field.describe(), "omega": omega, "constants": Value::Null, "covering": r });
        self.write_json("cover.json", &out)?;
        Ok(out)
    }

    /// Full pipeline with every acceptance check; hard failures abort with the
    /// artifacts written so far left in place.
    pub fn all(&self) -> Result<Value> {
        let summary = json!({
            "spectrum": self.spectrum(true)?,
            "gl1d": self.gl1d_table()?,
            "gamma": self.gamma()?,
            "strip": self.strip(None)?,
            "energy": self.energy()?,
            "cover": self.cover()?,
        });
        let report = acceptance::run(&self.cfg, &mut |line| eprintln!("{line}"))?;
        let out = json!({ "stages": summary, "acceptance": report });
        self.write_json("report.json", &out)?;
        Ok(json!({ "report": "report.json", "passed": report.passed(), "checks": report.checks.len() }))
    }
}
