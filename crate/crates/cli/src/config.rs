//! Flat `key = value` run configuration with defaults, file, environment and
//! flag layers, in increasing precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use glref::domain::{FieldProfile, Omega, SampledField};
use glref::io::parse_key_values;
use glref::spectral::Accuracy;
use glref::strip::StripSettings;
use glref::Grid1D;

/// Prefix of the environment override for every key: `strip.hx` -> `GLREF_STRIP_HX`.
pub const ENV_PREFIX: &str = "GLREF_";

/// `(key, default, note)`. The notes are echoed next to the resolved values.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("seed", "24301", "seed of the noise added to strip initial data"),
    ("out_dir", "glref-out", "artifact directory"),
    ("spectral.half_width", "8", "T of the Montgomery grid [-T, T]"),
    ("spectral.points", "4001", "nodes of the Montgomery grid, Dirichlet ends included"),
    ("spectral.accuracy", "extrapolated", "discrete | extrapolated (Richardson with the 2x grid)"),
    ("spectral.tau0_lo", "-1", "bracket for tau0"),
    ("spectral.tau0_hi", "0", "bracket for tau0"),
    ("spectrum.alpha_min", "-1.5", "spectral curve range"),
    ("spectrum.alpha_max", "0.5", "spectral curve range"),
    ("spectrum.alpha_steps", "41", "spectral curve samples"),
    ("gl1d.points", "2001", "nodes of the 1D GL grid on [-T, T], T = spectral.half_width"),
    ("gl1d.b_offsets", "1e-2,3e-3,1e-3", "b - lambda0 for the asymptotic ratio table"),
    ("gamma.b_offsets", "1e-2,1e-3", "b - lambda0 for the linearization scans"),
    ("gamma.beta_min", "-1", "scan range"),
    ("gamma.beta_max", "1", "scan range"),
    ("gamma.beta_steps", "201", "scan samples"),
    ("strip.hx", "0.2", "x1 spacing; (T^2/2 + 1) hx must stay below pi"),
    ("strip.half_height", "5.4", "x2 half height T"),
    ("strip.ny", "109", "x2 nodes, Dirichlet ends included"),
    ("strip.grad_tol", "1e-7", "L2 norm of the continuum gradient at which L-BFGS stops"),
    ("strip.max_iter", "20000", "L-BFGS iteration cap"),
    ("strip.memory", "12", "L-BFGS memory"),
    ("strip.noise", "1e-3", "relative size of the initial noise"),
    ("strip.fit_exponent", "1", "p in the extrapolation E + c R^-p"),
    ("strip.fit_tolerance", "1e-3", "largest relative RMS residual of the fit"),
    ("strip.r_multiples", "4,5,6,8", "R as multiples of the coherence length"),
    ("strip.default_r_list", "8,12,16,24", "R when b <= lambda0"),
    ("strip.l_offsets", "-0.25,-0.15,-0.1,-0.05,0.05,0.1", "L - lambda0^(-3/2) for the E(L) table"),
    ("strip.l_values", "", "explicit L values; override strip.l_offsets when set"),
    ("strip.field_r", "", "when set, write the Dirichlet minimizer at this R for the first L"),
    ("energy.field", "parabola", "builtin (linear | parabola | cubic | constant) or CSV x,y,B0 file"),
    ("energy.omega", "disc", "disc (unit disc) or polygon file"),
    ("energy.kappa", "50", "Ginzburg-Landau parameter"),
    ("energy.h", "", "applied field H; when empty H = (gamma - rho) kappa^2"),
    ("energy.rho", "1e-2", "distance below the critical coefficient"),
    ("energy.e_table", "", "E(L) table (JSON lines); empty uses the near-critical closed form"),
    ("energy.surrogate", "true", "use the near-critical closed form beyond the last table row"),
    ("energy.resolution", "0.01", "marching-squares lattice spacing"),
    ("energy.rtol", "1e-10", "relative tolerance of the adaptive quadrature"),
    ("energy.gauge_resolution", "0.05", "lattice spacing of the gauge-field Poisson solve"),
    ("cover.field", "parabola", "as energy.field"),
    ("cover.omega", "disc", "as energy.omega"),
    ("cover.ell", "0.02", "disk radius"),
    ("cover.resolution", "0.0025", "marching-squares lattice spacing"),
];

pub fn env_name(key: &str) -> String {
    let mut s = String::from(ENV_PREFIX);
    s.extend(key.chars().map(|c| if c == '.' || c == '-' { '_' } else { c.to_ascii_uppercase() }));
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

impl RunConfig {
    /// Layers: defaults, then `file`, then `GLREF_*` variables from `env`, then `overrides`.
    pub fn resolve(
        file: Option<&Path>,
        env: impl Fn(&str) -> Option<String>,
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            for (k, v) in parse_key_values(&text)? {
                cfg.set(&k, &v)?;
            }
        }
        for (k, _, _) in KEYS {
            if let Some(v) = env(&env_name(k)) {
                cfg.set(k, &v)?;
            }
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.trim().to_string();
                Ok(())
            }
            None => bail!("unknown config key '{key}'"),
        }
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("unregistered key {key}"))
    }

    pub fn opt_str(&self, key: &str) -> Option<&str> {
        Some(self.raw(key)).filter(|s| !s.is_empty())
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v: f64 = self.raw(key).parse().map_err(|_| anyhow!("{key}: expected a number, got '{}'", self.raw(key)))?;
        if !v.is_finite() {
            bail!("{key}: must be finite");
        }
        Ok(v)
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.raw(key).parse().map_err(|_| anyhow!("{key}: expected a non-negative integer, got '{}'", self.raw(key)))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.raw(key).parse().map_err(|_| anyhow!("{key}: expected a non-negative integer, got '{}'", self.raw(key)))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => bail!("{key}: expected true or false, got '{v}'"),
        }
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        self.raw(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| anyhow!("{key}: cannot parse '{s}'"))
            })
            .collect()
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("out_dir"))
    }

    fn validate(&self) -> Result<()> {
        // typed access for every key catches malformed values before any work starts
        for (k, _, _) in KEYS {
            match *k {
                "out_dir" | "energy.field" | "energy.omega" | "energy.e_table" | "cover.field" | "cover.omega" => {}
                "spectral.accuracy" => {
                    self.accuracy()?;
                }
                "seed" => {
                    self.u64(k)?;
                }
                "energy.surrogate" => {
                    self.bool(k)?;
                }
                k if k.ends_with("points") || k.ends_with("steps") || k.ends_with(".ny") || k.ends_with("max_iter") || k.ends_with("memory") => {
                    self.usize(k)?;
                }
                k if k.ends_with("offsets") || k.ends_with("multiples") || k.ends_with("_list") || k.ends_with("l_values") => {
                    self.list(k)?;
                }
                k => {
                    self.opt_f64(k)?;
                }
            }
        }
        Ok(())
    }

    pub fn accuracy(&self) -> Result<Accuracy> {
        match self.raw("spectral.accuracy") {
            "discrete" => Ok(Accuracy::Discrete),
            "extrapolated" => Ok(Accuracy::Extrapolated),
            v => bail!("spectral.accuracy: expected discrete or extrapolated, got '{v}'"),
        }
    }

    pub fn spectral_grid(&self) -> Result<Grid1D> {
        Ok(Grid1D::new(self.f64("spectral.half_width")?, self.usize("spectral.points")?)?)
    }

    pub fn gl1d_grid(&self) -> Result<Grid1D> {
        Ok(Grid1D::new(self.f64("spectral.half_width")?, self.usize("gl1d.points")?)?)
    }

    pub fn tau0_bracket(&self) -> Result<(f64, f64)> {
        Ok((self.f64("spectral.tau0_lo")?, self.f64("spectral.tau0_hi")?))
    }

    pub fn strip_settings(&self) -> Result<StripSettings> {
        Ok(StripSettings {
            half_height: self.f64("strip.half_height")?,
            ny: self.usize("strip.ny")?,
            hx: self.f64("strip.hx")?,
            grad_tol: self.f64("strip.grad_tol")?,
            max_iter: self.usize("strip.max_iter")?,
            memory: self.usize("strip.memory")?,
            seed: self.u64("seed")?,
            noise: self.f64("strip.noise")?,
            fit_exponent: self.f64("strip.fit_exponent")?,
            r_multiples: self.list("strip.r_multiples")?,
            default_r_list: self.list("strip.default_r_list")?,
            fit_tolerance: self.f64("strip.fit_tolerance")?,
        })
    }

    /// `(name, sampled?)`: a builtin name or a CSV file.
    pub fn field(&self, key: &str) -> Result<FieldProfile> {
        load_field(self.raw(key))
    }

    pub fn omega(&self, key: &str) -> Result<Omega> {
        load_omega(self.raw(key))
    }

    /// Sorted `key = value` lines with the notes as trailing comments.
    pub fn echo(&self) -> String {
        let notes: BTreeMap<&str, &str> = KEYS.iter().map(|(k, _, n)| (*k, *n)).collect();
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}  # {}\n", notes[k.as_str()]));
        }
        out
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

pub fn load_field(spec: &str) -> Result<FieldProfile> {
    if let Ok(f) = FieldProfile::builtin(spec) {
        return Ok(f);
    }
    let text = std::fs::read_to_string(spec).with_context(|| format!("'{spec}' is neither a builtin field nor a readable file"))?;
    Ok(FieldProfile::Sampled(SampledField::parse_csv(&text)?))
}

pub fn load_omega(spec: &str) -> Result<Omega> {
    if spec == "disc" || spec == "unit_disc" {
        return Ok(Omega::unit_disc());
    }
    let text = std::fs::read_to_string(spec).with_context(|| format!("'{spec}' is neither 'disc' nor a readable polygon file"))?;
    Ok(Omega::parse_polygon(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_default_validates() {
        let c = RunConfig::resolve(None, |_| None, &[]).unwrap();
        assert_eq!(c.f64("strip.hx").unwrap(), 0.2);
        assert_eq!(c.list("strip.r_multiples").unwrap(), vec![4.0, 5.0, 6.0, 8.0]);
        assert!(c.opt_f64("energy.h").unwrap().is_none());
    }

    #[test]
    fn layers_apply_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "strip.hx = 0.1\nseed = 5\nenergy.kappa = 10\n").unwrap();
        let env = |k: &str| (k == "GLREF_SEED").then(|| "6".to_string());
        let c = RunConfig::resolve(Some(&path), env, &[("energy.kappa".into(), "20".into())]).unwrap();
        assert_eq!(c.f64("strip.hx").unwrap(), 0.1);
        assert_eq!(c.u64("seed").unwrap(), 6);
        assert_eq!(c.f64("energy.kappa").unwrap(), 20.0);
    }

    #[test]
    fn bad_values_and_keys_are_rejected() {
        assert!(RunConfig::resolve(None, |_| None, &[("nope".into(), "1".into())]).is_err());
        assert!(RunConfig::resolve(None, |_| None, &[("strip.hx".into(), "abc".into())]).is_err());
        assert!(RunConfig::resolve(None, |_| None, &[("spectral.accuracy".into(), "exact".into())]).is_err());
        assert_eq!(env_name("strip.l_values"), "GLREF_STRIP_L_VALUES");
    }
}
