//! Text formats: flat `key = value` configs, CSV tables and the constants bundle.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Accuracy, GroundConstants, Potential};

/// Every float written to CSV goes through this.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text with the given header; each row must match its width.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<String> {
    let mut out = header.join(",");
    out.push('\n');
    for (k, row) in rows.into_iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::InvalidArgument(format!(
                "row {k} has {} columns, header has {}",
                row.len(),
                header.len()
            )));
        }
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Parses `key = value` lines. `#` starts a comment; keys are lowercase
/// `[a-z0-9_.-]`, unique, and values are trimmed (possibly empty).
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: k + 1,
            message: format!("expected key = value, found '{line}'"),
        })?;
        let key = key.trim();
        if key.is_empty()
            || !key
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, '_' | '.' | '-'))
        {
            return Err(Error::Parse {
                line: k + 1,
                message: format!("invalid key '{key}'"),
            });
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::Parse {
                line: k + 1,
                message: format!("duplicate key '{key}'"),
            });
        }
    }
    Ok(map)
}

/// Grid a constant was computed on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridProvenance {
    pub half_width: f64,
    pub points: usize,
    pub potential: Potential,
    pub accuracy: Accuracy,
}

/// `tau0`, `lambda0`, `lambda''(tau0)`, `||u0||_4^4` and where they came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsBundle {
    pub tau0: f64,
    pub lambda0: f64,
    pub lambda_second: f64,
    pub u0_l4_fourth: f64,
    pub grid: GridProvenance,
}

/// Sanity window for `lambda0`.
pub const LAMBDA0_GATE: (f64, f64) = (0.5, 0.7);

impl ConstantsBundle {
    pub fn new(c: &GroundConstants) -> Result<Self> {
        let b = Self {
            tau0: c.tau0,
            lambda0: c.lambda0,
            lambda_second: c.lambda_second,
            u0_l4_fourth: c.u0_l4_fourth,
            grid: GridProvenance {
                half_width: c.half_width,
                points: c.points,
                potential: c.potential,
                accuracy: c.accuracy,
            },
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > LAMBDA0_GATE.0 && self.lambda0 < LAMBDA0_GATE.1) {
            return Err(Error::InvalidArgument(format!(
                "lambda0 = {} outside the sanity window {:?}",
                self.lambda0, LAMBDA0_GATE
            )));
        }
        if !(self.u0_l4_fourth > 0.0 && self.lambda_second > 0.0 && self.tau0 < 0.0) {
            return Err(Error::InvalidArgument(
                "constants bundle needs u0_l4_fourth > 0, lambda'' > 0 and tau0 < 0".into(),
            ));
        }
        Ok(())
    }

    pub fn critical_l(&self) -> f64 {
        self.lambda0.powf(-1.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values_parse_and_reject() {
        let m = parse_key_values("# c\nseed = 7\n\nstrip.hx=0.2 # inline\nout-dir = \n").unwrap();
        assert_eq!(m["seed"], "7");
        assert_eq!(m["strip.hx"], "0.2");
        assert_eq!(m["out-dir"], "");
        assert!(parse_key_values("a = 1\na = 2\n").is_err());
        assert!(parse_key_values("no equals\n").is_err());
        assert!(parse_key_values("Bad = 1\n").is_err());
    }

    #[test]
    fn csv_uses_fixed_float_format() {
        let s = csv(&["a", "b"], vec![vec![1.0, -0.5]]).unwrap();
        assert_eq!(s, "a,b\n1.0000000000000000e0,-5.0000000000000000e-1\n");
        assert!(csv(&["a"], vec![vec![1.0, 2.0]]).is_err());
    }
}
