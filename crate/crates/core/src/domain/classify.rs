//! `c0`, `gamma` and the shape of `Γ0 = {x ∈ Γ : |∇B0(x)| = c0}`.

use serde::Serialize;

use super::zero_set::ZeroCurve;
use crate::error::{Error, Result};
use crate::optimize::golden_section;

/// Relative variation of `g = |∇B0|` below which `Γ0 = Γ`.
pub const WHOLE_CURVE_TOL: f64 = 1e-8;
/// Relative tolerance on `g` for a local minimum to belong to `Γ0`.
pub const MINIMUM_MATCH_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    WholeCurve,
    FiniteNondegenerate,
    ViolatesAssumption,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalPoint {
    pub component: usize,
    pub arc: f64,
    pub point: [f64; 2],
    pub g: f64,
    /// `d²g/ds²` from the finest accepted second difference.
    pub g_second: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalFieldReport {
    pub c0: f64,
    pub lambda0: f64,
    /// `lambda0^{-3/2} / c0`
    pub gamma_coef: f64,
    pub g_max: f64,
    pub classification: Classification,
    pub minima: Vec<CriticalPoint>,
    pub reason: Option<String>,
}

impl CriticalFieldReport {
    /// `H_C2(kappa) = gamma kappa^2`
    pub fn h_c2(&self, kappa: f64) -> f64 {
        self.gamma_coef * kappa * kappa
    }
}

/// Classifies `Γ0` on `curve`. `lambda0` only enters `gamma_coef`.
pub fn classify_assumption(curve: &ZeroCurve, lambda0: f64) -> Result<CriticalFieldReport> {
    if !(lambda0 > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda0 must be positive, got {lambda0}")));
    }
    let field = &curve.field;
    let tol = curve.tolerance;
    let mut g_min = f64::INFINITY;
    let mut g_max = 0.0f64;
    for c in &curve.components {
        for p in &c.points {
            let g = field.grad_norm(*p);
            g_min = g_min.min(g);
            g_max = g_max.max(g);
        }
    }
    if g_max - g_min < WHOLE_CURVE_TOL * g_min {
        return Ok(CriticalFieldReport {
            c0: g_min,
            lambda0,
            gamma_coef: lambda0.powf(-1.5) / g_min,
            g_max,
            classification: Classification::WholeCurve,
            minima: Vec::new(),
            reason: None,
        });
    }

    // refine every vertex-level local minimum along the arc
    let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
    for (ci, c) in curve.components.iter().enumerate() {
        let g: Vec<f64> = c.points.iter().map(|p| field.grad_norm(*p)).collect();
        let n = g.len();
        for k in 0..n {
            let left = if k > 0 {
                g[k - 1]
            } else if c.closed {
                g[n - 2]
            } else {
                f64::INFINITY
            };
            let right = if k + 1 < n {
                g[k + 1]
            } else if c.closed {
                g[1]
            } else {
                f64::INFINITY
            };
            if g[k] <= left && g[k] <= right {
                let lo = c.arc[k.saturating_sub(1)];
                let hi = c.arc[(k + 1).min(n - 1)];
                let gs = |s: f64| -> std::result::Result<f64, Error> { Ok(field.grad_norm(c.point_at(field, s, tol))) };
                let (s, v) = golden_section(gs, lo, hi, 1e-9 * c.length().max(1.0))?;
                let (s, v) = if v <= g[k] { (s, v) } else { (c.arc[k], g[k]) };
                candidates.push((ci, s, v));
            }
        }
    }
    let c0 = candidates.iter().map(|c| c.2).fold(g_min, f64::min);
    let gamma_coef = lambda0.powf(-1.5) / c0;
    let mut minima = Vec::new();
    let mut reason = None;
    for &(ci, s, g) in &candidates {
        if g > c0 * (1.0 + MINIMUM_MATCH_TOL) {
            continue;
        }
        if minima.iter().any(|m: &CriticalPoint| m.component == ci && (m.arc - s).abs() < 1e-6) {
            continue;
        }
        let c = &curve.components[ci];
        let l = c.length();
        let point = c.point_at(field, s, tol);
        let at_end = !c.closed && (s <= 1e-6 * l || s >= l * (1.0 - 1e-6));
        if at_end {
            reason.get_or_insert_with(|| format!("minimum of |grad B0| on the boundary at ({:.6}, {:.6})", point[0], point[1]));
            minima.push(CriticalPoint {
                component: ci,
                arc: s,
                point,
                g,
                g_second: f64::NAN,
            });
            continue;
        }
        let margin = if c.closed { l / 4.0 } else { s.min(l - s) };
        let second = |h: f64| {
            let gp = field.grad_norm(c.point_at(field, wrap(s + h, l, c.closed), tol));
            let gm = field.grad_norm(c.point_at(field, wrap(s - h, l, c.closed), tol));
            (gp + gm - 2.0 * g) / (h * h)
        };
        let mut h = (0.05 * l).min(0.5 * margin).min(0.05);
        let mut prev = second(h);
        let mut accepted = None;
        for _ in 0..6 {
            h *= 0.5;
            let cur = second(h);
            if cur > 1e-6 * c0 && (cur - prev).abs() <= 0.1 * cur.abs() {
                accepted = Some(cur);
                break;
            }
            prev = cur;
        }
        match accepted {
            Some(g2) => minima.push(CriticalPoint {
                component: ci,
                arc: s,
                point,
                g,
                g_second: g2,
            }),
            None => {
                reason.get_or_insert_with(|| {
                    format!(
                        "degenerate minimum of |grad B0| at ({:.6}, {:.6}): second difference {prev:.3e} does not settle",
                        point[0], point[1]
                    )
                });
                minima.push(CriticalPoint {
                    component: ci,
                    arc: s,
                    point,
                    g,
                    g_second: prev,
                });
            }
        }
    }
    let classification = if reason.is_some() {
        Classification::ViolatesAssumption
    } else {
        Classification::FiniteNondegenerate
    };
    Ok(CriticalFieldReport {
        c0,
        lambda0,
        gamma_coef,
        g_max,
        classification,
        minima,
        reason,
    })
}

fn wrap(s: f64, l: f64, closed: bool) -> f64 {
    if closed {
        s.rem_euclid(l)
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::field::{Builtin, FieldProfile};
    use crate::domain::omega::Omega;
    use crate::domain::zero_set::extract_zero_set;

    const L0: f64 = 0.5698;

    fn classify(b: Builtin, omega: &Omega) -> CriticalFieldReport {
        let z = extract_zero_set(&FieldProfile::Builtin(b), omega, 0.01).unwrap();
        classify_assumption(&z, L0).unwrap()
    }

    #[test]
    fn chord_is_whole_curve() {
        let r = classify(Builtin::Linear, &Omega::unit_disc());
        assert_eq!(r.classification, Classification::WholeCurve);
        assert!((r.c0 - 2f64.sqrt()).abs() < 1e-14);
        assert!((r.gamma_coef - L0.powf(-1.5) / 2f64.sqrt()).abs() < 1e-12);
        assert!((r.h_c2(10.0) - 100.0 * r.gamma_coef).abs() < 1e-9);
    }

    #[test]
    fn parabola_has_one_nondegenerate_minimum() {
        let r = classify(Builtin::Parabola, &Omega::unit_disc());
        assert_eq!(r.classification, Classification::FiniteNondegenerate);
        assert_eq!(r.minima.len(), 1);
        assert!((r.c0 - 1.0).abs() < 1e-12);
        let m = &r.minima[0];
        assert!(m.point[0].abs() < 1e-5 && m.point[1].abs() < 1e-9);
        // g = sqrt(1 + 4x^2) and ds = dx at the vertex, so g'' = 4
        assert!((m.g_second - 4.0).abs() < 0.05, "{}", m.g_second);
    }

    #[test]
    fn quartic_minimum_violates() {
        let r = classify(Builtin::Cubic, &Omega::unit_disc());
        assert_eq!(r.classification, Classification::ViolatesAssumption);
        assert!(r.reason.unwrap().contains("degenerate"));
    }

    #[test]
    fn boundary_minimum_violates() {
        // on the disc centred at (1, 1) the parabola's vertex lies outside; g is
        // smallest where Γ enters Ω
        let omega = Omega::disc([1.0, 1.0], 0.9).unwrap();
        let r = classify(Builtin::Parabola, &omega);
        assert_eq!(r.classification, Classification::ViolatesAssumption);
        assert!(r.reason.unwrap().contains("boundary"));
    }
}
