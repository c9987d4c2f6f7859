//! The leading-order energy `κ ∫_Γ L^{1/3} E(L) ds` with `L = |∇B0| H / κ²`,
//! its near-critical form, and the ratio between them.

use serde::Serialize;

use super::classify::{Classification, CriticalFieldReport};
use super::field::FieldProfile;
use super::zero_set::{chord_arc, Component, ZeroCurve};
use crate::error::{Error, Result};
use crate::strip::ELTable;

/// Default relative tolerance of the adaptive trapezoid rule.
pub const QUADRATURE_RTOL: f64 = 1e-10;

/// `E(L)` from an E-table: monotone cubic Hermite through the rows below the
/// critical value plus the exact anchor `E(λ0^{-3/2}) = 0`, clamped to 0 above.
#[derive(Clone, Debug)]
pub struct EReference {
    pub lambda0: f64,
    pub u0_l4_fourth: f64,
    ls: Vec<f64>,
    es: Vec<f64>,
    slopes: Vec<f64>,
    /// Use the near-critical closed form between the last table row and the critical value.
    surrogate: bool,
}

impl EReference {
    pub fn from_table(table: &ELTable, surrogate: bool) -> Result<Self> {
        let lc = table.lambda0.powf(-1.5);
        let mut pts: Vec<(f64, f64)> = table
            .rows
            .iter()
            .filter(|r| r.l < lc)
            .map(|r| (r.l, r.estimate.min(0.0)))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| a.0 == b.0);
        if !surrogate {
            pts.push((lc, 0.0));
        }
        let ls: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let es: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let slopes = pchip_slopes(&ls, &es);
        Ok(Self {
            lambda0: table.lambda0,
            u0_l4_fourth: table.u0_l4_fourth,
            ls,
            es,
            slopes,
            surrogate,
        })
    }

    /// Pure near-critical closed form, no table.
    pub fn surrogate_only(lambda0: f64, u0_l4_fourth: f64) -> Self {
        Self {
            lambda0,
            u0_l4_fourth,
            ls: Vec::new(),
            es: Vec::new(),
            slopes: Vec::new(),
            surrogate: true,
        }
    }

    pub fn critical_l(&self) -> f64 {
        self.lambda0.powf(-1.5)
    }

    /// `-(L^{2/3}/2)(L^{-2/3} - λ0)² / ||u0||_4^4`
    pub fn near_critical(&self, l: f64) -> f64 {
        let gap = l.powf(-2.0 / 3.0) - self.lambda0;
        if gap <= 0.0 {
            return 0.0;
        }
        -0.5 * l.powf(2.0 / 3.0) * gap * gap / self.u0_l4_fourth
    }

    /// `(E(L), surrogate used)`.
    pub fn value(&self, l: f64) -> Result<(f64, bool)> {
        if l >= self.critical_l() {
            return Ok((0.0, false));
        }
        let last = self.ls.last().copied();
        if self.surrogate && last.is_none_or(|m| l >= m) {
            return Ok((self.near_critical(l), true));
        }
        match (self.ls.first(), last) {
            (Some(&lo), Some(hi)) if l >= lo && l <= hi => Ok((pchip_eval(&self.ls, &self.es, &self.slopes, l), false)),
            _ => Err(Error::OutsideTable { l }),
        }
    }
}

/// Fritsch-Carlson slopes; monotone data give a monotone interpolant.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] > 0.0 {
            let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    m
}

fn pchip_eval(x: &[f64], y: &[f64], m: &[f64], t: f64) -> f64 {
    if x.len() == 1 {
        return y[0];
    }
    let k = match x.binary_search_by(|v| v.total_cmp(&t)) {
        Ok(k) => return y[k],
        Err(k) => (k.max(1) - 1).min(x.len() - 2),
    };
    let h = x[k + 1] - x[k];
    let s = (t - x[k]) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    h00 * y[k] + h10 * h * m[k] + h01 * y[k + 1] + h11 * h * m[k + 1]
}

struct Quadrature<'a> {
    field: &'a FieldProfile,
    tol: f64,
    rtol: f64,
    /// Where the integrand has a kink: `kink(g) = 0`.
    kink: &'a dyn Fn(f64) -> f64,
    evals: usize,
}

impl Quadrature<'_> {
    /// `∫ f(|∇B0|) ds` over one component, split at the vertices, at `extra`
    /// arc positions and at every root of `kink`.
    fn component(&mut self, c: &Component, extra: &[f64], f: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
        let mut nodes: Vec<[f64; 2]> = Vec::new();
        let mut extra: Vec<f64> = extra.to_vec();
        extra.sort_by(f64::total_cmp);
        let mut e = extra.iter().peekable();
        for k in 0..c.points.len() {
            while let Some(&&s) = e.peek() {
                if s < c.arc[k] {
                    if s > c.arc[k.saturating_sub(1)] {
                        nodes.push(c.point_at(self.field, s, self.tol));
                    }
                    e.next();
                } else {
                    break;
                }
            }
            nodes.push(c.points[k]);
        }
        let scale = c.length().max(f64::MIN_POSITIVE);
        let mut total = 0.0;
        for w in nodes.windows(2) {
            let (p, q) = (w[0], w[1]);
            let (kp, kq) = ((self.kink)(self.field.grad_norm(p)), (self.kink)(self.field.grad_norm(q)));
            if kp * kq < 0.0 {
                let r = self.kink_root(p, q, kp);
                total += self.segment(p, r, f, scale)?;
                total += self.segment(r, q, f, scale)?;
            } else {
                total += self.segment(p, q, f, scale)?;
            }
        }
        Ok(total)
    }

    fn kink_root(&self, p: [f64; 2], q: [f64; 2], kp: f64) -> [f64; 2] {
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let at = |t: f64| self.field.project([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])], self.tol);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            let km = (self.kink)(self.field.grad_norm(at(m)));
            if (km < 0.0) == (kp < 0.0) {
                a = m;
            } else {
                b = m;
            }
            if b - a < 1e-15 {
                break;
            }
        }
        at(0.5 * (a + b))
    }

    fn segment(&mut self, p: [f64; 2], q: [f64; 2], f: &dyn Fn(f64) -> Result<f64>, scale: f64) -> Result<f64> {
        let fp = f(self.field.grad_norm(p))?;
        let fq = f(self.field.grad_norm(q))?;
        let len = chord_arc(self.field, p, q, self.tol);
        self.evals += 2;
        self.adapt(p, q, fp, fq, len, f, scale, 0)
    }

    #[allow(clippy::too_many_arguments)]
    fn adapt(
        &mut self,
        p: [f64; 2],
        q: [f64; 2],
        fp: f64,
        fq: f64,
        len: f64,
        f: &dyn Fn(f64) -> Result<f64>,
        scale: f64,
        depth: usize,
    ) -> Result<f64> {
        let m = self.field.project([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])], self.tol);
        let fm = f(self.field.grad_norm(m))?;
        self.evals += 1;
        let (l1, l2) = (chord_arc(self.field, p, m, self.tol), chord_arc(self.field, m, q, self.tol));
        let coarse = 0.5 * len * (fp + fq);
        let fine = 0.5 * l1 * (fp + fm) + 0.5 * l2 * (fm + fq);
        let mag = fp.abs().max(fq.abs()).max(fm.abs());
        if depth >= 40 || (fine - coarse).abs() <= self.rtol * mag * len.max(1e-3 * scale) {
            return Ok(fine);
        }
        Ok(self.adapt(p, m, fp, fm, l1, f, scale, depth + 1)? + self.adapt(m, q, fm, fq, l2, f, scale, depth + 1)?)
    }
}

fn minima_by_component(curve: &ZeroCurve, report: Option<&CriticalFieldReport>) -> Vec<Vec<f64>> {
    let mut v = vec![Vec::new(); curve.components.len()];
    if let Some(r) = report {
        for m in &r.minima {
            if m.component < v.len() {
                v[m.component].push(m.arc);
            }
        }
    }
    v
}

#[derive(Clone, Debug, Serialize)]
pub struct LeadingReport {
    pub kappa: f64,
    pub h: f64,
    /// `κ ∫_Γ L^{1/3} E(L) ds`
    pub value: f64,
    /// Whether the near-critical closed form stood in for table values somewhere on `Γ`.
    pub surrogate_used: bool,
    pub evaluations: usize,
}

/// `κ ∫_Γ L^{1/3} E(L) ds`, `L = |∇B0| H/κ²`. `report` supplies extra breakpoints at `Γ0`.
pub fn leading_order_energy(
    curve: &ZeroCurve,
    kappa: f64,
    h: f64,
    e: &EReference,
    report: Option<&CriticalFieldReport>,
    rtol: f64,
) -> Result<LeadingReport> {
    if !(kappa > 0.0 && h > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa and H must be positive, got {kappa}, {h}")));
    }
    let hk = h / (kappa * kappa);
    let lc = e.critical_l();
    let used = std::cell::Cell::new(false);
    let integrand = |g: f64| -> Result<f64> {
        let l = g * hk;
        let (v, s) = e.value(l)?;
        if s {
            used.set(true);
        }
        Ok(l.cbrt() * v)
    };
    let kink = |g: f64| g * hk - lc;
    let mut q = Quadrature {
        field: &curve.field,
        tol: curve.tolerance,
        rtol,
        kink: &kink,
        evals: 0,
    };
    let extra = minima_by_component(curve, report);
    let mut total = 0.0;
    for (c, x) in curve.components.iter().zip(&extra) {
        total += q.component(c, x, &integrand)?;
    }
    Ok(LeadingReport {
        kappa,
        h,
        value: kappa * total,
        surrogate_used: used.get(),
        evaluations: q.evals,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NearCriticalReport {
    pub kappa: f64,
    pub rho: f64,
    pub h: f64,
    /// `∫_Γ ((H/κ² |∇B0|)^{-2/3} - λ0)_+² ds`
    pub integral: f64,
    /// `-κ λ0^{-3/2} / (2 ||u0||_4^4) · integral`
    pub energy: f64,
    /// `|Γ_κ|`, the length where `H/κ² |∇B0| < λ0^{-3/2}`.
    pub gamma_kappa_len: f64,
}

/// Near-critical energy at `H = (γ - ρ) κ²`.
pub fn near_critical_energy(
    curve: &ZeroCurve,
    report: &CriticalFieldReport,
    kappa: f64,
    rho: f64,
    u0_l4_fourth: f64,
    rtol: f64,
) -> Result<NearCriticalReport> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1), got {rho}")));
    }
    if report.classification == Classification::ViolatesAssumption {
        return Err(Error::InvalidArgument(format!(
            "assumption on the minima of |grad B0| violated: {}",
            report.reason.as_deref().unwrap_or("unknown")
        )));
    }
    let h = (report.gamma_coef - rho) * kappa * kappa;
    near_critical_at(curve, report, kappa, h, u0_l4_fourth, rtol)
}

/// The near-critical display at an arbitrary `H > 0`.
pub fn near_critical_at(
    curve: &ZeroCurve,
    report: &CriticalFieldReport,
    kappa: f64,
    h: f64,
    u0_l4_fourth: f64,
    rtol: f64,
) -> Result<NearCriticalReport> {
    if !(kappa > 0.0 && h > 0.0 && u0_l4_fourth > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kappa, H and ||u0||_4^4 must be positive, got {kappa}, {h}, {u0_l4_fourth}"
        )));
    }
    let l0 = report.lambda0;
    let lc = l0.powf(-1.5);
    let hk = h / (kappa * kappa);
    let kink = |g: f64| g * hk - lc;
    let extra = minima_by_component(curve, Some(report));
    let mut q = Quadrature {
        field: &curve.field,
        tol: curve.tolerance,
        rtol,
        kink: &kink,
        evals: 0,
    };
    let integrand = |g: f64| -> Result<f64> {
        let gap = ((hk * g).powf(-2.0 / 3.0) - l0).max(0.0);
        Ok(gap * gap)
    };
    // the indicator is constant between kink roots, so the trapezoid rule is exact on each piece
    let indicator = |g: f64| -> Result<f64> { Ok(if hk * g < lc { 1.0 } else { 0.0 }) };
    let mut integral = 0.0;
    let mut support = 0.0;
    for (c, x) in curve.components.iter().zip(&extra) {
        integral += q.component(c, x, &integrand)?;
        support += q.component(c, x, &indicator)?;
    }
    Ok(NearCriticalReport {
        kappa,
        rho: report.gamma_coef - hk,
        h,
        integral,
        energy: -kappa * lc / (2.0 * u0_l4_fourth) * integral,
        gamma_kappa_len: support,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub rho: f64,
    pub h: f64,
    pub leading: f64,
    pub near_critical: f64,
    /// `leading / near_critical`; 1 when both vanish.
    pub ratio: f64,
    pub surrogate_used: bool,
}

/// Ratio of the leading-order energy to its near-critical form at `H = (γ - ρ)κ²`.
/// The E-reference and the classification must share `λ0`.
pub fn consistency_with_leading(
    curve: &ZeroCurve,
    report: &CriticalFieldReport,
    kappa: f64,
    h: f64,
    e: &EReference,
    rtol: f64,
) -> Result<ConsistencyReport> {
    if (report.lambda0 - e.lambda0).abs() > 1e-12 * e.lambda0 {
        return Err(Error::InvalidArgument(format!(
            "classification used lambda0 = {}, E-reference uses {}",
            report.lambda0, e.lambda0
        )));
    }
    let leading = leading_order_energy(curve, kappa, h, e, Some(report), rtol)?;
    let near = near_critical_at(curve, report, kappa, h, e.u0_l4_fourth, rtol)?;
    let ratio = if near.energy == 0.0 && leading.value == 0.0 {
        1.0
    } else {
        leading.value / near.energy
    };
    Ok(ConsistencyReport {
        rho: report.gamma_coef - h / (kappa * kappa),
        h,
        leading: leading.value,
        near_critical: near.energy,
        ratio,
        surrogate_used: leading.surrogate_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::classify::classify_assumption;
    use crate::domain::field::Builtin;
    use crate::domain::omega::Omega;
    use crate::domain::zero_set::extract_zero_set;
    use crate::strip::ELRow;

    const L0: f64 = 0.5698;
    const U4: f64 = 0.3286;

    fn row(l: f64, e: f64) -> ELRow {
        ELRow {
            l,
            b: l.powf(-2.0 / 3.0),
            r_list: vec![],
            energies: vec![],
            per_length: vec![],
            estimate: e,
            fit_exponent: 1.0,
            fit_c: 0.0,
            fit_residual: 0.0,
            periodic: 0.0,
            bracket_c: 0.0,
            converged: true,
        }
    }

    /// Table sampled from the near-critical form with a smooth deformation.
    fn table() -> ELTable {
        let s = EReference::surrogate_only(L0, U4);
        let lc = L0.powf(-1.5);
        let rows = (0..30)
            .map(|i| {
                let l = 1.0 + (lc - 1.0) * i as f64 / 30.0;
                row(l, s.near_critical(l) * (1.0 + 0.1 * (lc - l)))
            })
            .collect();
        ELTable {
            lambda0: L0,
            critical_l: lc,
            u0_l4_fourth: U4,
            rows,
        }
    }

    fn parabola() -> (ZeroCurve, CriticalFieldReport) {
        let z = extract_zero_set(&FieldProfile::Builtin(Builtin::Parabola), &Omega::unit_disc(), 0.02).unwrap();
        let r = classify_assumption(&z, L0).unwrap();
        (z, r)
    }

    #[test]
    fn interpolant_is_monotone_and_clamped() {
        let e = EReference::from_table(&table(), false).unwrap();
        let lc = e.critical_l();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=400 {
            let l = 1.0 + (lc + 0.2 - 1.0) * i as f64 / 400.0;
            let v = e.value(l).unwrap().0;
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        assert_eq!(e.value(lc + 0.1).unwrap().0, 0.0);
        assert!(matches!(e.value(0.5), Err(Error::OutsideTable { .. })));
        let s = EReference::from_table(&table(), true).unwrap();
        assert!(s.value(lc - 1e-4).unwrap().1);
    }

    #[test]
    fn leading_vanishes_above_critical_field() {
        let (z, r) = parabola();
        let e = EReference::from_table(&table(), false).unwrap();
        let kappa = 50.0;
        let h = 1.01 * r.h_c2(kappa);
        let v = leading_order_energy(&z, kappa, h, &e, Some(&r), QUADRATURE_RTOL).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn constant_gradient_reduces_to_closed_form() {
        let z = extract_zero_set(&FieldProfile::Builtin(Builtin::Linear), &Omega::unit_disc(), 0.05).unwrap();
        let e = EReference::from_table(&table(), false).unwrap();
        let (kappa, h) = (20.0, 800.0);
        let l = 2f64.sqrt() * h / (kappa * kappa);
        let expect = kappa * 2.0 * l.cbrt() * e.value(l).unwrap().0;
        let v = leading_order_energy(&z, kappa, h, &e, None, QUADRATURE_RTOL).unwrap();
        assert!((v.value - expect).abs() <= 1e-12 * expect.abs());
    }

    #[test]
    fn leading_agrees_with_uniform_fine_quadrature() {
        let (z, r) = parabola();
        let e = EReference::from_table(&table(), false).unwrap();
        let kappa = 50.0;
        let h = 0.7 * r.h_c2(kappa);
        let v = leading_order_energy(&z, kappa, h, &e, Some(&r), QUADRATURE_RTOL).unwrap();
        // oracle: x-parametrization of y = x^2, ds = sqrt(1 + 4x^2) dx, composite Simpson on 2e5 cells
        let xm = ((5f64.sqrt() - 1.0) / 2.0).sqrt();
        let n = 200_000;
        let hk = h / (kappa * kappa);
        let f = |x: f64| {
            let g = (1.0 + 4.0 * x * x).sqrt();
            let l = g * hk;
            l.cbrt() * e.value(l).unwrap().0 * g
        };
        let dx = 2.0 * xm / n as f64;
        let mut s = f(-xm) + f(xm);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(-xm + i as f64 * dx);
        }
        let oracle = kappa * s * dx / 3.0;
        assert!(v.value < 0.0);
        assert!(((v.value - oracle) / oracle).abs() < 1e-6, "{} vs {}", v.value, oracle);
    }

    #[test]
    fn whole_curve_integral_expansion() {
        let z = extract_zero_set(&FieldProfile::Builtin(Builtin::Linear), &Omega::unit_disc(), 0.05).unwrap();
        let r = classify_assumption(&z, L0).unwrap();
        let rho = 1e-3;
        let n = near_critical_energy(&z, &r, 30.0, rho, U4, QUADRATURE_RTOL).unwrap();
        let expansion = (2.0 / 3.0 * r.c0 * L0.powf(2.5) * rho).powi(2) * 2.0;
        assert!((n.integral / expansion - 1.0).abs() < 5e-3);
        assert!((n.gamma_kappa_len - 2.0).abs() < 1e-12);
    }

    #[test]
    fn support_length_scales_like_sqrt_rho() {
        let (z, r) = parabola();
        let lens: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&rho| near_critical_energy(&z, &r, 40.0, rho, U4, QUADRATURE_RTOL).unwrap().gamma_kappa_len)
            .collect();
        let slope = (lens[0] / lens[2]).ln() / 100f64.ln();
        assert!((slope - 0.5).abs() < 0.05, "{slope}");
    }

    #[test]
    fn consistency_ratio_approaches_one() {
        let (z, r) = parabola();
        let e = EReference::surrogate_only(L0, U4);
        let kappa = 40.0;
        let dev: Vec<f64> = [1e-2, 1e-3]
            .iter()
            .map(|&rho| {
                let h = (r.gamma_coef - rho) * kappa * kappa;
                (consistency_with_leading(&z, &r, kappa, h, &e, QUADRATURE_RTOL).unwrap().ratio - 1.0).abs()
            })
            .collect();
        assert!(dev[0] < 0.2 && dev[1] < dev[0]);
        let above = consistency_with_leading(&z, &r, kappa, 1.1 * r.h_c2(kappa), &e, QUADRATURE_RTOL).unwrap();
        assert_eq!((above.leading, above.near_critical, above.ratio), (0.0, 0.0, 1.0));
    }
}
