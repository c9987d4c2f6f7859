use std::sync::OnceLock;

use glref::domain::{
    check_remainder, classify_assumption, disk_covering, extract_zero_set, leading_order_energy, Builtin,
    CriticalFieldReport, EReference, FieldProfile, Omega, ZeroCurve, QUADRATURE_RTOL,
};
use glref::optimize::golden_section;
use glref::spectral::{Accuracy, Potential, Spectrum};
use glref::tridiag::SymTridiagonal;
use glref::Grid1D;
use nalgebra::DMatrix;
use num_rational::Ratio;
use proptest::prelude::*;

const LAMBDA0: f64 = 0.569_820_317_4;
const U4: f64 = 0.328;

fn spectrum() -> &'static (Spectrum, f64) {
    static S: OnceLock<(Spectrum, f64)> = OnceLock::new();
    S.get_or_init(|| {
        let s = Spectrum::new(Grid1D::new(8.0, 801).unwrap(), Potential::Montgomery, Accuracy::Discrete);
        let c = s.ground_constants((-1.0, 0.0)).unwrap();
        (s, c.lambda0)
    })
}

fn chord() -> &'static (ZeroCurve, CriticalFieldReport) {
    static C: OnceLock<(ZeroCurve, CriticalFieldReport)> = OnceLock::new();
    C.get_or_init(|| {
        let c = extract_zero_set(&FieldProfile::Builtin(Builtin::Linear), &Omega::unit_disc(), 0.01).unwrap();
        let r = classify_assumption(&c, LAMBDA0).unwrap();
        (c, r)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn band_function_stays_above_its_minimum(alpha in -1.5f64..0.5) {
        let (s, l0) = spectrum();
        prop_assert!(s.lambda(alpha).unwrap() >= l0 - 1e-10);
    }

    #[test]
    fn sturm_eigenvalues_match_dense_solver(diag in prop::collection::vec(-5.0f64..5.0, 2..24), seed in 0u64..1000) {
        let n = diag.len();
        let off: Vec<f64> = (0..n - 1).map(|i| ((i as u64 * 7919 + seed) % 17) as f64 / 4.0 - 2.0).collect();
        let m = SymTridiagonal::new(diag.clone(), off.clone());
        let dense = DMatrix::from_fn(n, n, |i, j| {
            if i == j { diag[i] } else if i + 1 == j { off[i] } else if j + 1 == i { off[j] } else { 0.0 }
        });
        let mut ev: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (k, e) in ev.iter().enumerate() {
            prop_assert!((m.eigenvalue(k) - e).abs() <= 1e-9 * (1.0 + e.abs()));
        }
    }

    #[test]
    fn golden_section_finds_parabola_vertex(c in -0.9f64..0.9, a in 0.1f64..10.0) {
        let (x, _) = golden_section(|x| Ok::<_, ()>(a * (x - c) * (x - c)), -1.0, 1.0, 1e-10).unwrap();
        prop_assert!((x - c).abs() < 1e-8);
    }

    #[test]
    fn remainder_negligible_iff_below_threshold(rn in 1i64..40, rd in 41i64..80, an in 0i64..20, ad in 21i64..200) {
        let (r, a) = (Ratio::new(rn, rd), Ratio::new(an, ad));
        let threshold = Ratio::new(2, 5) * (Ratio::from_integer(1) - r);
        prop_assert_eq!(check_remainder(r, a).negligible, a < threshold);
    }

    #[test]
    fn regular_polygon_area_and_depth(n in 3usize..12, phase in 0.0f64..6.3, r in 0.5f64..3.0, reverse in any::<bool>()) {
        let mut v: Vec<[f64; 2]> = (0..n)
            .map(|k| {
                let t = phase + std::f64::consts::TAU * k as f64 / n as f64;
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        if reverse {
            v.reverse();
        }
        let o = Omega::polygon(v).unwrap();
        let pi_n = std::f64::consts::PI / n as f64;
        prop_assert!((o.area() - 0.5 * n as f64 * (2.0 * pi_n).sin() * r * r).abs() < 1e-12 * r * r);
        prop_assert!((o.signed_distance([0.0, 0.0]) + r * pi_n.cos()).abs() < 1e-12 * r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Constant |grad B0| along the chord: the integral reduces to the integrand times |Gamma|.
    #[test]
    fn leading_energy_on_chord_matches_closed_form(frac in 0.3f64..1.2) {
        let (curve, report) = chord();
        let e = EReference::surrogate_only(LAMBDA0, U4);
        let kappa = 40.0;
        let h = frac * report.h_c2(kappa);
        let got = leading_order_energy(curve, kappa, h, &e, Some(report), QUADRATURE_RTOL).unwrap();
        let l = 2f64.sqrt() * h / (kappa * kappa);
        let closed = kappa * 2.0 * l.cbrt() * e.value(l).unwrap().0;
        prop_assert!((got.value - closed).abs() <= 1e-9 * closed.abs().max(1e-12));
        prop_assert!(got.value <= 0.0);
        if frac >= 1.0 {
            prop_assert_eq!(got.value, 0.0);
        }
    }

    #[test]
    fn chord_covering_is_disjoint_and_inside(ell in 0.01f64..0.05) {
        let (curve, _) = chord();
        let c = disk_covering(curve, ell).unwrap();
        prop_assert!(c.disjoint && c.inside);
        prop_assert!(c.arc_defect <= 1e-12);
        for a in &c.centers {
            prop_assert!((a[1] - a[0]).abs() <= 1e-12);
        }
        prop_assert!((c.count as f64 - 2.0 / (2.0 * ell)).abs() <= 4.0);
    }
}

/// Chord-rule arc length converges at fifth order to the closed-form parabola length.
#[test]
fn zero_set_length_converges_at_fifth_order() {
    let xm = ((5f64.sqrt() - 1.0) / 2.0).sqrt();
    let prim = |x: f64| x * (1.0 + 4.0 * x * x).sqrt() / 2.0 + (2.0 * x).asinh() / 4.0;
    let exact = 2.0 * prim(xm);
    let f = FieldProfile::Builtin(Builtin::Parabola);
    let hs = [0.08, 0.04];
    let errs: Vec<f64> = hs
        .iter()
        .map(|&h| (extract_zero_set(&f, &Omega::unit_disc(), h).unwrap().length() - exact).abs())
        .collect();
    let order = (errs[0] / errs[1]).log2();
    assert!(order > 4.0, "{errs:?}, order {order}");
}
