use std::collections::BTreeMap;

use glref::domain::{FieldProfile, Omega, SampledField};
use glref::io::parse_key_values;
use glref::strip::ELTable;
use proptest::prelude::*;

proptest! {
    #[test]
    fn parsers_never_panic(text in "\\PC{0,200}") {
        let _ = parse_key_values(&text);
        let _ = SampledField::parse_csv(&text);
        let _ = Omega::parse_polygon(&text);
        let _ = ELTable::from_jsonl(&text);
    }

    #[test]
    fn numeric_lines_never_panic(rows in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3, -1e3f64..1e3), 0..30)) {
        let csv: String = rows.iter().map(|(x, y, v)| format!("{x},{y},{v}\n")).collect();
        let _ = SampledField::parse_csv(&csv);
        let poly: String = rows.iter().map(|(x, y, _)| format!("{x} {y}\n")).collect();
        if let Ok(o) = Omega::parse_polygon(&poly) {
            prop_assert!(o.area() > 0.0);
        }
    }

    #[test]
    fn key_values_round_trip(map in prop::collection::btree_map("[a-z][a-z0-9_.-]{0,12}", "[A-Za-z0-9 ,.+-]{0,20}", 0..10)) {
        let text: String = map.iter().map(|(k, v)| format!("{k} = {v}  # note\n")).collect();
        let parsed = parse_key_values(&text).unwrap();
        let expected: BTreeMap<String, String> = map.iter().map(|(k, v)| (k.clone(), v.trim().to_string())).collect();
        prop_assert_eq!(parsed, expected);
    }

    #[test]
    fn lattice_csv_reproduces_linear_fields(nx in 4usize..8, ny in 4usize..8, a in -2.0f64..2.0, b in -2.0f64..2.0, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let mut text = String::from("x,y,B0\n");
        for i in 0..nx {
            for j in 0..ny {
                let (x, y) = (i as f64 * 0.5, j as f64 * 0.25);
                text.push_str(&format!("{x},{y},{}\n", a * x + b * y));
            }
        }
        let sampled = SampledField::parse_csv(&text).unwrap();
        let ([x0, y0], [x1, y1]) = sampled.bounds();
        prop_assert_eq!((x0, y0), (0.0, 0.0));
        prop_assert!((x1 - 0.5 * (nx - 1) as f64).abs() < 1e-15 && (y1 - 0.25 * (ny - 1) as f64).abs() < 1e-15);
        let p = [s * x1, t * y1];
        let f = FieldProfile::Sampled(sampled);
        prop_assert!((f.value(p) - (a * p[0] + b * p[1])).abs() < 1e-12);
        let g = f.gradient(p);
        prop_assert!((g[0] - a).abs() < 1e-10 && (g[1] - b).abs() < 1e-10);
    }
}

#[test]
fn duplicate_keys_are_rejected() {
    assert!(parse_key_values("a = 1\na = 2\n").is_err());
    assert!(parse_key_values("Upper = 1\n").is_err());
}

#[test]
fn polygon_rejects_self_intersection() {
    assert!(Omega::parse_polygon("0 0\n1 1\n1 0\n0 1\n").is_err());
}
