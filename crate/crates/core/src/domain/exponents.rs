//! Exponent bookkeeping for remainders `κ^r` against the energy scale `ρ^{5/2} κ`
//! with `ρ = κ^{-a}`.

use num_rational::Ratio;
use serde::Serialize;

pub type Exponent = Ratio<i64>;

/// The two tracked remainder orders: the upper bound `κ^{15/16}` and the lower bound `κ^{11/12}`.
pub fn tracked_remainders() -> [(&'static str, Exponent); 2] {
    [("upper", Ratio::new(15, 16)), ("lower", Ratio::new(11, 12))]
}

/// Lower end of the admissible band `κ^{-1/30} ≪ ρ`.
pub fn rho_band_exponent() -> Exponent {
    Ratio::new(1, 30)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentCheck {
    pub remainder: String,
    pub rho_exponent: String,
    /// `1 - (5/2) a - r`; the remainder is negligible iff this is positive.
    pub margin: String,
    /// Largest `a` for which `κ^r ≪ ρ^{5/2} κ`: `2(1 - r)/5`.
    pub threshold: String,
    pub negligible: bool,
}

/// `κ^r ≪ ρ^{5/2} κ` for `ρ = κ^{-a}`.
pub fn check_remainder(r: Exponent, a: Exponent) -> ExponentCheck {
    let one = Ratio::from_integer(1);
    let margin = one - Ratio::new(5, 2) * a - r;
    let threshold = Ratio::new(2, 5) * (one - r);
    ExponentCheck {
        remainder: r.to_string(),
        rho_exponent: a.to_string(),
        margin: margin.to_string(),
        threshold: threshold.to_string(),
        negligible: margin > Ratio::from_integer(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_bound_threshold_is_the_rho_band() {
        let r = Ratio::new(11, 12);
        assert_eq!(Ratio::new(2, 5) * (Ratio::from_integer(1) - r), rho_band_exponent());
        assert!(check_remainder(r, Ratio::new(1, 31)).negligible);
        assert!(!check_remainder(r, rho_band_exponent()).negligible);
        assert_eq!(check_remainder(r, Ratio::new(1, 60)).margin, "1/24");
    }

    #[test]
    fn upper_bound_needs_a_narrower_band() {
        let c = check_remainder(Ratio::new(15, 16), Ratio::new(1, 35));
        assert!(!c.negligible);
        assert_eq!(c.threshold, "1/40");
    }
}
