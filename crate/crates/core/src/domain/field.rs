//! Field profiles `B0`: analytic builtins and bicubic interpolation of sampled grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Analytic fields on the plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    /// `y - x`
    Linear,
    /// `y - x^2`
    Parabola,
    /// `y - x^3`; `|grad B0|` has a degenerate (quartic) minimum at the origin.
    Cubic,
    /// `1`; no zero set.
    Constant,
}

impl Builtin {
    pub fn parse(name: &str) -> Option<Self> {
        match name.trim() {
            "linear" | "y-x" => Some(Self::Linear),
            "parabola" | "y-x^2" | "y-x2" => Some(Self::Parabola),
            "cubic" | "y-x^3" | "y-x3" => Some(Self::Cubic),
            "constant" | "one" | "1" => Some(Self::Constant),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear => "y-x",
            Self::Parabola => "y-x^2",
            Self::Cubic => "y-x^3",
            Self::Constant => "1",
        }
    }
}

/// Bicubic interpolant of samples on a rectangular lattice. Derivatives at the
/// nodes come from centered differences (one-sided at the edges).
#[derive(Clone, Debug)]
pub struct SampledField {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `values[i * ys.len() + j] = B0(xs[i], ys[j])`
    values: Vec<f64>,
    dx: Vec<f64>,
    dy: Vec<f64>,
    dxy: Vec<f64>,
}

impl SampledField {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let (nx, ny) = (xs.len(), ys.len());
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidArgument(format!("sampled grid needs at least 4x4 points, got {nx}x{ny}")));
        }
        if values.len() != nx * ny {
            return Err(Error::InvalidArgument(format!("expected {} samples, got {}", nx * ny, values.len())));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&xs) || !increasing(&ys) {
            return Err(Error::InvalidArgument("lattice coordinates must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        let at = |i: usize, j: usize| values[i * ny + j];
        let deriv = |c: &[f64], k: usize, f: &dyn Fn(usize) -> f64| -> f64 {
            let n = c.len();
            if k == 0 {
                (f(1) - f(0)) / (c[1] - c[0])
            } else if k == n - 1 {
                (f(n - 1) - f(n - 2)) / (c[n - 1] - c[n - 2])
            } else {
                (f(k + 1) - f(k - 1)) / (c[k + 1] - c[k - 1])
            }
        };
        let mut dx = vec![0.0; nx * ny];
        let mut dy = vec![0.0; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                dx[i * ny + j] = deriv(&xs, i, &|k| at(k, j));
                dy[i * ny + j] = deriv(&ys, j, &|k| at(i, k));
            }
        }
        let mut dxy = vec![0.0; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                dxy[i * ny + j] = deriv(&xs, i, &|k| dy[k * ny + j]);
            }
        }
        Ok(Self { xs, ys, values, dx, dy, dxy })
    }

    /// Parses CSV lines `x,y,B0` (header optional, `#` comments) on a full rectangular lattice.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut pts: Vec<(f64, f64, f64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected 3 columns x,y,B0, found {}", cols.len()),
                });
            }
            let parsed: std::result::Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
            match parsed {
                Ok(v) => pts.push((v[0], v[1], v[2])),
                Err(_) if pts.is_empty() && cols.iter().all(|c| c.parse::<f64>().is_err()) => continue,
                Err(e) => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: e.to_string(),
                    })
                }
            }
        }
        let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        for v in [&mut xs, &mut ys] {
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::Parse {
                    line: 0,
                    message: "non-finite coordinate".into(),
                });
            }
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        let (nx, ny) = (xs.len(), ys.len());
        if nx.saturating_mul(ny) != pts.len() {
            return Err(Error::Parse {
                line: 0,
                message: format!("{} samples do not form a {nx}x{ny} lattice", pts.len()),
            });
        }
        let mut values = vec![f64::NAN; nx * ny];
        for (x, y, v) in pts {
            let i = xs.binary_search_by(|c| c.total_cmp(&x)).map_err(|_| Error::Parse {
                line: 0,
                message: "inconsistent lattice".into(),
            })?;
            let j = ys.binary_search_by(|c| c.total_cmp(&y)).map_err(|_| Error::Parse {
                line: 0,
                message: "inconsistent lattice".into(),
            })?;
            if !values[i * ny + j].is_nan() {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("duplicate sample at ({x}, {y})"),
                });
            }
            values[i * ny + j] = v;
        }
        Self::new(xs, ys, values)
    }

    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        (
            [self.xs[0], self.ys[0]],
            [*self.xs.last().expect("non-empty"), *self.ys.last().expect("non-empty")],
        )
    }

    fn cell(c: &[f64], x: f64) -> usize {
        match c.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(c.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(c.len() - 2),
        }
    }

    /// Value, gradient and Hessian `[b, bx, by, bxx, bxy, byy]`.
    fn eval(&self, x: f64, y: f64) -> [f64; 6] {
        let ny = self.ys.len();
        let i = Self::cell(&self.xs, x);
        let j = Self::cell(&self.ys, y);
        let (x0, x1, y0, y1) = (self.xs[i], self.xs[i + 1], self.ys[j], self.ys[j + 1]);
        let (hx, hy) = (x1 - x0, y1 - y0);
        let u = (x - x0) / hx;
        let v = (y - y0) / hy;
        let idx = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)];
        let f = |k: usize| self.values[idx[k].0 * ny + idx[k].1];
        let fx = |k: usize| self.dx[idx[k].0 * ny + idx[k].1] * hx;
        let fy = |k: usize| self.dy[idx[k].0 * ny + idx[k].1] * hy;
        let fxy = |k: usize| self.dxy[idx[k].0 * ny + idx[k].1] * hx * hy;
        // Hermite basis and derivatives
        let h = |t: f64| [2.0 * t * t * t - 3.0 * t * t + 1.0, -2.0 * t * t * t + 3.0 * t * t, t * t * t - 2.0 * t * t + t, t * t * t - t * t];
        let dh = |t: f64| [6.0 * t * t - 6.0 * t, -6.0 * t * t + 6.0 * t, 3.0 * t * t - 4.0 * t + 1.0, 3.0 * t * t - 2.0 * t];
        let ddh = |t: f64| [12.0 * t - 6.0, -12.0 * t + 6.0, 6.0 * t - 4.0, 6.0 * t - 2.0];
        let combine = |bu: [f64; 4], bv: [f64; 4]| -> f64 {
            // corners: (0,0)->k0, (1,0)->k1, (0,1)->k2, (1,1)->k3
            let mut s = 0.0;
            for (a, ka) in [(0usize, 0usize), (1, 1)] {
                for (b, kb) in [(0usize, 0usize), (1, 2)] {
                    let k = ka + kb;
                    s += bu[a] * bv[b] * f(k);
                    s += bu[a + 2] * bv[b] * fx(k);
                    s += bu[a] * bv[b + 2] * fy(k);
                    s += bu[a + 2] * bv[b + 2] * fxy(k);
                }
            }
            s
        };
        let (hu, hv) = (h(u), h(v));
        let (du, dv) = (dh(u), dh(v));
        let (ddu, ddv) = (ddh(u), ddh(v));
        [
            combine(hu, hv),
            combine(du, hv) / hx,
            combine(hu, dv) / hy,
            combine(ddu, hv) / (hx * hx),
            combine(du, dv) / (hx * hy),
            combine(hu, ddv) / (hy * hy),
        ]
    }
}

/// The field `B0` together with its first and second derivatives.
#[derive(Clone, Debug)]
pub enum FieldProfile {
    Builtin(Builtin),
    Sampled(SampledField),
}

impl FieldProfile {
    pub fn builtin(name: &str) -> Result<Self> {
        Builtin::parse(name)
            .map(Self::Builtin)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown builtin field '{name}'")))
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Builtin(b) => b.name().to_string(),
            Self::Sampled(_) => "sampled grid (bicubic Hermite interpolation)".to_string(),
        }
    }

    pub fn value(&self, p: [f64; 2]) -> f64 {
        self.eval(p)[0]
    }

    pub fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        let e = self.eval(p);
        [e[1], e[2]]
    }

    pub fn grad_norm(&self, p: [f64; 2]) -> f64 {
        let g = self.gradient(p);
        g[0].hypot(g[1])
    }

    /// `[B0, B0_x, B0_y, B0_xx, B0_xy, B0_yy]`
    pub fn eval(&self, p: [f64; 2]) -> [f64; 6] {
        let [x, y] = p;
        match self {
            Self::Builtin(Builtin::Linear) => [y - x, -1.0, 1.0, 0.0, 0.0, 0.0],
            Self::Builtin(Builtin::Parabola) => [y - x * x, -2.0 * x, 1.0, -2.0, 0.0, 0.0],
            Self::Builtin(Builtin::Cubic) => [y - x * x * x, -3.0 * x * x, 1.0, -6.0 * x, 0.0, 0.0],
            Self::Builtin(Builtin::Constant) => [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            Self::Sampled(s) => s.eval(x, y),
        }
    }

    /// Curvature of the level line through `p`.
    pub fn level_curvature(&self, p: [f64; 2]) -> f64 {
        let [_, bx, by, bxx, bxy, byy] = self.eval(p);
        let g2 = bx * bx + by * by;
        (byy * bx * bx - 2.0 * bxy * bx * by + bxx * by * by).abs() / g2.powf(1.5)
    }

    /// Newton projection onto `{B0 = 0}` along the gradient.
    pub fn project(&self, mut p: [f64; 2], tol: f64) -> [f64; 2] {
        for _ in 0..50 {
            let e = self.eval(p);
            let g2 = e[1] * e[1] + e[2] * e[2];
            if e[0].abs() <= tol || g2 == 0.0 {
                break;
            }
            p = [p[0] - e[0] * e[1] / g2, p[1] - e[0] * e[2] / g2];
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled_parabola(n: usize) -> SampledField {
        let xs: Vec<f64> = (0..n).map(|i| -1.2 + 2.4 * i as f64 / (n - 1) as f64).collect();
        let ys = xs.clone();
        let mut v = Vec::new();
        for &x in &xs {
            for &y in &ys {
                v.push(y - x * x);
            }
        }
        SampledField::new(xs, ys, v).unwrap()
    }

    #[test]
    fn builtin_names_round_trip() {
        for b in [Builtin::Linear, Builtin::Parabola, Builtin::Cubic, Builtin::Constant] {
            assert_eq!(Builtin::parse(b.name()), Some(b));
        }
        assert!(FieldProfile::builtin("nope").is_err());
    }

    #[test]
    fn bicubic_reproduces_quadratic_field() {
        let s = FieldProfile::Sampled(sampled_parabola(41));
        for p in [[0.1, 0.2], [-0.73, 0.5], [0.9, -0.9]] {
            let exact = p[1] - p[0] * p[0];
            assert!((s.value(p) - exact).abs() < 1e-4);
            let g = s.gradient(p);
            assert!((g[0] + 2.0 * p[0]).abs() < 1e-2 && (g[1] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_parser_accepts_header_and_rejects_holes() {
        let mut text = String::from("x,y,B0\n");
        for i in 0..4 {
            for j in 0..5 {
                text.push_str(&format!("{},{},{}\n", i, j, j as f64 - i as f64));
            }
        }
        let f = SampledField::parse_csv(&text).unwrap();
        assert_eq!(f.bounds(), ([0.0, 0.0], [3.0, 4.0]));
        let holed: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(SampledField::parse_csv(&holed).is_err());
        assert!(SampledField::parse_csv("1,2\n").is_err());
    }

    #[test]
    fn projection_lands_on_zero_set() {
        let f = FieldProfile::Builtin(Builtin::Parabola);
        let p = f.project([0.3, 0.2], 1e-14);
        assert!(f.value(p).abs() <= 1e-14);
        assert!((f.level_curvature([0.0, 0.0]) - 2.0).abs() < 1e-12);
    }
}
