//! Bounded simply-connected domains: discs and simple polygons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Omega {
    Disc { center: [f64; 2], radius: f64 },
    /// Counter-clockwise after construction.
    Polygon { vertices: Vec<[f64; 2]> },
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(sub(p2, p1), sub(q1, p1));
    let d2 = cross(sub(p2, p1), sub(q2, p1));
    let d3 = cross(sub(q2, q1), sub(p1, q1));
    let d4 = cross(sub(q2, q1), sub(p2, q1));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

impl Omega {
    pub fn unit_disc() -> Self {
        Self::Disc {
            center: [0.0, 0.0],
            radius: 1.0,
        }
    }

    pub fn disc(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && center.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidArgument(format!("invalid disc radius {radius}")));
        }
        Ok(Self::Disc { center, radius })
    }

    /// Validates simplicity and reorients counter-clockwise.
    pub fn polygon(mut vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() > 3 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidArgument(format!("polygon needs at least 3 vertices, got {n}")));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite polygon vertex".into()));
        }
        let area: f64 = (0..n).map(|i| cross(vertices[i], vertices[(i + 1) % n])).sum::<f64>() / 2.0;
        let scale = vertices
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, c| m.max(c.abs()))
            .max(1e-300);
        if area.abs() <= 1e-14 * scale * scale {
            return Err(Error::InvalidArgument("degenerate polygon (zero area)".into()));
        }
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::InvalidArgument(format!("repeated polygon vertex {i}")));
            }
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segments_cross(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n]) {
                    return Err(Error::InvalidArgument(format!("polygon edges {i} and {j} intersect")));
                }
            }
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Self::Polygon { vertices })
    }

    /// Whitespace or comma separated `x y` pairs, one vertex per line, `#` comments.
    pub fn parse_polygon(text: &str) -> Result<Self> {
        let mut v = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            if cols.len() != 2 {
                return Err(Error::Parse {
                    line: k + 1,
                    message: format!("expected 2 coordinates, found {}", cols.len()),
                });
            }
            let x = cols[0].parse::<f64>();
            let y = cols[1].parse::<f64>();
            match (x, y) {
                (Ok(x), Ok(y)) => v.push([x, y]),
                _ => {
                    return Err(Error::Parse {
                        line: k + 1,
                        message: format!("cannot parse '{line}'"),
                    })
                }
            }
        }
        Self::polygon(v)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.signed_distance(p) < 0.0
    }

    /// Negative inside.
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        match self {
            Self::Disc { center, radius } => {
                let d = sub(p, *center);
                d[0].hypot(d[1]) - radius
            }
            Self::Polygon { vertices } => {
                let n = vertices.len();
                let mut best = f64::INFINITY;
                let mut inside = false;
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    if (a[1] > p[1]) != (b[1] > p[1]) {
                        let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                        if p[0] < x {
                            inside = !inside;
                        }
                    }
                    let e = sub(b, a);
                    let t = (dot(sub(p, a), e) / dot(e, e)).clamp(0.0, 1.0);
                    let q = [a[0] + t * e[0], a[1] + t * e[1]];
                    let d = sub(p, q);
                    best = best.min(d[0].hypot(d[1]));
                }
                if inside {
                    -best
                } else {
                    best
                }
            }
        }
    }

    /// Outward unit normal at the boundary point nearest to `p`.
    pub fn outward_normal(&self, p: [f64; 2]) -> [f64; 2] {
        match self {
            Self::Disc { center, .. } => {
                let d = sub(p, *center);
                let r = d[0].hypot(d[1]);
                [d[0] / r, d[1] / r]
            }
            Self::Polygon { vertices } => {
                let n = vertices.len();
                let mut best = (f64::INFINITY, [0.0, 0.0]);
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    let e = sub(b, a);
                    let t = (dot(sub(p, a), e) / dot(e, e)).clamp(0.0, 1.0);
                    let q = [a[0] + t * e[0], a[1] + t * e[1]];
                    let d = sub(p, q);
                    let dist = d[0].hypot(d[1]);
                    if dist < best.0 {
                        let len = e[0].hypot(e[1]);
                        // counter-clockwise orientation: outward normal is the edge rotated clockwise
                        best = (dist, [e[1] / len, -e[0] / len]);
                    }
                }
                best.1
            }
        }
    }

    /// `(min, max)` corners of an axis-aligned bounding box.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Self::Disc { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Self::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Fraction `t` in `(0, 1]` of the first boundary crossing on the segment
    /// `p -> p + t (q - p)` starting inside, if any.
    pub fn segment_exit(&self, p: [f64; 2], q: [f64; 2]) -> Option<f64> {
        let d = sub(q, p);
        match self {
            Self::Disc { center, radius } => {
                let m = sub(p, *center);
                let a = dot(d, d);
                let b = 2.0 * dot(m, d);
                let c = dot(m, m) - radius * radius;
                let disc = b * b - 4.0 * a * c;
                if a == 0.0 || disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                // numerically stable roots
                let qq = -0.5 * (b + b.signum() * s);
                let mut roots = [qq / a, if qq != 0.0 { c / qq } else { f64::NAN }];
                roots.sort_by(f64::total_cmp);
                roots.into_iter().find(|t| *t > 0.0 && *t <= 1.0)
            }
            Self::Polygon { vertices } => {
                let n = vertices.len();
                let mut best: Option<f64> = None;
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    let e = sub(b, a);
                    let den = cross(d, e);
                    if den == 0.0 {
                        continue;
                    }
                    let w = sub(a, p);
                    let t = cross(w, e) / den;
                    let u = cross(w, d) / den;
                    if t > 0.0 && t <= 1.0 && (0.0..=1.0).contains(&u) {
                        best = Some(best.map_or(t, |bt: f64| bt.min(t)));
                    }
                }
                best
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Self::Disc { radius, .. } => std::f64::consts::PI * radius * radius,
            Self::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).map(|i| cross(vertices[i], vertices[(i + 1) % n])).sum::<f64>() / 2.0
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_is_oriented_and_validated() {
        let sq = Omega::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!((sq.area() - 1.0).abs() < 1e-15);
        assert!(sq.contains([0.5, 0.5]) && !sq.contains([1.5, 0.5]));
        assert!((sq.signed_distance([0.5, 0.25]) + 0.25).abs() < 1e-15);
        assert_eq!(sq.outward_normal([0.5, 0.01]), [0.0, -1.0]);
        let bow = Omega::polygon(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(bow.is_err());
        assert!(Omega::polygon(vec![[0.0, 0.0], [1.0, 1.0]]).is_err());
    }

    #[test]
    fn polygon_parser_handles_comments_and_separators() {
        let text = "# square\n0 0\n1,0\n1 1 # corner\n\n0 1\n";
        let p = Omega::parse_polygon(text).unwrap();
        assert!((p.area() - 1.0).abs() < 1e-15);
        assert!(Omega::parse_polygon("0 0\n1\n").is_err());
        assert!(Omega::parse_polygon("a b\n").is_err());
    }

    #[test]
    fn segment_exit_on_disc_and_polygon() {
        let d = Omega::unit_disc();
        let t = d.segment_exit([0.0, 0.0], [2.0, 0.0]).unwrap();
        assert!((t - 0.5).abs() < 1e-15);
        let sq = Omega::polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]).unwrap();
        let t = sq.segment_exit([0.0, 0.0], [0.0, 4.0]).unwrap();
        assert!((t - 0.25).abs() < 1e-15);
        assert!(sq.segment_exit([0.0, 0.0], [0.1, 0.1]).is_none());
    }
}
