//! Zero set `Gamma = {B0 = 0} ∩ Ω` as projected polylines.
//!
//! Marching squares gives the topology. Every vertex is then pushed onto the
//! zero set by Newton projection, and chains are clipped to `Ω` with the
//! boundary points solved from `B0 = 0` and `dist(x, ∂Ω) = 0` jointly.

use std::collections::HashMap;

use serde::Serialize;

use super::field::FieldProfile;
use super::omega::Omega;
use crate::error::{Error, Result};

/// Vertices on the zero set closer than this are merged.
const MERGE: f64 = 1e-12;
/// Minimal `|sin|` of the angle between `Γ` and `∂Ω` at an endpoint.
pub const TRANSVERSALITY_TOL: f64 = 1e-6;

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn lerp(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Arc length of the zero set between two of its points, from the chord and
/// the two half chords through the projected midpoint. Exact up to `O(s^5)`.
pub fn chord_arc(field: &FieldProfile, p: [f64; 2], q: [f64; 2], tol: f64) -> f64 {
    let m = field.project(lerp(p, q, 0.5), tol);
    let full = dist(p, q);
    let halves = dist(p, m) + dist(m, q);
    (4.0 * halves - full) / 3.0
}

/// A connected piece of `Γ`.
#[derive(Clone, Debug, Serialize)]
pub struct Component {
    pub points: Vec<[f64; 2]>,
    /// Cumulative arc length at each vertex.
    pub arc: Vec<f64>,
    pub closed: bool,
    /// Whether the first and the last vertex lie on `∂Ω`.
    pub on_boundary: [bool; 2],
}

impl Component {
    fn new(field: &FieldProfile, mut points: Vec<[f64; 2]>, closed: bool, on_boundary: [bool; 2], tol: f64) -> Self {
        if closed && points.len() > 1 && dist(points[0], *points.last().expect("non-empty")) > MERGE {
            let first = points[0];
            points.push(first);
        }
        let mut arc = Vec::with_capacity(points.len());
        let mut s = 0.0;
        arc.push(0.0);
        for w in points.windows(2) {
            s += chord_arc(field, w[0], w[1], tol);
            arc.push(s);
        }
        Self {
            points,
            arc,
            closed,
            on_boundary,
        }
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().expect("non-empty")
    }

    fn segment(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(0.0, self.length());
        let k = match self.arc.binary_search_by(|a| a.total_cmp(&s)) {
            Ok(k) => k.min(self.points.len() - 2),
            Err(k) => (k.max(1) - 1).min(self.points.len() - 2),
        };
        let len = self.arc[k + 1] - self.arc[k];
        let t = if len > 0.0 { (s - self.arc[k]) / len } else { 0.0 };
        (k, t)
    }

    /// Point on `Γ` at (approximately) arc position `s`.
    pub fn point_at(&self, field: &FieldProfile, s: f64, tol: f64) -> [f64; 2] {
        let (k, t) = self.segment(s);
        if t == 0.0 {
            return self.points[k];
        }
        if t == 1.0 {
            return self.points[k + 1];
        }
        field.project(lerp(self.points[k], self.points[k + 1], t), tol)
    }

    /// Arc length between `point_at(s1)` and `point_at(s2)` measured along `Γ`.
    pub fn arc_between(&self, field: &FieldProfile, s1: f64, s2: f64, tol: f64) -> f64 {
        let (s1, s2) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let (k1, _) = self.segment(s1);
        let (k2, _) = self.segment(s2);
        let p1 = self.point_at(field, s1, tol);
        let p2 = self.point_at(field, s2, tol);
        if k1 == k2 {
            return chord_arc(field, p1, p2, tol);
        }
        let mut total = chord_arc(field, p1, self.points[k1 + 1], tol);
        total += self.arc[k2] - self.arc[k1 + 1];
        total + chord_arc(field, self.points[k2], p2, tol)
    }
}

#[derive(Clone, Debug)]
pub struct ZeroCurve {
    pub field: FieldProfile,
    pub omega: Omega,
    pub resolution: f64,
    /// Target for `|B0|` at projected vertices.
    pub tolerance: f64,
    pub components: Vec<Component>,
}

impl ZeroCurve {
    pub fn length(&self) -> f64 {
        self.components.iter().map(Component::length).sum()
    }

    pub fn vertex_count(&self) -> usize {
        self.components.iter().map(|c| c.points.len()).sum()
    }

    /// Largest `|B0|` over all vertices.
    pub fn max_residual(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.points.iter())
            .map(|p| self.field.value(*p).abs())
            .fold(0.0, f64::max)
    }
}

/// Edge identifiers: horizontal `(i,j)-(i+1,j)` and vertical `(i,j)-(i,j+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

/// Extracts `Γ` on a lattice of spacing `resolution` covering `Ω`.
pub fn extract_zero_set(field: &FieldProfile, omega: &Omega, resolution: f64) -> Result<ZeroCurve> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::InvalidArgument(format!("resolution must be positive, got {resolution}")));
    }
    let (lo, hi) = omega.bounding_box();
    let pad = 2.0 * resolution;
    let origin = [lo[0] - pad, lo[1] - pad];
    let nx = (((hi[0] - lo[0]) + 2.0 * pad) / resolution).ceil() as usize + 1;
    let ny = (((hi[1] - lo[1]) + 2.0 * pad) / resolution).ceil() as usize + 1;
    if nx.saturating_mul(ny) > 50_000_000 {
        return Err(Error::InvalidArgument(format!("resolution {resolution} gives a {nx}x{ny} lattice")));
    }
    let node = |i: usize, j: usize| [origin[0] + i as f64 * resolution, origin[1] + j as f64 * resolution];
    let mut vals = vec![0.0; nx * ny];
    let mut field_scale = 0.0f64;
    let mut grad_scale = 0.0f64;
    for i in 0..nx {
        for j in 0..ny {
            let p = node(i, j);
            let e = field.eval(p);
            vals[i * ny + j] = e[0];
            if omega.contains(p) {
                field_scale = field_scale.max(e[0].abs());
                grad_scale = grad_scale.max(e[1].hypot(e[2]));
            }
        }
    }
    let scale = field_scale.max(grad_scale * resolution).max(f64::MIN_POSITIVE);
    let tol = 1e-13 * scale.max(1.0);
    let positive = |i: usize, j: usize| vals[i * ny + j] >= 0.0;

    let mut crossings: HashMap<Edge, [f64; 2]> = HashMap::new();
    let mut crossing = |e: Edge| -> [f64; 2] {
        *crossings.entry(e).or_insert_with(|| {
            let (a, b) = match e {
                Edge::H(i, j) => ((i, j), (i + 1, j)),
                Edge::V(i, j) => ((i, j), (i, j + 1)),
            };
            let (va, vb) = (vals[a.0 * ny + a.1], vals[b.0 * ny + b.1]);
            let t = (va / (va - vb)).clamp(0.0, 1.0);
            let guess = lerp(node(a.0, a.1), node(b.0, b.1), t);
            field.project(guess, tol)
        })
    };
    let mut adjacency: HashMap<Edge, Vec<Edge>> = HashMap::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let s = [positive(i, j), positive(i + 1, j), positive(i + 1, j + 1), positive(i, j + 1)];
            let edges = [Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j)];
            let cut: Vec<usize> = (0..4).filter(|&k| s[k] != s[(k + 1) % 4]).collect();
            let pairs: Vec<(usize, usize)> = match cut.len() {
                2 => vec![(cut[0], cut[1])],
                4 => {
                    let c = vals[i * ny + j] + vals[(i + 1) * ny + j] + vals[(i + 1) * ny + j + 1] + vals[i * ny + j + 1];
                    if (c >= 0.0) == s[0] {
                        // corners 0 and 2 connected through the center: cut off 1 and 3
                        vec![(0, 1), (2, 3)]
                    } else {
                        vec![(3, 0), (1, 2)]
                    }
                }
                _ => vec![],
            };
            for (a, b) in pairs {
                let (ea, eb) = (edges[a], edges[b]);
                crossing(ea);
                crossing(eb);
                adjacency.entry(ea).or_default().push(eb);
                adjacency.entry(eb).or_default().push(ea);
            }
        }
    }

    // trace chains: open ones from degree-1 edges, then loops
    let mut visited: HashMap<Edge, bool> = HashMap::new();
    let mut chains: Vec<(Vec<[f64; 2]>, bool)> = Vec::new();
    let mut starts: Vec<Edge> = adjacency.iter().filter(|(_, v)| v.len() == 1).map(|(e, _)| *e).collect();
    let mut rest: Vec<Edge> = adjacency.keys().copied().collect();
    let key = |e: &Edge| match *e {
        Edge::H(i, j) => (0, i, j),
        Edge::V(i, j) => (1, i, j),
    };
    starts.sort_by_key(key);
    rest.sort_by_key(key);
    for (pool, closed) in [(starts, false), (rest, true)] {
        for start in pool {
            if visited.contains_key(&start) {
                continue;
            }
            let mut chain = vec![crossings[&start]];
            visited.insert(start, true);
            let mut prev: Option<Edge> = None;
            let mut cur = start;
            loop {
                let next = adjacency[&cur].iter().copied().find(|e| Some(*e) != prev && !visited.contains_key(e));
                match next {
                    Some(e) => {
                        visited.insert(e, true);
                        chain.push(crossings[&e]);
                        prev = Some(cur);
                        cur = e;
                    }
                    None => break,
                }
            }
            chains.push((chain, closed));
        }
    }

    let mut components = Vec::new();
    for (chain, _) in &chains {
        check_tangency(field, omega, chain, resolution, tol)?;
    }
    for (chain, closed) in chains {
        for piece in clip(field, omega, &chain, closed, tol)? {
            let (pts, closed, ends) = piece;
            if pts.len() >= 2 {
                components.push(Component::new(field, pts, closed, ends, tol));
            }
        }
    }
    components.retain(|c| c.length() > 0.0);
    if components.is_empty() {
        return Err(Error::EmptyZeroSet);
    }
    for c in &components {
        for p in &c.points {
            if field.grad_norm(*p) <= 1e-10 * grad_scale.max(f64::MIN_POSITIVE) {
                return Err(Error::DegenerateField { x: p[0], y: p[1] });
            }
        }
    }
    Ok(ZeroCurve {
        field: field.clone(),
        omega: omega.clone(),
        resolution,
        tolerance: tol,
        components,
    })
}

/// Distance below which a local extremum of `dist(·, ∂Ω)` along `Γ` counts as tangency.
pub const TANGENCY_DIST: f64 = 1e-9;

/// Rejects chains that touch `∂Ω` without crossing it.
fn check_tangency(field: &FieldProfile, omega: &Omega, chain: &[[f64; 2]], resolution: f64, tol: f64) -> Result<()> {
    let sd: Vec<f64> = chain.iter().map(|p| omega.signed_distance(*p)).collect();
    for k in 1..chain.len().saturating_sub(1) {
        if sd[k].abs() > 2.0 * resolution || (sd[k] - sd[k - 1]) * (sd[k + 1] - sd[k]) > 0.0 {
            continue;
        }
        // parametrize the two adjacent chords by t in [-1, 1]
        let at = |t: f64| {
            let p = if t < 0.0 { lerp(chain[k], chain[k - 1], -t) } else { lerp(chain[k], chain[k + 1], t) };
            field.project(p, tol)
        };
        let sign = if sd[k] <= sd[k - 1] { 1.0 } else { -1.0 };
        let g = |t: f64| -> std::result::Result<f64, Error> { Ok(sign * omega.signed_distance(at(t))) };
        let (t, v) = crate::optimize::golden_section(g, -1.0, 1.0, 1e-12)?;
        if v.abs() <= TANGENCY_DIST {
            let x = at(t);
            return Err(Error::TangentialIntersection { x: x[0], y: x[1] });
        }
    }
    Ok(())
}

type Piece = (Vec<[f64; 2]>, bool, [bool; 2]);

fn clip(field: &FieldProfile, omega: &Omega, chain: &[[f64; 2]], closed: bool, tol: f64) -> Result<Vec<Piece>> {
    let inside: Vec<bool> = chain.iter().map(|p| omega.contains(*p)).collect();
    if inside.iter().all(|&b| b) {
        return Ok(vec![(dedup(chain.to_vec()), closed, [false, false])]);
    }
    let mut pts: Vec<[f64; 2]> = chain.to_vec();
    let mut ins = inside.clone();
    if closed {
        // rotate so the walk starts outside, then close the loop
        let k = ins.iter().position(|b| !b).expect("some vertex outside");
        pts.rotate_left(k);
        ins.rotate_left(k);
        pts.push(pts[0]);
        ins.push(ins[0]);
    }
    let mut pieces = Vec::new();
    let mut current: Option<Vec<[f64; 2]>> = if ins[0] { Some(vec![pts[0]]) } else { None };
    let mut start_on_boundary = false;
    for k in 0..pts.len() - 1 {
        let (p, q) = (pts[k], pts[k + 1]);
        match (ins[k], ins[k + 1]) {
            (true, true) => current.as_mut().expect("open piece").push(q),
            (true, false) => {
                let b = boundary_point(field, omega, p, q, tol)?;
                let mut c = current.take().expect("open piece");
                c.push(b);
                pieces.push((dedup(c), false, [start_on_boundary, true]));
            }
            (false, true) => {
                let b = boundary_point(field, omega, q, p, tol)?;
                current = Some(vec![b, q]);
                start_on_boundary = true;
            }
            (false, false) => {
                // a chord with both ends outside may still dip into a non-convex Ω
                let m = field.project(lerp(p, q, 0.5), tol);
                if omega.contains(m) {
                    let a = boundary_point(field, omega, m, p, tol)?;
                    let b = boundary_point(field, omega, m, q, tol)?;
                    pieces.push((dedup(vec![a, m, b]), false, [true, true]));
                }
            }
        }
    }
    if let Some(c) = current {
        pieces.push((dedup(c), false, [start_on_boundary, false]));
    }
    Ok(pieces)
}

fn dedup(mut v: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    v.dedup_by(|a, b| dist(*a, *b) <= MERGE);
    v
}

/// Solves `B0 = 0`, `dist(x, ∂Ω) = 0` starting from the chord crossing between
/// the inside vertex `p` and the outside vertex `q`.
fn boundary_point(field: &FieldProfile, omega: &Omega, p: [f64; 2], q: [f64; 2], tol: f64) -> Result<[f64; 2]> {
    let t = omega.segment_exit(p, q).unwrap_or(0.5);
    let mut x = lerp(p, q, t);
    let len = dist(p, q).max(f64::MIN_POSITIVE);
    for _ in 0..60 {
        let e = field.eval(x);
        let d = omega.signed_distance(x);
        let n = omega.outward_normal(x);
        let det = e[1] * n[1] - e[2] * n[0];
        if det == 0.0 {
            break;
        }
        let dx = (e[0] * n[1] - e[2] * d) / det;
        let dy = (e[1] * d - e[0] * n[0]) / det;
        // keep the iterate near the chord
        let step = dx.hypot(dy);
        let scale = if step > len { len / step } else { 1.0 };
        x = [x[0] - scale * dx, x[1] - scale * dy];
        if step <= 1e-15 * (1.0 + x[0].abs() + x[1].abs()) {
            break;
        }
    }
    let e = field.eval(x);
    let n = omega.outward_normal(x);
    let g = e[1].hypot(e[2]);
    if e[0].abs() > tol.max(1e-10 * g * len) || omega.signed_distance(x).abs() > 1e-10 * len.max(1e-3) {
        return Err(Error::TangentialIntersection { x: x[0], y: x[1] });
    }
    let sin = (e[1] * n[1] - e[2] * n[0]).abs() / g.max(f64::MIN_POSITIVE);
    if sin < TRANSVERSALITY_TOL {
        return Err(Error::TangentialIntersection { x: x[0], y: x[1] });
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::field::Builtin;

    fn parabola_length() -> f64 {
        // y = x^2 meets the unit circle where x^2 = (sqrt(5) - 1) / 2
        let x = ((5f64.sqrt() - 1.0) / 2.0).sqrt();
        let prim = |x: f64| x * (1.0 + 4.0 * x * x).sqrt() / 2.0 + (2.0 * x).asinh() / 4.0;
        2.0 * prim(x)
    }

    #[test]
    fn chord_in_unit_disc() {
        let f = FieldProfile::Builtin(Builtin::Linear);
        let z = extract_zero_set(&f, &Omega::unit_disc(), 0.02).unwrap();
        assert_eq!(z.components.len(), 1);
        assert!((z.length() - 2.0).abs() < 1e-12);
        assert!(z.max_residual() < 1e-12);
        assert_eq!(z.components[0].on_boundary, [true, true]);
    }

    #[test]
    fn parabola_arc_length() {
        let f = FieldProfile::Builtin(Builtin::Parabola);
        let z = extract_zero_set(&f, &Omega::unit_disc(), 0.01).unwrap();
        assert!((z.length() - parabola_length()).abs() < 1e-9, "{}", z.length() - parabola_length());
    }

    #[test]
    fn constant_field_has_no_zero_set() {
        let f = FieldProfile::Builtin(Builtin::Constant);
        assert!(matches!(extract_zero_set(&f, &Omega::unit_disc(), 0.05), Err(Error::EmptyZeroSet)));
    }

    #[test]
    fn tangency_is_rejected() {
        // y = 1 touches the unit circle at (0, 1)
        let xs: Vec<f64> = (0..21).map(|i| -1.5 + 0.15 * i as f64).collect();
        let mut v = Vec::new();
        for _ in &xs {
            for &y in &xs {
                v.push(y - 1.0);
            }
        }
        let f = FieldProfile::Sampled(super::super::field::SampledField::new(xs.clone(), xs, v).unwrap());
        let r = extract_zero_set(&f, &Omega::unit_disc(), 0.05);
        assert!(matches!(r, Err(Error::TangentialIntersection { .. })), "{r:?}");
    }

    #[test]
    fn closed_loop_inside_square() {
        let xs: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
        let mut v = Vec::new();
        for &x in &xs {
            for &y in &xs {
                v.push(x * x + y * y - 0.25);
            }
        }
        let f = FieldProfile::Sampled(super::super::field::SampledField::new(xs.clone(), xs, v).unwrap());
        let sq = Omega::polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]).unwrap();
        let z = extract_zero_set(&f, &sq, 0.02).unwrap();
        assert_eq!(z.components.len(), 1);
        assert!(z.components[0].closed);
        assert!((z.length() - std::f64::consts::PI).abs() < 1e-3);
    }

    #[test]
    fn arc_between_matches_total() {
        let f = FieldProfile::Builtin(Builtin::Parabola);
        let z = extract_zero_set(&f, &Omega::unit_disc(), 0.02).unwrap();
        let c = &z.components[0];
        let l = c.length();
        let a = c.arc_between(&f, 0.0, 0.37 * l, z.tolerance) + c.arc_between(&f, 0.37 * l, l, z.tolerance);
        assert!((a - l).abs() < 1e-10);
    }
}
