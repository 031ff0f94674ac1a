//! Plane polygonal domains with optional holes and slits.
//!
//! Coordinates are stored exactly. JSON input accepts decimal strings,
//! `"p/q"` rationals, or plain JSON numbers (read through their decimal text).

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geom::{
    ccw_angle, on_segment, segments_cross_properly, segments_intersect, signed_area, Vec2,
};
use crate::scalar::{format_exact, parse_exact, Exact, Scalar, TAU_LEN};

pub type Point = Vec2<Exact>;

#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    /// Counterclockwise outer boundary.
    pub outer: Vec<Point>,
    /// Clockwise hole boundaries.
    pub holes: Vec<Vec<Point>>,
    /// Open polylines, two-sided.
    pub slits: Vec<Vec<Point>>,
}

/// Where a polygon vertex lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VertexRef {
    Outer { index: usize },
    Hole { hole: usize, index: usize },
    Slit { slit: usize, index: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexAngle {
    pub vertex: VertexRef,
    pub position: [f64; 2],
    /// Interior angle(s) on the domain side. Slit interior vertices have two
    /// sides and report both; every other vertex reports one.
    pub angles: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub simple: bool,
    pub counterclockwise: bool,
    pub signed_area: f64,
    pub angles: Vec<VertexAngle>,
}

impl Polygon {
    pub fn new(outer: Vec<Point>) -> Self {
        Polygon {
            outer,
            holes: Vec::new(),
            slits: Vec::new(),
        }
    }

    pub fn from_f64(outer: &[[f64; 2]]) -> Self {
        Polygon::new(outer.iter().map(|p| Vec2::from_f64(p[0], p[1])).collect())
    }

    /// Build from decimal/rational text coordinates, e.g. `[["0","0"],["1/3","0"],...]`.
    pub fn from_text(outer: &[[&str; 2]]) -> Result<Self> {
        Ok(Polygon::new(parse_ring_text(outer)?))
    }

    pub fn with_hole_text(mut self, hole: &[[&str; 2]]) -> Result<Self> {
        self.holes.push(parse_ring_text(hole)?);
        Ok(self)
    }

    pub fn with_slit_text(mut self, slit: &[[&str; 2]]) -> Result<Self> {
        self.slits.push(parse_ring_text(slit)?);
        Ok(self)
    }

    /// Shoelace area of the domain (outer minus holes).
    pub fn area(&self) -> Exact {
        let mut a = signed_area(&self.outer);
        for h in &self.holes {
            a = a + signed_area(h);
        }
        a
    }

    /// All vertices in a stable order: outer, holes, slits.
    pub fn vertices(&self) -> Vec<(VertexRef, Point)> {
        let mut out = Vec::new();
        for (i, p) in self.outer.iter().enumerate() {
            out.push((VertexRef::Outer { index: i }, p.clone()));
        }
        for (h, ring) in self.holes.iter().enumerate() {
            for (i, p) in ring.iter().enumerate() {
                out.push((VertexRef::Hole { hole: h, index: i }, p.clone()));
            }
        }
        for (s, line) in self.slits.iter().enumerate() {
            for (i, p) in line.iter().enumerate() {
                out.push((VertexRef::Slit { slit: s, index: i }, p.clone()));
            }
        }
        out
    }

    /// The vertex set used for control neighbourhoods: outer and hole
    /// vertices plus slit endpoints.
    pub fn control_vertices(&self) -> Vec<[f64; 2]> {
        let mut out: Vec<[f64; 2]> = self.outer.iter().map(|p| p.to_f64()).collect();
        for h in &self.holes {
            out.extend(h.iter().map(|p| p.to_f64()));
        }
        for s in &self.slits {
            if let (Some(a), Some(b)) = (s.first(), s.last()) {
                out.push(a.to_f64());
                out.push(b.to_f64());
            }
        }
        out
    }

    /// Boundary segments: outer edges, hole edges, slit edges.
    pub fn boundary_segments(&self) -> Vec<(Point, Point)> {
        let mut segs = Vec::new();
        for ring in std::iter::once(&self.outer).chain(self.holes.iter()) {
            let n = ring.len();
            for i in 0..n {
                segs.push((ring[i].clone(), ring[(i + 1) % n].clone()));
            }
        }
        for line in &self.slits {
            for w in line.windows(2) {
                segs.push((w[0].clone(), w[1].clone()));
            }
        }
        segs
    }

    /// Strict interior test: inside the outer ring, outside every hole, not on any boundary or slit.
    pub fn contains_strictly<S: Scalar>(&self, p: &Vec2<S>, to_s: impl Fn(&Point) -> Vec2<S>, tol: f64) -> bool {
        let ring_s: Vec<Vec2<S>> = self.outer.iter().map(&to_s).collect();
        if point_in_ring(p, &ring_s, tol) != Ordering::Greater {
            return false;
        }
        for h in &self.holes {
            let hs: Vec<Vec2<S>> = h.iter().map(&to_s).collect();
            if point_in_ring(p, &hs, tol) != Ordering::Less {
                return false;
            }
        }
        for line in &self.slits {
            for w in line.windows(2) {
                if on_segment(p, &to_s(&w[0]), &to_s(&w[1]), tol) {
                    return false;
                }
            }
        }
        true
    }

    /// Interior test on float coordinates (used by meshing and quadrature).
    pub fn contains_f64(&self, p: [f64; 2]) -> bool {
        self.contains_strictly(&Vec2::new(p[0], p[1]), |q| q.to_scalar::<f64>(), 1e-12)
    }

    pub fn diameter(&self) -> f64 {
        let pts: Vec<[f64; 2]> = self.outer.iter().map(|p| p.to_f64()).collect();
        let mut d: f64 = 0.0;
        for a in &pts {
            for b in &pts {
                d = d.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        d
    }

    /// Are all coordinates dyadic-free small rationals? Always true for parsed input;
    /// kept for callers that want to choose exact mode.
    pub fn is_rational(&self) -> bool {
        true
    }
}

fn parse_ring_text(pts: &[[&str; 2]]) -> Result<Vec<Point>> {
    pts.iter()
        .map(|[x, y]| {
            let px = parse_exact(x).ok_or_else(|| Error::Parse(format!("bad coordinate {x:?}")))?;
            let py = parse_exact(y).ok_or_else(|| Error::Parse(format!("bad coordinate {y:?}")))?;
            Ok(Vec2::new(px, py))
        })
        .collect()
}

/// Winding test for a closed ring: `Greater` inside, `Less` outside, `Equal` on the boundary.
pub fn point_in_ring<S: Scalar>(p: &Vec2<S>, ring: &[Vec2<S>], tol: f64) -> Ordering {
    let n = ring.len();
    let mut winding = 0i64;
    for i in 0..n {
        let a = &ring[i];
        let b = &ring[(i + 1) % n];
        if on_segment(p, a, b, tol) {
            return Ordering::Equal;
        }
        let side = (b.clone() - a.clone()).cross(&(p.clone() - a.clone()));
        if a.y <= p.y {
            if b.y > p.y && side.sign_tol(0.0) == Ordering::Greater {
                winding += 1;
            }
        } else if b.y <= p.y && side.sign_tol(0.0) == Ordering::Less {
            winding -= 1;
        }
    }
    if winding != 0 {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

fn ring_is_simple(ring: &[Point]) -> bool {
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (&ring[i], &ring[(i + 1) % n]);
        for j in (i + 1)..n {
            let (c, d) = (&ring[j], &ring[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // adjacent edges may only share their common vertex
                let shared = if j == i + 1 { b } else { a };
                let (other_i, other_j) = if j == i + 1 { (a, d) } else { (b, c) };
                if on_segment(other_j, a, b, 0.0) && other_j != shared {
                    return false;
                }
                if on_segment(other_i, c, d, 0.0) && other_i != shared {
                    return false;
                }
            } else if segments_intersect(a, b, c, d, 0.0) {
                return false;
            }
        }
    }
    true
}

fn min_edge_length(ring: &[Point], closed: bool) -> f64 {
    let n = ring.len();
    let m = if closed { n } else { n.saturating_sub(1) };
    (0..m)
        .map(|i| (ring[(i + 1) % n].clone() - ring[i].clone()).norm())
        .fold(f64::INFINITY, f64::min)
}

fn ring_angles(ring: &[Point], make_ref: impl Fn(usize) -> VertexRef) -> Vec<VertexAngle> {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let prev = ring[(i + n - 1) % n].to_f64();
            let cur = ring[i].to_f64();
            let next = ring[(i + 1) % n].to_f64();
            let a = ccw_angle(
                [next[0] - cur[0], next[1] - cur[1]],
                [prev[0] - cur[0], prev[1] - cur[1]],
            );
            VertexAngle {
                vertex: make_ref(i),
                position: cur,
                angles: vec![a],
            }
        })
        .collect()
}

/// Check the polygon invariants and report the angle at every vertex.
pub fn validate_polygon(p: &Polygon) -> Result<ValidationReport> {
    if p.outer.len() < 3 {
        return Err(Error::DegenerateEdge("outer boundary needs at least 3 vertices".into()));
    }
    if min_edge_length(&p.outer, true) <= TAU_LEN {
        return Err(Error::DegenerateEdge("outer boundary".into()));
    }
    for (h, ring) in p.holes.iter().enumerate() {
        if ring.len() < 3 || min_edge_length(ring, true) <= TAU_LEN {
            return Err(Error::DegenerateEdge(format!("hole {h}")));
        }
    }
    for (s, line) in p.slits.iter().enumerate() {
        if line.len() < 2 || min_edge_length(line, false) <= TAU_LEN {
            return Err(Error::DegenerateEdge(format!("slit {s}")));
        }
    }
    if !ring_is_simple(&p.outer) {
        return Err(Error::SelfIntersection("outer boundary".into()));
    }
    let outer_area = signed_area(&p.outer);
    if outer_area.sign_tol(0.0) != Ordering::Greater {
        return Err(Error::BadOrientation("outer boundary must be counterclockwise".into()));
    }
    for (h, ring) in p.holes.iter().enumerate() {
        if !ring_is_simple(ring) {
            return Err(Error::SelfIntersection(format!("hole {h}")));
        }
        if signed_area(ring).sign_tol(0.0) != Ordering::Less {
            return Err(Error::BadOrientation(format!("hole {h} must be clockwise")));
        }
        for v in ring {
            if point_in_ring(v, &p.outer, 0.0) != Ordering::Greater {
                return Err(Error::SelfIntersection(format!("hole {h} is not strictly inside the outer boundary")));
            }
        }
    }
    for (s, line) in p.slits.iter().enumerate() {
        for w in line.windows(2) {
            for u in line.windows(2) {
                if std::ptr::eq(w, u) {
                    continue;
                }
                if segments_cross_properly(&w[0], &w[1], &u[0], &u[1], 0.0) {
                    return Err(Error::SelfIntersection(format!("slit {s}")));
                }
            }
        }
        for v in line {
            if point_in_ring(v, &p.outer, 0.0) != Ordering::Greater {
                return Err(Error::SelfIntersection(format!("slit {s} leaves the interior")));
            }
        }
    }

    // Every pair of distinct boundary components must be disjoint.
    let mut components: Vec<Vec<(Point, Point)>> = Vec::new();
    let closed_edges = |ring: &Vec<Point>| -> Vec<(Point, Point)> {
        (0..ring.len())
            .map(|i| (ring[i].clone(), ring[(i + 1) % ring.len()].clone()))
            .collect()
    };
    components.push(closed_edges(&p.outer));
    for ring in &p.holes {
        components.push(closed_edges(ring));
    }
    for line in &p.slits {
        components.push(line.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect());
    }
    for i in 0..components.len() {
        for j in (i + 1)..components.len() {
            for (a, b) in &components[i] {
                for (c, d) in &components[j] {
                    if segments_intersect(a, b, c, d, 0.0) {
                        return Err(Error::SelfIntersection(format!(
                            "boundary components {i} and {j} touch"
                        )));
                    }
                }
            }
        }
    }
    for (h, ring) in p.holes.iter().enumerate() {
        for (g, other) in p.holes.iter().enumerate() {
            if g != h && point_in_ring(&ring[0], other, 0.0) != Ordering::Less {
                return Err(Error::SelfIntersection(format!("hole {h} lies inside hole {g}")));
            }
        }
    }
    for (s, line) in p.slits.iter().enumerate() {
        for (h, ring) in p.holes.iter().enumerate() {
            if point_in_ring(&line[0], ring, 0.0) != Ordering::Less {
                return Err(Error::SelfIntersection(format!("slit {s} lies inside hole {h}")));
            }
        }
    }

    let mut angles = ring_angles(&p.outer, |i| VertexRef::Outer { index: i });
    for (h, ring) in p.holes.iter().enumerate() {
        angles.extend(ring_angles(ring, |i| VertexRef::Hole { hole: h, index: i }));
    }
    for (s, line) in p.slits.iter().enumerate() {
        let n = line.len();
        for i in 0..n {
            let angles_here = if i == 0 || i + 1 == n {
                vec![TAU]
            } else {
                let prev = line[i - 1].to_f64();
                let cur = line[i].to_f64();
                let next = line[i + 1].to_f64();
                let a = ccw_angle(
                    [next[0] - cur[0], next[1] - cur[1]],
                    [prev[0] - cur[0], prev[1] - cur[1]],
                );
                vec![a, TAU - a]
            };
            angles.push(VertexAngle {
                vertex: VertexRef::Slit { slit: s, index: i },
                position: line[i].to_f64(),
                angles: angles_here,
            });
        }
    }
    for va in &angles {
        for &a in &va.angles {
            if !(a > 0.0 && a <= TAU + 1e-12) {
                return Err(Error::SelfIntersection(format!("angle {a} at {:?}", va.vertex)));
            }
        }
    }
    Ok(ValidationReport {
        simple: true,
        counterclockwise: true,
        signed_area: p.area().to_f64(),
        angles,
    })
}

// ---------------------------------------------------------------------------
// JSON

fn parse_coord(v: &Value) -> Result<Exact> {
    match v {
        Value::String(s) => parse_exact(s).ok_or_else(|| Error::Parse(format!("bad coordinate {s:?}"))),
        Value::Number(n) => {
            parse_exact(&n.to_string()).ok_or_else(|| Error::Parse(format!("bad coordinate {n}")))
        }
        other => Err(Error::Parse(format!("coordinate must be a string or number, got {other}"))),
    }
}

fn parse_points(v: &Value, what: &str) -> Result<Vec<Point>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Parse(format!("{what}: expected an array of points")))?;
    arr.iter()
        .map(|pt| {
            let xy = pt
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::Parse(format!("{what}: each point must be [x, y]")))?;
            Ok(Vec2::new(parse_coord(&xy[0])?, parse_coord(&xy[1])?))
        })
        .collect()
}

fn parse_point_lists(v: Option<&Value>, what: &str) -> Result<Vec<Vec<Point>>> {
    match v {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(items)) => items.iter().map(|it| parse_points(it, what)).collect(),
        Some(_) => Err(Error::Parse(format!("{what}: expected a list of point lists"))),
    }
}

impl Polygon {
    pub fn from_json_value(v: &Value) -> Result<Self> {
        let outer = parse_points(
            v.get("outer").ok_or_else(|| Error::Parse("missing \"outer\"".into()))?,
            "outer",
        )?;
        Ok(Polygon {
            outer,
            holes: parse_point_lists(v.get("holes"), "holes")?,
            slits: parse_point_lists(v.get("slits"), "slits")?,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Polygon::from_json_value(&v)
    }

    pub fn to_json_value(&self) -> Value {
        let pts = |ring: &Vec<Point>| -> Value {
            Value::Array(
                ring.iter()
                    .map(|p| Value::Array(vec![Value::String(format_exact(&p.x)), Value::String(format_exact(&p.y))]))
                    .collect(),
            )
        };
        serde_json::json!({
            "outer": pts(&self.outer),
            "holes": Value::Array(self.holes.iter().map(pts).collect()),
            "slits": Value::Array(self.slits.iter().map(pts).collect()),
        })
    }
}

/// Interior angle expressed as a multiple of π when it is a small fraction.
pub fn angle_over_pi(angle: f64) -> Option<(i64, i64)> {
    crate::scalar::small_fraction(angle / PI, 64, 1e-12)
}

/// Reference polygons used throughout tests, examples and the CLI.
pub mod corpus {
    use super::Polygon;

    pub fn unit_square() -> Polygon {
        Polygon::from_text(&[["0", "0"], ["1", "0"], ["1", "1"], ["0", "1"]]).unwrap()
    }

    /// `[0,w] x [0,h]`.
    pub fn rectangle(w: &str, h: &str) -> Polygon {
        Polygon::from_text(&[["0", "0"], [w, "0"], [w, h], ["0", h]]).unwrap()
    }

    /// Three unit squares: `[0,2]^2` minus `[1,2]^2`.
    pub fn l_shape() -> Polygon {
        Polygon::from_text(&[["0", "0"], ["2", "0"], ["2", "1"], ["1", "1"], ["1", "2"], ["0", "2"]]).unwrap()
    }

    /// Non-convex pentagon with one reflex vertex at (1,1).
    pub fn pentagon() -> Polygon {
        Polygon::from_text(&[["0", "0"], ["2", "0"], ["2", "2"], ["1", "1"], ["0", "2"]]).unwrap()
    }

    /// `[0,3]^2` with the square hole `[1,2]^2`.
    pub fn square_with_hole() -> Polygon {
        Polygon::from_text(&[["0", "0"], ["3", "0"], ["3", "3"], ["0", "3"]])
            .unwrap()
            .with_hole_text(&[["1", "1"], ["1", "2"], ["2", "2"], ["2", "1"]])
            .unwrap()
    }

    /// Unit square with a horizontal interior slit of length 0.3.
    pub fn square_with_slit() -> Polygon {
        unit_square().with_slit_text(&[["0.35", "0.5"], ["0.65", "0.5"]]).unwrap()
    }

    /// Self-crossing quadrilateral.
    pub fn bowtie() -> Polygon {
        Polygon::from_text(&[["0", "0"], ["1", "1"], ["1", "0"], ["0", "1"]]).unwrap()
    }

    /// Every valid corpus polygon with a short name.
    pub fn all() -> Vec<(&'static str, Polygon)> {
        vec![
            ("square", unit_square()),
            ("rect_1x2", rectangle("1", "2")),
            ("l_shape", l_shape()),
            ("pentagon", pentagon()),
            ("square_hole", square_with_hole()),
            ("square_slit", square_with_slit()),
        ]
    }
}
