//! Quality triangular meshes of polygonal domains for the finite element
//! computations. Slits are meshed two-sided: every node strictly inside a
//! slit is split into one copy per side, so discrete functions may jump
//! across the slit.

use serde::Serialize;
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use crate::error::{Error, Result};
use crate::polygon::Polygon;

/// Where a mesh node sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Marker {
    Interior,
    Outer,
    Hole { hole: usize },
    /// Endpoint of a slit (shared by both sides).
    SlitTip { slit: usize },
    /// Node on one side of a slit: `side` is +1 for the left of the slit's
    /// direction and -1 for the right.
    Slit { slit: usize, side: i8 },
}

impl Marker {
    pub fn is_boundary(&self) -> bool {
        !matches!(self, Marker::Interior)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise index triples.
    pub triangles: Vec<[usize; 3]>,
    pub markers: Vec<Marker>,
    /// Target edge length.
    pub h: f64,
}

impl Mesh {
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut best = 180.0f64;
        for tri in &self.triangles {
            let p = tri.map(|i| self.vertices[i]);
            for k in 0..3 {
                let a = p[k];
                let u = [p[(k + 1) % 3][0] - a[0], p[(k + 1) % 3][1] - a[1]];
                let v = [p[(k + 2) % 3][0] - a[0], p[(k + 2) % 3][1] - a[1]];
                let ang = (u[0] * v[1] - u[1] * v[0]).abs().atan2(u[0] * v[0] + u[1] * v[1]);
                best = best.min(ang.to_degrees());
            }
        }
        best
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&i| self.markers[i].is_boundary()).collect()
    }
}

fn dist_to_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Constrained Delaunay mesh refined to triangles of area at most that of the
/// equilateral triangle with side `h` and angles of at least 20°.
pub fn mesh_polygon(p: &Polygon, h: f64) -> Result<Mesh> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("mesh size must be positive, got {h}")));
    }
    let scale = p.diameter().max(1e-300);
    let tol = 1e-10 * scale;
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let insert = |q: [f64; 2], cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>| {
        cdt.insert(Point2::new(q[0], q[1]))
            .map_err(|e| Error::MeshFailure(format!("cannot insert ({}, {}): {e:?}", q[0], q[1])))
    };
    for (a, b) in p.boundary_segments() {
        let (a, b) = (a.to_f64(), b.to_f64());
        let ha = insert(a, &mut cdt)?;
        let hb = insert(b, &mut cdt)?;
        if cdt.can_add_constraint(ha, hb) {
            cdt.add_constraint(ha, hb);
        } else if !cdt.exists_constraint(ha, hb) {
            return Err(Error::MeshFailure(format!("constraint ({}, {})-({}, {}) crosses another", a[0], a[1], b[0], b[1])));
        }
    }
    let max_area = h * h * 3f64.sqrt() / 4.0;
    let params = RefinementParameters::<f64>::new()
        .with_max_allowed_area(max_area)
        .with_angle_limit(AngleLimit::from_deg(20.0))
        .with_max_additional_vertices(20_000_000);
    let res = cdt.refine(params);
    if !res.refinement_complete {
        return Err(Error::MeshFailure("refinement hit the vertex limit".into()));
    }

    // The whole hull is refined (outer-face exclusion misreads slits); keep
    // faces whose centroid lies in the domain.
    let mut index = vec![usize::MAX; cdt.num_vertices()];
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    for f in cdt.inner_faces() {
        let vs = f.vertices();
        let pts = vs.map(|v| [v.position().x, v.position().y]);
        let c = [(pts[0][0] + pts[1][0] + pts[2][0]) / 3.0, (pts[0][1] + pts[1][1] + pts[2][1]) / 3.0];
        if !p.contains_f64(c) {
            continue;
        }
        let mut tri = [0usize; 3];
        for k in 0..3 {
            let i = vs[k].fix().index();
            if index[i] == usize::MAX {
                index[i] = vertices.len();
                vertices.push(pts[k]);
            }
            tri[k] = index[i];
        }
        triangles.push(tri);
    }
    if triangles.is_empty() {
        return Err(Error::MeshFailure("no triangles inside the domain".into()));
    }

    let outer: Vec<[f64; 2]> = p.outer.iter().map(|q| q.to_f64()).collect();
    let holes: Vec<Vec<[f64; 2]>> = p.holes.iter().map(|r| r.iter().map(|q| q.to_f64()).collect()).collect();
    let slits: Vec<Vec<[f64; 2]>> = p.slits.iter().map(|r| r.iter().map(|q| q.to_f64()).collect()).collect();
    let on_ring = |q: [f64; 2], ring: &[[f64; 2]]| (0..ring.len()).any(|i| dist_to_segment(q, ring[i], ring[(i + 1) % ring.len()]) <= tol);
    let near = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol;

    let mut markers: Vec<Marker> = vertices
        .iter()
        .map(|&q| {
            if on_ring(q, &outer) {
                return Marker::Outer;
            }
            for (hi, r) in holes.iter().enumerate() {
                if on_ring(q, r) {
                    return Marker::Hole { hole: hi };
                }
            }
            for (si, line) in slits.iter().enumerate() {
                if near(q, line[0]) || near(q, *line.last().unwrap()) {
                    return Marker::SlitTip { slit: si };
                }
                if line.windows(2).any(|w| dist_to_segment(q, w[0], w[1]) <= tol) {
                    return Marker::Slit { slit: si, side: 1 };
                }
            }
            Marker::Interior
        })
        .collect();

    // Split slit nodes: triangles on the right side get a fresh copy.
    let n0 = vertices.len();
    let mut copy = vec![usize::MAX; n0];
    for tri in triangles.iter_mut() {
        for k in 0..3 {
            let v = tri[k];
            let Marker::Slit { slit, .. } = markers[v] else { continue };
            let c = {
                let pts = tri.map(|i| vertices[i]);
                [(pts[0][0] + pts[1][0] + pts[2][0]) / 3.0, (pts[0][1] + pts[1][1] + pts[2][1]) / 3.0]
            };
            if slit_side(&slits[slit], vertices[v], c, tol) < 0 {
                if copy[v] == usize::MAX {
                    copy[v] = vertices.len();
                    vertices.push(vertices[v]);
                    markers.push(Marker::Slit { slit, side: -1 });
                }
                tri[k] = copy[v];
            }
        }
    }
    Ok(Mesh { vertices, triangles, markers, h })
}

/// Side of the slit polyline at node `v` on which point `c` lies: +1 left, -1 right.
fn slit_side(line: &[[f64; 2]], v: [f64; 2], c: [f64; 2], tol: f64) -> i8 {
    let ang = |u: [f64; 2]| u[1].atan2(u[0]);
    // Forward and backward directions of the polyline at v.
    let mut fwd = None;
    let mut back = None;
    for i in 0..line.len() - 1 {
        let (a, b) = (line[i], line[i + 1]);
        if dist_to_segment(v, a, b) > tol {
            continue;
        }
        let at_b = (v[0] - b[0]).abs() <= tol && (v[1] - b[1]).abs() <= tol;
        let at_a = (v[0] - a[0]).abs() <= tol && (v[1] - a[1]).abs() <= tol;
        if !at_b {
            fwd = Some([b[0] - v[0], b[1] - v[1]]);
        }
        if !at_a {
            back = Some([a[0] - v[0], a[1] - v[1]]);
        }
    }
    let (Some(f), Some(b)) = (fwd, back) else { return 1 };
    let rel = |u: [f64; 2]| (ang(u) - ang(f)).rem_euclid(std::f64::consts::TAU);
    if rel([c[0] - v[0], c[1] - v[1]]) < rel(b) {
        1
    } else {
        -1
    }
}
