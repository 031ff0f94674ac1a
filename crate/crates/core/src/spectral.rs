//! Eigenfunction mass near the polygon vertices.
//!
//! The neighbourhood `U_ε` is a union of convex shapes (disks or axis
//! squares) centred at the vertices. For every mesh triangle the restriction
//! of the mass form to the triangle's part of `U_ε` is computed once, as a
//! 3x3 matrix, by clipping the triangle against the shapes, taking the union
//! by inclusion-exclusion and integrating with a 7-point rule on a fan of
//! the clipped polygons. The rule is exact for the quadratic integrands of
//! linear elements, so `∫_U u²` of any mesh function is then a sum of small
//! quadratic forms.

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::{solve_eigs, EigenPair};
use crate::error::{Error, Result};
use crate::fem::{element_matrices, BoundaryCondition};
use crate::mesh::{mesh_polygon, Mesh};
use crate::polygon::Polygon;

/// Vertices of the polygon standing in for a disk.
pub const DISK_SEGMENTS: usize = 1024;

/// Inclusion-exclusion is used for triangles meeting at most this many
/// shapes; busier triangles are subdivided first.
const MAX_OVERLAP: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    /// Disks of radius ε.
    Disks,
    /// Axis-parallel squares of half-side ε.
    CornerBoxes,
}

impl Neighborhood {
    pub fn name(&self) -> &'static str {
        match self {
            Neighborhood::Disks => "disks",
            Neighborhood::CornerBoxes => "corner_boxes",
        }
    }
}

/// A convex piece of the neighbourhood.
#[derive(Clone, Debug)]
pub struct Shape {
    pub center: [f64; 2],
    pub eps: f64,
    pub kind: Neighborhood,
    /// Counterclockwise polygon used for clipping.
    pub poly: Vec<[f64; 2]>,
}

impl Shape {
    pub fn new(center: [f64; 2], eps: f64, kind: Neighborhood) -> Self {
        let poly = match kind {
            Neighborhood::Disks => {
                // Same area as the disk.
                let n = DISK_SEGMENTS as f64;
                let t = std::f64::consts::TAU / n;
                let r = eps * (std::f64::consts::TAU / (n * t.sin())).sqrt();
                (0..DISK_SEGMENTS)
                    .map(|i| {
                        let a = t * i as f64;
                        [center[0] + r * a.cos(), center[1] + r * a.sin()]
                    })
                    .collect()
            }
            Neighborhood::CornerBoxes => {
                let [x, y] = center;
                vec![[x - eps, y - eps], [x + eps, y - eps], [x + eps, y + eps], [x - eps, y + eps]]
            }
        };
        Shape { center, eps, kind, poly }
    }

    /// Membership in the clipping polygon.
    fn contains(&self, p: [f64; 2]) -> bool {
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        if let Neighborhood::Disks = self.kind {
            let r2 = d[0] * d[0] + d[1] * d[1];
            let t = std::f64::consts::PI / DISK_SEGMENTS as f64;
            let outer = self.eps * self.eps * t / (t.sin() * t.cos());
            if r2 < self.eps * self.eps * t / t.tan() * (1.0 - 1e-12) {
                return true;
            }
            if r2 > outer * (1.0 + 1e-12) {
                return false;
            }
        }
        let n = self.poly.len();
        (0..n).all(|i| cross(self.poly[i], self.poly[(i + 1) % n], p) >= 0.0)
    }

    fn bbox(&self) -> [f64; 4] {
        bbox(&self.poly)
    }
}

fn bbox(pts: &[[f64; 2]]) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in pts {
        b[0] = b[0].min(p[0]);
        b[1] = b[1].min(p[1]);
        b[2] = b[2].max(p[0]);
        b[3] = b[3].max(p[1]);
    }
    b
}

fn overlaps(a: [f64; 4], b: [f64; 4]) -> bool {
    a[0] <= b[2] && b[0] <= a[2] && a[1] <= b[3] && b[1] <= a[3]
}

/// Shapes centred at the control vertices (outer and hole vertices, slit ends).
pub fn neighborhood_shapes(p: &Polygon, eps: f64, kind: Neighborhood) -> Vec<Shape> {
    p.control_vertices().into_iter().map(|c| Shape::new(c, eps, kind)).collect()
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Intersection of the convex polygon `p` with the convex polygon `clip`.
fn clip_convex(mut p: Vec<[f64; 2]>, clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = clip.len();
    for i in 0..n {
        if p.len() < 3 {
            return Vec::new();
        }
        let (a, b) = (clip[i], clip[(i + 1) % n]);
        let side: Vec<f64> = p.iter().map(|&q| cross(a, b, q)).collect();
        if side.iter().all(|&s| s >= 0.0) {
            continue;
        }
        if side.iter().all(|&s| s <= 0.0) {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(p.len() + 1);
        for j in 0..p.len() {
            let k = (j + 1) % p.len();
            let (sj, sk) = (side[j], side[k]);
            if sj >= 0.0 {
                out.push(p[j]);
            }
            if (sj >= 0.0) != (sk >= 0.0) {
                let t = sj / (sj - sk);
                out.push([p[j][0] + t * (p[k][0] - p[j][0]), p[j][1] + t * (p[k][1] - p[j][1])]);
            }
        }
        p = out;
    }
    if p.len() < 3 {
        Vec::new()
    } else {
        p
    }
}

/// Degree-5 rule on the reference triangle: barycentric point and weight.
const RULE: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Barycentric coordinates of `q` with respect to `t`.
fn barycentric(t: &[[f64; 2]; 3], q: [f64; 2]) -> [f64; 3] {
    let area = cross(t[0], t[1], t[2]);
    let l1 = cross(q, t[1], t[2]) / area;
    let l2 = cross(t[0], q, t[2]) / area;
    [l1, l2, 1.0 - l1 - l2]
}

/// `∫_poly φ_a φ_b` for the linear hat functions of `tri`.
fn polygon_mass(tri: &[[f64; 2]; 3], poly: &[[f64; 2]]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for i in 1..poly.len() - 1 {
        let s = [poly[0], poly[i], poly[i + 1]];
        let area = 0.5 * cross(s[0], s[1], s[2]);
        if area <= 0.0 {
            continue;
        }
        for (bc, w) in RULE {
            let q = [
                bc[0] * s[0][0] + bc[1] * s[1][0] + bc[2] * s[2][0],
                bc[0] * s[0][1] + bc[1] * s[1][1] + bc[2] * s[2][1],
            ];
            let phi = barycentric(tri, q);
            for a in 0..3 {
                for b in 0..3 {
                    m[a][b] += w * area * phi[a] * phi[b];
                }
            }
        }
    }
    m
}

fn add_scaled(m: &mut [[f64; 3]; 3], s: f64, x: &[[f64; 3]; 3]) {
    for a in 0..3 {
        for b in 0..3 {
            m[a][b] += s * x[a][b];
        }
    }
}

/// `∫ φ_a φ_b` over `piece ∩ (∪ shapes)`, where `piece` is a convex part of
/// the mesh triangle `tri`.
fn union_mass(tri: &[[f64; 2]; 3], piece: &[[f64; 2]], shapes: &[&Shape], depth: usize) -> [[f64; 3]; 3] {
    let pb = bbox(piece);
    let near: Vec<&Shape> = shapes.iter().copied().filter(|s| overlaps(pb, s.bbox())).collect();
    if near.is_empty() {
        return [[0.0; 3]; 3];
    }
    if near.iter().any(|s| piece.iter().all(|&q| s.contains(q))) {
        return polygon_mass(tri, piece);
    }
    let mut m = [[0.0; 3]; 3];
    if near.len() > MAX_OVERLAP && depth < 8 && piece.len() == 3 {
        let [a, b, c] = [piece[0], piece[1], piece[2]];
        let mid = |p: [f64; 2], q: [f64; 2]| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        for sub in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
            add_scaled(&mut m, 1.0, &union_mass(tri, &sub, &near, depth + 1));
        }
        return m;
    }
    // Inclusion-exclusion over the shapes that reach the piece.
    let clipped: Vec<Vec<[f64; 2]>> = near.iter().map(|s| clip_convex(piece.to_vec(), &s.poly)).collect();
    let live: Vec<usize> = (0..near.len()).filter(|&i| !clipped[i].is_empty()).collect();
    fn recurse(
        tri: &[[f64; 2]; 3],
        near: &[&Shape],
        live: &[usize],
        start: usize,
        current: &[[f64; 2]],
        count: usize,
        m: &mut [[f64; 3]; 3],
    ) {
        for idx in start..live.len() {
            let inter = clip_convex(current.to_vec(), &near[live[idx]].poly);
            if inter.is_empty() {
                continue;
            }
            let sign = if count % 2 == 0 { 1.0 } else { -1.0 };
            add_scaled(m, sign, &polygon_mass(tri, &inter));
            recurse(tri, near, live, idx + 1, &inter, count + 1, m);
        }
    }
    recurse(tri, &near, &live, 0, piece, 0, &mut m);
    m
}

/// Restriction of the mass form to a neighbourhood, triangle by triangle.
#[derive(Clone, Debug)]
pub struct RegionMass {
    /// Triangles meeting the region and their local matrices.
    pub local: Vec<(usize, [[f64; 3]; 3])>,
}

impl RegionMass {
    pub fn new(mesh: &Mesh, shapes: &[Shape]) -> Self {
        let refs: Vec<&Shape> = shapes.iter().collect();
        let local = (0..mesh.triangles.len())
            .into_par_iter()
            .filter_map(|t| {
                let tri = mesh.triangles[t].map(|i| mesh.vertices[i]);
                let m = union_mass(&tri, &tri, &refs, 0);
                m.iter().flatten().any(|&x| x != 0.0).then_some((t, m))
            })
            .collect();
        RegionMass { local }
    }

    /// `∫_U u²` for node values `u`.
    pub fn integrate(&self, mesh: &Mesh, u: &[f64]) -> f64 {
        self.local.iter().map(|(t, m)| local_form(m, mesh.triangles[*t].map(|i| u[i]))).sum()
    }
}

fn local_form(m: &[[f64; 3]; 3], x: [f64; 3]) -> f64 {
    (0..3).map(|a| x[a] * (0..3).map(|b| m[a][b] * x[b]).sum::<f64>()).sum()
}

/// `∫_B u²` for node values `u`.
pub fn total_mass(mesh: &Mesh, u: &[f64]) -> f64 {
    mesh.triangles
        .iter()
        .map(|tri| local_form(&element_matrices(tri.map(|i| mesh.vertices[i])).1, tri.map(|i| u[i])))
        .sum()
}

/// Fraction of the mass of `e` in the ε-neighbourhood of the vertices of `p`.
pub fn mass_ratio(e: &EigenPair, mesh: &Mesh, p: &Polygon, eps: f64, kind: Neighborhood) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::EpsNonPositive(eps));
    }
    let region = RegionMass::new(mesh, &neighborhood_shapes(p, eps, kind));
    Ok(region.integrate(mesh, &e.u) / total_mass(mesh, &e.u))
}

#[derive(Clone, Debug, Serialize)]
pub struct ControlReport {
    pub eps: f64,
    pub bc: BoundaryCondition,
    pub neighborhood: Neighborhood,
    pub h: f64,
    pub k_max: usize,
    pub nodes: usize,
    pub triangles: usize,
    pub lambda_sq: Vec<f64>,
    pub ratios: Vec<f64>,
    pub c_hat: f64,
    /// Index of the eigenpair attaining `c_hat`.
    pub argmin: usize,
}

impl ControlReport {
    /// Mass ratios of already computed eigenpairs.
    pub fn from_pairs(
        mesh: &Mesh,
        pairs: &[EigenPair],
        p: &Polygon,
        eps: f64,
        bc: BoundaryCondition,
        kind: Neighborhood,
    ) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::EpsNonPositive(eps));
        }
        let region = RegionMass::new(mesh, &neighborhood_shapes(p, eps, kind));
        let ratios: Vec<f64> = pairs.iter().map(|e| region.integrate(mesh, &e.u) / total_mass(mesh, &e.u)).collect();
        let argmin = (0..ratios.len()).fold(0, |b, i| if ratios[i] < ratios[b] { i } else { b });
        Ok(ControlReport {
            eps,
            bc,
            neighborhood: kind,
            h: mesh.h,
            k_max: pairs.len(),
            nodes: mesh.vertices.len(),
            triangles: mesh.triangles.len(),
            lambda_sq: pairs.iter().map(|e| e.lambda_sq).collect(),
            c_hat: ratios.get(argmin).copied().unwrap_or(f64::NAN),
            ratios,
            argmin,
        })
    }
}

/// Meshes `p`, solves for `k_max` eigenpairs and measures their mass near the vertices.
pub fn control_constant(p: &Polygon, eps: f64, bc: BoundaryCondition, k_max: usize, h: f64) -> Result<ControlReport> {
    control_constant_with(p, eps, bc, k_max, h, Neighborhood::Disks)
}

pub fn control_constant_with(
    p: &Polygon,
    eps: f64,
    bc: BoundaryCondition,
    k_max: usize,
    h: f64,
    kind: Neighborhood,
) -> Result<ControlReport> {
    if !(eps > 0.0) {
        return Err(Error::EpsNonPositive(eps));
    }
    let mesh = mesh_polygon(p, h)?;
    let pairs = solve_eigs(&mesh, bc, k_max)?;
    ControlReport::from_pairs(&mesh, &pairs, p, eps, bc, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polygon::corpus;
    use std::f64::consts::PI;

    #[test]
    fn clipping_squares() {
        let a = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        let b = vec![[1.0, 1.0], [3.0, 1.0], [3.0, 3.0], [1.0, 3.0]];
        let c = clip_convex(a, &b);
        let area: f64 = (1..c.len() - 1).map(|i| 0.5 * cross(c[0], c[i], c[i + 1])).sum();
        assert!((area - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rule_integrates_quadratics() {
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let m = polygon_mass(&tri, &tri);
        let exact = element_matrices(tri).1;
        for a in 0..3 {
            for b in 0..3 {
                assert!((m[a][b] - exact[a][b]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn disk_area_on_constant_function() {
        let mesh = mesh_polygon(&corpus::unit_square(), 0.05).unwrap();
        let region = RegionMass::new(&mesh, &[Shape::new([0.5, 0.5], 0.3, Neighborhood::Disks)]);
        let one = vec![1.0; mesh.vertices.len()];
        assert!((region.integrate(&mesh, &one) - PI * 0.09).abs() < 1e-12);
        // Four quarter disks at the corners.
        let region = RegionMass::new(&mesh, &neighborhood_shapes(&corpus::unit_square(), 0.3, Neighborhood::Disks));
        assert!((region.integrate(&mesh, &one) - PI * 0.09).abs() < 1e-12);
    }

    #[test]
    fn overlapping_shapes_count_once() {
        let mesh = mesh_polygon(&corpus::unit_square(), 0.1).unwrap();
        let one = vec![1.0; mesh.vertices.len()];
        let shapes = [
            Shape::new([0.4, 0.5], 0.2, Neighborhood::CornerBoxes),
            Shape::new([0.6, 0.5], 0.2, Neighborhood::CornerBoxes),
            Shape::new([0.5, 0.6], 0.2, Neighborhood::CornerBoxes),
        ];
        // Union: [0.2,0.8]x[0.3,0.7] plus [0.3,0.7]x[0.7,0.8].
        let want = 0.6 * 0.4 + 0.4 * 0.1;
        assert!((RegionMass::new(&mesh, &shapes).integrate(&mesh, &one) - want).abs() < 1e-12);
    }

    #[test]
    fn huge_eps_covers_everything() {
        let p = corpus::l_shape();
        let mesh = mesh_polygon(&p, 0.2).unwrap();
        let e = &solve_eigs(&mesh, BoundaryCondition::Dirichlet, 1).unwrap()[0];
        let r = mass_ratio(e, &mesh, &p, 10.0, Neighborhood::Disks).unwrap();
        assert!((r - 1.0).abs() < 1e-12, "{r}");
        assert!(mass_ratio(e, &mesh, &p, 0.0, Neighborhood::Disks).is_err());
    }
}
