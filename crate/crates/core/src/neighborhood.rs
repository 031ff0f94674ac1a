//! Distances to the cone points and ε-neighbourhoods of the singular set.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::develop::{apex_seeds, explore_windows, point_seeds, WindowEvent};
use crate::flow::{trace_param, PhasePoint, Termination, DEFAULT_CONE_TOL};
use crate::geom::Vec2;
use crate::scalar::Scalar;
use crate::surface::FlatSurface;

/// Geodesic distance from the point `p` of triangle `t` to the nearest cone
/// point. Exact up to rounding: every straight path from `p` is unfolded
/// until the nearest cone point is certain. Surfaces without cone points
/// return the diameter bound, a lower bound for the (infinite) distance.
pub fn surface_distance_to_p<S: Scalar>(s: &FlatSurface<S>, t: usize, p: &Vec2<S>) -> f64 {
    let cap = s.diameter_bound();
    if s.cone_points.is_empty() {
        return cap;
    }
    let corner = (0..3).find(|&k| {
        let v = &s.triangles[t][k];
        if S::EXACT {
            v == p
        } else {
            (v.clone() - p.clone()).norm() <= 1e-12
        }
    });
    let seeds = match corner {
        Some(k) if s.cone_at(t, k).is_some() => return 0.0,
        Some(k) => apex_seeds(s, t, k),
        None => point_seeds(s, t, p),
    };
    let mut best = cap;
    let ray = |tri: usize, origin: &Vec2<S>, dir: &Vec2<S>, limit: f64| -> Option<f64> {
        if dir.is_zero_tol(0.0) {
            return None;
        }
        let budget = S::from_f64(limit / dir.norm());
        let start = PhasePoint::new(tri, origin.clone(), dir.clone());
        match trace_param(s, &start, budget, DEFAULT_CONE_TOL, false) {
            Ok(tr) if matches!(tr.termination, Termination::HitConePoint { .. }) => Some(tr.total_length),
            _ => None,
        }
    };
    for seed in &seeds {
        for r in &seed.rays {
            if let Some(l) = ray(seed.tri, &seed.origin, r, best) {
                best = best.min(l);
            }
        }
    }
    explore_windows(s, &seeds, best, |ev| {
        if let WindowEvent::Vertex { seed, tri, corner, vec } = ev {
            let len = vec.norm();
            if len >= best {
                return None;
            }
            if s.cone_at(tri, corner).is_some() {
                best = len;
            } else {
                let sd = &seeds[seed];
                if let Some(l) = ray(sd.tri, &sd.origin, &vec, best) {
                    best = best.min(l);
                }
            }
            return Some(best);
        }
        None
    });
    best
}

/// A circular sector piece: the part of triangle `tri` inside the wedge
/// `(lo, hi)` at `apex` (chart coordinates) and within `radius` of it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorPiece {
    pub cone: usize,
    pub tri: usize,
    pub apex: [f64; 2],
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub radius: f64,
    pub area: f64,
}

impl SectorPiece {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let v = [p[0] - self.apex[0], p[1] - self.apex[1]];
        cross(self.lo, v) >= 0.0 && cross(v, self.hi) >= 0.0 && v[0] * v[0] + v[1] * v[1] < self.radius * self.radius
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeNeighborhood {
    pub epsilon: f64,
    pub pieces: Vec<SectorPiece>,
    /// Sum of exact piece areas for each cone point.
    pub cone_areas: Vec<f64>,
    /// Area of the union of all pieces.
    pub area: f64,
    /// No two pieces overlap: each neighbourhood is an embedded cone sector.
    pub embedded: bool,
}

impl ConeNeighborhood {
    pub fn contains<S: Scalar>(&self, tri: usize, p: &Vec2<S>) -> bool {
        let q = p.to_f64();
        self.pieces.iter().any(|pc| pc.tri == tri && pc.contains(q))
    }
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Clip a convex polygon to the half-plane `cross(dir, x - a) >= 0`.
fn clip_half_plane(poly: &[[f64; 2]], a: [f64; 2], dir: [f64; 2]) -> Vec<[f64; 2]> {
    let side = |p: [f64; 2]| cross(dir, sub(p, a));
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let (sp, sq) = (side(p), side(q));
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp >= 0.0) != (sq >= 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Signed area of the intersection of the disk `|x| < r` with the triangle `(0, a, b)`.
fn disk_triangle_area(a: [f64; 2], b: [f64; 2], r: f64) -> f64 {
    let r2 = r * r;
    let d = sub(b, a);
    // Points where segment a->b meets the circle.
    let qa = d[0] * d[0] + d[1] * d[1];
    if qa == 0.0 {
        return 0.0;
    }
    let qb = a[0] * d[0] + a[1] * d[1];
    let qc = a[0] * a[0] + a[1] * a[1] - r2;
    let disc = qb * qb - qa * qc;
    let sector = |u: [f64; 2], v: [f64; 2]| 0.5 * r2 * cross(u, v).atan2(u[0] * v[0] + u[1] * v[1]);
    let tri = |u: [f64; 2], v: [f64; 2]| 0.5 * cross(u, v);
    let at = |t: f64| [a[0] + t * d[0], a[1] + t * d[1]];
    if disc <= 0.0 {
        return sector(a, b);
    }
    let sq = disc.sqrt();
    let t0 = ((-qb - sq) / qa).clamp(0.0, 1.0);
    let t1 = ((-qb + sq) / qa).clamp(0.0, 1.0);
    let p0 = at(t0);
    let p1 = at(t1);
    sector(a, p0) + tri(p0, p1) + sector(p1, b)
}

/// Area of a convex polygon intersected with the disk of radius `r` at `c`.
fn polygon_disk_area(poly: &[[f64; 2]], c: [f64; 2], r: f64) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| disk_triangle_area(sub(poly[i], c), sub(poly[(i + 1) % n], c), r))
        .sum()
}

fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>() * 0.5
}

const ARC_SEGMENTS: usize = 1024;

/// Convex polygon for a piece: triangle ∩ wedge ∩ inscribed polygonal disk.
fn piece_polygon(tri: &[[f64; 2]; 3], pc: &SectorPiece) -> Vec<[f64; 2]> {
    let mut poly: Vec<[f64; 2]> = tri.to_vec();
    poly = clip_half_plane(&poly, pc.apex, pc.lo);
    poly = clip_half_plane(&poly, pc.apex, [-pc.hi[0], -pc.hi[1]]);
    for i in 0..ARC_SEGMENTS {
        let a0 = TAU * i as f64 / ARC_SEGMENTS as f64;
        let a1 = TAU * (i + 1) as f64 / ARC_SEGMENTS as f64;
        let p = [pc.apex[0] + pc.radius * a0.cos(), pc.apex[1] + pc.radius * a0.sin()];
        let q = [pc.apex[0] + pc.radius * a1.cos(), pc.apex[1] + pc.radius * a1.sin()];
        if poly.is_empty() {
            break;
        }
        // Skip arc chords far from the polygon.
        poly = clip_half_plane(&poly, p, sub(q, p));
    }
    poly
}

/// Area of a union of convex counterclockwise polygons by integrating
/// `x dy - y dx` over the boundary parts not covered by other polygons.
/// Coincident edges with equal direction are kept once (lowest index).
pub fn union_area(polys: &[Vec<[f64; 2]>]) -> f64 {
    let mut total = 0.0;
    for (i, p) in polys.iter().enumerate() {
        let n = p.len();
        if n < 3 {
            continue;
        }
        for e in 0..n {
            let a = p[e];
            let b = p[(e + 1) % n];
            let d = sub(b, a);
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            if len == 0.0 {
                continue;
            }
            let mut covered: Vec<(f64, f64)> = Vec::new();
            for (j, q) in polys.iter().enumerate() {
                if j == i || q.len() < 3 {
                    continue;
                }
                let m = q.len();
                let (mut t0, mut t1) = (0.0f64, 1.0f64);
                let mut empty = false;
                for k in 0..m {
                    let u = q[k];
                    let w = sub(q[(k + 1) % m], u);
                    let wl = (w[0] * w[0] + w[1] * w[1]).sqrt();
                    if wl == 0.0 {
                        continue;
                    }
                    let ha = cross(w, sub(a, u)) / wl;
                    let hb = cross(w, sub(b, u)) / wl;
                    let eps = 1e-12 * (1.0 + len);
                    if ha.abs() <= eps && hb.abs() <= eps {
                        // collinear with this edge of q
                        let same = w[0] * d[0] + w[1] * d[1] > 0.0;
                        if !(same && j < i) {
                            empty = true;
                            break;
                        }
                        continue;
                    }
                    // need h > 0 along the parameter range
                    if ha <= 0.0 && hb <= 0.0 {
                        empty = true;
                        break;
                    }
                    let t = ha / (ha - hb);
                    if ha <= 0.0 {
                        t0 = t0.max(t);
                    } else if hb <= 0.0 {
                        t1 = t1.min(t);
                    }
                }
                if !empty && t1 > t0 {
                    covered.push((t0, t1));
                }
            }
            covered.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut cur = 0.0;
            let at = |t: f64| [a[0] + t * d[0], a[1] + t * d[1]];
            for (c0, c1) in covered {
                if c0 > cur {
                    total += 0.5 * cross(at(cur), at(c0));
                }
                cur = cur.max(c1);
            }
            if cur < 1.0 {
                total += 0.5 * cross(at(cur), at(1.0));
            }
        }
    }
    total
}

/// Cover of the ε-neighbourhood of the cone points by sector pieces.
pub fn cone_neighborhood<S: Scalar>(s: &FlatSurface<S>, eps: f64) -> ConeNeighborhood {
    let mut pieces = Vec::new();
    let mut cone_areas = vec![0.0; s.cone_points.len()];
    if eps > 0.0 {
        for (ci, cone) in s.cone_points.iter().enumerate() {
            let (t, k) = s.classes[cone.class].corners[0];
            let seeds = apex_seeds(s, t, k);
            explore_windows(s, &seeds, eps, |ev| {
                let piece = match ev {
                    WindowEvent::SeedTriangle { seed } => {
                        let sd = &seeds[seed];
                        let (lo, hi) = match &sd.windows[0] {
                            (_, lo, hi) => (lo.to_f64(), hi.to_f64()),
                        };
                        Some((sd.tri, sd.origin.to_f64(), lo, hi))
                    }
                    WindowEvent::Region(w) => {
                        let inv = w.dev.map.inverse();
                        Some((w.dev.tri, inv.apply(&w.origin).to_f64(), inv.apply_vec(&w.lo).to_f64(), inv.apply_vec(&w.hi).to_f64()))
                    }
                    WindowEvent::Vertex { .. } => None,
                };
                if let Some((tri, apex, lo, hi)) = piece {
                    let corners: [[f64; 2]; 3] = std::array::from_fn(|i| s.triangles[tri][i].to_f64());
                    let mut poly = corners.to_vec();
                    poly = clip_half_plane(&poly, apex, lo);
                    poly = clip_half_plane(&poly, apex, [-hi[0], -hi[1]]);
                    let area = if poly.len() >= 3 { polygon_disk_area(&poly, apex, eps) } else { 0.0 };
                    cone_areas[ci] += area;
                    pieces.push(SectorPiece { cone: ci, tri, apex, lo, hi, radius: eps, area });
                }
                None
            });
        }
    }
    let exact_sum: f64 = cone_areas.iter().sum();
    let (area, embedded) = union_of_pieces(s, &pieces, exact_sum);
    ConeNeighborhood { epsilon: eps, pieces, cone_areas, area, embedded }
}

fn union_of_pieces<S: Scalar>(s: &FlatSurface<S>, pieces: &[SectorPiece], exact_sum: f64) -> (f64, bool) {
    if pieces.is_empty() {
        return (0.0, true);
    }
    let mut by_tri: Vec<Vec<Vec<[f64; 2]>>> = vec![Vec::new(); s.num_triangles()];
    for pc in pieces {
        let tri: [[f64; 2]; 3] = std::array::from_fn(|i| s.triangles[pc.tri][i].to_f64());
        let poly = piece_polygon(&tri, pc);
        if poly.len() >= 3 && polygon_area(&poly) > 0.0 {
            by_tri[pc.tri].push(poly);
        }
    }
    let mut poly_sum = 0.0;
    let mut union = 0.0;
    for polys in &by_tri {
        poly_sum += polys.iter().map(|p| polygon_area(p)).sum::<f64>();
        union += union_area(polys);
    }
    if union >= poly_sum * (1.0 - 1e-9) {
        (exact_sum, true)
    } else {
        // Rescale the polygonal union by the arc discretization error.
        (union * exact_sum / poly_sum, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polygon::corpus;
    use crate::surface::double;
    use std::f64::consts::PI;

    #[test]
    fn disk_triangle_pieces() {
        // quarter disk inside a big right triangle wedge
        let a = polygon_disk_area(&[[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]], [0.0, 0.0], 1.0);
        assert!((a - PI / 4.0).abs() < 1e-12);
        // disk fully containing a triangle
        let a = polygon_disk_area(&[[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]], [0.0, 0.0], 1.0);
        assert!((a - 0.005).abs() < 1e-15);
    }

    #[test]
    fn union_of_overlapping_squares() {
        let sq = |x: f64, y: f64| vec![[x, y], [x + 1.0, y], [x + 1.0, y + 1.0], [x, y + 1.0]];
        assert!((union_area(&[sq(0.0, 0.0), sq(0.5, 0.0)]) - 1.5).abs() < 1e-12);
        assert!((union_area(&[sq(0.0, 0.0), sq(1.0, 0.0)]) - 2.0).abs() < 1e-12);
        assert!((union_area(&[sq(0.0, 0.0), sq(0.0, 0.0)]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pillowcase_neighbourhood_is_four_half_disks() {
        let s = double(&corpus::unit_square()).unwrap().to_f64_surface();
        let n = cone_neighborhood(&s, 0.1);
        assert!(n.embedded);
        assert!((n.area - 0.02 * PI).abs() < 1e-12);
        assert!(cone_neighborhood(&s, 0.0).pieces.is_empty());
    }

    #[test]
    fn distance_from_face_centre_is_half_diagonal() {
        let s = double(&corpus::unit_square()).unwrap();
        let (t, p) = s.locate(&Vec2::from_f64(0.5, 0.5), false).unwrap();
        assert!((surface_distance_to_p(&s, t, &p) - 0.5f64.sqrt()).abs() < 1e-12);
        let (t, p) = s.locate(&Vec2::from_f64(0.0, 0.0), false).unwrap();
        assert_eq!(surface_distance_to_p(&s, t, &p), 0.0);
    }
}
