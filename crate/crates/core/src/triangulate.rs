//! Exact constrained triangulation of a polygonal domain using only its
//! vertices.
//!
//! Segments between vertex pairs are admitted greedily by length when they
//! stay inside the domain and cross nothing already admitted; boundary and
//! slit segments are admitted first. A maximal non-crossing set of interior
//! segments triangulates the domain, and the triangles are read off as
//! mutually adjacent triples. Intended for the small vertex counts of
//! polygon corpora (the cost is cubic in the vertex count).

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geom::{orient, segments_cross_properly, Vec2};
use crate::polygon::{Point, Polygon};
use crate::scalar::{Exact, Scalar};

#[derive(Clone, Debug)]
pub struct Triangulation {
    /// Distinct vertex positions.
    pub points: Vec<Point>,
    /// Counterclockwise index triples.
    pub triangles: Vec<[usize; 3]>,
    /// Constraint segments (boundary and slits), as sorted index pairs.
    pub constraints: BTreeSet<(usize, usize)>,
}

impl Triangulation {
    pub fn is_constraint(&self, a: usize, b: usize) -> bool {
        self.constraints.contains(&(a.min(b), a.max(b)))
    }
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

pub fn triangulate(poly: &Polygon) -> Result<Triangulation> {
    let mut points: Vec<Point> = Vec::new();
    let index_of = |p: &Point, points: &mut Vec<Point>| -> usize {
        match points.iter().position(|q| q == p) {
            Some(i) => i,
            None => {
                points.push(p.clone());
                points.len() - 1
            }
        }
    };
    let mut constraints = BTreeSet::new();
    for (a, b) in poly.boundary_segments() {
        let ia = index_of(&a, &mut points);
        let ib = index_of(&b, &mut points);
        constraints.insert(key(ia, ib));
    }
    let n = points.len();

    let inside = |p: &Point| poly.contains_strictly(p, |q| q.clone(), 0.0);
    let half = Exact::from_i64(1) / Exact::from_i64(2);

    let mut candidates: Vec<(Exact, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if constraints.contains(&(i, j)) {
                continue;
            }
            let (a, b) = (&points[i], &points[j]);
            let blocked = (0..n).any(|k| {
                k != i && k != j && orient(a, b, &points[k], 0.0) == Ordering::Equal && strictly_between(&points[k], a, b)
            });
            if blocked {
                continue;
            }
            if constraints
                .iter()
                .any(|&(c, d)| segments_cross_properly(a, b, &points[c], &points[d], 0.0))
            {
                continue;
            }
            let mid = a.lerp(b, &half);
            if !inside(&mid) {
                continue;
            }
            candidates.push(((b.clone() - a.clone()).norm2(), i, j));
        }
    }
    candidates.sort();

    let mut edges: BTreeSet<(usize, usize)> = constraints.clone();
    let mut accepted: Vec<(usize, usize)> = Vec::new();
    for (_, i, j) in candidates {
        let crosses = accepted.iter().any(|&(c, d)| {
            segments_cross_properly(&points[i], &points[j], &points[c], &points[d], 0.0)
        });
        if !crosses {
            accepted.push((i, j));
            edges.insert((i, j));
        }
    }

    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let third = Exact::from_i64(1) / Exact::from_i64(3);
    let mut triangles = Vec::new();
    for a in 0..n {
        for &b in adj[a].iter().filter(|&&b| b > a) {
            for &c in adj[b].iter().filter(|&&c| c > b) {
                if !edges.contains(&key(a, c)) {
                    continue;
                }
                let (pa, pb, pc) = (&points[a], &points[b], &points[c]);
                let o = orient(pa, pb, pc, 0.0);
                if o == Ordering::Equal {
                    continue;
                }
                let centroid = (pa.clone() + pb.clone() + pc.clone()).scale(&third);
                if !inside(&centroid) {
                    continue;
                }
                let empty = (0..n).all(|k| {
                    k == a || k == b || k == c || !in_closed_triangle(&points[k], pa, pb, pc)
                });
                if !empty {
                    continue;
                }
                triangles.push(if o == Ordering::Greater { [a, b, c] } else { [a, c, b] });
            }
        }
    }

    let tri_area: Exact = triangles.iter().fold(Exact::from_i64(0), |acc, t| {
        let (pa, pb, pc) = (&points[t[0]], &points[t[1]], &points[t[2]]);
        acc + (pb.clone() - pa.clone()).cross(&(pc.clone() - pa.clone())).half()
    });
    if tri_area != poly.area() {
        return Err(Error::InvalidPolygon(format!(
            "triangulation covers area {} of {}",
            tri_area.to_f64(),
            poly.area().to_f64()
        )));
    }
    Ok(Triangulation {
        points,
        triangles,
        constraints,
    })
}

fn strictly_between(p: &Point, a: &Point, b: &Point) -> bool {
    let ab = b.clone() - a.clone();
    let t = (p.clone() - a.clone()).dot(&ab);
    t > Exact::from_i64(0) && t < ab.norm2()
}

fn in_closed_triangle(p: &Vec2<Exact>, a: &Vec2<Exact>, b: &Vec2<Exact>, c: &Vec2<Exact>) -> bool {
    let o1 = orient(a, b, p, 0.0);
    let o2 = orient(b, c, p, 0.0);
    let o3 = orient(c, a, p, 0.0);
    let has_neg = [o1, o2, o3].contains(&Ordering::Less);
    let has_pos = [o1, o2, o3].contains(&Ordering::Greater);
    !(has_neg && has_pos)
}
