//! Straight-line flow on a flat surface, chart by chart.
//!
//! A trajectory leaves each triangle through the edge it meets first, is
//! carried across by the gluing isometry and continues in the partner chart.
//! Passing through a smooth vertex continues in the wedge that contains the
//! direction; reaching a cone point ends the trajectory. Exact scalars give
//! exact incidence and exact periodicity; floats use tolerances.
//!
//! In exact mode a direction may be any nonzero rational vector (rational unit
//! vectors are too sparse to be useful). Progress is then tracked as an exact
//! multiple of the direction vector, and Euclidean lengths are derived from it.

use std::cmp::Ordering;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geom::{point_segment_dist2, Isometry, Vec2};
use crate::polygon::Polygon;
use crate::scalar::{Exact, Scalar};
use crate::surface::{double, FlatSurface};

/// Default float-mode distance at which a ray counts as hitting a cone point.
pub const DEFAULT_CONE_TOL: f64 = 1e-9;

const MAX_STEPS: usize = 50_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint<S> {
    pub tri: usize,
    pub pos: Vec2<S>,
    pub dir: Vec2<S>,
}

impl<S: Scalar> PhasePoint<S> {
    pub fn new(tri: usize, pos: Vec2<S>, dir: Vec2<S>) -> Self {
        PhasePoint { tri, pos, dir }
    }
}

/// How a segment ended.
#[derive(Clone, Debug, PartialEq)]
pub enum Exit<S> {
    /// Crossed this edge of the segment's triangle.
    Edge(usize),
    /// Passed through a smooth vertex; the map takes this chart to the next one.
    Vertex(Isometry<S>),
    /// Last segment.
    End,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment<S> {
    pub tri: usize,
    pub entry: Vec2<S>,
    pub exit: Vec2<S>,
    /// Direction of travel in this chart.
    pub dir: Vec2<S>,
    pub leaves: Exit<S>,
}

impl<S: Scalar> Segment<S> {
    pub fn length(&self) -> f64 {
        (self.exit.clone() - self.entry.clone()).norm()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    MaxLength,
    HitConePoint { cone: usize },
    /// Returned to the starting phase point after `period`; `offset` is the
    /// transverse displacement at the return (zero in exact mode).
    Periodic { period: f64, offset: f64 },
}

#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    /// Starting phase point after normalization (vertex and edge starts are
    /// moved into the chart the flow actually enters).
    pub start: PhasePoint<S>,
    pub segments: Vec<Segment<S>>,
    /// Direction at the end, in the chart of the last segment.
    pub end_dir: Vec2<S>,
    pub end_tri: usize,
    pub end_pos: Vec2<S>,
    pub total_length: f64,
    /// Total length in units of the direction vector's length.
    pub param_length: S,
    pub termination: Termination,
}

impl<S: Scalar> Trajectory<S> {
    pub fn is_periodic(&self) -> bool {
        matches!(self.termination, Termination::Periodic { .. })
    }

    pub fn period(&self) -> Option<f64> {
        match self.termination {
            Termination::Periodic { period, .. } => Some(period),
            _ => None,
        }
    }

    /// Phase point at the end with the direction reversed.
    pub fn reversed_end(&self) -> PhasePoint<S> {
        PhasePoint::new(self.end_tri, self.end_pos.clone(), -self.end_dir.clone())
    }

    /// Straight development into the start chart: one polyline point per
    /// segment boundary, plus the developed triangles visited.
    pub fn development(&self, s: &FlatSurface<S>) -> Development {
        let mut map = Isometry::<S>::identity();
        let mut points = Vec::with_capacity(self.segments.len() + 1);
        let mut triangles = Vec::with_capacity(self.segments.len());
        if let Some(first) = self.segments.first() {
            points.push(first.entry.to_f64());
        }
        for seg in &self.segments {
            points.push(map.apply(&seg.exit).to_f64());
            let tri = &s.triangles[seg.tri];
            triangles.push([map.apply(&tri[0]).to_f64(), map.apply(&tri[1]).to_f64(), map.apply(&tri[2]).to_f64()]);
            // map: chart of seg.tri -> start chart
            match &seg.leaves {
                Exit::Edge(i) => {
                    let g = &s.gluings[seg.tri][*i];
                    map = map.compose(&s.gluings[g.tri][g.edge].map);
                }
                Exit::Vertex(m) => map = map.compose(&m.inverse()),
                Exit::End => {}
            }
        }
        Development { points, triangles }
    }

    pub fn to_json_value(&self, s: &FlatSurface<S>) -> Value {
        let pt = |p: &Vec2<S>| json!([p.x.to_json(), p.y.to_json()]);
        let segs: Vec<Value> = self
            .segments
            .iter()
            .map(|g| json!({"tri": g.tri, "entry": pt(&g.entry), "exit": pt(&g.exit), "dir": pt(&g.dir)}))
            .collect();
        let term = match &self.termination {
            Termination::MaxLength => json!({"kind": "max_length"}),
            Termination::HitConePoint { cone } => json!({"kind": "hit_cone_point", "cone": cone}),
            Termination::Periodic { period, offset } => {
                json!({"kind": "periodic", "period": period, "offset": offset})
            }
        };
        let dev = self.development(s);
        json!({
            "start": {"tri": self.start.tri, "pos": pt(&self.start.pos), "dir": pt(&self.start.dir)},
            "total_length": self.total_length,
            "param_length": self.param_length.to_json(),
            "termination": term,
            "segments": segs,
            "development": dev.points,
        })
    }
}

/// A trajectory unfolded into one plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Development {
    pub points: Vec<[f64; 2]>,
    pub triangles: Vec<[[f64; 2]; 3]>,
}

fn unit_check<S: Scalar>(d: &Vec2<S>) -> Result<()> {
    if S::EXACT {
        if d.is_zero_tol(0.0) {
            return Err(Error::NonUnitDirection(0.0));
        }
        return Ok(());
    }
    let n = d.norm();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitDirection(n));
    }
    Ok(())
}

/// Is `d` inside the wedge at corner `k` of `t`: from edge `k` (inclusive) to
/// the reversed edge `k+2` (exclusive), counterclockwise?
fn in_wedge<S: Scalar>(s: &FlatSurface<S>, t: usize, k: usize, d: &Vec2<S>) -> bool {
    let tri = &s.triangles[t];
    let lo = tri[(k + 1) % 3].clone() - tri[k].clone();
    let hi = tri[(k + 2) % 3].clone() - tri[k].clone();
    lo.cross(d).sign_tol(0.0) != Ordering::Less && d.cross(&hi).sign_tol(0.0) == Ordering::Greater
}

/// Smaller of the two normalized sines between `d` and the wedge sides; positive inside.
fn wedge_margin<S: Scalar>(s: &FlatSurface<S>, t: usize, k: usize, d: &Vec2<S>) -> f64 {
    let tri = &s.triangles[t];
    let lo = tri[(k + 1) % 3].clone() - tri[k].clone();
    let hi = tri[(k + 2) % 3].clone() - tri[k].clone();
    let dn = d.norm();
    let a = lo.cross(d).to_f64() / (lo.norm() * dn);
    let b = d.cross(&hi).to_f64() / (hi.norm() * dn);
    a.min(b)
}

/// Walk counterclockwise around the vertex at corner `k` of `t` and find the
/// corner whose wedge contains `d` (given in chart `t`). Returns the corner
/// and the map from chart `t` to that corner's chart. At a cone point the walk
/// makes at most one turn and takes the first match.
pub fn find_wedge<S: Scalar>(s: &FlatSurface<S>, t: usize, k: usize, d: &Vec2<S>) -> Option<(usize, usize, Isometry<S>)> {
    let class = &s.classes[s.corner_class[t][k]];
    let mut map = Isometry::<S>::identity();
    let (mut tc, mut kc) = (t, k);
    let mut best: Option<(f64, usize, usize, Isometry<S>)> = None;
    for _ in 0..class.corners.len() {
        let dd = map.apply_vec(d);
        if S::EXACT {
            if in_wedge(s, tc, kc, &dd) {
                return Some((tc, kc, map));
            }
        } else {
            let m = wedge_margin(s, tc, kc, &dd);
            if best.as_ref().is_none_or(|b| m > b.0) {
                best = Some((m, tc, kc, map.clone()));
            }
        }
        let g = &s.gluings[tc][(kc + 2) % 3];
        map = g.map.compose(&map);
        (tc, kc) = (g.tri, g.edge);
    }
    best.filter(|b| b.0 > -1e-9).map(|b| (b.1, b.2, b.3))
}

/// Which corner of `t` is `p` (exactly, or within `tol` in float mode)?
fn at_corner<S: Scalar>(s: &FlatSurface<S>, t: usize, p: &Vec2<S>, tol: f64) -> Option<usize> {
    (0..3).find(|&k| {
        let v = &s.triangles[t][k];
        if S::EXACT {
            p == v
        } else {
            (p.clone() - v.clone()).norm() <= tol
        }
    })
}

/// Move a starting phase point into the chart the flow enters.
pub fn normalize_start<S: Scalar>(s: &FlatSurface<S>, start: &PhasePoint<S>) -> Result<PhasePoint<S>> {
    if start.tri >= s.num_triangles() {
        return Err(Error::StartOutsideSurface(format!("no triangle {}", start.tri)));
    }
    if !s.contains_point(start.tri, &start.pos, 1e-9) {
        return Err(Error::StartOutsideSurface(format!(
            "{:?} is not in triangle {}",
            start.pos.to_f64(),
            start.tri
        )));
    }
    let (t, p, d) = (start.tri, &start.pos, &start.dir);
    if let Some(k) = at_corner(s, t, p, 1e-9) {
        let (tc, kc, map) = find_wedge(s, t, k, d)
            .ok_or_else(|| Error::StartOutsideSurface("direction fits no wedge at the start vertex".into()))?;
        return Ok(PhasePoint::new(tc, s.triangles[tc][kc].clone(), map.apply_vec(d)));
    }
    let f = s.edge_functions(t, p);
    let tri = &s.triangles[t];
    for i in 0..3 {
        let e = tri[(i + 1) % 3].clone() - tri[i].clone();
        let on_edge = if S::EXACT {
            f[i].is_zero_tol(0.0)
        } else {
            f[i].to_f64().abs() <= 1e-9 * e.norm()
        };
        if on_edge && e.cross(d).sign_tol(0.0) == Ordering::Less {
            let g = &s.gluings[t][i];
            return Ok(PhasePoint::new(g.tri, g.map.apply(p), g.map.apply_vec(d)));
        }
    }
    Ok(start.clone())
}

/// Trace the flow from `start` for at most `max_length`.
pub fn trace<S: Scalar>(s: &FlatSurface<S>, start: &PhasePoint<S>, max_length: f64, cone_tol: f64) -> Result<Trajectory<S>> {
    if !(max_length > 0.0) {
        return Err(Error::InvalidArgument(format!("max_length must be positive, got {max_length}")));
    }
    unit_check(&start.dir)?;
    let budget = S::from_f64(max_length / start.dir.norm());
    trace_param(s, start, budget, cone_tol, true)
}

/// Trace for an exact budget measured in multiples of the direction vector.
pub fn trace_param<S: Scalar>(
    s: &FlatSurface<S>,
    start: &PhasePoint<S>,
    budget: S,
    cone_tol: f64,
    detect_period: bool,
) -> Result<Trajectory<S>> {
    if start.dir.is_zero_tol(0.0) {
        return Err(Error::NonUnitDirection(0.0));
    }
    let cone_tol = if S::EXACT { 0.0 } else { cone_tol.max(0.0) };
    let snap = if S::EXACT { 0.0 } else { 1e-9 };
    let start = normalize_start(s, start)?;
    let dnorm = start.dir.norm();
    let (mut t, mut p, mut d) = (start.tri, start.pos.clone(), start.dir.clone());
    let mut acc = S::zero();
    let mut segments: Vec<Segment<S>> = Vec::new();
    let mut first = true;
    let d2 = d.norm2();

    let finish = |segments: Vec<Segment<S>>, t: usize, p: Vec2<S>, d: Vec2<S>, acc: S, termination: Termination| Trajectory {
        start: start.clone(),
        segments,
        end_dir: d,
        end_tri: t,
        end_pos: p,
        total_length: acc.to_f64() * dnorm,
        param_length: acc,
        termination,
    };

    for _ in 0..MAX_STEPS {
        let tri = &s.triangles[t];
        // Exit edge: smallest positive time to reach an edge we are moving toward.
        let mut exit: Option<(S, usize)> = None;
        for i in 0..3 {
            let e = tri[(i + 1) % 3].clone() - tri[i].clone();
            let c = e.cross(&d);
            if c.sign_tol(0.0) != Ordering::Less {
                continue;
            }
            let f = e.cross(&(p.clone() - tri[i].clone()));
            if !S::EXACT && f.to_f64() <= 1e-12 * e.norm() && -c.to_f64() <= 1e-12 * e.norm() * dnorm {
                // running along this edge
                continue;
            }
            let mut tau = f / (-c);
            if tau < S::zero() {
                tau = S::zero();
            }
            if exit.as_ref().is_none_or(|(b, _)| tau < *b) {
                exit = Some((tau, i));
            }
        }
        let (tau, edge) = exit.ok_or_else(|| Error::StartOutsideSurface(format!("no exit from triangle {t}")))?;

        // Earliest event along [0, tau].
        enum Event {
            Cone(usize),
            Period,
            Budget,
        }
        let mut event: Option<(S, Event)> = None;
        let consider = |sig: S, ev: Event, event: &mut Option<(S, Event)>| {
            if event.as_ref().is_none_or(|(b, _)| sig < *b) {
                *event = Some((sig, ev));
            }
        };
        if cone_tol > 0.0 {
            for k in 0..3 {
                if let Some(cone) = s.cone_at(t, k) {
                    let v = &tri[k];
                    let end = p.clone() + d.scale(&tau);
                    let (dist2, u) = point_segment_dist2(v, &p, &end);
                    if dist2.to_f64().sqrt() <= cone_tol && !(first && u.to_f64() <= 0.0) {
                        consider(tau.clone() * u, Event::Cone(cone), &mut event);
                    }
                }
            }
        }
        if detect_period && t == start.tri {
            let same_dir = if S::EXACT {
                d == start.dir
            } else {
                d.approx_eq(&start.dir, 1e-9)
            };
            if same_dir {
                let w = start.pos.clone() - p.clone();
                let off = d.cross(&w);
                let aligned = if S::EXACT { off.is_zero_tol(0.0) } else { off.to_f64().abs() <= 1e-9 * dnorm };
                if aligned {
                    let sig = w.dot(&d) / d2.clone();
                    let lo_ok = if S::EXACT { sig >= S::zero() } else { sig.to_f64() >= -1e-9 };
                    let hi_ok = if S::EXACT { sig <= tau } else { sig.to_f64() <= tau.to_f64() + 1e-9 };
                    let total = acc.clone() + sig.clone();
                    let positive = if S::EXACT { total > S::zero() } else { total.to_f64() * dnorm > 1e-9 };
                    if lo_ok && hi_ok && positive {
                        let sig = S::max_of(sig, S::zero());
                        consider(sig, Event::Period, &mut event);
                    }
                }
            }
        }
        let left = budget.clone() - acc.clone();
        if left <= tau {
            consider(S::max_of(left, S::zero()), Event::Budget, &mut event);
        }

        if let Some((sig, ev)) = event {
            let q = p.clone() + d.scale(&sig);
            if sig > S::zero() {
                segments.push(Segment { tri: t, entry: p.clone(), exit: q.clone(), dir: d.clone(), leaves: Exit::End });
            }
            acc = acc + sig;
            let term = match ev {
                Event::Cone(cone) => Termination::HitConePoint { cone },
                Event::Budget => Termination::MaxLength,
                Event::Period => {
                    let offset = if S::EXACT { 0.0 } else { d.cross(&(start.pos.clone() - q.clone())).to_f64() / dnorm };
                    Termination::Periodic { period: acc.to_f64() * dnorm, offset }
                }
            };
            return Ok(finish(segments, t, q, d, acc, term));
        }

        let q = p.clone() + d.scale(&tau);
        acc = acc + tau.clone();
        let e = tri[(edge + 1) % 3].clone() - tri[edge].clone();
        let u = (q.clone() - tri[edge].clone()).dot(&e) / e.norm2();
        let elen = e.norm();
        let corner = if S::EXACT {
            if u.is_zero_tol(0.0) {
                Some(edge)
            } else if u == S::one() {
                Some((edge + 1) % 3)
            } else {
                None
            }
        } else if u.to_f64() * elen <= snap {
            Some(edge)
        } else if (1.0 - u.to_f64()) * elen <= snap {
            Some((edge + 1) % 3)
        } else {
            None
        };
        let keep = tau > S::zero();
        match corner {
            Some(k) => {
                let v = tri[k].clone();
                if let Some(cone) = s.cone_at(t, k) {
                    if keep {
                        segments.push(Segment { tri: t, entry: p.clone(), exit: v.clone(), dir: d.clone(), leaves: Exit::End });
                    }
                    return Ok(finish(segments, t, v, d, acc, Termination::HitConePoint { cone }));
                }
                let (tc, kc, map) = find_wedge(s, t, k, &d)
                    .ok_or_else(|| Error::StartOutsideSurface(format!("lost at vertex of triangle {t}")))?;
                if keep {
                    segments.push(Segment { tri: t, entry: p.clone(), exit: v, dir: d.clone(), leaves: Exit::Vertex(map.clone()) });
                } else if let Some(last) = segments.last_mut() {
                    if let Exit::Vertex(m) = &last.leaves {
                        last.leaves = Exit::Vertex(map.compose(m));
                    }
                }
                d = map.apply_vec(&d);
                t = tc;
                p = s.triangles[tc][kc].clone();
            }
            None => {
                let g = &s.gluings[t][edge];
                if keep {
                    segments.push(Segment { tri: t, entry: p.clone(), exit: q.clone(), dir: d.clone(), leaves: Exit::Edge(edge) });
                }
                p = g.map.apply(&q);
                d = g.map.apply_vec(&d);
                t = g.tri;
            }
        }
        first = false;
    }
    Err(Error::SolverNoConvergence(format!("trace exceeded {MAX_STEPS} steps")))
}

/// Billiard orbit in a polygon: trace on the double and fold the segments
/// back into polygon coordinates. `start` is in polygon coordinates.
pub fn billiard_trace<S: Scalar>(
    p: &Polygon,
    pos: Vec2<S>,
    dir: Vec2<S>,
    max_length: f64,
    cone_tol: f64,
) -> Result<Trajectory<S>> {
    let surface: FlatSurface<S> = double(p)?.map_scalar(|x: &Exact| S::from_exact(x));
    let (tri, local) = surface
        .locate(&pos, false)
        .ok_or_else(|| Error::StartOutsideSurface(format!("{:?} is outside the polygon", pos.to_f64())))?;
    let traj = trace(&surface, &PhasePoint::new(tri, local, dir), max_length, cone_tol)?;
    Ok(project_to_polygon(&surface, &traj))
}

/// Fold a trajectory on a doubled polygon into polygon coordinates.
pub fn project_to_polygon<S: Scalar>(s: &FlatSurface<S>, traj: &Trajectory<S>) -> Trajectory<S> {
    let fold = |t: usize, v: &Vec2<S>| if s.mirrored[t] { Vec2::new(v.x.clone(), -v.y.clone()) } else { v.clone() };
    let mut out = traj.clone();
    for seg in &mut out.segments {
        seg.entry = fold(seg.tri, &seg.entry);
        seg.exit = fold(seg.tri, &seg.exit);
        seg.dir = fold(seg.tri, &seg.dir);
    }
    out.start.pos = fold(traj.start.tri, &traj.start.pos);
    out.start.dir = fold(traj.start.tri, &traj.start.dir);
    out.end_pos = fold(traj.end_tri, &traj.end_pos);
    out.end_dir = fold(traj.end_tri, &traj.end_dir);
    out
}

/// Distances from a point of triangle `t` to the cone points that are
/// vertices of `t` or of its three neighbours, developed into chart `t`.
pub fn nearby_cones<S: Scalar>(s: &FlatSurface<S>, t: usize) -> Vec<(usize, Vec2<S>)> {
    let mut out = Vec::new();
    for k in 0..3 {
        if let Some(c) = s.cone_at(t, k) {
            out.push((c, s.triangles[t][k].clone()));
        }
        let g = &s.gluings[t][k];
        let far = (g.edge + 2) % 3;
        if let Some(c) = s.cone_at(g.tri, far) {
            let back = &s.gluings[g.tri][g.edge].map;
            out.push((c, back.apply(&s.triangles[g.tri][far])));
        }
    }
    out
}

/// Minimum distance from the trajectory to the cone points, measured in the
/// charts of its segments (vertices of each segment's triangle and of the
/// adjacent triangles).
pub fn min_distance_to_p<S: Scalar>(s: &FlatSurface<S>, traj: &Trajectory<S>) -> f64 {
    let mut best = f64::INFINITY;
    for seg in &traj.segments {
        for (_, v) in nearby_cones(s, seg.tri) {
            let (d2, _) = point_segment_dist2(&v, &seg.entry, &seg.exit);
            best = best.min(d2.to_f64().max(0.0).sqrt());
        }
    }
    if let Termination::HitConePoint { .. } = traj.termination {
        best = best.min(0.0);
    }
    if traj.segments.is_empty() {
        for (_, v) in nearby_cones(s, traj.end_tri) {
            best = best.min((v - traj.end_pos.clone()).norm());
        }
    }
    best
}

/// All chart representations `(triangle, point)` of a surface point.
pub fn representations<S: Scalar>(s: &FlatSurface<S>, t: usize, p: &Vec2<S>, tol: f64) -> Vec<(usize, Vec2<S>)> {
    if let Some(k) = at_corner(s, t, p, tol) {
        return s.classes[s.corner_class[t][k]]
            .corners
            .iter()
            .map(|&(u, j)| (u, s.triangles[u][j].clone()))
            .collect();
    }
    let mut out = vec![(t, p.clone())];
    let f = s.edge_functions(t, p);
    let tri = &s.triangles[t];
    for i in 0..3 {
        let e = tri[(i + 1) % 3].clone() - tri[i].clone();
        let on_edge = if S::EXACT { f[i].is_zero_tol(0.0) } else { f[i].to_f64().abs() <= tol * e.norm() };
        if on_edge {
            let g = &s.gluings[t][i];
            out.push((g.tri, g.map.apply(p)));
        }
    }
    out
}

/// Do two chart points denote the same surface point?
pub fn same_point<S: Scalar>(s: &FlatSurface<S>, a: (usize, &Vec2<S>), b: (usize, &Vec2<S>), tol: f64) -> bool {
    representations(s, a.0, a.1, tol).iter().any(|(u, q)| {
        *u == b.0 && if S::EXACT { q == b.1 } else { q.approx_eq(b.1, tol) }
    })
}

/// Trace forward, then trace back from the reversed end for the same
/// parameter length; returns whether the start is recovered and the
/// backward trajectory.
pub fn retrace<S: Scalar>(s: &FlatSurface<S>, traj: &Trajectory<S>, cone_tol: f64) -> Result<(bool, Trajectory<S>)> {
    let back = trace_param(s, &traj.reversed_end(), traj.param_length.clone(), cone_tol, false)?;
    let tol = if S::EXACT { 0.0 } else { 1e-9 };
    let ok = same_point(s, (back.end_tri, &back.end_pos), (traj.start.tri, &traj.start.pos), tol);
    Ok((ok, back))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polygon::corpus;
    use crate::surface::double;
    use std::f64::consts::SQRT_2;

    fn q(n: i64, d: i64) -> Exact {
        Exact::new(n.into(), d.into())
    }

    fn ev(x: (i64, i64), y: (i64, i64)) -> Vec2<Exact> {
        Vec2::new(q(x.0, x.1), q(y.0, y.1))
    }

    #[test]
    fn horizontal_orbit_on_square_has_period_two() {
        let s = double(&corpus::unit_square()).unwrap();
        let (t, p) = s.locate(&ev((1, 2), (3, 10)), false).unwrap();
        let tr = trace(&s, &PhasePoint::new(t, p, ev((1, 1), (0, 1))), 100.0, 0.0).unwrap();
        assert_eq!(tr.param_length, Exact::from_i64(2));
        assert!(matches!(tr.termination, Termination::Periodic { period, .. } if period == 2.0));
        assert!((min_distance_to_p(&s, &tr) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn diagonal_hits_corner() {
        let s = double(&corpus::unit_square()).unwrap().to_f64_surface();
        let (t, p) = s.locate(&Vec2::new(0.5, 0.5), false).unwrap();
        let d = Vec2::new(1.0 / SQRT_2, 1.0 / SQRT_2);
        let tr = trace(&s, &PhasePoint::new(t, p, d), 100.0, DEFAULT_CONE_TOL).unwrap();
        assert!(matches!(tr.termination, Termination::HitConePoint { .. }));
        assert!((tr.total_length - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(min_distance_to_p(&s, &tr), 0.0);
    }

    #[test]
    fn non_unit_float_direction_is_rejected() {
        let s = double(&corpus::unit_square()).unwrap().to_f64_surface();
        let r = trace(&s, &PhasePoint::new(0, Vec2::new(0.5, 0.2), Vec2::new(1.0, 1.0)), 1.0, 1e-9);
        assert!(matches!(r, Err(Error::NonUnitDirection(_))));
    }

    #[test]
    fn start_outside_is_rejected() {
        let s = double(&corpus::unit_square()).unwrap().to_f64_surface();
        let r = trace(&s, &PhasePoint::new(0, Vec2::new(5.0, 5.0), Vec2::new(1.0, 0.0)), 1.0, 1e-9);
        assert!(matches!(r, Err(Error::StartOutsideSurface(_))));
    }

    #[test]
    fn diagonal_channel_billiard() {
        let tr = billiard_trace(&corpus::unit_square(), ev((1, 4), (0, 1)), ev((1, 1), (1, 1)), 100.0, 0.0).unwrap();
        // exact mode: period measured in multiples of |(1,1)| = √2
        assert_eq!(tr.param_length, Exact::from_i64(2));
        assert!((tr.period().unwrap() - 2.0 * SQRT_2).abs() < 1e-12);
        // all folded points lie in the square
        for seg in &tr.segments {
            for p in [&seg.entry, &seg.exit] {
                let [x, y] = p.to_f64();
                assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
            }
        }
    }

    #[test]
    fn exact_reversal_recovers_start() {
        let s = double(&corpus::l_shape()).unwrap();
        let (t, p) = s.locate(&ev((1, 3), (1, 7)), false).unwrap();
        // rational slopes are periodic on a square-tiled surface; trace past the period
        let tr = trace_param(&s, &PhasePoint::new(t, p, ev((3, 1), (2, 1))), Exact::from_i64(11), 0.0, false).unwrap();
        assert_eq!(tr.termination, Termination::MaxLength);
        let (ok, back) = retrace(&s, &tr, 0.0).unwrap();
        assert!(ok);
        assert_eq!(back.segments.len(), tr.segments.len());
    }

    #[test]
    fn smooth_vertex_is_crossed() {
        // (1,0) is a straight vertex: a ray through it must continue.
        let p = Polygon::from_text(&[["0", "0"], ["1", "0"], ["2", "0"], ["2", "1"], ["0", "1"]]).unwrap();
        let s = double(&p).unwrap();
        let (t, pos) = s.locate(&ev((1, 2), (1, 2)), false).unwrap();
        let tr = trace(&s, &PhasePoint::new(t, pos.clone(), ev((1, 1), (-1, 1))), 2.0, 0.0).unwrap();
        assert_eq!(tr.termination, Termination::MaxLength);
        // the continuation reaches the corner (2,1) after √0.5 + √2
        let tr = trace(&s, &PhasePoint::new(t, pos.clone(), ev((1, 1), (-1, 1))), 3.0, 0.0).unwrap();
        assert!(matches!(tr.termination, Termination::HitConePoint { .. }));
        assert_eq!(tr.param_length, q(3, 2));
        assert!(tr.segments.iter().any(|g| g.exit.to_f64() == [1.0, 0.0] || g.exit.to_f64() == [1.0, -0.0]));
    }

    #[test]
    fn development_is_straight() {
        let s = double(&corpus::pentagon()).unwrap().to_f64_surface();
        let (t, p) = s.locate(&Vec2::new(0.4, 0.3), false).unwrap();
        let a: f64 = 0.7;
        let tr = trace(&s, &PhasePoint::new(t, p, Vec2::new(a.cos(), a.sin())), 20.0, 1e-9).unwrap();
        let dev = tr.development(&s);
        let p0 = dev.points[0];
        for (i, q) in dev.points.iter().enumerate().skip(1) {
            let cr = (q[0] - p0[0]) * a.sin() - (q[1] - p0[1]) * a.cos();
            assert!(cr.abs() < 1e-9, "point {i} off the line by {cr}");
        }
    }
}
