//! Strips and maximal cylinders of periodic geodesics, saddle connections,
//! and the empirical check that orbits avoiding the ε-neighbourhood of the
//! cone points lie in finitely many cylinders.
//!
//! A cylinder is found from a saddle connection on its boundary: the band on
//! one side of the connection is unfolded until the nearest cone point fixes
//! its height, the middle line of that band is traced, and a periodic middle
//! line is widened to the maximal strip around it. Every maximal cylinder of
//! circumference at most `L` has a boundary made of saddle connections no
//! longer than `L`, so enumerating connections up to a length bound finds
//! all cylinders below it.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::develop::{apex_seeds, band_search, explore_windows, Along, DevTri, WindowEvent};
use crate::error::{Error, Result};
use crate::flow::{find_wedge, min_distance_to_p, trace, trace_param, Exit, PhasePoint, Termination, Trajectory, DEFAULT_CONE_TOL};
use crate::geom::{segments_intersect, Isometry, Vec2};
use crate::scalar::{Scalar, ScalarKey};
use crate::surface::FlatSurface;

/// A geodesic segment from cone point `start` to cone point `end` with no
/// cone point in between. `holonomy` is its displacement in the chart of the
/// starting corner `(tri, corner)`.
#[derive(Clone, Debug)]
pub struct SaddleConnection<S> {
    pub start: usize,
    pub end: usize,
    pub tri: usize,
    pub corner: usize,
    pub holonomy: Vec2<S>,
    pub length: f64,
}

impl<S: Scalar> SaddleConnection<S> {
    pub fn to_json_value(&self) -> Value {
        json!({
            "start": self.start,
            "end": self.end,
            "length": self.length,
            "holonomy": [self.holonomy.x.to_json(), self.holonomy.y.to_json()],
            "chart": {"tri": self.tri, "corner": self.corner},
        })
    }
}

/// Every saddle connection of length at most `l_max`, each listed once from
/// each end. Directions out of every cone point are unfolded sector by
/// sector; with exact scalars no connection is missed.
pub fn enumerate_saddle_connections<S: Scalar>(s: &FlatSurface<S>, l_max: f64) -> Vec<SaddleConnection<S>> {
    let mut out: Vec<SaddleConnection<S>> = (0..s.cone_points.len())
        .into_par_iter()
        .flat_map_iter(|c| connections_from(s, c, l_max))
        .collect();
    out.sort_by(|a, b| {
        a.start
            .cmp(&b.start)
            .then(a.length.total_cmp(&b.length))
            .then(angle_of(&a.holonomy).total_cmp(&angle_of(&b.holonomy)))
            .then(a.tri.cmp(&b.tri))
    });
    out
}

fn angle_of<S: Scalar>(v: &Vec2<S>) -> f64 {
    let [x, y] = v.to_f64();
    y.atan2(x)
}

fn connections_from<S: Scalar>(s: &FlatSurface<S>, cone: usize, l_max: f64) -> Vec<SaddleConnection<S>> {
    let mut out = Vec::new();
    if !(l_max > 0.0) {
        return out;
    }
    let (t, k) = s.classes[s.cone_points[cone].class].corners[0];
    let seeds = apex_seeds(s, t, k);
    let slack = if S::EXACT { 0.0 } else { 1e-9 };
    let ray = |seed: usize, dir: &Vec2<S>| -> Option<SaddleConnection<S>> {
        let sd = &seeds[seed];
        let budget = S::from_f64((l_max + slack) / dir.norm());
        let start = PhasePoint::new(sd.tri, sd.origin.clone(), dir.clone());
        let tr = trace_param(s, &start, budget, DEFAULT_CONE_TOL, false).ok()?;
        match tr.termination {
            Termination::HitConePoint { cone: end } => Some(SaddleConnection {
                start: cone,
                end,
                tri: sd.tri,
                corner: corner_of(s, sd.tri, &sd.origin),
                holonomy: dir.scale(&tr.param_length),
                length: tr.total_length,
            }),
            _ => None,
        }
    };
    for (i, sd) in seeds.iter().enumerate() {
        for r in &sd.rays {
            if let Some(c) = ray(i, r) {
                out.push(c);
            }
        }
    }
    explore_windows(s, &seeds, l_max + slack, |ev| {
        if let WindowEvent::Vertex { seed, tri, corner, vec } = ev {
            if vec.norm() > l_max + slack {
                return None;
            }
            match s.cone_at(tri, corner) {
                Some(end) => {
                    let sd = &seeds[seed];
                    out.push(SaddleConnection {
                        start: cone,
                        end,
                        tri: sd.tri,
                        corner: corner_of(s, sd.tri, &sd.origin),
                        length: vec.norm(),
                        holonomy: vec,
                    });
                }
                None => {
                    if let Some(c) = ray(seed, &vec) {
                        out.push(c);
                    }
                }
            }
        }
        None
    });
    out
}

fn corner_of<S: Scalar>(s: &FlatSurface<S>, t: usize, p: &Vec2<S>) -> usize {
    (0..3).find(|&k| &s.triangles[t][k] == p).unwrap_or(0)
}

/// A periodic geodesic widened on both sides as far as the flat part allows.
///
/// Offsets are measured in the plane of the core's first chart: a point `x`
/// has raw offset `cross(dir, x - origin)` (the Euclidean offset times
/// `|dir|`). `tris` covers the strip, one copy per period.
#[derive(Clone, Debug)]
pub struct Strip<S> {
    pub core: Trajectory<S>,
    pub width_minus: f64,
    pub width_plus: f64,
    pub period: f64,
    pub blockers_minus: Vec<usize>,
    pub blockers_plus: Vec<usize>,
    pub origin: Vec2<S>,
    pub dir: Vec2<S>,
    pub period_vec: Vec2<S>,
    pub raw_minus: S,
    pub raw_plus: S,
    pub tris: Vec<DevTri<S>>,
}

fn develop_core<S: Scalar>(s: &FlatSurface<S>, core: &Trajectory<S>) -> (Vec<DevTri<S>>, Isometry<S>) {
    let mut map = Isometry::<S>::identity();
    let mut out = Vec::with_capacity(core.segments.len());
    for seg in &core.segments {
        out.push(DevTri::new(s, seg.tri, map.clone()));
        match &seg.leaves {
            Exit::Edge(i) => {
                let g = &s.gluings[seg.tri][*i];
                map = map.compose(&s.gluings[g.tri][g.edge].map);
            }
            Exit::Vertex(m) => map = map.compose(&m.inverse()),
            Exit::End => {}
        }
    }
    (out, map)
}

/// Maximal strip around a periodic core: the widths on each side are the
/// smallest offsets at which a parallel geodesic meets a cone point.
pub fn extend_strip<S: Scalar>(s: &FlatSurface<S>, core: &Trajectory<S>) -> Result<Strip<S>> {
    let period = core.period().ok_or(Error::CoreNotPeriodic)?;
    let first = core.segments.first().ok_or(Error::CoreNotPeriodic)?;
    if s.cone_points.is_empty() {
        return Err(Error::InvalidArgument("a surface without cone points has unbounded strips".into()));
    }
    let o = first.entry.clone();
    let d = first.dir.clone();
    let (seeds, back) = develop_core(s, core);
    // Around the core the charts must return untwisted.
    if !back.has_identity_rotation(1e-9) {
        return Err(Error::CoreNotPeriodic);
    }
    let period_vec = d.scale(&core.param_length);
    let along = Along::Periodic(period_vec.clone());
    let plus = band_search(s, seeds.clone(), &o, &d, 1, &along, None, None);
    let minus = band_search(s, seeds, &o, &d, -1, &along, None, None);
    let (raw_plus, raw_minus) = match (plus.offset, minus.offset) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::CoreNotPeriodic),
    };
    let dn = d.norm();
    let mut tris = plus.tris;
    tris.extend(minus.tris);
    Ok(Strip {
        core: core.clone(),
        width_minus: raw_minus.to_f64() / dn,
        width_plus: raw_plus.to_f64() / dn,
        period,
        blockers_minus: minus.blockers,
        blockers_plus: plus.blockers,
        origin: o,
        dir: d,
        period_vec,
        raw_minus,
        raw_plus,
        tris,
    })
}

impl<S: Scalar> Strip<S> {
    pub fn width(&self) -> f64 {
        self.width_minus + self.width_plus
    }

    fn tol(&self) -> f64 {
        if S::EXACT {
            0.0
        } else {
            1e-12
        }
    }

    /// Phase point on the parallel geodesic at raw offset `raw`, level with
    /// the core's start.
    pub fn offset_start(&self, raw: &S) -> Option<PhasePoint<S>> {
        let shift = self.dir.perp().scale(&(raw.clone() / self.dir.norm2()));
        let x = self.origin.clone() + shift;
        for k in [0i64, 1, -1] {
            let y = x.clone() + self.period_vec.scale(&S::from_i64(k));
            if let Some(dev) = self.tris.iter().find(|dv| dv.contains(&y, self.tol())) {
                let inv = dev.map.inverse();
                return Some(PhasePoint::new(dev.tri, inv.apply(&y), inv.apply_vec(&self.dir)));
            }
        }
        None
    }

    /// Euclidean offset of the point `p` of triangle `tri` if it lies in the
    /// open strip, with the map from that chart into the strip's plane.
    pub fn locate(&self, tri: usize, p: &Vec2<S>) -> Option<(f64, &Isometry<S>)> {
        let dn = self.dir.norm();
        for dev in self.tris.iter().filter(|dv| dv.tri == tri) {
            let y = dev.map.apply(p);
            if !dev.contains(&y, self.tol()) {
                continue;
            }
            let raw = self.dir.cross(&(y - self.origin.clone()));
            let inside = if S::EXACT {
                raw < self.raw_plus && raw > -self.raw_minus.clone()
            } else {
                let r = raw.to_f64();
                r < self.raw_plus.to_f64() - 1e-12 && r > -self.raw_minus.to_f64() + 1e-12
            };
            if inside {
                return Some((raw.to_f64() / dn, &dev.map));
            }
        }
        None
    }

    /// Chart rectangles swept by the strip along each core segment, as
    /// `(triangle, corners)` with corners in that triangle's chart (they may
    /// extend past the triangle).
    pub fn rectangles(&self) -> Vec<(usize, [[f64; 2]; 4])> {
        self.core
            .segments
            .iter()
            .map(|seg| {
                let [dx, dy] = seg.dir.to_f64();
                let n = (dx * dx + dy * dy).sqrt();
                let nrm = [-dy / n, dx / n];
                let a = seg.entry.to_f64();
                let b = seg.exit.to_f64();
                let at = |p: [f64; 2], h: f64| [p[0] + nrm[0] * h, p[1] + nrm[1] * h];
                (
                    seg.tri,
                    [at(a, -self.width_minus), at(b, -self.width_minus), at(b, self.width_plus), at(a, self.width_plus)],
                )
            })
            .collect()
    }

    /// How the two boundary geodesics end (both hit cone points for a maximal strip).
    pub fn boundary_terminations(&self, s: &FlatSurface<S>) -> Result<[Termination; 2]> {
        let budget = self.core.param_length.clone() + self.core.param_length.clone();
        let mut out = Vec::new();
        for raw in [-self.raw_minus.clone(), self.raw_plus.clone()] {
            let start = self
                .offset_start(&raw)
                .ok_or_else(|| Error::StartOutsideSurface("boundary geodesic outside the developed strip".into()))?;
            out.push(trace_param(s, &start, budget.clone(), DEFAULT_CONE_TOL, false)?.termination);
        }
        Ok([out[0].clone(), out[1].clone()])
    }
}

/// A maximal cylinder, described by the strip around its middle geodesic.
#[derive(Clone, Debug)]
pub struct Cylinder<S> {
    pub circumference: f64,
    pub width: f64,
    /// Square of the width; exact with exact scalars.
    pub width_sq: S,
    /// Unit direction of the core, the representative with the smallest
    /// angle in `[0, π)` over all charts the core visits.
    pub direction: [f64; 2],
    /// The same direction as a primitive integer vector (rational charts only).
    pub direction_exact: Option<[i64; 2]>,
    pub boundary_minus: Vec<usize>,
    pub boundary_plus: Vec<usize>,
    /// Boundary cone points of angle π/n (along which the cylinder could be
    /// continued by reflection; it is not).
    pub boundary_pi_over_n: Vec<usize>,
    pub strip: Strip<S>,
}

impl<S: Scalar> Cylinder<S> {
    pub fn core(&self) -> &Trajectory<S> {
        &self.strip.core
    }

    /// Cylinder around a periodic geodesic: widen it, move to the middle line
    /// and widen again.
    pub fn from_core(s: &FlatSurface<S>, core: &Trajectory<S>) -> Result<Self> {
        let mut strip = extend_strip(s, core)?;
        let shift = (strip.raw_plus.clone() - strip.raw_minus.clone()).half();
        if !shift.is_zero_tol(1e-15) {
            if let Some(mid) = strip.offset_start(&shift) {
                let budget = core.param_length.clone() + core.param_length.clone();
                if let Ok(tr) = trace_param(s, &mid, budget, DEFAULT_CONE_TOL, true) {
                    if tr.is_periodic() {
                        if let Ok(st) = extend_strip(s, &tr) {
                            strip = st;
                        }
                    }
                }
            }
        }
        let raw = strip.raw_plus.clone() + strip.raw_minus.clone();
        let width_sq = raw.clone() * raw / strip.dir.norm2();
        let (dir_vec, direction) = canonical_direction(&strip.core);
        let direction_exact = primitive_direction(&dir_vec);
        let mut boundary_pi_over_n: Vec<usize> = strip
            .blockers_minus
            .iter()
            .chain(&strip.blockers_plus)
            .copied()
            .filter(|&c| s.cone_points[c].pi_over_n)
            .collect();
        boundary_pi_over_n.sort_unstable();
        boundary_pi_over_n.dedup();
        let mut boundary_minus = strip.blockers_minus.clone();
        let mut boundary_plus = strip.blockers_plus.clone();
        boundary_minus.sort_unstable();
        boundary_plus.sort_unstable();
        Ok(Cylinder {
            circumference: strip.period,
            width: strip.width(),
            width_sq,
            direction,
            direction_exact,
            boundary_minus,
            boundary_plus,
            boundary_pi_over_n,
            strip,
        })
    }

    /// Is the phase point inside the open cylinder and moving parallel to it?
    pub fn contains(&self, tri: usize, p: &Vec2<S>, dir: &Vec2<S>) -> bool {
        match self.strip.locate(tri, p) {
            Some((_, map)) => {
                let v = map.apply_vec(dir);
                let c = self.strip.dir.cross(&v);
                if S::EXACT {
                    c.is_zero_tol(0.0)
                } else {
                    c.to_f64().abs() <= 1e-9 * v.norm() * self.strip.dir.norm()
                }
            }
            None => false,
        }
    }

    /// Does the straight orbit of length `length` from `(tri, p)` in unit
    /// direction `dir` stay inside the open cylinder? The orbit may drift
    /// across the cylinder at a small angle.
    pub fn holds_orbit(&self, tri: usize, p: &Vec2<S>, dir: &Vec2<S>, length: f64) -> bool {
        match self.strip.locate(tri, p) {
            Some((off, map)) => {
                let v = map.apply_vec(dir).to_f64();
                let [dx, dy] = self.strip.dir.to_f64();
                let dn = (dx * dx + dy * dy).sqrt();
                let vn = (v[0] * v[0] + v[1] * v[1]).sqrt();
                let drift = (dx * v[1] - dy * v[0]) / (dn * vn);
                let end = off + length * drift;
                end < self.strip.width_plus && end > -self.strip.width_minus
            }
            None => false,
        }
    }

    pub fn to_json_value(&self) -> Value {
        let c = self.core();
        json!({
            "circumference": self.circumference,
            "width": self.width,
            "width_sq": self.width_sq.to_json(),
            "direction": self.direction,
            "direction_exact": self.direction_exact,
            "boundary_minus": self.boundary_minus,
            "boundary_plus": self.boundary_plus,
            "boundary_pi_over_n": self.boundary_pi_over_n,
            "core": {
                "tri": c.start.tri,
                "pos": [c.start.pos.x.to_json(), c.start.pos.y.to_json()],
                "dir": [c.start.dir.x.to_json(), c.start.dir.y.to_json()],
                "segments": c.segments.len(),
            },
        })
    }
}

/// Direction representative with the smallest angle mod π over the core's charts.
fn canonical_direction<S: Scalar>(core: &Trajectory<S>) -> (Vec2<S>, [f64; 2]) {
    let mut best: Option<(f64, Vec2<S>)> = None;
    for seg in &core.segments {
        let mut v = seg.dir.clone();
        let [x, y] = v.to_f64();
        if y < 0.0 || (y == 0.0 && x < 0.0) {
            v = -v;
        }
        let mut a = angle_of(&v);
        if a >= PI - 1e-12 {
            a = 0.0;
            v = -v;
        }
        if best.as_ref().is_none_or(|(b, _)| a < *b - 1e-12) {
            best = Some((a, v));
        }
    }
    let v = best.map(|b| b.1).unwrap_or_else(|| core.start.dir.clone());
    let [x, y] = v.to_f64();
    let n = (x * x + y * y).sqrt();
    (v, [x / n, y / n])
}

fn primitive_direction<S: Scalar>(v: &Vec2<S>) -> Option<[i64; 2]> {
    let (ScalarKey::Rational(nx, dx), ScalarKey::Rational(ny, dy)) = (v.x.key(), v.y.key()) else {
        return None;
    };
    let l: BigInt = dx.lcm(&dy);
    let x = nx * (&l / dx);
    let y = ny * (&l / dy);
    let g = x.gcd(&y);
    Some([(x / &g).to_i64()?, (y / &g).to_i64()?])
}

/// Key grouping saddle connections by chart direction modulo π.
fn direction_key<S: Scalar>(v: &Vec2<S>) -> i64 {
    let mut a = angle_of(v);
    if a < 0.0 {
        a += PI;
    }
    if a >= PI - 1e-10 {
        a = 0.0;
    }
    (a * 1e8).round() as i64
}

/// Candidate middle-line start for the band left of a saddle connection.
fn probe_connection<S: Scalar>(
    s: &FlatSurface<S>,
    sc: &SaddleConnection<S>,
    eps: f64,
    reach: f64,
) -> Option<PhasePoint<S>> {
    let (tc, kc, map) = find_wedge(s, sc.tri, sc.corner, &sc.holonomy)?;
    let h = map.apply_vec(&sc.holonomy);
    let o = s.triangles[tc][kc].clone();
    let hn = h.norm();
    let seeds = vec![DevTri::new(s, tc, Isometry::identity())];
    let along = Along::Range(S::zero(), S::from_f64(reach * hn));
    // A cylinder with this connection on its boundary has area `width · L`
    // at most the surface area, and `L >= |h|`, so its raw height is at most the area.
    let limit = s.area_f64() * (1.0 + 1e-9) + 1e-12;
    let band = band_search(s, seeds, &o, &h, 1, &along, Some(2.0 * eps * hn), Some(limit));
    let raw = band.offset?;
    if raw.to_f64() <= 2.0 * eps * hn {
        return None;
    }
    let x = o + h.scale(&S::one().half()) + h.perp().scale(&(raw / (h.norm2() + h.norm2())));
    let tol = if S::EXACT { 0.0 } else { 1e-12 };
    let dev = band.tris.iter().find(|dv| dv.contains(&x, tol))?;
    let inv = dev.map.inverse();
    Some(PhasePoint::new(dev.tri, inv.apply(&x), inv.apply_vec(&h)))
}

/// All maximal cylinders whose middle geodesic stays at distance more than
/// `eps` from the cone points (width above `2·eps`), in canonical order.
pub fn enumerate_maximal_cylinders<S: Scalar>(s: &FlatSurface<S>, eps: f64) -> Result<Vec<Cylinder<S>>> {
    if !(eps > 0.0) {
        return Err(Error::EpsNonPositive(eps));
    }
    let area = s.area_f64();
    let l_max = area / eps;
    // Width above 2·eps and `width · circumference <= area` leave the
    // circumference, and every boundary connection, below area / (2·eps).
    let circ_max = area / (2.0 * eps);
    let conns = enumerate_saddle_connections(s, circ_max);
    let mut groups: BTreeMap<i64, Vec<&SaddleConnection<S>>> = BTreeMap::new();
    for c in conns.iter().filter(|c| c.length < circ_max) {
        groups.entry(direction_key(&c.holonomy)).or_default().push(c);
    }
    let groups: Vec<Vec<&SaddleConnection<S>>> = groups.into_values().collect();
    let found: Vec<Vec<Cylinder<S>>> = groups
        .par_iter()
        .map(|group| {
            let mut out: Vec<Cylinder<S>> = Vec::new();
            for sc in group {
                let Some(start) = probe_connection(s, sc, eps, l_max) else {
                    continue;
                };
                if out.iter().any(|c| c.contains(start.tri, &start.pos, &start.dir)) {
                    continue;
                }
                let budget = S::from_f64(circ_max / start.dir.norm());
                let Ok(tr) = trace_param(s, &start, budget, DEFAULT_CONE_TOL, true) else {
                    continue;
                };
                if !tr.is_periodic() {
                    continue;
                }
                if let Ok(c) = Cylinder::from_core(s, &tr) {
                    if c.width > 2.0 * eps && !out.iter().any(|o| same_cylinder(o, &c)) {
                        out.push(c);
                    }
                }
            }
            out
        })
        .collect();
    let mut all: Vec<Cylinder<S>> = Vec::new();
    for c in found.into_iter().flatten() {
        if !all.iter().any(|o| same_cylinder(o, &c)) {
            all.push(c);
        }
    }
    all.sort_by(|a, b| {
        let ang = |c: &Cylinder<S>| c.direction[1].atan2(c.direction[0]);
        ang(a)
            .total_cmp(&ang(b))
            .then(a.circumference.total_cmp(&b.circumference))
            .then(a.width.total_cmp(&b.width))
            .then(a.boundary_minus.cmp(&b.boundary_minus))
    });
    Ok(all)
}

/// Two maximal cylinders coincide when the middle geodesic of one runs inside the other.
fn same_cylinder<S: Scalar>(a: &Cylinder<S>, b: &Cylinder<S>) -> bool {
    let c = b.core();
    a.contains(c.start.tri, &c.start.pos, &c.start.dir)
}

/// How a sampled orbit behaved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitClass {
    /// Came within `eps` of a cone point.
    Entered,
    /// Ran into a cone point.
    Singular,
    /// Stayed at distance at least `eps` from every cone point.
    Avoided,
}

#[derive(Clone, Debug, Serialize)]
pub struct CCViolation {
    pub sample: usize,
    pub tri: usize,
    pub pos: [f64; 2],
    pub dir: [f64; 2],
    pub min_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CCReport {
    pub eps: f64,
    pub samples: usize,
    pub orbit_length: f64,
    pub seed: u64,
    pub cylinders: usize,
    pub entered: usize,
    pub singular: usize,
    pub avoided: usize,
    /// Avoiding orbits contained in an enumerated cylinder.
    pub matched: usize,
    /// Avoiding orbits outside every enumerated cylinder.
    pub violations: Vec<CCViolation>,
}

impl CCReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Classify one float orbit and, if it avoids the neighbourhood, say whether
/// some cylinder contains it for its whole length.
pub fn classify_orbit<S: Scalar>(
    sf: &FlatSurface<f64>,
    cylinders: &[Cylinder<S>],
    start: &PhasePoint<f64>,
    eps: f64,
    orbit_length: f64,
) -> Result<(OrbitClass, bool, f64)> {
    let tr = trace(sf, start, orbit_length, DEFAULT_CONE_TOL)?;
    let dist = min_distance_to_p(sf, &tr);
    if matches!(tr.termination, Termination::HitConePoint { .. }) {
        return Ok((OrbitClass::Singular, false, dist));
    }
    if dist < eps {
        return Ok((OrbitClass::Entered, false, dist));
    }
    let st = &tr.start;
    let p = Vec2::new(S::from_f64(st.pos.x), S::from_f64(st.pos.y));
    let d = Vec2::new(S::from_f64(st.dir.x), S::from_f64(st.dir.y));
    let member = cylinders.iter().any(|c| c.holds_orbit(st.tri, &p, &d, tr.total_length));
    Ok((OrbitClass::Avoided, member, dist))
}

/// Uniform random phase point: position by area, direction by angle.
pub fn random_phase_point(sf: &FlatSurface<f64>, weights: &WeightedIndex<f64>, rng: &mut ChaCha8Rng) -> PhasePoint<f64> {
    let t = weights.sample(rng);
    let [a, b, c] = &sf.triangles[t];
    let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
    if u + v > 1.0 {
        (u, v) = (1.0 - u, 1.0 - v);
    }
    let p = a.clone() + (b.clone() - a.clone()).scale(&u) + (c.clone() - a.clone()).scale(&v);
    let th: f64 = rng.random_range(0.0..2.0 * PI);
    PhasePoint::new(t, p, Vec2::new(th.cos(), th.sin()))
}

/// Area weights for sampling triangles.
pub fn triangle_weights(sf: &FlatSurface<f64>) -> Result<WeightedIndex<f64>> {
    let w: Vec<f64> = sf
        .triangles
        .iter()
        .map(|[a, b, c]| 0.5 * (b.clone() - a.clone()).cross(&(c.clone() - a.clone())).abs())
        .collect();
    WeightedIndex::new(w).map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Sample orbits and check that every orbit avoiding the ε-neighbourhood
/// lies in one of the enumerated maximal cylinders.
pub fn check_cc<S: Scalar>(s: &FlatSurface<S>, eps: f64, samples: usize, orbit_length: f64, seed: u64) -> Result<CCReport> {
    let cylinders = enumerate_maximal_cylinders(s, eps)?;
    check_cc_with(s, &cylinders, eps, samples, orbit_length, seed)
}

/// [`check_cc`] against a given cylinder list.
pub fn check_cc_with<S: Scalar>(
    s: &FlatSurface<S>,
    cylinders: &[Cylinder<S>],
    eps: f64,
    samples: usize,
    orbit_length: f64,
    seed: u64,
) -> Result<CCReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let sf = s.to_f64_surface();
    let weights = triangle_weights(&sf)?;
    let results: Vec<Result<(PhasePoint<f64>, OrbitClass, bool, f64)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let start = random_phase_point(&sf, &weights, &mut rng);
            let (class, member, dist) = classify_orbit(&sf, cylinders, &start, eps, orbit_length)?;
            Ok((start, class, member, dist))
        })
        .collect();
    let mut rep = CCReport {
        eps,
        samples,
        orbit_length,
        seed,
        cylinders: cylinders.len(),
        entered: 0,
        singular: 0,
        avoided: 0,
        matched: 0,
        violations: Vec::new(),
    };
    for (i, r) in results.into_iter().enumerate() {
        let (start, class, member, dist) = r?;
        match class {
            OrbitClass::Entered => rep.entered += 1,
            OrbitClass::Singular => rep.singular += 1,
            OrbitClass::Avoided => {
                rep.avoided += 1;
                if member {
                    rep.matched += 1;
                } else {
                    rep.violations.push(CCViolation {
                        sample: i,
                        tri: start.tri,
                        pos: start.pos.to_f64(),
                        dir: start.dir.to_f64(),
                        min_distance: dist,
                    });
                }
            }
        }
    }
    Ok(rep)
}

/// One crossing of two cylinder cores.
#[derive(Clone, Debug, Serialize)]
pub struct Crossing {
    pub tri: usize,
    pub point: [f64; 2],
    /// Angle between the cores, in `(0, π/2]`.
    pub angle: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub crossings: Vec<Crossing>,
    /// Largest `1 / sin θ` over the crossings.
    pub worst: f64,
    /// `min(L_1, L_2) / eps`.
    pub bound: f64,
    pub holds: bool,
}

/// Angles at which the cores of two cylinders cross, checked against
/// `1/sin θ <= min(L_1, L_2)/eps`.
pub fn pairwise_angle_bound<S: Scalar>(c1: &Cylinder<S>, c2: &Cylinder<S>, eps: f64) -> Result<BoundCheck> {
    let tol = if S::EXACT { 0.0 } else { 1e-12 };
    let mut crossings = Vec::new();
    for a in &c1.core().segments {
        for b in c2.core().segments.iter().filter(|b| b.tri == a.tri) {
            let cr = a.dir.cross(&b.dir);
            if cr.is_zero_tol(tol * a.dir.norm() * b.dir.norm()) {
                continue;
            }
            if !segments_intersect(&a.entry, &a.exit, &b.entry, &b.exit, tol) {
                continue;
            }
            // Intersection point of the two supporting lines.
            let w = b.entry.clone() - a.entry.clone();
            let t = w.cross(&b.dir) / cr.clone();
            let p = a.entry.clone() + a.dir.scale(&t);
            let sin = (cr.to_f64() / (a.dir.norm() * b.dir.norm())).abs().min(1.0);
            crossings.push(Crossing { tri: a.tri, point: p.to_f64(), angle: sin.asin() });
        }
    }
    if crossings.is_empty() {
        return Err(Error::NoIntersection);
    }
    crossings.sort_by(|x, y| x.tri.cmp(&y.tri).then(x.point[0].total_cmp(&y.point[0])).then(x.point[1].total_cmp(&y.point[1])));
    crossings.dedup_by(|x, y| x.tri == y.tri && (x.point[0] - y.point[0]).abs() < 1e-12 && (x.point[1] - y.point[1]).abs() < 1e-12);
    let worst = crossings.iter().map(|c| 1.0 / c.angle.sin()).fold(0.0, f64::max);
    let bound = c1.circumference.min(c2.circumference) / eps;
    Ok(BoundCheck { crossings, worst, bound, holds: worst <= bound })
}

/// Volume bound on the number of cylinders avoiding the ε-neighbourhood.
pub fn cylinder_count_bound(area: f64, eps: f64) -> f64 {
    2.0 * PI * area / (eps * eps)
}

pub fn cylinders_to_json<S: Scalar>(s: &FlatSurface<S>, eps: f64, cylinders: &[Cylinder<S>]) -> Value {
    json!({
        "eps": eps,
        "area": s.area_f64(),
        "exact": S::EXACT,
        "count": cylinders.len(),
        "count_bound": cylinder_count_bound(s.area_f64(), eps),
        "cylinders": cylinders.iter().map(|c| c.to_json_value()).collect::<Vec<_>>(),
    })
}

/// Sort-stable comparison of two cylinders' (direction, circumference, width).
pub fn compare_signature(a: (&[f64; 2], f64, f64), b: (&[f64; 2], f64, f64)) -> Ordering {
    let ang = |d: &[f64; 2]| d[1].atan2(d[0]);
    ang(a.0).total_cmp(&ang(b.0)).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2))
}
