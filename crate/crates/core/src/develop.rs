//! Developing a flat surface into the plane around a source.
//!
//! Two searches live here. The window search unfolds triangles along
//! angular windows emanating from a point or a cone apex and reports every
//! vertex that is directly visible; rays that graze vertices are left to the
//! tracer. The band search unfolds the triangles met by a half-strip on one
//! side of a line, either along a periodic core or along a bounded stretch,
//! and reports the nearest cone point inside the band.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use crate::geom::{point_segment_dist2, Isometry, Vec2};
use crate::scalar::{Scalar, ScalarKey};
use crate::surface::FlatSurface;

/// A triangle placed in a common plane by `map` (chart to plane).
#[derive(Clone, Debug)]
pub struct DevTri<S> {
    pub tri: usize,
    pub map: Isometry<S>,
    pub pts: [Vec2<S>; 3],
}

impl<S: Scalar> DevTri<S> {
    pub fn new(s: &FlatSurface<S>, tri: usize, map: Isometry<S>) -> Self {
        let pts = std::array::from_fn(|i| map.apply(&s.triangles[tri][i]));
        DevTri { tri, map, pts }
    }

    pub fn contains(&self, p: &Vec2<S>, tol: f64) -> bool {
        (0..3).all(|i| {
            let e = self.pts[(i + 1) % 3].clone() - self.pts[i].clone();
            e.cross(&(p.clone() - self.pts[i].clone())).sign_tol(tol) != Ordering::Less
        })
    }

    /// Developed triangle across edge `e`.
    pub fn across(&self, s: &FlatSurface<S>, e: usize) -> (DevTri<S>, usize) {
        let g = &s.gluings[self.tri][e];
        let back = &s.gluings[g.tri][g.edge].map;
        (DevTri::new(s, g.tri, self.map.compose(back)), g.edge)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
struct Prio(f64);

impl Eq for Prio {}

impl Ord for Prio {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// An open angular window `(lo, hi)` (counterclockwise from `lo`) seen from
/// `origin`, entering `dev` through edge `entry`.
#[derive(Clone, Debug)]
pub struct Window<S> {
    pub seed: usize,
    pub dev: DevTri<S>,
    pub entry: usize,
    pub origin: Vec2<S>,
    pub lo: Vec2<S>,
    pub hi: Vec2<S>,
}

/// Where the window search starts: the frame of `seed` is the chart of
/// triangle `tri`, with the source at `origin`.
#[derive(Clone, Debug)]
pub struct Seed<S> {
    pub tri: usize,
    pub origin: Vec2<S>,
    /// Windows leaving the seed triangle through `edge`.
    pub windows: Vec<(usize, Vec2<S>, Vec2<S>)>,
    /// Directions (in the seed chart) that run into a vertex of the seed
    /// triangle or along its edges; followed by the tracer.
    pub rays: Vec<Vec2<S>>,
}

/// Seeds for a cone apex or smooth vertex: one per corner around it.
pub fn apex_seeds<S: Scalar>(s: &FlatSurface<S>, t: usize, k: usize) -> Vec<Seed<S>> {
    s.classes[s.corner_class[t][k]]
        .corners
        .iter()
        .map(|&(tc, kc)| {
            let tri = &s.triangles[tc];
            let o = tri[kc].clone();
            let lo = tri[(kc + 1) % 3].clone() - o.clone();
            let hi = tri[(kc + 2) % 3].clone() - o.clone();
            Seed {
                tri: tc,
                origin: o,
                windows: vec![((kc + 1) % 3, lo.clone(), hi)],
                rays: vec![lo],
            }
        })
        .collect()
}

/// Seeds for a point of triangle `t` that is not a vertex. Points on an edge
/// also seed the neighbouring triangle.
pub fn point_seeds<S: Scalar>(s: &FlatSurface<S>, t: usize, p: &Vec2<S>) -> Vec<Seed<S>> {
    let mut out = Vec::new();
    let f = s.edge_functions(t, p);
    let mut one = |t: usize, p: Vec2<S>, skip: Option<usize>| {
        let tri = &s.triangles[t];
        let mut windows = Vec::new();
        for i in 0..3 {
            if Some(i) != skip {
                windows.push((i, tri[i].clone() - p.clone(), tri[(i + 1) % 3].clone() - p.clone()));
            }
        }
        let rays = (0..3).map(|i| tri[i].clone() - p.clone()).collect();
        out.push(Seed { tri: t, origin: p, windows, rays });
    };
    let on = (0..3).find(|&i| {
        let e = s.triangles[t][(i + 1) % 3].clone() - s.triangles[t][i].clone();
        if S::EXACT {
            f[i].is_zero_tol(0.0)
        } else {
            f[i].to_f64().abs() <= 1e-12 * e.norm()
        }
    });
    one(t, p.clone(), on);
    if let Some(i) = on {
        let g = &s.gluings[t][i];
        one(g.tri, g.map.apply(p), Some(g.edge));
    }
    out
}

/// What the window search reports.
pub enum WindowEvent<'a, S> {
    /// The seed triangle itself (fully visible from its source corner or point).
    SeedTriangle { seed: usize },
    /// A developed triangle entered through a window.
    Region(&'a Window<S>),
    /// A vertex strictly inside a window; `vec` is its position relative to the
    /// source in the seed frame.
    Vertex {
        seed: usize,
        tri: usize,
        corner: usize,
        vec: Vec2<S>,
    },
}

/// Unfold windows from the seeds out to `radius`. The callback may return a
/// smaller radius to tighten the search (nearest-point queries).
pub fn explore_windows<S: Scalar>(
    s: &FlatSurface<S>,
    seeds: &[Seed<S>],
    mut radius: f64,
    mut visit: impl FnMut(WindowEvent<'_, S>) -> Option<f64>,
) {
    let mut heap: BinaryHeap<(Reverse<Prio>, usize)> = BinaryHeap::new();
    let mut store: Vec<Window<S>> = Vec::new();

    let push = |w: Window<S>, heap: &mut BinaryHeap<(Reverse<Prio>, usize)>, store: &mut Vec<Window<S>>, radius: f64| {
        let a = &w.dev.pts[w.entry];
        let b = &w.dev.pts[(w.entry + 1) % 3];
        let d = point_segment_dist2(&w.origin, a, b).0.to_f64().max(0.0).sqrt();
        if d < radius {
            heap.push((Reverse(Prio(d)), store.len()));
            store.push(w);
        }
    };

    for (i, seed) in seeds.iter().enumerate() {
        if let Some(r) = visit(WindowEvent::SeedTriangle { seed: i }) {
            radius = radius.min(r);
        }
        let base = DevTri::new(s, seed.tri, Isometry::identity());
        for (edge, lo, hi) in &seed.windows {
            let (dev, entry) = base.across(s, *edge);
            let w = Window { seed: i, dev, entry, origin: seed.origin.clone(), lo: lo.clone(), hi: hi.clone() };
            push(w, &mut heap, &mut store, radius);
        }
    }

    while let Some((Reverse(Prio(d)), idx)) = heap.pop() {
        if d >= radius {
            break;
        }
        let w = store[idx].clone();
        if let Some(r) = visit(WindowEvent::Region(&w)) {
            radius = radius.min(r);
        }
        let j = w.entry;
        let far = (j + 2) % 3;
        let c = w.dev.pts[far].clone() - w.origin.clone();
        let left_of_lo = w.lo.cross(&c).sign_tol(0.0);
        let right_of_hi = c.cross(&w.hi).sign_tol(0.0);
        let next = |edge: usize, lo: Vec2<S>, hi: Vec2<S>, heap: &mut BinaryHeap<_>, store: &mut Vec<Window<S>>, radius: f64| {
            let (dev, entry) = w.dev.across(s, edge);
            push(Window { seed: w.seed, dev, entry, origin: w.origin.clone(), lo, hi }, heap, store, radius);
        };
        if left_of_lo == Ordering::Greater && right_of_hi == Ordering::Greater {
            if let Some(r) = visit(WindowEvent::Vertex { seed: w.seed, tri: w.dev.tri, corner: far, vec: c.clone() }) {
                radius = radius.min(r);
            }
            next((j + 1) % 3, w.lo.clone(), c.clone(), &mut heap, &mut store, radius);
            next(far, c, w.hi.clone(), &mut heap, &mut store, radius);
        } else if left_of_lo != Ordering::Greater {
            next(far, w.lo.clone(), w.hi.clone(), &mut heap, &mut store, radius);
        } else {
            next((j + 1) % 3, w.lo.clone(), w.hi.clone(), &mut heap, &mut store, radius);
        }
    }
}

/// Extent of a band along its line.
#[derive(Clone, Debug)]
pub enum Along<S> {
    /// The band closes up after translating by `period` (a plane vector).
    Periodic(Vec2<S>),
    /// Only along-coordinates `dot(d, x - o)` in `[lo, hi]` count.
    Range(S, S),
}

#[derive(Clone, Debug)]
pub struct BandResult<S> {
    /// Smallest raw offset `side · cross(d, v - o)` of a cone vertex in the band
    /// (the width times `|d|`), if one was found.
    pub offset: Option<S>,
    /// Cone points attaining it.
    pub blockers: Vec<usize>,
    /// Every developed triangle processed (they cover the band).
    pub tris: Vec<DevTri<S>>,
}

fn map_key<S: Scalar>(tri: usize, m: &Isometry<S>) -> (usize, [ScalarKey; 4]) {
    (tri, [m.c.key(), m.s.key(), m.tx.key(), m.ty.key()])
}

/// Unfold the band `{ x : 0 < side·cross(d, x - o) < S }` starting from
/// `seeds` (already developed) and shrink `S` to the nearest cone vertex.
/// Stops early once the offset falls to `stop_at` or below, and never looks
/// beyond raw offset `limit`.
#[allow(clippy::too_many_arguments)]
pub fn band_search<S: Scalar>(
    s: &FlatSurface<S>,
    seeds: Vec<DevTri<S>>,
    o: &Vec2<S>,
    d: &Vec2<S>,
    side: i32,
    along: &Along<S>,
    stop_at: Option<f64>,
    limit: Option<f64>,
) -> BandResult<S> {
    let sgn = S::from_i64(side as i64);
    let off = |p: &Vec2<S>| sgn.clone() * d.cross(&(p.clone() - o.clone()));
    let alg = |p: &Vec2<S>| d.dot(&(p.clone() - o.clone()));
    let tol = if S::EXACT { 0.0 } else { 1e-12 };

    // Reduce a developed triangle modulo the period so repeats are recognized.
    let reduce = |dev: DevTri<S>| -> DevTri<S> {
        match along {
            Along::Periodic(per) => {
                let k = (alg(&dev.pts[0]) / d.dot(per)).floor();
                if k.is_zero_tol(0.0) {
                    dev
                } else {
                    let shift = Isometry::translation(-per.scale(&k));
                    DevTri::new(s, dev.tri, shift.compose(&dev.map))
                }
            }
            Along::Range(..) => dev,
        }
    };

    let mut best: Option<S> = None;
    let mut blockers: Vec<usize> = Vec::new();
    let mut seen: HashSet<(usize, [ScalarKey; 4])> = HashSet::new();
    let mut heap: BinaryHeap<(Reverse<Prio>, usize)> = BinaryHeap::new();
    let mut store: Vec<DevTri<S>> = Vec::new();
    let prio = |dev: &DevTri<S>| -> f64 {
        dev.pts.iter().map(|p| off(p).to_f64()).fold(f64::INFINITY, f64::min).max(0.0)
    };
    for sd in seeds {
        let sd = reduce(sd);
        if seen.insert(map_key(sd.tri, &sd.map)) {
            heap.push((Reverse(Prio(prio(&sd))), store.len()));
            store.push(sd);
        }
    }
    let mut done = Vec::new();
    let in_range = |a: &S| match along {
        Along::Periodic(_) => true,
        Along::Range(lo, hi) => a.clone() - lo.clone() >= -S::from_f64(tol) && hi.clone() - a.clone() >= -S::from_f64(tol),
    };
    while let Some((Reverse(Prio(pr)), idx)) = heap.pop() {
        if limit.is_some_and(|l| pr > l) {
            break;
        }
        if let Some(b) = &best {
            // keep going through ties so every boundary cone is collected
            if pr > b.to_f64() * (1.0 + 1e-12) {
                break;
            }
            if let Some(stop) = stop_at {
                if b.to_f64() <= stop {
                    break;
                }
            }
        }
        let dev = store[idx].clone();
        for k in 0..3 {
            if let Some(cone) = s.cone_at(dev.tri, k) {
                let sv = off(&dev.pts[k]);
                if sv.sign_tol(tol) == Ordering::Greater && in_range(&alg(&dev.pts[k])) {
                    match &best {
                        Some(b) if sv > *b => {}
                        Some(b) if sv == *b || (!S::EXACT && (sv.to_f64() - b.to_f64()).abs() <= 1e-12) => {
                            if !blockers.contains(&cone) {
                                blockers.push(cone);
                            }
                        }
                        _ => {
                            best = Some(sv);
                            blockers = vec![cone];
                        }
                    }
                }
            }
        }
        for e in 0..3 {
            let a = &dev.pts[e];
            let b = &dev.pts[(e + 1) % 3];
            if !edge_meets_band(off(a), off(b), alg(a), alg(b), best.as_ref(), along, tol) {
                continue;
            }
            let (nd, _) = dev.across(s, e);
            let nd = reduce(nd);
            if seen.insert(map_key(nd.tri, &nd.map)) {
                heap.push((Reverse(Prio(prio(&nd))), store.len()));
                store.push(nd);
            }
        }
        done.push(dev);
    }
    BandResult { offset: best, blockers, tris: done }
}

/// Does the edge with endpoint offsets `sa, sb` and along-coordinates `aa, ab`
/// meet the open band `0 < s < best` within the along range? An edge lying on
/// the line `s = 0` counts for periodic bands (the band's own boundary).
fn edge_meets_band<S: Scalar>(sa: S, sb: S, aa: S, ab: S, best: Option<&S>, along: &Along<S>, tol: f64) -> bool {
    let za = sa.is_zero_tol(tol);
    let zb = sb.is_zero_tol(tol);
    if za && zb {
        return matches!(along, Along::Periodic(_));
    }
    let (smin, smax) = if sa < sb { (sa.clone(), sb.clone()) } else { (sb.clone(), sa.clone()) };
    if smax.sign_tol(tol) != Ordering::Greater {
        return false;
    }
    if let Some(b) = best {
        if (smin.clone() - b.clone()).sign_tol(tol) != Ordering::Less {
            return false;
        }
    }
    let (lo, hi) = match along {
        Along::Periodic(_) => return true,
        Along::Range(lo, hi) => (lo.to_f64(), hi.to_f64()),
    };
    // Parameter interval of the edge inside the open strip, then its along-range.
    let (sa, sb, aa, ab) = (sa.to_f64(), sb.to_f64(), aa.to_f64(), ab.to_f64());
    let upper = best.map(|b| b.to_f64()).unwrap_or(f64::INFINITY);
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    let ds = sb - sa;
    for (bound, above) in [(0.0, true), (upper, false)] {
        if !bound.is_finite() {
            continue;
        }
        if ds == 0.0 {
            continue;
        }
        let t = (bound - sa) / ds;
        let increasing = ds > 0.0;
        if increasing == above {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
    }
    if t0 > t1 + 1e-12 {
        return false;
    }
    let a0 = aa + (ab - aa) * t0;
    let a1 = aa + (ab - aa) * t1;
    let (amin, amax) = if a0 < a1 { (a0, a1) } else { (a1, a0) };
    let slack = 1e-9 * (1.0 + hi.abs());
    amax >= lo - slack && amin <= hi + slack
}
