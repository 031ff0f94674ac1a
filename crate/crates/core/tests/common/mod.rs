//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_integer::Integer;

/// Maximal cylinders of the doubled `a × b` rectangle (a and b integers)
/// with width above `2 eps`, from the lattice picture: the double is covered
/// by the torus `R² / (2aZ × 2bZ)` and its cone points form the lattice
/// `aZ × bZ`. Direction `(m a, n b)` with `gcd(m, n) = 1` carries one
/// cylinder of circumference `2 |v|` and width `2ab / (2|v|) = ab / |v|`.
/// Returned as `(unit direction with angle in [0, π), circumference, width)`,
/// sorted by angle.
pub fn rectangle_cylinders(a: i64, b: i64, eps: f64) -> Vec<([f64; 2], f64, f64)> {
    let area = 2.0 * (a * b) as f64;
    let mut out = Vec::new();
    let r = (area / eps) as i64 + 2;
    for m in -r..=r {
        for n in 0..=r {
            if (n == 0 && m <= 0) || m.gcd(&n) != 1 {
                continue;
            }
            let (vx, vy) = ((m * a) as f64, (n * b) as f64);
            let len = (vx * vx + vy * vy).sqrt();
            let w = (a * b) as f64 / len;
            if w > 2.0 * eps {
                out.push(([vx / len, vy / len], 2.0 * len, w));
            }
        }
    }
    out.sort_by(|x, y| x.0[1].atan2(x.0[0]).total_cmp(&y.0[1].atan2(y.0[0])));
    out
}

use escs_core::flow::{min_distance_to_p, trace, PhasePoint, Termination};
use escs_core::geom::Vec2;
use escs_core::surface::FlatSurface;
use escs_core::{Exact, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONE_TOL: f64 = 1e-9;

/// Distance to the cone points of the periodic orbit through the point
/// reached from `start` by moving `s` along the left normal of its
/// direction. Zero if the orbit or the normal path is singular.
fn offset_distance(sf: &FlatSurface<f64>, start: &PhasePoint<f64>, s: f64, length: f64) -> f64 {
    let mut p = start.clone();
    if s != 0.0 {
        let n = if s > 0.0 { start.dir.perp() } else { -start.dir.perp() };
        let walk = trace(sf, &PhasePoint::new(start.tri, start.pos.clone(), n), s.abs(), CONE_TOL).unwrap();
        if matches!(walk.termination, Termination::HitConePoint { .. }) {
            return 0.0;
        }
        let e = walk.end_dir;
        // Rotate the normal back to the flow direction.
        let d = if s > 0.0 { Vec2::new(e.y, -e.x) } else { Vec2::new(-e.y, e.x) };
        p = PhasePoint::new(walk.end_tri, walk.end_pos, d);
    }
    let tr = trace(sf, &p, length, CONE_TOL).unwrap();
    if !tr.is_periodic() {
        return 0.0;
    }
    min_distance_to_p(sf, &tr)
}

/// Width of the cylinder containing the periodic orbit through `start`.
/// Inside a flat cylinder the distance to the cone points of the parallel
/// orbit at offset `s` is `min(d⁺ - s, d⁻ + s)`; the two boundary distances
/// are read off that tent.
fn orbit_width(sf: &FlatSurface<f64>, start: &PhasePoint<f64>, d0: f64, length: f64) -> f64 {
    let tol = 1e-9;
    let delta = d0 / 4.0;
    let up = offset_distance(sf, start, delta, length);
    let down = offset_distance(sf, start, -delta, length);
    let falls = |v: f64| (v - (d0 - delta)).abs() < tol;
    if falls(up) && falls(down) {
        return 2.0 * d0;
    }
    // Walk away from the nearer boundary until the far one takes over.
    let sign = if falls(up) { -1.0 } else { 1.0 };
    let mut t = d0;
    loop {
        let v = offset_distance(sf, start, sign * t, length);
        if (v - (d0 + t)).abs() > tol {
            return d0 + v + t;
        }
        t *= 2.0;
    }
}

/// Random-sampling oracle for the maximal cylinders avoiding the
/// `eps`-neighbourhood of the cone points. Positions are uniform by area and
/// directions are drawn from the integer vectors in `[-10, 10]²` (generic
/// directions are not periodic). Orbits are traced to `length`; the periodic
/// ones staying `eps` away from the cone points are clustered by direction
/// modulo π (minimum over the charts they cross), period and width.
/// Returns `(unit direction, circumference, width)` sorted by angle,
/// circumference and width.
pub fn sampling_oracle(sf: &FlatSurface<f64>, eps: f64, samples: usize, length: f64, seed: u64) -> Vec<([f64; 2], f64, f64)> {
    use rayon::prelude::*;
    let areas: Vec<f64> =
        sf.triangles.iter().map(|[a, b, c]| 0.5 * (b.clone() - a.clone()).cross(&(c.clone() - a.clone())).abs()).collect();
    let total: f64 = areas.iter().sum();
    let found: Vec<(f64, f64, f64)> = (0..samples)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut r = rng.random::<f64>() * total;
            let mut t = 0;
            while t + 1 < areas.len() && r >= areas[t] {
                r -= areas[t];
                t += 1;
            }
            let [a, b, c] = &sf.triangles[t];
            let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
            if u + v > 1.0 {
                (u, v) = (1.0 - u, 1.0 - v);
            }
            let pos = a.clone() + (b.clone() - a.clone()).scale(&u) + (c.clone() - a.clone()).scale(&v);
            let (p, q) = loop {
                let (p, q) = (rng.random_range(-10i64..=10), rng.random_range(-10i64..=10));
                if (p, q) != (0, 0) {
                    break (p as f64, q as f64);
                }
            };
            let n = (p * p + q * q).sqrt();
            let start = PhasePoint::new(t, pos, Vec2::new(p / n, q / n));
            let tr = trace(sf, &start, length, CONE_TOL).ok()?;
            let Termination::Periodic { period, .. } = tr.termination else { return None };
            let d0 = min_distance_to_p(sf, &tr);
            if d0 < eps {
                return None;
            }
            let angle = tr
                .segments
                .iter()
                .map(|sg| sg.dir.y.atan2(sg.dir.x).rem_euclid(std::f64::consts::PI))
                .map(|a| if std::f64::consts::PI - a < 1e-12 { 0.0 } else { a })
                .fold(f64::INFINITY, f64::min);
            Some((angle, period, orbit_width(sf, &tr.start, d0, period * 1.5)))
        })
        .collect();
    let mut clusters: Vec<(f64, f64, f64)> = Vec::new();
    for (a, l, w) in found {
        if !clusters.iter().any(|c| (c.0 - a).abs() < 1e-9 && (c.1 - l).abs() < 1e-6 && (c.2 - w).abs() < 1e-6) {
            clusters.push((a, l, w));
        }
    }
    clusters.retain(|c| c.2 > 2.0 * eps);
    clusters.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.total_cmp(&y.2)));
    clusters.into_iter().map(|(a, l, w)| ([a.cos(), a.sin()], l, w)).collect()
}

/// Random exact phase point: a triangle chosen by area, barycentric
/// coordinates on a 1/1024 grid strictly inside it, and a nonzero integer
/// direction in `[-10, 10]²`.
pub fn random_exact_start(s: &FlatSurface<Exact>, rng: &mut ChaCha8Rng) -> PhasePoint<Exact> {
    let areas: Vec<f64> = s.triangles.iter().map(|[a, b, c]| 0.5 * (b.clone() - a.clone()).cross(&(c.clone() - a.clone())).to_f64()).collect();
    let mut r = rng.random::<f64>() * areas.iter().sum::<f64>();
    let mut t = 0;
    while t + 1 < areas.len() && r >= areas[t] {
        r -= areas[t];
        t += 1;
    }
    let (u, v) = loop {
        let (u, v) = (rng.random_range(1i64..1024), rng.random_range(1i64..1024));
        if u + v < 1024 {
            break (u, v);
        }
    };
    let q = |n: i64| Exact::new(n.into(), 1024.into());
    let [a, b, c] = &s.triangles[t];
    let pos = a.clone() + (b.clone() - a.clone()).scale(&q(u)) + (c.clone() - a.clone()).scale(&q(v));
    let (dx, dy) = loop {
        let d = (rng.random_range(-10i64..=10), rng.random_range(-10i64..=10));
        if d != (0, 0) {
            break d;
        }
    };
    PhasePoint::new(t, pos, Vec2::new(Exact::from_i64(dx), Exact::from_i64(dy)))
}

/// Random float phase point: position uniform by area, direction uniform in angle.
pub fn random_float_start(sf: &FlatSurface<f64>, rng: &mut ChaCha8Rng) -> PhasePoint<f64> {
    let w = escs_core::cylinder::triangle_weights(sf).unwrap();
    escs_core::cylinder::random_phase_point(sf, &w, rng)
}
