mod common;

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use escs_core::geom::Isometry;
use escs_core::polygon::corpus;
use escs_core::scalar::exact_to_f64;
use escs_core::{cone_neighborhood, double, surface_distance_to_p, validate_polygon, Error, Exact, FlatSurface, Scalar, Vec2};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus_surfaces() -> Vec<(&'static str, FlatSurface<Exact>)> {
    corpus::all().into_iter().map(|(n, p)| (n, double(&p).unwrap())).collect()
}

#[test]
fn gauss_bonnet_on_the_corpus() {
    let surfaces = corpus_surfaces();
    assert!(surfaces.len() >= 6);
    for (name, s) in &surfaces {
        let curvature: f64 = s.cone_points.iter().map(|c| 2.0 * PI - c.angle).sum();
        let chi = s.euler_characteristic() as f64;
        assert!((curvature - 2.0 * PI * chi).abs() < 1e-9, "{name}: {curvature} vs 2π·{chi}");
    }
}

#[test]
fn euler_characteristics_of_the_doubles() {
    for (name, s) in corpus_surfaces() {
        // A polygon with h holes and k slits doubles to genus h + k.
        let want = match name {
            "square_hole" | "square_slit" => 0,
            _ => 2,
        };
        assert_eq!(s.euler_characteristic(), want, "{name}");
    }
}

#[test]
fn double_has_twice_the_shoelace_area() {
    for (name, p) in corpus::all() {
        let s = double(&p).unwrap();
        let tri_sum: Exact = s
            .triangles
            .iter()
            .map(|[a, b, c]| (b.clone() - a.clone()).cross(&(c.clone() - a.clone())) / Exact::from_i64(2))
            .fold(Exact::from_i64(0), |x, y| x + y);
        assert_eq!(tri_sum, p.area() * Exact::from_i64(2), "{name}");
        assert!((s.area_f64() - 2.0 * exact_to_f64(&p.area())).abs() < 1e-12);
    }
}

#[test]
fn l_shape_cone_angles() {
    let s = double(&corpus::l_shape()).unwrap();
    let mut a: Vec<f64> = s.cone_points.iter().map(|c| c.angle / PI).collect();
    a.sort_by(f64::total_cmp);
    assert_eq!(a.len(), 6);
    for (x, w) in a.iter().zip([1.0, 1.0, 1.0, 1.0, 1.0, 3.0]) {
        assert!((x - w).abs() < 1e-12);
    }
}

#[test]
fn slit_endpoints_become_four_pi_cones() {
    let s = double(&corpus::square_with_slit()).unwrap();
    let fours: Vec<usize> = (0..s.cone_points.len()).filter(|&i| (s.cone_points[i].angle - 4.0 * PI).abs() < 1e-12).collect();
    assert_eq!(fours.len(), 2);
    let n = cone_neighborhood(&s, 0.05);
    for &i in &fours {
        assert!((n.cone_areas[i] - 0.005 * PI).abs() < 1e-12, "{}", n.cone_areas[i]);
    }
}

#[test]
fn bowtie_is_rejected() {
    assert!(matches!(validate_polygon(&corpus::bowtie()), Err(Error::SelfIntersection(_))));
    assert!(matches!(double(&corpus::bowtie()), Err(Error::InvalidPolygon(_) | Error::SelfIntersection(_))));
}

#[test]
fn holonomy_around_each_vertex_is_its_cone_angle() {
    for (name, s) in corpus_surfaces() {
        for class in &s.classes {
            // Walk once around the vertex through the gluings.
            let (t0, k0) = class.corners[0];
            let (mut t, mut k) = (t0, k0);
            let mut map = Isometry::<Exact>::identity();
            for _ in 0..class.corners.len() {
                let g = &s.gluings[t][(k + 2) % 3];
                map = g.map.compose(&map);
                (t, k) = (g.tri, g.edge);
            }
            assert_eq!((t, k), (t0, k0), "{name}");
            // The vertex is fixed; the chart comes back turned clockwise by
            // the cone angle.
            assert_eq!(map.apply(&s.triangles[t0][k0]), s.triangles[t0][k0]);
            let turn = (map.rotation_angle() + class.angle).rem_euclid(2.0 * PI);
            assert!(turn.min(2.0 * PI - turn) < 1e-9, "{name}: {} vs {}", map.rotation_angle(), class.angle);
            if class.cone.is_none() {
                assert_eq!(map, Isometry::identity(), "{name}: smooth vertex with holonomy");
            }
        }
    }
}

/// Monte-Carlo area of `{x : d(x, P) < eps}` from the distance function.
fn sampled_neighbourhood_area(s: &FlatSurface<f64>, eps: f64, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let hits = (0..n)
        .filter(|_| {
            let st = common::random_float_start(s, &mut rng);
            surface_distance_to_p(s, st.tri, &st.pos) < eps
        })
        .count();
    s.area_f64() * hits as f64 / n as f64
}

#[test]
fn neighbourhood_area_matches_sampling() {
    for (p, eps) in [(corpus::unit_square(), 0.1), (corpus::square_with_slit(), 0.05), (corpus::l_shape(), 0.2)] {
        let s = double(&p).unwrap().to_f64_surface();
        let n = cone_neighborhood(&s, eps);
        assert!(n.embedded);
        let closed: f64 = s.cone_points.iter().map(|c| c.angle * eps * eps / 2.0).sum();
        assert!((n.area - closed).abs() < 1e-12, "{} vs {closed}", n.area);
        let sampled = sampled_neighbourhood_area(&s, eps, 200_000);
        assert!((sampled - closed).abs() / closed < 0.05, "{sampled} vs {closed}");
    }
    let s = double(&corpus::unit_square()).unwrap();
    assert!((cone_neighborhood(&s, 0.1).area - 0.02 * PI).abs() < 1e-12);
    assert_eq!(cone_neighborhood(&s, 0.0).area, 0.0);
}

/// Shortest path on a grid graph over the unit square, from the grid point
/// nearest `p` to the nearest corner. Edges join grid points whose offset is
/// a primitive vector with entries up to 6.
fn grid_distance_to_corner(p: [f64; 2], n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize| i * (n + 1) + j;
    let mut dist = vec![f64::INFINITY; (n + 1) * (n + 1)];
    let (si, sj) = ((p[0] / h).round() as usize, (p[1] / h).round() as usize);
    let start_err = ((si as f64 * h - p[0]).powi(2) + (sj as f64 * h - p[1]).powi(2)).sqrt();
    let mut heap = BinaryHeap::new();
    dist[idx(si, sj)] = 0.0;
    heap.push((std::cmp::Reverse(0u64), si, sj));
    let steps: Vec<(i64, i64)> = (-6i64..=6)
        .flat_map(|a| (-6i64..=6).map(move |b| (a, b)))
        .filter(|&(a, b)| num_integer::gcd(a, b) == 1)
        .collect();
    while let Some((std::cmp::Reverse(d), i, j)) = heap.pop() {
        let d = f64::from_bits(d);
        if d > dist[idx(i, j)] {
            continue;
        }
        for &(a, b) in &steps {
            let (ni, nj) = (i as i64 + a, j as i64 + b);
            if ni < 0 || nj < 0 || ni > n as i64 || nj > n as i64 {
                continue;
            }
            let (ni, nj) = (ni as usize, nj as usize);
            let nd = d + h * ((a * a + b * b) as f64).sqrt();
            if nd < dist[idx(ni, nj)] {
                dist[idx(ni, nj)] = nd;
                heap.push((std::cmp::Reverse(nd.to_bits()), ni, nj));
            }
        }
    }
    [idx(0, 0), idx(n, 0), idx(0, n), idx(n, n)].iter().map(|&k| dist[k]).fold(f64::INFINITY, f64::min) + start_err
}

#[test]
fn distance_to_cones_matches_graph_shortest_path() {
    let s = double(&corpus::unit_square()).unwrap();
    let (t, p) = s.locate(&Vec2::from_f64(0.1, 0.5), false).unwrap();
    let got = surface_distance_to_p(&s, t, &p);
    let oracle = grid_distance_to_corner([0.1, 0.5], 200);
    assert!((got - oracle).abs() / oracle < 0.02, "{got} vs {oracle}");
    assert!((got - 0.26f64.sqrt()).abs() < 1e-12);
}

/// Is the open segment `p → v` inside the polygon? Checked at many points.
fn visible(p: &escs_core::Polygon, a: [f64; 2], b: [f64; 2]) -> bool {
    (1..400).all(|i| {
        let t = i as f64 / 400.0;
        p.contains_f64([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neighbourhood_area_is_monotone(e1 in 0.0f64..0.6, e2 in 0.0f64..0.6) {
        let s = double(&corpus::l_shape()).unwrap().to_f64_surface();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let (a, b) = (cone_neighborhood(&s, lo).area, cone_neighborhood(&s, hi).area);
        prop_assert!(a <= b + 1e-12, "{} > {}", a, b);
        // Below half the shortest side the sectors are embedded.
        if hi < 0.5 {
            let closed: f64 = s.cone_points.iter().map(|c| c.angle * hi * hi / 2.0).sum();
            prop_assert!((b - closed).abs() < 1e-10);
        }
    }

    #[test]
    fn distance_is_the_shortest_visible_vertex(x in 0.01f64..1.99, y in 0.01f64..1.99, mirrored: bool) {
        let p = corpus::l_shape();
        prop_assume!(p.contains_f64([x, y]));
        let s = double(&p).unwrap().to_f64_surface();
        let (t, q) = s.locate(&Vec2::new(x, y), mirrored).unwrap();
        let got = surface_distance_to_p(&s, t, &q);
        // In the polygon the nearest cone point is reached by a straight visible segment.
        let oracle = p
            .control_vertices()
            .into_iter()
            .filter(|&v| visible(&p, [x, y], v))
            .map(|v| ((v[0] - x).powi(2) + (v[1] - y).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        prop_assert!((got - oracle).abs() < 1e-9, "{} vs {}", got, oracle);
    }

    #[test]
    fn gluings_are_isometric_involutions(idx in 0usize..6) {
        let (name, s) = corpus_surfaces().swap_remove(idx);
        for (t, row) in s.gluings.iter().enumerate() {
            for (k, g) in row.iter().enumerate() {
                let back = &s.gluings[g.tri][g.edge];
                prop_assert_eq!((back.tri, back.edge), (t, k));
                prop_assert_eq!(back.map.compose(&g.map), Isometry::identity(), "{}", name);
                let (a, b) = (&s.triangles[t][k], &s.triangles[t][(k + 1) % 3]);
                prop_assert_eq!(&g.map.apply(a), &s.triangles[g.tri][(g.edge + 1) % 3]);
                prop_assert_eq!(&g.map.apply(b), &s.triangles[g.tri][g.edge]);
                prop_assert_eq!((b.clone() - a.clone()).norm2(), g.map.apply_vec(&(b.clone() - a.clone())).norm2());
            }
        }
    }
}
