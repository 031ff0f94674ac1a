mod common;

use std::f64::consts::SQRT_2;

use escs_core::flow::{retrace, Exit};
use escs_core::polygon::corpus;
use escs_core::{
    billiard_trace, double, min_distance_to_p, trace, Error, Exact, FlatSurface, PhasePoint, Scalar, Termination, Trajectory,
    Vec2,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn q(text: &str) -> Exact {
    text.parse().unwrap()
}

fn start_at<S: Scalar>(s: &FlatSurface<S>, x: f64, y: f64, d: Vec2<S>) -> PhasePoint<S> {
    let (t, p) = s.locate(&Vec2::from_f64(x, y), false).unwrap();
    PhasePoint::new(t, p, d)
}

/// Reflection oracle for the square billiard: unfold the straight line
/// `p + t d` and fold each coordinate back into `[0, 1]`.
fn fold(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r <= 1.0 {
        r
    } else {
        2.0 - r
    }
}

#[test]
fn horizontal_orbit_on_the_pillowcase() {
    let s = double(&corpus::unit_square()).unwrap();
    let tr = trace(&s, &start_at(&s, 0.5, 0.3, Vec2::from_f64(1.0, 0.0)), 10.0, 0.0).unwrap();
    assert_eq!(tr.period(), Some(2.0));
    assert_eq!(min_distance_to_p(&s, &tr), 0.3);
    let tr = trace(&s, &start_at(&s, 0.25, 0.5, Vec2::from_f64(1.0, 0.0)), 10.0, 0.0).unwrap();
    assert_eq!(min_distance_to_p(&s, &tr), 0.5);
}

#[test]
fn diagonal_through_the_centre_hits_a_corner() {
    let s = double(&corpus::unit_square()).unwrap().to_f64_surface();
    let tr = trace(&s, &start_at(&s, 0.5, 0.5, Vec2::from_f64(0.5f64.sqrt(), 0.5f64.sqrt())), 10.0, 1e-9).unwrap();
    assert!(matches!(tr.termination, Termination::HitConePoint { .. }));
    assert!((tr.total_length - 0.5f64.sqrt()).abs() < 1e-9);
    assert!(min_distance_to_p(&s, &tr) < 1e-9);
}

#[test]
fn diagonal_channel_billiard_agrees_with_unfolding() {
    let d = Vec2::new(0.5f64.sqrt(), 0.5f64.sqrt());
    let tr = billiard_trace(&corpus::unit_square(), Vec2::new(0.25, 0.0), d, 20.0, 1e-9).unwrap();
    let period = tr.period().unwrap();
    assert!((period - 2.0 * SQRT_2).abs() < 1e-9, "{period}");
    // Every bounce point lies on the folded straight line.
    let mut s = 0.0;
    for seg in &tr.segments {
        s += seg.length();
        let [x, y] = seg.exit.to_f64();
        let (ox, oy) = (fold(0.25 + s / SQRT_2), fold(s / SQRT_2));
        assert!((x - ox).abs() < 1e-9 && (y - oy).abs() < 1e-9, "({x}, {y}) vs ({ox}, {oy})");
    }
}

#[test]
fn billiard_orbit_aimed_at_a_vertex_stops_there() {
    let tr = billiard_trace(&corpus::l_shape(), Vec2::new(q("1/2"), q("1/2")), Vec2::new(q("1"), q("1")), 10.0, 0.0).unwrap();
    assert!(matches!(tr.termination, Termination::HitConePoint { .. }));
}

#[test]
fn bad_starts_are_rejected() {
    let s = double(&corpus::unit_square()).unwrap().to_f64_surface();
    let st = start_at(&s, 0.5, 0.5, Vec2::new(1.0, 1.0));
    assert_eq!(trace(&s, &st, 1.0, 1e-9).unwrap_err(), Error::NonUnitDirection(SQRT_2));
    assert!(matches!(
        billiard_trace(&corpus::unit_square(), Vec2::new(3.0, 0.5), Vec2::new(1.0, 0.0), 1.0, 1e-9),
        Err(Error::StartOutsideSurface(_))
    ));
}

/// Segment lengths add up and consecutive segments are related by the
/// gluing isometry, both for positions and directions.
fn check_chart_consistency<S: Scalar>(s: &FlatSurface<S>, tr: &Trajectory<S>, tol: f64) -> Result<(), TestCaseError> {
    let total: f64 = tr.segments.iter().map(|g| g.length()).sum();
    prop_assert!((total - tr.total_length).abs() <= 1e-9 * tr.total_length.max(1.0));
    for w in tr.segments.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let map = match &a.leaves {
            Exit::Edge(e) => s.gluings[a.tri][*e].map.clone(),
            Exit::Vertex(m) => m.clone(),
            Exit::End => return Err(TestCaseError::fail("end before the last segment")),
        };
        prop_assert!(map.apply(&a.exit).approx_eq(&b.entry, tol), "{:?} -> {:?}", a.exit.to_f64(), b.entry.to_f64());
        prop_assert!(map.apply_vec(&a.dir).approx_eq(&b.dir, tol));
    }
    Ok(())
}

/// Rotation accumulated along the trajectory's chart changes is the change
/// of the direction's angle, so developing the orbit gives a straight line.
fn check_straight_development<S: Scalar>(s: &FlatSurface<S>, tr: &Trajectory<S>) -> Result<(), TestCaseError> {
    let pts = tr.development(s).points;
    let (a, b) = (pts[0], *pts.last().unwrap());
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    prop_assert!((len - tr.total_length).abs() < 1e-8 * tr.total_length.max(1.0), "{} vs {}", len, tr.total_length);
    Ok(())
}

fn exact_surfaces() -> Vec<FlatSurface<Exact>> {
    [corpus::unit_square(), corpus::l_shape(), corpus::pentagon()].iter().map(|p| double(p).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn float_traces_are_reversible(which in 0usize..3, seed in 0u64..10_000) {
        let s = exact_surfaces().swap_remove(which).to_f64_surface();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let st = common::random_float_start(&s, &mut rng);
        let tr = trace(&s, &st, 50.0, 1e-9).unwrap();
        let (ok, back) = retrace(&s, &tr, 1e-9).unwrap();
        prop_assert!(ok, "{:?} vs {:?}", back.end_pos, tr.start.pos);
        check_chart_consistency(&s, &tr, 1e-9)?;
        check_straight_development(&s, &tr)?;
    }

    #[test]
    fn exact_traces_are_reversible(which in 0usize..3, seed in 0u64..10_000) {
        let s = exact_surfaces().swap_remove(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let st = common::random_exact_start(&s, &mut rng);
        let tr = trace(&s, &st, 20.0, 0.0).unwrap();
        let (ok, back) = retrace(&s, &tr, 0.0).unwrap();
        prop_assert!(ok);
        prop_assert_eq!(&back.end_pos, &tr.start.pos);
        prop_assert_eq!(&back.param_length, &tr.param_length);
        check_chart_consistency(&s, &tr, 0.0)?;
    }

    /// Every orbit on the pillowcase either comes within eps of a cone
    /// point or is periodic.
    #[test]
    fn orbit_dichotomy_on_the_pillowcase(seed in 0u64..100_000) {
        let s = double(&corpus::unit_square()).unwrap().to_f64_surface();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let st = common::random_float_start(&s, &mut rng);
        let tr = trace(&s, &st, 1e4, 1e-9).unwrap();
        prop_assert!(tr.is_periodic() || min_distance_to_p(&s, &tr) < 0.05);
    }

    #[test]
    fn horizontal_orbit_distance_is_its_height(y in 0.01f64..0.99) {
        let s = double(&corpus::unit_square()).unwrap().to_f64_surface();
        let tr = trace(&s, &start_at(&s, 0.5, y, Vec2::new(1.0, 0.0)), 5.0, 1e-9).unwrap();
        prop_assert!((tr.period().unwrap() - 2.0).abs() < 1e-12);
        prop_assert!((min_distance_to_p(&s, &tr) - y.min(1.0 - y)).abs() < 1e-12);
    }

    #[test]
    fn rational_slopes_on_the_pillowcase_close_up(m in 1i64..6, n in 0i64..6, x in 1i64..100) {
        prop_assume!(num_integer::gcd(m, n) == 1);
        // Slope n/m from a generic point: period 2 sqrt(m² + n²).
        let s = double(&corpus::unit_square()).unwrap();
        let (t, p) = s.locate(&Vec2::new(Exact::new(x.into(), 101.into()), q("1/7")), false).unwrap();
        let tr = trace(&s, &PhasePoint::new(t, p, Vec2::new(Exact::from_i64(m), Exact::from_i64(n))), 100.0, 0.0).unwrap();
        match tr.termination {
            Termination::Periodic { period, offset } => {
                prop_assert!((period - 2.0 * ((m * m + n * n) as f64).sqrt()).abs() < 1e-9);
                prop_assert_eq!(offset, 0.0);
            }
            Termination::HitConePoint { .. } => {}
            Termination::MaxLength => prop_assert!(false, "no return within 100"),
        }
        prop_assert!(tr.segments.iter().all(|g| (g.dir.x.to_f64() * n as f64 - g.dir.y.to_f64() * m as f64).abs() < 1e-12
            || (g.dir.x.to_f64() * n as f64 + g.dir.y.to_f64() * m as f64).abs() < 1e-12));
    }
}
