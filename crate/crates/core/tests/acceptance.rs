//! End-to-end acceptance suite. Runs every criterion in order, prints one
//! PASS/FAIL line per criterion and fails if any criterion fails.
//!
//! `cargo test -p escs-core --test acceptance -- --nocapture`

mod common;

use std::f64::consts::PI;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use escs_core::bz::{bz_sweep, ResonancePolicy};
use escs_core::cylinder::{check_cc, compare_signature, cylinder_count_bound, pairwise_angle_bound};
use escs_core::flow::retrace;
use escs_core::polygon::corpus;
use escs_core::spectral::control_constant_with;
use escs_core::{
    double, enumerate_maximal_cylinders, mesh_polygon, solve_eigs, trace, BoundaryCondition, Cylinder, Error, Neighborhood, Scalar,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion: pass flag and a one-line summary.
type Outcome = (bool, String);

fn report(n: usize, name: &str, elapsed: Duration, out: &Outcome) {
    let line = format!(
        "criterion {n} {:<28} {} ({:.1} s) {}\n",
        name,
        if out.0 { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        out.1
    );
    // Written straight to the stream so the lines show without --nocapture.
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn run(n: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let mut out = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panicked: {}", msg.unwrap_or_default()))
        }
    };
    let elapsed = t0.elapsed();
    if let Some(limit) = limit {
        if elapsed > limit {
            out.0 = false;
            out.1 = format!("{}; over the {} s budget", out.1, limit.as_secs());
        }
    }
    report(n, name, elapsed, &out);
    out.0
}

fn gauss_bonnet() -> Outcome {
    let mut worst = 0.0f64;
    let mut slit_chi = None;
    let polys = corpus::all();
    for (name, p) in &polys {
        let s = double(p).unwrap();
        let defect: f64 = s.cone_points.iter().map(|c| 2.0 * PI - c.angle).sum::<f64>() - 2.0 * PI * s.euler_characteristic() as f64;
        worst = worst.max(defect.abs());
        if *name == "square_slit" {
            slit_chi = Some(s.euler_characteristic());
        }
    }
    let ok = polys.len() >= 6 && worst < 1e-9 && slit_chi == Some(0);
    (ok, format!("{} polygons, max defect {worst:.1e}, slit square chi = {slit_chi:?}", polys.len()))
}

fn square_spectrum() -> Outcome {
    let exact: Vec<f64> = {
        let mut v: Vec<f64> = (1..=6).flat_map(|m| (1..=6).map(move |n| (m * m + n * n) as f64 * PI * PI)).collect();
        v.sort_by(f64::total_cmp);
        v.truncate(10);
        v
    };
    let errors = |h: f64| -> Vec<f64> {
        let mesh = mesh_polygon(&corpus::unit_square(), h).unwrap();
        let e = solve_eigs(&mesh, BoundaryCondition::Dirichlet, 10).unwrap();
        e.iter().zip(&exact).map(|(p, w)| (p.lambda_sq - w) / w).collect()
    };
    let coarse = errors(0.02);
    let fine = errors(0.01);
    let worst = coarse.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    // Reduction of the summed relative error under h -> h/2.
    let ratio = coarse.iter().map(|e| e.abs()).sum::<f64>() / fine.iter().map(|e| e.abs()).sum::<f64>();
    let per_mode: Vec<String> = coarse.iter().zip(&fine).map(|(c, f)| format!("{:.2}", c / f)).collect();
    let ok = worst < 0.01 && (3.5..=4.5).contains(&ratio);
    (ok, format!("max rel. error {worst:.2e} at h=0.02, error ratio {ratio:.2} (per mode {})", per_mode.join(" ")))
}

fn corner_mass() -> Outcome {
    let eps = 0.2;
    let one_d = eps / 2.0 - (2.0 * PI * eps).sin() / (4.0 * PI);
    let want = 4.0 * (2.0 * one_d) * (2.0 * one_d);
    let r = control_constant_with(&corpus::unit_square(), eps, BoundaryCondition::Dirichlet, 1, 0.02, Neighborhood::CornerBoxes)
        .unwrap();
    let rel = (r.c_hat - want).abs() / want;
    (rel < 0.02, format!("mass {:.6e} vs closed form {want:.6e}, rel. error {rel:.2e}", r.c_hat))
}

fn control_positivity() -> Outcome {
    let (h, k, eps) = (0.02, 100, 0.25);
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, p) in [("square", corpus::unit_square()), ("l_shape", corpus::l_shape())] {
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            let a = control_constant_with(&p, eps, bc, k, h, Neighborhood::Disks).unwrap();
            let b = control_constant_with(&p, eps, bc, k, h / 2.0, Neighborhood::Disks).unwrap();
            let min_ratio = a.ratios.iter().chain(&b.ratios).cloned().fold(f64::INFINITY, f64::min);
            let change = (a.c_hat - b.c_hat).abs() / b.c_hat;
            let here = a.ratios.len() == k && min_ratio > 1e-6 && a.c_hat > 0.0 && b.c_hat > 0.0 && change <= 0.2;
            ok &= here;
            notes.push(format!("{name}/{}: c_hat {:.4} -> {:.4} ({:.0}%)", format!("{bc:?}"), a.c_hat, b.c_hat, 100.0 * change));
        }
    }
    (ok, notes.join(", "))
}

fn signature<S: Scalar>(c: &[Cylinder<S>]) -> Vec<([f64; 2], f64, f64)> {
    let mut v: Vec<_> = c.iter().map(|c| (c.direction, c.circumference, c.width)).collect();
    v.sort_by(|a, b| compare_signature((&a.0, a.1, a.2), (&b.0, b.1, b.2)));
    v
}

fn same_list(a: &[([f64; 2], f64, f64)], b: &[([f64; 2], f64, f64)]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            (x.0[0] - y.0[0]).abs() < 1e-9 && (x.0[1] - y.0[1]).abs() < 1e-9 && (x.1 - y.1).abs() < 1e-9 && (x.2 - y.2).abs() < 1e-9
        })
}

fn cylinder_equivalence() -> Outcome {
    let eps = 0.1;
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, p) in [("square", corpus::unit_square()), ("rect_1x2", corpus::rectangle("1", "2"))] {
        let s = double(&p).unwrap();
        let cyl = enumerate_maximal_cylinders(&s, eps).unwrap();
        let got = signature(&cyl);
        let oracle = common::sampling_oracle(&s.to_f64_surface(), eps, 100_000, 1000.0, 5);
        let bound = cylinder_count_bound(s.area_f64(), eps);
        let here = same_list(&got, &oracle) && (cyl.len() as f64) <= bound;
        ok &= here;
        notes.push(format!("{name}: {} enumerated, {} sampled, bound {bound:.0}", got.len(), oracle.len()));
    }
    (ok, notes.join(", "))
}

fn cc_verification() -> Outcome {
    let s = double(&corpus::unit_square()).unwrap();
    let rep = check_cc(&s, 0.1, 1000, 100.0, 2024).unwrap();
    let ok = rep.holds() && rep.entered + rep.singular + rep.avoided == 1000;
    (
        ok,
        format!(
            "{} entered, {} singular, {} avoided ({} matched), {} violations",
            rep.entered,
            rep.singular,
            rep.avoided,
            rep.matched,
            rep.violations.len()
        ),
    )
}

fn angle_bound() -> Outcome {
    let eps = 0.1;
    let mut pairs = 0;
    let mut crossings = 0;
    let mut failures = 0;
    let mut per_surface = Vec::new();
    for (name, p) in corpus::all() {
        let s = double(&p).unwrap().to_f64_surface();
        let cyl = enumerate_maximal_cylinders(&s, eps).unwrap();
        per_surface.push(format!("{name} {}", cyl.len()));
        for i in 0..cyl.len() {
            for j in i + 1..cyl.len() {
                match pairwise_angle_bound(&cyl[i], &cyl[j], eps) {
                    Ok(b) => {
                        pairs += 1;
                        crossings += b.crossings.len();
                        failures += usize::from(!b.holds);
                    }
                    Err(Error::NoIntersection) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
    (
        failures == 0 && pairs > 0,
        format!("{pairs} intersecting pairs, {crossings} crossings, {failures} violations; cylinders: {}", per_surface.join(", ")),
    )
}

fn bz_sweep_stability() -> Outcome {
    let lambdas: Vec<f64> = (0..50).map(|i| 10.0 + 490.0 * i as f64 / 49.0).collect();
    let sweep = |n: usize| bz_sweep(1.0, 1.0, n, &lambdas, (0.4, 0.6), 20, 42, ResonancePolicy::Error).unwrap();
    let (a, b) = (sweep(256), sweep(512));
    let finite = a.iter().chain(&b).all(|p| p.estimate.ratio.is_finite() && p.estimate.ratio > 0.0);
    let max = |v: &[escs_core::bz::SweepPoint]| v.iter().map(|p| p.estimate.ratio).fold(0.0, f64::max);
    let (ma, mb) = (max(&a), max(&b));
    let change = (ma - mb).abs() / mb;
    (finite && change <= 0.05, format!("max C {ma:.6e} on 256^2, {mb:.6e} on 512^2, change {change:.2e}"))
}

fn reversibility() -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut exact_failures = 0;
    let polys = [corpus::unit_square(), corpus::l_shape(), corpus::pentagon()];
    for (k, p) in polys.iter().enumerate() {
        let s = double(p).unwrap();
        let sf = s.to_f64_surface();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        for _ in 0..1000 {
            let st = common::random_float_start(&sf, &mut rng);
            let tr = trace(&sf, &st, 50.0, 1e-9).unwrap();
            let (ok, back) = retrace(&sf, &tr, 1e-9).unwrap();
            failures += usize::from(!ok);
            if back.end_tri == tr.start.tri {
                worst = worst.max((back.end_pos.clone() - tr.start.pos.clone()).norm());
            }
            let st = common::random_exact_start(&s, &mut rng);
            let tr = trace(&s, &st, 50.0, 0.0).unwrap();
            let (ok, back) = retrace(&s, &tr, 0.0).unwrap();
            exact_failures += usize::from(!ok || back.end_pos != tr.start.pos);
        }
    }
    (
        failures == 0 && exact_failures == 0,
        format!("3 surfaces x 1000 traces: {failures} float failures (max drift {worst:.1e}), {exact_failures} exact failures"),
    )
}

#[test]
fn acceptance_criteria() {
    let min = |m: u64| Some(Duration::from_secs(60 * m));
    let results = [
        run(1, "gauss-bonnet", Some(Duration::from_secs(1)), gauss_bonnet),
        run(2, "square spectrum", min(2), square_spectrum),
        run(3, "corner mass oracle", None, corner_mass),
        run(4, "control positivity", min(10), control_positivity),
        run(5, "cylinder equivalence", None, cylinder_equivalence),
        run(6, "cc verification", None, cc_verification),
        run(7, "angle bound", None, angle_bound),
        run(8, "bz sweep", min(5), bz_sweep_stability),
        run(9, "flow reversibility", None, reversibility),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    let _ = std::io::stderr().write_all(format!("acceptance: {passed}/{} criteria pass\n", results.len()).as_bytes());
    assert_eq!(passed, results.len());
}
