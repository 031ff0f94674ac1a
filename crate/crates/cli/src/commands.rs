use std::fmt::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use escs_core::bz::bz_sweep;
use escs_core::cylinder::{check_cc_with, cylinders_to_json};
use escs_core::scalar::parse_exact;
use escs_core::{
    double as double_polygon, enumerate_maximal_cylinders, mesh_polygon, min_distance_to_p, solve_eigs, trace as trace_flow, BoundaryCondition,
    ControlReport, Error, Exact, FlatSurface, Neighborhood, PhasePoint, Polygon, Scalar, Vec2,
};
use serde_json::{json, Value};

use crate::output::{sig9, write_atomic, write_json};
use crate::{svg, BzArgs, CheckCcArgs, ControlArgs, CylindersArgs, DoubleArgs, Mode, SpectrumArgs, TraceArgs};

fn header(command: &str, seed: u64) -> Value {
    json!({"command": command, "version": env!("CARGO_PKG_VERSION"), "seed": seed})
}

fn svg_meta(command: &str, seed: u64) -> Vec<(&'static str, String)> {
    vec![
        ("command", command.to_string()),
        ("version", env!("CARGO_PKG_VERSION").to_string()),
        ("seed", seed.to_string()),
        ("number_format", "at most 9 significant digits".to_string()),
    ]
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok(v)
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidArgument(msg.into()).into()
}

/// A polygon document, or a surface document that records its polygon.
fn load_polygon(path: &Path) -> Result<Polygon> {
    let v = read_json(path)?;
    if v.get("outer").is_some() {
        return Ok(Polygon::from_json_value(&v)?);
    }
    match v.get("polygon") {
        Some(p) if !p.is_null() => Ok(Polygon::from_json_value(p)?),
        _ => Err(Error::Parse(format!("{} holds neither a polygon nor a doubled polygon", path.display())).into()),
    }
}

/// A surface document, or a polygon document that is doubled on load.
fn load_surface<S: Scalar>(path: &Path) -> Result<FlatSurface<S>> {
    let v = read_json(path)?;
    if v.get("triangles").is_some() {
        return Ok(FlatSurface::<S>::from_json_value(&v)?);
    }
    let p = Polygon::from_json_value(&v)?;
    Ok(double_polygon(&p)?.map_scalar(|x: &Exact| S::from_exact(x)))
}

fn parse_pair(text: &str, what: &str) -> Result<[Exact; 2]> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || invalid(format!("{what} must be \"x,y\" with decimals or p/q, got '{text}'"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let x = parse_exact(parts[0]).ok_or_else(bad)?;
    let y = parse_exact(parts[1]).ok_or_else(bad)?;
    Ok([x, y])
}

fn parse_floats(text: &str, what: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || invalid(format!("{what} must be \"a,b\", got '{text}'"));
    if parts.len() != 2 {
        return Err(bad());
    }
    Ok((parts[0].parse().map_err(|_| bad())?, parts[1].parse().map_err(|_| bad())?))
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{what} must be positive, got {x}")))
    }
}

fn summary_path(out: &Path, given: &Option<PathBuf>) -> PathBuf {
    given.clone().unwrap_or_else(|| out.with_extension("json"))
}

pub fn double(a: &DoubleArgs, seed: u64) -> Result<()> {
    let p = load_polygon(&a.input)?;
    let s = double_polygon(&p)?;
    let mut v = s.to_json_value();
    v["header"] = header("double", seed);
    write_json(&a.out, &v)?;
    eprintln!("{} triangles, {} cone points, euler characteristic {}", s.triangles.len(), s.cone_points.len(), s.euler_characteristic());
    Ok(())
}

pub fn trace(a: &TraceArgs, seed: u64) -> Result<()> {
    positive(a.l_max, "--l-max")?;
    let start = parse_pair(&a.start, "--start")?;
    let dir = parse_pair(&a.dir, "--dir")?;
    match a.mode {
        Mode::Exact => trace_on::<Exact>(&load_surface(&a.input)?, a, &start, &dir, seed),
        Mode::Float => trace_on::<f64>(&load_surface(&a.input)?, a, &start, &dir, seed),
    }
}

fn trace_on<S: Scalar>(s: &FlatSurface<S>, a: &TraceArgs, start: &[Exact; 2], dir: &[Exact; 2], seed: u64) -> Result<()> {
    let pos = Vec2::new(S::from_exact(&start[0]), S::from_exact(&start[1]));
    let (tri, local) = s
        .locate(&pos, a.mirrored)
        .ok_or_else(|| Error::StartOutsideSurface(format!("{} is not in the surface", a.start)))?;
    let dir = if S::EXACT {
        let d = Vec2::new(S::from_exact(&dir[0]), S::from_exact(&dir[1]));
        if a.mirrored {
            Vec2::new(d.x, -d.y)
        } else {
            d
        }
    } else {
        let (dx, dy) = (dir[0].to_f64(), dir[1].to_f64());
        let n = dx.hypot(dy);
        if n == 0.0 {
            return Err(Error::NonUnitDirection(0.0).into());
        }
        let dy = if a.mirrored { -dy } else { dy };
        Vec2::new(S::from_f64(dx / n), S::from_f64(dy / n))
    };
    let cone_tol = if S::EXACT { 0.0 } else { a.cone_tol };
    let traj = trace_flow(s, &PhasePoint::new(tri, local, dir), a.l_max, cone_tol)?;
    let v = json!({
        "header": header("trace", seed),
        "mode": if S::EXACT { "exact" } else { "float" },
        "min_distance_to_p": min_distance_to_p(s, &traj),
        "trajectory": traj.to_json_value(s),
    });
    write_json(&a.out, &v)?;
    if let Some(path) = &a.svg {
        let dev = traj.development(s);
        write_atomic(path, svg::development(&dev.points, &dev.triangles, &svg_meta("trace", seed)).as_bytes())?;
    }
    Ok(())
}

pub fn cylinders(a: &CylindersArgs, seed: u64) -> Result<()> {
    match a.mode {
        Mode::Exact => cylinders_on::<Exact>(&load_surface(&a.input)?, a, seed),
        Mode::Float => cylinders_on::<f64>(&load_surface(&a.input)?, a, seed),
    }
}

fn cylinders_on<S: Scalar>(s: &FlatSurface<S>, a: &CylindersArgs, seed: u64) -> Result<()> {
    let cyl = enumerate_maximal_cylinders(s, a.eps)?;
    let mut v = cylinders_to_json(s, a.eps, &cyl);
    v["header"] = header("cylinders", seed);
    write_json(&a.out, &v)?;
    if let Some(path) = &a.svg {
        let mut meta = svg_meta("cylinders", seed);
        meta.push(("eps", a.eps.to_string()));
        write_atomic(path, svg::cylinders(s, &cyl, &meta).as_bytes())?;
    }
    eprintln!("{} maximal cylinders at eps = {}", cyl.len(), a.eps);
    Ok(())
}

pub fn check_cc(a: &CheckCcArgs, seed: u64) -> Result<()> {
    positive(a.l_max, "--l-max")?;
    match a.mode {
        Mode::Exact => check_cc_on::<Exact>(&load_surface(&a.input)?, a, seed),
        Mode::Float => check_cc_on::<f64>(&load_surface(&a.input)?, a, seed),
    }
}

fn check_cc_on<S: Scalar>(s: &FlatSurface<S>, a: &CheckCcArgs, seed: u64) -> Result<()> {
    let cyl = enumerate_maximal_cylinders(s, a.eps)?;
    let rep = check_cc_with(s, &cyl, a.eps, a.samples, a.l_max, seed)?;
    let mut v = serde_json::to_value(&rep)?;
    v["holds"] = json!(rep.holds());
    v["header"] = header("check-cc", seed);
    write_json(&a.out, &v)?;
    if let Some(path) = &a.svg {
        let mut meta = svg_meta("check-cc", seed);
        meta.push(("eps", a.eps.to_string()));
        write_atomic(path, svg::cylinders(s, &cyl, &meta).as_bytes())?;
    }
    eprintln!(
        "{} orbits: {} entered, {} singular, {} avoided ({} in a cylinder, {} violations)",
        rep.samples,
        rep.entered,
        rep.singular,
        rep.avoided,
        rep.matched,
        rep.violations.len()
    );
    Ok(())
}

pub fn spectrum(a: &SpectrumArgs, seed: u64) -> Result<()> {
    let p = load_polygon(&a.input)?;
    let bc: BoundaryCondition = a.bc.into();
    let mesh = mesh_polygon(&p, a.h)?;
    let pairs = solve_eigs(&mesh, bc, a.k)?;
    let mut csv = String::new();
    writeln!(csv, "# escs spectrum seed={seed} bc={} h={} nodes={}", bc.name(), a.h, mesh.vertices.len())?;
    writeln!(csv, "k,lambda_sq,residual")?;
    for (i, e) in pairs.iter().enumerate() {
        writeln!(csv, "{},{},{}", i + 1, sig9(e.lambda_sq), sig9(e.residual))?;
    }
    write_atomic(&a.out, csv.as_bytes())?;
    let summary = json!({
        "header": header("spectrum", seed),
        "bc": bc,
        "h": a.h,
        "nodes": mesh.vertices.len(),
        "triangles": mesh.triangles.len(),
        "lambda_sq": pairs.iter().map(|e| e.lambda_sq).collect::<Vec<_>>(),
        "residuals": pairs.iter().map(|e| e.residual).collect::<Vec<_>>(),
    });
    write_json(&summary_path(&a.out, &a.summary), &summary)?;
    if let Some(path) = &a.svg {
        if a.plot_index == 0 || a.plot_index > pairs.len() {
            return Err(invalid(format!("--plot-index must be in 1..={}", pairs.len())));
        }
        let e = &pairs[a.plot_index - 1];
        let mut meta = svg_meta("spectrum", seed);
        meta.push(("index", a.plot_index.to_string()));
        meta.push(("lambda_sq", sig9(e.lambda_sq)));
        write_atomic(path, svg::heatmap(&mesh, &e.u, &meta).as_bytes())?;
    }
    Ok(())
}

pub fn control(a: &ControlArgs, seed: u64) -> Result<()> {
    let p = load_polygon(&a.input)?;
    positive(a.eps, "--eps").map_err(|_| Error::EpsNonPositive(a.eps))?;
    let bc: BoundaryCondition = a.bc.into();
    let kind: Neighborhood = a.neighborhood.into();
    let mesh = mesh_polygon(&p, a.h)?;
    let pairs = solve_eigs(&mesh, bc, a.k)?;
    let rep = ControlReport::from_pairs(&mesh, &pairs, &p, a.eps, bc, kind)?;
    let mut csv = String::new();
    writeln!(
        csv,
        "# escs control seed={seed} eps={} bc={} h={} neighborhood={} nodes={}",
        a.eps,
        bc.name(),
        a.h,
        kind.name(),
        rep.nodes
    )?;
    writeln!(csv, "k,lambda_sq,ratio")?;
    for (i, (l, r)) in rep.lambda_sq.iter().zip(&rep.ratios).enumerate() {
        writeln!(csv, "{},{},{}", i + 1, sig9(*l), sig9(*r))?;
    }
    write_atomic(&a.out, csv.as_bytes())?;
    let mut summary = serde_json::to_value(&rep)?;
    summary["header"] = header("control", seed);
    write_json(&summary_path(&a.out, &a.summary), &summary)?;
    if let Some(path) = &a.svg {
        let pts: Vec<(f64, f64)> = rep.lambda_sq.iter().zip(&rep.ratios).map(|(l, r)| (l.max(0.0).sqrt(), *r)).collect();
        let mut meta = svg_meta("control", seed);
        meta.push(("eps", a.eps.to_string()));
        meta.push(("bc", bc.name().to_string()));
        write_atomic(path, svg::scatter(&pts, "lambda", "mass ratio", "mass near the vertices", &meta).as_bytes())?;
    }
    if let Some(path) = &a.heatmap {
        let mut meta = svg_meta("control", seed);
        meta.push(("index", (rep.argmin + 1).to_string()));
        write_atomic(path, svg::heatmap(&mesh, &pairs[rep.argmin].u, &meta).as_bytes())?;
    }
    eprintln!("c_hat = {} at k = {}", rep.c_hat, rep.argmin + 1);
    Ok(())
}

pub fn bz_check(a: &BzArgs, seed: u64) -> Result<()> {
    let omega = parse_floats(&a.omega, "--omega")?;
    positive(a.lambda_min, "--lambda-min")?;
    if a.lambda_max < a.lambda_min {
        return Err(invalid("--lambda-max must not be below --lambda-min"));
    }
    if a.count == 0 {
        return Err(invalid("--count must be at least 1"));
    }
    let lambdas: Vec<f64> = (0..a.count)
        .map(|i| if a.count == 1 { a.lambda_min } else { a.lambda_min + (a.lambda_max - a.lambda_min) * i as f64 / (a.count - 1) as f64 })
        .collect();
    let pts = bz_sweep(a.l, a.a, a.n, &lambdas, omega, a.bandwidth, seed, a.resonance.into())?;
    let (argmax, max) = pts
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, p)| if p.estimate.ratio > b.1 { (i, p.estimate.ratio) } else { b });
    let v = json!({
        "header": header("bz-check", seed),
        "l": a.l,
        "a": a.a,
        "n": a.n,
        "omega_y": [omega.0, omega.1],
        "bandwidth": a.bandwidth,
        "max_ratio": max,
        "argmax": argmax,
        "points": pts,
    });
    write_json(&a.out, &v)?;
    if let Some(path) = &a.svg {
        let xy: Vec<(f64, f64)> = pts.iter().map(|p| (p.lambda, p.estimate.ratio)).collect();
        write_atomic(path, svg::scatter(&xy, "lambda", "C", "torus strip estimate", &svg_meta("bz-check", seed)).as_bytes())?;
    }
    eprintln!("max constant {max} at lambda = {}", lambdas[argmax]);
    Ok(())
}
