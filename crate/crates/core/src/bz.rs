//! Empirical constant in the torus resolvent estimate
//!
//! ```text
//! ‖w‖² ≤ C (‖f‖² + ‖g‖² + ‖w‖²_ω),   (Δ - λ²) w = f + ∂x g,
//! ```
//!
//! with `Δ = -(∂x² + ∂y²)` on `[0,l] x [0,a]`, periodic in both variables, and
//! `ω = [0,l] x ω_y`. Grid functions are read as trigonometric polynomials
//! through their discrete Fourier coefficients; the equation is solved mode
//! by mode and every norm, including the one over the strip `ω`, is
//! evaluated exactly from the coefficients.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

/// Samples on the uniform grid `(i l / nx, j a / ny)`, stored row by row.
#[derive(Clone, Debug)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub l: f64,
    pub a: f64,
    pub data: Vec<Complex64>,
}

impl Grid {
    pub fn zeros(nx: usize, ny: usize, l: f64, a: f64) -> Self {
        Grid { nx, ny, l, a, data: vec![Complex64::new(0.0, 0.0); nx * ny] }
    }

    pub fn from_fn(nx: usize, ny: usize, l: f64, a: f64, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut g = Grid::zeros(nx, ny, l, a);
        for j in 0..ny {
            for i in 0..nx {
                g.data[j * nx + i] = f(i as f64 * l / nx as f64, j as f64 * a / ny as f64);
            }
        }
        g
    }

    pub fn scaled(&self, t: f64) -> Self {
        Grid { data: self.data.iter().map(|z| z * t).collect(), ..self.clone() }
    }

    fn check_shape(&self, other: &Grid) -> Result<()> {
        if (self.nx, self.ny) != (other.nx, other.ny) || self.l != other.l || self.a != other.a {
            return Err(Error::InvalidArgument("grid functions live on different grids".into()));
        }
        Ok(())
    }

    /// Fourier coefficients `c[n][m]` of `Σ c e^{2πi(mx/l + ny/a)}`.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let mut c = self.data.clone();
        fft2(&mut c, self.nx, self.ny, false);
        let s = 1.0 / (self.nx * self.ny) as f64;
        c.iter_mut().for_each(|z| *z *= s);
        c
    }

    pub fn from_coefficients(nx: usize, ny: usize, l: f64, a: f64, mut c: Vec<Complex64>) -> Self {
        fft2(&mut c, nx, ny, true);
        Grid { nx, ny, l, a, data: c }
    }
}

fn fft2(data: &mut [Complex64], nx: usize, ny: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let (px, py) = if inverse {
        (planner.plan_fft_inverse(nx), planner.plan_fft_inverse(ny))
    } else {
        (planner.plan_fft_forward(nx), planner.plan_fft_forward(ny))
    };
    px.process(data);
    let mut col = vec![Complex64::new(0.0, 0.0); ny];
    for i in 0..nx {
        for j in 0..ny {
            col[j] = data[j * nx + i];
        }
        py.process(&mut col);
        for j in 0..ny {
            data[j * nx + i] = col[j];
        }
    }
}

/// Signed frequency of FFT index `i` of an `n`-point transform.
fn freq(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResonancePolicy {
    /// Fail when the right-hand side has a component on a resonant mode.
    Error,
    /// Drop resonant components and report them.
    Project,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantEstimate {
    /// `‖w‖² / (‖f‖² + ‖g‖² + ‖w‖²_ω)`.
    pub ratio: f64,
    pub w_norm_sq: f64,
    pub f_norm_sq: f64,
    pub g_norm_sq: f64,
    pub w_omega_sq: f64,
    /// Modes with `|k|² = λ²`.
    pub kernel_modes: usize,
    /// L² norm of the right-hand side's projection on those modes.
    pub kernel_norm: f64,
}

/// `‖u‖²` over `[0,l] x [0,a]` from Fourier coefficients.
fn norm_sq(c: &[Complex64], l: f64, a: f64) -> f64 {
    l * a * c.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// `‖u‖²` over `[0,l] x [y0,y1]` from Fourier coefficients.
fn strip_norm_sq(c: &[Complex64], nx: usize, ny: usize, l: f64, a: f64, (y0, y1): (f64, f64)) -> f64 {
    let n2 = 2 * ny;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n2);
    let inv = planner.plan_fft_inverse(n2);
    // ∫ e^{2πi d y/a} over [y0, y1].
    let weight = |d: i64| -> Complex64 {
        if d == 0 {
            return Complex64::new(y1 - y0, 0.0);
        }
        let k = TAU * d as f64 / a;
        (Complex64::new(0.0, k * y1).exp() - Complex64::new(0.0, k * y0).exp()) / Complex64::new(0.0, k)
    };
    let weights: Vec<Complex64> = (0..n2).map(|i| weight(freq(i, n2))).collect();
    let mut total = 0.0;
    let mut buf = vec![Complex64::new(0.0, 0.0); n2];
    for m in 0..nx {
        if (0..ny).all(|j| c[j * nx + m] == Complex64::new(0.0, 0.0)) {
            continue;
        }
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for j in 0..ny {
            // Signed frequencies laid out without wrap-around in a buffer of
            // twice the length.
            buf[(freq(j, ny) + ny as i64) as usize] = c[j * nx + m];
        }
        fwd.process(&mut buf);
        buf.iter_mut().for_each(|z| *z = Complex64::new(z.norm_sqr(), 0.0));
        inv.process(&mut buf);
        // buf[d] / n2 = Σ_n c_n conj(c_{n-d}).
        let s: Complex64 = (0..n2).map(|i| weights[i] * buf[i]).sum();
        total += s.re / n2 as f64;
    }
    l * total
}

fn validate(l: f64, a: f64, omega_y: (f64, f64)) -> Result<()> {
    if !(l > 0.0 && a > 0.0) {
        return Err(Error::InvalidArgument(format!("side lengths must be positive, got {l} and {a}")));
    }
    if !(0.0 <= omega_y.0 && omega_y.0 < omega_y.1 && omega_y.1 <= a) {
        return Err(Error::InvalidArgument(format!("ω_y = ({}, {}) is not an interval in [0, {a}]", omega_y.0, omega_y.1)));
    }
    Ok(())
}

/// The ratio for a given triple `(w, f, g)`, without solving anything.
pub fn estimate_ratio(w: &Grid, f: &Grid, g: &Grid, omega_y: (f64, f64)) -> Result<ConstantEstimate> {
    w.check_shape(f)?;
    w.check_shape(g)?;
    validate(w.l, w.a, omega_y)?;
    let (cw, cf, cg) = (w.coefficients(), f.coefficients(), g.coefficients());
    Ok(ratio_from_coefficients(&cw, &cf, &cg, w, omega_y, 0, 0.0))
}

fn ratio_from_coefficients(
    cw: &[Complex64],
    cf: &[Complex64],
    cg: &[Complex64],
    grid: &Grid,
    omega_y: (f64, f64),
    kernel_modes: usize,
    kernel_norm: f64,
) -> ConstantEstimate {
    let (l, a) = (grid.l, grid.a);
    let w_norm_sq = norm_sq(cw, l, a);
    let f_norm_sq = norm_sq(cf, l, a);
    let g_norm_sq = norm_sq(cg, l, a);
    let w_omega_sq = strip_norm_sq(cw, grid.nx, grid.ny, l, a, omega_y);
    ConstantEstimate {
        ratio: w_norm_sq / (f_norm_sq + g_norm_sq + w_omega_sq),
        w_norm_sq,
        f_norm_sq,
        g_norm_sq,
        w_omega_sq,
        kernel_modes,
        kernel_norm,
    }
}

/// Solves `(Δ - λ²) w = f + ∂x g` on the torus. Resonant modes get `ŵ = 0`;
/// returns `w`, the number of resonant modes and the norm of the
/// right-hand side's component on them.
pub fn solve_torus(lambda: f64, f: &Grid, g: &Grid) -> Result<(Grid, usize, f64)> {
    f.check_shape(g)?;
    let (nx, ny, l, a) = (f.nx, f.ny, f.l, f.a);
    let (cf, cg) = (f.coefficients(), g.coefficients());
    let lam2 = lambda * lambda;
    let mut cw = vec![Complex64::new(0.0, 0.0); nx * ny];
    let mut modes = 0;
    let mut kernel_sq = 0.0;
    let rhs_scale = cf.iter().chain(&cg).map(|z| z.norm()).fold(0.0, f64::max);
    for j in 0..ny {
        let ky = TAU * freq(j, ny) as f64 / a;
        for i in 0..nx {
            let kx = TAU * freq(i, nx) as f64 / l;
            let idx = j * nx + i;
            let rhs = cf[idx] + Complex64::new(0.0, kx) * cg[idx];
            let k2 = kx * kx + ky * ky;
            let symbol = k2 - lam2;
            if symbol.abs() <= 1e-12 * k2.max(lam2) {
                modes += 1;
                if rhs.norm() > 1e-12 * rhs_scale {
                    kernel_sq += l * a * rhs.norm_sqr();
                }
                continue;
            }
            cw[idx] = rhs / symbol;
        }
    }
    Ok((Grid::from_coefficients(nx, ny, l, a, cw), modes, kernel_sq.sqrt()))
}

/// Solves for `w` and returns the ratio for `(w, f, g)`.
pub fn bz_estimate_check(
    lambda: f64,
    f: &Grid,
    g: &Grid,
    omega_y: (f64, f64),
    policy: ResonancePolicy,
) -> Result<ConstantEstimate> {
    validate(f.l, f.a, omega_y)?;
    let (w, modes, kernel_norm) = solve_torus(lambda, f, g)?;
    if kernel_norm > 0.0 && policy == ResonancePolicy::Error {
        return Err(Error::ResonanceSingular(kernel_norm));
    }
    let (cw, cf, cg) = (w.coefficients(), f.coefficients(), g.coefficients());
    Ok(ratio_from_coefficients(&cw, &cf, &cg, &w, omega_y, modes, kernel_norm))
}

/// Real trigonometric polynomial with random coefficients on the modes
/// `|m|, |n| ≤ bandwidth`. The coefficients are drawn in a fixed mode order,
/// so the same seed gives the same function on every grid fine enough to
/// carry it.
pub fn band_limited_random(nx: usize, ny: usize, l: f64, a: f64, bandwidth: usize, rng: &mut ChaCha8Rng) -> Result<Grid> {
    if nx <= 2 * bandwidth || ny <= 2 * bandwidth {
        return Err(Error::InvalidArgument(format!("a {nx}x{ny} grid cannot carry bandwidth {bandwidth}")));
    }
    let b = bandwidth as i64;
    let mut c = vec![Complex64::new(0.0, 0.0); nx * ny];
    let at = |m: i64, n: i64| (n.rem_euclid(ny as i64) as usize) * nx + m.rem_euclid(nx as i64) as usize;
    for m in 0..=b {
        for n in -b..=b {
            if m == 0 && n < 0 {
                continue;
            }
            let z = if m == 0 && n == 0 {
                Complex64::new(rng.random::<f64>() * 2.0 - 1.0, 0.0)
            } else {
                Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
            };
            c[at(m, n)] = z;
            c[at(-m, -n)] = z.conj();
        }
    }
    Ok(Grid::from_coefficients(nx, ny, l, a, c))
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub estimate: ConstantEstimate,
}

/// Runs the check for every `λ` with fresh random `f` and `g`; instance `i`
/// draws from stream `i` of the seeded generator.
#[allow(clippy::too_many_arguments)]
pub fn bz_sweep(
    l: f64,
    a: f64,
    n: usize,
    lambdas: &[f64],
    omega_y: (f64, f64),
    bandwidth: usize,
    seed: u64,
    policy: ResonancePolicy,
) -> Result<Vec<SweepPoint>> {
    lambdas
        .par_iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let f = band_limited_random(n, n, l, a, bandwidth, &mut rng)?;
            let g = band_limited_random(n, n, l, a, bandwidth, &mut rng)?;
            Ok(SweepPoint { lambda, estimate: bz_estimate_check(lambda, &f, &g, omega_y, policy)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn strip_norm_of_a_single_y_mode() {
        // |1 + e^{2πiy}|² = 2 + 2cos(2πy); over y in [0.4, 0.6] and x in [0,1].
        let w = Grid::from_fn(16, 16, 1.0, 1.0, |_, y| Complex64::new(1.0, 0.0) + Complex64::new(0.0, TAU * y).exp());
        let z = Grid::zeros(16, 16, 1.0, 1.0);
        let e = estimate_ratio(&w, &z, &z, (0.4, 0.6)).unwrap();
        let exact = 0.4 + 2.0 * ((TAU * 0.6).sin() - (TAU * 0.4).sin()) / TAU;
        assert!(close(e.w_omega_sq, exact, 1e-13), "{} vs {exact}", e.w_omega_sq);
        assert!(close(e.w_norm_sq, 2.0, 1e-13));
    }

    #[test]
    fn solution_satisfies_the_equation() {
        // w = sin(2πx) cos(4πy) has (Δ - λ²) w = (20π² - λ²) w.
        let (l, a) = (1.0, 1.0);
        let lam = 3.0;
        let w = |x: f64, y: f64| (TAU * x).sin() * (2.0 * TAU * y).cos();
        let f = Grid::from_fn(32, 32, l, a, |x, y| Complex64::new((5.0 * TAU * TAU - lam * lam) * w(x, y), 0.0));
        let g = Grid::zeros(32, 32, l, a);
        let (sol, modes, _) = solve_torus(lam, &f, &g).unwrap();
        assert_eq!(modes, 0);
        for j in 0..32 {
            for i in 0..32 {
                let (x, y) = (i as f64 / 32.0, j as f64 / 32.0);
                assert!((sol.data[j * 32 + i].re - w(x, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn resonance_policies() {
        let lam = TAU; // |k| = 2π for (m, n) = (±1, 0), (0, ±1)
        let f = Grid::from_fn(8, 8, 1.0, 1.0, |x, _| Complex64::new((TAU * x).cos(), 0.0));
        let g = Grid::zeros(8, 8, 1.0, 1.0);
        assert!(matches!(bz_estimate_check(lam, &f, &g, (0.4, 0.6), ResonancePolicy::Error), Err(Error::ResonanceSingular(_))));
        let e = bz_estimate_check(lam, &f, &g, (0.4, 0.6), ResonancePolicy::Project).unwrap();
        assert_eq!(e.kernel_modes, 4);
        assert!(close(e.kernel_norm, 0.5f64.sqrt(), 1e-12));
        assert!(e.w_norm_sq < 1e-25);
    }
}
