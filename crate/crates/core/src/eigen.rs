//! Smallest eigenpairs of the generalized problem `K u = λ² M u`.
//!
//! Small systems are reduced to a dense symmetric problem through the
//! Cholesky factor of `M`. Larger ones use shift-invert with a sparse
//! Cholesky factorization of `K - σM` (σ < 0, so the factor exists for
//! Neumann problems too) and a block Krylov space that is orthonormalized in
//! the `M` inner product and projected by Rayleigh-Ritz. The Krylov space
//! grows until every wanted Ritz pair meets the residual tolerance.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{assemble, BoundaryCondition, CsrMatrix, FemSystem};
use crate::mesh::Mesh;

/// Degrees of freedom below which the dense solver is used.
pub const DENSE_THRESHOLD: usize = 3000;

#[derive(Clone, Debug, Serialize)]
pub struct EigenPair {
    pub lambda_sq: f64,
    /// Values at the mesh nodes, normalized so that `∫ u² = 1`.
    pub u: Vec<f64>,
    /// `‖K u - λ² M u‖` in the inverse lumped-mass norm.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    pub dense_threshold: usize,
    /// Relative residual tolerance.
    pub tol: f64,
    /// Width of the Krylov start block.
    pub block: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { dense_threshold: DENSE_THRESHOLD, tol: 1e-8, block: 6, seed: 0x5eed }
    }
}

/// The `k` smallest eigenpairs on `mesh` under `bc`, ascending.
pub fn solve_eigs(mesh: &Mesh, bc: BoundaryCondition, k: usize) -> Result<Vec<EigenPair>> {
    solve_eigs_with(mesh, bc, k, &EigenOptions::default())
}

pub fn solve_eigs_with(mesh: &Mesh, bc: BoundaryCondition, k: usize, opts: &EigenOptions) -> Result<Vec<EigenPair>> {
    let sys = assemble(mesh, bc);
    let area = mesh.total_area();
    let pairs = generalized_eigs(&sys.stiffness, &sys.mass, k, 1.0 / area, opts)?;
    Ok(pairs.into_iter().map(|(l, x, r)| EigenPair { lambda_sq: l, u: sys.to_nodes(&x), residual: r }).collect())
}

/// Eigenpairs of an assembled system on its degrees of freedom.
pub fn solve_system(sys: &FemSystem, k: usize, scale: f64, opts: &EigenOptions) -> Result<Vec<(f64, Vec<f64>, f64)>> {
    generalized_eigs(&sys.stiffness, &sys.mass, k, scale, opts)
}

/// `scale` is a typical eigenvalue size (the inverse area); it sets the
/// shift and the absolute floor of the residual tolerance.
pub fn generalized_eigs(
    kmat: &CsrMatrix,
    mmat: &CsrMatrix,
    k: usize,
    scale: f64,
    opts: &EigenOptions,
) -> Result<Vec<(f64, Vec<f64>, f64)>> {
    let n = kmat.n;
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("cannot compute {k} eigenpairs of a system with {n} unknowns")));
    }
    let lumped = mmat.row_sums();
    let mut pairs = if n < opts.dense_threshold { dense_eigs(kmat, mmat, k)? } else { krylov_eigs(kmat, mmat, k, scale, &lumped, opts)? };
    for (lambda, x, res) in pairs.iter_mut() {
        let nrm = mmat.form(x, x).sqrt();
        x.iter_mut().for_each(|v| *v /= nrm);
        let imax = (0..n).fold(0, |b, i| if x[i].abs() > x[b].abs() + 1e-12 { i } else { b });
        if x[imax] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        *res = residual(kmat, mmat, &lumped, *lambda, x);
        let limit = opts.tol.max(1e-10) * 10.0 * lambda.abs().max(scale);
        if !(res.is_finite() && *res <= limit) {
            return Err(Error::SolverNoConvergence(format!("eigenpair λ² = {lambda} has residual {res:e}")));
        }
    }
    Ok(pairs)
}

fn residual(kmat: &CsrMatrix, mmat: &CsrMatrix, lumped: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let kx = kmat.apply(x);
    let mx = mmat.apply(x);
    (0..x.len()).map(|i| (kx[i] - lambda * mx[i]).powi(2) / lumped[i]).sum::<f64>().sqrt()
}

fn dense(a: &CsrMatrix) -> Mat<f64> {
    let mut d = Mat::<f64>::zeros(a.n, a.n);
    for i in 0..a.n {
        for (j, v) in a.row(i) {
            d[(i, j)] += v;
        }
    }
    d
}

fn dense_eigs(kmat: &CsrMatrix, mmat: &CsrMatrix, k: usize) -> Result<Vec<(f64, Vec<f64>, f64)>> {
    let n = kmat.n;
    let llt = dense(mmat)
        .llt(Side::Lower)
        .map_err(|e| Error::SolverNoConvergence(format!("mass matrix is not positive definite: {e:?}")))?;
    let l = llt.L();
    // C = L⁻¹ K L⁻ᵀ
    let mut x = dense(kmat);
    l.solve_lower_triangular_in_place(x.as_mut());
    let mut c = x.transpose().to_owned();
    l.solve_lower_triangular_in_place(c.as_mut());
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = s;
            c[(j, i)] = s;
        }
    }
    let evd = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::SolverNoConvergence(format!("dense eigensolver failed: {e:?}")))?;
    let s = evd.S();
    let mut y = evd.U().subcols(0, k).to_owned();
    l.transpose().solve_upper_triangular_in_place(y.as_mut());
    Ok((0..k).map(|j| (s[j], (0..n).map(|i| y[(i, j)]).collect(), 0.0)).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

/// Orthonormal basis in the `M` inner product with cached `M v` and `K v`.
struct Basis<'a> {
    kmat: &'a CsrMatrix,
    mmat: &'a CsrMatrix,
    v: Vec<Vec<f64>>,
    mv: Vec<Vec<f64>>,
    kv: Vec<Vec<f64>>,
}

impl Basis<'_> {
    /// Classical Gram-Schmidt applied twice. Returns false if `w` lies in the
    /// span of the basis.
    fn push(&mut self, mut w: Vec<f64>) -> bool {
        let before = self.mmat.form(&w, &w).sqrt();
        if !(before > 0.0) {
            return false;
        }
        for _ in 0..2 {
            let coef: Vec<f64> = self.mv.iter().map(|mv| dot(mv, &w)).collect();
            for (c, v) in coef.iter().zip(&self.v) {
                axpy(-c, v, &mut w);
            }
        }
        let mw = self.mmat.apply(&w);
        let nrm = dot(&w, &mw).sqrt();
        if !(nrm > 1e-10 * before) {
            return false;
        }
        w.iter_mut().for_each(|x| *x /= nrm);
        self.mv.push(mw.into_iter().map(|x| x / nrm).collect());
        self.kv.push(self.kmat.apply(&w));
        self.v.push(w);
        true
    }
}

fn krylov_eigs(
    kmat: &CsrMatrix,
    mmat: &CsrMatrix,
    k: usize,
    scale: f64,
    lumped: &[f64],
    opts: &EigenOptions,
) -> Result<Vec<(f64, Vec<f64>, f64)>> {
    let n = kmat.n;
    let sigma = -scale;
    let shifted = kmat.add_scaled(-sigma, mmat);
    let mut lower = Vec::with_capacity(shifted.nnz() / 2 + n);
    for i in 0..n {
        for (j, v) in shifted.row(i) {
            if j <= i {
                lower.push(Triplet { row: i, col: j, val: v });
            }
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &lower)
        .map_err(|e| Error::SolverNoConvergence(format!("sparse matrix construction failed: {e:?}")))?;
    let llt = a
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::SolverNoConvergence(format!("shifted matrix is not positive definite: {e:?}")))?;
    let apply_inverse = |x: &[f64]| -> Vec<f64> {
        let mut rhs = Mat::<f64>::zeros(n, 1);
        for (i, v) in mmat.apply(x).into_iter().enumerate() {
            rhs[(i, 0)] = v;
        }
        llt.solve_in_place(rhs.as_mut());
        (0..n).map(|i| rhs[(i, 0)]).collect()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut random = || (0..n).map(|_| rng.random::<f64>() - 0.5).collect::<Vec<f64>>();
    let mut basis = Basis { kmat, mmat, v: Vec::new(), mv: Vec::new(), kv: Vec::new() };
    let block = opts.block.clamp(1, n);
    let mut attempts = 0;
    while basis.v.len() < block && attempts < 4 * block {
        attempts += 1;
        let r = random();
        basis.push(apply_inverse(&r));
    }
    let mut next = 0;
    let mut target = n.min((2 * k + block).max(k + 40));
    loop {
        while basis.v.len() < target {
            let w = if next < basis.v.len() {
                next += 1;
                apply_inverse(&basis.v[next - 1])
            } else {
                apply_inverse(&random())
            };
            if !basis.push(w) {
                // Invariant subspace: restart the block with a fresh vector.
                let r = random();
                basis.push(apply_inverse(&r));
            }
        }
        let m = basis.v.len();
        let mut h = Mat::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let s = 0.5 * (dot(&basis.v[i], &basis.kv[j]) + dot(&basis.v[j], &basis.kv[i]));
                h[(i, j)] = s;
                h[(j, i)] = s;
            }
        }
        let evd = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::SolverNoConvergence(format!("projected eigensolver failed: {e:?}")))?;
        let (s, y) = (evd.S(), evd.U());
        let mut out = Vec::with_capacity(k);
        let mut converged = true;
        for j in 0..k.min(m) {
            let lambda = s[j];
            let mut x = vec![0.0; n];
            let mut r = vec![0.0; n];
            for i in 0..m {
                let c = y[(i, j)];
                axpy(c, &basis.v[i], &mut x);
                axpy(c, &basis.kv[i], &mut r);
                axpy(-c * lambda, &basis.mv[i], &mut r);
            }
            let res = (0..n).map(|i| r[i] * r[i] / lumped[i]).sum::<f64>().sqrt();
            if res > opts.tol * lambda.abs().max(scale) {
                converged = false;
                break;
            }
            out.push((lambda, x, res));
        }
        if converged && out.len() == k {
            return Ok(out);
        }
        if m >= n {
            return Err(Error::SolverNoConvergence(format!("Krylov space exhausted at dimension {m}")));
        }
        target = n.min(m + (m / 2).max(block));
    }
}
