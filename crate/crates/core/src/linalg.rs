//! Dense linear-algebra kernels shared by the pipeline.
//!
//! Everything here targets small matrices (state dimension up to a few
//! tens), so dense factorizations are the right tool. The general
//! eigensolver combines a real Schur reduction for eigenvalues with
//! shifted inverse iteration for eigenvectors, followed by a Rayleigh
//! quotient refinement so defective (critically damped) eigenvalues
//! still meet the residual tolerance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// An eigenvalue is treated as real when |Im| falls below this relative
/// tolerance. Floating-point solvers leave imaginary dust at
/// multiplicity-2 points (critical damping), so exact comparison is wrong.
pub const REALNESS_TOL: f64 = 1e-9;

/// True when `lambda` is real up to the crate-wide realness tolerance.
pub fn is_effectively_real(lambda: C64) -> bool {
    lambda.im.abs() <= REALNESS_TOL * (1.0 + lambda.norm())
}

/// Largest absolute entry; zero for empty matrices.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()))
}

/// Checks symmetry up to a relative tolerance on the largest entry.
pub fn check_symmetric(m: &DMatrix<f64>, name: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "`{name}` must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let tol = 1e-9 * (1.0 + max_abs(m));
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return Err(Error::NotSymmetric(name));
            }
        }
    }
    Ok(())
}

/// Symmetric part (m + m^T)/2; scrubs round-off asymmetry after products.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    let eig = m
        .clone()
        .try_symmetric_eigen(1.0e-14, 0)
        .ok_or_else(|| Error::EigenSolverFailure("symmetric eigensolver stalled".into()))?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(DVector::from_vec(vals))
}

/// (lambda_min, lambda_max) of a symmetric matrix.
pub fn sym_extremes(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    let vals = sym_eigenvalues(m)?;
    Ok((vals[0], vals[vals.len() - 1]))
}

/// Spectral norm of a symmetric matrix (max |eigenvalue|).
pub fn sym_spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    let (lo, hi) = sym_extremes(m)?;
    Ok(lo.abs().max(hi.abs()))
}

/// True when the symmetric matrix is positive definite (Cholesky succeeds).
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.nrows() == m.ncols() && m.clone().cholesky().is_some()
}

/// True when the symmetric matrix is positive semidefinite up to a
/// relative eigenvalue tolerance.
pub fn is_positive_semidefinite(m: &DMatrix<f64>) -> bool {
    match sym_extremes(m) {
        Ok((lo, hi)) => lo >= -1e-10 * (1.0 + hi.abs()),
        Err(_) => false,
    }
}

/// Upper-triangular factor `phi` with positive diagonal such that
/// `phi^T phi = m`. Unique for symmetric positive definite input.
pub fn cholesky_upper(m: &DMatrix<f64>, name: &'static str) -> Result<DMatrix<f64>> {
    check_symmetric(m, name)?;
    let chol = m
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite(name))?;
    Ok(chol.l().transpose())
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>, name: &'static str) -> Result<DMatrix<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite(name))?;
    Ok(symmetrize(&chol.inverse()))
}

/// Row rank of a rectangular matrix from its singular values.
pub fn rank(m: &DMatrix<f64>) -> usize {
    let svals = m.clone().svd(false, false).singular_values;
    let smax = svals.iter().fold(0.0_f64, |a, &s| a.max(s));
    if smax == 0.0 {
        return 0;
    }
    let tol = smax * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON;
    svals.iter().filter(|&&s| s > tol).count()
}

/// Complex eigenvalues of a real square matrix (no eigenvectors).
pub fn complex_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<C64>> {
    let dim = a.nrows();
    if dim != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalue problem needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if dim == 0 {
        return Ok(Vec::new());
    }
    let schur = schur_with_retries(a)?;
    let mut vals: Vec<C64> = schur.iter().copied().collect();
    vals.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(vals)
}

fn schur_with_retries(a: &DMatrix<f64>) -> Result<DVector<C64>> {
    for eps in [1.0e-15, 1.0e-13, 1.0e-11] {
        if let Some(schur) = a.clone().try_schur(eps, 50_000) {
            return Ok(schur.complex_eigenvalues());
        }
    }
    Err(Error::EigenSolverFailure(
        "Schur reduction did not converge".into(),
    ))
}

/// Full eigenpairs of a real square matrix. Eigenvectors have unit norm
/// and canonical phase (largest component real and positive); complex
/// eigenvalues come in exactly conjugate pairs with conjugate vectors.
/// Pairs are sorted by ascending real part, then ascending |Im|.
pub fn dense_eigenpairs(a: &DMatrix<f64>) -> Result<Vec<(C64, DVector<C64>)>> {
    let dim = a.nrows();
    if dim != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalue problem needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if dim == 0 {
        return Ok(Vec::new());
    }
    let scale = a.norm().max(f64::MIN_POSITIVE);
    if dim == 1 {
        return Ok(vec![(
            C64::new(a[(0, 0)], 0.0),
            DVector::from_element(1, C64::new(1.0, 0.0)),
        )]);
    }

    let lambdas = schur_with_retries(a)?;
    let ac = a.map(|x| C64::new(x, 0.0));

    // Group Schur output into real singletons and exact conjugate pairs.
    let mut used = vec![false; dim];
    let mut groups: Vec<(C64, Option<usize>)> = Vec::new();
    for i in 0..dim {
        if used[i] {
            continue;
        }
        used[i] = true;
        let li = lambdas[i];
        if li.im == 0.0 {
            groups.push((li, None));
            continue;
        }
        // 2x2 Schur blocks emit exact conjugates; search defensively.
        let mut partner = None;
        let mut best = f64::INFINITY;
        for (j, &lj) in lambdas.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (lj - li.conj()).norm();
            if d < best {
                best = d;
                partner = Some(j);
            }
        }
        match partner {
            Some(j) if best <= 1e-8 * (1.0 + li.norm()) => {
                used[j] = true;
                let rep = if li.im > 0.0 { li } else { li.conj() };
                groups.push((rep, Some(j)));
            }
            _ => {
                // Unpaired complex eigenvalue: keep it as-is.
                groups.push((li, None));
            }
        }
    }

    let mut pairs: Vec<(C64, DVector<C64>)> = Vec::with_capacity(dim);
    for (k, &(lambda0, partner)) in groups.iter().enumerate() {
        let (lambda, v) = refined_eigenpair(&ac, lambda0, k, scale)?;
        // For Schur-real eigenvalues keep the eigenvalue exactly real.
        let lambda = if lambda0.im == 0.0 {
            C64::new(lambda.re, 0.0)
        } else {
            lambda
        };
        let v = canonical_phase(v);
        if partner.is_some() {
            pairs.push((lambda, v.clone()));
            pairs.push((lambda.conj(), v.map(|c| c.conj())));
        } else {
            pairs.push((lambda, v));
        }
    }

    // Residual gate per the eigen_pairs contract.
    for (lambda, v) in &pairs {
        let r = eigen_residual(&ac, *lambda, v);
        if r > 1e-8 * scale {
            return Err(Error::EigenSolverFailure(format!(
                "eigenpair residual {r:.3e} exceeds tolerance at lambda = {lambda}"
            )));
        }
    }

    pairs.sort_by(|(l1, _), (l2, _)| {
        l1.re
            .total_cmp(&l2.re)
            .then(l1.im.abs().total_cmp(&l2.im.abs()))
            .then(l2.im.total_cmp(&l1.im))
    });
    Ok(pairs)
}

/// ||A v - lambda v|| for a unit-norm v.
pub fn eigen_residual(ac: &DMatrix<C64>, lambda: C64, v: &DVector<C64>) -> f64 {
    (ac * v - v.map(|c| c * lambda)).norm()
}

fn refined_eigenpair(
    ac: &DMatrix<C64>,
    lambda0: C64,
    start_idx: usize,
    scale: f64,
) -> Result<(C64, DVector<C64>)> {
    let target = 1e-12 * scale;
    let mut lambda = lambda0;
    let mut best: Option<(f64, C64, DVector<C64>)> = None;
    for round in 0..4 {
        let v = inverse_iterate(ac, lambda, start_idx + round, scale)?;
        let rho = rayleigh_quotient(ac, &v);
        let res = eigen_residual(ac, rho, &v);
        if best.as_ref().map(|(r, _, _)| res < *r).unwrap_or(true) {
            best = Some((res, rho, v));
        }
        if res <= target {
            break;
        }
        lambda = rho;
    }
    let (res, rho, v) = best.expect("at least one inverse-iteration round runs");
    if res > 1e-8 * scale {
        return Err(Error::EigenSolverFailure(format!(
            "inverse iteration stalled at residual {res:.3e} for lambda = {lambda0}"
        )));
    }
    // Keep reported eigenvalues anchored to the Schur values unless the
    // refinement moved them meaningfully (defective clusters).
    let lambda_out = if (rho - lambda0).norm() <= 1e-12 * (1.0 + lambda0.norm()) {
        lambda0
    } else {
        rho
    };
    Ok((lambda_out, v))
}

/// x^* A x for unit-norm x.
fn rayleigh_quotient(ac: &DMatrix<C64>, v: &DVector<C64>) -> C64 {
    let av = ac * v;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..v.len() {
        acc += v[i].conj() * av[i];
    }
    acc
}

fn inverse_iterate(
    ac: &DMatrix<C64>,
    lambda: C64,
    start_idx: usize,
    scale: f64,
) -> Result<DVector<C64>> {
    let dim = ac.nrows();
    let mut x = start_vector(dim, start_idx);
    let mut shift = lambda;
    let mut bump = 1e-13 * (scale + lambda.norm());
    for _attempt in 0..6 {
        let mut shifted = ac.clone();
        for i in 0..dim {
            shifted[(i, i)] -= shift;
        }
        let lu = shifted.lu();
        let mut ok = true;
        for _ in 0..3 {
            match lu.solve(&x) {
                Some(y) if y.iter().all(|c| c.re.is_finite() && c.im.is_finite()) => {
                    let n = y.norm();
                    if n == 0.0 || !n.is_finite() {
                        ok = false;
                        break;
                    }
                    x = y / C64::new(n, 0.0);
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(x);
        }
        // Exactly singular shift (defective eigenvalue): nudge off-axis.
        shift = lambda + C64::new(bump, bump);
        bump *= 100.0;
        x = start_vector(dim, start_idx + 1);
    }
    Err(Error::EigenSolverFailure(format!(
        "singular shifted solve persisted near lambda = {lambda}"
    )))
}

/// Deterministic pseudo-random start vector; distinct per index so that
/// repeated eigenvalues explore different directions.
fn start_vector(dim: usize, idx: usize) -> DVector<C64> {
    let mut v = DVector::from_fn(dim, |j, _| {
        let t = 0.7 * (j as f64 + 1.0) + 1.37 * (idx as f64 + 1.0);
        C64::new(t.cos(), (0.43 * t + 0.11).sin())
    });
    let n = v.norm();
    v /= C64::new(n, 0.0);
    v
}

/// Canonical phase: rotate so the largest-magnitude component is real
/// and positive. Keeps CLI output byte-reproducible.
fn canonical_phase(v: DVector<C64>) -> DVector<C64> {
    let mut imax = 0;
    let mut vmax = 0.0;
    for (i, c) in v.iter().enumerate() {
        let m = c.norm();
        if m > vmax {
            vmax = m;
            imax = i;
        }
    }
    if vmax == 0.0 {
        return v;
    }
    let phase = v[imax].conj() / C64::new(vmax, 0.0);
    v.map(|c| c * phase)
}

/// Solves P A + A^T P = -Q for symmetric P via the Kronecker-vectorized
/// linear system. Intended for small state dimensions.
pub fn lyapunov_solve(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    if a.ncols() != d || q.nrows() != d || q.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "Lyapunov solve needs square A and Q of equal size, got A {}x{}, Q {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let at = a.transpose();
    let eye = DMatrix::<f64>::identity(d, d);
    // vec(PA) = (A^T (x) I) vec(P), vec(A^T P) = (I (x) A^T) vec(P).
    let k = at.kronecker(&eye) + eye.kronecker(&at);
    let rhs = DVector::from_column_slice(q.as_slice()).map(|x| -x);
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SolveFailure("Kronecker system is singular".into()))?;
    let p = DMatrix::from_column_slice(d, d, sol.as_slice());
    Ok(symmetrize(&p))
}

/// Norm helpers for the complex block vectors used by the spectral module.
pub fn cnorm(v: &DVector<C64>) -> f64 {
    v.norm()
}

/// Hermitian quadratic form v^* M v / v^* v for real symmetric M and
/// complex v, computed in real arithmetic (the form is exactly real).
pub fn hermitian_quotient(m: &DMatrix<f64>, v: &DVector<C64>) -> f64 {
    let vr = v.map(|c| c.re);
    let vi = v.map(|c| c.im);
    let num = (vr.transpose() * m * &vr)[(0, 0)] + (vi.transpose() * m * &vi)[(0, 0)];
    let den = vr.norm_squared() + vi.norm_squared();
    num / den
}
