//! Linearization of the damping-injected closed loop and its similarity
//! transform into saddle-point form.
//!
//! Around the equilibrium (q*, 0) the closed loop linearizes to
//!
//! ```text
//! d/dt [q~; p~] = A [q~; p~],   A = [  0      M*^-1      ]
//!                                   [ -P   -R M*^-1      ]
//! ```
//!
//! with `M* = M(q*)`, `P` the potential Hessian at q* (the kinetic term
//! contributes nothing at p = 0) and `R = D(q*, 0) + K_t`. Factoring
//! `M*^-1 = phi_M^T phi_M` and `P = phi_P^T phi_P` and setting
//! `W = [[0, phi_M], [phi_P, 0]]` turns `-W A W^-1` into the saddle form
//! `N` with `X = phi_M R phi_M^T`, `Z = phi_P phi_M^T`, `Y = 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{self, GainMatrix, MechanicalSystem};
use crate::saddle::{assemble_saddle, SaddlePointMatrix};

/// Linearized closed loop with its factorizations and saddle form.
#[derive(Debug, Clone)]
pub struct Linearization {
    /// M(q*).
    pub mstar: DMatrix<f64>,
    /// M(q*)^-1.
    pub mstar_inv: DMatrix<f64>,
    /// Potential Hessian at q*.
    pub p: DMatrix<f64>,
    /// Intrinsic damping at the equilibrium, D(q*, 0).
    pub d_star: DMatrix<f64>,
    /// Effective damping R = D(q*, 0) + K_t.
    pub r: DMatrix<f64>,
    /// State matrix of the linearized closed loop (2n x 2n).
    pub a: DMatrix<f64>,
    /// Upper-triangular factor with phi_M^T phi_M = M*^-1.
    pub phi_m: DMatrix<f64>,
    /// Upper-triangular factor with phi_P^T phi_P = P.
    pub phi_p: DMatrix<f64>,
    /// Coordinate change z = W x.
    pub w: DMatrix<f64>,
    /// The saddle form N = -W A W^-1.
    pub n: SaddlePointMatrix,
}

/// Upper-triangular Cholesky-type factors `(phi_M, phi_P)` with
/// `phi_M^T phi_M = mstar_inv` and `phi_P^T phi_P = p`. Positive
/// diagonals make the factors unique, hence deterministic across runs.
pub fn factorize(
    mstar_inv: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let phi_m = linalg::cholesky_upper(mstar_inv, "M*^-1")?;
    let phi_p = linalg::cholesky_upper(p, "P")?;
    Ok((phi_m, phi_p))
}

fn assemble_state_matrix(
    mstar_inv: &DMatrix<f64>,
    p: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = mstar_inv.nrows();
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, n), (n, n)).copy_from(mstar_inv);
    a.view_mut((n, 0), (n, n)).copy_from(&(-p));
    a.view_mut((n, n), (n, n)).copy_from(&(-(r * mstar_inv)));
    a
}

fn saddle_from_factors(
    phi_m: &DMatrix<f64>,
    phi_p: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<SaddlePointMatrix> {
    let n = phi_m.nrows();
    let x = linalg::symmetrize(&(phi_m * r * phi_m.transpose()));
    let z = phi_p * phi_m.transpose();
    assemble_saddle(x, z, DMatrix::zeros(n, n))
}

fn verify_similarity(
    n_mat: &SaddlePointMatrix,
    w: &DMatrix<f64>,
    a: &DMatrix<f64>,
) -> Result<()> {
    // W is never inverted: check the residual N W + W A instead.
    let residual = n_mat.full() * w + w * a;
    let scale = w.norm() * (a.norm() + n_mat.full().norm()).max(1.0);
    if residual.norm() > 1e-8 * scale {
        return Err(Error::TransformMismatch(format!(
            "||N W + W A|| = {:.3e} against scale {:.3e}",
            residual.norm(),
            scale
        )));
    }
    Ok(())
}

impl Linearization {
    /// Saddle form for the same plant under a different gain:
    /// `X = phi_M (D* + K) phi_M^T`, Z unchanged.
    pub fn saddle_with_gain(&self, k: &GainMatrix) -> Result<SaddlePointMatrix> {
        let r = &self.d_star + k.matrix();
        if !linalg::is_positive_definite(&r) {
            return Err(Error::IndefiniteR);
        }
        saddle_from_factors(&self.phi_m, &self.phi_p, &r)
    }

    /// State matrix for the same plant under a different gain.
    pub fn state_matrix_with_gain(&self, k: &GainMatrix) -> DMatrix<f64> {
        let r = &self.d_star + k.matrix();
        assemble_state_matrix(&self.mstar_inv, &self.p, &r)
    }

    pub fn dof(&self) -> usize {
        self.mstar.nrows()
    }
}

/// Linearizes the closed loop of `sys` under gain `k` at (q*, 0).
pub fn linearize(sys: &dyn MechanicalSystem, k: &GainMatrix) -> Result<Linearization> {
    let n = sys.dof();
    if k.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "gain is {}x{} but the system has {n} DoF",
            k.dim(),
            k.dim()
        )));
    }
    let q_star = sys.q_star();
    let p_zero = DVector::zeros(n);

    let mstar = linalg::symmetrize(&sys.mass(&q_star));
    if !linalg::is_positive_definite(&mstar) {
        return Err(Error::SingularMass);
    }
    let mstar_inv = linalg::spd_inverse(&mstar, "M*")?;

    let p = model::potential_hessian(sys, &q_star);
    if !linalg::is_positive_definite(&p) {
        return Err(Error::IndefiniteHessian);
    }

    let d_star = linalg::symmetrize(&sys.damping(&q_star, &p_zero));
    let r = &d_star + k.matrix();
    if !linalg::is_positive_definite(&r) {
        return Err(Error::IndefiniteR);
    }

    let a = assemble_state_matrix(&mstar_inv, &p, &r);
    let (phi_m, phi_p) = factorize(&mstar_inv, &p)?;

    let mut w = DMatrix::zeros(2 * n, 2 * n);
    w.view_mut((0, n), (n, n)).copy_from(&phi_m);
    w.view_mut((n, 0), (n, n)).copy_from(&phi_p);

    let n_mat = saddle_from_factors(&phi_m, &phi_p, &r)?;
    verify_similarity(&n_mat, &w, &a)?;

    Ok(Linearization {
        mstar,
        mstar_inv,
        p,
        d_star,
        r,
        a,
        phi_m,
        phi_p,
        w,
        n: n_mat,
    })
}

/// Returns the saddle form after re-verifying the similarity identity.
pub fn saddle_transform(lin: &Linearization) -> Result<SaddlePointMatrix> {
    verify_similarity(&lin.n, &lin.w, &lin.a)?;
    Ok(lin.n.clone())
}

/// Jacobian of the nonlinear closed-loop field at (q*, 0) by central
/// finite differences with step 1e-6, for consistency checks against
/// the assembled state matrix.
pub fn fd_state_jacobian(sys: &dyn MechanicalSystem, k: &GainMatrix) -> Result<DMatrix<f64>> {
    let n = sys.dof();
    let q_star = sys.q_star();
    let h = 1e-6;
    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..2 * n {
        let mut xp = DVector::zeros(2 * n);
        let mut xm = DVector::zeros(2 * n);
        xp[j] = h;
        xm[j] = -h;
        let eval = |x: &DVector<f64>| -> Result<DVector<f64>> {
            let q = &q_star + x.rows(0, n).into_owned();
            let p = x.rows(n, n).into_owned();
            let (qd, pd) = model::closed_loop_field(sys, k, &q, &p)?;
            let mut out = DVector::zeros(2 * n);
            out.rows_mut(0, n).copy_from(&qd);
            out.rows_mut(n, n).copy_from(&pd);
            Ok(out)
        };
        let col = (eval(&xp)? - eval(&xm)?) / (2.0 * h);
        jac.set_column(j, &col);
    }
    Ok(jac)
}
