//! Fully actuated port-Hamiltonian mechanical systems.
//!
//! A system is described by its mass-inertia map `M(q)`, potential
//! energy `V(q)`, damping map `D(q, p)` and equilibrium configuration
//! `q*`. The Hamiltonian is `H(q, p) = 1/2 p^T M(q)^{-1} p + V(q)`.
//! Damping injection feeds back `u = -K_t M(q)^{-1} p`, which leaves the
//! structure intact and augments the dissipation block by `K_t`.

mod description;
mod linear;
mod manipulator;

pub use description::{SystemDescription, SystemModel};
pub use linear::LinearMechanical;
pub use manipulator::{ManipulatorParams, PlanarManipulator};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// A fully actuated mechanical system in port-Hamiltonian form.
///
/// Values must be immutable after construction: every method is a pure
/// function of its arguments, so systems are safe to share across
/// threads (`Send + Sync` is part of the contract).
pub trait MechanicalSystem: Send + Sync {
    /// Degrees of freedom n.
    fn dof(&self) -> usize;

    /// Mass-inertia matrix M(q), symmetric positive definite.
    fn mass(&self, q: &DVector<f64>) -> DMatrix<f64>;

    /// Potential energy V(q).
    fn potential(&self, q: &DVector<f64>) -> f64;

    /// Gradient of the potential.
    fn potential_grad(&self, q: &DVector<f64>) -> DVector<f64>;

    /// Hessian of the potential, if available analytically.
    /// Callers fall back to central finite differences of the gradient.
    fn potential_hess(&self, _q: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    /// Damping map D(q, p), symmetric positive semidefinite.
    fn damping(&self, q: &DVector<f64>, p: &DVector<f64>) -> DMatrix<f64>;

    /// Partial derivatives of the mass matrix, `dM/dq_i` for each i,
    /// if available analytically. Callers fall back to central finite
    /// differences of `mass`.
    fn mass_jacobian(&self, _q: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        None
    }

    /// Equilibrium configuration q*, an isolated minimum of V.
    fn q_star(&self) -> DVector<f64>;
}

/// Symmetric damping-injection gain. Constructed positive semidefinite so
/// the un-tuned baseline K_t = 0 can flow through the same pipeline;
/// every gain produced by the tuning rules is strictly positive definite.
#[derive(Debug, Clone)]
pub struct GainMatrix(DMatrix<f64>);

impl GainMatrix {
    /// Validates symmetry and positive semidefiniteness.
    pub fn new(k: DMatrix<f64>) -> Result<Self> {
        linalg::check_symmetric(&k, "K_t")?;
        if !linalg::is_positive_semidefinite(&k) {
            return Err(Error::InvalidParams(
                "gain K_t must be positive semidefinite".into(),
            ));
        }
        Ok(Self(k))
    }

    /// kappa * I_n.
    pub fn scaled_identity(n: usize, kappa: f64) -> Result<Self> {
        if kappa < 0.0 || !kappa.is_finite() {
            return Err(Error::InvalidParams(format!(
                "gain scale must be finite and nonnegative, got {kappa}"
            )));
        }
        Ok(Self(DMatrix::identity(n, n) * kappa))
    }

    /// The zero gain (no injection) — the open-loop baseline.
    pub fn zero(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// True when the gain is strictly positive definite.
    pub fn is_positive_definite(&self) -> bool {
        linalg::is_positive_definite(&self.0)
    }
}

fn check_state_dims(sys: &dyn MechanicalSystem, q: &DVector<f64>, p: &DVector<f64>) -> Result<()> {
    let n = sys.dof();
    if q.len() != n || p.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "state must be ({n}, {n}), got ({}, {})",
            q.len(),
            p.len()
        )));
    }
    Ok(())
}

/// Velocity M(q)^{-1} p via Cholesky solve.
pub fn velocity(sys: &dyn MechanicalSystem, q: &DVector<f64>, p: &DVector<f64>) -> Result<DVector<f64>> {
    check_state_dims(sys, q, p)?;
    let chol = sys.mass(q).cholesky().ok_or(Error::SingularMass)?;
    Ok(chol.solve(p))
}

/// Total energy H(q, p) = 1/2 p^T M(q)^{-1} p + V(q).
pub fn hamiltonian(sys: &dyn MechanicalSystem, q: &DVector<f64>, p: &DVector<f64>) -> Result<f64> {
    let v = velocity(sys, q, p)?;
    Ok(0.5 * p.dot(&v) + sys.potential(q))
}

/// dM/dq_i as a list over i, analytic when the system provides it and
/// central finite differences otherwise (step 1e-6 * (1 + |q_i|)).
pub fn mass_jacobian(sys: &dyn MechanicalSystem, q: &DVector<f64>) -> Vec<DMatrix<f64>> {
    if let Some(j) = sys.mass_jacobian(q) {
        return j;
    }
    let n = sys.dof();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let h = 1e-6 * (1.0 + q[i].abs());
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp[i] += h;
        qm[i] -= h;
        out.push((sys.mass(&qp) - sys.mass(&qm)) / (2.0 * h));
    }
    out
}

/// Gradient of the Hamiltonian in q:
/// dH/dq_i = dV/dq_i - 1/2 v^T (dM/dq_i) v with v = M(q)^{-1} p.
/// The second term is the configuration dependence of the kinetic energy.
pub fn hamiltonian_grad_q(
    sys: &dyn MechanicalSystem,
    q: &DVector<f64>,
    p: &DVector<f64>,
) -> Result<DVector<f64>> {
    let v = velocity(sys, q, p)?;
    let mut g = sys.potential_grad(q);
    let dm = mass_jacobian(sys, q);
    for (i, dmi) in dm.iter().enumerate() {
        g[i] -= 0.5 * (v.transpose() * dmi * &v)[(0, 0)];
    }
    Ok(g)
}

/// Hessian of the potential at q: analytic when provided, otherwise
/// central finite differences of the gradient.
pub fn potential_hessian(sys: &dyn MechanicalSystem, q: &DVector<f64>) -> DMatrix<f64> {
    if let Some(h) = sys.potential_hess(q) {
        return h;
    }
    let n = sys.dof();
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let h = 1e-6 * (1.0 + q[i].abs());
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp[i] += h;
        qm[i] -= h;
        let col = (sys.potential_grad(&qp) - sys.potential_grad(&qm)) / (2.0 * h);
        hess.set_column(i, &col);
    }
    linalg::symmetrize(&hess)
}

/// Closed-loop vector field under damping injection u = -K_t y:
/// qdot = M^{-1} p, pdot = -dH/dq - (D(q,p) + K_t) M^{-1} p.
pub fn closed_loop_field(
    sys: &dyn MechanicalSystem,
    k: &GainMatrix,
    q: &DVector<f64>,
    p: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_state_dims(sys, q, p)?;
    if k.dim() != sys.dof() {
        return Err(Error::DimensionMismatch(format!(
            "gain is {}x{} but the system has {} DoF",
            k.dim(),
            k.dim(),
            sys.dof()
        )));
    }
    let v = velocity(sys, q, p)?;
    let dhdq = hamiltonian_grad_q(sys, q, p)?;
    let damping = sys.damping(q, p) + k.matrix();
    let pdot = -dhdq - damping * &v;
    Ok((v, pdot))
}

/// Instantaneous power balance Hdot = -v^T (D + K_t) v, always <= 0 and
/// strictly negative for p != 0 when D + K_t is positive definite.
pub fn power_balance(
    sys: &dyn MechanicalSystem,
    k: &GainMatrix,
    q: &DVector<f64>,
    p: &DVector<f64>,
) -> Result<f64> {
    check_state_dims(sys, q, p)?;
    let v = velocity(sys, q, p)?;
    let damping = sys.damping(q, p) + k.matrix();
    Ok(-(v.transpose() * damping * &v)[(0, 0)])
}
