//! Constant-mass, quadratic-potential mechanical system.
//!
//! The smallest member of the model family: `M` constant,
//! `V(q) = 1/2 (q - q*)^T K_p (q - q*)`, `D = K_d` constant. Its closed
//! loop is exactly linear, which makes it the reference model for
//! integrator cross-checks and scalar tuning identities.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::MechanicalSystem;

#[derive(Debug, Clone)]
pub struct LinearMechanical {
    mass: DMatrix<f64>,
    kp: DMatrix<f64>,
    kd: DMatrix<f64>,
    q_star: DVector<f64>,
}

impl LinearMechanical {
    pub fn new(
        mass: DMatrix<f64>,
        kp: DMatrix<f64>,
        kd: DMatrix<f64>,
        q_star: DVector<f64>,
    ) -> Result<Self> {
        let n = q_star.len();
        if mass.nrows() != n || kp.nrows() != n || kd.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "all matrices must be {n}x{n} to match q_star"
            )));
        }
        linalg::check_symmetric(&mass, "M")?;
        linalg::check_symmetric(&kp, "Kp")?;
        linalg::check_symmetric(&kd, "Kd")?;
        if !linalg::is_positive_definite(&mass) {
            return Err(Error::InvalidParams("M must be positive definite".into()));
        }
        if !linalg::is_positive_definite(&kp) {
            return Err(Error::InvalidParams("Kp must be positive definite".into()));
        }
        if !linalg::is_positive_semidefinite(&kd) {
            return Err(Error::InvalidParams(
                "Kd must be positive semidefinite".into(),
            ));
        }
        Ok(Self { mass, kp, kd, q_star })
    }

    /// 1-DoF oscillator with mass m, stiffness k, damping d and q* = 0.
    pub fn scalar(m: f64, k: f64, d: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_element(1, 1, m),
            DMatrix::from_element(1, 1, k),
            DMatrix::from_element(1, 1, d),
            DVector::zeros(1),
        )
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.kp
    }

    pub fn constant_damping(&self) -> &DMatrix<f64> {
        &self.kd
    }

    pub fn constant_mass(&self) -> &DMatrix<f64> {
        &self.mass
    }
}

impl MechanicalSystem for LinearMechanical {
    fn dof(&self) -> usize {
        self.q_star.len()
    }

    fn mass(&self, _q: &DVector<f64>) -> DMatrix<f64> {
        self.mass.clone()
    }

    fn potential(&self, q: &DVector<f64>) -> f64 {
        let e = q - &self.q_star;
        0.5 * (e.transpose() * &self.kp * &e)[(0, 0)]
    }

    fn potential_grad(&self, q: &DVector<f64>) -> DVector<f64> {
        &self.kp * (q - &self.q_star)
    }

    fn potential_hess(&self, _q: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.kp.clone())
    }

    fn damping(&self, _q: &DVector<f64>, _p: &DVector<f64>) -> DMatrix<f64> {
        self.kd.clone()
    }

    fn mass_jacobian(&self, _q: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::zeros(self.dof(), self.dof()); self.dof()])
    }

    fn q_star(&self) -> DVector<f64> {
        self.q_star.clone()
    }
}
