//! Builtin 2-DoF planar manipulator with quadratic shaped potential.
//!
//! Models the closed loop of a two-link arm that has already been
//! stabilized by energy shaping plus damping injection: the potential is
//! `1/2 (q - q*)^T K_p (q - q*)` and the intrinsic dissipation is the
//! constant matrix `K_d`. The mass-inertia matrix is
//!
//! ```text
//! M(q) = [ a1 + a2 + 2 b cos(q2)   a2 + b cos(q2) ]
//!        [ a2 + b cos(q2)          a2             ]
//! ```
//!
//! with `a1 = m1 r1^2 + m2 l1^2 + I1`, `a2 = m2 r2^2 + I2`, `b = m2 l1 r2`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::MechanicalSystem;

/// Physical and controller parameters of the planar manipulator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManipulatorParams {
    /// Link masses [kg].
    pub m1: f64,
    pub m2: f64,
    /// Link moments of inertia [kg m^2].
    pub i1: f64,
    pub i2: f64,
    /// Center-of-mass distances [m].
    pub r1: f64,
    pub r2: f64,
    /// Link lengths [m].
    pub l1: f64,
    pub l2: f64,
    /// Proportional (stiffness) matrix of the shaped potential.
    pub kp: Vec<Vec<f64>>,
    /// Intrinsic damping matrix.
    pub kd: Vec<Vec<f64>>,
    /// Desired joint configuration [rad].
    pub q_star: Vec<f64>,
}

impl Default for ManipulatorParams {
    /// The laboratory values used by the bundled demo study:
    /// m = (0.5, 1), I = (0.01, 0.01), r = (0.2, 0.25),
    /// l = (0.343, 0.275), K_p = diag(20, 20), K_d = diag(1, 1),
    /// q* = (0.8, 0.8) rad.
    fn default() -> Self {
        Self {
            m1: 0.5,
            m2: 1.0,
            i1: 0.01,
            i2: 0.01,
            r1: 0.2,
            r2: 0.25,
            l1: 0.343,
            l2: 0.275,
            kp: vec![vec![20.0, 0.0], vec![0.0, 20.0]],
            kd: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            q_star: vec![0.8, 0.8],
        }
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], name: &'static str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParams(format!("`{name}` must be square")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// The manipulator as a [`MechanicalSystem`], with precomputed
/// composite inertia constants.
#[derive(Debug, Clone)]
pub struct PlanarManipulator {
    a1: f64,
    a2: f64,
    b: f64,
    kp: DMatrix<f64>,
    kd: DMatrix<f64>,
    q_star: DVector<f64>,
    params: ManipulatorParams,
}

impl PlanarManipulator {
    pub fn new(params: ManipulatorParams) -> Result<Self> {
        let scalars = [
            params.m1, params.m2, params.i1, params.i2, params.r1, params.r2, params.l1, params.l2,
        ];
        if scalars.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::InvalidParams(
                "all mass, inertia and geometry scalars must be positive".into(),
            ));
        }
        let kp = matrix_from_rows(&params.kp, "Kp")?;
        let kd = matrix_from_rows(&params.kd, "Kd")?;
        if kp.nrows() != 2 || kd.nrows() != 2 || params.q_star.len() != 2 {
            return Err(Error::InvalidParams(
                "the planar manipulator has exactly 2 DoF".into(),
            ));
        }
        linalg::check_symmetric(&kp, "Kp").map_err(|_| Error::InvalidParams("Kp must be symmetric".into()))?;
        linalg::check_symmetric(&kd, "Kd").map_err(|_| Error::InvalidParams("Kd must be symmetric".into()))?;
        if !linalg::is_positive_definite(&kp) {
            return Err(Error::InvalidParams("Kp must be positive definite".into()));
        }
        if !linalg::is_positive_definite(&kd) {
            return Err(Error::InvalidParams("Kd must be positive definite".into()));
        }
        Ok(Self {
            a1: params.m1 * params.r1 * params.r1 + params.m2 * params.l1 * params.l1 + params.i1,
            a2: params.m2 * params.r2 * params.r2 + params.i2,
            b: params.m2 * params.l1 * params.r2,
            kp,
            kd,
            q_star: DVector::from_vec(params.q_star.clone()),
            params,
        })
    }

    /// Composite inertia constants (a1, a2, b).
    pub fn inertia_constants(&self) -> (f64, f64, f64) {
        (self.a1, self.a2, self.b)
    }

    pub fn params(&self) -> &ManipulatorParams {
        &self.params
    }
}

impl MechanicalSystem for PlanarManipulator {
    fn dof(&self) -> usize {
        2
    }

    fn mass(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let c2 = q[1].cos();
        let off = self.a2 + self.b * c2;
        DMatrix::from_row_slice(
            2,
            2,
            &[self.a1 + self.a2 + 2.0 * self.b * c2, off, off, self.a2],
        )
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

    fn mass_jacobian(&self, q: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        let s2 = q[1].sin();
        let d = -self.b * s2;
        Some(vec![
            DMatrix::zeros(2, 2),
            DMatrix::from_row_slice(2, 2, &[2.0 * d, d, d, 0.0]),
        ])
    }

    fn q_star(&self) -> DVector<f64> {
        self.q_star.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inertia_constants_from_default_params() {
        let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
        let (a1, a2, b) = sys.inertia_constants();
        assert_relative_eq!(a1, 0.147649, epsilon = 1e-12);
        assert_relative_eq!(a2, 0.0725, epsilon = 1e-12);
        assert_relative_eq!(b, 0.08575, epsilon = 1e-12);
    }

    #[test]
    fn mass_at_right_angle_drops_cosine() {
        let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
        let (a1, a2, _) = sys.inertia_constants();
        let m = sys.mass(&DVector::from_vec(vec![0.3, std::f64::consts::FRAC_PI_2]));
        assert_relative_eq!(m[(0, 0)], a1 + a2, epsilon = 1e-12);
        assert_relative_eq!(m[(0, 1)], a2, epsilon = 1e-12);
        assert_relative_eq!(m[(1, 1)], a2, epsilon = 1e-12);
    }

    #[test]
    fn lower_right_entry_is_configuration_independent() {
        let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
        for q2 in [-3.0, -0.5, 0.0, 0.8, 2.4] {
            let m = sys.mass(&DVector::from_vec(vec![0.0, q2]));
            assert_relative_eq!(m[(1, 1)], 0.0725, epsilon = 1e-15);
        }
    }

    #[test]
    fn mass_positive_definite_over_joint_range() {
        let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
        let steps = 721;
        for k in 0..steps {
            let q2 = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (k as f64) / (steps - 1) as f64;
            let m = sys.mass(&DVector::from_vec(vec![0.0, q2]));
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            assert!(det >= 1e-3, "det {det} at q2 = {q2}");
            assert!(crate::linalg::is_positive_definite(&m));
        }
    }

    #[test]
    fn mass_jacobian_matches_finite_differences() {
        let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
        let q = DVector::from_vec(vec![0.4, 0.9]);
        let analytic = sys.mass_jacobian(&q).unwrap();
        for i in 0..2 {
            let h = 1e-6;
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            let fd = (sys.mass(&qp) - sys.mass(&qm)) / (2.0 * h);
            assert_relative_eq!(analytic[i], fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn rejects_nonpositive_scalars() {
        let mut p = ManipulatorParams::default();
        p.m1 = 0.0;
        assert!(PlanarManipulator::new(p).is_err());
    }

    #[test]
    fn demo_potential_at_origin() {
        // 1/2 (0.8, 0.8) diag(20,20) (0.8, 0.8) = 12.8
        let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
        let q = DVector::zeros(2);
        assert_relative_eq!(sys.potential(&q), 12.8, epsilon = 1e-12);
    }
}
