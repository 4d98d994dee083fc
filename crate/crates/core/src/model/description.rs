//! Declarative JSON system definitions.
//!
//! Two kinds of systems can be described in files (SI units throughout):
//!
//! ```json
//! { "type": "planar_manipulator",
//!   "m1": 0.5, "m2": 1.0, "i1": 0.01, "i2": 0.01,
//!   "r1": 0.2, "r2": 0.25, "l1": 0.343, "l2": 0.275,
//!   "kp": [[20, 0], [0, 20]], "kd": [[1, 0], [0, 1]],
//!   "q_star": [0.8, 0.8] }
//! ```
//!
//! ```json
//! { "type": "linear_mechanical",
//!   "m": [[1]], "kp": [[1]], "kd": [[0]], "q_star": [0] }
//! ```
//!
//! Matrices are row-major nested lists. Arbitrary user-coded dynamics
//! are out of scope for the file format; analytic models implement
//! [`MechanicalSystem`](crate::model::MechanicalSystem) directly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    LinearMechanical, ManipulatorParams, MechanicalSystem, PlanarManipulator,
};

/// Serializable description of a builtin system.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SystemDescription {
    PlanarManipulator(ManipulatorParams),
    LinearMechanical {
        m: Vec<Vec<f64>>,
        kp: Vec<Vec<f64>>,
        kd: Vec<Vec<f64>>,
        q_star: Vec<f64>,
    },
}

fn to_matrix(rows: &[Vec<f64>], name: &'static str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParams(format!("`{name}` must be square")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl SystemDescription {
    /// Parses a description from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidParams(format!("system definition: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("description serializes")
    }

    /// Validates the description and instantiates the system.
    pub fn build(&self) -> Result<SystemModel> {
        match self {
            SystemDescription::PlanarManipulator(params) => Ok(SystemModel::Manipulator(
                PlanarManipulator::new(params.clone())?,
            )),
            SystemDescription::LinearMechanical { m, kp, kd, q_star } => {
                let sys = LinearMechanical::new(
                    to_matrix(m, "m")?,
                    to_matrix(kp, "kp")?,
                    to_matrix(kd, "kd")?,
                    DVector::from_vec(q_star.clone()),
                )?;
                Ok(SystemModel::Linear(sys))
            }
        }
    }
}

/// A validated builtin system, ready for analysis and simulation.
#[derive(Debug, Clone)]
pub enum SystemModel {
    Manipulator(PlanarManipulator),
    Linear(LinearMechanical),
}

impl SystemModel {
    fn inner(&self) -> &dyn MechanicalSystem {
        match self {
            SystemModel::Manipulator(s) => s,
            SystemModel::Linear(s) => s,
        }
    }

    /// Round-trips the model back into its declarative form.
    pub fn description(&self) -> SystemDescription {
        match self {
            SystemModel::Manipulator(s) => {
                SystemDescription::PlanarManipulator(s.params().clone())
            }
            SystemModel::Linear(s) => SystemDescription::LinearMechanical {
                m: to_rows(s.constant_mass()),
                kp: to_rows(s.stiffness()),
                kd: to_rows(s.constant_damping()),
                q_star: s.q_star().iter().copied().collect(),
            },
        }
    }
}

impl MechanicalSystem for SystemModel {
    fn dof(&self) -> usize {
        self.inner().dof()
    }
    fn mass(&self, q: &DVector<f64>) -> DMatrix<f64> {
        self.inner().mass(q)
    }
    fn potential(&self, q: &DVector<f64>) -> f64 {
        self.inner().potential(q)
    }
    fn potential_grad(&self, q: &DVector<f64>) -> DVector<f64> {
        self.inner().potential_grad(q)
    }
    fn potential_hess(&self, q: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.inner().potential_hess(q)
    }
    fn damping(&self, q: &DVector<f64>, p: &DVector<f64>) -> DMatrix<f64> {
        self.inner().damping(q, p)
    }
    fn mass_jacobian(&self, q: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        self.inner().mass_jacobian(q)
    }
    fn q_star(&self) -> DVector<f64> {
        self.inner().q_star()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manipulator_roundtrip() {
        let desc = SystemDescription::PlanarManipulator(ManipulatorParams::default());
        let json = desc.to_json();
        let parsed = SystemDescription::from_json(&json).unwrap();
        let sys = parsed.build().unwrap();
        assert_eq!(sys.dof(), 2);
        let json2 = sys.description().to_json();
        assert_eq!(json, json2);
    }

    #[test]
    fn linear_from_json() {
        let text = r#"{ "type": "linear_mechanical",
                        "m": [[1.0]], "kp": [[1.0]], "kd": [[0.0]], "q_star": [0.0] }"#;
        let sys = SystemDescription::from_json(text).unwrap().build().unwrap();
        assert_eq!(sys.dof(), 1);
        let q = DVector::from_element(1, 2.0);
        assert!((sys.potential(&q) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_ragged_matrix() {
        let text = r#"{ "type": "linear_mechanical",
                        "m": [[1.0, 0.0]], "kp": [[1.0]], "kd": [[0.0]], "q_star": [0.0] }"#;
        let desc = SystemDescription::from_json(text).unwrap();
        assert!(desc.build().is_err());
    }
}
