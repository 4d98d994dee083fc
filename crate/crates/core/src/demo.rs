//! The bundled two-link manipulator study.
//!
//! Runs the closed loop from rest at the origin toward q* = (0.8, 0.8)
//! rad under three gains: the un-tuned baseline K_t = 0 (oscillatory),
//! the critical-damping rule (no overshoot) and the damping-ratio rule
//! at zeta = 0.7 (small overshoot, faster settling). Used by the CLI
//! `demo-manipulator` subcommand and by the acceptance suite.

use nalgebra::DVector;

use crate::error::Result;
use crate::linearize::{linearize, Linearization};
use crate::model::{GainMatrix, ManipulatorParams, MechanicalSystem, PlanarManipulator};
use crate::sim::{self, EnergyReport, ResponseMetrics, Trajectory};
use crate::tuning::{self, TuningResult};

/// One gain case of the study.
#[derive(Debug, Clone)]
pub struct DemoCase {
    /// Short machine-friendly label: "kt0", "zeta1" or "zeta07".
    pub label: &'static str,
    /// Gain scale used (K_t = kappa I).
    pub kappa: f64,
    /// Tuning diagnostics; absent for the K_t = 0 baseline.
    pub tuning: Option<TuningResult>,
    pub trajectory: Trajectory,
    pub metrics: ResponseMetrics,
    pub energy: EnergyReport,
}

/// The full three-case study.
#[derive(Debug)]
pub struct DemoStudy {
    pub system: PlanarManipulator,
    /// Linearization at the baseline gain K_t = 0.
    pub baseline_lin: Linearization,
    pub cases: Vec<DemoCase>,
    pub horizon: f64,
    pub step: f64,
}

impl DemoStudy {
    pub fn case(&self, label: &str) -> Option<&DemoCase> {
        self.cases.iter().find(|c| c.label == label)
    }
}

fn run_case(
    sys: &PlanarManipulator,
    label: &'static str,
    k: GainMatrix,
    kappa: f64,
    tuning: Option<TuningResult>,
    horizon: f64,
    step: f64,
) -> Result<DemoCase> {
    let q0 = DVector::zeros(2);
    let p0 = DVector::zeros(2);
    let trajectory = sim::integrate(sys, &k, &q0, &p0, horizon, step)?;
    let metrics = sim::response_metrics(&trajectory, &sys.q_star())?;
    let energy = sim::energy_check(sys, &k, &trajectory)?;
    Ok(DemoCase {
        label,
        kappa,
        tuning,
        trajectory,
        metrics,
        energy,
    })
}

/// Runs the study with the default laboratory parameters.
pub fn run_demo_study(horizon: f64, step: f64) -> Result<DemoStudy> {
    run_demo_study_with(ManipulatorParams::default(), horizon, step)
}

/// Runs the study with custom manipulator parameters.
pub fn run_demo_study_with(
    params: ManipulatorParams,
    horizon: f64,
    step: f64,
) -> Result<DemoStudy> {
    let sys = PlanarManipulator::new(params)?;
    let baseline_lin = linearize(&sys, &GainMatrix::zero(2))?;

    let critical = tuning::gain_for_zeta(&baseline_lin, 1.0, &baseline_lin.d_star)?;
    let underdamped = tuning::gain_for_zeta(&baseline_lin, 0.7, &baseline_lin.d_star)?;

    let cases = vec![
        run_case(&sys, "kt0", GainMatrix::zero(2), 0.0, None, horizon, step)?,
        run_case(
            &sys,
            "zeta1",
            critical.k_t.clone(),
            critical.kappa,
            Some(critical),
            horizon,
            step,
        )?,
        run_case(
            &sys,
            "zeta07",
            underdamped.k_t.clone(),
            underdamped.kappa,
            Some(underdamped),
            horizon,
            step,
        )?,
    ];

    Ok(DemoStudy {
        system: sys,
        baseline_lin,
        cases,
        horizon,
        step,
    })
}
