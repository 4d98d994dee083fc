//! Cross-module integration checks: gradients against finite
//! differences of the energy, tuned responses against simulation, and
//! the settling-time ordering of the demo gains.

mod common;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phtune_core::linearize::linearize;
use phtune_core::model::{
    self, GainMatrix, ManipulatorParams, MechanicalSystem, PlanarManipulator,
};
use phtune_core::sim::{integrate, response_metrics};
use phtune_core::tuning::gain_for_zeta;

#[test]
fn potential_gradient_matches_finite_differences() {
    let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let q = DVector::from_fn(2, |_, _| rng.random_range(-1.5..1.5));
        let grad = sys.potential_grad(&q);
        for i in 0..2 {
            let h = 1e-6 * (1.0 + q[i].abs());
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            let fd = (sys.potential(&qp) - sys.potential(&qm)) / (2.0 * h);
            let scale = 1.0 + grad[i].abs();
            assert!(
                (grad[i] - fd).abs() <= 1e-6 * scale,
                "grad[{i}] {} vs fd {fd}",
                grad[i]
            );
        }
    }
}

#[test]
fn hamiltonian_gradient_matches_finite_differences() {
    // Exercises the configuration dependence of M(q)^-1 in dH/dq.
    let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let q = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let p = DVector::from_fn(2, |_, _| rng.random_range(-0.5..0.5));
        let grad = model::hamiltonian_grad_q(&sys, &q, &p).unwrap();
        for i in 0..2 {
            let h = 1e-6 * (1.0 + q[i].abs());
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            let fd = (model::hamiltonian(&sys, &qp, &p).unwrap()
                - model::hamiltonian(&sys, &qm, &p).unwrap())
                / (2.0 * h);
            let scale = 1.0 + grad[i].abs();
            assert!(
                (grad[i] - fd).abs() <= 1e-5 * scale,
                "dH/dq[{i}] {} vs fd {fd}",
                grad[i]
            );
        }
    }
}

#[test]
fn tuned_scalar_response_shows_target_damping() {
    // Tune a 1-DoF plant for zeta = 0.5 and read the ratio back off the
    // simulated response via the log decrement.
    let sys = phtune_core::model::LinearMechanical::scalar(1.0, 4.0, 0.0).unwrap();
    let lin = linearize(&sys, &GainMatrix::scaled_identity(1, 1.0).unwrap()).unwrap();
    let tuned = gain_for_zeta(&lin, 0.5, &lin.d_star).unwrap();
    let traj = integrate(
        &sys,
        &tuned.k_t,
        &DVector::from_element(1, 1.0),
        &DVector::zeros(1),
        30.0,
        1e-3,
    )
    .unwrap();
    let metrics = response_metrics(&traj, &DVector::zeros(1)).unwrap();
    let zeta = metrics.coordinates[0].empirical_zeta.expect("peaks exist");
    assert!((zeta - 0.5).abs() <= 0.02, "empirical zeta {zeta}");
}

#[test]
fn settling_time_ordering_on_the_demo() {
    // zeta = 0.7 settles before critical damping, which settles before a
    // heavily over-damped gain (3x critical).
    let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
    let lin = linearize(&sys, &GainMatrix::zero(2)).unwrap();
    let crit = gain_for_zeta(&lin, 1.0, &lin.d_star).unwrap();
    let under = gain_for_zeta(&lin, 0.7, &lin.d_star).unwrap();
    let over = GainMatrix::scaled_identity(2, 3.0 * crit.kappa).unwrap();

    let settle = |k: &GainMatrix| -> f64 {
        let traj = integrate(&sys, k, &DVector::zeros(2), &DVector::zeros(2), 10.0, 1e-3).unwrap();
        response_metrics(&traj, &sys.q_star())
            .unwrap()
            .max_settling_time()
            .expect("settles within the horizon")
    };

    let t_under = settle(&under.k_t);
    let t_crit = settle(&crit.k_t);
    let t_over = settle(&over);
    assert!(
        t_under < t_crit && t_crit < t_over,
        "settling order broken: {t_under}, {t_crit}, {t_over}"
    );
}

#[test]
fn demo_baseline_matches_linear_prediction_initially() {
    // At t = 0 with p = 0 the field is (0, Kp q~); one step later the
    // trajectory must bend toward the target.
    let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
    let k = GainMatrix::zero(2);
    let (qd, pd) = model::closed_loop_field(&sys, &k, &DVector::zeros(2), &DVector::zeros(2)).unwrap();
    assert!(qd.norm() < 1e-14);
    // -Kp (0 - q*) = (16, 16)
    assert!((pd[0] - 16.0).abs() < 1e-12 && (pd[1] - 16.0).abs() < 1e-12);
}

#[test]
fn random_linear_systems_survive_the_full_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let sys = common::random_linear_system(&mut rng, 3);
        let n = sys.dof();
        let lin = linearize(&sys, &GainMatrix::scaled_identity(n, 1.0).unwrap()).unwrap();
        let tuned = gain_for_zeta(&lin, 0.8, &lin.d_star).unwrap();
        // Horizon sized from the slowest closed-loop pole.
        let a = lin.state_matrix_with_gain(&tuned.k_t);
        let slowest = phtune_core::linalg::complex_eigenvalues(&a)
            .unwrap()
            .iter()
            .map(|l| l.re.abs())
            .fold(f64::INFINITY, f64::min);
        let horizon = (10.0 / slowest).clamp(5.0, 120.0);
        let q0 = sys.q_star() + DVector::from_fn(n, |_, _| rng.random_range(-0.2..0.2));
        let traj = integrate(&sys, &tuned.k_t, &q0, &DVector::zeros(n), horizon, 1e-3).unwrap();
        let last = traj.states().last().unwrap();
        let gap = (last.rows(0, n) - sys.q_star()).norm();
        assert!(gap <= 1e-2, "did not converge, gap {gap}");
    }
}
