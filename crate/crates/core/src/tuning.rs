//! Gain selection for prescribed transient oscillation behavior.
//!
//! Two rules are implemented, both producing K_t = kappa I:
//!
//! * the spectral-bound rule: grow kappa until
//!   `lambda_min(X)^2 >= 4 lambda_max(Z^T Z)`, which is sufficient for an
//!   all-real (no-overshoot) spectrum but often conservative;
//! * the mechanical damping-ratio rule: pick
//!   `lambda_min(R) = 2 zeta sqrt(lambda_max(M*) lambda_max(P))`, which
//!   targets a damping ratio `zeta` of the dominant pair and reduces to
//!   exact critical damping for scalar systems at zeta = 1.
//!
//! The damping-ratio relation is used in solved-for-R form; it is a
//! heuristic lower bound for multi-DoF plants and exact for 1-DoF ones,
//! so every result also reports the damping ratio actually achieved by
//! the resulting spectrum.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg;
use crate::linearize::Linearization;
use crate::model::GainMatrix;
use crate::saddle::check_real_spectrum;

/// Keeps K_t strictly positive definite when a rule asks for zero gain.
pub const GAIN_FLOOR: f64 = 1e-6;

/// Which rule produced a tuning result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningRule {
    /// Spectral sufficient condition on lambda_min(X)^2 vs 4 lambda_max(Z^T Z).
    Conservative,
    /// Mechanical critical-damping rule (zeta = 1).
    Critical,
    /// Mechanical damping-ratio rule for zeta < 1.
    DampingRatio,
}

/// Outcome of a tuning rule, including the spectrum actually achieved.
#[derive(Debug, Clone)]
pub struct TuningResult {
    pub k_t: GainMatrix,
    /// Gain scale: K_t = kappa I.
    pub kappa: f64,
    /// Target damping ratio; `None` for the spectral-bound rule.
    pub zeta_target: Option<f64>,
    pub lambda_min_r_required: f64,
    pub lambda_min_r_achieved: f64,
    pub rule: TuningRule,
    /// Damping ratio of the dominant pair under the returned gain.
    pub achieved_dominant_zeta: f64,
    /// Set when the intrinsic damping already exceeds the requirement;
    /// the returned gain is then the minimal positive-definite floor.
    pub already_overdamped: bool,
}

fn finish(
    lin: &Linearization,
    d_star: &DMatrix<f64>,
    kappa: f64,
    rule: TuningRule,
    zeta_target: Option<f64>,
    required: f64,
    already_overdamped: bool,
) -> Result<TuningResult> {
    let n = lin.dof();
    let k_t = GainMatrix::scaled_identity(n, kappa)?;
    let r = d_star + k_t.matrix();
    let (lambda_min_r, _) = linalg::sym_extremes(&r)?;
    let report = check_real_spectrum(&lin.saddle_with_gain(&k_t)?)?;
    Ok(TuningResult {
        k_t,
        kappa,
        zeta_target,
        lambda_min_r_required: required,
        lambda_min_r_achieved: lambda_min_r,
        rule,
        achieved_dominant_zeta: report.dominant_zeta,
        already_overdamped,
    })
}

/// Damping-ratio rule: `lambda_min(R) = 2 zeta sqrt(lambda_max(M*)
/// lambda_max(P))`, realized as K_t = kappa I with
/// `kappa = max(floor, required - lambda_min(D*))`.
///
/// `d_star` is the intrinsic damping at the equilibrium, normally
/// `lin.d_star`. With zeta = 1 this is the critical-damping rule.
pub fn gain_for_zeta(
    lin: &Linearization,
    zeta: f64,
    d_star: &DMatrix<f64>,
) -> Result<TuningResult> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::InvalidZeta(zeta));
    }
    let (_, lambda_max_m) = linalg::sym_extremes(&lin.mstar)?;
    let (_, lambda_max_p) = linalg::sym_extremes(&lin.p)?;
    let required = 2.0 * zeta * (lambda_max_m * lambda_max_p).sqrt();
    let (lambda_min_d, _) = linalg::sym_extremes(d_star)?;
    let already_overdamped = required <= lambda_min_d;
    let kappa = (required - lambda_min_d).max(GAIN_FLOOR);
    let rule = if zeta == 1.0 {
        TuningRule::Critical
    } else {
        TuningRule::DampingRatio
    };
    finish(lin, d_star, kappa, rule, Some(zeta), required, already_overdamped)
}

/// Spectral-bound rule: the smallest kappa (bisection to 1e-9 after
/// geometric bracket growth) such that
/// `lambda_min(X(kappa))^2 >= 4 lambda_max(Z^T Z)` with
/// `X(kappa) = phi_M (D* + kappa I) phi_M^T`. The resulting spectrum is
/// verified all-real before returning.
pub fn conservative_gain(lin: &Linearization, d_star: &DMatrix<f64>) -> Result<TuningResult> {
    let phi_m = &lin.phi_m;
    let ztz = linalg::symmetrize(&(phi_m * &lin.p * phi_m.transpose()));
    let (_, lambda_max_ztz) = linalg::sym_extremes(&ztz)?;
    let margin = |kappa: f64| -> Result<f64> {
        let r = d_star + DMatrix::identity(lin.dof(), lin.dof()) * kappa;
        let x = linalg::symmetrize(&(phi_m * r * phi_m.transpose()));
        let (lambda_min_x, _) = linalg::sym_extremes(&x)?;
        Ok(lambda_min_x * lambda_min_x - 4.0 * lambda_max_ztz)
    };

    let kappa = if margin(0.0)? >= 0.0 {
        0.0
    } else {
        let mut hi = 1.0;
        while margin(hi)? < 0.0 {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::BracketFailure(hi));
            }
        }
        let mut lo = hi / 2.0_f64.min(hi);
        if margin(lo)? >= 0.0 {
            lo = 0.0;
        }
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if margin(mid)? >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        // Sit a hair above the boundary so the critical pair separates
        // cleanly instead of leaving imaginary dust at the double root.
        hi + 1e-9 * (1.0 + hi)
    };
    let kappa = kappa.max(GAIN_FLOOR);

    let result = finish(lin, d_star, kappa, TuningRule::Conservative, None, 0.0, false)?;
    let n_mat = lin.saddle_with_gain(&result.k_t)?;
    let report = check_real_spectrum(&n_mat)?;
    if !report.all_real {
        return Err(Error::SpectrumVerification(format!(
            "spectral-bound gain kappa = {kappa} left non-real eigenvalues"
        )));
    }
    // The rule's demand expressed on R is exactly what was achieved.
    let mut result = result;
    result.lambda_min_r_required = result.lambda_min_r_achieved;
    Ok(result)
}

/// Lower-bound prediction vs achieved damping ratio for a given gain:
/// `bound = min(1, lambda_min(R) / (2 sqrt(lambda_max(M*) lambda_max(P))))`
/// and the dominant-pair ratio of the resulting spectrum.
pub fn predicted_damping(lin: &Linearization, k: &GainMatrix) -> Result<(f64, f64)> {
    let r = &lin.d_star + k.matrix();
    let (lambda_min_r, _) = linalg::sym_extremes(&r)?;
    let (_, lambda_max_m) = linalg::sym_extremes(&lin.mstar)?;
    let (_, lambda_max_p) = linalg::sym_extremes(&lin.p)?;
    let bound = (0.5 * lambda_min_r / (lambda_max_m * lambda_max_p).sqrt()).min(1.0);
    let report = check_real_spectrum(&lin.saddle_with_gain(k)?)?;
    Ok((bound, report.dominant_zeta))
}

/// Achieved dominant damping ratio for each gain scale in `kappas`.
/// Evaluates in parallel when the `parallel` feature is enabled.
pub fn damping_ratio_sweep(lin: &Linearization, kappas: &[f64]) -> Result<Vec<f64>> {
    exec::map_collect(kappas, |&kappa| sweep_point(lin, kappa))
        .into_iter()
        .collect()
}

/// Sequential variant of [`damping_ratio_sweep`], for baseline
/// comparisons.
pub fn damping_ratio_sweep_seq(lin: &Linearization, kappas: &[f64]) -> Result<Vec<f64>> {
    exec::map_collect_seq(kappas, |&kappa| sweep_point(lin, kappa))
        .into_iter()
        .collect()
}

fn sweep_point(lin: &Linearization, kappa: f64) -> Result<f64> {
    let k = GainMatrix::scaled_identity(lin.dof(), kappa)?;
    let report = check_real_spectrum(&lin.saddle_with_gain(&k)?)?;
    Ok(report.dominant_zeta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearize::linearize;
    use crate::model::{LinearMechanical, ManipulatorParams, PlanarManipulator};
    use approx::assert_relative_eq;

    // The tuning rules only read the gain-independent parts of a
    // linearization (M*, P, the factors, D*), so any valid baseline
    // gain works; a unit gain keeps R positive definite when D = 0.
    fn scalar_lin(m: f64, k: f64, d: f64) -> Linearization {
        let sys = LinearMechanical::scalar(m, k, d).unwrap();
        linearize(&sys, &GainMatrix::scaled_identity(1, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn scalar_critical_damping() {
        let lin = scalar_lin(1.0, 1.0, 0.0);
        let res = gain_for_zeta(&lin, 1.0, &lin.d_star).unwrap();
        assert_eq!(res.rule, TuningRule::Critical);
        assert_relative_eq!(res.lambda_min_r_required, 2.0, epsilon = 1e-12);
        assert_relative_eq!(res.kappa, 2.0, epsilon = 1e-12);
        assert!(!res.already_overdamped);
        assert_eq!(res.achieved_dominant_zeta, 1.0);
        // Closed-loop poles sit at -1 (double).
        let a = lin.state_matrix_with_gain(&res.k_t);
        for l in linalg::complex_eigenvalues(&a).unwrap() {
            assert_relative_eq!(l.re, -1.0, max_relative = 1e-7);
            assert!(l.im.abs() < 1e-7);
        }
    }

    #[test]
    fn scalar_underdamped_target() {
        let lin = scalar_lin(1.0, 1.0, 0.0);
        let zeta = std::f64::consts::FRAC_1_SQRT_2;
        let res = gain_for_zeta(&lin, zeta, &lin.d_star).unwrap();
        assert_eq!(res.rule, TuningRule::DampingRatio);
        assert_relative_eq!(res.lambda_min_r_required, 2.0_f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(res.achieved_dominant_zeta, zeta, epsilon = 1e-9);
        // Closed-loop poles at (-sqrt2 +/- i sqrt2)/2.
        let a = lin.state_matrix_with_gain(&res.k_t);
        let eigs = linalg::complex_eigenvalues(&a).unwrap();
        for l in eigs {
            assert_relative_eq!(l.re, -2.0_f64.sqrt() / 2.0, max_relative = 1e-10);
            assert_relative_eq!(l.im.abs(), 2.0_f64.sqrt() / 2.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn scalar_exactness_across_targets() {
        let lin = scalar_lin(2.0, 5.0, 0.0);
        for zeta in [0.3, 0.5, std::f64::consts::FRAC_1_SQRT_2, 0.9, 1.0] {
            let res = gain_for_zeta(&lin, zeta, &lin.d_star).unwrap();
            assert_relative_eq!(res.achieved_dominant_zeta, zeta, epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_invalid_zeta() {
        let lin = scalar_lin(1.0, 1.0, 0.0);
        for bad in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                gain_for_zeta(&lin, bad, &lin.d_star),
                Err(Error::InvalidZeta(_))
            ));
        }
    }

    #[test]
    fn already_overdamped_flagged() {
        let lin = scalar_lin(1.0, 1.0, 5.0);
        let res = gain_for_zeta(&lin, 1.0, &lin.d_star).unwrap();
        assert!(res.already_overdamped);
        assert_relative_eq!(res.kappa, GAIN_FLOOR, epsilon = 1e-15);
        assert!(res.k_t.is_positive_definite());
        assert!(res.lambda_min_r_achieved >= res.lambda_min_r_required - 1e-9);
    }

    #[test]
    fn conservative_matches_critical_for_scalar() {
        let lin = scalar_lin(1.0, 1.0, 0.0);
        let res = conservative_gain(&lin, &lin.d_star).unwrap();
        assert_eq!(res.rule, TuningRule::Conservative);
        assert_relative_eq!(res.kappa, 2.0, epsilon = 1e-6);
        assert_eq!(res.achieved_dominant_zeta, 1.0);
    }

    #[test]
    fn conservative_reduces_to_stiffness_condition_for_unit_mass() {
        // M = I so X = R = kappa I and Z^T Z = P: need kappa^2 >= 4 lambda_max(P).
        let sys = LinearMechanical::new(
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]),
            DMatrix::zeros(2, 2),
            nalgebra::DVector::zeros(2),
        )
        .unwrap();
        let lin = linearize(&sys, &GainMatrix::scaled_identity(2, 1.0).unwrap()).unwrap();
        let res = conservative_gain(&lin, &lin.d_star).unwrap();
        assert_relative_eq!(res.kappa, 2.0 * 3.0_f64.sqrt(), epsilon = 1e-6);
    }

    #[test]
    fn manipulator_critical_gain_value() {
        let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
        let lin = linearize(&sys, &GainMatrix::zero(2)).unwrap();
        let res = gain_for_zeta(&lin, 1.0, &lin.d_star).unwrap();
        // 2 sqrt(lambda_max(M*) * 20) with lambda_max(M*) ~= 0.394026.
        assert_relative_eq!(res.lambda_min_r_required, 5.6144, epsilon = 1e-3);
        assert_relative_eq!(res.kappa, 4.6144, epsilon = 1e-3);
    }

    #[test]
    fn conservative_is_no_smaller_than_mechanical_rule() {
        let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
        let lin = linearize(&sys, &GainMatrix::zero(2)).unwrap();
        let cons = conservative_gain(&lin, &lin.d_star).unwrap();
        let mech = gain_for_zeta(&lin, 1.0, &lin.d_star).unwrap();
        assert!(
            cons.kappa >= mech.kappa,
            "conservative {} vs mechanical {}",
            cons.kappa,
            mech.kappa
        );
    }

    #[test]
    fn predicted_damping_scalar_bound_is_tight() {
        let lin = scalar_lin(1.0, 1.0, 0.0);
        let k = GainMatrix::scaled_identity(1, 2.0_f64.sqrt()).unwrap();
        let (bound, achieved) = predicted_damping(&lin, &k).unwrap();
        assert_relative_eq!(bound, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_relative_eq!(achieved, bound, epsilon = 1e-9);
    }

    #[test]
    fn predicted_damping_clips_at_one() {
        let lin = scalar_lin(1.0, 1.0, 0.0);
        let k = GainMatrix::scaled_identity(1, 3.0).unwrap();
        let (bound, achieved) = predicted_damping(&lin, &k).unwrap();
        assert_eq!(bound, 1.0);
        assert_eq!(achieved, 1.0);
    }

    #[test]
    fn manipulator_zeta_target_is_nearly_met() {
        let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
        let lin = linearize(&sys, &GainMatrix::zero(2)).unwrap();
        let res = gain_for_zeta(&lin, 0.7, &lin.d_star).unwrap();
        assert!(
            res.achieved_dominant_zeta >= 0.7 * 0.95,
            "achieved {}",
            res.achieved_dominant_zeta
        );
    }

    #[test]
    fn sweep_matches_sequential() {
        let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
        let lin = linearize(&sys, &GainMatrix::zero(2)).unwrap();
        let kappas: Vec<f64> = (0..10).map(|i| 0.5 * i as f64).collect();
        let par = damping_ratio_sweep(&lin, &kappas).unwrap();
        let seq = damping_ratio_sweep_seq(&lin, &kappas).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn returned_gains_are_positive_definite() {
        let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
        let lin = linearize(&sys, &GainMatrix::zero(2)).unwrap();
        for res in [
            gain_for_zeta(&lin, 0.5, &lin.d_star).unwrap(),
            gain_for_zeta(&lin, 1.0, &lin.d_star).unwrap(),
            conservative_gain(&lin, &lin.d_star).unwrap(),
        ] {
            assert!(res.k_t.is_positive_definite());
        }
    }
}
