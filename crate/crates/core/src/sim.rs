//! Nonlinear closed-loop time integration and transient-response metrics.
//!
//! Fixed-step classical Runge-Kutta (order 4) keeps runs deterministic
//! and makes the convergence order directly testable, which matters more
//! here than adaptive stepping: trajectories feed golden tests and
//! byte-reproducible CLI artifacts.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{self, GainMatrix, MechanicalSystem};

/// A simulated closed-loop trajectory on a uniform time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    /// Stacked states [q; p], one per grid point.
    states: Vec<DVector<f64>>,
    /// Hamiltonian samples along the trajectory.
    energies: Vec<f64>,
    gain: GainMatrix,
    step: f64,
    dof: usize,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn gain(&self) -> &GainMatrix {
        &self.gain
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Integrator order (classical Runge-Kutta).
    pub fn order(&self) -> u8 {
        4
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn q_at(&self, k: usize) -> DVector<f64> {
        self.states[k].rows(0, self.dof).into_owned()
    }

    pub fn p_at(&self, k: usize) -> DVector<f64> {
        self.states[k].rows(self.dof, self.dof).into_owned()
    }

    /// CSV export with header `time,q1..qn,p1..pn,H` and 12 significant
    /// digits per value, so identical runs produce identical bytes.
    pub fn to_csv(&self) -> String {
        let n = self.dof;
        let mut out = String::new();
        out.push_str("time");
        for i in 1..=n {
            out.push_str(&format!(",q{i}"));
        }
        for i in 1..=n {
            out.push_str(&format!(",p{i}"));
        }
        out.push_str(",H\n");
        for k in 0..self.len() {
            out.push_str(&fmt_sig12(self.times[k]));
            for j in 0..2 * n {
                out.push(',');
                out.push_str(&fmt_sig12(self.states[k][j]));
            }
            out.push(',');
            out.push_str(&fmt_sig12(self.energies[k]));
            out.push('\n');
        }
        out
    }
}

/// Scientific notation with 12 significant digits.
pub fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Integrates the damping-injected closed loop from `(q0, p0)` over
/// `horizon` seconds with fixed step `step`, recording the Hamiltonian
/// at every grid point.
pub fn integrate(
    sys: &dyn MechanicalSystem,
    k: &GainMatrix,
    q0: &DVector<f64>,
    p0: &DVector<f64>,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParams(format!("step must be positive, got {step}")));
    }
    if !(horizon >= step) || !horizon.is_finite() {
        return Err(Error::InvalidParams(format!(
            "horizon must be at least one step, got {horizon}"
        )));
    }
    let n = sys.dof();
    if q0.len() != n || p0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state must be ({n}, {n}), got ({}, {})",
            q0.len(),
            p0.len()
        )));
    }

    let field = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let q = x.rows(0, n).into_owned();
        let p = x.rows(n, n).into_owned();
        let (qd, pd) = model::closed_loop_field(sys, k, &q, &p)?;
        let mut dx = DVector::zeros(2 * n);
        dx.rows_mut(0, n).copy_from(&qd );
        dx.rows_mut(n, n).copy_from(&pd);
        Ok(dx)
    };

    let steps = (horizon / step).round().max(1.0) as usize;
    let mut x = DVector::zeros(2 * n);
    x.rows_mut(0, n).copy_from(q0);
    x.rows_mut(n, n).copy_from(p0);

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut energies = Vec::with_capacity(steps + 1);
    let record = |x: &DVector<f64>| -> Result<f64> {
        let q = x.rows(0, n).into_owned();
        let p = x.rows(n, n).into_owned();
        model::hamiltonian(sys, &q, &p)
    };
    times.push(0.0);
    states.push(x.clone());
    energies.push(record(&x)?);

    for kstep in 0..steps {
        let k1 = field(&x)?;
        let k2 = field(&(&x + &k1 * (0.5 * step)))?;
        let k3 = field(&(&x + &k2 * (0.5 * step)))?;
        let k4 = field(&(&x + &k3 * step))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (step / 6.0);
        let t = (kstep + 1) as f64 * step;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step: kstep + 1, time: t });
        }
        times.push(t);
        states.push(x.clone());
        energies.push(record(&x)?);
    }

    Ok(Trajectory {
        times,
        states,
        energies,
        gain: k.clone(),
        step,
        dof: n,
    })
}

/// Per-coordinate transient metrics of a step-like response.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CoordinateMetrics {
    /// Peak excursion past the equilibrium as a percentage of the step
    /// magnitude. Absent when the coordinate starts at its target
    /// (degenerate step).
    pub overshoot_pct: Option<f64>,
    /// First time after which the coordinate stays within 2% of its
    /// step magnitude. Absent when settling is not observed or the step
    /// is degenerate.
    pub settling_time: Option<f64>,
    /// Damping ratio inferred from the logarithmic decrement over
    /// successive same-side peaks; absent with fewer than two peaks.
    pub empirical_zeta: Option<f64>,
    /// |q_i(T) - q*_i| at the end of the horizon.
    pub steady_state_error: f64,
    /// Number of same-side overshoot peaks detected.
    pub peak_count: usize,
}

/// Transient metrics for every coordinate of a trajectory.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ResponseMetrics {
    pub coordinates: Vec<CoordinateMetrics>,
}

impl ResponseMetrics {
    pub fn max_overshoot_pct(&self) -> f64 {
        self.coordinates
            .iter()
            .filter_map(|c| c.overshoot_pct)
            .fold(0.0, f64::max)
    }

    /// Worst-case settling time across coordinates; `None` when any
    /// coordinate fails to settle.
    pub fn max_settling_time(&self) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for c in &self.coordinates {
            worst = worst.max(c.settling_time?);
        }
        Some(worst)
    }

    pub fn max_peak_count(&self) -> usize {
        self.coordinates.iter().map(|c| c.peak_count).fold(0, usize::max)
    }
}

const SETTLING_BAND: f64 = 0.02;

/// Computes overshoot, settling time, empirical damping ratio and
/// steady-state error per coordinate, measuring against `q_star`.
pub fn response_metrics(traj: &Trajectory, q_star: &DVector<f64>) -> Result<ResponseMetrics> {
    let n = traj.dof();
    if q_star.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "q_star must have length {n}, got {}",
            q_star.len()
        )));
    }
    let len = traj.len();
    let mut coordinates = Vec::with_capacity(n);
    for i in 0..n {
        let series: Vec<f64> = (0..len).map(|k| traj.states[k][i]).collect();
        let step_size = q_star[i] - series[0];
        let degenerate = step_size.abs() <= 1e-12 * (1.0 + q_star[i].abs());
        let sign = if step_size >= 0.0 { 1.0 } else { -1.0 };
        // Signed error oriented along the approach direction: negative
        // before the target, positive past it (overshoot side).
        let s: Vec<f64> = series.iter().map(|&q| sign * (q - q_star[i])).collect();

        let overshoot_pct = if degenerate {
            None
        } else {
            let peak = s.iter().fold(0.0_f64, |a, &b| a.max(b));
            Some(peak / step_size.abs() * 100.0)
        };

        let settling_time = if degenerate {
            None
        } else {
            let band = SETTLING_BAND * step_size.abs();
            let last_outside = (0..len).rev().find(|&k| s[k].abs() > band);
            match last_outside {
                None => Some(traj.times[0]),
                Some(k) if k + 1 < len => Some(traj.times[k + 1]),
                Some(_) => None,
            }
        };

        let peaks = overshoot_peaks(&traj.times, &s);
        let empirical_zeta = zeta_from_peaks(&peaks);

        coordinates.push(CoordinateMetrics {
            overshoot_pct,
            settling_time,
            empirical_zeta,
            steady_state_error: (series[len - 1] - q_star[i]).abs(),
            peak_count: peaks.len(),
        });
    }
    Ok(ResponseMetrics { coordinates })
}

/// Local maxima of the oriented error above equilibrium, refined by a
/// quadratic fit through the three samples around each grid peak.
fn overshoot_peaks(times: &[f64], s: &[f64]) -> Vec<(f64, f64)> {
    let mut peaks = Vec::new();
    for k in 1..s.len().saturating_sub(1) {
        if s[k] > 0.0 && s[k] >= s[k - 1] && s[k] >= s[k + 1] && (s[k] > s[k - 1] || s[k] > s[k + 1]) {
            let denom = s[k + 1] - 2.0 * s[k] + s[k - 1];
            let (t, v) = if denom < 0.0 {
                let delta = 0.5 * (s[k - 1] - s[k + 1]) / denom;
                let dt = times[k + 1] - times[k];
                (
                    times[k] + delta * dt,
                    s[k] - 0.25 * (s[k - 1] - s[k + 1]) * delta,
                )
            } else {
                (times[k], s[k])
            };
            peaks.push((t, v));
        }
    }
    // Drop sampling-noise peaks far below the leading one.
    if let Some(&(_, first)) = peaks.first() {
        peaks.retain(|&(_, v)| v >= 1e-6 * first);
    }
    peaks
}

fn zeta_from_peaks(peaks: &[(f64, f64)]) -> Option<f64> {
    if peaks.len() < 2 {
        return None;
    }
    let mut decrements = Vec::with_capacity(peaks.len() - 1);
    for pair in peaks.windows(2) {
        let (p0, p1) = (pair[0].1, pair[1].1);
        if p0 > 0.0 && p1 > 0.0 {
            decrements.push((p0 / p1).ln());
        }
    }
    if decrements.is_empty() {
        return None;
    }
    let delta = decrements.iter().sum::<f64>() / decrements.len() as f64;
    if delta <= 0.0 {
        return None;
    }
    let zeta = delta / (4.0 * std::f64::consts::PI.powi(2) + delta * delta).sqrt();
    Some(zeta.min(1.0))
}

/// Result of the energy-monotonicity audit of a trajectory.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EnergyReport {
    /// Largest single-step increase of H (0 when H never rises).
    pub max_rise: f64,
    /// Largest relative mismatch between the finite-difference dH/dt and
    /// the instantaneous power balance over the audited samples.
    pub max_rel_mismatch: f64,
    /// Number of samples that passed the audit gates.
    pub samples_audited: usize,
    /// True when the mismatch stays within 1e-3.
    pub dissipation_consistent: bool,
}

/// Audits a trajectory against the power balance: H must not rise, and
/// the finite-difference dH/dt must match `power_balance` pointwise.
///
/// dH/dt is estimated with a sixth-order seven-point stencil. A sample
/// enters the audit only when (a) dissipation is active there (|power|
/// at least 1e-4 of its trajectory maximum — the ratio is meaningless at
/// rest) and (b) the five- and seven-point estimates agree to 2.5e-4
/// relative, which certifies that the differences are converged at this
/// step size. Stiff startup layers fail (b) for any stencil, while a
/// genuine power-balance violation converges to a mismatch and is
/// reported.
pub fn energy_check(
    sys: &dyn MechanicalSystem,
    k: &GainMatrix,
    traj: &Trajectory,
) -> Result<EnergyReport> {
    let len = traj.len();
    let h = traj.step();
    let mut max_rise = 0.0_f64;
    for w in traj.energies.windows(2) {
        max_rise = max_rise.max(w[1] - w[0]);
    }
    let max_rise = max_rise.max(0.0);

    let mut power = Vec::with_capacity(len);
    for kk in 0..len {
        let q = traj.q_at(kk);
        let p = traj.p_at(kk);
        power.push(model::power_balance(sys, k, &q, &p)?);
    }
    let pmax = power.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let active_floor = 1e-4 * pmax;

    let mut max_rel_mismatch = 0.0_f64;
    let mut samples_audited = 0usize;
    if len >= 7 && pmax > 0.0 {
        let e = traj.energies();
        for kk in 3..len - 3 {
            let pb = power[kk];
            if pb.abs() < active_floor {
                continue;
            }
            let fd5 = (-e[kk + 2] + 8.0 * e[kk + 1] - 8.0 * e[kk - 1] + e[kk - 2]) / (12.0 * h);
            let fd7 = (-e[kk - 3] + 9.0 * e[kk - 2] - 45.0 * e[kk - 1] + 45.0 * e[kk + 1]
                - 9.0 * e[kk + 2]
                + e[kk + 3])
                / (60.0 * h);
            if (fd5 - fd7).abs() > 2.5e-4 * pb.abs() {
                continue;
            }
            samples_audited += 1;
            let rel = (fd7 - pb).abs() / pb.abs();
            max_rel_mismatch = max_rel_mismatch.max(rel);
        }
    }
    Ok(EnergyReport {
        max_rise,
        max_rel_mismatch,
        samples_audited,
        dissipation_consistent: max_rel_mismatch <= 1e-3,
    })
}
