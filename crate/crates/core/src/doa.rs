//! Domain-of-attraction estimation for the nonlinear closed loop.
//!
//! The chain: solve the Lyapunov equation `P A + A^T P = -Q` for the
//! linearized state matrix A, bound the nonlinear remainder
//! `f_r(x) = f(x) - A x` by `||f_r(x)|| < gamma ||x||` on a sampled ball
//! of radius rho, and report the sublevel set
//! `{x : x^T P x <= c}` with `c < lambda_min(P) rho^2` as the estimate.
//!
//! The radius certificate is obtained by sampling a deterministic
//! direction set on log-spaced shells; it is an estimate certified by
//! sampling, not a proof. Shells are evaluated in parallel when the
//! `parallel` feature is enabled; results do not depend on evaluation
//! order.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg;
use crate::linearize::Linearization;
use crate::model::{self, GainMatrix, MechanicalSystem};

/// Sampling controls for the radius search.
#[derive(Debug, Clone)]
pub struct SamplingConfig {
    /// Number of unit directions in the 2n-dimensional state space.
    pub n_dirs: usize,
    /// Number of log-spaced radii in (0, rho_cap].
    pub n_radii: usize,
    /// Upper bound of the radius grid.
    pub rho_cap: f64,
    /// Seed for the deterministic direction set.
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            n_dirs: 256,
            n_radii: 32,
            rho_cap: 2.0,
            seed: 42,
        }
    }
}

/// The Lyapunov certificate chain and the sampled radius estimate.
#[derive(Debug, Clone, Serialize)]
pub struct DoaEstimate {
    /// Solution of P A + A^T P = -Q.
    #[serde(skip)]
    pub p_lyap: DMatrix<f64>,
    /// The chosen Q.
    #[serde(skip)]
    pub q: DMatrix<f64>,
    /// Remainder slope bound actually used (0.9 of the admissible max).
    pub gamma: f64,
    /// Admissible maximum lambda_min(Q) / (2 ||P||).
    pub gamma_max: f64,
    /// Largest sampled radius on which ||f_r(x)|| < gamma ||x|| held.
    pub rho: f64,
    /// Sublevel value, 0.99 * lambda_min(P) * rho^2.
    pub c: f64,
    #[serde(rename = "lambda_min_P")]
    pub lambda_min_p: f64,
    /// min over accepted samples of gamma ||x|| - ||f_r(x)||.
    pub margin: f64,
    pub samples_checked: usize,
}

impl DoaEstimate {
    /// The JSON report with keys gamma, gamma_max, rho, c, lambda_min_P,
    /// margin, samples_checked.
    pub fn report_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("estimate serializes")
    }

    /// Membership test for the reported sublevel set.
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        (x.transpose() * &self.p_lyap * x)[(0, 0)] <= self.c
    }
}

/// Solves `P A + A^T P = -Q` for symmetric positive definite P.
/// Requires A Hurwitz and Q symmetric positive definite.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::check_symmetric(q, "Q")?;
    if !linalg::is_positive_definite(q) {
        return Err(Error::NotPositiveDefinite("Q"));
    }
    let eigs = linalg::complex_eigenvalues(a)?;
    if eigs.iter().any(|l| l.re >= 0.0) {
        return Err(Error::NotHurwitz);
    }
    let p = linalg::lyapunov_solve(a, q)?;
    let residual = (&p * a + a.transpose() * &p + q).norm();
    if residual > 1e-10 * q.norm() {
        return Err(Error::SolveFailure(format!(
            "residual {residual:.3e} exceeds 1e-10 relative"
        )));
    }
    if !linalg::is_positive_definite(&p) {
        return Err(Error::SolveFailure(
            "solution is not positive definite".into(),
        ));
    }
    Ok(p)
}

/// Nonlinear remainder `f_r(x) = f((q*,0) + x) - A x` of the closed loop
/// around the equilibrium, with `x = (q~, p~)` stacked.
pub fn remainder_field(
    sys: &dyn MechanicalSystem,
    k: &GainMatrix,
    lin: &Linearization,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = sys.dof();
    if x.len() != 2 * n {
        return Err(Error::DimensionMismatch(format!(
            "offset must have length {}, got {}",
            2 * n,
            x.len()
        )));
    }
    let q = sys.q_star() + x.rows(0, n).into_owned();
    let p = x.rows(n, n).into_owned();
    let (qd, pd) = model::closed_loop_field(sys, k, &q, &p)?;
    let mut f = DVector::zeros(2 * n);
    f.rows_mut(0, n).copy_from(&qd);
    f.rows_mut(n, n).copy_from(&pd);
    Ok(f - &lin.a * x)
}

/// Deterministic unit direction set (seeded Gaussian, normalized).
fn direction_set(dim: usize, n_dirs: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    (0..n_dirs)
        .map(|_| {
            loop {
                let d: DVector<f64> =
                    DVector::from_fn(dim, |_, _| Distribution::<f64>::sample(&normal, &mut rng));
                let norm = d.norm();
                if norm > 1e-12 {
                    return d / norm;
                }
            }
        })
        .collect()
}

fn shell_margins(
    sys: &dyn MechanicalSystem,
    k: &GainMatrix,
    lin: &Linearization,
    gamma: f64,
    radius: f64,
    dirs: &[DVector<f64>],
    sequential: bool,
) -> Result<Vec<f64>> {
    let eval = |d: &DVector<f64>| -> Result<f64> {
        let x = d * radius;
        let fr = remainder_field(sys, k, lin, &x)?;
        Ok(gamma * radius - fr.norm())
    };
    let out = if sequential {
        exec::map_collect_seq(dirs, eval)
    } else {
        exec::map_collect(dirs, eval)
    };
    out.into_iter().collect()
}

fn estimate_domain_impl(
    sys: &dyn MechanicalSystem,
    k: &GainMatrix,
    lin: &Linearization,
    q: &DMatrix<f64>,
    sampling: &SamplingConfig,
    sequential: bool,
) -> Result<DoaEstimate> {
    if sampling.n_dirs == 0 || sampling.n_radii < 2 {
        return Err(Error::InvalidParams(
            "sampling needs at least one direction and two radii".into(),
        ));
    }
    if !(sampling.rho_cap > 0.0) || !sampling.rho_cap.is_finite() {
        return Err(Error::InvalidParams(format!(
            "rho_cap must be positive, got {}",
            sampling.rho_cap
        )));
    }
    let p_lyap = solve_lyapunov(&lin.a, q)?;
    let (lambda_min_q, _) = linalg::sym_extremes(q)?;
    let (lambda_min_p, _) = linalg::sym_extremes(&p_lyap)?;
    let norm_p = linalg::sym_spectral_norm(&p_lyap)?;
    let gamma_max = lambda_min_q / (2.0 * norm_p);
    // Safety factor against gaps between sampled directions.
    let gamma = 0.9 * gamma_max;

    let dim = 2 * sys.dof();
    let dirs = direction_set(dim, sampling.n_dirs, sampling.seed);
    // Four decades below rho_cap, log-spaced, ascending.
    let radii: Vec<f64> = (0..sampling.n_radii)
        .map(|j| {
            let t = j as f64 / (sampling.n_radii - 1) as f64;
            sampling.rho_cap * 10f64.powf(-4.0 * (1.0 - t))
        })
        .collect();

    let mut rho = None;
    let mut margin = f64::INFINITY;
    let mut samples_checked = 0usize;
    for &radius in &radii {
        let margins = shell_margins(sys, k, lin, gamma, radius, &dirs, sequential)?;
        let shell_min = margins.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if shell_min <= 0.0 {
            break;
        }
        rho = Some(radius);
        margin = margin.min(shell_min);
        samples_checked += margins.len();
    }
    let rho = rho.ok_or(Error::NoValidRadius(radii[0]))?;
    let c = 0.99 * lambda_min_p * rho * rho;
    Ok(DoaEstimate {
        p_lyap,
        q: q.clone(),
        gamma,
        gamma_max,
        rho,
        c,
        lambda_min_p,
        margin,
        samples_checked,
    })
}

/// Estimates the domain of attraction of (q*, 0) for the closed loop of
/// `sys` under gain `k`. `lin` must be the linearization of that same
/// closed loop.
pub fn estimate_domain(
    sys: &dyn MechanicalSystem,
    k: &GainMatrix,
    lin: &Linearization,
    q: &DMatrix<f64>,
    sampling: &SamplingConfig,
) -> Result<DoaEstimate> {
    estimate_domain_impl(sys, k, lin, q, sampling, false)
}

/// Sequential variant of [`estimate_domain`], for baseline comparisons.
pub fn estimate_domain_seq(
    sys: &dyn MechanicalSystem,
    k: &GainMatrix,
    lin: &Linearization,
    q: &DMatrix<f64>,
    sampling: &SamplingConfig,
) -> Result<DoaEstimate> {
    estimate_domain_impl(sys, k, lin, q, sampling, true)
}
