//! Seeded random generators shared by the integration suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use phtune_core::model::LinearMechanical;
use phtune_core::saddle::{assemble_saddle, SaddlePointMatrix};

/// Well-conditioned random symmetric positive definite matrix.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let shift = rng.random_range(0.1..1.0);
    a.transpose() * &a / (n as f64) + DMatrix::identity(n, n) * shift
}

/// Random symmetric positive semidefinite matrix (possibly singular).
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let r = rng.random_range(0..=n);
    if r == 0 {
        return DMatrix::zeros(n, n);
    }
    let b = DMatrix::from_fn(r, n, |_, _| rng.random_range(-1.0..1.0));
    b.transpose() * &b / (n as f64)
}

/// Random saddle-point matrix with Y = 0, n in 1..=max_n, m <= n.
pub fn random_saddle(rng: &mut ChaCha8Rng, max_n: usize) -> SaddlePointMatrix {
    loop {
        let n = rng.random_range(1..=max_n);
        let m = rng.random_range(1..=n);
        let x = random_spd(rng, n);
        let z = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        if let Ok(s) = assemble_saddle(x, z, DMatrix::zeros(m, m)) {
            return s;
        }
    }
}

/// Random constant-mass quadratic-potential system with PSD damping.
pub fn random_linear_system(rng: &mut ChaCha8Rng, max_n: usize) -> LinearMechanical {
    loop {
        let n = rng.random_range(1..=max_n);
        let m = random_spd(rng, n);
        let kp = random_spd(rng, n);
        let kd = random_psd(rng, n);
        let q_star = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        if let Ok(sys) = LinearMechanical::new(m, kp, kd, q_star) {
            return sys;
        }
    }
}
