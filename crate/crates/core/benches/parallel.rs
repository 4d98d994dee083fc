//! Parallel vs sequential baselines for the two data-parallel hot loops:
//! domain-of-attraction shell sampling and gain sweeps.

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DMatrix;

use phtune_core::doa::{estimate_domain, estimate_domain_seq, SamplingConfig};
use phtune_core::linearize::linearize;
use phtune_core::model::{GainMatrix, ManipulatorParams, PlanarManipulator};
use phtune_core::tuning::{damping_ratio_sweep, damping_ratio_sweep_seq, gain_for_zeta};

fn doa_sampling(c: &mut Criterion) {
    let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
    let lin0 = linearize(&sys, &GainMatrix::zero(2)).unwrap();
    let tuned = gain_for_zeta(&lin0, 1.0, &lin0.d_star).unwrap();
    let k = tuned.k_t;
    let lin = linearize(&sys, &k).unwrap();
    let q = DMatrix::identity(4, 4);
    let sampling = SamplingConfig {
        n_dirs: 512,
        n_radii: 48,
        rho_cap: 2.0,
        seed: 42,
    };

    let mut group = c.benchmark_group("doa_sampling");
    group.bench_function("parallel", |b| {
        b.iter(|| estimate_domain(&sys, &k, &lin, &q, &sampling).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| estimate_domain_seq(&sys, &k, &lin, &q, &sampling).unwrap())
    });
    group.finish();
}

fn gain_sweep(c: &mut Criterion) {
    let sys = PlanarManipulator::new(ManipulatorParams::default()).unwrap();
    let lin = linearize(&sys, &GainMatrix::zero(2)).unwrap();
    let kappas: Vec<f64> = (0..200).map(|i| 0.025 * i as f64).collect();

    let mut group = c.benchmark_group("gain_sweep");
    group.bench_function("parallel", |b| {
        b.iter(|| damping_ratio_sweep(&lin, &kappas).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| damping_ratio_sweep_seq(&lin, &kappas).unwrap())
    });
    group.finish();
}

criterion_group!(benches, doa_sampling, gain_sweep);
criterion_main!(benches);
