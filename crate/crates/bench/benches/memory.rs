use std::hint::black_box;

use clustermem_core::decoherence::{delta_k, retrieval_overlap_mc, GeometryCase, MotionParams};
use clustermem_core::dynamics::{default_input, evolve, optimize_control, MediumParams, OptimizeOptions};
use clustermem_core::polariton::{store_retrieve_cluster, ChannelConfig};
use clustermem_core::state::{cluster_state_4q, density_from_pure, fidelity};
use clustermem_core::verification::witness_value;
use clustermem_core::{Complex64, ControlSchedule};
use criterion::{criterion_group, criterion_main, Criterion};

fn states(c: &mut Criterion) {
    let cluster = density_from_pure(&cluster_state_4q());
    let noisy = store_retrieve_cluster(&[ChannelConfig::ideal().with_beta(Complex64::new(2.0, 0.0)); 4], 0.0)
        .unwrap()
        .state_out;

    c.bench_function("fidelity_16x16", |b| {
        b.iter(|| fidelity(black_box(&cluster), black_box(&cluster)).unwrap())
    });
    c.bench_function("witness_81x81", |b| {
        b.iter(|| witness_value(black_box(&noisy)).unwrap())
    });
    c.bench_function("store_retrieve_cluster", |b| {
        let cfgs = [ChannelConfig::ideal().with_gamma_s(1e5); 4];
        b.iter(|| store_retrieve_cluster(black_box(&cfgs), 1e-6).unwrap())
    });
}

fn dynamics(c: &mut Criterion) {
    let m = MediumParams::scaled(10.0);
    let e_in = default_input(10.0).unwrap();
    let control = ControlSchedule::constant(1.0, e_in.start(), e_in.end(), 2).unwrap();
    let settings = OptimizeOptions::default().solver;
    c.bench_function("evolve_d10", |b| {
        b.iter(|| evolve(&m, black_box(&control), &e_in, &settings).unwrap())
    });

    let mut group = c.benchmark_group("optimize");
    group.sample_size(10);
    group.bench_function("optimize_control_d10", |b| {
        b.iter(|| optimize_control(&m, &e_in, &OptimizeOptions::default()).unwrap())
    });
    group.finish();
}

fn dephasing(c: &mut Criterion) {
    let m = MotionParams::rubidium(GeometryCase::Orthogonal);
    let dk = delta_k(&m).unwrap();
    c.bench_function("retrieval_overlap_mc_1e5", |b| {
        b.iter(|| retrieval_overlap_mc(black_box(1.5e-6), dk, m.temperature, m.mass, 100_000, 1).unwrap())
    });
}

criterion_group!(benches, states, dynamics, dephasing);
criterion_main!(benches);
