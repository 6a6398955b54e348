use criterion::{criterion_group, criterion_main, Criterion};
use hidden_sir_core::chain::simulate_ctmc;
use hidden_sir_core::epidemic::{cosimulate, make_hidden_system};
use hidden_sir_core::filter::{wonham_step_raw, ChainTransitionSampler, ParticleCloud};
use hidden_sir_core::presets::{example1, example2};
use hidden_sir_core::sde::{
    record_path, stream_rng, BrownianStream, TimeGrid, DEFAULT_POSITIVITY_FLOOR, PARTICLE_STREAM,
};
use hidden_sir_core::threshold::lambda_discrete;
use std::hint::black_box;

fn wonham(c: &mut Criterion) {
    let p = example1();
    let mut e = [0.5, 0.5];
    let mut out = [0.0; 2];
    c.bench_function("wonham_step", |b| {
        b.iter(|| {
            wonham_step_raw(black_box(&e), &p.spec, black_box(0.01), 1e-3, &mut out);
            e = out;
        })
    });
}

fn thresholds(c: &mut Criterion) {
    let (p1, p2) = (example1(), example2());
    c.bench_function("lambda_discrete/example1", |b| {
        b.iter(|| lambda_discrete(&p1.params, &p1.model, black_box(&p1.spec)).unwrap())
    });
    c.bench_function("lambda_discrete/example2", |b| {
        b.iter(|| lambda_discrete(&p2.params, &p2.model, black_box(&p2.spec)).unwrap())
    });
}

fn paths(c: &mut Criterion) {
    let p = example2();
    let grid = TimeGrid::with_horizon(p.dt, 10.0).unwrap();
    let init = [p.init.state.s, p.init.state.i];
    let mut group = c.benchmark_group("paths_10k_steps");
    group.sample_size(20);
    group.bench_function("hidden", |b| {
        b.iter(|| {
            let alpha = simulate_ctmc(&p.spec, 0, &grid, 3).unwrap();
            let sys = make_hidden_system(&p.params, &p.model, &p.spec, &alpha).unwrap();
            record_path(&sys, &init, &grid, BrownianStream::new(2, grid.dt(), 3), 10).unwrap()
        })
    });
    group.bench_function("cosimulate", |b| {
        b.iter(|| {
            cosimulate(
                &p.params,
                &p.model,
                &p.spec,
                &p.init,
                &grid,
                3,
                10,
                DEFAULT_POSITIVITY_FLOOR,
            )
            .unwrap()
        })
    });
    group.finish();
}

fn particles(c: &mut Criterion) {
    let p = example1();
    let dt = 1e-3;
    let sampler = ChainTransitionSampler::new(p.spec.clone(), dt);
    let mut rng = stream_rng(5, PARTICLE_STREAM);
    let mut cloud = ParticleCloud::from_law(&p.spec, &[0.5, 0.5], 1000, &mut rng).unwrap();
    c.bench_function("particle_step/1000", |b| {
        b.iter(|| {
            cloud
                .step(&sampler, |x| x, black_box(0.001), dt, 0.5, &mut rng)
                .unwrap()
        })
    });
}

criterion_group!(benches, wonham, thresholds, paths, particles);
criterion_main!(benches);
