use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use valleyjump::dynamics::{self, DynamicsConfig, State};
use valleyjump::oracle::{self, Passage, QuadratureSpec};
use valleyjump::{specialfn, theory, LandscapeParams};

fn step(c: &mut Criterion) {
    let p = LandscapeParams::default();
    let cfg = DynamicsConfig::default();
    let mut rng = dynamics::rng_from_seed(7);
    let mut s = State { x: 0.3, y: 2.0 };
    c.bench_function("step", |b| {
        b.iter(|| {
            s = dynamics::step(&p, &cfg, black_box(s), &mut rng).unwrap();
            s
        })
    });
}

fn erfi(c: &mut Criterion) {
    c.bench_function("erfi series z=2", |b| b.iter(|| specialfn::erfi(black_box(2.0))));
    c.bench_function("ln erfi asymptotic z=12", |b| b.iter(|| specialfn::log_erfi(black_box(12.0))));
}

fn quadrature(c: &mut Criterion) {
    let p = LandscapeParams::default();
    let spec = QuadratureSpec { rel_tol: 1e-8, ..Default::default() };
    c.bench_function("mfpt quadrature", |b| {
        b.iter(|| oracle::mfpt_quadrature(&p, black_box(4e-3), 2.0, Passage::SharpToFlat, &spec).unwrap())
    });
}

fn prediction(c: &mut Criterion) {
    let p = LandscapeParams::default();
    c.bench_function("theory predict", |b| b.iter(|| theory::predict(&p, black_box(1e-3), 2.0, 0.01).unwrap()));
}

criterion_group!(benches, step, erfi, quadrature, prediction);
criterion_main!(benches);
