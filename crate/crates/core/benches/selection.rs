use std::f64::consts::FRAC_PI_2;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use atom_screen::experiments::{deconv_centers, doa_centers, plant_discrete, plant_parametric, rng_from_seed};
use atom_screen::selection::{
    select_exhaustive_continuous, select_exhaustive_discrete, select_screened_continuous, select_screened_discrete,
};
use atom_screen::{
    build_doa_dictionary, build_gaussian_dictionary, ContinuousScreener, CostCounter, DiscreteScreener, Exec, Geometry,
    ProbeSet, Residual,
};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn discrete(c: &mut Criterion) {
    let dict = build_doa_dictionary(1000, 100, (-FRAC_PI_2, FRAC_PI_2)).unwrap();
    let centers = doa_centers(1000, 100).unwrap();
    let probe = ProbeSet::indices(centers.iter().copied()).unwrap();
    let y = plant_discrete(&dict, 5, &mut rng_from_seed(1)).unwrap().signal;
    let r = Residual::new(y);

    let mut group = c.benchmark_group("doa_selection");
    for (name, exec) in MODES {
        let counter = CostCounter::new();
        let screener = DiscreteScreener::new(&dict, Geometry::Dome, centers.clone(), &probe, &counter, exec).unwrap();
        group.bench_with_input(BenchmarkId::new("exhaustive", name), &exec, |b, &exec| {
            b.iter(|| select_exhaustive_discrete(black_box(&r), &dict, &counter, exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("screened", name), &exec, |b, _| {
            b.iter(|| select_screened_discrete(black_box(&r), &screener, &counter).unwrap())
        });
    }
    group.finish();
}

fn continuous(c: &mut Criterion) {
    let dict = build_gaussian_dictionary((0.0, 100.0), 10.0, 500).unwrap();
    let centers = deconv_centers((0.0, 100.0), 100).unwrap();
    let probe = ProbeSet::params(centers.iter().copied()).unwrap();
    let y = plant_parametric(&dict, 5, &mut rng_from_seed(2)).unwrap().signal;
    let r = Residual::new(y);

    let mut group = c.benchmark_group("deconv_selection");
    group.sample_size(10);
    for (name, exec) in MODES {
        let counter = CostCounter::new();
        let screener = ContinuousScreener::new(&dict, Geometry::Sphere, centers.clone(), &probe, exec).unwrap();
        group.bench_with_input(BenchmarkId::new("exhaustive", name), &exec, |b, &exec| {
            b.iter(|| select_exhaustive_continuous(black_box(&r), &dict, &counter, exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("screened", name), &exec, |b, _| {
            b.iter(|| select_screened_continuous(black_box(&r), &screener, &counter).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, discrete, continuous);
criterion_main!(benches);
