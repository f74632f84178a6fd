use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hmtk::dyadic::{build_tree, TreeOptions};
use hmtk::experiment::{equiv_experiment, ExperimentConfig};
use hmtk::generate::{generate, GeneratorSpec};
use hmtk::norms::lip::lip_norm;
use hmtk::par;
use hmtk::space::validate_space;

fn bench(c: &mut Criterion) {
    let space = generate(&GeneratorSpec::grid1d(256)).unwrap();
    let f: Vec<f64> = (0..space.n()).map(|i| (i as f64 * 0.1).sin()).collect();
    let a0 = validate_space(&space).unwrap().a0;
    let cfg = ExperimentConfig::new(0.3);
    // 0 = the default pool
    let pools = [("sequential", 1usize), ("parallel", 0)];

    let mut g = c.benchmark_group("lip_norm");
    for (label, t) in pools {
        g.bench_function(BenchmarkId::new(label, space.n()), |b| b.iter(|| par::with_threads(t, || lip_norm(&f, &space, 0.3))));
    }
    g.finish();

    let mut g = c.benchmark_group("build_tree");
    for (label, t) in pools {
        g.bench_function(BenchmarkId::new(label, space.n()), |b| {
            b.iter(|| par::with_threads(t, || build_tree(&space, a0, TreeOptions::default()).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("equiv_experiment");
    g.sample_size(10);
    for (label, t) in pools {
        g.bench_function(BenchmarkId::new(label, space.n()), |b| b.iter(|| par::with_threads(t, || equiv_experiment(&space, &cfg).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
