//! Data-parallel core against a single worker thread. Build with
//! `--no-default-features` to time the plain sequential fallback instead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPoolBuilder;

use subreg_core::exec::map_indexed;
use subreg_core::grassmann::OrthoBasis;
use subreg_core::problems::{gen_dataset, DatasetSpec, Preset};
use subreg_core::solvers::two_grid_rho;

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    vec![
        ("sequential", ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", ThreadPoolBuilder::new().num_threads(all).build().unwrap()),
    ]
}

fn bench_gen(c: &mut Criterion) {
    let spec = DatasetSpec::new(Preset::Elliptic2dIso, 16, 4, 1).with_grid(16);
    let mut group = c.benchmark_group("gen_dataset");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, pool.current_num_threads()), |b| {
            b.iter(|| pool.install(|| gen_dataset(&spec).unwrap()))
        });
    }
    group.finish();
}

fn bench_two_grid(c: &mut Criterion) {
    let ds = gen_dataset(&DatasetSpec::new(Preset::Twogrid, 16, 8, 2).with_grid(24)).unwrap();
    let ops: Vec<_> = (0..ds.n_samples()).map(|i| ds.operator(i).unwrap()).collect();
    let mut group = c.benchmark_group("two_grid_rho");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, pool.current_num_threads()), |b| {
            b.iter(|| {
                pool.install(|| {
                    map_indexed(ops.len(), |i| {
                        let v: &OrthoBasis = &ds.targets[i];
                        two_grid_rho(&ops[i], v, 0.9, 100).unwrap()
                    })
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_gen, bench_two_grid);
criterion_main!(benches);
