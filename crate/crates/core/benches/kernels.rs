use std::hint::black_box;

use atcrit::assembly::{assemble_u_system, gather_interior};
use atcrit::linalg::{cg_solve, dot_with};
use atcrit::parallel::Exec;
use atcrit::*;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn crack_system(n: usize) -> (atcrit::linalg::SparseSystem, Vec<f64>) {
    let grid = Grid::new(atcrit::grid::GridSpec::new(n, n, Domain::symmetric_square())).unwrap();
    let v = ScalarField::from_fn(grid, |_, y| 1.0 - (-y.abs() / 0.16).exp());
    let params = ATParams::new(0.08, 0.0064).unwrap();
    let scenario = Scenario::crack();
    let sys = assemble_u_system(&v, &params, &scenario);
    let x0 = gather_interior(&scenario.extension_field(grid));
    (sys, x0)
}

fn kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernels");
    for n in [101, 401] {
        let (sys, x) = crack_system(n);
        let mut y = vec![0.0; sys.n()];
        for (name, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
            group.bench_with_input(BenchmarkId::new(format!("matvec/{name}"), n), &n, |b, _| {
                b.iter(|| sys.matrix.matvec_with(exec, black_box(&x), &mut y))
            });
            group.bench_with_input(BenchmarkId::new(format!("dot/{name}"), n), &n, |b, _| {
                b.iter(|| dot_with(exec, black_box(&x), black_box(&x)))
            });
        }
    }
    group.finish();
}

fn cg(c: &mut Criterion) {
    let mut group = c.benchmark_group("cg");
    group.sample_size(10);
    let (sys, x0) = crack_system(201);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    group.bench_function("single_thread_pool", |b| {
        b.iter(|| single.install(|| cg_solve(&sys, x0.clone(), 1e-10, 100_000)))
    });
    group.bench_function(format!("global_pool_{}", parallel::current_threads()), |b| {
        b.iter(|| cg_solve(&sys, x0.clone(), 1e-10, 100_000))
    });
    group.finish();
}

criterion_group!(benches, kernels, cg);
criterion_main!(benches);
