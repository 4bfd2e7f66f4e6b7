use std::f64::consts::TAU;

use caloric_mhd::exec::Execution;
use caloric_mhd::scheme::{solve_window, SchemeParams};
use caloric_mhd::spectral::{random_divfree_field, Grid};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn picard_window(c: &mut Criterion) {
    let mut group = c.benchmark_group("picard_window");
    group.sample_size(10);
    for n in [8usize, 16] {
        let grid = Grid::new(n, TAU).unwrap();
        let v0 = random_divfree_field(&grid, 1, 0.05, 1.0).unwrap();
        let h0 = random_divfree_field(&grid, 2, 0.05, 1.0).unwrap();
        for execution in [Execution::Sequential, Execution::Parallel] {
            let params = SchemeParams { horizon: 0.125, dt: 1.0 / 64.0, execution, ..Default::default() };
            group.bench_with_input(BenchmarkId::new(format!("{execution:?}"), n), &params, |b, p| {
                b.iter(|| solve_window(&v0, &h0, p).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, picard_window);
criterion_main!(benches);
