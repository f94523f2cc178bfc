use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use disclift::psvm::{kkt_oracle, smw_solve, solve, vandermonde_constraints};
use disclift::{index_window, Matrix, PredictProblem, Variant};
use nalgebra::DVector;
use std::hint::black_box;

/// Deterministic pseudo-random fill, enough for timing.
fn filled(rows: usize, cols: usize, salt: u64) -> Matrix {
    Matrix::from_fn(rows, cols, |i, j| {
        let x = (i as u64 * 6364136223846793005 + j as u64 * 1442695040888963407 + salt) >> 33;
        (x % 2001) as f64 / 1000.0 - 1.0
    })
}

fn problem(l: usize, window: usize, degree: usize) -> PredictProblem {
    let labels = (0..l).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let constraints =
        (degree > 0).then(|| vandermonde_constraints(&index_window(window, 4 * window, window).unwrap(), degree));
    PredictProblem {
        design: filled(l, window + 1, 7),
        labels,
        nu: 1.0,
        variant: Variant::NonRegularised,
        constraints,
    }
}

fn bench_smw_vs_dense(c: &mut Criterion) {
    let mut group = c.benchmark_group("smw_vs_dense");
    for l in [100usize, 400, 1600] {
        let h = filled(l, 6, 3);
        let b = DVector::from_element(l, 1.0);
        group.bench_with_input(BenchmarkId::new("smw", l), &l, |bench, _| {
            bench.iter(|| smw_solve(black_box(&h), black_box(&h), 1.0, black_box(&b)).unwrap())
        });
        if l <= 400 {
            group.bench_with_input(BenchmarkId::new("dense", l), &l, |bench, _| {
                bench.iter(|| {
                    let mut m = &h * h.transpose();
                    for i in 0..l {
                        m[(i, i)] += 1.0;
                    }
                    m.lu().solve(black_box(&b)).unwrap()
                })
            });
        }
    }
    group.finish();
}

fn bench_predict_problems(c: &mut Criterion) {
    let mut group = c.benchmark_group("predict_problem");
    for degree in [0usize, 2] {
        let p = problem(200, 4, degree);
        group.bench_function(BenchmarkId::new("fast", degree), |bench| {
            bench.iter(|| solve(black_box(&p)).unwrap())
        });
        group.bench_function(BenchmarkId::new("kkt_oracle", degree), |bench| {
            bench.iter(|| kkt_oracle(black_box(&p)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_smw_vs_dense, bench_predict_problems);
criterion_main!(benches);
