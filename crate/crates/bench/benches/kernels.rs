use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use deltasketch::nn::{Activation, Mlp};
use deltasketch::{thin_svd, Matrix, ScoreKind, SketchState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn sketch_update(c: &mut Criterion) {
    let mut g = c.benchmark_group("sketch_update");
    g.sample_size(10);
    for &(k, m) in &[(50usize, 500usize), (200, 3000)] {
        let rows = random(4 * k, m, 1);
        g.bench_with_input(BenchmarkId::from_parameter(format!("k{k}_m{m}")), &rows, |b, rows| {
            b.iter_batched(
                || SketchState::new(k, m, ScoreKind::Covariance { lambda: 1.0 }).unwrap(),
                |mut s| {
                    for r in rows.row_iter() {
                        s.update(r).unwrap();
                    }
                    black_box(s)
                },
                BatchSize::LargeInput,
            )
        });
    }
    g.finish();
}

fn svd(c: &mut Criterion) {
    let mut g = c.benchmark_group("thin_svd");
    g.sample_size(10);
    for &(r, m) in &[(100usize, 1000usize), (400, 3000), (1000, 200)] {
        let a = random(r, m, 2);
        g.bench_with_input(BenchmarkId::from_parameter(format!("{r}x{m}")), &a, |b, a| {
            b.iter(|| black_box(thin_svd(a).unwrap()))
        });
    }
    g.finish();
}

fn param_gradient(c: &mut Criterion) {
    let mut g = c.benchmark_group("param_gradient");
    for &(d, h) in &[(8usize, 50usize), (13, 100)] {
        let net = Mlp::init(&[d, h, h, 1], Activation::Tanh, 3).unwrap();
        let x: Vec<f64> = (0..d).map(|i| i as f64 / d as f64 - 0.5).collect();
        g.bench_function(BenchmarkId::from_parameter(format!("{d}-{h}-{h}-1")), |b| {
            b.iter(|| black_box(net.param_gradient(black_box(&x)).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, sketch_update, svd, param_gradient);
criterion_main!(benches);
