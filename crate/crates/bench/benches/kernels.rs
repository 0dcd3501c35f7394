use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use latrem_bench::{bench_bodies, generic_rotation};
use latrem_core::detlab::h_q;
use latrem_core::expsum::{eval_sum, ExpSumInstance};
use latrem_core::fourier::chi_hat_direct;
use latrem_core::lattice::count_points;
use latrem_core::{ConvexBody, Rotation};

fn counting(c: &mut Criterion) {
    let mut g = c.benchmark_group("count_points");
    for (name, body) in bench_bodies() {
        let rot = generic_rotation(body.dim());
        let t = if body.dim() == 2 { 2000.0 } else { 60.0 };
        g.bench_with_input(BenchmarkId::from_parameter(name), &t, |b, &t| {
            b.iter(|| count_points(&body, &rot, black_box(t)).unwrap())
        });
    }
    g.finish();
}

fn fourier(c: &mut Criterion) {
    let body = ConvexBody::supersphere(2, 4).unwrap();
    let rot = generic_rotation(2);
    let mut g = c.benchmark_group("chi_hat_direct");
    g.sample_size(20);
    for lam in [5.0, 40.0] {
        g.bench_with_input(BenchmarkId::from_parameter(lam), &lam, |b, &lam| {
            b.iter(|| chi_hat_direct(&body, &rot, black_box(&[0.6, 0.8]), lam).unwrap())
        });
    }
    g.finish();
}

fn exponential_sum(c: &mut Criterion) {
    let inst = ExpSumInstance::supersphere_support(3, 4, 2, 2000.0, 16.0, 0.99).unwrap();
    c.bench_function("eval_sum/d3_m16", |b| b.iter(|| eval_sum(black_box(&inst)).unwrap()));
}

fn mixed_partials(c: &mut Criterion) {
    let body = ConvexBody::supersphere(3, 4).unwrap();
    let rot = Rotation::identity(3);
    let y = [0.4, 0.7, -0.6];
    let v = vec![vec![1.0, 0.0, 2.0], vec![0.0, 1.0, 1.0], vec![1.0, -1.0, 0.0]];
    let mut g = c.benchmark_group("h_q");
    for q in [1u32, 2] {
        g.bench_with_input(BenchmarkId::from_parameter(q), &q, |b, &q| b.iter(|| h_q(&body, &rot, black_box(&y), &v, q).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, counting, fourier, exponential_sum, mixed_partials);
criterion_main!(benches);
