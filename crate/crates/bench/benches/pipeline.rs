use criterion::{criterion_group, criterion_main, Criterion};
use staticlab::quadrature::{check_main_identity, QuadratureRule};
use staticlab::PointCurvature;
use staticlab_bench::{interior_point, model};

fn curvature(c: &mut Criterion) {
    let m = model("warped5");
    let x = interior_point(&m);
    for order in [4, 6] {
        c.bench_function(&format!("curvature/warped5/order{order}"), |b| {
            b.iter(|| PointCurvature::new(&m.metric, &x, order).unwrap())
        });
    }
}

fn model_check(c: &mut Criterion) {
    let m = model("warped5");
    let pts = m.sample_points(4, 2);
    c.bench_function("check/warped5", |b| b.iter(|| m.check(&pts, true).unwrap()));
}

fn main_identity(c: &mut Criterion) {
    let m = model("warped5");
    let mut g = c.benchmark_group("identity");
    g.sample_size(10);
    g.bench_function("gradient-bach/warped5/p2", |b| {
        b.iter(|| check_main_identity(&m, 0.5, 1.5, 2, QuadratureRule::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, curvature, model_check, main_identity);
criterion_main!(benches);
