use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sflab::exec::Exec;
use sflab::flow::{duhamel_step, FlowParams};
use sflab::geometry::Sphere2;
use sflab::operators::{rhs_regularized, OperatorContext};
use sflab::scenario;
use sflab::spectral::GridSpec;
use std::f64::consts::PI;
use std::hint::black_box;
use std::sync::Arc;

const EXECS: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Auto)];

fn rhs_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("rhs_assembly");
    for m in [32, 64, 128] {
        let g = GridSpec::new(2, m, 2.0 * PI).unwrap();
        let v = scenario::random_on_manifold(g, &Sphere2, 1, 3, 0.6);
        for (name, exec) in EXECS {
            let ctx = OperatorContext::new(Arc::new(Sphere2), g).with_exec(exec);
            group.bench_with_input(BenchmarkId::new(name, m), &v, |b, v| {
                b.iter(|| rhs_regularized(&ctx, black_box(v), 1e-3, 0.1).unwrap())
            });
        }
    }
    group.finish();
}

fn duhamel(c: &mut Criterion) {
    let mut group = c.benchmark_group("duhamel_step");
    group.sample_size(20);
    for (dim, m) in [(1, 1024), (2, 64)] {
        let g = GridSpec::new(dim, m, 2.0 * PI).unwrap();
        let v = scenario::random_on_manifold(g, &Sphere2, 2, 3, 0.6);
        let p = FlowParams {
            eps: 1e-3,
            beta: 0.1,
            dt: 1e-3,
            ..FlowParams::default()
        };
        for (name, exec) in EXECS {
            let ctx = OperatorContext::new(Arc::new(Sphere2), g).with_exec(exec);
            group.bench_with_input(BenchmarkId::new(name, format!("{dim}d-{m}")), &v, |b, v| {
                b.iter(|| duhamel_step(&ctx, black_box(v), &p).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, rhs_assembly, duhamel);
criterion_main!(benches);
