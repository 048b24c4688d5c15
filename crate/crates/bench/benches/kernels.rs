use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use symcocycle::cocycle::{cocycle_by_action, cocycle_by_path, GridSpec, PathSettings};
use symcocycle::dynamics::{Diffeo, FlowMap, HamiltonianSpec, IntegratorSettings};
use symcocycle::exprlang::ExprSet;
use symcocycle::{Expr, ManifoldModel, Point, Primitive, Window};

const BUMP: &str = "0.3*max(0, 1 - ((p - 0.1)^2 + (q + 0.05)^2)/2.25)^6";

fn model() -> ManifoldModel {
    ManifoldModel::plane(Window::square(2.0).unwrap())
}

fn flow() -> FlowMap {
    FlowMap::new(HamiltonianSpec::parse("bump", BUMP).unwrap(), IntegratorSettings::default(), model()).unwrap()
}

fn expressions(c: &mut Criterion) {
    let e = Expr::parse(BUMP).unwrap();
    let (dp, dq) = e.grad().unwrap();
    c.bench_function("expr/eval", |b| b.iter(|| e.eval(black_box(0.3), black_box(-0.2), 0.0)));
    c.bench_function("expr/eval_tree", |b| b.iter(|| e.eval_tree(black_box(0.3), black_box(-0.2), 0.0)));
    let set = ExprSet::new(&[&e, &dp, &dq]);
    let mut out = [0.0; 3];
    c.bench_function("expr/fused_value_and_gradient", |b| {
        b.iter(|| set.eval_into(black_box(0.3), black_box(-0.2), 0.0, &mut out))
    });
}

fn flows(c: &mut Criterion) {
    let f = flow();
    c.bench_function("flow/time_one_map", |b| b.iter(|| f.apply(black_box(Point::new(0.4, -0.3)))));
    c.bench_function("flow/push_forward", |b| {
        b.iter(|| f.push_forward(black_box(Point::new(0.4, -0.3)), Point::new(1.0, 0.0)))
    });
}

fn cocycles(c: &mut Criterion) {
    let f = flow();
    let m = model();
    let alpha = Primitive::p_dq();
    let grid = GridSpec::square(m.window, 21).unwrap();
    let mut g = c.benchmark_group("cocycle_21x21");
    g.sample_size(10);
    g.bench_function("path", |b| {
        b.iter(|| cocycle_by_path(&f, &alpha, &m, None, &grid, PathSettings::default()).unwrap())
    });
    g.bench_function("action", |b| b.iter(|| cocycle_by_action(&f, &alpha, &grid).unwrap()));
    g.finish();

    let k = cocycle_by_action(&f, &alpha, &GridSpec::square(m.window, 101).unwrap()).unwrap();
    c.bench_function("grid/interpolate", |b| b.iter(|| k.interpolate(black_box(Point::new(0.123, -0.456)))));
}

criterion_group!(benches, expressions, flows, cocycles);
criterion_main!(benches);
