//! Benchmarks of the hot primitives: support/Steiner geometry, numerical
//! conjugation, the lens parameterization and the solvers that sit on top.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use hjrep_core::geom::{clamp_intersection, hausdorff, ConvexBody, Polygon, N_POLY};
use hjrep_core::hamiltonian::{conjugate_numeric, QuadraticModel, SqrtExample};
use hjrep_core::representation::{parameterize_with, LensResolution};
use hjrep_core::value::{
    solve_hj_fd, solve_variational_on, FdGrid, SolveOptions, TerminalCost,
};

fn bench_geometry(c: &mut Criterion) {
    let ball = Polygon::ball([0.3, -0.2], 2.0, N_POLY).unwrap();
    let tri = Polygon::from_points(&[[0.0, 0.0], [3.0, 0.5], [1.0, 2.5]]).unwrap();
    c.bench_function("steiner_point_720gon", |b| {
        b.iter(|| black_box(ball.steiner()))
    });
    c.bench_function("hausdorff_720gon_vs_triangle", |b| {
        let ka: ConvexBody = ball.clone().into();
        let kb: ConvexBody = tri.clone().into();
        b.iter(|| black_box(hausdorff(&ka, &kb).unwrap()))
    });
    c.bench_function("clamp_intersection_720gon", |b| {
        let k: ConvexBody = ball.clone().into();
        b.iter(|| black_box(clamp_intersection(&k, &[4.0, 1.0]).unwrap()))
    });
}

fn bench_conjugate(c: &mut Criterion) {
    let m = SqrtExample;
    c.bench_function("conjugate_numeric_sqrt", |b| {
        b.iter(|| black_box(conjugate_numeric(&m, 0.0, &[2.0], &[1.2])))
    });
}

fn bench_parameterize(c: &mut Criterion) {
    let quad = QuadraticModel { n: 1, c: 2.0 };
    let sqrt = SqrtExample;
    c.bench_function("parameterize_quadratic_fast", |b| {
        b.iter(|| {
            black_box(
                parameterize_with(&quad, 0.0, &[1.0], &[2.0, -1.0], LensResolution::fast())
                    .unwrap(),
            )
        })
    });
    c.bench_function("parameterize_sqrt_audit", |b| {
        b.iter(|| {
            black_box(
                parameterize_with(&sqrt, 0.0, &[1.5], &[3.0, -2.0], LensResolution::audit())
                    .unwrap(),
            )
        })
    });
}

fn bench_solvers(c: &mut Criterion) {
    let m = QuadraticModel { n: 1, c: 2.0 };
    let g = TerminalCost::Quadratic;
    let opts = SolveOptions {
        starts: 1,
        seed: 3,
        rollout_res: LensResolution::fast(),
        max_sweeps: 120,
    };
    c.bench_function("solve_variational_n32", |b| {
        b.iter(|| black_box(solve_variational_on(&m, &g, 0.0, 1.0, 1.0, 32, &opts).unwrap()))
    });
    c.bench_function("solve_hj_fd_nx128", |b| {
        b.iter(|| {
            black_box(
                solve_hj_fd(
                    &m,
                    &g,
                    FdGrid { x_lo: -2.0, x_hi: 2.0, nx: 128, nt: None, pad: 1.0, t_end: 1.0 },
                )
                .unwrap(),
            )
        })
    });
}

criterion_group!(
    benches,
    bench_geometry,
    bench_conjugate,
    bench_parameterize,
    bench_solvers
);
criterion_main!(benches);
