use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use winding_core::kernels::{char_fn_cone, heat_kernel_cone, heat_kernel_polar};
use winding_core::mc::{simulate_paths, WalkConfig};
use winding_core::specfun::{bessel_i_scaled, bessel_k1_scaled};
use winding_core::winding_laws::{
    winding_density_cone_asymptotic_numeric, winding_density_cone_closedform, winding_density_numeric,
    ConeWindingParams,
};
use winding_core::{ConeGeometry, KernelPoint, QuadControl, SeriesControl};

fn specfun(c: &mut Criterion) {
    let ctl = SeriesControl::default();
    let mut g = c.benchmark_group("bessel_i_scaled");
    for &(nu, z) in &[(0.5, 0.1), (2.3, 5.0), (40.0, 30.0), (0.7, 500.0)] {
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("nu={nu},z={z}")),
            &(nu, z),
            |b, &(nu, z)| b.iter(|| bessel_i_scaled(black_box(nu), black_box(z), &ctl).unwrap()),
        );
    }
    g.finish();
    c.bench_function("bessel_k1_scaled", |b| {
        b.iter(|| bessel_k1_scaled(black_box(3.7)).unwrap())
    });
}

fn kernels(c: &mut Criterion) {
    let ctl = SeriesControl::default();
    let p = KernelPoint::new(1.0, 1.3, 0.8, 0.5).unwrap();
    c.bench_function("heat_kernel_polar", |b| {
        b.iter(|| heat_kernel_polar(black_box(&p), &ctl).unwrap())
    });
    let g = ConeGeometry::new(PI, 0.3).unwrap();
    c.bench_function("heat_kernel_cone", |b| {
        b.iter(|| heat_kernel_cone(black_box(&p), &g, &ctl).unwrap())
    });
    c.bench_function("char_fn_cone", |b| {
        b.iter(|| char_fn_cone(black_box(2.0), 1.5, &g, &ctl).unwrap())
    });
}

fn densities(c: &mut Criterion) {
    let g = ConeGeometry::new(PI, 0.5).unwrap();
    let p = ConeWindingParams::new(g, 1e4, 2.0).unwrap();
    let quad = QuadControl::default();
    c.bench_function("cone_closedform", |b| {
        b.iter(|| winding_density_cone_closedform(black_box(&p)).unwrap())
    });
    c.bench_function("cone_asymptotic_numeric", |b| {
        b.iter(|| winding_density_cone_asymptotic_numeric(black_box(&p), &quad).unwrap())
    });
    c.bench_function("winding_density_numeric", |b| {
        b.iter(|| winding_density_numeric(black_box(1.0), 0.7, &ConeGeometry::planar(), &quad).unwrap())
    });
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate_paths");
    g.sample_size(10);
    for &t in &[1.0, 100.0] {
        let cfg = WalkConfig::new(1.0, t, 256, 7).unwrap();
        g.bench_with_input(BenchmarkId::new("256 paths", format!("t={t}")), &cfg, |b, cfg| {
            b.iter(|| simulate_paths(black_box(cfg)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, specfun, kernels, densities, monte_carlo);
criterion_main!(benches);
