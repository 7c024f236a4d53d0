use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use mbl_bench::{chain, evolved, neel_x};
use mbl_core::hamiltonian::dense_spectrum;
use mbl_core::observables::entropy_record;
use mbl_core::propagator::{lanczos_expv, KrylovConfig};

fn matvec(c: &mut Criterion) {
    let mut group = c.benchmark_group("matvec");
    for len in [10, 12, 14] {
        let h = chain(len, 5.0);
        let x = neel_x(len);
        let mut y = vec![Complex64::new(0.0, 0.0); h.dim()];
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, _| {
            b.iter(|| h.apply(black_box(x.amplitudes()), &mut y))
        });
    }
    group.finish();
}

fn krylov_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("lanczos_expv");
    group.sample_size(20);
    let cfg = KrylovConfig::default();
    for len in [10, 12] {
        let h = chain(len, 10.0);
        let psi = neel_x(len);
        group.bench_with_input(BenchmarkId::new("t=1", len), &len, |b, _| {
            b.iter(|| lanczos_expv(&h, black_box(&psi), 1.0, &cfg).unwrap())
        });
    }
    group.finish();
}

fn entropies(c: &mut Criterion) {
    let mut group = c.benchmark_group("entropy_record");
    for len in [10, 12] {
        let psi = evolved(len);
        group.bench_with_input(BenchmarkId::new("sites", len), &len, |b, _| {
            b.iter(|| entropy_record(black_box(&psi), 0.0, false).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sites+half", len), &len, |b, _| {
            b.iter(|| entropy_record(black_box(&psi), 0.0, true).unwrap())
        });
    }
    group.finish();
}

fn diagonalization(c: &mut Criterion) {
    let mut group = c.benchmark_group("dense_spectrum");
    group.sample_size(10);
    for len in [8, 10] {
        let h = chain(len, 10.0);
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, _| {
            b.iter(|| dense_spectrum(black_box(&h)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, matvec, krylov_step, entropies, diagonalization);
criterion_main!(benches);
