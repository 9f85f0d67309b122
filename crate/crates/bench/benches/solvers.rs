use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use tfdmagic_core::contour::{build_contour, derivative_operator};
use tfdmagic_core::ed::{build_epr, build_tfd, majorana_spectrum, CouplingTensor, Hamiltonian, ModelParams};
use tfdmagic_core::sd::{thermal_solve, SaddleProblem, SolveMode, ThermalOptions};
use tfdmagic_core::{ContourSpec, C64};

fn spectrum(c: &mut Criterion) {
    let mut g = c.benchmark_group("majorana_spectrum");
    for n in [6usize, 8, 10] {
        let h = Hamiltonian::new(&CouplingTensor::sample(&ModelParams::new(n, 4, 1.0, 1)).unwrap()).unwrap();
        let s = build_tfd(&h, 1.0, &build_epr(n).unwrap()).unwrap().state;
        g.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| majorana_spectrum(black_box(s), n).unwrap())
        });
    }
    g.finish();
}

fn thermal(c: &mut Criterion) {
    let mut g = c.benchmark_group("thermal_solve");
    g.sample_size(10);
    for log_n in [12u32, 14] {
        let opts = ThermalOptions {
            n_freq: 1 << log_n,
            ..Default::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(1 << log_n), &opts, |b, o| {
            b.iter(|| thermal_solve(C64::new(0.5, 2.0), 4, 1.0, o).unwrap())
        });
    }
    g.finish();
}

fn saddle_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("saddle_evaluate");
    g.sample_size(10);
    for n in [50usize, 100, 200] {
        let p = SaddleProblem::from_spec(ContourSpec::new(1.0, 2.0, n, n), 4, 1.0).unwrap();
        let sigma = p.free_seed(false);
        g.bench_with_input(BenchmarkId::new("two_sector", 4 * n), &sigma, |b, s| {
            b.iter(|| p.evaluate(black_box(s), SolveMode::TwoSector).unwrap())
        });
    }
    g.finish();
}

fn contour_ops(c: &mut Criterion) {
    let grid = build_contour(ContourSpec::new(1.0, 2.0, 100, 100)).unwrap();
    c.bench_function("derivative_operator_400", |b| {
        b.iter(|| derivative_operator(black_box(&grid), tfdmagic_core::Sector::Minus).unwrap())
    });
}

criterion_group!(benches, spectrum, thermal, saddle_step, contour_ops);
criterion_main!(benches);
