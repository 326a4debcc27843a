use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use hardywave_core::grid::{make_grid, sample};
use hardywave_core::lorentz::lorentz_norm;
use hardywave_core::{
    derive_params, InitialData, LorentzIndex, MildProblem, Nonlinearity, ParamMode, PicardOptions, PlanOptions,
    SpectralPlan, TimeGrid,
};

fn transform(c: &mut Criterion) {
    let mut group = c.benchmark_group("transform");
    for n in [256usize, 1024] {
        let grid = make_grid(3, 20.0, n).unwrap();
        let plan = SpectralPlan::new(&grid, PlanOptions::default()).unwrap();
        let f = sample(&grid, |r| (-r * r).exp()).unwrap();
        group.bench_with_input(BenchmarkId::new("propagate_w", n), &f, |b, f| {
            b.iter(|| plan.propagate_w(black_box(1.0), f).unwrap())
        });
    }
    group.finish();

    c.bench_function("plan_build_512", |b| {
        let grid = make_grid(5, 32.0, 512).unwrap();
        b.iter(|| SpectralPlan::new(black_box(&grid), PlanOptions::default()).unwrap())
    });
}

fn lorentz(c: &mut Criterion) {
    let grid = make_grid(5, 2.0, 4096).unwrap();
    let f = sample(&grid, |r| (-r * r).exp() * (1.0 + (7.0 * r).sin())).unwrap();
    for (name, idx) in [
        ("weak", LorentzIndex::weak(2.5).unwrap()),
        ("z2", LorentzIndex::new(5.0, 2.0).unwrap()),
    ] {
        c.bench_function(&format!("lorentz_norm_4096_{name}"), |b| {
            b.iter(|| lorentz_norm(black_box(&f), idx))
        });
    }
}

fn picard(c: &mut Criterion) {
    let grid = make_grid(5, 32.0, 128).unwrap();
    let plan = SpectralPlan::new(&grid, PlanOptions::default()).unwrap();
    let params = derive_params(5, 3.0, 0.5, 0.01, 0.01, ParamMode::Theorem).unwrap();
    let u0 = sample(&grid, |r| 0.1 * (-r * r / 4.0).exp()).unwrap();
    let data = InitialData::new(u0, hardywave_core::RadialField::zeros(&grid)).unwrap();
    let times = TimeGrid::forward(8.0, 32).unwrap();
    let problem = MildProblem::new(&plan, params, Nonlinearity::power(3.0).unwrap(), data, times).unwrap();
    let mut group = c.benchmark_group("picard");
    group.sample_size(10);
    group.bench_function("n5_N128_32steps", |b| {
        b.iter(|| {
            problem
                .picard(PicardOptions {
                    tol: 1e-10,
                    max_iter: 100,
                    ball_radius: Some(0.2),
                    initial: None,
                })
                .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, transform, lorentz, picard);
criterion_main!(benches);
