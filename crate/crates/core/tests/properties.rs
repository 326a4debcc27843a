use std::sync::Arc;

use hardywave_core::geometry::{derive_params, in_region, Closure, ParamMode, Region};
use hardywave_core::grid::{integrate, make_grid, sample, unit_ball_volume, RadialField, RadialGrid};
use hardywave_core::lorentz::{indicator_norm, lorentz_norm, rearrange, weak_norm, LorentzIndex};
use hardywave_core::propagator::{PlanOptions, SpectralPlan};
use hardywave_core::time::simpson_weights;
use proptest::prelude::*;

fn field(grid: &Arc<RadialGrid>, values: &[f64]) -> RadialField {
    RadialField::from_values(grid, values.to_vec()).unwrap()
}

fn values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, len)
}

fn index() -> impl Strategy<Value = LorentzIndex> {
    (1.2f64..6.0, prop_oneof![Just(f64::INFINITY), 1.0f64..8.0]).prop_map(|(p, z)| LorentzIndex::new(p, z).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

proptest! {
    #[test]
    fn measure_is_consistent(n in prop::sample::select(vec![3usize, 5, 7, 9]), cells in 2usize..400, r_max in 0.1f64..50.0) {
        let grid = make_grid(n, r_max, cells).unwrap();
        let one = sample(&grid, |_| 1.0).unwrap();
        prop_assert!(rel(integrate(&one), unit_ball_volume(n) * r_max.powi(n as i32)) < 1e-12);
    }

    #[test]
    fn strong_index_is_the_lp_norm(v in values(40), p in prop::sample::select(vec![1.5, 2.0, 3.0, 5.0])) {
        let grid = make_grid(5, 3.0, 40).unwrap();
        let f = field(&grid, &v);
        let direct: f64 = v.iter().zip(grid.cell_measures()).map(|(x, m)| x.abs().powf(p) * m).sum::<f64>().powf(1.0 / p);
        prop_assert!(rel(lorentz_norm(&f, LorentzIndex::strong(p).unwrap()), direct) < 1e-12);
    }

    #[test]
    fn rearrangement_preserves_lp(v in values(30), p in 1.0f64..6.0) {
        let grid = make_grid(3, 2.0, 30).unwrap();
        let f = field(&grid, &v);
        let direct: f64 = v.iter().zip(grid.cell_measures()).map(|(x, m)| x.abs().powf(p) * m).sum::<f64>().powf(1.0 / p);
        prop_assert!(rel(rearrange(&f).lp_norm(p), direct) < 1e-12);
        let levels = rearrange(&f).levels().to_vec();
        prop_assert!(levels.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn scaling_law(v in prop::collection::vec(0.0f64..3.0, 24), lambda in 0.2f64..5.0, idx in index(), n in prop::sample::select(vec![3usize, 5])) {
        // f_λ(r) = f(λ r) lives on the grid scaled by 1/λ with the same node values
        let grid = make_grid(n, 4.0, 24).unwrap();
        let scaled = make_grid(n, 4.0 / lambda, 24).unwrap();
        let (f, f_lambda) = (field(&grid, &v), field(&scaled, &v));
        let expected = lambda.powf(-(n as f64) / idx.p()) * lorentz_norm(&f, idx);
        prop_assert!(rel(lorentz_norm(&f_lambda, idx), expected) < 1e-10);
    }

    #[test]
    fn weak_norm_is_monotone(v in values(32), shrink in prop::collection::vec(0.0f64..1.0, 32), p in 1.1f64..8.0) {
        let grid = make_grid(5, 2.0, 32).unwrap();
        let g = field(&grid, &v);
        let f = field(&grid, &v.iter().zip(&shrink).map(|(a, s)| a * s).collect::<Vec<_>>());
        prop_assert!(weak_norm(&f, p).unwrap() <= weak_norm(&g, p).unwrap() * (1.0 + 1e-14));
    }

    #[test]
    fn indicators_are_exact(mask in prop::collection::vec(any::<bool>(), 50), level in 0.1f64..10.0, idx in index()) {
        prop_assume!(mask.iter().any(|&m| m));
        let grid = make_grid(5, 3.0, 50).unwrap();
        let v: Vec<f64> = mask.iter().map(|&m| if m { level } else { 0.0 }).collect();
        let measure: f64 = mask.iter().zip(grid.cell_measures()).filter(|(m, _)| **m).map(|(_, mu)| mu).sum();
        prop_assert!(rel(lorentz_norm(&field(&grid, &v), idx), level * indicator_norm(measure, idx)) < 1e-12);
    }

    #[test]
    fn homogeneity(v in values(20), c in -4.0f64..4.0, idx in index()) {
        let grid = make_grid(3, 1.0, 20).unwrap();
        let f = field(&grid, &v);
        let expected = c.abs() * lorentz_norm(&f, idx);
        prop_assert!((lorentz_norm(&f.scale(c), idx) - expected).abs() <= 1e-12 * expected.max(1e-300));
    }

    #[test]
    fn exponent_identities(q in 2.7f64..6.0, b in 0.0f64..1.9) {
        let m = derive_params(5, q, b, 0.0, 0.0, ParamMode::Theorem).unwrap();
        prop_assert!(m.d1d2_residual.abs() <= 1e-12);
        prop_assert!(m.r0_identity_gap <= 1e-12 * m.r0);
        prop_assert!(m.s_identity_gap <= 1e-12);
        prop_assert!(m.point_on_segment);
        prop_assert!(in_region(m.point, Region::Segment, Closure::Closed, 5).unwrap());
    }

    #[test]
    fn simpson_integrates_cubics(m in 2usize..60, a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
        let len = 2.5;
        let h = len / m as f64;
        let w = simpson_weights(m, h);
        let f = |t: f64| a + b * t * t + c * t * t * t;
        let exact = a * len + b * len.powi(3) / 3.0 + c * len.powi(4) / 4.0;
        let approx: f64 = w.iter().enumerate().map(|(k, w)| w * f(k as f64 * h)).sum();
        prop_assert!((approx - exact).abs() < 1e-11 * (1.0 + exact.abs()));
    }
}

fn plan_3d() -> SpectralPlan {
    let grid = make_grid(3, 20.0, 512).unwrap();
    SpectralPlan::new(&grid, PlanOptions::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mode_energy_is_conserved(t in 0.0f64..10.0, a in 0.2f64..3.0) {
        let plan = plan_3d();
        let grid = plan.grid().clone();
        let u0 = plan.forward(&sample(&grid, |r| (-a * r * r).exp()).unwrap()).unwrap();
        let u1 = plan.forward(&sample(&grid, |r| r * (-r * r).exp()).unwrap()).unwrap();
        let e0 = plan.mode_energy(0.0, &u0, &u1);
        let et = plan.mode_energy(t, &u0, &u1);
        for (x, y) in e0.iter().zip(&et) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn time_symmetry(t in 0.0f64..5.0) {
        let plan = plan_3d();
        let h = sample(plan.grid(), |r| (-r * r).exp()).unwrap();
        let (w, w_neg) = (plan.propagate_w(t, &h).unwrap(), plan.propagate_w(-t, &h).unwrap());
        let (c, c_neg) = (plan.propagate_wdot(t, &h).unwrap(), plan.propagate_wdot(-t, &h).unwrap());
        prop_assert!(w.add(&w_neg).unwrap().max_abs() <= 1e-15 * w.max_abs().max(1.0));
        prop_assert_eq!(c, c_neg);
    }

    #[test]
    fn sine_addition(t in -5.0f64..5.0, s in -5.0f64..5.0) {
        let plan = plan_3d();
        let h = sample(plan.grid(), |r| (-r * r).exp()).unwrap();
        let lhs = plan.propagate_w(t + s, &h).unwrap();
        let a = plan.propagate_wdot(s, &plan.propagate_w(t, &h).unwrap()).unwrap();
        let b = plan.propagate_w(s, &plan.propagate_wdot(t, &h).unwrap()).unwrap();
        let rhs = a.add(&b).unwrap();
        let scale = lhs.max_abs().max(rhs.max_abs());
        prop_assume!(scale > 0.0);
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-8 * scale);
    }

    #[test]
    fn propagation_is_linear(t in -4.0f64..4.0, alpha in -3.0f64..3.0) {
        let plan = plan_3d();
        let h = sample(plan.grid(), |r| (1.0 + r) * (-r * r).exp()).unwrap();
        let lhs = plan.propagate_w(t, &h.scale(alpha)).unwrap();
        let rhs = plan.propagate_w(t, &h).unwrap().scale(alpha);
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-13 * rhs.max_abs().max(1e-300));
    }
}
