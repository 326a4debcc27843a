//! Audits of the dispersive bound and of its time-integrated form.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{dispersive_exponent, in_region, yamazaki_exponent, Closure, ExponentPoint, Region};
use crate::grid::RadialField;
use crate::lorentz::{lorentz_norm, LorentzIndex};
use crate::propagator::{SpectralPlan, GL8_NODES, GL8_WEIGHTS};
use crate::report::EstimateReport;

fn in_any_triangle(l1: f64, l2: f64, n: usize) -> Result<bool> {
    let pt = ExponentPoint::from_exponents(l1, l2)?;
    Ok(in_region(pt, Region::RadialTriangle, Closure::Closed, n)?
        || in_region(pt, Region::GeneralTriangle, Closure::Closed, n)?)
}

/// Samples `||W(t) h||` in `target` against `|t|^(-n(1/l1 - 1/l2) + 1) ||h||` in `source`
/// and fits the slope over the top decade of the sampled times.
pub fn audit_dispersive_indices(
    plan: &SpectralPlan,
    source: LorentzIndex,
    target: LorentzIndex,
    h: &RadialField,
    times: &[f64],
) -> Result<EstimateReport> {
    if times.is_empty() {
        return Err(Error::InvalidArgument(
            "dispersive audit needs at least one time".into(),
        ));
    }
    let n = plan.grid().dimension();
    let (l1, l2) = (source.p(), target.p());
    let exponent = dispersive_exponent(l1, l2, n);
    let mut report = EstimateReport::new("dispersive");
    report
        .input("n", n as f64)
        .input("l1", l1)
        .input("z1", source.z())
        .input("l2", l2)
        .input("z2", target.z())
        .input("bound_exponent", exponent);
    if !in_any_triangle(l1, l2, n)? {
        report.flag("out_of_region");
    }
    let h_norm = lorentz_norm(h, source);
    let spec = plan.forward(h)?;
    let measured: Vec<f64> = times
        .par_iter()
        .map(|&t| {
            let w = plan.inverse(&plan.apply(&spec, |rho| crate::propagator::sine_multiplier(t, rho)));
            lorentz_norm(&w, target)
        })
        .collect();
    for (&t, m) in times.iter().zip(measured) {
        report.push_sample(t, m, t.abs().powf(exponent) * h_norm);
    }
    report.fit_top_decade();
    Ok(report)
}

/// Lorentz-index form `L^(l1,z) -> L^(l2,z)`.
pub fn audit_dispersive(
    plan: &SpectralPlan,
    l1: f64,
    l2: f64,
    z: f64,
    h: &RadialField,
    times: &[f64],
) -> Result<EstimateReport> {
    audit_dispersive_indices(plan, LorentzIndex::new(l1, z)?, LorentzIndex::new(l2, z)?, h, times)
}

/// Lebesgue form `L^(p') -> L^p`.
pub fn audit_dispersive_dual(plan: &SpectralPlan, p: f64, h: &RadialField, times: &[f64]) -> Result<EstimateReport> {
    let dual = p / (p - 1.0);
    let mut report = audit_dispersive_indices(plan, LorentzIndex::strong(dual)?, LorentzIndex::strong(p)?, h, times)?;
    report.kind = "dispersive_lp_dual".into();
    Ok(report)
}

/// Integration nodes and weights on `[0, t_max]`: dyadic panels below `t = 1`
/// (down to `2^-DYADIC_LEVELS`), panels of width `1/2` above.
fn graded_rule(t_max: f64) -> Vec<(f64, f64)> {
    const DYADIC_LEVELS: i32 = 40;
    let mut breaks: Vec<f64> = (0..=DYADIC_LEVELS)
        .rev()
        .map(|k| 2f64.powi(-k))
        .filter(|&b| b < t_max)
        .collect();
    let mut b = 1.0;
    while b < t_max {
        b = (b + 0.5).min(t_max);
        breaks.push(b);
    }
    if breaks.last() != Some(&t_max) {
        breaks.push(t_max);
    }
    let mut rule = Vec::with_capacity(8 * breaks.len());
    for w in breaks.windows(2) {
        let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (x, wt) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
            rule.push((mid - half * x, wt * half));
            rule.push((mid + half * x, wt * half));
        }
    }
    rule
}

/// Time-integrated bound `I(T) = int_(-T)^T |t|^(n(1/d1 - 1/d2) - 2) ||W(t) f||_(d2,1) dt`.
///
/// Reports `I(T)`, `I(T) / ||f||_(d1,1)` (as the measured constant), the tail
/// indicator `I(2T)/I(T) - 1` and the two half-line contributions. Points
/// outside the radial triangle are rejected unless `allow_outside` is set.
pub fn audit_yamazaki(
    plan: &SpectralPlan,
    d1: f64,
    d2: f64,
    f: &RadialField,
    t_max: f64,
    allow_outside: bool,
) -> Result<EstimateReport> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("T must be positive, got {t_max}")));
    }
    let n = plan.grid().dimension();
    let pt = ExponentPoint::from_exponents(d1, d2)?;
    let inside = in_region(pt, Region::RadialTriangle, Closure::Closed, n)?;
    if !inside && !allow_outside {
        return Err(Error::Admissibility(format!(
            "(1/d1, 1/d2) = ({}, {}) lies outside the radial triangle P2 P4 P5",
            pt.x, pt.y
        )));
    }
    let weight = yamazaki_exponent(d1, d2, n);
    let target = LorentzIndex::new(d2, 1.0)?;
    let f_norm = lorentz_norm(f, LorentzIndex::new(d1, 1.0)?);
    let spec = plan.forward(f)?;

    let rule = graded_rule(2.0 * t_max);
    let integrand: Vec<(f64, f64)> = rule
        .par_iter()
        .map(|&(t, _)| {
            let at = |s: f64| {
                let w = plan.inverse(&plan.apply(&spec, |rho| crate::propagator::sine_multiplier(s, rho)));
                s.abs().powf(weight) * lorentz_norm(&w, target)
            };
            (at(t), at(-t))
        })
        .collect();
    let (mut pos_t, mut neg_t, mut pos_2t, mut neg_2t) = (0.0, 0.0, 0.0, 0.0);
    for (&(t, w), &(plus, minus)) in rule.iter().zip(&integrand) {
        pos_2t += w * plus;
        neg_2t += w * minus;
        if t <= t_max {
            pos_t += w * plus;
            neg_t += w * minus;
        }
    }
    let (i_t, i_2t) = (pos_t + neg_t, pos_2t + neg_2t);

    let mut report = EstimateReport::new("yamazaki");
    report
        .input("n", n as f64)
        .input("d1", d1)
        .input("d2", d2)
        .input("T", t_max)
        .input("weight_exponent", weight);
    if !inside {
        report.flag("out_of_region");
    }
    report.push_sample(t_max, i_t, f_norm);
    report.extra("integral", i_t);
    report.extra("integral_2T", i_2t);
    report.extra("positive_half", pos_t);
    report.extra("negative_half", neg_t);
    report.extra("data_norm", f_norm);
    let tail = if i_t == 0.0 { 0.0 } else { i_2t / i_t - 1.0 };
    report.extra("tail_ratio", tail);
    Ok(report)
}
