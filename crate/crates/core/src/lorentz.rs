//! Lorentz quasi-norms of radial fields.
//!
//! Norms are computed from the decreasing rearrangement with the normalization
//!
//! ```text
//! ||f||_(p,z) = ( int_0^inf (t^(1/p) f*(t))^z dt/t )^(1/z),   z < inf
//! ||f||_(p,inf) = sup_t t^(1/p) f*(t)
//! ```
//!
//! A discrete field is a step function in measure (constant on each grid
//! cell), so its rearrangement is a step function too and both formulas have
//! closed forms per step. `z = p` reproduces the `L^p` norm exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::RadialField;
use crate::report::EstimateReport;

/// Index pair `(p, z)` of the Lorentz space `L^(p,z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LorentzIndex {
    p: f64,
    z: f64,
}

impl LorentzIndex {
    pub fn new(p: f64, z: f64) -> Result<Self> {
        let bad = |reason| Err(Error::Index { p, z, reason });
        if p.is_nan() || z.is_nan() {
            return bad("NaN exponent");
        }
        if p <= 1.0 {
            return bad("p must exceed 1");
        }
        if z < 1.0 {
            return bad("z must be at least 1");
        }
        if p.is_infinite() && z.is_finite() {
            return bad("p = inf is only defined with z = inf");
        }
        Ok(Self { p, z })
    }

    /// Weak-`L^p`, i.e. `z = inf`.
    pub fn weak(p: f64) -> Result<Self> {
        Self::new(p, f64::INFINITY)
    }

    /// Strong `L^p`, i.e. `z = p`.
    pub fn strong(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn is_weak(&self) -> bool {
        self.z.is_infinite()
    }
}

/// Decreasing rearrangement of a field: `f*` equals `levels[k]` on
/// `(breakpoints[k], breakpoints[k + 1]]`. Cells with equal `|f|` are merged
/// into one step, so levels are strictly decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementProfile {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
    // step widths summed from cell measures, free of breakpoint cancellation
    widths: Vec<f64>,
}

impl RearrangementProfile {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// `(sum_k (t_k - t_{k-1}) (f*_k)^p)^(1/p)`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.widths
            .iter()
            .zip(&self.levels)
            .map(|(w, level)| w * level.powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    fn steps(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.levels)
            .map(|(w, &level)| (w[0], w[1], level))
    }

    pub fn norm(&self, index: LorentzIndex) -> f64 {
        let (p, z) = (index.p, index.z);
        if p.is_infinite() {
            return self.levels.first().copied().unwrap_or(0.0);
        }
        if z.is_infinite() {
            return self
                .steps()
                .map(|(_, hi, level)| hi.powf(1.0 / p) * level)
                .fold(0.0, f64::max);
        }
        if z == p {
            return self.lp_norm(p);
        }
        // int_lo^hi t^(z/p - 1) dt = (p/z) (hi^(z/p) - lo^(z/p))
        let e = z / p;
        let sum: f64 = self
            .steps()
            .filter(|&(_, _, level)| level > 0.0)
            .map(|(lo, hi, level)| level.powf(z) * (p / z) * (hi.powf(e) - lo.powf(e)))
            .sum();
        sum.powf(1.0 / z)
    }
}

/// `d_f(lambda)`: measure of the cells where `|f| > lambda`.
pub fn distribution_function(field: &RadialField, lambda: f64) -> f64 {
    field
        .values()
        .iter()
        .zip(field.grid().cell_measures())
        .filter(|(v, _)| v.abs() > lambda)
        .map(|(_, m)| m)
        .sum()
}

/// Sorts the cells by decreasing `|f|` and accumulates their measures.
pub fn rearrange(field: &RadialField) -> RearrangementProfile {
    let measures = field.grid().cell_measures();
    let mut cells: Vec<(f64, f64)> = field
        .values()
        .iter()
        .zip(measures)
        .map(|(v, &m)| (v.abs(), m))
        .collect();
    // stable sort keeps equal levels in radial order, so ties are deterministic
    cells.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut levels: Vec<f64> = Vec::new();
    let mut widths: Vec<f64> = Vec::new();
    for (level, m) in cells {
        match levels.last() {
            Some(&last) if last == level => *widths.last_mut().unwrap() += m,
            _ => {
                levels.push(level);
                widths.push(m);
            }
        }
    }
    let mut breakpoints = Vec::with_capacity(levels.len() + 1);
    breakpoints.push(0.0);
    let mut acc = 0.0;
    for w in &widths {
        acc += w;
        breakpoints.push(acc);
    }
    RearrangementProfile {
        breakpoints,
        levels,
        widths,
    }
}

pub fn lorentz_norm(field: &RadialField, index: LorentzIndex) -> f64 {
    rearrange(field).norm(index)
}

/// Shorthand for the weak-`L^p` norm.
pub fn weak_norm(field: &RadialField, p: f64) -> Result<f64> {
    Ok(lorentz_norm(field, LorentzIndex::weak(p)?))
}

/// Closed form `(p/z)^(1/z) |E|^(1/p)` of the `(p, z)` norm of an indicator.
pub fn indicator_norm(measure: f64, index: LorentzIndex) -> f64 {
    let (p, z) = (index.p, index.z);
    let base = measure.powf(1.0 / p);
    if z.is_infinite() {
        base
    } else {
        (p / z).powf(1.0 / z) * base
    }
}

/// If `|f|` takes a single nonzero value, returns that level and the measure of its support.
pub fn indicator_support(field: &RadialField) -> Option<(f64, f64)> {
    let mut level = None;
    let mut measure = 0.0;
    for (v, m) in field.values().iter().zip(field.grid().cell_measures()) {
        let a = v.abs();
        if a == 0.0 {
            continue;
        }
        match level {
            None => level = Some(a),
            Some(l) if l != a => return None,
            _ => {}
        }
        measure += m;
    }
    level.map(|l| (l, measure))
}

/// Exponents of a Hölder audit `||fg||_(p3,r3) <= C ||f||_(p1,r1) ||g||_(p2,r2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderExponents {
    pub first: LorentzIndex,
    pub second: LorentzIndex,
    pub product: LorentzIndex,
}

impl HolderExponents {
    pub fn new(first: LorentzIndex, second: LorentzIndex, product: LorentzIndex) -> Result<Self> {
        let p_gap = 1.0 / product.p - (1.0 / first.p + 1.0 / second.p);
        if p_gap.abs() > 1e-12 {
            return Err(Error::Admissibility(format!(
                "Hölder exponents need 1/p3 = 1/p1 + 1/p2 (off by {p_gap:.3e})"
            )));
        }
        if 1.0 / first.z + 1.0 / second.z < 1.0 / product.z - 1e-12 {
            return Err(Error::Admissibility("Hölder exponents need 1/r1 + 1/r2 >= 1/r3".into()));
        }
        Ok(Self { first, second, product })
    }
}

/// Measures `||fg||_(p3,r3) / (||f||_(p1,r1) ||g||_(p2,r2))`; `0/0` reports 0 with a flag.
pub fn audit_holder(f: &RadialField, g: &RadialField, exponents: HolderExponents) -> Result<EstimateReport> {
    let fg = f.mul(g)?;
    let lhs = lorentz_norm(&fg, exponents.product);
    let rhs = lorentz_norm(f, exponents.first) * lorentz_norm(g, exponents.second);
    let mut report = EstimateReport::new("holder");
    report
        .input("p1", exponents.first.p)
        .input("r1", exponents.first.z)
        .input("p2", exponents.second.p)
        .input("r2", exponents.second.z)
        .input("p3", exponents.product.p)
        .input("r3", exponents.product.z);
    report.push_sample(0.0, lhs, rhs);
    Ok(report)
}

/// Norm pair of the inclusion `L^(p,z1) ⊂ L^(p,z2)` for `z1 <= z2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionReport {
    pub p: f64,
    pub z1: f64,
    pub z2: f64,
    pub norm_z1: f64,
    pub norm_z2: f64,
    /// `norm_z1 / norm_z2`, reported as 0 for the zero field.
    pub ratio: f64,
    /// Closed forms `(p/z)^(1/z) |E|^(1/p)` when the field is an indicator.
    pub closed_form: Option<(f64, f64)>,
}

pub fn audit_inclusion(field: &RadialField, p: f64, z1: f64, z2: f64) -> Result<InclusionReport> {
    if !(z1 >= 1.0 && z1 <= z2) {
        return Err(Error::InvalidArgument(format!(
            "inclusion audit needs 1 <= z1 <= z2, got z1 = {z1}, z2 = {z2}"
        )));
    }
    let (i1, i2) = (LorentzIndex::new(p, z1)?, LorentzIndex::new(p, z2)?);
    let profile = rearrange(field);
    let (norm_z1, norm_z2) = (profile.norm(i1), profile.norm(i2));
    let ratio = if norm_z2 == 0.0 { 0.0 } else { norm_z1 / norm_z2 };
    let closed_form =
        indicator_support(field).map(|(level, m)| (level * indicator_norm(m, i1), level * indicator_norm(m, i2)));
    Ok(InclusionReport {
        p,
        z1,
        z2,
        norm_z1,
        norm_z2,
        ratio,
        closed_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample, unit_ball_volume, RadialGrid};
    use approx::assert_relative_eq;

    fn unit_ball_indicator(n: usize) -> RadialField {
        let g = make_grid(n, 2.0, 64).unwrap();
        sample(&g, |r| if r < 1.0 { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn index_validation() {
        assert!(LorentzIndex::new(1.0, 2.0).is_err());
        assert!(LorentzIndex::new(2.0, 0.5).is_err());
        assert!(LorentzIndex::new(f64::INFINITY, 2.0).is_err());
        assert!(LorentzIndex::new(f64::INFINITY, f64::INFINITY).is_ok());
        assert!(LorentzIndex::new(1.5, 1.0).is_ok());
    }

    #[test]
    fn distribution_of_indicator() {
        let f = unit_ball_indicator(5);
        assert_relative_eq!(
            distribution_function(&f, 0.5),
            8.0 * std::f64::consts::PI.powi(2) / 15.0,
            max_relative = 1e-13
        );
        assert_eq!(distribution_function(&f, 1.0), 0.0);
        assert_eq!(distribution_function(&f, 7.0), 0.0);
    }

    #[test]
    fn distribution_of_inverse_square() {
        let g = make_grid(5, 2.0, 4000).unwrap();
        let f = sample(&g, |r| r.powi(-2)).unwrap();
        assert_relative_eq!(distribution_function(&f, 1.0), unit_ball_volume(5), max_relative = 2e-3);
    }

    #[test]
    fn rearrangement_examples() {
        let g = RadialGrid::new(3, 1.0, 2).unwrap();
        let mu = g.cell_measures().to_vec();
        let f = RadialField::from_values(&g, vec![3.0, -7.0]).unwrap();
        let prof = rearrange(&f);
        assert_eq!(prof.levels(), &[7.0, 3.0]);
        assert_eq!(prof.breakpoints(), &[0.0, mu[1], mu[1] + mu[0]]);

        let c = sample(&g, |_| -2.5).unwrap();
        let prof = rearrange(&c);
        assert_eq!(prof.levels(), &[2.5]);
        assert_relative_eq!(
            *prof.breakpoints().last().unwrap(),
            g.total_measure(),
            max_relative = 1e-15
        );

        let z = rearrange(&RadialField::zeros(&g));
        assert_eq!(z.levels(), &[0.0]);
    }

    #[test]
    fn indicator_norms() {
        let f = unit_ball_indicator(5);
        let e = unit_ball_volume(5);
        let w = lorentz_norm(&f, LorentzIndex::weak(5.0).unwrap());
        assert_relative_eq!(w, e.powf(0.2), max_relative = 1e-12);
        assert_relative_eq!(w, 1.39399, epsilon = 1e-5);
        for (p, z) in [(2.0, 1.0), (3.0, 2.0), (2.5, 2.5), (4.0, 7.0)] {
            let idx = LorentzIndex::new(p, z).unwrap();
            let expect = (p / z).powf(1.0 / z) * e.powf(1.0 / p);
            assert_relative_eq!(lorentz_norm(&f, idx), expect, max_relative = 1e-12);
            assert_relative_eq!(indicator_norm(e, idx), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn midpoint_sampled_power_law_weak_norm() {
        // The innermost cell [0, a_1] carries r_1 = a_1/2, so the sup of
        // t^(1/p) f*(t) is 2^(n/p) omega^(1/p), independent of refinement.
        for (n, p) in [(3usize, 3.0f64), (5, 2.5), (5, 5.0)] {
            let g = make_grid(n, 1.0, 4096).unwrap();
            let f = sample(&g, |r| r.powf(-(n as f64) / p)).unwrap();
            let w = weak_norm(&f, p).unwrap();
            let expect = (2f64.powi(n as i32) * unit_ball_volume(n)).powf(1.0 / p);
            assert_relative_eq!(w, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn inclusion_examples() {
        let f = unit_ball_indicator(3);
        let e = unit_ball_volume(3);
        let rep = audit_inclusion(&f, 2.0, 1.0, f64::INFINITY).unwrap();
        assert_relative_eq!(rep.norm_z1, 2.0 * e.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(rep.norm_z2, e.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(rep.ratio, 2.0, max_relative = 1e-12);
        let (c1, c2) = rep.closed_form.unwrap();
        assert_relative_eq!(c1, rep.norm_z1, max_relative = 1e-12);
        assert_relative_eq!(c2, rep.norm_z2, max_relative = 1e-12);

        let zero = RadialField::zeros(f.grid());
        let rep = audit_inclusion(&zero, 2.0, 1.0, f64::INFINITY).unwrap();
        assert_eq!((rep.norm_z1, rep.norm_z2, rep.ratio), (0.0, 0.0, 0.0));
        assert!(audit_inclusion(&f, 2.0, 3.0, 2.0).is_err());
    }

    #[test]
    fn power_law_strong_norm_grows_with_truncation() {
        let n = 3;
        let p = 3.0;
        let norm_at = |r_max: f64| {
            let g = make_grid(n, r_max, (r_max * 256.0) as usize).unwrap();
            let f = sample(&g, |r| r.powf(-(n as f64) / p)).unwrap();
            (
                lorentz_norm(&f, LorentzIndex::new(p, 2.0).unwrap()),
                weak_norm(&f, p).unwrap(),
            )
        };
        let (s1, w1) = norm_at(4.0);
        let (s2, w2) = norm_at(16.0);
        assert!(s2 > 1.05 * s1, "{s1} {s2}");
        assert_relative_eq!(w1, w2, max_relative = 1e-9);
    }

    #[test]
    fn holder_examples() {
        let f = unit_ball_indicator(5);
        let ex = HolderExponents::new(
            LorentzIndex::weak(4.0).unwrap(),
            LorentzIndex::weak(4.0).unwrap(),
            LorentzIndex::weak(2.0).unwrap(),
        )
        .unwrap();
        let rep = audit_holder(&f, &f, ex).unwrap();
        assert_relative_eq!(rep.measured_constant, 1.0, max_relative = 1e-12);

        let zero = RadialField::zeros(f.grid());
        let rep = audit_holder(&zero, &f, ex).unwrap();
        assert_eq!(rep.measured_constant, 0.0);
        assert!(rep.flags.contains(&"zero_over_zero".to_string()));

        let bad = HolderExponents::new(
            LorentzIndex::weak(4.0).unwrap(),
            LorentzIndex::weak(4.0).unwrap(),
            LorentzIndex::weak(3.0).unwrap(),
        );
        assert!(matches!(bad, Err(Error::Admissibility(_))));
        let bad_z = HolderExponents::new(
            LorentzIndex::weak(4.0).unwrap(),
            LorentzIndex::weak(4.0).unwrap(),
            LorentzIndex::new(2.0, 1.0).unwrap(),
        );
        assert!(matches!(bad_z, Err(Error::Admissibility(_))));
    }

    #[test]
    fn holder_power_laws_multiply() {
        let n = 5;
        let g = make_grid(n, 3.0, 2048).unwrap();
        let (p1, p2) = (5.0, 10.0 / 3.0);
        let p3 = 1.0 / (1.0 / p1 + 1.0 / p2);
        let f = sample(&g, |r| r.powf(-(n as f64) / p1)).unwrap();
        let h = sample(&g, |r| r.powf(-(n as f64) / p2)).unwrap();
        let ex = HolderExponents::new(
            LorentzIndex::weak(p1).unwrap(),
            LorentzIndex::weak(p2).unwrap(),
            LorentzIndex::weak(p3).unwrap(),
        )
        .unwrap();
        let rep = audit_holder(&f, &h, ex).unwrap();
        assert_relative_eq!(rep.measured_constant, 1.0, max_relative = 1e-2);
    }
}
