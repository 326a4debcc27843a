//! Scattering states, defect decay and the polynomial-stability audit.
//!
//! For a mild solution with source `f = -V1 u + V2 F(u)` the free wave
//!
//! ```text
//! u^+(t) = Ẇ(t) u0^+ + W(t) u1^+,   u0^+ = u0 + int_0^T W(-s) f ds,   u1^+ = u1 + int_0^T Ẇ(s) f ds
//! ```
//!
//! equals `Ẇ(t) u0 + W(t) u1 + int_0^T W(t-s) f ds` by the sine addition law, so
//! `u(t) - u^+(t) = int_t^T W(s-t) f ds`. Every improper integral is truncated
//! at the trajectory horizon `T`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::RadialField;
use crate::lorentz::{lorentz_norm, LorentzIndex};
use crate::mild::{MildProblem, MildSolution, Multiplier};
use crate::report::{loglog_slope, EstimateReport};
use crate::time::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn horizon(self, problem: &MildProblem<'_>) -> Result<usize> {
        match self {
            Direction::Forward => Ok(problem.times().len() - 1),
            Direction::Backward if problem.times().is_symmetric() => Ok(0),
            Direction::Backward => Err(Error::InvalidArgument(
                "the backward state needs a symmetric time grid".into(),
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScatteringState {
    pub direction: Direction,
    pub u0_plus: RadialField,
    pub u1_plus: RadialField,
    /// Signed truncation time `±T`.
    pub horizon: f64,
    /// `||u0^+(T) - u0^+(T/2)||_(r0,inf)`.
    pub tail_increment_u0: f64,
    /// `||u1^+(T) - u1^+(T/2)||_(r0,inf)`.
    pub tail_increment_u1: f64,
}

/// `u(t_k) - u^±(t_k)` and the free-wave mismatch of the state at one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefectSample {
    pub t: f64,
    /// `||u(t) - (Ẇ(t) u0^± + W(t) u1^±)||_(r0,inf)`.
    pub direct: f64,
    /// `||int_t^(±T) W(s-t) f(s) ds||_(r0,inf)`.
    pub tail: f64,
}

fn require_solved(problem: &MildProblem<'_>, solution: &MildSolution) -> Result<()> {
    let d = &solution.diagnostics;
    if !d.converged || !(d.residual <= d.tol.max(1e-14)) {
        return Err(Error::Precondition(format!(
            "trajectory is not a solved fixed point (residual {:.3e}, tol {:.1e})",
            d.residual, d.tol
        )));
    }
    if solution.trajectory.times() != problem.times() {
        return Err(Error::Precondition("solution lives on a different time grid".into()));
    }
    Ok(())
}

/// `gamma(f)(t) = int_t^T W(s-t) f(s) ds` (forward) or `int_(-T)^t W(t-s) f(s) ds`
/// (backward); zero at the horizon.
pub fn duhamel_tail(
    problem: &MildProblem<'_>,
    source: &Trajectory,
    t: f64,
    direction: Direction,
) -> Result<RadialField> {
    let k = problem.times().index_of(t)?;
    let horizon = direction.horizon(problem)?;
    if source.times() != problem.times() {
        return Err(Error::InvalidArgument(
            "source is not on the problem's time grid".into(),
        ));
    }
    let origin = problem.times().origin();
    let beyond = match direction {
        Direction::Forward => k < origin,
        Direction::Backward => k > origin,
    };
    if beyond {
        return Err(Error::InvalidArgument(format!(
            "t = {t} lies on the other side of t = 0"
        )));
    }
    let spectra = problem.spectra(source);
    let spec = problem.quadrature(&spectra, k, horizon, k, Multiplier::Lag);
    Ok(problem.plan().inverse(&spec))
}

fn state_at(
    problem: &MildProblem<'_>,
    spectra: &[crate::propagator::Spectrum],
    end: usize,
) -> Result<(RadialField, RadialField)> {
    let origin = problem.times().origin();
    let plan = problem.plan();
    let d0 = plan.inverse(&problem.quadrature(spectra, end, origin, end, Multiplier::SineAtMinusS));
    let d1 = plan.inverse(&problem.quadrature(spectra, end, origin, end, Multiplier::CosineAtS));
    Ok((problem.data().u0.add(&d0)?, problem.data().u1.add(&d1)?))
}

pub fn scattering_state(
    problem: &MildProblem<'_>,
    solution: &MildSolution,
    direction: Direction,
) -> Result<ScatteringState> {
    require_solved(problem, solution)?;
    let horizon = direction.horizon(problem)?;
    let origin = problem.times().origin();
    let half = (origin + horizon) / 2;
    let source = problem.source(&solution.trajectory)?;
    let spectra = problem.spectra(&source);
    let (u0_plus, u1_plus) = state_at(problem, &spectra, horizon)?;
    let (u0_half, u1_half) = state_at(problem, &spectra, half)?;
    let index = problem.index();
    Ok(ScatteringState {
        direction,
        tail_increment_u0: lorentz_norm(&u0_plus.sub(&u0_half)?, index),
        tail_increment_u1: lorentz_norm(&u1_plus.sub(&u1_half)?, index),
        u0_plus,
        u1_plus,
        horizon: problem.times().times()[horizon],
    })
}

/// Direct and tail forms of `||u(t) - u^±(t)||_(r0,inf)` at one node.
pub fn scattering_defect(
    problem: &MildProblem<'_>,
    solution: &MildSolution,
    state: &ScatteringState,
    t: f64,
) -> Result<(f64, f64)> {
    let k = problem.times().index_of(t)?;
    let samples = defect_samples(problem, solution, state, &[k])?;
    Ok((samples[0].direct, samples[0].tail))
}

/// Defects at every node on the state's side of `t = 0`, in time order.
pub fn defect_profile(
    problem: &MildProblem<'_>,
    solution: &MildSolution,
    state: &ScatteringState,
) -> Result<Vec<DefectSample>> {
    let origin = problem.times().origin();
    let nodes: Vec<usize> = match state.direction {
        Direction::Forward => (origin..problem.times().len()).collect(),
        Direction::Backward => (0..=origin).collect(),
    };
    defect_samples(problem, solution, state, &nodes)
}

fn defect_samples(
    problem: &MildProblem<'_>,
    solution: &MildSolution,
    state: &ScatteringState,
    nodes: &[usize],
) -> Result<Vec<DefectSample>> {
    require_solved(problem, solution)?;
    let horizon = state.direction.horizon(problem)?;
    let plan = problem.plan();
    let source = problem.source(&solution.trajectory)?;
    let spectra = problem.spectra(&source);
    let (s0, s1) = (plan.forward(&state.u0_plus)?, plan.forward(&state.u1_plus)?);
    let index = problem.index();
    nodes
        .par_iter()
        .map(|&k| {
            let t = problem.times().times()[k];
            let free = plan.inverse(&plan.free_spectrum(t, &s0, &s1));
            let direct = lorentz_norm(&solution.trajectory.at(k).sub(&free)?, index);
            let tail_field = plan.inverse(&problem.quadrature(&spectra, k, horizon, k, Multiplier::Lag));
            Ok(DefectSample {
                t,
                direct,
                tail: lorentz_norm(&tail_field, index),
            })
        })
        .collect()
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("h must lie in (0, 1), got {h}")))
    }
}

/// Measures `t^h ||int_0^t W(t-τ) f(τ) dτ||_(r0,inf) / sup_τ τ^h ||f(τ)||_(s,inf)`
/// on the forward nodes. The sup of the ratio is the empirical constant; the
/// `[0, t/2]` and `[t/2, t]` pieces are reported separately.
pub fn audit_weighted_duhamel(
    problem: &MildProblem<'_>,
    source: &Trajectory,
    h: f64,
    r0: f64,
    s: f64,
) -> Result<EstimateReport> {
    check_h(h)?;
    if source.times() != problem.times() {
        return Err(Error::InvalidArgument(
            "source is not on the problem's time grid".into(),
        ));
    }
    let (solution_index, source_index) = (LorentzIndex::weak(r0)?, LorentzIndex::weak(s)?);
    let times = problem.times();
    let origin = times.origin();
    let forward: Vec<usize> = (origin + 1..times.len()).collect();
    let t_of = |k: usize| times.times()[k];

    let source_sup = forward
        .iter()
        .map(|&k| t_of(k).powf(h) * lorentz_norm(source.at(k), source_index))
        .fold(0.0, f64::max);
    let spectra = problem.spectra(source);
    let plan = problem.plan();
    let pieces: Vec<(f64, f64, f64)> = forward
        .par_iter()
        .map(|&k| {
            let mid = origin + (k - origin) / 2;
            let early = problem.quadrature(&spectra, k, origin, mid, Multiplier::Lag);
            let late = problem.quadrature(&spectra, k, mid, k, Multiplier::Lag);
            let total: Vec<f64> = early.0.iter().zip(&late.0).map(|(a, b)| a + b).collect();
            let norm = |spec| lorentz_norm(&plan.inverse(&spec), solution_index);
            let w = t_of(k).powf(h);
            (
                w * norm(crate::propagator::Spectrum(total)),
                w * norm(early),
                w * norm(late),
            )
        })
        .collect();

    let mut report = EstimateReport::new("weighted_duhamel");
    report
        .input("h", h)
        .input("r0", r0)
        .input("s", s)
        .input("t_max", times.t_max());
    let (mut first, mut second) = (0.0f64, 0.0f64);
    for (&k, &(total, early, late)) in forward.iter().zip(&pieces) {
        report.push_sample(t_of(k), total, source_sup);
        if source_sup > 0.0 {
            first = first.max(early / source_sup);
            second = second.max(late / source_sup);
        }
    }
    report.extra("source_weighted_sup", source_sup);
    report.extra("split_first_half", first);
    report.extra("split_second_half", second);
    if h > 0.9 {
        report.flag("h_near_one");
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Decaying,
    NotDecaying,
    /// Identically zero on every sample.
    Vanishing,
}

impl Verdict {
    pub fn tends_to_zero(self) -> bool {
        !matches!(self, Verdict::NotDecaying)
    }
}

/// Thresholds of a decay verdict: the last-decade slope must be at most
/// `max_slope` and the final value at most `max_ratio` times the value at `reference_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayThresholds {
    pub max_slope: f64,
    pub max_ratio: f64,
    pub reference_t: f64,
}

impl Default for DecayThresholds {
    fn default() -> Self {
        Self {
            max_slope: -0.2,
            max_ratio: 0.1,
            reference_t: 1.0,
        }
    }
}

/// Weighted time series with its decay verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedSeries {
    pub values: Vec<f64>,
    pub slope: Option<f64>,
    /// Final value over the value at the reference time.
    pub drop: Option<f64>,
    pub verdict: Verdict,
}

fn classify(times: &[f64], values: Vec<f64>, th: DecayThresholds) -> WeightedSeries {
    if values.iter().all(|&v| v == 0.0) {
        return WeightedSeries {
            values,
            slope: None,
            drop: None,
            verdict: Verdict::Vanishing,
        };
    }
    let t_last = times[times.len() - 1];
    let window: Vec<(f64, f64)> = times
        .iter()
        .zip(&values)
        .filter(|(t, _)| **t >= t_last / 10.0)
        .map(|(t, v)| (*t, *v))
        .collect();
    let slope = loglog_slope(&window);
    let reference = times
        .iter()
        .position(|&t| t >= th.reference_t - 1e-12)
        .map(|k| values[k]);
    let drop = reference.filter(|&r| r > 0.0).map(|r| values[values.len() - 1] / r);
    let decaying = matches!(slope, Some(s) if s <= th.max_slope) && matches!(drop, Some(d) if d <= th.max_ratio);
    WeightedSeries {
        values,
        slope,
        drop,
        verdict: if decaying {
            Verdict::Decaying
        } else {
            Verdict::NotDecaying
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub h: f64,
    pub thresholds: DecayThresholds,
    /// Sample times (`t > 0`).
    pub times: Vec<f64>,
    /// `t^h ||Ẇ(t)(u0 - ũ0) + W(t)(u1 - ũ1)||_(r0,inf)`.
    pub weighted_linear: WeightedSeries,
    /// `t^h ||u(t) - ũ(t)||_(r0,inf)`.
    pub weighted_difference: WeightedSeries,
    /// Both sides reach the same limit verdict.
    pub iff_holds: bool,
}

/// Compares the weighted decay of the data difference and of the solution difference.
pub fn stability_check(
    problem: &MildProblem<'_>,
    solution: &MildSolution,
    other_problem: &MildProblem<'_>,
    other_solution: &MildSolution,
    h: f64,
    thresholds: DecayThresholds,
) -> Result<StabilityReport> {
    check_h(h)?;
    require_solved(problem, solution)?;
    require_solved(other_problem, other_solution)?;
    if problem.times() != other_problem.times() {
        return Err(Error::InvalidArgument("solutions on different time grids".into()));
    }
    let plan = problem.plan();
    let du0 = problem.data().u0.sub(&other_problem.data().u0)?;
    let du1 = problem.data().u1.sub(&other_problem.data().u1)?;
    let (s0, s1) = (plan.forward(&du0)?, plan.forward(&du1)?);
    let diff = solution.trajectory.sub(&other_solution.trajectory)?;
    let index = problem.index();
    let times = problem.times();
    let nodes: Vec<usize> = (times.origin() + 1..times.len()).collect();
    let pairs: Vec<(f64, f64)> = nodes
        .par_iter()
        .map(|&k| {
            let t = times.times()[k];
            let w = t.powf(h);
            let lin = plan.inverse(&plan.free_spectrum(t, &s0, &s1));
            (w * lorentz_norm(&lin, index), w * lorentz_norm(diff.at(k), index))
        })
        .collect();
    let ts: Vec<f64> = nodes.iter().map(|&k| times.times()[k]).collect();
    let weighted_linear = classify(&ts, pairs.iter().map(|p| p.0).collect(), thresholds);
    let weighted_difference = classify(&ts, pairs.iter().map(|p| p.1).collect(), thresholds);
    let iff_holds = weighted_linear.verdict.tends_to_zero() == weighted_difference.verdict.tends_to_zero();
    Ok(StabilityReport {
        h,
        thresholds,
        times: ts,
        weighted_linear,
        weighted_difference,
        iff_holds,
    })
}

/// Fits the decay exponent of `||u(t) - u^+(t)||_(r0,inf)` over `[lo, hi]`
/// and compares it with `-h`. The slope is reported as `fitted_slope`.
pub fn improved_decay(
    problem: &MildProblem<'_>,
    solution: &MildSolution,
    state: &ScatteringState,
    h: f64,
    window: (f64, f64),
) -> Result<EstimateReport> {
    check_h(h)?;
    let profile = defect_profile(problem, solution, state)?;
    let mut report = EstimateReport::new("improved_decay");
    report
        .input("h", h)
        .input("window_lo", window.0)
        .input("window_hi", window.1)
        .input("t_max", problem.times().t_max());

    // precondition: t^h ||Ẇ(t) u0 + W(t) u1|| -> 0
    let linear = problem.linear_evolution();
    let origin = problem.times().origin();
    let ts: Vec<f64> = problem.times().times()[origin + 1..].to_vec();
    let weighted: Vec<f64> = linear.norms(problem.index())[origin + 1..]
        .iter()
        .zip(&ts)
        .map(|(n, t)| t.powf(h) * n)
        .collect();
    let pre = classify(&ts, weighted, DecayThresholds::default());
    if let Some(slope) = pre.slope {
        report.extra("linear_weighted_slope", slope);
    }
    if !pre.verdict.tends_to_zero() {
        report.flag("precondition_not_verified");
    }

    for s in profile.iter().filter(|s| s.t > 0.0) {
        report.push_sample(s.t, s.direct, s.t.powf(-h));
    }
    if profile.iter().all(|s| s.direct == 0.0) {
        report.flag("trivial_zero_defect");
        report.slope_window = Some(window);
        return Ok(report);
    }
    if let Some(slope) = report.fit_slope(window.0, window.1) {
        report.extra("exponent_margin", -h + 0.1 - slope);
        if slope > -h + 0.1 {
            report.flag("decay_slower_than_claimed");
        }
    }
    Ok(report)
}
