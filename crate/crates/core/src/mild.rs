//! Mild solutions of the semilinear wave equation
//!
//! ```text
//! u_tt - Δu + V1 u = V2 F(u),   V1 = c1 / |x|^2,   V2 = c2 / |x|^b,
//! ```
//!
//! as fixed points of `Φ(v)(t) = Ẇ(t) u0 + W(t) u1 + int_0^t W(t-s) (-V1 v + V2 F(v))(s) ds`,
//! found by Picard iteration in `sup_t ||v(t)||_(r0,inf)`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ModelParams;
use crate::grid::{RadialField, RadialGrid};
use crate::lorentz::{lorentz_norm, LorentzIndex};
use crate::propagator::{sine_multiplier, SpectralPlan, Spectrum};
use crate::time::{simpson_weights, TimeGrid, Trajectory};

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `F(u)`, by default `|u|^(q-1) u`.
#[derive(Clone)]
pub struct Nonlinearity {
    q: f64,
    plugin: Option<Evaluator>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("q", &self.q)
            .field("plugin", &self.plugin.is_some())
            .finish()
    }
}

impl Nonlinearity {
    pub fn power(q: f64) -> Result<Self> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("q must satisfy q > 1, got {q}")));
        }
        Ok(Self { q, plugin: None })
    }

    /// A custom `F` of growth order `q`; must vanish at 0.
    pub fn plugin(q: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let mut nl = Self::power(q)?;
        if f(0.0) != 0.0 {
            return Err(Error::InvalidParameter("a nonlinearity must satisfy F(0) = 0".into()));
        }
        nl.plugin = Some(Arc::new(f));
        Ok(nl)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn eval(&self, u: f64) -> f64 {
        match &self.plugin {
            Some(f) => f(u),
            None => u.abs().powf(self.q - 1.0) * u,
        }
    }

    /// Largest `|F(u) - F(v)| / ((|u|^(q-1) + |v|^(q-1)) |u - v|)` over a fixed
    /// lattice of pairs in `[-amplitude, amplitude]`. A spot check, not a certificate.
    pub fn lipschitz_spot_check(&self, amplitude: f64, points: usize) -> f64 {
        let points = points.max(2);
        let node = |k: usize| amplitude * (2.0 * k as f64 / (points - 1) as f64 - 1.0);
        let mut worst: f64 = 0.0;
        for i in 0..points {
            for j in 0..i {
                let (u, v) = (node(i), node(j));
                let weight = (u.abs().powf(self.q - 1.0) + v.abs().powf(self.q - 1.0)) * (u - v).abs();
                if weight > 0.0 {
                    worst = worst.max((self.eval(u) - self.eval(v)).abs() / weight);
                }
            }
        }
        worst
    }
}

/// Sampled potentials with their weak-norm sizes.
#[derive(Debug, Clone)]
pub struct Potentials {
    pub v1: RadialField,
    pub v2: RadialField,
    /// `||V1||_(n/2, inf)`.
    pub v1_norm: f64,
    /// `||V2||_(n/b, inf)`; infinite when `b = 0` and `c2 != 0`.
    pub v2_norm: f64,
    /// `b = 0`: `V2` is the constant `c2`.
    pub v2_constant: bool,
}

pub fn potential_fields(params: &ModelParams, grid: &Arc<RadialGrid>) -> Result<Potentials> {
    if grid.dimension() != params.n {
        return Err(Error::GridMismatch);
    }
    let n = params.n as f64;
    let (c1, c2, b) = (params.c1, params.c2, params.b);
    let v1 = RadialField::from_values(grid, grid.nodes().iter().map(|r| c1 / (r * r)).collect())?;
    let v2 = RadialField::from_values(grid, grid.nodes().iter().map(|r| c2 / r.powf(b)).collect())?;
    let v1_norm = lorentz_norm(&v1, LorentzIndex::weak(n / 2.0)?);
    let v2_constant = b == 0.0;
    let v2_norm = if v2_constant {
        if c2 == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lorentz_norm(&v2, LorentzIndex::weak(n / b)?)
    };
    Ok(Potentials {
        v1,
        v2,
        v1_norm,
        v2_norm,
        v2_constant,
    })
}

/// Initial data `(u0, u1)`.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub u0: RadialField,
    pub u1: RadialField,
}

impl InitialData {
    pub fn new(u0: RadialField, u1: RadialField) -> Result<Self> {
        if !u0.same_grid(&u1) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { u0, u1 })
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Self {
            u0: RadialField::zeros(grid),
            u1: RadialField::zeros(grid),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            u0: self.u0.scale(factor),
            u1: self.u1.scale(factor),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.u0.is_zero() && self.u1.is_zero()
    }
}

/// Iteration controls for [`MildProblem::picard`].
#[derive(Debug, Clone)]
pub struct PicardOptions {
    /// Stop once `sup_t ||v_(k+1) - v_k||_(r0,inf) <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Defaults to twice the linear evolution's sup norm.
    pub ball_radius: Option<f64>,
    /// Starting iterate; defaults to the linear evolution.
    pub initial: Option<Trajectory>,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            ball_radius: None,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    pub r0: f64,
    pub tol: f64,
    /// `sup_t ||v_k(t)||_(r0,inf)` for every iterate, starting with `v_0`.
    pub sup_weak_norms: Vec<f64>,
    /// `sup_t ||v_(k+1) - v_k||_(r0,inf)`.
    pub increments: Vec<f64>,
    /// `increments[k] / increments[k - 1]`, `k >= 1`.
    pub contraction_ratios: Vec<f64>,
    pub linear_sup_norm: f64,
    pub ball_radius: f64,
    pub inside_ball: bool,
    /// Number of applications of `Φ`.
    pub iterations: usize,
    /// `sup_t ||u - Φ(u)||_(r0,inf)`, recomputed after the loop.
    pub residual: f64,
    pub converged: bool,
    pub v1_norm: f64,
    pub v2_norm: f64,
    /// `max ratio / (||V1|| + ||V2|| ρ^(q-1))`, the run constant `R`; absent if the denominator is 0 or infinite.
    pub lipschitz_constant: Option<f64>,
}

/// A converged fixed point with its diagnostics.
#[derive(Debug, Clone)]
pub struct MildSolution {
    pub trajectory: Trajectory,
    pub diagnostics: SolveDiagnostics,
}

/// Kind of time multiplier applied under a spectral time quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Multiplier {
    /// `W(t_target - s)`.
    Lag,
    /// `W(-s)`.
    SineAtMinusS,
    /// `Ẇ(s)`.
    CosineAtS,
}

/// The fixed-point problem on one spatial plan and time grid.
pub struct MildProblem<'a> {
    plan: &'a SpectralPlan,
    params: ModelParams,
    nonlinearity: Nonlinearity,
    potentials: Potentials,
    data: InitialData,
    times: TimeGrid,
    index: LorentzIndex,
    data_spectra: (Spectrum, Spectrum),
    // lags[l * M + m] = sin(l dt rho_m) / rho_m
    lags: Vec<f64>,
}

impl<'a> MildProblem<'a> {
    pub fn new(
        plan: &'a SpectralPlan,
        params: ModelParams,
        nonlinearity: Nonlinearity,
        data: InitialData,
        times: TimeGrid,
    ) -> Result<Self> {
        let grid = plan.grid();
        data.u0.ensure_on(grid)?;
        data.u1.ensure_on(grid)?;
        if (nonlinearity.q() - params.q).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "nonlinearity order {} differs from q = {}",
                nonlinearity.q(),
                params.q
            )));
        }
        let potentials = potential_fields(&params, grid)?;
        let index = LorentzIndex::weak(params.r0)?;
        let data_spectra = (plan.forward(&data.u0)?, plan.forward(&data.u1)?);
        let freqs = plan.freqs();
        let dt = times.step();
        let mut lags = Vec::with_capacity(times.len() * freqs.len());
        for l in 0..times.len() {
            lags.extend(freqs.iter().map(|&rho| sine_multiplier(l as f64 * dt, rho)));
        }
        Ok(Self {
            plan,
            params,
            nonlinearity,
            potentials,
            data,
            times,
            index,
            data_spectra,
            lags,
        })
    }

    pub fn plan(&self) -> &SpectralPlan {
        self.plan
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn potentials(&self) -> &Potentials {
        &self.potentials
    }

    pub fn data(&self) -> &InitialData {
        &self.data
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    /// The solution-space index `(r0, inf)`.
    pub fn index(&self) -> LorentzIndex {
        self.index
    }

    /// `Ẇ(t_k) u0 + W(t_k) u1` at every node.
    pub fn linear_evolution(&self) -> Trajectory {
        let fields = self
            .times
            .times()
            .par_iter()
            .map(|&t| {
                let spec = self.plan.free_spectrum(t, &self.data_spectra.0, &self.data_spectra.1);
                self.plan.inverse(&spec)
            })
            .collect();
        self.trajectory(fields)
    }

    fn trajectory(&self, fields: Vec<RadialField>) -> Trajectory {
        Trajectory::new(self.times.clone(), fields).expect("fields built on the problem grid")
    }

    fn check(&self, v: &Trajectory) -> Result<()> {
        if v.times() != &self.times {
            return Err(Error::InvalidArgument(
                "trajectory is not on the problem's time grid".into(),
            ));
        }
        v.at(0).ensure_on(self.plan.grid())
    }

    /// `-V1 v + V2 F(v)` at every node.
    pub fn source(&self, v: &Trajectory) -> Result<Trajectory> {
        self.check(v)?;
        let grid = self.plan.grid();
        let (v1, v2) = (self.potentials.v1.values(), self.potentials.v2.values());
        let fields = v
            .fields()
            .iter()
            .enumerate()
            .map(|(node, f)| {
                let values: Vec<f64> = f
                    .values()
                    .iter()
                    .zip(v1.iter().zip(v2))
                    .map(|(&u, (&a, &b))| -a * u + b * self.nonlinearity.eval(u))
                    .collect();
                if values.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Overflow {
                        node,
                        t: self.times.times()[node],
                    });
                }
                RadialField::from_values(grid, values)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.trajectory(fields))
    }

    pub(crate) fn spectra(&self, source: &Trajectory) -> Vec<Spectrum> {
        source
            .fields()
            .par_iter()
            .map(|f| self.plan.forward(f).expect("source on the plan grid"))
            .collect()
    }

    /// `sum_k w_k M_k(rho) f^_k(rho)` over the nodes `from..=to` (either order),
    /// with Simpson weights counted from `from`.
    pub(crate) fn quadrature(
        &self,
        spectra: &[Spectrum],
        target: usize,
        from: usize,
        to: usize,
        multiplier: Multiplier,
    ) -> Spectrum {
        let m = self.plan.freqs().len();
        let mut acc = vec![0.0; m];
        let intervals = from.abs_diff(to);
        if intervals == 0 {
            return Spectrum(acc);
        }
        let origin = self.times.origin() as isize;
        let dt = self.times.step();
        for (k, w) in self.nodes_and_weights(from, to) {
            let f = &spectra[k].0;
            match multiplier {
                Multiplier::Lag => {
                    let lag = target as isize - k as isize;
                    let row = &self.lags[lag.unsigned_abs() * m..][..m];
                    let sign = if lag < 0 { -w } else { w };
                    for ((a, &s), &x) in acc.iter_mut().zip(row).zip(f) {
                        *a += sign * s * x;
                    }
                }
                Multiplier::SineAtMinusS | Multiplier::CosineAtS => {
                    let s = (k as isize - origin) as f64 * dt;
                    for ((a, &rho), &x) in acc.iter_mut().zip(self.plan.freqs()).zip(f) {
                        let mult = if multiplier == Multiplier::CosineAtS {
                            (s * rho).cos()
                        } else {
                            sine_multiplier(-s, rho)
                        };
                        *a += w * mult * x;
                    }
                }
            }
        }
        // integrating toward smaller times flips the orientation
        if to < from {
            acc.iter_mut().for_each(|a| *a = -*a);
        }
        Spectrum(acc)
    }

    /// Simpson nodes and weights for `from..=to`. A single interval borrows
    /// two neighbouring nodes (cubic interpolation) when the grid has them.
    fn nodes_and_weights(&self, from: usize, to: usize) -> Vec<(usize, f64)> {
        let dt = self.times.step();
        let intervals = from.abs_diff(to);
        let step = |k: usize, d: isize| {
            let j = k as isize + if to >= from { d } else { -d };
            (0..self.times.len() as isize).contains(&j).then_some(j as usize)
        };
        if intervals == 1 {
            let c = dt / 24.0;
            if let (Some(a), Some(b)) = (step(to, 1), step(to, 2)) {
                return vec![(from, 9.0 * c), (to, 19.0 * c), (a, -5.0 * c), (b, c)];
            }
            if let (Some(a), Some(b)) = (step(from, -1), step(from, -2)) {
                return vec![(b, c), (a, -5.0 * c), (from, 19.0 * c), (to, 9.0 * c)];
            }
        }
        simpson_weights(intervals, dt)
            .into_iter()
            .enumerate()
            .map(|(i, w)| (if to >= from { from + i } else { from - i }, w))
            .collect()
    }

    /// `int_0^(t_k) W(t_k - s) f(s) ds` by composite Simpson over the nodes between 0 and `t_k`.
    pub fn duhamel_forward(&self, source: &Trajectory, t: f64) -> Result<RadialField> {
        self.check(source)?;
        let k = self.times.index_of(t)?;
        let spectra = self.spectra(source);
        Ok(self
            .plan
            .inverse(&self.quadrature(&spectra, k, self.times.origin(), k, Multiplier::Lag)))
    }

    fn duhamel_all(&self, spectra: &[Spectrum]) -> Vec<RadialField> {
        let origin = self.times.origin();
        (0..self.times.len())
            .into_par_iter()
            .map(|k| {
                self.plan
                    .inverse(&self.quadrature(spectra, k, origin, k, Multiplier::Lag))
            })
            .collect()
    }

    fn phi_with(&self, linear: &Trajectory, v: &Trajectory) -> Result<Trajectory> {
        let source = self.source(v)?;
        let duhamel = self.duhamel_all(&self.spectra(&source));
        let fields = linear
            .fields()
            .iter()
            .zip(&duhamel)
            .map(|(l, d)| l.add(d))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.trajectory(fields))
    }

    /// `Φ(v)`.
    pub fn phi(&self, v: &Trajectory) -> Result<Trajectory> {
        self.phi_with(&self.linear_evolution(), v)
    }

    /// `sup_t ||u(t) - Φ(u)(t)||_(r0,inf)`.
    pub fn residual(&self, u: &Trajectory) -> Result<f64> {
        let image = self.phi(u)?;
        Ok(u.sub(&image)?.sup_norm(self.index))
    }

    pub fn picard(&self, options: PicardOptions) -> Result<MildSolution> {
        let linear = self.linear_evolution();
        let linear_sup_norm = linear.sup_norm(self.index);
        let ball_radius = options.ball_radius.unwrap_or(2.0 * linear_sup_norm);
        if linear_sup_norm > 0.0 && ball_radius <= linear_sup_norm {
            return Err(Error::Precondition(format!(
                "ball radius {ball_radius} must exceed the linear evolution's sup norm {linear_sup_norm}; \
                 enlarge the ball or shrink the data"
            )));
        }
        let mut current = match options.initial {
            Some(v) => {
                self.check(&v)?;
                v
            }
            None => linear.clone(),
        };
        let mut sup_weak_norms = vec![current.sup_norm(self.index)];
        let mut increments = Vec::new();
        let mut contraction_ratios = Vec::new();
        let mut converged = false;

        // zero data and a zero start are a fixed point outright: F(0) = 0
        if self.data.is_zero() && current.is_zero() {
            converged = true;
        }
        while !converged {
            if increments.len() >= options.max_iter {
                return Err(Error::NoConvergence {
                    iterations: increments.len(),
                    increment: increments.last().copied().unwrap_or(f64::NAN),
                });
            }
            let next = self.phi_with(&linear, &current)?;
            let increment = next.sub(&current)?.sup_norm(self.index);
            if let Some(&prev) = increments.last() {
                let ratio = if prev == 0.0 { 0.0 } else { increment / prev };
                contraction_ratios.push(ratio);
                let n = contraction_ratios.len();
                if n >= 3 && contraction_ratios[n - 3..].iter().all(|&r| r >= 1.0) {
                    return Err(Error::NonContraction {
                        ratios: contraction_ratios,
                    });
                }
            }
            increments.push(increment);
            sup_weak_norms.push(next.sup_norm(self.index));
            current = next;
            converged = increment <= options.tol;
        }

        let residual = self.residual(&current)?;
        let inside_ball = linear_sup_norm == 0.0 || sup_weak_norms.iter().all(|&s| s <= ball_radius);
        let size = self.potentials.v1_norm + self.potentials.v2_norm * ball_radius.powf(self.params.q - 1.0);
        let max_ratio = contraction_ratios.iter().copied().fold(0.0, f64::max);
        let lipschitz_constant = (size > 0.0 && size.is_finite()).then(|| max_ratio / size);
        let diagnostics = SolveDiagnostics {
            r0: self.params.r0,
            tol: options.tol,
            sup_weak_norms,
            iterations: increments.len(),
            increments,
            contraction_ratios,
            linear_sup_norm,
            ball_radius,
            inside_ball,
            residual,
            converged: residual <= options.tol.max(1e-14),
            v1_norm: self.potentials.v1_norm,
            v2_norm: self.potentials.v2_norm,
            lipschitz_constant,
        };
        Ok(MildSolution {
            trajectory: current,
            diagnostics,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{derive_params, ParamMode};
    use crate::grid::{make_grid, sample};
    use crate::propagator::PlanOptions;

    #[test]
    fn power_nonlinearity() {
        let f = Nonlinearity::power(3.0).unwrap();
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(-2.0), -8.0);
        let c = f.lipschitz_spot_check(2.0, 41);
        assert!(c > 0.0 && c <= 1.5 + 1e-12, "{c}");
        assert!(Nonlinearity::plugin(2.0, |u| u + 1.0).is_err());
        assert!(Nonlinearity::power(1.0).is_err());
    }

    #[test]
    fn potentials_in_five_dimensions() {
        let grid = make_grid(5, 10.0, 64).unwrap();
        let params = derive_params(5, 3.0, 0.0, 0.0, 0.0, ParamMode::Theorem).unwrap();
        let pot = potential_fields(&params, &grid).unwrap();
        assert!(pot.v1.is_zero() && pot.v1_norm == 0.0 && pot.v2_norm == 0.0 && pot.v2_constant);
        let params = derive_params(5, 3.0, 0.0, 0.0, 2.0, ParamMode::Theorem).unwrap();
        let pot = potential_fields(&params, &grid).unwrap();
        assert!(pot.v2_norm.is_infinite());
        assert!(pot.v2.values().iter().all(|&v| v == 2.0));
    }

    fn small_problem(plan: &SpectralPlan, c: f64) -> MildProblem<'_> {
        let params = derive_params(5, 3.0, 0.5, c, c, ParamMode::Theorem).unwrap();
        let grid = plan.grid();
        let u1 = sample(grid, |r| 0.05 * (-r * r).exp()).unwrap();
        let data = InitialData::new(RadialField::zeros(grid), u1).unwrap();
        let times = TimeGrid::forward(2.0, 16).unwrap();
        MildProblem::new(plan, params, Nonlinearity::power(3.0).unwrap(), data, times).unwrap()
    }

    #[test]
    fn zero_data_is_an_exact_fixed_point() {
        let grid = make_grid(5, 12.0, 96).unwrap();
        let plan = SpectralPlan::new(&grid, PlanOptions::default()).unwrap();
        let problem = small_problem(&plan, 0.01);
        let zero = MildProblem::new(
            &plan,
            problem.params().clone(),
            Nonlinearity::power(3.0).unwrap(),
            InitialData::zeros(&grid),
            problem.times().clone(),
        )
        .unwrap();
        let sol = zero.picard(PicardOptions::default()).unwrap();
        assert!(sol.trajectory.is_zero());
        assert_eq!(sol.diagnostics.iterations, 0);
        assert_eq!(sol.diagnostics.residual, 0.0);
    }

    #[test]
    fn linear_problem_converges_in_one_step() {
        let grid = make_grid(5, 12.0, 96).unwrap();
        let plan = SpectralPlan::new(&grid, PlanOptions::default()).unwrap();
        let problem = small_problem(&plan, 0.0);
        let sol = problem.picard(PicardOptions::default()).unwrap();
        assert_eq!(sol.diagnostics.iterations, 1);
        assert_eq!(sol.trajectory, problem.linear_evolution());
        assert_eq!(sol.diagnostics.residual, 0.0);
    }

    #[test]
    fn small_problem_contracts() {
        let grid = make_grid(5, 12.0, 96).unwrap();
        let plan = SpectralPlan::new(&grid, PlanOptions::default()).unwrap();
        let problem = small_problem(&plan, 0.01);
        let sol = problem.picard(PicardOptions::default()).unwrap();
        let d = &sol.diagnostics;
        assert!(d.converged && d.inside_ball, "{d:?}");
        assert!(d.contraction_ratios.iter().all(|&r| r < 0.5), "{d:?}");
        assert!(problem.residual(&problem.linear_evolution()).unwrap() > 0.0);
    }

    #[test]
    fn small_ball_is_rejected() {
        let grid = make_grid(5, 12.0, 96).unwrap();
        let plan = SpectralPlan::new(&grid, PlanOptions::default()).unwrap();
        let problem = small_problem(&plan, 0.01);
        let lin = problem.linear_evolution().sup_norm(problem.index());
        let opts = PicardOptions {
            ball_radius: Some(0.5 * lin),
            ..PicardOptions::default()
        };
        assert!(matches!(problem.picard(opts), Err(Error::Precondition(_))));
    }

    #[test]
    fn constant_source_matches_closed_form() {
        let grid = make_grid(5, 16.0, 128).unwrap();
        let plan = SpectralPlan::new(&grid, PlanOptions::default()).unwrap();
        let params = derive_params(5, 3.0, 0.0, 0.0, 0.0, ParamMode::Theorem).unwrap();
        let times = TimeGrid::forward(2.0, 128).unwrap();
        let nl = Nonlinearity::power(3.0).unwrap();
        let problem = MildProblem::new(&plan, params, nl, InitialData::zeros(&grid), times).unwrap();
        let g = sample(&grid, |r| (-r * r).exp()).unwrap();
        let source = Trajectory::new(problem.times().clone(), vec![g.clone(); problem.times().len()]).unwrap();
        let spec = plan.forward(&g).unwrap();
        for t in [0.015625, 0.046875, 1.0, 2.0] {
            let got = problem.duhamel_forward(&source, t).unwrap();
            let exact = plan.inverse(&plan.apply(&spec, |rho| crate::propagator::integrated_sine_multiplier(t, rho)));
            let err = got.sub(&exact).unwrap().max_abs() / exact.max_abs();
            assert!(err < 1e-6, "t = {t}: {err}");
        }
    }

    #[test]
    fn halving_the_step_shrinks_the_error() {
        let grid = make_grid(5, 16.0, 128).unwrap();
        let plan = SpectralPlan::new(&grid, PlanOptions::default()).unwrap();
        let g = sample(&grid, |r| (-r * r).exp()).unwrap();
        let exact = plan.inverse(&plan.apply(&plan.forward(&g).unwrap(), |rho| {
            crate::propagator::integrated_sine_multiplier(1.0, rho)
        }));
        let error = |steps: usize| {
            let params = derive_params(5, 3.0, 0.0, 0.0, 0.0, ParamMode::Theorem).unwrap();
            let times = TimeGrid::forward(2.0, steps).unwrap();
            let nl = Nonlinearity::power(3.0).unwrap();
            let problem = MildProblem::new(&plan, params, nl, InitialData::zeros(&grid), times).unwrap();
            let source = Trajectory::new(problem.times().clone(), vec![g.clone(); steps + 1]).unwrap();
            problem
                .duhamel_forward(&source, 1.0)
                .unwrap()
                .sub(&exact)
                .unwrap()
                .max_abs()
        };
        let (coarse, fine) = (error(8), error(16));
        assert!(coarse / fine >= 4.0, "{coarse} vs {fine}");
    }
}
