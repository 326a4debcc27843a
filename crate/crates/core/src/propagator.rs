//! Free wave group on radial fields.
//!
//! `W(t) = sin(tD)/D` and `Ẇ(t) = cos(tD)`, `D = sqrt(-Δ)`, act as Fourier
//! multipliers in the radial frequency `rho`. A [`SpectralPlan`] holds a dense
//! table of the radial Fourier kernel between the spatial nodes and a
//! midpoint frequency grid on `(0, rho_max]`.
//!
//! Both directions use plain midpoint weights (`|S^{n-1}| r^{n-1} dr` and
//! `|S^{n-1}| rho^{n-1} drho / (2 pi)^n`). For odd `n` the integrands extend to
//! even functions of `r` and `rho`, so the midpoint rule converges spectrally
//! for smooth data that has decayed at `r_max` and `rho_max`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{unit_sphere_area, RadialField, RadialGrid};
use crate::kernel::RadialKernel;

/// Default round-trip tolerance of the plan self-test.
pub const ROUND_TRIP_TOLERANCE: f64 = 1e-8;

const PAR_THRESHOLD: usize = 1 << 16;

/// Frequency-grid options; `None` picks the defaults `M = N`, `rho_max = pi / (2h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    pub freq_nodes: Option<usize>,
    pub rho_max: Option<f64>,
    pub tolerance: f64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            freq_nodes: None,
            rho_max: None,
            tolerance: ROUND_TRIP_TOLERANCE,
        }
    }
}

/// Radial Fourier coefficients of a field on the plan's frequency nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum(pub Vec<f64>);

impl Spectrum {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// `sin(t rho) / rho`, with the removable value `t` at `rho = 0`.
pub fn sine_multiplier(t: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        t
    } else {
        (t * rho).sin() / rho
    }
}

/// `int_0^t sin(tau rho)/rho dtau = (1 - cos(t rho)) / rho^2`, `t^2/2` at `rho = 0`.
pub fn integrated_sine_multiplier(t: f64, rho: f64) -> f64 {
    let x = t * rho;
    if x.abs() < 1e-4 {
        // 1 - cos x = x^2/2 - x^4/24 + ...
        t * t * (0.5 - x * x / 24.0)
    } else {
        2.0 * (0.5 * x).sin().powi(2) / (rho * rho)
    }
}

#[derive(Debug, Clone)]
pub struct SpectralPlan {
    grid: Arc<RadialGrid>,
    freqs: Vec<f64>,
    // kernel[j * N + i] = K(rho_j r_i)
    kernel: Vec<f64>,
    space_weights: Vec<f64>,
    freq_weights: Vec<f64>,
    round_trip_error: f64,
}

impl SpectralPlan {
    /// Builds the kernel tables and verifies the round trip on a Gaussian
    /// probe `exp(-(8 r / r_max)^2)`.
    pub fn new(grid: &Arc<RadialGrid>, options: PlanOptions) -> Result<Self> {
        let n_space = grid.len();
        let n_freq = options.freq_nodes.unwrap_or(n_space);
        if n_freq == 0 {
            return Err(Error::InvalidArgument("need at least one frequency node".into()));
        }
        let rho_max = options.rho_max.unwrap_or(PI / (2.0 * grid.step()));
        if !(rho_max > 0.0 && rho_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rho_max must be positive, got {rho_max}"
            )));
        }
        let n = grid.dimension();
        let sigma = unit_sphere_area(n);
        let h = grid.step();
        let d_rho = rho_max / n_freq as f64;
        let freqs: Vec<f64> = (0..n_freq).map(|j| (j as f64 + 0.5) * d_rho).collect();
        let space_weights = grid.nodes().iter().map(|r| sigma * r.powi(n as i32 - 1) * h).collect();
        let scale = sigma * d_rho / (2.0 * PI).powi(n as i32);
        let freq_weights = freqs.iter().map(|rho| scale * rho.powi(n as i32 - 1)).collect();

        let k = RadialKernel::new(n);
        let nodes = grid.nodes();
        let mut kernel = vec![0.0; n_freq * n_space];
        kernel
            .par_chunks_mut(n_space)
            .zip(freqs.par_iter())
            .for_each(|(row, &rho)| {
                for (slot, &r) in row.iter_mut().zip(nodes) {
                    *slot = k.eval(rho * r);
                }
            });

        let mut plan = Self {
            grid: Arc::clone(grid),
            freqs,
            kernel,
            space_weights,
            freq_weights,
            round_trip_error: 0.0,
        };
        let width = grid.r_max() / 8.0;
        let probe = RadialField::from_raw(grid, nodes.iter().map(|r| (-(r / width).powi(2)).exp()).collect());
        let back = plan.inverse(&plan.forward(&probe)?);
        let err = back
            .values()
            .iter()
            .zip(probe.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / probe.max_abs();
        if !(err <= options.tolerance) {
            return Err(Error::PlanConstruction {
                achieved: err,
                limit: options.tolerance,
            });
        }
        plan.round_trip_error = err;
        Ok(plan)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn rho_max(&self) -> f64 {
        let m = self.freqs.len() as f64;
        self.freqs[0] * 2.0 * m
    }

    pub fn round_trip_error(&self) -> f64 {
        self.round_trip_error
    }

    pub fn forward(&self, field: &RadialField) -> Result<Spectrum> {
        field.ensure_on(&self.grid)?;
        let weighted: Vec<f64> = field
            .values()
            .iter()
            .zip(&self.space_weights)
            .map(|(f, w)| f * w)
            .collect();
        let n = self.grid.len();
        let dot = |row: &[f64]| row.iter().zip(&weighted).map(|(k, f)| k * f).sum::<f64>();
        let values = if self.kernel.len() >= PAR_THRESHOLD {
            self.kernel.par_chunks(n).map(dot).collect()
        } else {
            self.kernel.chunks(n).map(dot).collect()
        };
        Ok(Spectrum(values))
    }

    pub fn inverse(&self, spectrum: &Spectrum) -> RadialField {
        assert_eq!(spectrum.0.len(), self.freqs.len(), "spectrum from a different plan");
        let n = self.grid.len();
        let coeffs: Vec<f64> = spectrum.0.iter().zip(&self.freq_weights).map(|(s, w)| s * w).collect();
        // each output entry sums over rows in a fixed order, whatever the chunking
        let accumulate = |(start, out): (usize, &mut [f64])| {
            let len = out.len();
            for (row, &c) in self.kernel.chunks(n).zip(&coeffs) {
                if c == 0.0 {
                    continue;
                }
                for (o, k) in out.iter_mut().zip(&row[start..start + len]) {
                    *o += c * k;
                }
            }
        };
        let mut values = vec![0.0; n];
        if self.kernel.len() >= PAR_THRESHOLD {
            let chunk = 64;
            values
                .par_chunks_mut(chunk)
                .enumerate()
                .map(|(b, out)| (b * chunk, out))
                .for_each(accumulate);
        } else {
            accumulate((0, &mut values[..]));
        }
        RadialField::from_raw(&self.grid, values)
    }

    /// Multiplies a spectrum pointwise by `m(rho)`.
    pub fn apply(&self, spectrum: &Spectrum, m: impl Fn(f64) -> f64) -> Spectrum {
        Spectrum(spectrum.0.iter().zip(&self.freqs).map(|(s, &rho)| s * m(rho)).collect())
    }

    /// `W(t) h = sin(tD)/D h`.
    pub fn propagate_w(&self, t: f64, h: &RadialField) -> Result<RadialField> {
        let spec = self.forward(h)?;
        Ok(self.inverse(&self.apply(&spec, |rho| sine_multiplier(t, rho))))
    }

    /// `Ẇ(t) h = cos(tD) h`.
    pub fn propagate_wdot(&self, t: f64, h: &RadialField) -> Result<RadialField> {
        let spec = self.forward(h)?;
        Ok(self.inverse(&self.apply(&spec, |rho| (t * rho).cos())))
    }

    /// Spectrum of `Ẇ(t) u0 + W(t) u1` from the data spectra.
    pub fn free_spectrum(&self, t: f64, u0: &Spectrum, u1: &Spectrum) -> Spectrum {
        Spectrum(
            self.freqs
                .iter()
                .zip(u0.0.iter().zip(&u1.0))
                .map(|(&rho, (a, b))| (t * rho).cos() * a + sine_multiplier(t, rho) * b)
                .collect(),
        )
    }

    /// Per-mode energy `rho^2 |û(t)|^2 + |∂_t û(t)|^2` of the free wave with data spectra.
    pub fn mode_energy(&self, t: f64, u0: &Spectrum, u1: &Spectrum) -> Vec<f64> {
        self.freqs
            .iter()
            .zip(u0.0.iter().zip(&u1.0))
            .map(|(&rho, (&a, &b))| {
                let (s, c) = (t * rho).sin_cos();
                let u = c * a + s / rho * b;
                let ut = -rho * s * a + c * b;
                rho * rho * u * u + ut * ut
            })
            .collect()
    }
}

/// Exact radial free wave in three dimensions via `v = r u` and d'Alembert's formula:
///
/// ```text
/// u(t, r) = [g~(r+t) + g~(r-t)] / (2r) + (1/(2r)) int_{r-t}^{r+t} k~(s) ds
/// ```
///
/// with `g(s) = s u0(s)`, `k(s) = s u1(s)` and `~` the odd extension.
pub struct Oracle3d<'a> {
    u0: &'a dyn Fn(f64) -> f64,
    u1: &'a dyn Fn(f64) -> f64,
}

impl<'a> Oracle3d<'a> {
    pub fn new(u0: &'a dyn Fn(f64) -> f64, u1: &'a dyn Fn(f64) -> f64) -> Self {
        Self { u0, u1 }
    }

    fn odd(&self, f: &dyn Fn(f64) -> f64, s: f64) -> f64 {
        // s f(|s|) is already odd in s
        s * f(s.abs())
    }

    pub fn eval(&self, t: f64, r: f64) -> f64 {
        let g = |s: f64| self.odd(self.u0, s);
        let k = |s: f64| self.odd(self.u1, s);
        let travelling = g(r + t) + g(r - t);
        let integral = gauss_legendre(&k, r - t, r + t);
        (travelling + integral) / (2.0 * r)
    }
}

/// `oracle_3d` for fields: trapezoid rule on linearly interpolated samples.
pub fn oracle_3d_fields(t: f64, u0: &RadialField, u1: &RadialField, r: f64) -> Result<f64> {
    if u0.grid().dimension() != 3 || u1.grid().dimension() != 3 {
        return Err(Error::InvalidDimension(
            u0.grid().dimension().max(u1.grid().dimension()),
        ));
    }
    if !u0.same_grid(u1) {
        return Err(Error::GridMismatch);
    }
    let interp = |f: &RadialField, s: f64| interpolate(f, s);
    let f0 = |s: f64| interp(u0, s);
    let f1 = |s: f64| interp(u1, s);
    let g = |s: f64| s * f0(s.abs());
    let k = |s: f64| s * f1(s.abs());
    let h = u0.grid().step();
    let (a, b) = (r - t, r + t);
    let panels = (((b - a).abs() / h).ceil() as usize).max(1);
    let dx = (b - a) / panels as f64;
    let mut integral = 0.5 * (k(a) + k(b));
    for i in 1..panels {
        integral += k(a + i as f64 * dx);
    }
    integral *= dx;
    Ok((g(r + t) + g(r - t) + integral) / (2.0 * r))
}

fn interpolate(f: &RadialField, s: f64) -> f64 {
    let nodes = f.grid().nodes();
    let v = f.values();
    if s <= nodes[0] {
        return v[0];
    }
    if s >= f.grid().r_max() {
        return 0.0;
    }
    let h = f.grid().step();
    let pos = s / h - 0.5;
    let i = pos.floor() as usize;
    if i + 1 >= nodes.len() {
        return v[nodes.len() - 1];
    }
    let w = pos - i as f64;
    (1.0 - w) * v[i] + w * v[i + 1]
}

/// Positive nodes of the 8-point Gauss-Legendre rule on `[-1, 1]`.
pub(crate) const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
pub(crate) const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Composite 8-point Gauss-Legendre rule with panels no wider than 0.05.
pub(crate) fn gauss_legendre(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let panels = (((b - a).abs() / 0.05).ceil() as usize).max(1);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        let mut s = 0.0;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
            s += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += s * half;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample};

    fn gaussian_oracle(t: f64, r: f64) -> f64 {
        ((-(r - t).powi(2)).exp() - (-(r + t).powi(2)).exp()) / (4.0 * r)
    }

    #[test]
    fn oracle_closed_form() {
        let zero = |_: f64| 0.0;
        let gauss = |r: f64| (-r * r).exp();
        let o = Oracle3d::new(&zero, &gauss);
        let v = o.eval(1.0, 1.0);
        assert!((v - (1.0 - (-4.0f64).exp()) / 4.0).abs() < 1e-13);
        assert!((v - 0.2454211).abs() < 1e-7);
        for (t, r) in [(0.5, 0.3), (2.0, 0.7), (3.0, 5.0)] {
            assert!((o.eval(t, r) - gaussian_oracle(t, r)).abs() < 1e-13);
        }
        // r - t < 0 uses the odd extension and stays finite near the origin
        assert!(o.eval(2.0, 1e-6).is_finite());
    }

    #[test]
    fn oracle_initial_position() {
        let bump = |r: f64| (-(r - 1.0).powi(2)).exp() * (1.0 + r);
        let zero = |_: f64| 0.0;
        let o = Oracle3d::new(&bump, &zero);
        for r in [0.2, 1.0, 3.3] {
            assert!((o.eval(0.0, r) - bump(r)).abs() < 1e-14);
        }
    }

    #[test]
    fn field_oracle_requires_three_dimensions() {
        let g = make_grid(5, 4.0, 32).unwrap();
        let f = RadialField::zeros(&g);
        assert!(matches!(
            oracle_3d_fields(1.0, &f, &f, 1.0),
            Err(Error::InvalidDimension(5))
        ));
        let g3 = make_grid(3, 12.0, 4096).unwrap();
        let u0 = RadialField::zeros(&g3);
        let u1 = sample(&g3, |r| (-r * r).exp()).unwrap();
        let v = oracle_3d_fields(1.0, &u0, &u1, 1.0).unwrap();
        assert!((v - 0.2454211).abs() < 1e-5, "{v}");
    }

    #[test]
    fn round_trip_and_zero_field() {
        let g = make_grid(3, 20.0, 512).unwrap();
        let plan = SpectralPlan::new(&g, PlanOptions::default()).unwrap();
        assert!(plan.round_trip_error() <= 1e-8);
        let z = RadialField::zeros(&g);
        assert!(plan.inverse(&plan.forward(&z).unwrap()).is_zero());
    }

    #[test]
    fn undersampled_frequencies_fail_the_self_test() {
        let g = make_grid(3, 20.0, 512).unwrap();
        let opts = PlanOptions {
            freq_nodes: Some(100),
            ..PlanOptions::default()
        };
        assert!(matches!(
            SpectralPlan::new(&g, opts),
            Err(Error::PlanConstruction { .. })
        ));
    }

    #[test]
    fn w_at_zero_and_linearity() {
        let g = make_grid(5, 16.0, 256).unwrap();
        let plan = SpectralPlan::new(&g, PlanOptions::default()).unwrap();
        let h = sample(&g, |r| (-r * r).exp()).unwrap();
        assert!(plan.propagate_w(0.0, &h).unwrap().is_zero());
        let a = plan.propagate_w(1.3, &h.scale(2.5)).unwrap();
        let b = plan.propagate_w(1.3, &h).unwrap().scale(2.5);
        let diff = a.sub(&b).unwrap().max_abs();
        assert!(diff <= 1e-14 * b.max_abs(), "{diff}");
        let same = plan.propagate_wdot(0.0, &h).unwrap();
        assert!(same.sub(&h).unwrap().max_abs() <= 1e-8 * h.max_abs());
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let plan = SpectralPlan::new(&make_grid(3, 8.0, 128).unwrap(), PlanOptions::default()).unwrap();
        let other = RadialField::zeros(&make_grid(3, 9.0, 128).unwrap());
        assert_eq!(plan.propagate_w(1.0, &other).unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn matches_three_dimensional_oracle() {
        let g = make_grid(3, 20.0, 1024).unwrap();
        let plan = SpectralPlan::new(&g, PlanOptions::default()).unwrap();
        let u1 = sample(&g, |r| (-r * r).exp()).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let u = plan.propagate_w(t, &u1).unwrap();
            let exact = sample(&g, |r| gaussian_oracle(t, r)).unwrap();
            let err = u.sub(&exact).unwrap().max_abs() / exact.max_abs();
            assert!(err < 1e-6, "t = {t}: {err:e}");
            // time derivative of the closed form
            let ut = plan.propagate_wdot(t, &u1).unwrap();
            let dexact = sample(&g, |r| {
                (2.0 * (r - t) * (-(r - t).powi(2)).exp() + 2.0 * (r + t) * (-(r + t).powi(2)).exp()) / (4.0 * r)
            })
            .unwrap();
            let err = ut.sub(&dexact).unwrap().max_abs() / dexact.max_abs();
            assert!(err < 1e-6, "t = {t}: {err:e}");
        }
    }

    #[test]
    fn multiplier_limits() {
        assert_eq!(sine_multiplier(3.0, 0.0), 3.0);
        assert!((integrated_sine_multiplier(2.0, 0.0) - 2.0).abs() < 1e-15);
        let (t, rho) = (1.7f64, 2.3f64);
        let exact = (1.0 - (t * rho).cos()) / (rho * rho);
        assert!((integrated_sine_multiplier(t, rho) - exact).abs() < 1e-15);
        assert!((integrated_sine_multiplier(t, 1e-6) - t * t / 2.0).abs() < 1e-12);
    }
}
