//! Uniform time grids, Simpson weights and trajectories.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::RadialField;
use crate::lorentz::{lorentz_norm, LorentzIndex};

/// Uniform nodes `t_k = (k - origin) * step`, either `[0, T]` or `[-T, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    origin: usize,
    step: f64,
}

impl TimeGrid {
    /// `steps + 1` nodes on `[0, t_max]`.
    pub fn forward(t_max: f64, steps: usize) -> Result<Self> {
        Self::build(t_max, steps, false)
    }

    /// `2 steps + 1` nodes on `[-t_max, t_max]` with `t = 0` in the middle.
    pub fn symmetric(t_max: f64, steps: usize) -> Result<Self> {
        Self::build(t_max, steps, true)
    }

    fn build(t_max: f64, steps: usize, symmetric: bool) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("need at least one time step".into()));
        }
        let step = t_max / steps as f64;
        let origin = if symmetric { steps } else { 0 };
        let count = origin + steps + 1;
        let times = (0..count)
            .map(|k| {
                let i = k as f64 - origin as f64;
                // exact endpoints
                if k + 1 == count {
                    t_max
                } else if k == 0 && symmetric {
                    -t_max
                } else {
                    i * step
                }
            })
            .collect();
        Ok(Self { times, origin, step })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the node `t = 0`.
    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn is_symmetric(&self) -> bool {
        self.origin > 0
    }

    pub fn t_max(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Index of the node equal to `t` (up to `1e-9` steps).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = (t / self.step).round() + self.origin as f64;
        if k >= 0.0 && (k as usize) < self.len() {
            let k = k as usize;
            if (self.times[k] - t).abs() <= 1e-9 * self.step {
                return Ok(k);
            }
        }
        Err(Error::InvalidArgument(format!(
            "t = {t} is not a node of the time grid"
        )))
    }
}

/// Composite Simpson weights for `intervals` equal steps of length `step`.
///
/// An odd count closes with the 3/8 rule on the last three intervals; a single
/// interval falls back to the trapezoid rule. Zero intervals give the weight 0.
pub fn simpson_weights(intervals: usize, step: f64) -> Vec<f64> {
    let mut w = vec![0.0; intervals + 1];
    match intervals {
        0 => {}
        1 => {
            w[0] = 0.5 * step;
            w[1] = 0.5 * step;
        }
        _ => {
            let simpson_end = if intervals.is_multiple_of(2) {
                intervals
            } else {
                intervals - 3
            };
            for k in (0..simpson_end).step_by(2) {
                w[k] += step / 3.0;
                w[k + 1] += 4.0 * step / 3.0;
                w[k + 2] += step / 3.0;
            }
            if simpson_end < intervals {
                let k = simpson_end;
                let c = 3.0 * step / 8.0;
                w[k] += c;
                w[k + 1] += 3.0 * c;
                w[k + 2] += 3.0 * c;
                w[k + 3] += c;
            }
        }
    }
    w
}

/// One field per time node, all on the same spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: TimeGrid,
    fields: Vec<RadialField>,
}

impl Trajectory {
    pub fn new(times: TimeGrid, fields: Vec<RadialField>) -> Result<Self> {
        if fields.len() != times.len() {
            return Err(Error::InvalidArgument(format!(
                "{} fields for {} time nodes",
                fields.len(),
                times.len()
            )));
        }
        if let Some(first) = fields.first() {
            if fields.iter().any(|f| !f.same_grid(first)) {
                return Err(Error::GridMismatch);
            }
        }
        Ok(Self { times, fields })
    }

    pub fn zeros(times: TimeGrid, like: &RadialField) -> Self {
        let fields = vec![RadialField::zeros(like.grid()); times.len()];
        Self { times, fields }
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn fields(&self) -> &[RadialField] {
        &self.fields
    }

    pub fn at(&self, k: usize) -> &RadialField {
        &self.fields[k]
    }

    pub fn into_fields(self) -> Vec<RadialField> {
        self.fields
    }

    pub fn is_zero(&self) -> bool {
        self.fields.iter().all(RadialField::is_zero)
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        if self.times != other.times {
            return Err(Error::InvalidArgument("trajectories on different time grids".into()));
        }
        let fields = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            times: self.times.clone(),
            fields,
        })
    }

    /// Lorentz norm of every node.
    pub fn norms(&self, index: LorentzIndex) -> Vec<f64> {
        self.fields.par_iter().map(|f| lorentz_norm(f, index)).collect()
    }

    /// `sup_t ||u(t)||` over the nodes.
    pub fn sup_norm(&self, index: LorentzIndex) -> f64 {
        self.norms(index).into_iter().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = TimeGrid::forward(8.0, 64).unwrap();
        assert_eq!(g.len(), 65);
        assert_eq!(g.step(), 0.125);
        assert_eq!(g.index_of(1.0).unwrap(), 8);
        assert!(g.index_of(1.01).is_err());
        assert!(g.index_of(-0.125).is_err());
        let s = TimeGrid::symmetric(2.0, 4).unwrap();
        assert_eq!(s.times(), &[-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(s.origin(), 4);
        assert_eq!(s.index_of(-1.5).unwrap(), 1);
        assert!(TimeGrid::forward(0.0, 3).is_err());
        assert!(TimeGrid::forward(1.0, 0).is_err());
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let p = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t * t;
        let exact = |t: f64| t - t * t + t.powi(4) / 8.0;
        for m in 2..12 {
            let h = 1.3 / m as f64;
            let w = simpson_weights(m, h);
            let approx: f64 = w.iter().enumerate().map(|(k, w)| w * p(k as f64 * h)).sum();
            assert!((approx - exact(1.3)).abs() < 1e-13, "m = {m}");
        }
        assert_eq!(simpson_weights(0, 0.1), vec![0.0]);
        assert_eq!(simpson_weights(1, 0.5), vec![0.25, 0.25]);
    }
}
