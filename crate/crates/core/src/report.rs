//! Measured constants and decay slopes of an inequality audit.

use std::collections::BTreeMap;

use serde::Serialize;

/// One time sample of an audited inequality `measured <= C * bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub measured: f64,
    pub bound: f64,
}

impl Sample {
    /// `measured / bound`, with `0/0` read as 0.
    pub fn ratio(&self) -> f64 {
        if self.measured == 0.0 {
            0.0
        } else {
            self.measured / self.bound
        }
    }
}

/// Outcome of an estimate audit. Constants are measured, never asserted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub kind: String,
    pub inputs: BTreeMap<String, f64>,
    pub samples: Vec<Sample>,
    /// `sup measured / bound` over the samples.
    pub measured_constant: f64,
    pub fitted_slope: Option<f64>,
    pub slope_window: Option<(f64, f64)>,
    /// Extra named quantities (tail indicators, split contributions, ...).
    pub extras: BTreeMap<String, f64>,
    pub flags: Vec<String>,
}

impl EstimateReport {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            inputs: BTreeMap::new(),
            samples: Vec::new(),
            measured_constant: 0.0,
            fitted_slope: None,
            slope_window: None,
            extras: BTreeMap::new(),
            flags: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: f64) -> &mut Self {
        self.inputs.insert(key.to_string(), value);
        self
    }

    pub fn extra(&mut self, key: &str, value: f64) -> &mut Self {
        self.extras.insert(key.to_string(), value);
        self
    }

    pub fn flag(&mut self, flag: &str) {
        if !self.flags.iter().any(|f| f == flag) {
            self.flags.push(flag.to_string());
        }
    }

    pub fn push_sample(&mut self, t: f64, measured: f64, bound: f64) {
        let sample = Sample { t, measured, bound };
        if measured == 0.0 && bound == 0.0 {
            self.flag("zero_over_zero");
        }
        self.measured_constant = self.measured_constant.max(sample.ratio());
        self.samples.push(sample);
    }

    /// Fits the log-log slope of `measured` against `t` on `[lo, hi]` and records it.
    pub fn fit_slope(&mut self, lo: f64, hi: f64) -> Option<f64> {
        let points: Vec<(f64, f64)> = self
            .samples
            .iter()
            .filter(|s| s.t >= lo && s.t <= hi)
            .map(|s| (s.t, s.measured))
            .collect();
        self.slope_window = Some((lo, hi));
        self.fitted_slope = loglog_slope(&points);
        if self.fitted_slope.is_none() {
            self.flag("slope_undefined");
        }
        self.fitted_slope
    }

    /// Slope over the top decade `[t_last / 10, t_last]` of the sampled times.
    pub fn fit_top_decade(&mut self) -> Option<f64> {
        let hi = self.samples.iter().map(|s| s.t.abs()).fold(0.0, f64::max);
        self.fit_slope(hi / 10.0, hi)
    }
}

/// Unweighted least-squares slope of `ln y` against `ln t`.
///
/// Points with nonpositive `t` or `y` are skipped; fewer than two usable points
/// (or a degenerate abscissa) give `None`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, y)| *t > 0.0 && *y > 0.0)
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}
