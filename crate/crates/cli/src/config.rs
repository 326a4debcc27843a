//! JSON experiment configuration and its validated form.
//!
//! Every block is optional; missing keys take the defaults of the chosen
//! experiment. Unknown keys are rejected by the parser, and audit keys that
//! do not apply to the experiment are rejected by [`resolve`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::Subcommand;
use hardywave_core::geometry::{derive_params, ParamMode};
use hardywave_core::profiles::{Profile, ProfileKind};
use hardywave_core::propagator::{PlanOptions, ROUND_TRIP_TOLERANCE};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Derived exponents and admissibility flags of the model
    Params,
    /// Lorentz norms against closed forms and the Hölder audit
    Norms,
    /// Decay slope of the free wave between Lorentz spaces
    Dispersive,
    /// Time-integrated bound and its tail indicator
    Yamazaki,
    /// Mild solution by Picard iteration
    Solve,
    /// Scattering state, defect decay and the improved rate
    Scatter,
    /// Weighted decay of two solutions against their data
    Stability,
    /// Cartesian parameter sweep of another experiment
    Sweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Params => "params",
            Self::Norms => "norms",
            Self::Dispersive => "dispersive",
            Self::Yamazaki => "yamazaki",
            Self::Solve => "solve",
            Self::Scatter => "scatter",
            Self::Stability => "stability",
            Self::Sweep => "sweep",
        }
    }

    fn audit_keys(self) -> &'static [&'static str] {
        const SOLVER: [&str; 6] = [
            "tol",
            "max_iter",
            "ball_radius",
            "snapshots",
            "max_ratio",
            "residual_tolerance",
        ];
        match self {
            Self::Params | Self::Sweep => &[],
            Self::Norms => &[
                "fields",
                "indices",
                "tolerance",
                "power_law_tolerance",
                "holder",
                "corpus_size",
            ],
            Self::Dispersive => &[
                "mode",
                "l1",
                "l2",
                "z",
                "p",
                "times",
                "fit_window",
                "expected_slope",
                "slope_tolerance",
            ],
            Self::Yamazaki => &[
                "d1",
                "d2",
                "horizon",
                "max_tail_ratio",
                "allow_outside",
                "profiles",
                "max_spread",
            ],
            Self::Solve => &SOLVER,
            Self::Scatter => &[
                "tol",
                "max_iter",
                "ball_radius",
                "snapshots",
                "max_ratio",
                "residual_tolerance",
                "h",
                "defect_tolerance",
                "decay_factor",
                "fit_window",
                "exponent_bound",
                "doubling_check",
                "exponent_tolerance",
            ],
            Self::Stability => &[
                "tol",
                "max_iter",
                "ball_radius",
                "snapshots",
                "max_ratio",
                "residual_tolerance",
                "h",
                "compare",
                "doubling_check",
                "constant_tolerance",
            ],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A configuration problem, reported with exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dimension: Option<usize>,
    pub r_max: Option<f64>,
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub freq_nodes: Option<usize>,
    pub rho_max: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub q: Option<f64>,
    pub b: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub mode: Option<Mode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Theorem,
    Audit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    /// Initial displacement.
    #[default]
    U0,
    /// Initial velocity.
    U1,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub profile: Option<ProfileKind>,
    pub amplitude: Option<f64>,
    pub width: Option<f64>,
    pub component: Option<Component>,
    /// Rescales the data so the linear evolution has this sup weak norm.
    pub target_sup_norm: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_max: Option<f64>,
    /// Number of steps; the grid has `time_nodes + 1` points including `t = 0`.
    pub time_nodes: Option<usize>,
    pub symmetric: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSampling {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersiveMode {
    /// `L^(l1,z) -> L^(l2,z)`.
    Lorentz,
    /// `L^(p') -> L^p`.
    LpDual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// `level * 1_{r < radius}`.
    Indicator { radius: f64, level: Option<f64> },
    /// `level * 1_{inner <= r < outer}`.
    Shell { inner: f64, outer: f64, level: Option<f64> },
    /// `r^(-n/p)`, compared with the weak norm of the continuum field.
    PowerLaw { p: f64 },
    Profile {
        profile: ProfileKind,
        amplitude: f64,
        width: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareName {
    Zero,
    Identical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Compare {
    Named(CompareName),
    Data(DataConfig),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub fields: Option<Vec<FieldSpec>>,
    /// `[p, z]` pairs; `z = null` is the weak index.
    pub indices: Option<Vec<(f64, Option<f64>)>>,
    pub tolerance: Option<f64>,
    pub power_law_tolerance: Option<f64>,
    /// `[p1, p2]` pairs of the Hölder audit; the first pair drives the random corpus.
    pub holder: Option<Vec<(f64, f64)>>,
    pub corpus_size: Option<usize>,

    pub mode: Option<DispersiveMode>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub z: Option<f64>,
    pub p: Option<f64>,
    pub times: Option<TimeSampling>,
    pub fit_window: Option<(f64, f64)>,
    pub expected_slope: Option<f64>,
    pub slope_tolerance: Option<f64>,

    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub horizon: Option<f64>,
    pub max_tail_ratio: Option<f64>,
    pub allow_outside: Option<bool>,
    pub profiles: Option<Vec<ProfileKind>>,
    pub max_spread: Option<f64>,

    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub ball_radius: Option<f64>,
    pub snapshots: Option<Vec<f64>>,
    pub max_ratio: Option<f64>,
    pub residual_tolerance: Option<f64>,

    pub h: Option<f64>,
    pub defect_tolerance: Option<f64>,
    pub decay_factor: Option<f64>,
    pub exponent_bound: Option<f64>,
    pub doubling_check: Option<bool>,
    pub exponent_tolerance: Option<f64>,
    pub compare: Option<Compare>,
    pub constant_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub experiment: Option<Experiment>,
    /// Parameter name to the values it takes.
    pub ranges: BTreeMap<String, Vec<f64>>,
}

pub fn load(path: &Path) -> Result<Config, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Config, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))
}

// ---------------------------------------------------------------------------
// validated settings

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSettings {
    pub dimension: usize,
    pub r_max: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralSettings {
    pub freq_nodes: Option<usize>,
    pub rho_max: Option<f64>,
    pub tolerance: f64,
}

impl SpectralSettings {
    pub fn plan_options(&self) -> PlanOptions {
        PlanOptions {
            freq_nodes: self.freq_nodes,
            rho_max: self.rho_max,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSettings {
    pub q: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
    pub mode: ParamMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DataSettings {
    pub profile: Profile,
    pub component: Component,
    pub target_sup_norm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeSettings {
    pub t_max: f64,
    pub steps: usize,
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormsAudit {
    pub fields: Vec<FieldSpec>,
    pub indices: Vec<(f64, f64)>,
    pub tolerance: f64,
    pub power_law_tolerance: f64,
    pub holder: Vec<(f64, f64)>,
    pub corpus_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersiveAudit {
    pub mode: DispersiveMode,
    pub l1: f64,
    pub l2: f64,
    pub z: f64,
    pub p: f64,
    pub times: TimeSampling,
    pub fit_window: (f64, f64),
    pub expected_slope: Option<f64>,
    pub slope_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YamazakiAudit {
    pub d1: f64,
    pub d2: f64,
    pub horizon: f64,
    pub max_tail_ratio: f64,
    pub allow_outside: bool,
    pub profiles: Vec<ProfileKind>,
    pub max_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverAudit {
    pub tol: f64,
    pub max_iter: usize,
    pub ball_radius: Option<f64>,
    pub snapshots: Vec<f64>,
    pub max_ratio: f64,
    pub residual_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterAudit {
    pub h: f64,
    pub defect_tolerance: f64,
    pub decay_factor: f64,
    pub fit_window: (f64, f64),
    pub exponent_bound: f64,
    pub doubling_check: bool,
    pub exponent_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareData {
    Zero,
    Identical,
    Data(DataSettings),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityAudit {
    pub h: f64,
    pub compare: CompareData,
    pub doubling_check: bool,
    pub constant_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditSettings {
    Params,
    Norms(NormsAudit),
    Dispersive(DispersiveAudit),
    Yamazaki(YamazakiAudit),
    Solve(SolverAudit),
    Scatter(SolverAudit, ScatterAudit),
    Stability(SolverAudit, StabilityAudit),
}

/// A fully validated experiment. Building one performs no numerical work
/// beyond closed-form parameter arithmetic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub experiment: Experiment,
    pub seed: u64,
    pub grid: GridSettings,
    pub spectral: SpectralSettings,
    pub model: ModelSettings,
    pub data: DataSettings,
    pub time: TimeSettings,
    pub audit: AuditSettings,
}

struct Defaults {
    grid: GridSettings,
    model: ModelSettings,
    profile: Profile,
    target_sup_norm: Option<f64>,
    time: TimeSettings,
}

fn defaults(experiment: Experiment) -> Defaults {
    let grid = |dimension, r_max, nodes| GridSettings {
        dimension,
        r_max,
        nodes,
    };
    let model = |b, c| ModelSettings {
        q: 3.0,
        b,
        c1: c,
        c2: c,
        mode: ParamMode::Theorem,
    };
    let profile = |kind, width| Profile {
        kind,
        amplitude: 1.0,
        width,
    };
    let time = |t_max, steps| TimeSettings {
        t_max,
        steps,
        symmetric: false,
    };
    match experiment {
        Experiment::Params | Experiment::Sweep => Defaults {
            grid: grid(5, 32.0, 256),
            model: model(0.0, 0.0),
            profile: profile(ProfileKind::Gaussian, 1.0),
            target_sup_norm: None,
            time: time(8.0, 64),
        },
        Experiment::Norms => Defaults {
            grid: grid(5, 2.0, 4096),
            model: model(0.0, 0.0),
            profile: profile(ProfileKind::Gaussian, 0.5),
            target_sup_norm: None,
            time: time(8.0, 64),
        },
        Experiment::Dispersive => Defaults {
            grid: grid(5, 96.0, 768),
            model: model(0.0, 0.0),
            profile: profile(ProfileKind::Bump, 2.0),
            target_sup_norm: None,
            time: time(64.0, 64),
        },
        Experiment::Yamazaki => Defaults {
            grid: grid(5, 160.0, 1024),
            model: model(0.0, 0.0),
            profile: profile(ProfileKind::Gaussian, 1.0),
            target_sup_norm: None,
            time: time(64.0, 64),
        },
        Experiment::Solve | Experiment::Scatter => Defaults {
            grid: grid(5, 32.0, 256),
            model: model(0.5, 0.01),
            profile: profile(ProfileKind::Gaussian, 1.0),
            target_sup_norm: Some(0.1),
            time: time(8.0, 64),
        },
        Experiment::Stability => Defaults {
            grid: grid(5, 32.0, 256),
            model: model(0.5, 0.01),
            profile: profile(ProfileKind::Gaussian, 1.0),
            target_sup_norm: Some(0.1),
            time: time(16.0, 128),
        },
    }
}

fn positive(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        bad(format!("{name} must be positive and finite, got {v}"))
    }
}

fn finite(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        bad(format!("{name} must be finite, got {v}"))
    }
}

fn window(name: &str, w: (f64, f64)) -> Result<(f64, f64), ConfigError> {
    positive(name, w.0)?;
    positive(name, w.1)?;
    if w.0 >= w.1 {
        return bad(format!("{name} must be an increasing pair, got [{}, {}]", w.0, w.1));
    }
    Ok(w)
}

fn resolve_data(data: &DataConfig, d: &Defaults) -> Result<DataSettings, ConfigError> {
    let profile = Profile::new(
        data.profile.unwrap_or(d.profile.kind),
        data.amplitude.unwrap_or(d.profile.amplitude),
        data.width.unwrap_or(d.profile.width),
    )
    .map_err(|e| ConfigError(format!("data: {e}")))?;
    let target_sup_norm = match data.target_sup_norm.or(d.target_sup_norm) {
        Some(v) => Some(positive("data.target_sup_norm", v)?),
        None => None,
    };
    Ok(DataSettings {
        profile,
        component: data.component.unwrap_or_default(),
        target_sup_norm,
    })
}

fn check_keys(audit: &AuditConfig, experiment: Experiment) -> Result<(), ConfigError> {
    let allowed = experiment.audit_keys();
    let value = serde_json::to_value(audit).map_err(|e| ConfigError(e.to_string()))?;
    if let serde_json::Value::Object(map) = value {
        for (key, v) in map {
            if !v.is_null() && !allowed.contains(&key.as_str()) {
                return bad(format!("audit.{key} does not apply to `{experiment}`"));
            }
        }
    }
    Ok(())
}

fn solver_audit(a: &AuditConfig, time: &TimeSettings) -> Result<SolverAudit, ConfigError> {
    let tol = positive("audit.tol", a.tol.unwrap_or(1e-10))?;
    let max_iter = a.max_iter.unwrap_or(100);
    if max_iter == 0 {
        return bad("audit.max_iter must be at least 1");
    }
    let ball_radius = match a.ball_radius {
        Some(r) => Some(positive("audit.ball_radius", r)?),
        None => Some(0.2),
    };
    let snapshots = a.snapshots.clone().unwrap_or_else(|| {
        [0.0, 1.0, 2.0, 4.0, 8.0]
            .into_iter()
            .filter(|&t| t <= time.t_max)
            .collect()
    });
    let lo = if time.symmetric { -time.t_max } else { 0.0 };
    let step = time.t_max / time.steps as f64;
    for &t in &snapshots {
        let k = (t - lo) / step;
        if !(t >= lo - 1e-12 && t <= time.t_max + 1e-12) || (k - k.round()).abs() > 1e-9 {
            return bad(format!("audit.snapshots: t = {t} is not a time node"));
        }
    }
    Ok(SolverAudit {
        tol,
        max_iter,
        ball_radius,
        snapshots,
        max_ratio: positive("audit.max_ratio", a.max_ratio.unwrap_or(0.5))?,
        residual_tolerance: positive("audit.residual_tolerance", a.residual_tolerance.unwrap_or(1e-6))?,
    })
}

fn weight(h: Option<f64>) -> Result<f64, ConfigError> {
    let h = h.unwrap_or(0.5);
    if h > 0.0 && h < 1.0 {
        Ok(h)
    } else {
        bad(format!("audit.h must lie in (0, 1), got {h}"))
    }
}

/// Validates `config` for `experiment`. `seed` overrides the config's seed.
pub fn resolve(config: &Config, experiment: Experiment, seed: Option<u64>) -> Result<Settings, ConfigError> {
    if let Some(declared) = config.experiment {
        if declared != experiment {
            return bad(format!(
                "config declares experiment `{declared}` but `{experiment}` was requested"
            ));
        }
    }
    let run_as = if experiment == Experiment::Sweep {
        let sweep = config
            .sweep
            .as_ref()
            .ok_or_else(|| ConfigError("sweep needs a `sweep` block".into()))?;
        let inner = sweep.experiment.unwrap_or(Experiment::Params);
        if inner == Experiment::Sweep {
            return bad("sweep.experiment cannot be `sweep`");
        }
        inner
    } else {
        if config.sweep.is_some() {
            return bad(format!("the `sweep` block only applies to `sweep`, not `{experiment}`"));
        }
        experiment
    };
    check_keys(&config.audit, run_as)?;
    let d = defaults(run_as);

    let grid = GridSettings {
        dimension: config.grid.dimension.unwrap_or(d.grid.dimension),
        r_max: positive("grid.r_max", config.grid.r_max.unwrap_or(d.grid.r_max))?,
        nodes: config.grid.nodes.unwrap_or(d.grid.nodes),
    };
    if grid.dimension < 3 || grid.dimension.is_multiple_of(2) {
        return bad(format!(
            "grid.dimension must be an odd integer >= 3, got {}",
            grid.dimension
        ));
    }
    if grid.nodes < 2 {
        return bad(format!("grid.nodes must be at least 2, got {}", grid.nodes));
    }
    let spectral = SpectralSettings {
        freq_nodes: config.spectral.freq_nodes,
        rho_max: match config.spectral.rho_max {
            Some(v) => Some(positive("spectral.rho_max", v)?),
            None => None,
        },
        tolerance: positive(
            "spectral.tolerance",
            config.spectral.tolerance.unwrap_or(ROUND_TRIP_TOLERANCE),
        )?,
    };
    if spectral.freq_nodes == Some(0) {
        return bad("spectral.freq_nodes must be at least 1");
    }
    let mode = match config.model.mode {
        Some(Mode::Audit) => ParamMode::Audit,
        Some(Mode::Theorem) => ParamMode::Theorem,
        None => d.model.mode,
    };
    let model = ModelSettings {
        q: finite("model.q", config.model.q.unwrap_or(d.model.q))?,
        b: finite("model.b", config.model.b.unwrap_or(d.model.b))?,
        c1: finite("model.c1", config.model.c1.unwrap_or(d.model.c1))?,
        c2: finite("model.c2", config.model.c2.unwrap_or(d.model.c2))?,
        mode,
    };
    if !(model.b == 0.0 || (model.b > 0.0 && model.b < 2.0)) {
        return bad(format!("model.b must be 0 or lie in (0, 2), got {}", model.b));
    }
    if !(model.q > 1.0) {
        return bad(format!("model.q must exceed 1, got {}", model.q));
    }
    let data = resolve_data(&config.data, &d)?;
    let time = TimeSettings {
        t_max: positive("time.t_max", config.time.t_max.unwrap_or(d.time.t_max))?,
        steps: config.time.time_nodes.unwrap_or(d.time.steps),
        symmetric: config.time.symmetric.unwrap_or(d.time.symmetric),
    };
    if time.steps == 0 {
        return bad("time.time_nodes must be at least 1");
    }

    let a = &config.audit;
    // exponents tied to the model, for audits that default to them
    let dual_pair = || -> Result<(f64, f64), ConfigError> {
        let m = derive_params(grid.dimension, model.q, model.b, 0.0, 0.0, ParamMode::Audit)
            .map_err(|e| ConfigError(format!("model: {e}")))?;
        Ok((m.r0_dual, m.s_dual))
    };
    let audit = match run_as {
        Experiment::Params | Experiment::Sweep => AuditSettings::Params,
        Experiment::Norms => {
            let n = grid.dimension as f64;
            let fields = a.fields.clone().unwrap_or_else(|| {
                vec![
                    FieldSpec::Indicator {
                        radius: grid.r_max / 2.0,
                        level: None,
                    },
                    FieldSpec::Shell {
                        inner: grid.r_max / 4.0,
                        outer: 3.0 * grid.r_max / 4.0,
                        level: Some(2.0),
                    },
                    FieldSpec::PowerLaw { p: n / 2.0 },
                    FieldSpec::PowerLaw { p: n },
                    FieldSpec::Profile {
                        profile: ProfileKind::Gaussian,
                        amplitude: 1.0,
                        width: grid.r_max / 4.0,
                    },
                ]
            });
            for f in &fields {
                let ok = match *f {
                    FieldSpec::Indicator { radius, level } => {
                        radius > 0.0 && radius <= grid.r_max && level.unwrap_or(1.0).is_finite()
                    }
                    FieldSpec::Shell { inner, outer, level } => {
                        inner >= 0.0 && inner < outer && outer <= grid.r_max && level.unwrap_or(1.0).is_finite()
                    }
                    FieldSpec::PowerLaw { p } => p > 1.0 && p.is_finite(),
                    FieldSpec::Profile { amplitude, width, .. } => {
                        amplitude.is_finite() && width > 0.0 && width.is_finite()
                    }
                };
                if !ok {
                    return bad(format!("audit.fields: invalid field {f:?}"));
                }
            }
            let indices: Vec<(f64, f64)> = match &a.indices {
                Some(list) => list.iter().map(|&(p, z)| (p, z.unwrap_or(f64::INFINITY))).collect(),
                None => vec![
                    (n / 2.0, f64::INFINITY),
                    (n / 2.0, 1.0),
                    (n / 2.0, n / 2.0),
                    (n, f64::INFINITY),
                    (n, 2.0),
                    (n, n),
                ],
            };
            for &(p, z) in &indices {
                hardywave_core::LorentzIndex::new(p, z).map_err(|e| ConfigError(format!("audit.indices: {e}")))?;
            }
            let holder = a
                .holder
                .clone()
                .unwrap_or_else(|| vec![(2.5, 5.0), (5.0, 5.0), (5.0, 10.0)]);
            for &(p1, p2) in &holder {
                if !(p1 > 1.0 && p2 > 1.0 && 1.0 / p1 + 1.0 / p2 < 1.0) {
                    return bad(format!(
                        "audit.holder: ({p1}, {p2}) needs p1, p2 > 1 and 1/p1 + 1/p2 < 1"
                    ));
                }
            }
            AuditSettings::Norms(NormsAudit {
                fields,
                indices,
                tolerance: positive("audit.tolerance", a.tolerance.unwrap_or(1e-12))?,
                power_law_tolerance: positive("audit.power_law_tolerance", a.power_law_tolerance.unwrap_or(0.01))?,
                holder,
                corpus_size: a.corpus_size.unwrap_or(100),
            })
        }
        Experiment::Dispersive => {
            let mode = a.mode.unwrap_or(DispersiveMode::Lorentz);
            let times = a.times.unwrap_or(TimeSampling {
                start: 8.0,
                end: 64.0,
                count: 29,
            });
            window("audit.times", (times.start, times.end))?;
            if times.count < 2 {
                return bad("audit.times.count must be at least 2");
            }
            let p = a.p.unwrap_or(4.0);
            if !(p > 2.0 && p.is_finite()) {
                return bad(format!("audit.p must exceed 2, got {p}"));
            }
            // the L^p' -> L^p mode has its pair fixed by p
            let (l1, l2) = match (mode, a.l1, a.l2) {
                (_, Some(l1), Some(l2)) => (l1, l2),
                (DispersiveMode::LpDual, l1, l2) => (l1.unwrap_or(p / (p - 1.0)), l2.unwrap_or(p)),
                (DispersiveMode::Lorentz, l1, l2) => {
                    let (r0_dual, s_dual) = dual_pair()?;
                    (l1.unwrap_or(r0_dual), l2.unwrap_or(s_dual))
                }
            };
            AuditSettings::Dispersive(DispersiveAudit {
                mode,
                l1: positive("audit.l1", l1)?,
                l2: positive("audit.l2", l2)?,
                z: a.z.unwrap_or(1.0),
                p,
                times,
                fit_window: window("audit.fit_window", a.fit_window.unwrap_or((times.start, times.end)))?,
                expected_slope: a.expected_slope,
                slope_tolerance: positive("audit.slope_tolerance", a.slope_tolerance.unwrap_or(0.1))?,
            })
        }
        Experiment::Yamazaki => {
            let (r0_dual, s_dual) = dual_pair()?;
            let profiles = a
                .profiles
                .clone()
                .unwrap_or_else(|| vec![ProfileKind::Gaussian, ProfileKind::Bump, ProfileKind::TwoBump]);
            if profiles.is_empty() {
                return bad("audit.profiles must not be empty");
            }
            AuditSettings::Yamazaki(YamazakiAudit {
                d1: positive("audit.d1", a.d1.unwrap_or(r0_dual))?,
                d2: positive("audit.d2", a.d2.unwrap_or(s_dual))?,
                horizon: positive("audit.horizon", a.horizon.unwrap_or(64.0))?,
                max_tail_ratio: positive("audit.max_tail_ratio", a.max_tail_ratio.unwrap_or(0.05))?,
                allow_outside: a.allow_outside.unwrap_or(false),
                profiles,
                max_spread: positive("audit.max_spread", a.max_spread.unwrap_or(3.0))?,
            })
        }
        Experiment::Solve => AuditSettings::Solve(solver_audit(a, &time)?),
        Experiment::Scatter => {
            let solver = solver_audit(a, &time)?;
            AuditSettings::Scatter(
                solver,
                ScatterAudit {
                    h: weight(a.h)?,
                    defect_tolerance: positive("audit.defect_tolerance", a.defect_tolerance.unwrap_or(1e-4))?,
                    decay_factor: positive("audit.decay_factor", a.decay_factor.unwrap_or(0.1))?,
                    fit_window: window("audit.fit_window", a.fit_window.unwrap_or((1.0, 4.0)))?,
                    exponent_bound: finite("audit.exponent_bound", a.exponent_bound.unwrap_or(-0.4))?,
                    doubling_check: a.doubling_check.unwrap_or(true),
                    exponent_tolerance: positive("audit.exponent_tolerance", a.exponent_tolerance.unwrap_or(0.05))?,
                },
            )
        }
        Experiment::Stability => {
            let solver = solver_audit(a, &time)?;
            let compare = match &a.compare {
                None | Some(Compare::Named(CompareName::Zero)) => CompareData::Zero,
                Some(Compare::Named(CompareName::Identical)) => CompareData::Identical,
                Some(Compare::Data(data)) => CompareData::Data(resolve_data(data, &d)?),
            };
            AuditSettings::Stability(
                solver,
                StabilityAudit {
                    h: weight(a.h)?,
                    compare,
                    doubling_check: a.doubling_check.unwrap_or(true),
                    constant_tolerance: positive("audit.constant_tolerance", a.constant_tolerance.unwrap_or(0.1))?,
                },
            )
        }
    };
    if matches!(run_as, Experiment::Scatter | Experiment::Stability) && time.symmetric {
        return bad(format!(
            "`{run_as}` runs on a forward time grid; set time.symmetric to false"
        ));
    }

    Ok(Settings {
        experiment: run_as,
        seed: seed.or(config.seed).unwrap_or(0),
        grid,
        spectral,
        model,
        data,
        time,
        audit,
    })
}

/// Parameters a sweep may vary.
pub const SWEEP_KEYS: [&str; 12] = [
    "amplitude",
    "b",
    "c1",
    "c2",
    "dimension",
    "h",
    "nodes",
    "q",
    "r_max",
    "t_max",
    "time_nodes",
    "width",
];

fn as_count(key: &str, v: f64) -> Result<usize, ConfigError> {
    if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        bad(format!("sweep.ranges.{key}: {v} is not a non-negative integer"))
    }
}

/// Applies one sweep point to a copy of `config`.
pub fn with_value(config: &Config, key: &str, v: f64) -> Result<Config, ConfigError> {
    let mut c = config.clone();
    c.sweep = None;
    c.experiment = None;
    match key {
        "amplitude" => c.data.amplitude = Some(v),
        "b" => c.model.b = Some(v),
        "c1" => c.model.c1 = Some(v),
        "c2" => c.model.c2 = Some(v),
        "dimension" => c.grid.dimension = Some(as_count(key, v)?),
        "h" => c.audit.h = Some(v),
        "nodes" => c.grid.nodes = Some(as_count(key, v)?),
        "q" => c.model.q = Some(v),
        "r_max" => c.grid.r_max = Some(v),
        "t_max" => c.time.t_max = Some(v),
        "time_nodes" => c.time.time_nodes = Some(as_count(key, v)?),
        "width" => c.data.width = Some(v),
        other => {
            return bad(format!(
                "sweep.ranges: unknown parameter `{other}` (expected one of {SWEEP_KEYS:?})"
            ))
        }
    }
    Ok(c)
}
