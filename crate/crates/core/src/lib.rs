//! Numerical lab for semilinear wave equations with an inverse-square (Hardy)
//! potential and an inverse-power potential on radial fields in odd dimensions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimates;
pub mod geometry;
pub mod grid;
pub mod kernel;
pub mod lorentz;
pub mod mild;
pub mod profiles;
pub mod propagator;
pub mod report;
pub mod scattering;
pub mod time;

pub use error::{Error, Result};
pub use geometry::{derive_params, ModelParams, ParamMode};
pub use grid::{make_grid, RadialField, RadialGrid};
pub use lorentz::LorentzIndex;
pub use mild::{InitialData, MildProblem, MildSolution, Nonlinearity, PicardOptions, SolveDiagnostics};
pub use profiles::{Profile, ProfileKind};
pub use propagator::{PlanOptions, SpectralPlan};
pub use report::EstimateReport;
pub use time::{TimeGrid, Trajectory};
