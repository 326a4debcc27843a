//! Radial test profiles.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sample, RadialField, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `exp(-(r/w)^2)`.
    Gaussian,
    /// `exp(1 - 1/(1 - (r/w)^2))` on `r < w`, zero outside.
    Bump,
    /// A bump at the origin plus a bump of the same width centred at `r = 2w`.
    TwoBump,
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "bump" => Ok(Self::Bump),
            "two_bump" => Ok(Self::TwoBump),
            other => Err(Error::InvalidArgument(format!(
                "unknown profile `{other}` (expected gaussian, bump or two_bump)"
            ))),
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::Bump => "bump",
            Self::TwoBump => "two_bump",
        })
    }
}

fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub kind: ProfileKind,
    pub amplitude: f64,
    pub width: f64,
}

impl Profile {
    pub fn new(kind: ProfileKind, amplitude: f64, width: f64) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "amplitude must be finite, got {amplitude}"
            )));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidArgument(format!("width must be positive, got {width}")));
        }
        Ok(Self { kind, amplitude, width })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let x = r / self.width;
        self.amplitude
            * match self.kind {
                ProfileKind::Gaussian => (-x * x).exp(),
                ProfileKind::Bump => bump(x),
                ProfileKind::TwoBump => bump(x) + bump(x - 2.0),
            }
    }

    pub fn sample(&self, grid: &Arc<RadialGrid>) -> Result<RadialField> {
        sample(grid, |r| self.eval(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let g = Profile::new(ProfileKind::Gaussian, 2.0, 1.0).unwrap();
        assert_eq!(g.eval(0.0), 2.0);
        let b = Profile::new(ProfileKind::Bump, 1.0, 2.0).unwrap();
        assert_eq!(b.eval(0.0), 1.0);
        assert_eq!(b.eval(2.0), 0.0);
        assert_eq!(b.eval(3.0), 0.0);
        let t = Profile::new(ProfileKind::TwoBump, 1.0, 1.0).unwrap();
        assert_eq!(t.eval(2.0), 1.0);
        assert_eq!(t.eval(1.0), 0.0);
        assert!("cone".parse::<ProfileKind>().is_err());
        assert_eq!("two_bump".parse::<ProfileKind>().unwrap(), ProfileKind::TwoBump);
        assert!(Profile::new(ProfileKind::Bump, 1.0, 0.0).is_err());
    }
}
