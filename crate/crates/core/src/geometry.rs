//! Admissible exponent geometry and the derived model parameters.
//!
//! Points are written in reciprocal coordinates `(1/l1, 1/l2)`. The vertices
//! `P1..P5` bound the triangles where the `L^l1 -> L^l2` bounds of the wave
//! group hold (general and radial data), and `A1`, `A2` bound the open segment
//! on which the solution-space exponents of the fixed-point argument live.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPoint {
    pub x: f64,
    pub y: f64,
}

impl ExponentPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::InvalidArgument(format!(
                "exponent point ({x}, {y}) leaves the unit square"
            )));
        }
        Ok(Self { x, y })
    }

    /// The point `(1/l1, 1/l2)`.
    pub fn from_exponents(l1: f64, l2: f64) -> Result<Self> {
        Self::new(1.0 / l1, 1.0 / l2)
    }

    fn minus(self, other: Self) -> (f64, f64) {
        (self.x - other.x, self.y - other.y)
    }
}

fn cross(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Vertex {
    P1,
    P2,
    P3,
    P4,
    P5,
    A1,
    A2,
}

impl FromStr for Vertex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "P1" => Vertex::P1,
            "P2" => Vertex::P2,
            "P3" => Vertex::P3,
            "P4" => Vertex::P4,
            "P5" => Vertex::P5,
            "A1" => Vertex::A1,
            "A2" => Vertex::A2,
            other => return Err(Error::UnknownVertex(other.to_string())),
        })
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

fn check_odd_dimension(n: usize) -> Result<()> {
    if n < 3 || n.is_multiple_of(2) {
        Err(Error::InvalidDimension(n))
    } else {
        Ok(())
    }
}

pub fn vertex(name: Vertex, n: usize) -> Result<ExponentPoint> {
    check_odd_dimension(n)?;
    let n = n as f64;
    let (x, y) = match name {
        Vertex::P1 => (0.5 + 1.0 / (n + 1.0), 0.5 - 1.0 / (n + 1.0)),
        Vertex::P2 => (0.5 - 1.0 / (n - 1.0), 0.5 - 1.0 / (n - 1.0)),
        Vertex::P3 => (0.5 + 1.0 / (n - 1.0), 0.5 + 1.0 / (n - 1.0)),
        Vertex::P4 => (1.0, (n - 1.0) / (2.0 * n)),
        Vertex::P5 => (1.0, 1.0),
        Vertex::A1 => {
            let x = (n + 1.0) / (2.0 * (n - 1.0));
            (x, x - 2.0 / n)
        }
        Vertex::A2 => (1.0, (n - 2.0) / n),
    };
    Ok(ExponentPoint { x, y })
}

/// Parses a vertex by name, e.g. `"P4"`.
pub fn vertex_by_name(name: &str, n: usize) -> Result<ExponentPoint> {
    vertex(name.parse()?, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    /// Triangle `P1 P2 P3`: bounds for general data.
    GeneralTriangle,
    /// Triangle `P2 P4 P5`: bounds for radial data.
    RadialTriangle,
    /// Segment `]A1 A2[`.
    Segment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Closure {
    Open,
    Closed,
}

pub fn in_region(pt: ExponentPoint, region: Region, closure: Closure, n: usize) -> Result<bool> {
    match region {
        Region::GeneralTriangle => in_triangle(
            pt,
            [vertex(Vertex::P1, n)?, vertex(Vertex::P2, n)?, vertex(Vertex::P3, n)?],
            closure,
        ),
        Region::RadialTriangle => in_triangle(
            pt,
            [vertex(Vertex::P2, n)?, vertex(Vertex::P4, n)?, vertex(Vertex::P5, n)?],
            closure,
        ),
        Region::Segment => in_segment(pt, vertex(Vertex::A1, n)?, vertex(Vertex::A2, n)?, closure),
    }
}

fn in_triangle(pt: ExponentPoint, v: [ExponentPoint; 3], closure: Closure) -> Result<bool> {
    let area = cross(v[1].minus(v[0]), v[2].minus(v[0]));
    if area.abs() < MEMBERSHIP_TOL {
        return Err(Error::Geometry(format!("triangle {v:?} has zero area")));
    }
    let bary = [
        cross(v[1].minus(pt), v[2].minus(pt)) / area,
        cross(v[2].minus(pt), v[0].minus(pt)) / area,
        cross(v[0].minus(pt), v[1].minus(pt)) / area,
    ];
    Ok(match closure {
        Closure::Closed => bary.iter().all(|&b| b >= -MEMBERSHIP_TOL),
        Closure::Open => bary.iter().all(|&b| b > MEMBERSHIP_TOL),
    })
}

fn in_segment(pt: ExponentPoint, a: ExponentPoint, b: ExponentPoint, closure: Closure) -> Result<bool> {
    let dir = b.minus(a);
    let len2 = dir.0 * dir.0 + dir.1 * dir.1;
    if len2 < MEMBERSHIP_TOL * MEMBERSHIP_TOL {
        return Err(Error::Geometry(format!("segment endpoints {a:?} and {b:?} coincide")));
    }
    let rel = pt.minus(a);
    let len = len2.sqrt();
    if (cross(dir, rel) / len).abs() > MEMBERSHIP_TOL {
        return Ok(false);
    }
    let s = (dir.0 * rel.0 + dir.1 * rel.1) / len2;
    let tol = MEMBERSHIP_TOL / len;
    Ok(match closure {
        Closure::Closed => (-tol..=1.0 + tol).contains(&s),
        Closure::Open => s > tol && s < 1.0 - tol,
    })
}

/// Whether `derive_params` enforces the theorem hypotheses or only reports them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    #[default]
    Theorem,
    Audit,
}

/// Model parameters `(n, c1, c2, b, q)` with every derived exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams {
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
    pub b: f64,
    pub q: f64,
    /// `(2q - b) / (2 - b)`.
    pub p: f64,
    /// `n (p - 1) / 2`.
    pub r0: f64,
    /// `r0 / p`.
    pub s: f64,
    pub r0_dual: f64,
    pub s_dual: f64,
    /// `(n^2 + n - 4) / (n (n - 3))`; infinite for `n = 3`.
    pub threshold: f64,
    pub threshold_ok: bool,
    /// `p` equals the threshold; the solution exponents degenerate to `A1`.
    pub boundary: bool,
    /// `(1 - 2/(n(p-1)), 1 - 2p/(n(p-1)))`.
    pub point: ExponentPoint,
    pub point_on_segment: bool,
    pub point_in_radial_triangle: bool,
    /// `n/r0' - n/s' - 2`.
    pub d1d2_residual: f64,
    /// `|n(p-1)/2 - n(q-1)/(2-b)|`.
    pub r0_identity_gap: f64,
    /// `|(1/r0 + 2/n) - (b/n + q/r0)|`.
    pub s_identity_gap: f64,
    pub mode: ParamMode,
    pub warnings: Vec<String>,
}

pub fn derive_params(n: usize, q: f64, b: f64, c1: f64, c2: f64, mode: ParamMode) -> Result<ModelParams> {
    check_odd_dimension(n)?;
    let mut warnings = Vec::new();
    if n < 5 {
        match mode {
            ParamMode::Theorem => {
                return Err(Error::InvalidParameter(format!(
                    "the well-posedness setting needs odd n >= 5, got n = {n}"
                )))
            }
            ParamMode::Audit => warnings.push(format!("n = {n} is outside the theorem's range n >= 5")),
        }
    }
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q must satisfy q > 1, got {q}")));
    }
    if !(0.0..2.0).contains(&b) {
        return Err(Error::InvalidParameter(format!(
            "b must be 0 or lie in (0, 2), got {b}"
        )));
    }
    if !c1.is_finite() || !c2.is_finite() {
        return Err(Error::InvalidParameter("potential strengths must be finite".into()));
    }

    let nf = n as f64;
    let p = (2.0 * q - b) / (2.0 - b);
    let r0 = nf * (p - 1.0) / 2.0;
    let s = r0 / p;
    if s <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "s = r0/p = {s} must exceed 1 for the dual exponents to exist"
        )));
    }
    let r0_dual = r0 / (r0 - 1.0);
    let s_dual = s / (s - 1.0);

    let threshold = if n > 3 {
        (nf * nf + nf - 4.0) / (nf * (nf - 3.0))
    } else {
        f64::INFINITY
    };
    let boundary = threshold.is_finite() && (p - threshold).abs() <= 1e-12 * threshold;
    let threshold_ok = p > threshold || boundary;
    if !threshold_ok {
        let msg = format!("p = {p} lies below the threshold (n^2+n-4)/(n(n-3)) = {threshold}");
        match mode {
            ParamMode::Theorem => return Err(Error::Admissibility(msg)),
            ParamMode::Audit => warnings.push(msg),
        }
    }
    if boundary {
        warnings.push("p sits on the threshold: the solution exponents reach the endpoint A1".into());
    }

    let x = 1.0 - 2.0 / (nf * (p - 1.0));
    let y = 1.0 - 2.0 * p / (nf * (p - 1.0));
    let point = ExponentPoint { x, y };
    let point_on_segment = n > 3 && (0.0..=1.0).contains(&y) && in_region(point, Region::Segment, Closure::Open, n)?;
    let point_in_radial_triangle =
        (0.0..=1.0).contains(&y) && in_region(point, Region::RadialTriangle, Closure::Closed, n)?;

    Ok(ModelParams {
        n,
        c1,
        c2,
        b,
        q,
        p,
        r0,
        s,
        r0_dual,
        s_dual,
        threshold,
        threshold_ok,
        boundary,
        point,
        point_on_segment,
        point_in_radial_triangle,
        d1d2_residual: nf / r0_dual - nf / s_dual - 2.0,
        r0_identity_gap: (r0 - nf * (q - 1.0) / (2.0 - b)).abs(),
        s_identity_gap: ((1.0 / r0 + 2.0 / nf) - (b / nf + q / r0)).abs(),
        mode,
        warnings,
    })
}

/// Power of `|t|` in the `L^l1 -> L^l2` bound: `-n (1/l1 - 1/l2) + 1`.
pub fn dispersive_exponent(l1: f64, l2: f64, n: usize) -> f64 {
    -(n as f64) * (1.0 / l1 - 1.0 / l2) + 1.0
}

/// Weight power `n (1/d1 - 1/d2) - 2` in the time-integrated estimate.
pub fn yamazaki_exponent(d1: f64, d2: f64, n: usize) -> f64 {
    n as f64 * (1.0 / d1 - 1.0 / d2) - 2.0
}
