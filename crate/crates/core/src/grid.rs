//! Radial discretization of `R^n`.
//!
//! A [`RadialGrid`] splits the ball of radius `r_max` into `N` concentric
//! shells of equal radial width. Each shell carries its exact `n`-dimensional
//! measure, so integrals of step functions (and in particular indicator norms)
//! are exact. Sample points sit at shell midpoints, which keeps the origin out
//! of the grid and lets singular potentials such as `1/r^2` be evaluated.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Volume of the unit ball in `R^n`, `pi^(n/2) / Gamma(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> f64 {
    PI.powf(n as f64 / 2.0) / gamma_half(n + 2)
}

/// Surface area of the unit sphere `S^(n-1)`.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// `Gamma(k / 2)` for a positive integer `k`.
pub(crate) fn gamma_half(k: usize) -> f64 {
    assert!(k > 0, "Gamma has a pole at 0");
    let (mut value, mut x) = if k.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while 2.0 * x < k as f64 - 0.5 {
        value *= x;
        x += 1.0;
    }
    value
}

/// Midpoint-uniform radial grid on the ball of radius `r_max` in odd dimension `n`.
#[derive(Debug, Clone, Serialize)]
pub struct RadialGrid {
    dimension: usize,
    r_max: f64,
    nodes: Vec<f64>,
    cell_bounds: Vec<f64>,
    cell_measures: Vec<f64>,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dimension == other.dimension && self.r_max == other.r_max && self.nodes.len() == other.nodes.len()
    }
}

impl RadialGrid {
    /// Builds the grid `a_i = i r_max / N`, `r_i = (a_{i-1} + a_i) / 2`.
    pub fn new(dimension: usize, r_max: f64, cells: usize) -> Result<Arc<Self>> {
        if dimension < 3 || dimension.is_multiple_of(2) {
            return Err(Error::InvalidDimension(dimension));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "r_max must be positive and finite, got {r_max}"
            )));
        }
        if cells < 1 {
            return Err(Error::InvalidArgument("grid needs at least one cell".into()));
        }
        let width = r_max / cells as f64;
        let cell_bounds: Vec<f64> = (0..=cells)
            .map(|i| if i == cells { r_max } else { i as f64 * width })
            .collect();
        let nodes = cell_bounds.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let omega = unit_ball_volume(dimension);
        let n = dimension as i32;
        let cell_measures = cell_bounds
            .windows(2)
            .map(|w| omega * (w[1].powi(n) - w[0].powi(n)))
            .collect();
        Ok(Arc::new(Self {
            dimension,
            r_max,
            nodes,
            cell_bounds,
            cell_measures,
        }))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Radial width of each cell.
    pub fn step(&self) -> f64 {
        self.r_max / self.nodes.len() as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn cell_bounds(&self) -> &[f64] {
        &self.cell_bounds
    }

    pub fn cell_measures(&self) -> &[f64] {
        &self.cell_measures
    }

    /// Measure of the whole truncated domain, `omega_n r_max^n`.
    pub fn total_measure(&self) -> f64 {
        unit_ball_volume(self.dimension) * self.r_max.powi(self.dimension as i32)
    }
}

/// Validates the grid parameters of `make_grid`, which additionally asks for `N >= 2`.
pub fn make_grid(dimension: usize, r_max: f64, cells: usize) -> Result<Arc<RadialGrid>> {
    if dimension < 3 || dimension.is_multiple_of(2) {
        return Err(Error::InvalidDimension(dimension));
    }
    if cells < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least 2 cells, got {cells}"
        )));
    }
    RadialGrid::new(dimension, r_max, cells)
}

/// Samples of a radial function at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialField {
    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
        }
    }

    /// Wraps raw values; the length must match the grid and every value must be finite.
    pub fn from_values(grid: &Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Sampling {
                node,
                r: grid.nodes()[node],
                value,
            });
        }
        Ok(Self {
            grid: Arc::clone(grid),
            values,
        })
    }

    /// Values computed internally from finite arithmetic; skips the finiteness scan.
    pub(crate) fn from_raw(grid: &Arc<RadialGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &RadialField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn ensure_on(&self, grid: &RadialGrid) -> Result<()> {
        if *self.grid == *grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| factor * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &RadialField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(Self::from_raw(
            &self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn add(&self, other: &RadialField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RadialField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &RadialField) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `|f(r_N)| / max |f|`: how much of the field reaches the truncation radius.
    pub fn boundary_ratio(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            0.0
        } else {
            self.values.last().copied().unwrap_or(0.0).abs() / max
        }
    }
}

/// Pointwise evaluation of `f` at the grid nodes.
pub fn sample(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<RadialField> {
    let values = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(node, &r)| {
            let value = f(r);
            if value.is_finite() {
                Ok(value)
            } else {
                Err(Error::Sampling { node, r, value })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RadialField::from_raw(grid, values))
}

/// `sum_i f(r_i) mu_i`, the cell-measure quadrature of `f` over the ball.
pub fn integrate(field: &RadialField) -> f64 {
    field
        .values
        .iter()
        .zip(field.grid.cell_measures())
        .map(|(v, m)| v * m)
        .sum()
}
