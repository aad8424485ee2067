//! Uniform periodic grids and physical constants.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Smallest admissible number of nodes along an axis.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
}

impl PhysicalConstants {
    pub fn new(hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::Config(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { hbar })
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { hbar: 1.0 }
    }
}

/// One periodic axis `[min, max)` sampled at `n` equally spaced nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::Config(format!("axis bounds must be finite, got [{min}, {max}]")));
        }
        if max <= min {
            return Err(Error::Config(format!("axis bounds reversed: max {max} <= min {min}")));
        }
        if n < MIN_NODES || !n.is_multiple_of(2) {
            return Err(Error::Config(format!("node count must be even and >= {MIN_NODES}, got {n}")));
        }
        Ok(Self { min, max, n })
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.max - self.min
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.length() / self.n as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Angular wavenumbers in transform order: `0, 1, .., n/2 - 1, -n/2, .., -1`
    /// times `2π/L`. The Nyquist bin carries the negative value.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = 2.0 * PI / self.length();
        let half = self.n / 2;
        (0..self.n)
            .map(|m| {
                let signed = if m < half { m as isize } else { m as isize - self.n as isize };
                signed as f64 * dk
            })
            .collect()
    }

    /// Wavenumbers for odd-order derivatives: Nyquist bin set to zero.
    pub fn derivative_wavenumbers(&self) -> Vec<f64> {
        let mut k = self.wavenumbers();
        k[self.n / 2] = 0.0;
        k
    }

    /// True when `[lo, hi]` lies inside the closed axis interval.
    pub fn contains_interval(&self, lo: f64, hi: f64) -> bool {
        lo >= self.min && hi <= self.max
    }
}

/// Position-velocity grid; both axes periodic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x: Axis,
    pub v: Axis,
}

impl Grid2D {
    pub fn new(x: Axis, v: Axis) -> Self {
        Self { x, v }
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.x.spacing()
    }

    #[inline]
    pub fn dv(&self) -> f64 {
        self.v.spacing()
    }

    #[inline]
    pub fn n_x(&self) -> usize {
        self.x.n
    }

    #[inline]
    pub fn n_v(&self) -> usize {
        self.v.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.x.n * self.v.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell area `dx·dv` used as the quadrature weight.
    #[inline]
    pub fn cell(&self) -> f64 {
        self.dx() * self.dv()
    }

    /// Flat index of node `(i, j)`; storage is row-major over x then v.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.v.n + j
    }

    pub fn summary(&self) -> String {
        format!(
            "x=[{},{})x{} v=[{},{})x{}",
            self.x.min, self.x.max, self.x.n, self.v.min, self.v.max, self.v.n
        )
    }
}

pub fn make_grid(x_min: f64, x_max: f64, n_x: usize, v_min: f64, v_max: f64, n_v: usize) -> Result<Grid2D> {
    let x = Axis::new(x_min, x_max, n_x).map_err(|e| prefix(e, "x axis"))?;
    let v = Axis::new(v_min, v_max, n_v).map_err(|e| prefix(e, "v axis"))?;
    Ok(Grid2D { x, v })
}

fn prefix(e: Error, what: &str) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{what}: {m}")),
        other => other,
    }
}
