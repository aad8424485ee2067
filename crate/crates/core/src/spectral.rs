//! Cached FFT plans and wavenumber tables for periodic axes.
//!
//! Every batched transform works row by row; rows are independent, so results
//! do not depend on how many rayon workers share the batch.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Axis, Grid2D};

/// Forward/inverse plans plus wavenumbers for one axis.
#[derive(Clone)]
pub struct AxisTransform {
    axis: Axis,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
    k_deriv: Vec<f64>,
}

impl std::fmt::Debug for AxisTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AxisTransform").field("axis", &self.axis).finish_non_exhaustive()
    }
}

impl AxisTransform {
    pub fn new(axis: Axis) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            axis,
            forward: planner.plan_fft_forward(axis.n),
            inverse: planner.plan_fft_inverse(axis.n),
            k: axis.wavenumbers(),
            k_deriv: axis.derivative_wavenumbers(),
        }
    }

    #[inline]
    pub fn axis(&self) -> &Axis {
        &self.axis
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.axis.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.axis.n == 0
    }

    /// Angular wavenumbers, Nyquist bin negative.
    #[inline]
    pub fn k(&self) -> &[f64] {
        &self.k
    }

    /// Wavenumbers with the Nyquist bin zeroed (odd-order derivatives).
    #[inline]
    pub fn k_deriv(&self) -> &[f64] {
        &self.k_deriv
    }

    /// Unnormalized forward transform of every contiguous row in `rows`.
    pub fn forward_rows(&self, rows: &mut [Complex64]) {
        run_rows(&self.forward, rows, self.axis.n);
    }

    /// Unnormalized inverse transform of every contiguous row in `rows`.
    pub fn inverse_rows(&self, rows: &mut [Complex64]) {
        run_rows(&self.inverse, rows, self.axis.n);
    }

    /// Transforms each row, multiplies bin `m` of row `r` by `multiplier(r, m)` and
    /// transforms back. The multiplier must include the `1/n` normalization.
    pub fn filter_rows<F>(&self, rows: &mut [Complex64], multiplier: F)
    where
        F: Fn(usize, usize) -> Complex64 + Sync,
    {
        let n = self.axis.n;
        let scratch_len = self.forward.get_inplace_scratch_len().max(self.inverse.get_inplace_scratch_len());
        rows.par_chunks_mut(n).enumerate().for_each_init(
            || vec![Complex64::new(0.0, 0.0); scratch_len],
            |scratch, (r, row)| {
                self.forward.process_with_scratch(row, scratch);
                for (m, c) in row.iter_mut().enumerate() {
                    *c *= multiplier(r, m);
                }
                self.inverse.process_with_scratch(row, scratch);
            },
        );
    }

    /// Same as [`filter_rows`](Self::filter_rows) with a precomputed table laid out
    /// row-major, `table[r * n + m]`.
    pub fn filter_rows_table(&self, rows: &mut [Complex64], table: &[Complex64]) {
        let n = self.axis.n;
        debug_assert_eq!(rows.len(), table.len());
        let scratch_len = self.forward.get_inplace_scratch_len().max(self.inverse.get_inplace_scratch_len());
        rows.par_chunks_mut(n).zip(table.par_chunks(n)).for_each_init(
            || vec![Complex64::new(0.0, 0.0); scratch_len],
            |scratch, (row, factors)| {
                self.forward.process_with_scratch(row, scratch);
                row.iter_mut().zip(factors).for_each(|(c, f)| *c *= f);
                self.inverse.process_with_scratch(row, scratch);
            },
        );
    }
}

fn run_rows(plan: &Arc<dyn Fft<f64>>, rows: &mut [Complex64], n: usize) {
    let scratch_len = plan.get_inplace_scratch_len();
    rows.par_chunks_mut(n).for_each_init(
        || vec![Complex64::new(0.0, 0.0); scratch_len],
        |scratch, row| plan.process_with_scratch(row, scratch),
    );
}

/// Transposes a row-major `rows × cols` matrix into `out` (`cols × rows`).
pub fn transpose(src: &[Complex64], rows: usize, cols: usize, out: &mut [Complex64]) {
    debug_assert_eq!(src.len(), rows * cols);
    debug_assert_eq!(out.len(), rows * cols);
    const BLOCK: usize = 32;
    for rb in (0..rows).step_by(BLOCK) {
        for cb in (0..cols).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(rows) {
                for c in cb..(cb + BLOCK).min(cols) {
                    out[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Plans for both axes of a [`Grid2D`]. Immutable and shareable.
#[derive(Debug, Clone)]
pub struct SpectralWorkspace {
    grid: Grid2D,
    pub x: AxisTransform,
    pub v: AxisTransform,
}

impl SpectralWorkspace {
    pub fn new(grid: &Grid2D) -> Self {
        Self { grid: *grid, x: AxisTransform::new(grid.x), v: AxisTransform::new(grid.v) }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Applies a spectral multiplier along x. `multiplier(j, m)` is evaluated for
    /// velocity row `j` and x-wavenumber bin `m`; normalization is handled here.
    pub fn filter_x<F>(&self, amps: &mut [Complex64], multiplier: F)
    where
        F: Fn(usize, usize) -> Complex64 + Sync,
    {
        let (n_x, n_v) = (self.grid.n_x(), self.grid.n_v());
        let scale = 1.0 / n_x as f64;
        let mut t = vec![Complex64::new(0.0, 0.0); amps.len()];
        transpose(amps, n_x, n_v, &mut t);
        self.x.filter_rows(&mut t, |j, m| multiplier(j, m) * scale);
        transpose(&t, n_v, n_x, amps);
    }

    /// Applies a spectral multiplier along v; `multiplier(i, m)` for x column `i`.
    pub fn filter_v<F>(&self, amps: &mut [Complex64], multiplier: F)
    where
        F: Fn(usize, usize) -> Complex64 + Sync,
    {
        let scale = 1.0 / self.grid.n_v() as f64;
        self.v.filter_rows(amps, |i, m| multiplier(i, m) * scale);
    }

    /// `∂ψ/∂x` by spectral differentiation (Nyquist bin dropped).
    pub fn d_dx(&self, amps: &[Complex64]) -> Vec<Complex64> {
        let mut out = amps.to_vec();
        let k = self.x.k_deriv();
        self.filter_x(&mut out, |_, m| Complex64::new(0.0, k[m]));
        out
    }

    /// `∂ψ/∂v` by spectral differentiation (Nyquist bin dropped).
    pub fn d_dv(&self, amps: &[Complex64]) -> Vec<Complex64> {
        let mut out = amps.to_vec();
        let k = self.v.k_deriv();
        self.filter_v(&mut out, |_, m| Complex64::new(0.0, k[m]));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn derivative_of_a_lattice_sine_is_exact() {
        let g = make_grid(0.0, 2.0 * std::f64::consts::PI, 32, -1.0, 1.0, 16).unwrap();
        let ws = SpectralWorkspace::new(&g);
        let xs = g.x.nodes();
        let vs = g.v.nodes();
        let amps: Vec<Complex64> =
            xs.iter().flat_map(|&x| vs.iter().map(move |&v| Complex64::new((3.0 * x).sin() * (1.0 + v), 0.0))).collect();
        let d = ws.d_dx(&amps);
        for (i, &x) in xs.iter().enumerate() {
            for (j, &v) in vs.iter().enumerate() {
                let expect = 3.0 * (3.0 * x).cos() * (1.0 + v);
                assert!((d[i * 16 + j].re - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transpose_round_trip() {
        let src: Vec<Complex64> = (0..6 * 40).map(|k| Complex64::new(k as f64, -(k as f64))).collect();
        let mut t = vec![Complex64::new(0.0, 0.0); src.len()];
        let mut back = t.clone();
        transpose(&src, 6, 40, &mut t);
        assert_eq!(t[3 * 6 + 2], src[2 * 40 + 3]);
        transpose(&t, 40, 6, &mut back);
        assert_eq!(back, src);
    }
}
