//! Wave functions on position-velocity grids (and plain position grids).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid2D};

/// Minimum packet width, in grid cells, accepted by [`gaussian_packet`].
pub const MIN_WIDTH_CELLS: f64 = 3.0;
/// Packets must sit this many widths away from every boundary.
pub const SUPPORT_WIDTHS: f64 = 5.0;

/// Parameters of a Gaussian packet centred on the phase point `(x0, v0)`.
///
/// The amplitude convention `exp(-(x-x0)²/(4σ²))` makes the standard deviations of
/// `|ψ|²` equal to `sigma_x` and `sigma_v` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Packet {
    pub x0: f64,
    #[serde(default)]
    pub v0: f64,
    pub sigma_x: f64,
    #[serde(default = "unit")]
    pub sigma_v: f64,
    #[serde(default)]
    pub p0: f64,
    /// Probability weight when several packets are superposed.
    #[serde(default = "unit")]
    pub weight: f64,
}

fn unit() -> f64 {
    1.0
}

impl Packet {
    pub fn new(x0: f64, v0: f64, sigma_x: f64, sigma_v: f64, p0: f64) -> Self {
        Self { x0, v0, sigma_x, sigma_v, p0, weight: 1.0 }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction2D {
    grid: Grid2D,
    amps: Vec<Complex64>,
}

impl WaveFunction2D {
    pub fn zeros(grid: Grid2D) -> Self {
        Self { grid, amps: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_amps(grid: Grid2D, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::Shape(format!("expected {} amplitudes, got {}", grid.len(), amps.len())));
        }
        let wf = Self { grid, amps };
        wf.check_finite()?;
        Ok(wf)
    }

    /// Samples `f(x_i, v_j)` at every node.
    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let vs = grid.v.nodes();
        let mut amps = Vec::with_capacity(grid.len());
        for x in grid.x.nodes() {
            amps.extend(vs.iter().map(|&v| f(x, v)));
        }
        Self { grid, amps }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    #[inline]
    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.amps[self.grid.index(i, j)]
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.amps.iter().position(|a| !(a.re.is_finite() && a.im.is_finite())) {
            None => Ok(()),
            Some(k) => Err(Error::Data(format!("non-finite amplitude at flat index {k}"))),
        }
    }

    /// `Σ|ψ|² dx dv` without finiteness checks.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.cell()
    }

    pub fn norm(&self) -> Result<f64> {
        self.check_finite()?;
        Ok(self.norm_sqr().sqrt())
    }

    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::Shape("inner product of wave functions on different grids".into()));
        }
        Ok(inner_slices(&self.amps, &other.amps) * self.grid.cell())
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self { grid: self.grid, amps: self.amps.iter().map(|a| a * factor).collect() }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm()?;
        if n == 0.0 {
            return Err(Error::Data("cannot normalize a zero wave function".into()));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    /// Largest amplitude modulus.
    pub fn max_abs(&self) -> f64 {
        self.amps.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Discrete L² distance `‖ψ - φ‖`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Shape("distance between wave functions on different grids".into()));
        }
        let s: f64 = self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.cell()).sqrt())
    }

    /// Probability density integrated over v, one value per x node.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dv = self.grid.dv();
        self.amps.chunks(self.grid.n_v()).map(|row| row.iter().map(|a| a.norm_sqr()).sum::<f64>() * dv).collect()
    }

    /// Probability density integrated over x, one value per v node.
    pub fn v_marginal(&self) -> Vec<f64> {
        let n_v = self.grid.n_v();
        let mut out = vec![0.0; n_v];
        for row in self.amps.chunks(n_v) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.norm_sqr();
            }
        }
        let dx = self.grid.dx();
        out.iter_mut().for_each(|o| *o *= dx);
        out
    }
}

/// `Σ conj(a)·b`, accumulated in index order.
pub(crate) fn inner_slices(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

fn check_width(sigma: f64, spacing: f64, min_cells: f64, name: &str) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Argument(format!("{name} must be positive, got {sigma}")));
    }
    if sigma < min_cells * spacing * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!(
            "{name} = {sigma} is narrower than {min_cells} cells ({})",
            min_cells * spacing
        )));
    }
    Ok(())
}

fn check_support(axis: &Axis, centre: f64, sigma: f64, name: &str) -> Result<()> {
    let reach = SUPPORT_WIDTHS * sigma;
    if !axis.contains_interval(centre - reach, centre + reach) {
        return Err(Error::Domain(format!(
            "{name} packet support [{}, {}] leaves the domain [{}, {}]",
            centre - reach,
            centre + reach,
            axis.min,
            axis.max
        )));
    }
    Ok(())
}

/// Normalized Gaussian packet; widths must span at least three cells.
pub fn gaussian_packet(grid: &Grid2D, packet: &Packet, hbar: f64) -> Result<WaveFunction2D> {
    gaussian_packet_with_floor(grid, packet, hbar, MIN_WIDTH_CELLS)
}

/// As [`gaussian_packet`] with a caller-chosen width floor in cells.
pub fn gaussian_packet_with_floor(grid: &Grid2D, packet: &Packet, hbar: f64, min_cells: f64) -> Result<WaveFunction2D> {
    let Packet { x0, v0, sigma_x, sigma_v, p0, .. } = *packet;
    if !(x0.is_finite() && v0.is_finite() && p0.is_finite()) {
        return Err(Error::Argument("packet centre and momentum must be finite".into()));
    }
    check_width(sigma_x, grid.dx(), min_cells, "sigma_x")?;
    check_width(sigma_v, grid.dv(), min_cells, "sigma_v")?;
    check_support(&grid.x, x0, sigma_x, "x")?;
    check_support(&grid.v, v0, sigma_v, "v")?;
    let k0 = p0 / hbar;
    let ax = 1.0 / (4.0 * sigma_x * sigma_x);
    let av = 1.0 / (4.0 * sigma_v * sigma_v);
    WaveFunction2D::from_fn(*grid, |x, v| {
        let envelope = (-(x - x0).powi(2) * ax - (v - v0).powi(2) * av).exp();
        Complex64::from_polar(envelope, k0 * x)
    })
    .normalized()
}

/// `Σ √P_n |G_n⟩` over normalized packets, renormalized. Weights must sum to one.
pub fn superposition(grid: &Grid2D, packets: &[Packet], hbar: f64) -> Result<WaveFunction2D> {
    if packets.is_empty() {
        return Err(Error::Argument("superposition needs at least one packet".into()));
    }
    let total: f64 = packets.iter().map(|p| p.weight).sum();
    if (total - 1.0).abs() > 1e-12 || packets.iter().any(|p| p.weight < 0.0) {
        return Err(Error::Argument(format!("packet weights must be non-negative and sum to 1, got {total}")));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); grid.len()];
    for p in packets {
        let g = gaussian_packet(grid, p, hbar)?;
        let w = p.weight.sqrt();
        amps.iter_mut().zip(g.amps()).for_each(|(a, b)| *a += b * w);
    }
    WaveFunction2D::from_amps(*grid, amps)?.normalized()
}

/// Wave function on a single periodic position axis.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction1D {
    axis: Axis,
    amps: Vec<Complex64>,
}

impl WaveFunction1D {
    pub fn from_amps(axis: Axis, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != axis.n {
            return Err(Error::Shape(format!("expected {} amplitudes, got {}", axis.n, amps.len())));
        }
        let wf = Self { axis, amps };
        wf.check_finite()?;
        Ok(wf)
    }

    pub fn from_fn(axis: Axis, f: impl Fn(f64) -> Complex64) -> Self {
        Self { axis, amps: axis.nodes().into_iter().map(f).collect() }
    }

    #[inline]
    pub fn axis(&self) -> &Axis {
        &self.axis
    }

    #[inline]
    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    #[inline]
    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::Data("non-finite amplitude".into()))
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.axis.spacing()
    }

    pub fn norm(&self) -> Result<f64> {
        self.check_finite()?;
        Ok(self.norm_sqr().sqrt())
    }

    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.axis != other.axis {
            return Err(Error::Shape("inner product of wave functions on different axes".into()));
        }
        Ok(inner_slices(&self.amps, &other.amps) * self.axis.spacing())
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm()?;
        if n == 0.0 {
            return Err(Error::Data("cannot normalize a zero wave function".into()));
        }
        Ok(Self { axis: self.axis, amps: self.amps.iter().map(|a| a / n).collect() })
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.axis != other.axis {
            return Err(Error::Shape("distance between wave functions on different axes".into()));
        }
        let s: f64 = self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.axis.spacing()).sqrt())
    }
}

/// Normalized 1-D Gaussian `exp(-(x-x0)²/(4σ²))·exp(i p0 x/ħ)`.
pub fn gaussian_1d(axis: &Axis, x0: f64, sigma: f64, p0: f64, hbar: f64) -> Result<WaveFunction1D> {
    check_width(sigma, axis.spacing(), MIN_WIDTH_CELLS, "sigma_x")?;
    check_support(axis, x0, sigma, "x")?;
    let k0 = p0 / hbar;
    let a = 1.0 / (4.0 * sigma * sigma);
    WaveFunction1D::from_fn(*axis, |x| Complex64::from_polar((-(x - x0).powi(2) * a).exp(), k0 * x)).normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use proptest::prelude::*;

    fn grid() -> Grid2D {
        make_grid(-16.0, 16.0, 128, -12.0, 12.0, 96).unwrap()
    }

    /// Plain quadrature of `|ψ|²`-weighted coordinates.
    fn quadrature_means(wf: &WaveFunction2D) -> (f64, f64) {
        let g = wf.grid();
        let (mut mx, mut mv) = (0.0, 0.0);
        for i in 0..g.n_x() {
            for j in 0..g.n_v() {
                let w = wf.at(i, j).norm_sqr() * g.cell();
                mx += g.x.node(i) * w;
                mv += g.v.node(j) * w;
            }
        }
        (mx, mv)
    }

    #[test]
    fn centred_packet_is_normalized_and_symmetric() {
        let wf = gaussian_packet(&grid(), &Packet::new(0.0, 0.0, 1.0, 1.0, 0.0), 1.0).unwrap();
        assert!((wf.norm().unwrap() - 1.0).abs() < 1e-12);
        let (mx, mv) = quadrature_means(&wf);
        assert!(mx.abs() < 1e-12 && mv.abs() < 1e-12);
    }

    #[test]
    fn offset_packet_means() {
        let g = make_grid(-8.0, 12.0, 256, -12.0, 10.0, 256).unwrap();
        let wf = gaussian_packet(&g, &Packet::new(2.0, -1.0, 0.5, 0.5, 0.0), 1.0).unwrap();
        let (mx, mv) = quadrature_means(&wf);
        assert!((mx - 2.0).abs() < 1e-10, "{mx}");
        assert!((mv + 1.0).abs() < 1e-10, "{mv}");
    }

    #[test]
    fn zero_and_scaled_norms() {
        let g = grid();
        assert_eq!(WaveFunction2D::zeros(g).norm().unwrap(), 0.0);
        let wf = gaussian_packet(&g, &Packet::new(0.0, 0.0, 1.0, 1.0, 0.0), 1.0).unwrap();
        let twice = wf.scaled(Complex64::new(2.0, 0.0));
        assert!((twice.norm().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_is_data_error() {
        let g = grid();
        let mut wf = WaveFunction2D::zeros(g);
        wf.amps_mut()[17] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(wf.norm(), Err(Error::Data(_))));
    }

    #[test]
    fn under_resolved_and_boundary_packets_rejected() {
        let g = grid();
        let e = gaussian_packet(&g, &Packet::new(0.0, 0.0, 0.5 * g.dx(), 1.0, 0.0), 1.0).unwrap_err();
        assert!(matches!(e, Error::Resolution(_)));
        let e = gaussian_packet(&g, &Packet::new(13.0, 0.0, 1.0, 1.0, 0.0), 1.0).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
        let e = gaussian_packet(&g, &Packet::new(0.0, -9.0, 1.0, 1.0, 0.0), 1.0).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
    }

    #[test]
    fn inner_product_identities() {
        let g = grid();
        let a = gaussian_packet(&g, &Packet::new(-1.0, 0.5, 1.0, 0.8, 1.0), 1.0).unwrap();
        let self_inner = a.inner(&a).unwrap();
        assert!((self_inner.re - a.norm().unwrap().powi(2)).abs() < 1e-14);
        assert_eq!(self_inner.im, 0.0);
        let ia = a.scaled(Complex64::i());
        let z = a.inner(&ia).unwrap();
        assert!((z - Complex64::i() * a.norm_sqr()).norm() < 1e-14);
    }

    #[test]
    fn separated_packets_are_nearly_orthogonal() {
        // Analytic overlap of equal-width packets a distance d apart: exp(-d²/(8σ²)).
        let g = make_grid(-20.0, 20.0, 256, -6.0, 6.0, 64).unwrap();
        let sigma = 1.0;
        let a = gaussian_packet(&g, &Packet::new(-7.0, 0.0, sigma, 1.0, 0.0), 1.0).unwrap();
        let b = gaussian_packet(&g, &Packet::new(7.0, 0.0, sigma, 1.0, 0.0), 1.0).unwrap();
        let overlap = a.inner(&b).unwrap().norm();
        let analytic = (-196.0f64 / (8.0 * sigma * sigma)).exp();
        assert!(overlap < 1e-8);
        assert!((overlap - analytic).abs() < 1e-12, "{overlap} vs {analytic}");
    }

    #[test]
    fn inner_rejects_grid_mismatch() {
        let a = WaveFunction2D::zeros(grid());
        let b = WaveFunction2D::zeros(make_grid(-16.0, 16.0, 64, -12.0, 12.0, 96).unwrap());
        assert!(matches!(a.inner(&b), Err(Error::Shape(_))));
    }

    #[test]
    fn superposition_weights_validated() {
        let g = grid();
        let p = Packet::new(0.0, 0.0, 1.0, 1.0, 0.0);
        assert!(superposition(&g, &[p.with_weight(0.5), p.with_weight(0.6)], 1.0).is_err());
        let wf = superposition(&g, &[p.with_weight(0.5), Packet { x0: 5.0, ..p }.with_weight(0.5)], 1.0).unwrap();
        assert!((wf.norm().unwrap() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn packets_are_normalized(x0 in -4.0f64..4.0, v0 in -3.0f64..3.0, sx in 0.8f64..2.0, sv in 0.8f64..1.5, p0 in -3.0f64..3.0) {
            let wf = gaussian_packet(&grid(), &Packet::new(x0, v0, sx, sv, p0), 1.0).unwrap();
            prop_assert!((wf.norm().unwrap() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn inner_is_conjugate_symmetric(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = make_grid(-1.0, 1.0, 8, -1.0, 1.0, 8).unwrap();
            let mut draw = || WaveFunction2D::from_fn(g, |_, _| Complex64::new(rng.gen_range(-1e3..1e3), rng.gen_range(-1e3..1e3)));
            let a = draw();
            let b = draw();
            prop_assert_eq!(a.inner(&b).unwrap(), a.inner(&b).unwrap());
            prop_assert_eq!(a.inner(&b).unwrap(), b.inner(&a).unwrap().conj());
        }
    }
}
