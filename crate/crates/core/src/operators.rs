//! Actions of x̂, v̂, p̂, â and the classical energy on grid wave functions,
//! representation changes, translations and the commutator/Weyl residual checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::force::ForceField;
use crate::grid::{Axis, Grid2D};
use crate::spectral::{transpose, SpectralWorkspace};
use crate::wavefunction::{WaveFunction2D, SUPPORT_WIDTHS};

/// Largest boundary amplitude, relative to the peak, for a state to count as
/// interior-supported.
pub const EDGE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObservableTag {
    Position,
    Velocity,
    Momentum,
    Acceleratum,
    ClassicalEnergy,
}

impl ObservableTag {
    pub const ALL: [ObservableTag; 5] = [
        ObservableTag::Position,
        ObservableTag::Velocity,
        ObservableTag::Momentum,
        ObservableTag::Acceleratum,
        ObservableTag::ClassicalEnergy,
    ];

    /// Multiplication operators in the position-velocity basis.
    pub fn is_diagonal(self) -> bool {
        matches!(self, Self::Position | Self::Velocity | Self::ClassicalEnergy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeylKind {
    /// `e^{-iξp/ħ} e^{-iμx/ħ} = e^{iξμ/ħ} e^{-iμx/ħ} e^{-iξp/ħ}`
    PositionMomentum,
    /// `e^{-iαa/ħ} e^{-iβv/ħ} = e^{iαβ/ħ} e^{-iβv/ħ} e^{-iαa/ħ}`
    VelocityAcceleratum,
}

/// Moment summary of `|ψ|²`: means and standard deviations along both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_v: f64,
    pub std_x: f64,
    pub std_v: f64,
}

impl Moments {
    pub fn of(wf: &WaveFunction2D) -> Result<Self> {
        let g = wf.grid();
        let total = wf.norm()?.powi(2);
        if total == 0.0 {
            return Err(Error::Data("moments of a zero wave function".into()));
        }
        let (mut sx, mut sxx, mut sv, mut svv) = (0.0, 0.0, 0.0, 0.0);
        let xs = g.x.nodes();
        let vs = g.v.nodes();
        for (i, row) in wf.amps().chunks(g.n_v()).enumerate() {
            let x = xs[i];
            let mut row_w = 0.0;
            for (a, &v) in row.iter().zip(&vs) {
                let w = a.norm_sqr();
                row_w += w;
                sv += v * w;
                svv += v * v * w;
            }
            sx += x * row_w;
            sxx += x * x * row_w;
        }
        let scale = g.cell() / total;
        let (mx, mv) = (sx * scale, sv * scale);
        Ok(Self {
            mean_x: mx,
            mean_v: mv,
            std_x: (sxx * scale - mx * mx).max(0.0).sqrt(),
            std_v: (svv * scale - mv * mv).max(0.0).sqrt(),
        })
    }

    fn check_x(&self, axis: &Axis, shift: f64) -> Result<()> {
        support_inside(axis, self.mean_x + shift, self.std_x, "x")
    }

    fn check_v(&self, axis: &Axis, shift: f64) -> Result<()> {
        support_inside(axis, self.mean_v + shift, self.std_v, "v")
    }
}

fn support_inside(axis: &Axis, centre: f64, std: f64, name: &str) -> Result<()> {
    let reach = SUPPORT_WIDTHS * std;
    if axis.contains_interval(centre - reach, centre + reach) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} support [{:.6}, {:.6}] crosses the periodic boundary of [{}, {}]",
            centre - reach,
            centre + reach,
            axis.min,
            axis.max
        )))
    }
}

/// Operator actions bound to one grid and one value of ħ.
#[derive(Debug, Clone)]
pub struct OperatorAlgebra {
    ws: SpectralWorkspace,
    hbar: f64,
}

impl OperatorAlgebra {
    pub fn new(grid: &Grid2D, hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::Config(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { ws: SpectralWorkspace::new(grid), hbar })
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        self.ws.grid()
    }

    #[inline]
    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    #[inline]
    pub fn workspace(&self) -> &SpectralWorkspace {
        &self.ws
    }

    fn check_grid(&self, wf: &WaveFunction2D) -> Result<()> {
        if wf.grid() != self.grid() {
            return Err(Error::Shape("wave function grid differs from the operator grid".into()));
        }
        Ok(())
    }

    /// Pointwise weight of a diagonal operator at node `(i, j)`.
    fn diagonal_weights(&self, tag: ObservableTag, force: Option<&ForceField>) -> Result<Vec<f64>> {
        let g = self.grid();
        let xs = g.x.nodes();
        let vs = g.v.nodes();
        let mut w = Vec::with_capacity(g.len());
        match tag {
            ObservableTag::Position => xs.iter().for_each(|&x| w.extend(std::iter::repeat_n(x, vs.len()))),
            ObservableTag::Velocity => xs.iter().for_each(|_| w.extend_from_slice(&vs)),
            ObservableTag::ClassicalEnergy => {
                let force = force.ok_or_else(|| Error::Argument("ClassicalEnergy needs a force field".into()))?;
                let half_m = 0.5 * force.mass;
                for &x in &xs {
                    let pot = force.potential(x);
                    w.extend(vs.iter().map(|&v| half_m * v * v + pot));
                }
            }
            ObservableTag::Momentum | ObservableTag::Acceleratum => {
                return Err(Error::Argument(format!("{tag:?} is not diagonal in the position-velocity basis")))
            }
        }
        Ok(w)
    }

    /// Raw operator action on an amplitude array laid out on this grid.
    pub fn apply_amps(&self, tag: ObservableTag, amps: &[Complex64], force: Option<&ForceField>) -> Result<Vec<Complex64>> {
        let mih = Complex64::new(0.0, -self.hbar);
        Ok(match tag {
            ObservableTag::Momentum => self.ws.d_dx(amps).into_iter().map(|d| d * mih).collect(),
            ObservableTag::Acceleratum => self.ws.d_dv(amps).into_iter().map(|d| d * mih).collect(),
            _ => {
                let w = self.diagonal_weights(tag, force)?;
                amps.iter().zip(&w).map(|(a, w)| a * w).collect()
            }
        })
    }

    /// `H_dyn ψ = v̂p̂ψ + f(x̂)âψ` on raw amplitudes.
    pub fn apply_hdyn_amps(&self, amps: &[Complex64], force: &ForceField) -> Vec<Complex64> {
        let g = self.grid();
        let mih = Complex64::new(0.0, -self.hbar);
        let dx = self.ws.d_dx(amps);
        let dv = self.ws.d_dv(amps);
        let vs = g.v.nodes();
        let fs: Vec<f64> = g.x.nodes().iter().map(|&x| force.f(x)).collect();
        let n_v = g.n_v();
        dx.iter()
            .zip(&dv)
            .enumerate()
            .map(|(k, (px, pv))| (px * vs[k % n_v] + pv * fs[k / n_v]) * mih)
            .collect()
    }

    pub fn apply(&self, tag: ObservableTag, wf: &WaveFunction2D, force: Option<&ForceField>) -> Result<WaveFunction2D> {
        self.check_grid(wf)?;
        wf.check_finite()?;
        WaveFunction2D::from_amps(*wf.grid(), self.apply_amps(tag, wf.amps(), force)?)
    }

    /// Axis of momentum values `ħk` in ascending order, Nyquist first.
    pub fn momentum_axis(&self) -> Axis {
        let a = &self.grid().x;
        let p_nyq = self.hbar * PI / a.spacing();
        Axis { min: -p_nyq, max: p_nyq, n: a.n }
    }

    /// Unitary change to the momentum-velocity representation. The returned
    /// function lives on a grid whose first axis is momentum (ascending order).
    pub fn to_momentum_rep(&self, wf: &WaveFunction2D) -> Result<WaveFunction2D> {
        self.check_grid(wf)?;
        wf.check_finite()?;
        let g = *self.grid();
        let (n_x, n_v) = (g.n_x(), g.n_v());
        let mut t = vec![Complex64::new(0.0, 0.0); g.len()];
        transpose(wf.amps(), n_x, n_v, &mut t);
        self.ws.x.forward_rows(&mut t);
        let c = g.dx() / (2.0 * PI * self.hbar).sqrt();
        let k = self.ws.x.k();
        let half = n_x / 2;
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        for mp in 0..n_x {
            let m = (mp + half) % n_x;
            let phase = Complex64::from_polar(c, -k[m] * g.x.min);
            for j in 0..n_v {
                out[mp * n_v + j] = t[j * n_x + m] * phase;
            }
        }
        WaveFunction2D::from_amps(Grid2D::new(self.momentum_axis(), g.v), out)
    }

    /// Inverse of [`to_momentum_rep`](Self::to_momentum_rep).
    pub fn from_momentum_rep(&self, wfp: &WaveFunction2D) -> Result<WaveFunction2D> {
        let g = *self.grid();
        if *wfp.grid() != Grid2D::new(self.momentum_axis(), g.v) {
            return Err(Error::Shape("momentum-representation grid does not match this operator grid".into()));
        }
        wfp.check_finite()?;
        let (n_x, n_v) = (g.n_x(), g.n_v());
        let c = g.dx() / (2.0 * PI * self.hbar).sqrt();
        let scale = 1.0 / (n_x as f64 * c);
        let k = self.ws.x.k();
        let half = n_x / 2;
        let mut t = vec![Complex64::new(0.0, 0.0); g.len()];
        for mp in 0..n_x {
            let m = (mp + half) % n_x;
            let phase = Complex64::from_polar(scale, k[m] * g.x.min);
            for j in 0..n_v {
                t[j * n_x + m] = wfp.amps()[mp * n_v + j] * phase;
            }
        }
        self.ws.x.inverse_rows(&mut t);
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        transpose(&t, n_v, n_x, &mut out);
        WaveFunction2D::from_amps(g, out)
    }

    /// `e^{-iξp̂/ħ}ψ`, i.e. `ψ(x - ξ, v)`.
    pub fn translate_x(&self, wf: &WaveFunction2D, xi: f64) -> Result<WaveFunction2D> {
        self.check_grid(wf)?;
        Moments::of(wf)?.check_x(&self.grid().x, xi)?;
        if xi == 0.0 {
            return Ok(wf.clone());
        }
        let mut out = wf.clone();
        let k = self.ws.x.k();
        self.ws.filter_x(out.amps_mut(), |_, m| Complex64::from_polar(1.0, -k[m] * xi));
        Ok(out)
    }

    /// `e^{-iαâ/ħ}ψ`, i.e. `ψ(x, v - α)`.
    pub fn boost_v(&self, wf: &WaveFunction2D, alpha: f64) -> Result<WaveFunction2D> {
        self.check_grid(wf)?;
        Moments::of(wf)?.check_v(&self.grid().v, alpha)?;
        if alpha == 0.0 {
            return Ok(wf.clone());
        }
        let mut out = wf.clone();
        let k = self.ws.v.k();
        self.ws.filter_v(out.amps_mut(), |_, m| Complex64::from_polar(1.0, -k[m] * alpha));
        Ok(out)
    }

    /// Multiplies by `e^{-iμx/ħ}` (`WeylKind::PositionMomentum`) or `e^{-iμv/ħ}`.
    fn modulate(&self, wf: &WaveFunction2D, kind: WeylKind, mu: f64) -> WaveFunction2D {
        let g = self.grid();
        let xs = g.x.nodes();
        let vs = g.v.nodes();
        let mut out = wf.clone();
        let n_v = g.n_v();
        for (i, row) in out.amps_mut().chunks_mut(n_v).enumerate() {
            for (j, a) in row.iter_mut().enumerate() {
                let coord = match kind {
                    WeylKind::PositionMomentum => xs[i],
                    WeylKind::VelocityAcceleratum => vs[j],
                };
                *a *= Complex64::from_polar(1.0, -mu * coord / self.hbar);
            }
        }
        out
    }

    /// Fails unless the 5σ moment box lies inside the grid and the boundary
    /// amplitudes are negligible relative to the peak.
    pub fn check_interior(&self, wf: &WaveFunction2D) -> Result<()> {
        self.check_grid(wf)?;
        let m = Moments::of(wf)?;
        let g = self.grid();
        m.check_x(&g.x, 0.0).map_err(to_precondition)?;
        m.check_v(&g.v, 0.0).map_err(to_precondition)?;
        let ratio = edge_ratio(wf);
        if ratio > EDGE_TOLERANCE {
            return Err(Error::Precondition(format!(
                "boundary amplitude is {ratio:.3e} of the peak (limit {EDGE_TOLERANCE:.0e})"
            )));
        }
        Ok(())
    }

    /// `[Â, B̂]ψ` together with the constant `c` of the continuum identity `[Â, B̂] = c`.
    pub fn commutator_residual(
        &self,
        a: ObservableTag,
        b: ObservableTag,
        wf: &WaveFunction2D,
    ) -> Result<(WaveFunction2D, Complex64)> {
        use ObservableTag::*;
        if a == ClassicalEnergy || b == ClassicalEnergy {
            return Err(Error::Argument("commutators are tabulated for x, v, p and a only".into()));
        }
        self.check_interior(wf)?;
        let ih = Complex64::new(0.0, self.hbar);
        let expected = match (a, b) {
            (Position, Momentum) | (Velocity, Acceleratum) => ih,
            (Momentum, Position) | (Acceleratum, Velocity) => -ih,
            _ => Complex64::new(0.0, 0.0),
        };
        let field = if a.is_diagonal() && b.is_diagonal() {
            // Product of multiplication operators is multiplication by the product.
            let wa = self.diagonal_weights(a, None)?;
            let wb = self.diagonal_weights(b, None)?;
            wf.amps()
                .iter()
                .enumerate()
                .map(|(k, psi)| {
                    let (ab, ba) = (wa[k] * wb[k], wb[k] * wa[k]);
                    psi * (ab - ba)
                })
                .collect()
        } else {
            let ab = self.apply_amps(a, &self.apply_amps(b, wf.amps(), None)?, None)?;
            let ba = self.apply_amps(b, &self.apply_amps(a, wf.amps(), None)?, None)?;
            ab.iter().zip(&ba).map(|(x, y)| x - y).collect()
        };
        Ok((WaveFunction2D::from_amps(*wf.grid(), field)?, expected))
    }

    /// Largest pointwise modulus of `lhs ψ - rhs ψ` for the named Weyl relation.
    pub fn weyl_residual(&self, kind: WeylKind, wf: &WaveFunction2D, shift: f64, mu: f64) -> Result<f64> {
        self.check_interior(wf)?;
        let shift_op = |w: &WaveFunction2D| match kind {
            WeylKind::PositionMomentum => self.translate_x(w, shift),
            WeylKind::VelocityAcceleratum => self.boost_v(w, shift),
        };
        let lhs = shift_op(&self.modulate(wf, kind, mu))?;
        let rhs = self.modulate(&shift_op(wf)?, kind, mu);
        let phase = Complex64::from_polar(1.0, shift * mu / self.hbar);
        Ok(lhs.amps().iter().zip(rhs.amps()).map(|(l, r)| (l - phase * r).norm()).fold(0.0, f64::max))
    }
}

fn to_precondition(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Precondition(m),
        other => other,
    }
}

/// Largest amplitude on the outermost grid lines divided by the peak amplitude.
pub fn edge_ratio(wf: &WaveFunction2D) -> f64 {
    let g = wf.grid();
    let (n_x, n_v) = (g.n_x(), g.n_v());
    let peak = wf.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let mut edge: f64 = 0.0;
    for j in 0..n_v {
        edge = edge.max(wf.at(0, j).norm()).max(wf.at(n_x - 1, j).norm());
    }
    for i in 0..n_x {
        edge = edge.max(wf.at(i, 0).norm()).max(wf.at(i, n_v - 1).norm());
    }
    edge / peak
}
