//! Time evolution: the split-step propagator of `∂ψ/∂t = -(v ∂ψ/∂x + f(x) ∂ψ/∂v)`,
//! its characteristics oracle, the standard one-dimensional Schrödinger solver
//! and single-photon advection.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{flow, rk4_step, FLOW_STEP};
use crate::error::{Error, Result};
use crate::force::{ClassicalState, ForceField, ForceKind};
use crate::grid::{Axis, Grid2D};
use crate::observables::{moments_1d, AuxMeans, ObservableRecord, ObservableSeries, Recorder, NORM_TOLERANCE};
use crate::spectral::{transpose, AxisTransform, SpectralWorkspace};
use crate::wavefunction::{WaveFunction1D, WaveFunction2D, SUPPORT_WIDTHS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    StrangSplit,
    Characteristics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSpec {
    pub dt: f64,
    pub n_steps: usize,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

impl EvolveSpec {
    pub fn new(dt: f64, n_steps: usize, record_every: usize) -> Self {
        Self { dt, n_steps, method: Method::StrangSplit, record_every }
    }

    /// `n_steps` steps of equal length covering exactly `duration`.
    pub fn covering(duration: f64, n_steps: usize, record_every: usize) -> Self {
        Self::new(duration / n_steps as f64, n_steps, record_every)
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn duration(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("evolve.dt must be positive, got {}", self.dt)));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("evolve.n_steps must be at least 1".into()));
        }
        if self.record_every == 0 || !self.n_steps.is_multiple_of(self.record_every) {
            return Err(Error::Config(format!(
                "evolve.record_every = {} must divide n_steps = {}",
                self.record_every, self.n_steps
            )));
        }
        Ok(())
    }

    fn record_time(&self, k: usize) -> f64 {
        (k * self.record_every) as f64 * self.dt
    }
}

fn check_normalized(norm_sqr: f64) -> Result<()> {
    if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Precondition(format!("initial state is not normalized (‖ψ‖² = {norm_sqr})")));
    }
    Ok(())
}

/// `|ψ|²` above this fraction of the peak counts as support (five widths of a Gaussian).
fn support_threshold() -> f64 {
    (-0.5 * SUPPORT_WIDTHS * SUPPORT_WIDTHS).exp()
}

/// Fails with a domain error when any point on the rim of the support of `ψ`
/// would cross the periodic boundary while following the classical flow for
/// `duration`. The rim is every support cell with a neighbour outside it.
pub fn check_wrap_budget(wf: &WaveFunction2D, force: &ForceField, duration: f64) -> Result<()> {
    let g = *wf.grid();
    let (n_x, n_v) = (g.n_x(), g.n_v());
    let peak = wf.amps().iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::Data("wrap budget of a zero wave function".into()));
    }
    let cut = peak * support_threshold();
    let inside = |i: usize, j: usize| wf.at(i, j).norm_sqr() >= cut;
    let mut rim = Vec::new();
    for i in 0..n_x {
        for j in 0..n_v {
            if !inside(i, j) {
                continue;
            }
            if i == 0 || j == 0 || i == n_x - 1 || j == n_v - 1 {
                return Err(Error::Domain(format!(
                    "support touches the periodic boundary at (x, v) = ({}, {})",
                    g.x.node(i),
                    g.v.node(j)
                )));
            }
            if !(inside(i - 1, j) && inside(i + 1, j) && inside(i, j - 1) && inside(i, j + 1)) {
                rim.push(ClassicalState::new(g.x.node(i), g.v.node(j)));
            }
        }
    }
    let n = (duration / (10.0 * FLOW_STEP)).ceil().max(1.0) as usize;
    let h = duration / n as f64;
    let in_domain = |s: &ClassicalState| g.x.contains_interval(s.x, s.x) && g.v.contains_interval(s.v, s.v);
    for start in rim {
        let mut s = start;
        for k in 1..=n {
            s = rk4_step(s, force, h);
            if !in_domain(&s) {
                return Err(Error::Domain(format!(
                    "wrap budget exceeded: support point ({:.4}, {:.4}) reaches ({:.4}, {:.4}) at t = {:.4}, outside {}",
                    start.x,
                    start.v,
                    s.x,
                    s.v,
                    k as f64 * h,
                    g.summary()
                )));
            }
        }
    }
    Ok(())
}

/// Strang splitting of the two exact shears: half x-drift, full v-kick, half
/// x-drift. Consecutive half drifts between records are fused.
#[derive(Debug, Clone)]
pub struct StrangPropagator {
    ws: SpectralWorkspace,
    dt: f64,
    /// `e^{-i k_x v τ}/n_x`, laid out `[j][m]` for τ = dt/2 and τ = dt.
    drift_half: Vec<Complex64>,
    drift_full: Vec<Complex64>,
    /// `e^{-i k_v f(x) dt}/n_v`, laid out `[i][m]`.
    kick: Vec<Complex64>,
}

impl StrangPropagator {
    pub fn new(grid: &Grid2D, force: &ForceField, dt: f64) -> Result<Self> {
        force.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let ws = SpectralWorkspace::new(grid);
        let drift = |tau: f64| {
            let kx = ws.x.k();
            let s = 1.0 / grid.n_x() as f64;
            grid.v.nodes().iter().flat_map(|&v| kx.iter().map(move |&k| Complex64::from_polar(s, -k * v * tau))).collect()
        };
        let drift_half = drift(0.5 * dt);
        let drift_full = drift(dt);
        let kv = ws.v.k();
        let s = 1.0 / grid.n_v() as f64;
        let kick = grid
            .x
            .nodes()
            .iter()
            .flat_map(|&x| {
                let f = force.f(x);
                kv.iter().map(move |&k| Complex64::from_polar(s, -k * f * dt))
            })
            .collect();
        Ok(Self { ws, dt, drift_half, drift_full, kick })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid2D {
        self.ws.grid()
    }

    fn drift(&self, amps: &mut [Complex64], scratch: &mut [Complex64], table: &[Complex64]) {
        let (n_x, n_v) = (self.grid().n_x(), self.grid().n_v());
        transpose(amps, n_x, n_v, scratch);
        self.ws.x.filter_rows_table(scratch, table);
        transpose(scratch, n_v, n_x, amps);
    }

    /// Advances `steps` full Strang steps in place.
    pub fn advance(&self, amps: &mut [Complex64], steps: usize) {
        if steps == 0 {
            return;
        }
        let mut scratch = vec![Complex64::new(0.0, 0.0); amps.len()];
        self.drift(amps, &mut scratch, &self.drift_half);
        for s in 0..steps {
            self.ws.v.filter_rows_table(amps, &self.kick);
            if s + 1 < steps {
                self.drift(amps, &mut scratch, &self.drift_full);
            }
        }
        self.drift(amps, &mut scratch, &self.drift_half);
    }
}

/// Evolves `wf` under `v̂p̂ + f(x̂)â`, recording observables at `t = 0` and every
/// `record_every` steps.
pub fn evolve_config_space(
    wf: &WaveFunction2D,
    force: &ForceField,
    spec: &EvolveSpec,
    hbar: f64,
) -> Result<(WaveFunction2D, ObservableSeries)> {
    evolve_config_space_observed(wf, force, spec, hbar, |_, _, _| {})
}

/// As [`evolve_config_space`]; `observe(k, t, ψ)` sees the state at every record.
pub fn evolve_config_space_observed(
    wf: &WaveFunction2D,
    force: &ForceField,
    spec: &EvolveSpec,
    hbar: f64,
    mut observe: impl FnMut(usize, f64, &WaveFunction2D),
) -> Result<(WaveFunction2D, ObservableSeries)> {
    spec.validate()?;
    force.validate()?;
    wf.check_finite()?;
    check_normalized(wf.norm_sqr())?;
    check_wrap_budget(wf, force, spec.duration())?;
    let g = *wf.grid();
    let recorder = Recorder::new(&g, force, hbar)?;
    let mut series = ObservableSeries::new("", g.summary(), spec.dt);
    series.push(recorder.record(0.0, wf)?)?;
    observe(0, 0.0, wf);
    let n_records = spec.n_steps / spec.record_every;
    let out = match spec.method {
        Method::StrangSplit => {
            let prop = StrangPropagator::new(&g, force, spec.dt)?;
            let mut amps = wf.amps().to_vec();
            for k in 1..=n_records {
                prop.advance(&mut amps, spec.record_every);
                let state = WaveFunction2D::from_amps(g, amps).map_err(numeric)?;
                let t = spec.record_time(k);
                series.push(recorder.record(t, &state)?)?;
                observe(k, t, &state);
                amps = state.into_amps();
            }
            WaveFunction2D::from_amps(g, amps)?
        }
        Method::Characteristics => {
            let interp = TrigInterpolant::new(wf);
            let mut last = wf.clone();
            for k in 1..=n_records {
                let t = spec.record_time(k);
                last = transport(&interp, &g, force, t);
                series.push(recorder.record(t, &last)?)?;
                observe(k, t, &last);
            }
            last
        }
    };
    Ok((out, series))
}

fn numeric(e: Error) -> Error {
    match e {
        Error::Data(m) => Error::Numeric(format!("evolution produced {m}")),
        other => other,
    }
}

/// Trigonometric interpolant of grid data, with negligible modes pruned per axis.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    x_min: f64,
    v_min: f64,
    kx: Vec<f64>,
    kv: Vec<f64>,
    /// Retained coefficients, `[mx][mv]` over the retained wavenumbers.
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    /// Modes whose largest coefficient is below this fraction of the overall
    /// largest are dropped.
    pub const PRUNE: f64 = 1e-16;

    pub fn new(wf: &WaveFunction2D) -> Self {
        let g = *wf.grid();
        let (n_x, n_v) = (g.n_x(), g.n_v());
        let ws = SpectralWorkspace::new(&g);
        let mut c = wf.amps().to_vec();
        ws.v.forward_rows(&mut c);
        let mut t = vec![Complex64::new(0.0, 0.0); c.len()];
        transpose(&c, n_x, n_v, &mut t);
        ws.x.forward_rows(&mut t);
        transpose(&t, n_v, n_x, &mut c);
        let scale = 1.0 / (n_x * n_v) as f64;
        c.iter_mut().for_each(|z| *z *= scale);

        let cmax = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let cut = cmax * Self::PRUNE;
        let keep_x: Vec<usize> = (0..n_x).filter(|&m| c[m * n_v..(m + 1) * n_v].iter().any(|z| z.norm() > cut)).collect();
        let keep_v: Vec<usize> = (0..n_v).filter(|&l| (0..n_x).any(|m| c[m * n_v + l].norm() > cut)).collect();
        let coeffs = keep_x.iter().flat_map(|&m| keep_v.iter().map(move |&l| (m, l))).map(|(m, l)| c[m * n_v + l]).collect();
        let kx_all = g.x.wavenumbers();
        let kv_all = g.v.wavenumbers();
        Self {
            x_min: g.x.min,
            v_min: g.v.min,
            kx: keep_x.iter().map(|&m| kx_all[m]).collect(),
            kv: keep_v.iter().map(|&l| kv_all[l]).collect(),
            coeffs,
        }
    }

    /// Number of retained `(x, v)` modes.
    pub fn modes(&self) -> (usize, usize) {
        (self.kx.len(), self.kv.len())
    }

    pub fn eval(&self, x: f64, v: f64, ev: &mut Vec<Complex64>) -> Complex64 {
        let dx = x - self.x_min;
        let dv = v - self.v_min;
        ev.clear();
        ev.extend(self.kv.iter().map(|k| Complex64::cis(k * dv)));
        let nv = self.kv.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, k) in self.kx.iter().enumerate() {
            let row = &self.coeffs[m * nv..(m + 1) * nv];
            let inner = row.iter().zip(ev.iter()).fold(Complex64::new(0.0, 0.0), |s, (c, e)| s + c * e);
            acc += inner * Complex64::cis(k * dx);
        }
        acc
    }
}

fn transport(interp: &TrigInterpolant, g: &Grid2D, force: &ForceField, t: f64) -> WaveFunction2D {
    let xs = g.x.nodes();
    let vs = g.v.nodes();
    let mut amps = vec![Complex64::new(0.0, 0.0); g.len()];
    amps.par_chunks_mut(g.n_v()).enumerate().for_each_init(Vec::new, |ev, (i, row)| {
        for (j, a) in row.iter_mut().enumerate() {
            let pre = flow(ClassicalState::new(xs[i], vs[j]), force, -t);
            // preimages outside the box carry no amplitude; the interpolant would wrap them
            let inside = (g.x.min..=g.x.max).contains(&pre.x) && (g.v.min..=g.v.max).contains(&pre.v);
            *a = if inside { interp.eval(pre.x, pre.v, ev) } else { Complex64::new(0.0, 0.0) };
        }
    });
    WaveFunction2D::from_amps(*g, amps).expect("interpolated amplitudes are finite")
}

/// Oracle solution `ψ(x, v, t) = ψ0(Φ_{-t}(x, v))` by backward RK4 flow from each
/// node and trigonometric interpolation of `ψ0` at the preimage.
pub fn evolve_characteristics(wf0: &WaveFunction2D, force: &ForceField, t: f64) -> Result<WaveFunction2D> {
    force.validate()?;
    wf0.check_finite()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Argument(format!("t must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(wf0.clone());
    }
    check_normalized(wf0.norm_sqr())?;
    check_wrap_budget(wf0, force, t)?;
    let out = transport(&TrigInterpolant::new(wf0), wf0.grid(), force, t);
    out.check_finite().map_err(numeric)?;
    Ok(out)
}

/// Wrap budget of a 1-D packet: its centre follows the classical flow and its
/// width is bounded by free spreading (or the harmonic breathing envelope).
pub fn check_wrap_budget_1d(wf: &WaveFunction1D, force: &ForceField, duration: f64, hbar: f64) -> Result<()> {
    let axis = wf.axis();
    let tr = AxisTransform::new(*axis);
    let p_psi = momentum_1d(&tr, wf.amps(), hbar);
    let (mean_x, std_x, mean_p, std_p, _) = moments_1d(wf, &p_psi)?;
    let m = force.mass;
    let n = (duration / (10.0 * FLOW_STEP)).ceil().max(1.0) as usize;
    let h = duration / n as f64;
    let mut s = ClassicalState::new(mean_x, mean_p / m);
    for k in 0..=n {
        if k > 0 {
            s = rk4_step(s, force, h);
        }
        let t = k as f64 * h;
        let spread = match force.kind {
            ForceKind::Harmonic { omega } if omega != 0.0 => std_p / (m * omega.abs()),
            _ => std_p * t / m,
        };
        let reach = SUPPORT_WIDTHS * (std_x * std_x + spread * spread).sqrt();
        if !axis.contains_interval(s.x - reach, s.x + reach) {
            return Err(Error::Domain(format!(
                "wrap budget exceeded: packet [{:.4}, {:.4}] at t = {t:.4} leaves [{}, {}]",
                s.x - reach,
                s.x + reach,
                axis.min,
                axis.max
            )));
        }
    }
    Ok(())
}

fn momentum_1d(tr: &AxisTransform, amps: &[Complex64], hbar: f64) -> Vec<Complex64> {
    let mut out = amps.to_vec();
    let k = tr.k_deriv();
    let s = hbar / tr.len() as f64;
    tr.filter_rows(&mut out, |_, m| Complex64::new(k[m] * s, 0.0));
    out
}

struct Recorder1D<'a> {
    tr: AxisTransform,
    hbar: f64,
    force: Option<&'a ForceField>,
    potential: Vec<f64>,
    f: Vec<f64>,
    photon_velocity: f64,
}

impl Recorder1D<'_> {
    fn record(&self, t: f64, wf: &WaveFunction1D) -> Result<ObservableRecord> {
        wf.check_finite().map_err(numeric)?;
        let p_psi = momentum_1d(&self.tr, wf.amps(), self.hbar);
        let (mean_x, std_x, mean_p, std_p, p2) = moments_1d(wf, &p_psi)?;
        let norm_sqr = wf.norm_sqr();
        let weighted = |w: &[f64]| wf.amps().iter().zip(w).map(|(a, w)| a.norm_sqr() * w).sum::<f64>() * wf.axis().spacing() / norm_sqr;
        let (mean_v, std_v, energy_class, aux) = match self.force {
            Some(force) => {
                let m = force.mass;
                let aux = AuxMeans { force: weighted(&self.f), ..AuxMeans::UNDEFINED };
                (mean_p / m, std_p / m, p2 / (2.0 * m) + weighted(&self.potential), aux)
            }
            None => (self.photon_velocity, 0.0, f64::NAN, AuxMeans::UNDEFINED),
        };
        Ok(ObservableRecord {
            t,
            mean_x,
            mean_v,
            mean_p,
            mean_a: f64::NAN,
            std_x,
            std_v,
            std_p,
            std_a: f64::NAN,
            energy_class,
            norm: norm_sqr.sqrt(),
            aux,
        })
    }
}

/// Standard split-step for `p̂²/2m + V(x̂)`: half potential phase, full kinetic
/// phase in momentum space, half potential phase.
pub fn evolve_basic_qm(
    wf: &WaveFunction1D,
    force: &ForceField,
    spec: &EvolveSpec,
    hbar: f64,
) -> Result<(WaveFunction1D, ObservableSeries)> {
    spec.validate()?;
    force.validate()?;
    wf.check_finite()?;
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::Config(format!("hbar must be positive, got {hbar}")));
    }
    check_normalized(wf.norm_sqr())?;
    check_wrap_budget_1d(wf, force, spec.duration(), hbar)?;
    let axis = *wf.axis();
    let tr = AxisTransform::new(axis);
    let xs = axis.nodes();
    let potential: Vec<f64> = xs.iter().map(|&x| force.potential(x)).collect();
    let half_pot: Vec<Complex64> = potential.iter().map(|v| Complex64::cis(-v * spec.dt / (2.0 * hbar))).collect();
    let full_pot: Vec<Complex64> = potential.iter().map(|v| Complex64::cis(-v * spec.dt / hbar)).collect();
    let inv_n = 1.0 / axis.n as f64;
    let kinetic: Vec<Complex64> = tr
        .k()
        .iter()
        .map(|k| Complex64::from_polar(inv_n, -hbar * k * k * spec.dt / (2.0 * force.mass)))
        .collect();
    let rec = Recorder1D {
        tr: tr.clone(),
        hbar,
        force: Some(force),
        f: xs.iter().map(|&x| force.f(x)).collect(),
        potential,
        photon_velocity: f64::NAN,
    };
    let mut series = ObservableSeries::new("", axis_summary(&axis), spec.dt);
    series.push(rec.record(0.0, wf)?)?;
    let mut amps = wf.amps().to_vec();
    let mul = |a: &mut [Complex64], w: &[Complex64]| a.iter_mut().zip(w).for_each(|(a, w)| *a *= w);
    for k in 1..=spec.n_steps / spec.record_every {
        mul(&mut amps, &half_pot);
        for s in 0..spec.record_every {
            tr.filter_rows_table(&mut amps, &kinetic);
            if s + 1 < spec.record_every {
                mul(&mut amps, &full_pot);
            }
        }
        mul(&mut amps, &half_pot);
        let state = WaveFunction1D::from_amps(axis, amps).map_err(numeric)?;
        series.push(rec.record(spec.record_time(k), &state)?)?;
        amps = state.amps().to_vec();
    }
    Ok((WaveFunction1D::from_amps(axis, amps)?, series))
}

/// Single-photon amplitude advected at `s·c` by the exact spectral shift
/// `e^{-i k s c dt}` each step. Wrapping through the periodic boundary is allowed.
pub fn evolve_photon(
    wf: &WaveFunction1D,
    s: f64,
    c_speed: f64,
    spec: &EvolveSpec,
    hbar: f64,
) -> Result<(WaveFunction1D, ObservableSeries)> {
    spec.validate()?;
    if s != 1.0 && s != -1.0 {
        return Err(Error::Argument(format!("polarisation sign must be +1 or -1, got {s}")));
    }
    if !(c_speed.is_finite() && c_speed > 0.0) {
        return Err(Error::Config(format!("speed of light must be positive, got {c_speed}")));
    }
    wf.check_finite()?;
    check_normalized(wf.norm_sqr())?;
    let axis = *wf.axis();
    let tr = AxisTransform::new(axis);
    let inv_n = 1.0 / axis.n as f64;
    let shift = s * c_speed * spec.dt;
    let table: Vec<Complex64> = tr.k().iter().map(|k| Complex64::from_polar(inv_n, -k * shift)).collect();
    let rec = Recorder1D { tr: tr.clone(), hbar, force: None, potential: Vec::new(), f: Vec::new(), photon_velocity: s * c_speed };
    let mut series = ObservableSeries::new("", axis_summary(&axis), spec.dt);
    series.push(rec.record(0.0, wf)?)?;
    let mut amps = wf.amps().to_vec();
    for k in 1..=spec.n_steps / spec.record_every {
        for _ in 0..spec.record_every {
            tr.filter_rows_table(&mut amps, &table);
        }
        let state = WaveFunction1D::from_amps(axis, amps).map_err(numeric)?;
        series.push(rec.record(spec.record_time(k), &state)?)?;
        amps = state.amps().to_vec();
    }
    Ok((WaveFunction1D::from_amps(axis, amps)?, series))
}

fn axis_summary(a: &Axis) -> String {
    format!("x=[{},{})x{}", a.min, a.max, a.n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::operators::Moments;
    use crate::wavefunction::{gaussian_1d, gaussian_packet, Packet};
    use std::f64::consts::PI;

    #[test]
    fn spec_validation() {
        assert!(EvolveSpec::new(1e-3, 10, 5).validate().is_ok());
        assert!(matches!(EvolveSpec::new(0.0, 10, 5).validate(), Err(Error::Config(_))));
        assert!(matches!(EvolveSpec::new(1e-3, 0, 1).validate(), Err(Error::Config(_))));
        assert!(matches!(EvolveSpec::new(1e-3, 10, 3).validate(), Err(Error::Config(_))));
    }

    #[test]
    fn free_drift_moves_the_centre() {
        let g = make_grid(-6.0, 10.0, 128, -4.0, 8.0, 128).unwrap();
        let wf = gaussian_packet(&g, &Packet::new(0.0, 2.0, 0.6, 0.5, 0.0), 1.0).unwrap();
        let (out, series) = evolve_config_space(&wf, &ForceField::free(), &EvolveSpec::new(0.01, 100, 10), 1.0).unwrap();
        let m = Moments::of(&out).unwrap();
        assert!((m.mean_x - 2.0).abs() < 1e-8, "{}", m.mean_x);
        assert!((m.mean_v - 2.0).abs() < 1e-10);
        assert_eq!(series.len(), 11);
        assert!((series.last().unwrap().t - 1.0).abs() < 1e-15);
        // each v-slice is a rigid shift: ψ(x, v, t) = ψ0(x - v t, v)
        let oracle = evolve_characteristics(&wf, &ForceField::free(), 1.0).unwrap();
        assert!(out.distance(&oracle).unwrap() < 1e-8);
    }

    #[test]
    fn characteristics_identity_at_zero() {
        let g = make_grid(-6.0, 6.0, 64, -6.0, 6.0, 64).unwrap();
        let wf = gaussian_packet(&g, &Packet::new(0.0, 0.0, 1.0, 1.0, 0.3), 1.0).unwrap();
        assert_eq!(evolve_characteristics(&wf, &ForceField::harmonic(1.0), 0.0).unwrap(), wf);
    }

    #[test]
    fn interpolant_reproduces_grid_values() {
        let g = make_grid(-6.0, 6.0, 64, -6.0, 6.0, 64).unwrap();
        let wf = gaussian_packet(&g, &Packet::new(0.5, -0.5, 1.0, 1.0, 0.7), 1.0).unwrap();
        let interp = TrigInterpolant::new(&wf);
        let mut ev = Vec::new();
        let mut worst: f64 = 0.0;
        for i in (0..64).step_by(5) {
            for j in (0..64).step_by(3) {
                worst = worst.max((interp.eval(g.x.node(i), g.v.node(j), &mut ev) - wf.at(i, j)).norm());
            }
        }
        assert!(worst < 1e-13, "{worst}");
    }

    #[test]
    fn wrap_budget_rejects_escaping_packets() {
        let g = make_grid(-6.0, 6.0, 64, -6.0, 6.0, 128).unwrap();
        let wf = gaussian_packet(&g, &Packet::new(0.0, 0.0, 1.0, 0.5, 0.0), 1.0).unwrap();
        assert!(check_wrap_budget(&wf, &ForceField::free(), 1.0).is_ok());
        let e = check_wrap_budget(&wf, &ForceField::uniform(9.81), 1.0).unwrap_err();
        assert!(matches!(e, Error::Domain(_)), "{e}");
        let e = evolve_config_space(&wf, &ForceField::uniform(9.81), &EvolveSpec::new(0.01, 100, 10), 1.0).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
    }

    #[test]
    fn strang_is_unitary_per_step() {
        let g = make_grid(-8.0, 8.0, 64, -8.0, 8.0, 64).unwrap();
        let wf = gaussian_packet(&g, &Packet::new(1.0, 0.0, 1.0, 1.0, 0.0), 1.0).unwrap();
        let prop = StrangPropagator::new(&g, &ForceField::harmonic(1.0), 1e-2).unwrap();
        let mut amps = wf.amps().to_vec();
        let mut prev = wf.norm_sqr();
        for _ in 0..50 {
            prop.advance(&mut amps, 1);
            let now = WaveFunction2D::from_amps(g, amps.clone()).unwrap().norm_sqr();
            assert!((now - prev).abs() <= 1e-14);
            prev = now;
        }
    }

    #[test]
    fn basic_qm_free_spreading() {
        let axis = Axis::new(-20.0, 20.0, 512).unwrap();
        let wf = gaussian_1d(&axis, 0.0, 0.5, 0.0, 1.0).unwrap();
        let (_, series) = evolve_basic_qm(&wf, &ForceField::free(), &EvolveSpec::new(1e-3, 1000, 100), 1.0).unwrap();
        let last = series.last().unwrap();
        let expected = (0.25f64 + 1.0).sqrt();
        assert!((last.std_x - expected).abs() < 1e-5, "{}", last.std_x);
        assert!(series.records.iter().all(|r| r.mean_x.abs() < 1e-10));
    }

    #[test]
    fn basic_qm_harmonic_period() {
        let axis = Axis::new(-10.0, 10.0, 256).unwrap();
        let wf = gaussian_1d(&axis, 1.0, 0.5f64.sqrt(), 0.0, 1.0).unwrap();
        let (_, series) = evolve_basic_qm(&wf, &ForceField::harmonic(1.0), &EvolveSpec::covering(2.0 * PI, 6400, 64), 1.0).unwrap();
        assert!((series.last().unwrap().mean_x - 1.0).abs() < 1e-6);
    }

    #[test]
    fn photon_shift_and_parity() {
        let axis = Axis::new(-20.0, 20.0, 512).unwrap();
        let wf = gaussian_1d(&axis, 0.0, 1.0, 0.0, 1.0).unwrap();
        let spec = EvolveSpec::new(2e-3, 1000, 100);
        let (right, _) = evolve_photon(&wf, 1.0, 1.0, &spec, 1.0).unwrap();
        let shifted = gaussian_1d(&axis, 2.0, 1.0, 0.0, 1.0).unwrap();
        assert!(right.distance(&shifted).unwrap() <= 1e-12);
        let (left, _) = evolve_photon(&wf, -1.0, 1.0, &spec, 1.0).unwrap();
        // nodes are symmetric about 0 except the first, so compare x_i with x_{n-i}
        let n = axis.n;
        let worst = (1..n).map(|i| (left.amps()[i] - right.amps()[n - i]).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-13, "{worst}");
        assert!(matches!(evolve_photon(&wf, 0.5, 1.0, &spec, 1.0), Err(Error::Argument(_))));
    }
}
