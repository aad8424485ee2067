//! Expectation values, uncertainties, observable time series and the
//! Ehrenfest-residual diagnostics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::Trajectory;
use crate::error::{Error, Result};
use crate::force::{ClassicalState, ForceField};
use crate::grid::Grid2D;
use crate::operators::{ObservableTag, OperatorAlgebra};
use crate::wavefunction::{inner_slices, WaveFunction1D, WaveFunction2D};

/// Allowed deviation of `‖ψ‖²` from one for expectation values.
pub const NORM_TOLERANCE: f64 = 1e-9;
/// Largest imaginary part tolerated in `⟨ψ|Âψ⟩`, relative to `max(1, |Re|)`.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

/// Means entering the right-hand sides of the Ehrenfest identities plus the two
/// pieces of `⟨H_dyn⟩`. `NaN` where a representation does not define them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxMeans {
    /// `⟨f(x)⟩`
    pub force: f64,
    /// `⟨f'(x)·a⟩`
    pub force_slope_acceleratum: f64,
    /// `⟨v·p⟩`
    pub velocity_momentum: f64,
    /// `⟨f(x)·a⟩`
    pub force_acceleratum: f64,
}

impl AuxMeans {
    pub const UNDEFINED: Self = Self {
        force: f64::NAN,
        force_slope_acceleratum: f64::NAN,
        velocity_momentum: f64::NAN,
        force_acceleratum: f64::NAN,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub t: f64,
    pub mean_x: f64,
    pub mean_v: f64,
    pub mean_p: f64,
    pub mean_a: f64,
    pub std_x: f64,
    pub std_v: f64,
    pub std_p: f64,
    pub std_a: f64,
    pub energy_class: f64,
    pub norm: f64,
    pub aux: AuxMeans,
}

impl ObservableRecord {
    pub const CSV_HEADER: &'static str = "t,mean_x,mean_v,mean_p,mean_a,std_x,std_v,std_p,std_a,energy_class,norm";

    /// Values in [`CSV_HEADER`](Self::CSV_HEADER) order.
    pub fn columns(&self) -> [f64; 11] {
        [
            self.t,
            self.mean_x,
            self.mean_v,
            self.mean_p,
            self.mean_a,
            self.std_x,
            self.std_v,
            self.std_p,
            self.std_a,
            self.energy_class,
            self.norm,
        ]
    }

    /// Both uncertainty products, `(Δx·Δp, Δv·Δa)`; `NaN` where undefined.
    pub fn uncertainty_products(&self) -> (f64, f64) {
        (self.std_x * self.std_p, self.std_v * self.std_a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub scenario: String,
    pub grid: String,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub metadata: SeriesMetadata,
    pub records: Vec<ObservableRecord>,
}

impl ObservableSeries {
    pub fn new(scenario: impl Into<String>, grid: impl Into<String>, dt: f64) -> Self {
        Self { metadata: SeriesMetadata { scenario: scenario.into(), grid: grid.into(), dt }, records: Vec::new() }
    }

    /// Appends a record; times must increase strictly.
    pub fn push(&mut self, record: ObservableRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.t.partial_cmp(&last.t) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::Argument(format!("record time {} does not follow {}", record.t, last.t)));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first(&self) -> Option<&ObservableRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&ObservableRecord> {
        self.records.last()
    }

    pub fn column(&self, pick: impl Fn(&ObservableRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(pick).collect()
    }

    /// CSV text with the fixed header; every value printed with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 + self.records.len() * 11 * 24);
        out.push_str(ObservableRecord::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let cols = r.columns();
            for (k, c) in cols.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{c:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

fn check_normalized(norm_sqr: f64) -> Result<()> {
    if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Precondition(format!("wave function is not normalized (‖ψ‖² = {norm_sqr})")));
    }
    Ok(())
}

fn real_part(z: Complex64, what: &str) -> Result<f64> {
    if z.im.abs() > HERMITICITY_TOLERANCE * z.re.abs().max(1.0) {
        return Err(Error::Numeric(format!("⟨{what}⟩ has imaginary part {:.3e}", z.im)));
    }
    Ok(z.re)
}

/// `Re⟨ψ|Âψ⟩` for a normalized state; the imaginary part must vanish to 1e-10.
pub fn expect(ops: &OperatorAlgebra, wf: &WaveFunction2D, tag: ObservableTag, force: Option<&ForceField>) -> Result<f64> {
    let aw = ops.apply(tag, wf, force)?;
    check_normalized(wf.norm_sqr())?;
    real_part(wf.inner(&aw)?, &format!("{tag:?}"))
}

/// `ΔA = ‖(Â - ⟨Â⟩)ψ‖`, which equals `√(⟨Â²⟩ - ⟨Â⟩²)` for Hermitian `Â` and is
/// non-negative by construction.
pub fn uncertainty(ops: &OperatorAlgebra, wf: &WaveFunction2D, tag: ObservableTag, force: Option<&ForceField>) -> Result<f64> {
    let aw = ops.apply(tag, wf, force)?;
    check_normalized(wf.norm_sqr())?;
    let mean = real_part(wf.inner(&aw)?, &format!("{tag:?}"))?;
    Ok(centred_norm(aw.amps(), wf.amps(), mean, wf.grid().cell()))
}

fn centred_norm(a_psi: &[Complex64], psi: &[Complex64], mean: f64, cell: f64) -> f64 {
    let s: f64 = a_psi.iter().zip(psi).map(|(a, p)| (a - p * mean).norm_sqr()).sum();
    (s * cell).sqrt()
}

/// Computes full [`ObservableRecord`]s for states on one grid under one force.
#[derive(Debug, Clone)]
pub struct Recorder {
    ops: OperatorAlgebra,
    force: ForceField,
    f: Vec<f64>,
    df: Vec<f64>,
    potential: Vec<f64>,
    vs: Vec<f64>,
    xs: Vec<f64>,
}

impl Recorder {
    pub fn new(grid: &Grid2D, force: &ForceField, hbar: f64) -> Result<Self> {
        force.validate()?;
        let xs = grid.x.nodes();
        Ok(Self {
            ops: OperatorAlgebra::new(grid, hbar)?,
            force: force.clone(),
            f: xs.iter().map(|&x| force.f(x)).collect(),
            df: xs.iter().map(|&x| force.df(x)).collect(),
            potential: xs.iter().map(|&x| force.potential(x)).collect(),
            vs: grid.v.nodes(),
            xs,
        })
    }

    pub fn operators(&self) -> &OperatorAlgebra {
        &self.ops
    }

    pub fn force(&self) -> &ForceField {
        &self.force
    }

    /// Means over `|ψ|²/‖ψ‖²`, so a slightly denormalized state still yields
    /// probabilities; `norm` reports `‖ψ‖`.
    pub fn record(&self, t: f64, wf: &WaveFunction2D) -> Result<ObservableRecord> {
        wf.check_finite()?;
        let g = *self.ops.grid();
        if *wf.grid() != g {
            return Err(Error::Shape("wave function grid differs from the recorder grid".into()));
        }
        let psi = wf.amps();
        let n_v = g.n_v();
        let cell = g.cell();
        let norm_sqr = wf.norm_sqr();
        if norm_sqr == 0.0 {
            return Err(Error::Data("cannot record a zero wave function".into()));
        }
        let p_psi = self.ops.apply_amps(ObservableTag::Momentum, psi, None)?;
        let a_psi = self.ops.apply_amps(ObservableTag::Acceleratum, psi, None)?;

        let (mut sx, mut sxx, mut sv, mut svv, mut se, mut sf) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let mut s_dfa = Complex64::new(0.0, 0.0);
        let mut s_vp = Complex64::new(0.0, 0.0);
        let mut s_fa = Complex64::new(0.0, 0.0);
        let half_m = 0.5 * self.force.mass;
        for i in 0..g.n_x() {
            let row = &psi[i * n_v..(i + 1) * n_v];
            let p_row = &p_psi[i * n_v..(i + 1) * n_v];
            let a_row = &a_psi[i * n_v..(i + 1) * n_v];
            let (mut w_row, mut e_row) = (0.0, 0.0);
            let mut vp_row = Complex64::new(0.0, 0.0);
            for j in 0..n_v {
                let w = row[j].norm_sqr();
                let v = self.vs[j];
                w_row += w;
                sv += v * w;
                svv += v * v * w;
                e_row += half_m * v * v * w;
                vp_row += row[j].conj() * p_row[j] * v;
            }
            let x = self.xs[i];
            sx += x * w_row;
            sxx += x * x * w_row;
            se += e_row + self.potential[i] * w_row;
            sf += self.f[i] * w_row;
            let ca = inner_slices(row, a_row);
            s_dfa += ca * self.df[i];
            s_fa += ca * self.f[i];
            s_vp += vp_row;
        }
        let scale = cell / norm_sqr;
        let mean_x = sx * scale;
        let mean_v = sv * scale;
        let mean_p = real_part(inner_slices(psi, &p_psi) * scale, "p")?;
        let mean_a = real_part(inner_slices(psi, &a_psi) * scale, "a")?;
        Ok(ObservableRecord {
            t,
            mean_x,
            mean_v,
            mean_p,
            mean_a,
            std_x: (sxx * scale - mean_x * mean_x).max(0.0).sqrt(),
            std_v: (svv * scale - mean_v * mean_v).max(0.0).sqrt(),
            std_p: centred_norm(&p_psi, psi, mean_p, scale),
            std_a: centred_norm(&a_psi, psi, mean_a, scale),
            energy_class: se * scale,
            norm: norm_sqr.sqrt(),
            aux: AuxMeans {
                force: sf * scale,
                force_slope_acceleratum: (s_dfa * scale).re,
                velocity_momentum: (s_vp * scale).re,
                force_acceleratum: (s_fa * scale).re,
            },
        })
    }
}

/// Position and momentum statistics of a 1-D state: `(⟨x⟩, Δx, ⟨p⟩, Δp, ⟨p²⟩)`.
pub(crate) fn moments_1d(wf: &WaveFunction1D, p_psi: &[Complex64]) -> Result<(f64, f64, f64, f64, f64)> {
    let axis = wf.axis();
    let psi = wf.amps();
    let norm_sqr = wf.norm_sqr();
    if norm_sqr == 0.0 {
        return Err(Error::Data("cannot record a zero wave function".into()));
    }
    let scale = axis.spacing() / norm_sqr;
    let (mut sx, mut sxx) = (0.0, 0.0);
    for (a, x) in psi.iter().zip(axis.nodes()) {
        let w = a.norm_sqr();
        sx += x * w;
        sxx += x * x * w;
    }
    let mean_x = sx * scale;
    let mean_p = real_part(inner_slices(psi, p_psi) * scale, "p")?;
    let p2 = p_psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * scale;
    Ok((
        mean_x,
        (sxx * scale - mean_x * mean_x).max(0.0).sqrt(),
        mean_p,
        centred_norm(p_psi, psi, mean_p, scale),
        p2,
    ))
}

/// Largest absolute residual of each Ehrenfest identity along a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EhrenfestReport {
    /// `d⟨x⟩/dt - ⟨v⟩`
    pub position: f64,
    /// `d⟨v⟩/dt - ⟨f(x)⟩`
    pub velocity: f64,
    /// `d⟨p⟩/dt + ⟨f'(x)·a⟩`
    pub momentum: f64,
    /// `d⟨a⟩/dt + ⟨p⟩`
    pub acceleratum: f64,
    /// Sampling interval of the central differences.
    pub record_dt: f64,
}

impl EhrenfestReport {
    pub fn max(&self) -> f64 {
        self.position.max(self.velocity).max(self.momentum).max(self.acceleratum)
    }

    /// Acceptance bound `max(1e-6, 10·dt²)`; the central-difference error is O(dt²).
    pub fn tolerance(&self) -> f64 {
        1e-6f64.max(10.0 * self.record_dt * self.record_dt)
    }
}

/// Central differences of the recorded means against the right-hand sides
/// `⟨v⟩`, `⟨f(x)⟩`, `-⟨f'(x)·a⟩` and `-⟨p⟩`, which each record carries.
pub fn ehrenfest_residuals(series: &ObservableSeries) -> Result<EhrenfestReport> {
    let r = &series.records;
    if r.len() < 5 {
        return Err(Error::Argument(format!("need at least 5 records, got {}", r.len())));
    }
    let h = r[1].t - r[0].t;
    for w in r.windows(2) {
        if ((w[1].t - w[0].t) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::Argument("records are not uniformly spaced in time".into()));
        }
    }
    if r.iter().any(|x| x.aux.force.is_nan() || x.aux.force_slope_acceleratum.is_nan()) {
        return Err(Error::Argument("series lacks the force means (not a position-velocity run)".into()));
    }
    let mut out = EhrenfestReport { position: 0.0, velocity: 0.0, momentum: 0.0, acceleratum: 0.0, record_dt: h };
    for w in r.windows(3) {
        let d = |pick: fn(&ObservableRecord) -> f64| (pick(&w[2]) - pick(&w[0])) / (2.0 * h);
        let mid = &w[1];
        out.position = out.position.max((d(|x| x.mean_x) - mid.mean_v).abs());
        out.velocity = out.velocity.max((d(|x| x.mean_v) - mid.aux.force).abs());
        out.momentum = out.momentum.max((d(|x| x.mean_p) + mid.aux.force_slope_acceleratum).abs());
        out.acceleratum = out.acceleratum.max((d(|x| x.mean_a) + mid.mean_p).abs());
    }
    Ok(out)
}

/// `Σ P_n x_n(t)`, `Σ P_n v_n(t)` at the shared time stamps.
pub fn mixture_reference(weights: &[f64], trajectories: &[Trajectory]) -> Result<Trajectory> {
    if weights.len() != trajectories.len() || weights.is_empty() {
        return Err(Error::Argument("need one weight per trajectory".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Argument(format!("weights must sum to 1, got {total}")));
    }
    let times = trajectories[0].times.clone();
    if trajectories.iter().any(|t| t.times != times) {
        return Err(Error::Argument("trajectories must share their time stamps".into()));
    }
    let states = (0..times.len())
        .map(|k| {
            let mut x = 0.0;
            let mut v = 0.0;
            for (w, tr) in weights.iter().zip(trajectories) {
                x += w * tr.states[k].x;
                v += w * tr.states[k].v;
            }
            ClassicalState { x, v }
        })
        .collect();
    Ok(Trajectory { times, states })
}
