use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Comparison, ScenarioConfig, ScenarioError, ScenarioKind, ScenarioResult};
use crate::classical::{classical_trajectory, Trajectory};
use crate::force::{ClassicalState, ForceKind};
use crate::grid::{make_grid, Axis};
use crate::observables::{ehrenfest_residuals, mixture_reference, EhrenfestReport, ObservableSeries};
use crate::propagators::{
    check_wrap_budget, check_wrap_budget_1d, evolve_basic_qm, evolve_characteristics, evolve_config_space_observed,
    evolve_photon,
};
use crate::spectra::build_hdyn_matrix;
use crate::wavefunction::{gaussian_1d, gaussian_packet, gaussian_packet_with_floor, superposition, WaveFunction1D, WaveFunction2D};

/// Velocity width floor, in cells, for the dispersion comparison packet.
const NARROW_VELOCITY_CELLS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSummary {
    pub initial: f64,
    pub last: f64,
    /// Largest `|‖ψ(t)‖ - ‖ψ(0)‖|` over records.
    pub max_drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub initial: f64,
    pub last: f64,
    /// `(E(T) - E(0))/|E(0)|`
    pub relative_drift: f64,
    /// `max_t |E(t) - E(0)|/|E(0)|`
    pub max_relative_excursion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySummary {
    /// Smallest `Δx·Δp` over records.
    pub min_position_momentum: f64,
    /// Smallest `Δv·Δa`; absent for one-dimensional runs.
    pub min_velocity_acceleratum: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalComparison {
    /// `max_t max(|⟨x⟩ - x_cl|, |⟨v⟩ - v_cl|)`
    pub max_center_deviation: f64,
    pub final_center_deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComparison {
    /// Largest deviation of the means from the probability-weighted classical reference.
    pub max_mean_deviation: f64,
    /// Smallest phase-space distance between packet centres, in packet widths.
    pub min_separation_widths: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonReport {
    /// L² distance between the evolved packet and the analytically shifted one.
    pub shift_distance: f64,
    pub travelled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergenceReport {
    pub mass: f64,
    /// `max_t |⟨x⟩_cfg - ⟨x⟩_bqm|`
    pub max_position_gap: f64,
    /// `max_t |⟨p⟩_bqm - m⟨v⟩_cfg|`
    pub max_momentum_map_residual: f64,
    /// `max_t |⟨p⟩_cfg(t) - ⟨p⟩_cfg(0)|`
    pub config_momentum_drift: f64,
    /// `max_t |⟨p⟩_bqm(t) - ⟨p⟩_cfg(t)|`; non-zero when a force breaks translation symmetry.
    pub canonical_momentum_divergence: f64,
    /// Under uniform force: `max_t |⟨p⟩_bqm(t) - ⟨p⟩_bqm(0) - m g t|`.
    pub free_fall_growth_residual: Option<f64>,
    pub diverges: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub times: Vec<f64>,
    pub config_std_x: Vec<f64>,
    pub basic_qm_std_x: Vec<f64>,
    /// `max_t |Δx_cfg - √(Δx(0)² + (Δv t)²)|`
    pub shear_residual: f64,
    /// `max_t |Δx_bqm - √(Δx(0)² + (ħ t/(2 m Δx(0)))²)|`
    pub spreading_residual: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub kind: String,
    pub grid: String,
    pub hbar: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub records: usize,
    pub norm: NormSummary,
    pub energy: Option<EnergySummary>,
    pub uncertainty: UncertaintySummary,
    pub classical: Option<ClassicalComparison>,
    pub mixture: Option<MixtureComparison>,
    pub characteristics_distance: Option<f64>,
    pub ehrenfest: Option<EhrenfestReport>,
    pub emergence: Option<EmergenceReport>,
    pub dispersion: Option<DispersionReport>,
    pub photon: Option<PhotonReport>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FinalState {
    Plane(WaveFunction2D),
    Line(WaveFunction1D),
}

/// Everything a run produces, before anything touches the file system.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ScenarioConfig,
    pub report: RunReport,
    /// Primary series (position-velocity run, or the photon run).
    pub series: ObservableSeries,
    /// Basic-QM series of emergence and dispersion runs.
    pub companion: Option<ObservableSeries>,
    pub snapshots: Vec<(f64, WaveFunction2D)>,
    pub spectrum: Option<Vec<f64>>,
    pub final_state: FinalState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub kind: String,
    pub grid: String,
    pub duration: f64,
    pub wrap_budget: String,
}

fn initial_plane(config: &ScenarioConfig, kind: ScenarioKind) -> ScenarioResult<WaveFunction2D> {
    let grid = config.grid.grid()?;
    let wf = match kind {
        ScenarioKind::Dispersion => gaussian_packet_with_floor(&grid, &config.initial[0], config.hbar, NARROW_VELOCITY_CELLS)?,
        _ if config.initial.len() == 1 => gaussian_packet(&grid, &config.initial[0], config.hbar)?,
        _ => superposition(&grid, &config.initial, config.hbar)?,
    };
    Ok(wf)
}

fn initial_photon(config: &ScenarioConfig) -> ScenarioResult<WaveFunction1D> {
    let p = &config.initial[0];
    Ok(gaussian_1d(&config.grid.x_axis()?, p.x0, p.sigma_x, p.p0, config.hbar)?)
}

/// The `p = m v` slice of a position-velocity state: `√(x-marginal)·e^{i m ⟨v⟩ x/ħ}`.
pub fn basic_qm_slice(wf: &WaveFunction2D, mass: f64, hbar: f64) -> ScenarioResult<WaveFunction1D> {
    let g = wf.grid();
    let marginal = wf.x_marginal();
    let total: f64 = marginal.iter().sum();
    let v_marginal = wf.v_marginal();
    let mean_v = g.v.nodes().iter().zip(&v_marginal).map(|(v, w)| v * w).sum::<f64>() / v_marginal.iter().sum::<f64>();
    if total == 0.0 {
        return Err(ScenarioError::Numeric("empty x-marginal".into()));
    }
    let k = mass * mean_v / hbar;
    let amps = g.x.nodes().iter().zip(&marginal).map(|(x, w)| Complex64::from_polar(w.sqrt(), k * x)).collect();
    Ok(WaveFunction1D::from_amps(g.x, amps)?.normalized()?)
}

fn supported_for_emergence(config: &ScenarioConfig) -> ScenarioResult<()> {
    match config.force.kind {
        ForceKind::Free | ForceKind::Uniform { .. } | ForceKind::Harmonic { .. } => Ok(()),
        ForceKind::Polynomial { .. } => {
            Err(ScenarioError::Config("emergence comparison supports free, uniform and harmonic forces only".into()))
        }
    }
}

/// Validates the config and checks every wrap budget without evolving anything.
pub fn check_scenario(config: &ScenarioConfig) -> ScenarioResult<CheckReport> {
    config.validate()?;
    let kind = config.kind()?;
    let duration = config.evolve.duration();
    let grid_summary = match kind {
        ScenarioKind::Photon => {
            // wrapping is part of the photon model; only construct the packet
            initial_photon(config)?;
            format!("x=[{},{})x{}", config.grid.x_min, config.grid.x_max, config.grid.n_x)
        }
        _ => {
            let wf = initial_plane(config, kind)?;
            check_wrap_budget(&wf, &config.force, duration)?;
            if matches!(kind, ScenarioKind::Emergence | ScenarioKind::Dispersion) {
                supported_for_emergence(config)?;
                let line = basic_qm_slice(&wf, config.force.mass, config.hbar)?;
                check_wrap_budget_1d(&line, &config.force, duration, config.hbar)?;
            }
            wf.grid().summary()
        }
    };
    Ok(CheckReport {
        name: config.name.clone(),
        kind: kind.name().into(),
        grid: grid_summary,
        duration,
        wrap_budget: "ok".into(),
    })
}

fn norm_summary(series: &ObservableSeries) -> NormSummary {
    let initial = series.first().map_or(f64::NAN, |r| r.norm);
    NormSummary {
        initial,
        last: series.last().map_or(f64::NAN, |r| r.norm),
        max_drift: series.records.iter().map(|r| (r.norm - initial).abs()).fold(0.0, f64::max),
    }
}

fn energy_summary(series: &ObservableSeries) -> EnergySummary {
    let e0 = series.first().map_or(f64::NAN, |r| r.energy_class);
    let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
    let last = series.last().map_or(f64::NAN, |r| r.energy_class);
    EnergySummary {
        initial: e0,
        last,
        relative_drift: (last - e0) / scale,
        max_relative_excursion: series.records.iter().map(|r| (r.energy_class - e0).abs() / scale).fold(0.0, f64::max),
    }
}

fn uncertainty_summary(series: &ObservableSeries) -> UncertaintySummary {
    let xp = series.records.iter().map(|r| r.std_x * r.std_p).fold(f64::INFINITY, f64::min);
    let va: Vec<f64> = series.records.iter().map(|r| r.std_v * r.std_a).filter(|p| !p.is_nan()).collect();
    UncertaintySummary {
        min_position_momentum: xp,
        min_velocity_acceleratum: if va.is_empty() { None } else { Some(va.into_iter().fold(f64::INFINITY, f64::min)) },
    }
}

fn packet_trajectories(config: &ScenarioConfig) -> ScenarioResult<Vec<Trajectory>> {
    config
        .initial
        .iter()
        .map(|p| {
            classical_trajectory(ClassicalState::new(p.x0, p.v0), &config.force, config.evolve.dt, config.evolve.n_steps)
                .map_err(ScenarioError::from)
        })
        .collect()
}

/// Deviation of the recorded means from a trajectory sampled at the record cadence.
fn center_deviation(series: &ObservableSeries, reference: &Trajectory, every: usize) -> (f64, f64) {
    let mut worst: f64 = 0.0;
    let mut last = 0.0;
    for (k, r) in series.records.iter().enumerate() {
        let s = reference.states[k * every];
        last = (r.mean_x - s.x).abs().max((r.mean_v - s.v).abs());
        worst = worst.max(last);
    }
    (worst, last)
}

fn min_separation(config: &ScenarioConfig, trajectories: &[Trajectory]) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..trajectories.len() {
        for b in a + 1..trajectories.len() {
            let (pa, pb) = (&config.initial[a], &config.initial[b]);
            let width = pa.sigma_x.max(pa.sigma_v).max(pb.sigma_x).max(pb.sigma_v);
            for (sa, sb) in trajectories[a].states.iter().zip(&trajectories[b].states) {
                best = best.min((sa.x - sb.x).hypot(sa.v - sb.v) / width);
            }
        }
    }
    best
}

fn classical_reports(
    config: &ScenarioConfig,
    series: &ObservableSeries,
) -> ScenarioResult<(Option<ClassicalComparison>, Option<MixtureComparison>)> {
    if !config.wants(Comparison::Classical) {
        return Ok((None, None));
    }
    let trajectories = packet_trajectories(config)?;
    let every = config.evolve.record_every;
    if trajectories.len() == 1 {
        let (max_center_deviation, final_center_deviation) = center_deviation(series, &trajectories[0], every);
        return Ok((Some(ClassicalComparison { max_center_deviation, final_center_deviation }), None));
    }
    let weights: Vec<f64> = config.initial.iter().map(|p| p.weight).collect();
    let reference = mixture_reference(&weights, &trajectories)?;
    let (max_mean_deviation, _) = center_deviation(series, &reference, every);
    Ok((None, Some(MixtureComparison { max_mean_deviation, min_separation_widths: min_separation(config, &trajectories) })))
}

fn spectrum(config: &ScenarioConfig) -> ScenarioResult<Option<Vec<f64>>> {
    if !config.outputs.spectrum {
        return Ok(None);
    }
    let g = &config.grid;
    let n = config.outputs.spectrum_nodes;
    let (Some(v_min), Some(v_max)) = (g.v_min, g.v_max) else {
        return Err(ScenarioError::InvalidGrid("spectrum needs a velocity axis".into()));
    };
    let coarse = make_grid(g.x_min, g.x_max, n, v_min, v_max, n)?;
    Ok(Some(build_hdyn_matrix(&coarse, &config.force, config.hbar)?.eigenvalues()))
}

struct PlaneRun {
    series: ObservableSeries,
    final_state: WaveFunction2D,
    initial: WaveFunction2D,
    snapshots: Vec<(f64, WaveFunction2D)>,
}

fn run_plane(config: &ScenarioConfig, kind: ScenarioKind) -> ScenarioResult<PlaneRun> {
    let wf = initial_plane(config, kind)?;
    let every = config.outputs.snapshot_every;
    let mut snapshots = Vec::new();
    let (final_state, mut series) = evolve_config_space_observed(&wf, &config.force, &config.evolve, config.hbar, |k, t, state| {
        if every > 0 && k % every == 0 {
            snapshots.push((t, state.clone()));
        }
    })?;
    series.metadata.scenario = config.name.clone();
    Ok(PlaneRun { series, final_state, initial: wf, snapshots })
}

fn max_over(a: &ObservableSeries, b: &ObservableSeries, f: impl Fn(&crate::ObservableRecord, &crate::ObservableRecord) -> f64) -> f64 {
    a.records.iter().zip(&b.records).map(|(x, y)| f(x, y)).fold(0.0, f64::max)
}

fn emergence_from_runs(config: &ScenarioConfig, cfg: &ObservableSeries, bqm: &ObservableSeries) -> EmergenceReport {
    let m = config.force.mass;
    let p_cfg0 = cfg.first().map_or(0.0, |r| r.mean_p);
    let p_bqm0 = bqm.first().map_or(0.0, |r| r.mean_p);
    let divergence = max_over(cfg, bqm, |c, b| (b.mean_p - c.mean_p).abs());
    EmergenceReport {
        mass: m,
        max_position_gap: max_over(cfg, bqm, |c, b| (c.mean_x - b.mean_x).abs()),
        max_momentum_map_residual: max_over(cfg, bqm, |c, b| (b.mean_p - m * c.mean_v).abs()),
        config_momentum_drift: cfg.records.iter().map(|r| (r.mean_p - p_cfg0).abs()).fold(0.0, f64::max),
        canonical_momentum_divergence: divergence,
        free_fall_growth_residual: match config.force.kind {
            ForceKind::Uniform { g } => {
                Some(bqm.records.iter().map(|r| (r.mean_p - p_bqm0 - m * g * r.t).abs()).fold(0.0, f64::max))
            }
            _ => None,
        },
        diverges: divergence > 1e-6,
    }
}

fn run_basic_qm_companion(config: &ScenarioConfig, initial: &WaveFunction2D) -> ScenarioResult<ObservableSeries> {
    let line = basic_qm_slice(initial, config.force.mass, config.hbar)?;
    let (_, mut series) = evolve_basic_qm(&line, &config.force, &config.evolve, config.hbar)?;
    series.metadata.scenario = format!("{}-basic-qm", config.name);
    Ok(series)
}

fn require_kind(config: &ScenarioConfig, kind: ScenarioKind) -> ScenarioResult<()> {
    config.validate()?;
    if config.kind()? != kind {
        return Err(ScenarioError::Config(format!("expected a scenario of kind {kind}, got {}", config.kind)));
    }
    Ok(())
}

/// Position-velocity run and the standard solver on the `p = m v` slice, side by side.
pub fn run_emergence_comparison(config: &ScenarioConfig) -> ScenarioResult<EmergenceReport> {
    require_kind(config, ScenarioKind::Emergence)?;
    supported_for_emergence(config)?;
    let plane = run_plane(config, ScenarioKind::Emergence)?;
    let bqm = run_basic_qm_companion(config, &plane.initial)?;
    Ok(emergence_from_runs(config, &plane.series, &bqm))
}

fn dispersion_from_runs(config: &ScenarioConfig, cfg: &ObservableSeries, bqm: &ObservableSeries) -> DispersionReport {
    let tolerance = 1e-4;
    let c0 = cfg.first().expect("series has the initial record");
    let b0 = bqm.first().expect("series has the initial record");
    let m = config.force.mass;
    let spread = config.hbar / (2.0 * m * b0.std_x);
    let shear_residual = cfg
        .records
        .iter()
        .map(|r| (r.std_x - (c0.std_x.powi(2) + (c0.std_v * r.t).powi(2)).sqrt()).abs())
        .fold(0.0, f64::max);
    let spreading_residual = bqm
        .records
        .iter()
        .map(|r| (r.std_x - (b0.std_x.powi(2) + (spread * r.t).powi(2)).sqrt()).abs())
        .fold(0.0, f64::max);
    DispersionReport {
        times: cfg.column(|r| r.t),
        config_std_x: cfg.column(|r| r.std_x),
        basic_qm_std_x: bqm.column(|r| r.std_x),
        shear_residual,
        spreading_residual,
        tolerance,
        within_tolerance: shear_residual <= tolerance && spreading_residual <= tolerance,
    }
}

/// Free spreading of a basic-QM packet against the rigid shear of a
/// velocity-sharp position-velocity packet.
pub fn run_dispersion_comparison(config: &ScenarioConfig) -> ScenarioResult<DispersionReport> {
    require_kind(config, ScenarioKind::Dispersion)?;
    if config.force.kind != ForceKind::Free {
        return Err(ScenarioError::Config("dispersion comparison needs the free force".into()));
    }
    let plane = run_plane(config, ScenarioKind::Dispersion)?;
    let bqm = run_basic_qm_companion(config, &plane.initial)?;
    Ok(dispersion_from_runs(config, &plane.series, &bqm))
}

/// Analytic photon packet `ψ0(x - s c t)` on the periodic axis, with periodic images summed.
fn shifted_photon(axis: &Axis, config: &ScenarioConfig, shift: f64) -> ScenarioResult<WaveFunction1D> {
    let p = &config.initial[0];
    let k0 = p.p0 / config.hbar;
    let a = 1.0 / (4.0 * p.sigma_x * p.sigma_x);
    let wf = WaveFunction1D::from_fn(*axis, |x| {
        (-3..=3)
            .map(|n| {
                let y = x - shift - n as f64 * axis.length();
                Complex64::from_polar((-(y - p.x0).powi(2) * a).exp(), k0 * y)
            })
            .sum()
    });
    Ok(wf.normalized()?)
}

/// Runs the primary evolution and every requested comparison; writes nothing.
pub fn execute(config: &ScenarioConfig) -> ScenarioResult<RunOutcome> {
    config.validate()?;
    let kind = config.kind()?;
    let ev = &config.evolve;
    let mut report = RunReport {
        name: config.name.clone(),
        kind: kind.name().into(),
        grid: String::new(),
        hbar: config.hbar,
        dt: ev.dt,
        n_steps: ev.n_steps,
        records: 0,
        norm: NormSummary { initial: f64::NAN, last: f64::NAN, max_drift: f64::NAN },
        energy: None,
        uncertainty: UncertaintySummary { min_position_momentum: f64::NAN, min_velocity_acceleratum: None },
        classical: None,
        mixture: None,
        characteristics_distance: None,
        ehrenfest: None,
        emergence: None,
        dispersion: None,
        photon: None,
        files: Vec::new(),
    };
    let (series, companion, snapshots, final_state) = match kind {
        ScenarioKind::Photon => {
            let wf = initial_photon(config)?;
            let ph = config.photon.expect("validated photon table");
            let s = f64::from(ph.polarisation);
            let (out, mut series) = evolve_photon(&wf, s, ph.c, ev, config.hbar)?;
            series.metadata.scenario = config.name.clone();
            report.grid = series.metadata.grid.clone();
            if config.wants(Comparison::Photon) {
                let travelled = s * ph.c * ev.duration();
                let analytic = shifted_photon(wf.axis(), config, travelled)?;
                report.photon = Some(PhotonReport { shift_distance: out.distance(&analytic)?, travelled });
            }
            (series, None, Vec::new(), FinalState::Line(out))
        }
        _ => {
            if kind != ScenarioKind::ConfigSpace || config.wants(Comparison::BasicQm) {
                supported_for_emergence(config)?;
            }
            if kind == ScenarioKind::Dispersion && config.force.kind != ForceKind::Free {
                return Err(ScenarioError::Config("dispersion comparison needs the free force".into()));
            }
            let plane = run_plane(config, kind)?;
            report.grid = plane.final_state.grid().summary();
            report.energy = Some(energy_summary(&plane.series));
            let (classical, mixture) = classical_reports(config, &plane.series)?;
            report.classical = classical;
            report.mixture = mixture;
            if config.wants(Comparison::Characteristics) {
                let oracle = evolve_characteristics(&plane.initial, &config.force, ev.duration())?;
                report.characteristics_distance = Some(plane.final_state.distance(&oracle)?);
            }
            if plane.series.len() >= 5 {
                report.ehrenfest = Some(ehrenfest_residuals(&plane.series)?);
            }
            let companion = if kind != ScenarioKind::ConfigSpace || config.wants(Comparison::BasicQm) {
                let bqm = run_basic_qm_companion(config, &plane.initial)?;
                match kind {
                    ScenarioKind::Dispersion => report.dispersion = Some(dispersion_from_runs(config, &plane.series, &bqm)),
                    _ => report.emergence = Some(emergence_from_runs(config, &plane.series, &bqm)),
                }
                Some(bqm)
            } else {
                None
            };
            (plane.series, companion, plane.snapshots, FinalState::Plane(plane.final_state))
        }
    };
    report.records = series.len();
    report.norm = norm_summary(&series);
    report.uncertainty = uncertainty_summary(&series);
    if let Some(c) = &companion {
        let u = uncertainty_summary(c);
        report.uncertainty.min_position_momentum = report.uncertainty.min_position_momentum.min(u.min_position_momentum);
    }
    Ok(RunOutcome { config: config.clone(), report, series, companion, snapshots, spectrum: spectrum(config)?, final_state })
}

/// [`execute`] followed by [`write_outputs`](super::write_outputs) into `out_dir`.
pub fn run_scenario(config: &ScenarioConfig, out_dir: &std::path::Path) -> ScenarioResult<RunReport> {
    let mut outcome = execute(config)?;
    super::write_outputs(&mut outcome, out_dir)?;
    Ok(outcome.report)
}
