//! Quantum mechanics of a point particle on a position-velocity grid.
//!
//! States are wave functions `ψ(x, v)` on a periodic grid. The dynamical
//! Hamiltonian `v̂p̂ + f(x̂)â` moves amplitudes along classical phase-space flow
//! lines, which the split-step propagator realises as two exact spectral shears.

pub mod classical;
pub mod error;
pub mod force;
pub mod grid;
pub mod observables;
pub mod operators;
pub mod propagators;
pub mod scenario;
pub mod spectra;
pub mod spectral;
pub mod wavefunction;

pub use classical::{classical_trajectory, Trajectory};
pub use error::{Error, Result};
pub use force::{ClassicalState, ForceField, ForceKind};
pub use grid::{make_grid, Axis, Grid2D, PhysicalConstants};
pub use observables::{ehrenfest_residuals, expect, mixture_reference, uncertainty, EhrenfestReport, ObservableRecord, ObservableSeries, Recorder};
pub use operators::{Moments, ObservableTag, OperatorAlgebra, WeylKind};
pub use propagators::{
    check_wrap_budget, check_wrap_budget_1d, evolve_basic_qm, evolve_characteristics, evolve_config_space, evolve_config_space_observed,
    evolve_photon, EvolveSpec, Method,
    StrangPropagator,
};
pub use spectra::{build_hdyn_matrix, energy_commutation_check, energy_observable, DenseOperator};
pub use spectral::SpectralWorkspace;
pub use wavefunction::{gaussian_1d, gaussian_packet, superposition, Packet, WaveFunction1D, WaveFunction2D};
