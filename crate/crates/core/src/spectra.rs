//! Dense matrices of the dynamical Hamiltonian on coarse grids, the positive
//! energy observable built from its spectrum, and the `[H_class, H_dyn]` check.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::force::ForceField;
use crate::grid::{Axis, Grid2D};
use crate::operators::{ObservableTag, OperatorAlgebra};
use crate::wavefunction::WaveFunction2D;

/// Largest dense dimension `n_x·n_v` (a 64×64 grid).
pub const MAX_DENSE_DIM: usize = 4096;
/// Hermiticity defect tolerated by [`energy_observable`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-8;

/// Dense operator on the flattened grid, index `i·n_v + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub grid: Grid2D,
    pub matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, amps: &[Complex64]) -> Result<Vec<Complex64>> {
        if amps.len() != self.dim() {
            return Err(Error::Shape(format!("expected {} amplitudes, got {}", self.dim(), amps.len())));
        }
        let v = nalgebra::DVector::from_column_slice(amps);
        Ok((&self.matrix * v).as_slice().to_vec())
    }

    /// `max |H - H†|` over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.matrix;
        let n = m.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues in ascending order, assuming Hermitian input.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = hermitian_part(&self.matrix).symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// `max |[A, B]|` over entries.
    pub fn commutator_max(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Shape("commutator of operators on different grids".into()));
        }
        let c = &self.matrix * &other.matrix - &other.matrix * &self.matrix;
        Ok(c.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Spectral first-derivative matrix times `-iħ` on one axis:
/// `D[a][b] = (ħ/n) Σ_m k_m e^{i k_m (a-b) h}` with the Nyquist bin dropped.
fn derivative_matrix(axis: &Axis, hbar: f64) -> DMatrix<Complex64> {
    let n = axis.n;
    let k = axis.derivative_wavenumbers();
    let h = axis.spacing();
    // Entries depend only on a - b; tabulate the n offsets.
    let row: Vec<Complex64> = (0..n)
        .map(|d| {
            let s = k.iter().fold(Complex64::new(0.0, 0.0), |acc, km| acc + Complex64::cis(km * d as f64 * h) * km);
            s * (hbar / n as f64)
        })
        .collect();
    DMatrix::from_fn(n, n, |a, b| row[(a + n - b) % n])
}

/// Dense `H_dyn = V·P + F·A`, with `V`, `F` diagonal and `P`, `A` spectral
/// derivative matrices. Hermitian up to rounding since each product pairs
/// operators acting on different axes.
pub fn build_hdyn_matrix(grid: &Grid2D, force: &ForceField, hbar: f64) -> Result<DenseOperator> {
    force.validate()?;
    let dim = grid.len();
    if dim > MAX_DENSE_DIM {
        return Err(Error::Resource(format!("dense dimension {dim} exceeds {MAX_DENSE_DIM}")));
    }
    let (n_x, n_v) = (grid.n_x(), grid.n_v());
    let p = derivative_matrix(&grid.x, hbar);
    let a = derivative_matrix(&grid.v, hbar);
    let vs = grid.v.nodes();
    let fs: Vec<f64> = grid.x.nodes().iter().map(|&x| force.f(x)).collect();
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..n_x {
        for j in 0..n_v {
            let r = i * n_v + j;
            for i2 in 0..n_x {
                h[(r, i2 * n_v + j)] += p[(i, i2)] * vs[j];
            }
            for j2 in 0..n_v {
                h[(r, i * n_v + j2)] += a[(j, j2)] * fs[i];
            }
        }
    }
    Ok(DenseOperator { grid: *grid, matrix: h })
}

/// `H_eng = U|E|U†` from the eigendecomposition `H_dyn = U E U†`.
pub fn energy_observable(hdyn: &DenseOperator) -> Result<DenseOperator> {
    let defect = hdyn.hermiticity_defect();
    if defect > HERMITIAN_TOLERANCE {
        return Err(Error::Precondition(format!("operator is not Hermitian (defect {defect:.3e})")));
    }
    let eig = hermitian_part(&hdyn.matrix).symmetric_eigen();
    let u = &eig.eigenvectors;
    let mut scaled = u.clone();
    for (c, e) in eig.eigenvalues.iter().enumerate() {
        let w = Complex64::new(e.abs(), 0.0);
        scaled.column_mut(c).iter_mut().for_each(|z| *z *= w);
    }
    Ok(DenseOperator { grid: hdyn.grid, matrix: scaled * u.adjoint() })
}

/// `index,eigenvalue` rows.
pub fn spectrum_csv(eigenvalues: &[f64]) -> String {
    let mut out = String::from("index,eigenvalue\n");
    for (k, e) in eigenvalues.iter().enumerate() {
        out.push_str(&format!("{k},{e:.16e}\n"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutationReport {
    /// `‖[H_class, H_dyn]ψ‖/‖ψ‖` per test state.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Matrix-free `‖(H_class H_dyn - H_dyn H_class)ψ‖/‖ψ‖` over interior test states.
pub fn energy_commutation_check(
    grid: &Grid2D,
    force: &ForceField,
    hbar: f64,
    test_states: &[WaveFunction2D],
) -> Result<CommutationReport> {
    let ops = OperatorAlgebra::new(grid, hbar)?;
    let mut residuals = Vec::with_capacity(test_states.len());
    for wf in test_states {
        if wf.grid() != grid {
            return Err(Error::Shape("test state grid differs from the operator grid".into()));
        }
        ops.check_interior(wf)?;
        let psi = wf.amps();
        let class_dyn = ops.apply_amps(ObservableTag::ClassicalEnergy, &ops.apply_hdyn_amps(psi, force), Some(force))?;
        let dyn_class = ops.apply_hdyn_amps(&ops.apply_amps(ObservableTag::ClassicalEnergy, psi, Some(force))?, force);
        let diff: Vec<Complex64> = class_dyn.iter().zip(&dyn_class).map(|(a, b)| a - b).collect();
        let r = WaveFunction2D::from_amps(*grid, diff)?.norm()? / wf.norm()?;
        residuals.push(r);
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(CommutationReport { residuals, max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::wavefunction::{gaussian_packet, Packet};

    #[test]
    fn free_spectrum_is_product_of_diagonals() {
        let g = make_grid(-4.0, 4.0, 8, -2.0, 2.0, 8).unwrap();
        let h = build_hdyn_matrix(&g, &ForceField::free(), 1.0).unwrap();
        assert!(h.hermiticity_defect() <= 1e-10);
        let mut expected: Vec<f64> =
            g.x.derivative_wavenumbers().iter().flat_map(|k| g.v.nodes().into_iter().map(move |v| k * v)).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in h.eigenvalues().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn uniform_spectrum_is_symmetric() {
        // v nodes placed symmetrically about zero, so v → -v maps the grid to itself
        let g = make_grid(-4.0, 4.0, 8, -3.5, 4.5, 8).unwrap();
        let e = build_hdyn_matrix(&g, &ForceField::uniform(9.81), 1.0).unwrap().eigenvalues();
        let n = e.len();
        for k in 0..n {
            assert!((e[k] + e[n - 1 - k]).abs() < 1e-8);
        }
    }

    #[test]
    fn dense_matches_matrix_free() {
        let g = make_grid(-3.0, 3.0, 8, -2.0, 2.0, 8).unwrap();
        let f = ForceField::harmonic(1.3);
        let h = build_hdyn_matrix(&g, &f, 0.7).unwrap();
        let ops = OperatorAlgebra::new(&g, 0.7).unwrap();
        let psi: Vec<Complex64> = (0..64).map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos())).collect();
        let dense = h.apply(&psi).unwrap();
        let free = ops.apply_hdyn_amps(&psi, &f);
        assert!(dense.iter().zip(&free).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn energy_observable_properties() {
        let g = make_grid(-2.0, 2.0, 8, -2.0, 2.0, 8).unwrap();
        let h = build_hdyn_matrix(&g, &ForceField::harmonic(1.0), 1.0).unwrap();
        let he = energy_observable(&h).unwrap();
        assert!(he.eigenvalues()[0] >= -1e-10);
        assert!(he.commutator_max(&h).unwrap() <= 1e-9);
        // a positive semidefinite input is returned unchanged
        let again = energy_observable(&he).unwrap();
        assert!(again.matrix.iter().zip(he.matrix.iter()).all(|(a, b)| (a - b).norm() <= 1e-10));
    }

    #[test]
    fn free_energy_eigenvalues_are_absolute() {
        let g = make_grid(-4.0, 4.0, 16, -2.0, 2.0, 16).unwrap();
        let h = build_hdyn_matrix(&g, &ForceField::free(), 1.0).unwrap();
        let e = energy_observable(&h).unwrap().eigenvalues();
        let mut expected: Vec<f64> =
            g.x.derivative_wavenumbers().iter().flat_map(|k| g.v.nodes().into_iter().map(move |v| (k * v).abs())).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in e.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_large_and_non_hermitian() {
        let g = make_grid(-4.0, 4.0, 128, -2.0, 2.0, 64).unwrap();
        assert!(matches!(build_hdyn_matrix(&g, &ForceField::free(), 1.0), Err(Error::Resource(_))));
        let g = make_grid(-1.0, 1.0, 8, -1.0, 1.0, 8).unwrap();
        let mut h = build_hdyn_matrix(&g, &ForceField::free(), 1.0).unwrap();
        h.matrix[(0, 1)] += Complex64::new(1e-3, 0.0);
        assert!(matches!(energy_observable(&h), Err(Error::Precondition(_))));
    }

    #[test]
    fn classical_energy_commutes_with_hdyn() {
        let g = make_grid(-10.0, 10.0, 128, -10.0, 10.0, 128).unwrap();
        let states: Vec<_> = [(0.0, 0.0), (1.0, -1.0), (-1.5, 0.5)]
            .iter()
            .map(|&(x0, v0)| gaussian_packet(&g, &Packet::new(x0, v0, 0.8, 0.8, 0.3), 1.0).unwrap())
            .collect();
        let free = energy_commutation_check(&g, &ForceField::free(), 1.0, &states).unwrap();
        assert!(free.max_residual <= 1e-10, "{}", free.max_residual);
        let uni = energy_commutation_check(&g, &ForceField::uniform(9.81), 1.0, &states).unwrap();
        assert!(uni.max_residual <= 1e-7, "{}", uni.max_residual);
        let harm = energy_commutation_check(&g, &ForceField::harmonic(1.0), 1.0, &states).unwrap();
        assert!(harm.max_residual <= 1e-6, "{}", harm.max_residual);
    }

    #[test]
    fn spectrum_dump() {
        assert_eq!(spectrum_csv(&[-1.0, 2.5]), "index,eigenvalue\n0,-1.0000000000000000e0\n1,2.5000000000000000e0\n");
    }
}
