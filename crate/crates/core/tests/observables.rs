use cfgspace::force::{ForceField, ForceKind};
use cfgspace::grid::make_grid;
use cfgspace::wavefunction::{gaussian_packet, Packet};
use cfgspace::{ehrenfest_residuals, evolve_config_space, EvolveSpec};

#[test]
fn ehrenfest_identities_hold_for_a_cubic_force() {
    // momentum is driven by ⟨f'(x) a⟩, which only matches when [f(x), p] = iħ f'(x)
    let g = make_grid(-8.0, 8.0, 128, -8.0, 8.0, 128).unwrap();
    let wf = gaussian_packet(&g, &Packet::new(0.8, 0.3, 0.6, 0.6, 0.4), 1.0).unwrap();
    let force = ForceField::new(ForceKind::Polynomial { coeffs: vec![0.0, -1.0, 0.0, -0.2] }, 1.0).unwrap();
    let dt = 1e-3;
    let (_, series) = evolve_config_space(&wf, &force, &EvolveSpec::new(dt, 400, 1), 1.0).unwrap();
    let r = ehrenfest_residuals(&series).unwrap();
    assert!(r.max() <= 1e-6_f64.max(10.0 * dt * dt), "{r:?}");
    // the momentum identity is not trivially satisfied: ⟨p⟩ really moves
    let p = series.column(|x| x.mean_p);
    assert!((p[p.len() - 1] - p[0]).abs() > 1e-3);
}

#[test]
fn anharmonic_run_still_conserves_classical_energy() {
    let g = make_grid(-8.0, 8.0, 128, -8.0, 8.0, 128).unwrap();
    let wf = gaussian_packet(&g, &Packet::new(0.8, 0.3, 0.6, 0.6, 0.0), 1.0).unwrap();
    let force = ForceField::new(ForceKind::Polynomial { coeffs: vec![0.0, -1.0, 0.0, -0.2] }, 1.0).unwrap();
    let (_, series) = evolve_config_space(&wf, &force, &EvolveSpec::new(1e-3, 1000, 100), 1.0).unwrap();
    let e = series.column(|x| x.energy_class);
    let drift = e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max) / e[0].abs();
    assert!(drift < 1e-6, "{drift:e}");
}
