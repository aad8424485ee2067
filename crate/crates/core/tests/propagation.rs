use cfgspace::force::ForceField;
use cfgspace::grid::make_grid;
use cfgspace::spectral::SpectralWorkspace;
use cfgspace::wavefunction::{gaussian_packet, Packet, WaveFunction2D};
use cfgspace::{evolve_characteristics, evolve_config_space, EvolveSpec, StrangPropagator};
use num_complex::Complex64;
use proptest::prelude::*;

fn packet_on(grid_n: usize, packet: Packet) -> WaveFunction2D {
    let g = make_grid(-8.0, 8.0, grid_n, -8.0, 8.0, grid_n).unwrap();
    gaussian_packet(&g, &packet, 1.0).unwrap()
}

#[test]
fn uniform_force_split_is_exact_for_any_step() {
    // drift and kick generators commute up to a constant, so Strang introduces no error
    let wf = packet_on(128, Packet::new(0.0, -1.5, 0.6, 0.6, 0.0));
    let f = ForceField::uniform(2.0);
    let oracle = evolve_characteristics(&wf, &f, 1.0).unwrap();
    let (coarse, _) = evolve_config_space(&wf, &f, &EvolveSpec::covering(1.0, 2, 2), 1.0).unwrap();
    let d = coarse.distance(&oracle).unwrap();
    assert!(d < 1e-9, "{d:e}");
}

#[test]
fn anharmonic_force_converges_at_second_order() {
    let wf = packet_on(128, Packet::new(0.5, 0.0, 0.6, 0.6, 0.0));
    // f(x) = -x - 0.1 x³
    let f = ForceField::new(cfgspace::force::ForceKind::Polynomial { coeffs: vec![0.0, -1.0, 0.0, -0.1] }, 1.0).unwrap();
    let reference = evolve_characteristics(&wf, &f, 0.5).unwrap();
    let d = |n: usize| {
        let (out, _) = evolve_config_space(&wf, &f, &EvolveSpec::covering(0.5, n, n), 1.0).unwrap();
        out.distance(&reference).unwrap()
    };
    let (a, b) = (d(50), d(100));
    let ratio = a / b;
    assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
}

/// The transposed composition: half kick in v, full drift in x, half kick.
fn kick_drift_kick(wf: &WaveFunction2D, force: &ForceField, dt: f64, steps: usize) -> WaveFunction2D {
    let g = *wf.grid();
    let ws = SpectralWorkspace::new(&g);
    let (xs, vs) = (g.x.nodes(), g.v.nodes());
    let (kx, kv) = (ws.x.k().to_vec(), ws.v.k().to_vec());
    let mut amps = wf.amps().to_vec();
    for _ in 0..steps {
        ws.filter_v(&mut amps, |i, m| Complex64::from_polar(1.0, -kv[m] * force.f(xs[i]) * 0.5 * dt));
        ws.filter_x(&mut amps, |j, m| Complex64::from_polar(1.0, -kx[m] * vs[j] * dt));
        ws.filter_v(&mut amps, |i, m| Complex64::from_polar(1.0, -kv[m] * force.f(xs[i]) * 0.5 * dt));
    }
    WaveFunction2D::from_amps(g, amps).unwrap()
}

#[test]
fn both_splitting_orders_agree_within_second_order_envelope() {
    let wf = packet_on(128, Packet::new(1.0, 0.0, 0.5, 0.5, 0.0));
    let f = ForceField::harmonic(1.0);
    let gap = |n: usize| {
        let dt = 1.0 / n as f64;
        let (drift_first, _) = evolve_config_space(&wf, &f, &EvolveSpec::covering(1.0, n, n), 1.0).unwrap();
        drift_first.distance(&kick_drift_kick(&wf, &f, dt, n)).unwrap()
    };
    let (coarse, fine) = (gap(100), gap(200));
    assert!(coarse < 1e-4, "{coarse:e}");
    let ratio = coarse / fine;
    assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
}

#[test]
fn advance_in_pieces_matches_advance_at_once() {
    let wf = packet_on(64, Packet::new(1.0, 0.5, 1.0, 1.0, 0.2));
    let prop = StrangPropagator::new(wf.grid(), &ForceField::harmonic(0.8), 0.01).unwrap();
    let mut once = wf.amps().to_vec();
    prop.advance(&mut once, 40);
    let mut pieces = wf.amps().to_vec();
    for _ in 0..4 {
        prop.advance(&mut pieces, 10);
    }
    let gap = once.iter().zip(&pieces).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(gap < 1e-13, "{gap}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Under free motion each velocity slice shifts rigidly: `|ψ(x, v, t)| = |ψ0(x - v t, v)|`,
    /// so the velocity marginal never changes.
    #[test]
    fn free_motion_keeps_velocity_marginal(x0 in -1.0..1.0f64, v0 in -1.0..1.0f64, t in 0.1..1.0f64) {
        let wf = packet_on(64, Packet::new(x0, v0, 1.0, 0.8, 0.0));
        let (out, _) = evolve_config_space(&wf, &ForceField::free(), &EvolveSpec::covering(t, 10, 10), 1.0).unwrap();
        let before = wf.v_marginal();
        let after = out.v_marginal();
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn strang_step_preserves_inner_products(seed_phase in 0.0..std::f64::consts::TAU, t in 0.05..0.5f64) {
        let a = packet_on(64, Packet::new(1.0, 0.0, 1.0, 1.0, 0.0));
        let b = packet_on(64, Packet::new(-0.5, 1.0, 1.2, 0.9, 0.7)).scaled(Complex64::from_polar(1.0, seed_phase));
        let f = ForceField::harmonic(1.0);
        let spec = EvolveSpec::covering(t, 20, 20);
        let (ea, _) = evolve_config_space(&a, &f, &spec, 1.0).unwrap();
        let (eb, _) = evolve_config_space(&b, &f, &spec, 1.0).unwrap();
        let before = a.inner(&b).unwrap();
        let after = ea.inner(&eb).unwrap();
        prop_assert!((before - after).norm() < 1e-12);
    }
}
