//! Newtonian reference trajectories, integrated with classic fourth-order Runge-Kutta.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::force::{ClassicalState, ForceField};

/// Step used when a flow of arbitrary duration is split into RK4 steps.
pub const FLOW_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ClassicalState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<ClassicalState> {
        self.states.last().copied()
    }
}

/// One RK4 step of `dx/dt = v`, `dv/dt = f(x)`. `dt` may be negative.
#[inline]
pub fn rk4_step(s: ClassicalState, force: &ForceField, dt: f64) -> ClassicalState {
    let h = 0.5 * dt;
    let (k1x, k1v) = (s.v, force.f(s.x));
    let (k2x, k2v) = (s.v + h * k1v, force.f(s.x + h * k1x));
    let (k3x, k3v) = (s.v + h * k2v, force.f(s.x + h * k2x));
    let (k4x, k4v) = (s.v + dt * k3v, force.f(s.x + dt * k3x));
    let w = dt / 6.0;
    ClassicalState {
        x: s.x + w * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        v: s.v + w * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    }
}

/// States at `t = k·dt` for `k = 0..=n_steps`.
pub fn classical_trajectory(state0: ClassicalState, force: &ForceField, dt: f64, n_steps: usize) -> Result<Trajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Argument(format!("dt must be positive, got {dt}")));
    }
    if !state0.is_finite() {
        return Err(Error::Argument("initial state must be finite".into()));
    }
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut s = state0;
    times.push(0.0);
    states.push(s);
    for k in 1..=n_steps {
        s = rk4_step(s, force, dt);
        if !s.is_finite() {
            return Err(Error::Numeric(format!("classical flow diverged at step {k}")));
        }
        times.push(k as f64 * dt);
        states.push(s);
    }
    Ok(Trajectory { times, states })
}

/// Flow map `Φ_t`: RK4 with `ceil(|t|/FLOW_STEP)` equal steps. Negative `t` flows backward.
pub fn flow(state: ClassicalState, force: &ForceField, t: f64) -> ClassicalState {
    if t == 0.0 {
        return state;
    }
    let n = (t.abs() / FLOW_STEP).ceil().max(1.0) as usize;
    let dt = t / n as f64;
    (0..n).fold(state, |s, _| rk4_step(s, force, dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn free_motion_is_exact() {
        let tr = classical_trajectory(ClassicalState::new(1.0, 2.0), &ForceField::free(), 0.25, 12).unwrap();
        assert_eq!(tr.len(), 13);
        assert_eq!(tr.last().unwrap(), ClassicalState::new(7.0, 2.0));
        assert_eq!(*tr.times.last().unwrap(), 3.0);
    }

    #[test]
    fn harmonic_period_closes() {
        let n = 6284;
        let tr = classical_trajectory(ClassicalState::new(1.0, 0.0), &ForceField::harmonic(1.0), 2.0 * PI / n as f64, n).unwrap();
        let s = tr.last().unwrap();
        assert!((s.x - 1.0).abs() < 1e-9 && s.v.abs() < 1e-9, "{s:?}");
    }

    #[test]
    fn uniform_fall() {
        let tr = classical_trajectory(ClassicalState::new(0.0, 0.0), &ForceField::uniform(9.81), 1e-3, 1000).unwrap();
        let s = tr.last().unwrap();
        assert!((s.v - 9.81).abs() < 1e-12);
        assert!((s.x - 4.905).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_step_and_reports_divergence() {
        let s0 = ClassicalState::new(0.0, 0.0);
        assert!(matches!(classical_trajectory(s0, &ForceField::free(), 0.0, 3), Err(Error::Argument(_))));
        let blowup = ForceField::new(crate::force::ForceKind::Polynomial { coeffs: vec![0.0, 0.0, 0.0, 1e6] }, 1.0).unwrap();
        let r = classical_trajectory(ClassicalState::new(10.0, 0.0), &blowup, 1.0, 50);
        assert!(matches!(r, Err(Error::Numeric(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn backward_flow_inverts_forward(x in -3.0f64..3.0, v in -3.0f64..3.0, t in 0.0f64..2.0) {
            let f = ForceField::harmonic(1.3);
            let back = flow(flow(ClassicalState::new(x, v), &f, t), &f, -t);
            prop_assert!((back.x - x).abs() < 1e-10 && (back.v - v).abs() < 1e-10);
        }

        #[test]
        fn harmonic_flow_matches_closed_form(x in -3.0f64..3.0, v in -3.0f64..3.0, t in 0.0f64..6.0) {
            let s = flow(ClassicalState::new(x, v), &ForceField::harmonic(1.0), t);
            prop_assert!((s.x - (x * t.cos() + v * t.sin())).abs() < 1e-10);
            prop_assert!((s.v - (v * t.cos() - x * t.sin())).abs() < 1e-10);
        }
    }
}
