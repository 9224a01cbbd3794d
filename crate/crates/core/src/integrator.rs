//! Fixed-step classical RK4 time stepping with uniform output sampling.
//!
//! Deterministic by construction: identical scenarios produce bit-identical
//! trajectories. Divergence (a state turning non-finite) is reported as an
//! error carrying the partial trajectory integrated so far.

use crate::error::{Error, Result};
use crate::model::{eval_derivatives_flat, hierarchy_level, Scenario};

pub const MAX_HALVINGS: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// D dipped below zero within a step (floating-point overshoot) and was
    /// clamped back to zero.
    ClampedD,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEvent {
    pub time: f64,
    pub culture: usize,
    pub kind: EventKind,
}

/// Sampled (D, S, H) series for one culture.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CultureSeries {
    pub d: Vec<f64>,
    pub s: Vec<f64>,
    pub h: Vec<f64>,
}

/// Sampled trajectories of all cultures on a shared uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub times: Vec<f64>,
    pub cultures: Vec<CultureSeries>,
    pub events: Vec<TrajectoryEvent>,
    /// Time at which integration failed, if it did; such a trajectory holds
    /// only the finite samples recorded before the failure.
    pub divergence: Option<f64>,
}

impl TrajectorySet {
    pub fn culture_count(&self) -> usize {
        self.cultures.len()
    }

    pub fn sample_count(&self) -> usize {
        self.times.len()
    }

    /// Index range (inclusive start, exclusive end) of samples with
    /// t in [lo, hi], tolerating grid roundoff.
    pub fn window(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let eps = 1e-9 * hi.abs().max(1.0);
        let start = self.times.partition_point(|&t| t < lo - eps);
        let end = self.times.partition_point(|&t| t <= hi + eps);
        start..end
    }
}

/// Advances the scenario from t = 0 to the horizon with classical RK4.
pub fn integrate(scenario: &Scenario) -> Result<TrajectorySet> {
    scenario.validate()?;
    let n = scenario.culture_count();
    let dt = scenario.dt;
    let stride = scenario.sample_stride();
    let samples = scenario.sample_count();
    let total_steps = stride * (samples - 1);

    let mut state: Vec<f64> = Vec::with_capacity(2 * n);
    for setup in &scenario.cultures {
        state.push(setup.initial.d_concepts);
        state.push(setup.initial.s_synthesis);
    }

    let mut traj = TrajectorySet {
        times: Vec::with_capacity(samples as usize),
        cultures: vec![CultureSeries::default(); n],
        events: Vec::new(),
        divergence: None,
    };
    record_sample(&mut traj, scenario, 0.0, &state)?;

    let mut k1 = vec![0.0; 2 * n];
    let mut k2 = vec![0.0; 2 * n];
    let mut k3 = vec![0.0; 2 * n];
    let mut k4 = vec![0.0; 2 * n];
    let mut tmp = vec![0.0; 2 * n];

    for step in 0..total_steps {
        let t = step as f64 * dt;
        eval_derivatives_flat(&state, scenario, t, &mut k1);
        for i in 0..2 * n {
            tmp[i] = state[i] + 0.5 * dt * k1[i];
        }
        eval_derivatives_flat(&tmp, scenario, t + 0.5 * dt, &mut k2);
        for i in 0..2 * n {
            tmp[i] = state[i] + 0.5 * dt * k2[i];
        }
        eval_derivatives_flat(&tmp, scenario, t + 0.5 * dt, &mut k3);
        for i in 0..2 * n {
            tmp[i] = state[i] + dt * k3[i];
        }
        eval_derivatives_flat(&tmp, scenario, t + dt, &mut k4);

        let t_next = (step + 1) as f64 * dt;
        for i in 0..2 * n {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        for k in 0..n {
            if state[2 * k] < 0.0 {
                state[2 * k] = 0.0;
                traj.events.push(TrajectoryEvent {
                    time: t_next,
                    culture: k,
                    kind: EventKind::ClampedD,
                });
            }
        }
        if !state.iter().all(|v| v.is_finite()) {
            traj.divergence = Some(t_next);
            return Err(Error::Divergence {
                time: t_next,
                partial: Box::new(traj),
            });
        }
        if (step + 1) % stride == 0 {
            let sample_index = (step + 1) / stride;
            let t_sample = sample_index as f64 * scenario.sample_every;
            record_sample(&mut traj, scenario, t_sample, &state)?;
        }
    }
    Ok(traj)
}

fn record_sample(
    traj: &mut TrajectorySet,
    scenario: &Scenario,
    t: f64,
    state: &[f64],
) -> Result<()> {
    traj.times.push(t);
    for (k, series) in traj.cultures.iter_mut().enumerate() {
        series.d.push(state[2 * k]);
        series.s.push(state[2 * k + 1]);
        series
            .h
            .push(hierarchy_level(&scenario.cultures[k].params, t)?);
    }
    Ok(())
}

/// Integrates with successive step halvings until the trajectory stops
/// changing, comparing successive refinements at the shared sample points.
///
/// The change measure for each culture's D and S series is the sup-norm
/// difference normalized by the series' own sup norm, so sign changes near
/// zero do not defeat convergence. Fails after [`MAX_HALVINGS`] halvings.
pub fn refine_until_converged(scenario: &Scenario, tol: f64) -> Result<(f64, TrajectorySet)> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidInput("tol must be > 0".to_string()));
    }
    scenario.validate()?;
    let mut current = scenario.clone();
    let mut prev = integrate(&current)?;
    for _ in 0..MAX_HALVINGS {
        current.dt /= 2.0;
        let next = integrate(&current)?;
        if max_relative_change(&prev, &next) < tol {
            return Ok((current.dt, next));
        }
        prev = next;
    }
    Err(Error::NoConvergence(MAX_HALVINGS))
}

fn max_relative_change(a: &TrajectorySet, b: &TrajectorySet) -> f64 {
    let mut worst: f64 = 0.0;
    for (ca, cb) in a.cultures.iter().zip(&b.cultures) {
        for (sa, sb) in [(&ca.d, &cb.d), (&ca.s, &cb.s)] {
            let scale = sb.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            let diff = sa
                .iter()
                .zip(sb.iter())
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            worst = worst.max(diff / scale);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CultureParams, CultureState, Scenario};

    fn fig1a() -> Scenario {
        Scenario::single(
            CultureParams::new(10.0, 1.0, 10.0, 0.1, 2.0, 10.0, 1.0).unwrap(),
            CultureState::new(10.0, 3.0).unwrap(),
        )
    }

    #[test]
    fn zero_horizon_yields_single_sample() {
        let mut sc = fig1a();
        sc.horizon = 0.0;
        let traj = integrate(&sc).unwrap();
        assert_eq!(traj.times, vec![0.0]);
        assert_eq!(traj.cultures[0].d, vec![10.0]);
        assert_eq!(traj.cultures[0].s, vec![3.0]);
        assert_eq!(traj.cultures[0].h, vec![1.0]);
    }

    #[test]
    fn constant_rate_case_is_exact() {
        // a = 0, b = 0, e = 0: D constant, S(t) = S(0) + d*h0*t.
        let mut sc = Scenario::single(
            CultureParams::new(0.0, 0.0, 2.0, 0.0, 2.0, 10.0, 5.0).unwrap(),
            CultureState::new(7.0, 1.0).unwrap(),
        );
        sc.horizon = 4.0;
        let traj = integrate(&sc).unwrap();
        for (i, &t) in traj.times.iter().enumerate() {
            assert_eq!(traj.cultures[0].d[i], 7.0);
            let expected = 1.0 + 10.0 * t;
            assert!(
                (traj.cultures[0].s[i] - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                "t={t}"
            );
        }
    }

    #[test]
    fn quadratic_case_is_exact() {
        // a = 0, b = 0, e > 0: S is a degree-2 polynomial, integrated exactly.
        let sc = Scenario::single(
            CultureParams::new(0.0, 0.0, 3.0, 2.0, 2.0, 10.0, 1.0).unwrap(),
            CultureState::new(0.0, 0.0).unwrap(),
        );
        let traj = integrate(&sc).unwrap();
        for (i, &t) in traj.times.iter().enumerate() {
            let expected = 3.0 * (t + t * t);
            assert!(
                (traj.cultures[0].s[i] - expected).abs() <= 1e-9 * expected.abs().max(1.0),
                "t={t}: {} vs {}",
                traj.cultures[0].s[i],
                expected
            );
        }
    }

    #[test]
    fn integration_is_deterministic() {
        let sc = fig1a();
        let t1 = integrate(&sc).unwrap();
        let t2 = integrate(&sc).unwrap();
        assert_eq!(t1, t2);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&t1.cultures[0].d), bits(&t2.cultures[0].d));
    }

    #[test]
    fn grid_has_expected_sample_count() {
        for (horizon, sample_every, expected) in
            [(10.0, 1e-2, 1001), (1.0, 0.25, 5), (0.0, 1e-2, 1)]
        {
            let mut sc = fig1a();
            sc.horizon = horizon;
            sc.sample_every = sample_every;
            let traj = integrate(&sc).unwrap();
            assert_eq!(traj.sample_count(), expected);
            assert_eq!(traj.times[0], 0.0);
            assert!((traj.times[traj.sample_count() - 1] - horizon).abs() <= sc.dt);
        }
    }

    #[test]
    fn fig1a_reference_value_and_nonnegativity() {
        let traj = integrate(&fig1a()).unwrap();
        assert!(traj.cultures[0].d.iter().all(|&d| d >= 0.0));
        assert!(traj.cultures[0]
            .d
            .iter()
            .chain(&traj.cultures[0].s)
            .all(|v| v.is_finite()));
        // Cross-checked against an independent RK4 implementation.
        let d_end = *traj.cultures[0].d.last().unwrap();
        assert!((d_end - 8.211332769255).abs() < 1e-6, "D(10) = {d_end}");
    }

    #[test]
    fn deep_crash_clamps_to_zero() {
        // S plunges through the threshold within a step, so the late RK4
        // stages see a far more negative G than the early ones and the
        // combined update overshoots D below zero.
        let mut sc = Scenario::single(
            CultureParams::new(2.0, 100.0, 0.0, 0.0, 0.0, 1.0, 0.0).unwrap(),
            CultureState::new(100.0, 1.0).unwrap(),
        );
        sc.horizon = 1.0;
        sc.dt = 1e-3;
        let traj = integrate(&sc).unwrap();
        assert!(traj
            .events
            .iter()
            .any(|ev| ev.kind == EventKind::ClampedD && ev.culture == 0));
        assert!(traj.cultures[0].d.iter().all(|&d| d >= 0.0));
        assert_eq!(*traj.cultures[0].d.last().unwrap(), 0.0);
    }

    fn divergent_scenario() -> Scenario {
        // Huge hierarchy support keeps S growing linearly while a large `a`
        // makes D super-exponential: overflow before the horizon.
        let mut sc = Scenario::single(
            CultureParams::new(10.0, 0.0, 100.0, 0.0, 0.0, 1e9, 100.0).unwrap(),
            CultureState::new(10.0, 10.0).unwrap(),
        );
        sc.horizon = 1.0;
        sc
    }

    #[test]
    fn divergence_reports_time_and_partial_trajectory() {
        match integrate(&divergent_scenario()) {
            Err(Error::Divergence { time, partial }) => {
                assert!(time > 0.0 && time < 1.0);
                assert_eq!(partial.divergence, Some(time));
                assert!(partial.sample_count() >= 1);
                assert!(*partial.times.last().unwrap() < time + 1e-12);
                for c in &partial.cultures {
                    assert!(c.d.iter().chain(&c.s).all(|v| v.is_finite()));
                }
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn refine_converges_immediately_on_exact_case() {
        let mut sc = Scenario::single(
            CultureParams::new(0.0, 0.0, 2.0, 0.0, 2.0, 10.0, 5.0).unwrap(),
            CultureState::new(7.0, 1.0).unwrap(),
        );
        sc.horizon = 1.0;
        let (dt_used, _) = refine_until_converged(&sc, 1e-6).unwrap();
        assert_eq!(dt_used, sc.dt / 2.0);
    }

    #[test]
    fn refine_reaches_small_step_on_fig1a() {
        let (dt_used, traj) = refine_until_converged(&fig1a(), 1e-4).unwrap();
        assert!(dt_used <= 1e-2);
        assert_eq!(traj.sample_count(), 1001);
    }

    #[test]
    fn refine_propagates_divergence() {
        assert!(matches!(
            refine_until_converged(&divergent_scenario(), 1e-4),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn refine_gives_up_on_unreachable_tolerance() {
        let mut sc = fig1a();
        sc.horizon = 0.1;
        match refine_until_converged(&sc, 1e-300) {
            Err(Error::NoConvergence(h)) => assert_eq!(h, MAX_HALVINGS),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn window_selects_inclusive_time_range() {
        let traj = integrate(&fig1a()).unwrap();
        let w = traj.window(5.0, 10.0);
        assert_eq!(traj.times[w.start], 5.0);
        assert_eq!(w.end, traj.sample_count());
        let w0 = traj.window(0.0, 2.0);
        assert_eq!(w0.start, 0);
        assert!((traj.times[w0.end - 1] - 2.0).abs() < 1e-12);
    }
}
