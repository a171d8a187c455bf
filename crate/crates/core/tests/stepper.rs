mod common;

use nutaxis::grid::integrate;
use nutaxis::monitors::MonitorConfig;
use nutaxis::stepper::{run, stable_dt, RunConfig, Scheme, StepControl, Stepper};
use nutaxis::{Field, Grid2D, ModelParams, State};
use proptest::prelude::*;

fn reaction_integral(s: &State, p: &ModelParams) -> f64 {
    let g = s.grid();
    g.cell_area() * s.u.values().iter().map(|&u| p.rho * u - p.mu * u.powf(p.kappa)).sum::<f64>()
}

fn consumption_integral(s: &State) -> f64 {
    let g = s.grid();
    g.cell_area() * s.u.values().iter().zip(s.v.values()).map(|(u, v)| u * v).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn euler_mass_identities(seed in 0u64..10_000, n in 4usize..24, rho in 0.2..3.0f64, mu in 0.2..3.0f64) {
        let mut r = common::rng(seed);
        let s = common::random_state(&mut r, n);
        let p = ModelParams { rho, mu, ..ModelParams::default() };
        let c = StepControl::default();
        let dt = stable_dt(&s, &p, &c).unwrap();
        let mut next = s.clone();
        Stepper::new(*s.grid()).step_with(&mut next, dt, &p, Scheme::Euler).unwrap();
        let (mu0, mu1) = (integrate(&s.u), integrate(&next.u));
        let (mv0, mv1) = (integrate(&s.v), integrate(&next.v));
        prop_assert!((mu1 - mu0 - dt * reaction_integral(&s, &p)).abs() <= 1e-12 * mu0.max(1.0));
        prop_assert!((mv1 - mv0 + dt * consumption_integral(&s)).abs() <= 1e-12 * mv0.max(1.0));
    }

    #[test]
    fn heun_mass_identities(seed in 0u64..10_000, n in 4usize..24) {
        let mut r = common::rng(seed);
        let s = common::random_state(&mut r, n);
        let p = ModelParams::default();
        let dt = stable_dt(&s, &p, &StepControl::default()).unwrap();
        // Heun is the average of the state and an Euler step from the predictor
        let mut pred = s.clone();
        Stepper::new(*s.grid()).step_with(&mut pred, dt, &p, Scheme::Euler).unwrap();
        let mut next = s.clone();
        let rep = Stepper::new(*s.grid()).step_with(&mut next, dt, &p, Scheme::Heun).unwrap();
        let reaction = 0.5 * (reaction_integral(&s, &p) + reaction_integral(&pred, &p));
        let consumption = 0.5 * (consumption_integral(&s) + consumption_integral(&pred));
        let (mu0, mv0) = (integrate(&s.u), integrate(&s.v));
        prop_assert!((integrate(&next.u) - mu0 - dt * reaction).abs() <= 1e-12 * mu0.max(1.0));
        prop_assert!((integrate(&next.v) - mv0 + dt * consumption).abs() <= 1e-12 * mv0.max(1.0));
        prop_assert!((rep.reaction - reaction).abs() <= 1e-12 * reaction.abs().max(1.0));
    }
}

#[test]
fn positivity_under_stress() {
    let p = ModelParams::default();
    let c = StepControl::default();
    let mut vacuum = 0;
    for seed in 0..12 {
        let mut r = common::rng(500 + seed);
        let s0 = common::random_state(&mut r, 24);
        vacuum += usize::from(s0.u.min() == 0.0);
        let res = run(&s0, &p, &c, &RunConfig::new(0.05, 0.05, 20), &MonitorConfig::default(), &mut []).unwrap();
        assert!(res.termination.is_completed(), "seed {seed}: {}", res.termination);
        assert!(res.final_state.u.min() >= 0.0);
        assert!(res.final_state.v.min() > 0.0);
        for rec in &res.series {
            assert!(rec.inf_v > 0.0);
            assert!(rec.sup_v <= s0.v.max());
        }
    }
    assert!(vacuum >= 3, "only {vacuum} states had vacuum cells");
}

fn uniform(u0: f64) -> State {
    let g = Grid2D::unit_square(4).unwrap();
    State::new(Field::constant(g, u0).unwrap(), Field::constant(g, 1.0).unwrap(), 0.0).unwrap()
}

/// Error at `t = 1` against the logistic solution with fixed steps.
fn uniform_error(scheme: Scheme, dt: f64) -> f64 {
    let p = ModelParams::default();
    let mut s = uniform(0.2);
    let mut st = Stepper::new(*s.grid());
    let n = (1.0 / dt).round() as usize;
    for _ in 0..n {
        st.step_with(&mut s, dt, &p, scheme).unwrap();
    }
    (s.u.values()[0] - common::logistic(0.2, 1.0)).abs()
}

#[test]
fn temporal_order_on_uniform_data() {
    for (scheme, order) in [(Scheme::Euler, 1.0), (Scheme::Heun, 2.0)] {
        let errs: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&dt| uniform_error(scheme, dt)).collect();
        for w in errs.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!((slope - order).abs() < 0.1, "{scheme}: slope {slope}, errors {errs:?}");
        }
    }
}
