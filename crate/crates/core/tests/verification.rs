mod common;

use std::f64::consts::PI;

use nutaxis::inequalities::{
    check_lemma41, check_lemma52_trajectory, estimate_sobolev_c1, lemma41_report, lemma42_report, lemma42_terms,
    sobolev_ratio, FamilyKind, FieldFamily,
};
use nutaxis::scenarios::{Preset, Scenario};
use nutaxis::stepper::{RunConfig, SnapshotMemory};
use nutaxis::weakform::{defect_u, defect_v, residual_u, residual_v, TestFunction};
use nutaxis::{Field, Grid2D, ModelParams, State};

const FAMILIES: [FamilyKind; 3] = [FamilyKind::Trig, FamilyKind::Bumps, FamilyKind::Noise];

/// Uniform data with the closed-form logistic density and the nutrient
/// `1/(1 − u₀ + u₀eᵗ)`, sampled every `dt` up to `t_end`.
fn logistic_trajectory(u0: f64, dt: f64, t_end: f64) -> Vec<State> {
    let g = Grid2D::unit_square(4).unwrap();
    let n = (t_end / dt).round() as usize;
    (0..=n)
        .map(|k| {
            let t = k as f64 * dt;
            let u = Field::constant(g, common::logistic(u0, t)).unwrap();
            let v = Field::constant(g, (-common::logistic_integral(u0, t)).exp()).unwrap();
            State::new(u, v, t).unwrap()
        })
        .collect()
}

#[test]
fn weak_residuals_of_exact_logistic_data_shrink_with_cadence() {
    let p = ModelParams::default();
    let tf = TestFunction::with_default_width(0, 0, 1.0).unwrap();
    let res: Vec<(f64, f64)> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| {
            let s = logistic_trajectory(0.2, dt, 1.0);
            (residual_u(&s, &tf, &p).unwrap(), residual_v(&s, &tf).unwrap())
        })
        .collect();
    for w in res.windows(2) {
        // trapezoid in time: second order
        assert!(w[0].0 / w[1].0 > 3.0, "{res:?}");
        assert!(w[0].1 / w[1].1 > 3.0, "{res:?}");
    }
    assert!(res[2].0 < 1e-4 && res[2].1 < 1e-4, "{res:?}");
}

/// Pure diffusion of `1 + 0.1·cos(πx)` with a vanishing density.
fn heat_trajectory(n: usize, t_end: f64, every: f64) -> Vec<State> {
    let mut sc = Scenario::new("heat", n, Preset::Uniform(0.0), Preset::HeatOnly(1)).unwrap();
    sc.run = RunConfig::new(t_end, every, 100);
    let mut mem = SnapshotMemory::default();
    let res = sc.execute(&sc.monitor_config(), &mut [&mut mem]).unwrap();
    assert!(res.termination.is_completed());
    mem.states
}

/// Projection of `v − 1` on `cos(πx)`, normalised to the initial amplitude.
fn mode_amplitude(s: &State) -> f64 {
    let g = s.grid();
    let mut acc = 0.0;
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let (x, _) = g.center(i, j);
            acc += (s.v.get(i, j) - 1.0) * (PI * x).cos();
        }
    }
    acc * g.cell_area() / (0.1 * 0.5)
}

#[test]
fn heat_mode_decays_at_the_continuum_rate() {
    let states = heat_trajectory(64, 0.5, 0.1);
    for s in &states[1..] {
        let a = mode_amplitude(s);
        let exact = (-PI * PI * s.t).exp();
        assert!((a / exact - 1.0).abs() < 2e-3, "t={} amplitude {a} exact {exact}", s.t);
        assert!(s.u.max() == 0.0);
    }
}

#[test]
fn heat_weak_residual_decreases_under_refinement() {
    let tf = TestFunction::with_default_width(1, 0, 0.2).unwrap();
    let r: Vec<f64> = [(16, 0.01), (32, 0.005), (64, 0.0025)]
        .iter()
        .map(|&(n, every)| residual_v(&heat_trajectory(n, 0.2, every), &tf).unwrap())
        .collect();
    assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
    assert!(r[2] < 1e-3, "{r:?}");
}

#[test]
fn defects_are_linear_in_the_test_function() {
    let mut rng = common::rng(21);
    let s0 = common::random_state(&mut rng, 16);
    let p = ModelParams::default();
    let mut mem = SnapshotMemory::default();
    let res = nutaxis::stepper::run(
        &s0,
        &p,
        &Default::default(),
        &RunConfig::new(0.3, 0.01, 50),
        &Default::default(),
        &mut [&mut mem],
    )
    .unwrap();
    assert!(res.termination.is_completed());
    let a = TestFunction::with_default_width(1, 0, 0.25).unwrap();
    let b = TestFunction::with_default_width(0, 2, 0.25).unwrap();
    let combo = [(0.7, a), (-1.3, b)];
    let gap = |d: nutaxis::weakform::Defect| d.lhs - d.rhs;
    let whole_u = gap(defect_u(&mem.states, &combo, &p).unwrap());
    let whole_v = gap(defect_v(&mem.states, &combo).unwrap());
    let parts_u: Vec<f64> = combo.iter().map(|&(c, tf)| c * gap(defect_u(&mem.states, &[(1.0, tf)], &p).unwrap())).collect();
    let parts_v: Vec<f64> = combo.iter().map(|&(c, tf)| c * gap(defect_v(&mem.states, &[(1.0, tf)]).unwrap())).collect();
    assert!((whole_u - parts_u.iter().sum::<f64>()).abs() < 1e-12);
    assert!((whole_v - parts_v.iter().sum::<f64>()).abs() < 1e-12);
    assert!(whole_u.abs() <= parts_u.iter().map(|x| x.abs()).sum::<f64>() + 1e-14);
    assert!(whole_v.abs() <= parts_v.iter().map(|x| x.abs()).sum::<f64>() + 1e-14);
}

#[test]
fn sobolev_ratio_of_a_cosine_profile() {
    // ρ = 2 + cos(πx): ∫ρ² = 4.5, ∫|∇ρ| = 2, ∫ρ = 2
    let g = Grid2D::unit_square(128).unwrap();
    let rho = Field::from_fn(g, |x, _| 2.0 + (PI * x).cos()).unwrap();
    let r = sobolev_ratio(&rho).unwrap();
    assert!((r - 4.5 / 8.0).abs() < 1e-3, "{r}");
}

#[test]
fn sobolev_ratio_is_exactly_scale_invariant_under_powers_of_two() {
    let g = Grid2D::unit_square(32).unwrap();
    for kind in FAMILIES {
        for f in FieldFamily::new(kind, 10, 3).fields(&g).unwrap() {
            let r = sobolev_ratio(&f).unwrap();
            for k in [0.25, 2.0, 1024.0] {
                assert_eq!(sobolev_ratio(&f.map(|x| k * x).unwrap()).unwrap(), r, "{kind} k={k}");
            }
        }
    }
}

#[test]
fn two_field_interpolation_holds_with_twice_the_estimated_embedding_constant() {
    let g = Grid2D::unit_square(32).unwrap();
    for kind in FAMILIES {
        let fam = FieldFamily::new(kind, 50, 1);
        let c1 = 2.0 * estimate_sobolev_c1(&fam, &g).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let rep = lemma41_report(&fam, &g, p, c1).unwrap();
            assert_eq!(rep.pass, Some(true), "{kind} p={p}: {}", rep.line());
            assert!(rep.max_ratio <= 1.0);
        }
    }
}

#[test]
fn two_field_interpolation_on_constants() {
    // φ ≡ a, ψ ≡ b: only the cross term survives, c·ab·a^p against a^{p+1}b
    let g = Grid2D::unit_square(8).unwrap();
    let (a, b, p, c1) = (3.0, 0.5, 2.0, 0.1);
    let s = check_lemma41(&Field::constant(g, a).unwrap(), &Field::constant(g, b).unwrap(), p, c1).unwrap();
    let c = nutaxis::inequalities::lemma41_constant(p, c1, 1.0);
    assert!((s.lhs - a.powf(p + 1.0) * b).abs() < 1e-12);
    assert!((s.rhs - c * a * b * a.powf(p)).abs() < 1e-12);
}

#[test]
fn weighted_gradient_rhs_is_monotone_in_the_constant() {
    let g = Grid2D::unit_square(24).unwrap();
    for kind in FAMILIES {
        for (phi, psi) in FieldFamily::new(kind, 10, 5).pairs(&g).unwrap() {
            let t = lemma42_terms(&phi, &psi, 1.5, 0.25).unwrap();
            let mut prev = t.rhs(0.0);
            for k in 1..20 {
                let r = t.rhs(k as f64 * 0.1);
                assert!(r >= prev);
                prev = r;
            }
        }
    }
}

#[test]
fn fitted_weighted_gradient_constant_is_tight() {
    let g = Grid2D::unit_square(32).unwrap();
    for kind in FAMILIES {
        let fam = FieldFamily::new(kind, 30, 2);
        let rep = lemma42_report(&fam, &g, 1.0, 0.125).unwrap();
        let c = rep.fitted_constant.unwrap();
        assert!(rep.max_ratio <= 1.0 + 1e-12, "{kind}: {}", rep.line());
        if c > 0.0 {
            assert!(rep.max_ratio > 1.0 - 1e-9, "{kind}: {}", rep.line());
            let below = fam
                .pairs(&g)
                .unwrap()
                .iter()
                .map(|(f, s)| lemma42_terms(f, s, 1.0, 0.125).unwrap())
                .any(|t| t.lhs > t.rhs(0.99 * c));
            assert!(below, "{kind}");
        }
    }
}

/// Values frozen from the current implementation; any change to the
/// families, the gradient reconstruction or the quadrature shows up here.
#[test]
fn golden_constants() {
    let g32 = Grid2D::unit_square(32).unwrap();
    let g64 = Grid2D::unit_square(64).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * b.abs();

    let l42 = lemma42_report(&FieldFamily::new(FamilyKind::Bumps, 50, 1), &g32, 1.0, 0.125).unwrap();
    let c = l42.fitted_constant.unwrap();
    assert!(close(c, 1.87776012679026038e-3), "{c:.17e}");

    let c1 = estimate_sobolev_c1(&FieldFamily::new(FamilyKind::Trig, 100, 1), &g64).unwrap();
    assert!(close(c1, 5.94513402830746718e-1), "{c1:.17e}");

    let mut sc = Scenario::new("heat", 32, Preset::Uniform(0.0), Preset::HeatOnly(1)).unwrap();
    sc.run = RunConfig::new(1.0, 0.05, 100);
    let mut mem = SnapshotMemory::default();
    sc.execute(&sc.monitor_config(), &mut [&mut mem]).unwrap();
    for (q, want) in [(4, 2.34353280277239264e3), (6, 6.36164559630558688e3)] {
        let rep = check_lemma52_trajectory(&mem.states, q).unwrap();
        assert!(close(rep.gamma, want), "q={q}: {:.17e}", rep.gamma);
        assert_eq!(rep.per_snapshot.len(), 19);
        assert!(rep.gamma > rep.gamma_struct);
    }
}
