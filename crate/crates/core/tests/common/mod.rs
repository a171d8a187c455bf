//! Generators and closed-form oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nutaxis::ode_lemmas::{Lemma, LemmaParams, LemmaSeries};
use nutaxis::series::Cumulative;
use nutaxis::{Field, Grid2D, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth random field `base + Σ cᵢ cos(kπx)cos(lπy)` on the unit square.
fn smooth(rng: &mut ChaCha8Rng, g: Grid2D, base: f64, amp: f64) -> Field {
    let terms: Vec<(f64, f64, f64)> = (0..5)
        .map(|_| {
            (
                rng.gen_range(0..4) as f64 * PI,
                rng.gen_range(0..4) as f64 * PI,
                rng.gen_range(-amp..amp),
            )
        })
        .collect();
    Field::from_fn(g, |x, y| base + terms.iter().map(|&(a, b, c)| c * (a * x).cos() * (b * y).cos()).sum::<f64>())
        .unwrap()
}

/// Admissible state with vacuum patches in `u` and a positive `v`.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> State {
    let g = Grid2D::unit_square(n).unwrap();
    let (base, amp) = (rng.gen_range(0.0..2.0), rng.gen_range(0.1..2.0));
    let u = smooth(rng, g, base, amp);
    let u = u.map(|x| x.max(0.0)).unwrap();
    let v = smooth(rng, g, 0.0, 1.0);
    let lo = v.min();
    let floor = rng.gen_range(1e-3..0.5);
    let v = v.map(|x| x - lo + floor).unwrap();
    State::new(u, v, 0.0).unwrap()
}

/// Logistic solution with `ρ = μ = 1`.
pub fn logistic(u0: f64, t: f64) -> f64 {
    u0 / (u0 + (1.0 - u0) * (-t).exp())
}

/// `∫₀ᵗ` of [`logistic`].
pub fn logistic_integral(u0: f64, t: f64) -> f64 {
    (1.0 - u0 + u0 * t.exp()).ln()
}

/// Nonnegative random signal: a constant plus a few smooth bursts.
fn signal(rng: &mut ChaCha8Rng, t: &[f64], level: f64) -> Vec<f64> {
    let base = rng.gen_range(0.0..level);
    let bursts: Vec<(f64, f64, f64)> = (0..rng.gen_range(0..5))
        .map(|_| {
            (
                rng.gen_range(0.0..3.0 * level),
                rng.gen_range(t[0]..*t.last().unwrap()),
                rng.gen_range(0.05..1.0),
            )
        })
        .collect();
    t.iter()
        .map(|&s| base + bursts.iter().map(|&(a, c, w)| a * (-((s - c) / w).powi(2)).exp()).sum::<f64>())
        .collect()
}

/// Forward-integrates `z' = −λ(t)z + c(t) − s(t)` in the validator's
/// integrating-factor form with a random nonnegative slack `s`, keeping
/// `z ≥ 0`.
fn integrate(rng: &mut ChaCha8Rng, t: &[f64], z0: f64, lambda: &[f64], c: &[f64]) -> Vec<f64> {
    let mut z = vec![z0];
    for k in 0..t.len() - 1 {
        let dt = t[k + 1] - t[k];
        let decay = (-0.5 * (lambda[k] + lambda[k + 1]) * dt).exp();
        let next = z[k] * decay + 0.5 * dt * (c[k] * decay + c[k + 1]);
        let slack = rng.gen_range(0.0..0.3) * dt * next;
        z.push((next - slack).max(0.0));
    }
    z
}

/// A random series satisfying the hypotheses of `lemma`, with the
/// constants the validator needs.
pub fn lemma_series(lemma: Lemma, seed: u64) -> (LemmaSeries, LemmaParams) {
    let mut r = rng(seed);
    let dt = 0.01;
    let t: Vec<f64> = (0..=1000).map(|k| k as f64 * dt).collect();
    let tau = r.gen_range(0.3..2.0);
    let z0 = r.gen_range(0.0..5.0);
    match lemma {
        Lemma::L21 => {
            let a = r.gen_range(0.1..5.0);
            let h = signal(&mut r, &t, 2.0);
            let z = integrate(&mut r, &t, z0, &vec![a; t.len()], &h);
            let s = LemmaSeries::new(t, z, tau).unwrap().with("h", h).unwrap();
            (s, LemmaParams { a: Some(a), b: None })
        }
        Lemma::L22 => {
            let a = signal(&mut r, &t, 0.5);
            let b = signal(&mut r, &t, 1.0);
            let lambda: Vec<f64> = a.iter().map(|x| -x).collect();
            let mut z = integrate(&mut r, &t, z0, &lambda, &b);
            // extra dissipation keeps the window integrals of z moderate
            let damp = r.gen_range(0.0..1.0);
            let mut f = 1.0;
            for k in 1..z.len() {
                f *= (-damp * dt).exp();
                z[k] *= f.max(0.2);
            }
            let z = fix_l22(&t, z, &a, &b, z0);
            let s = LemmaSeries::new(t, z, tau).unwrap().with("a", a).unwrap().with("b", b).unwrap();
            (s, LemmaParams::default())
        }
        Lemma::L23 => {
            let a0 = r.gen_range(0.5..3.0);
            let a: Vec<f64> = t.iter().map(|&s| a0 * (1.0 + 0.3 * (s * r.gen_range(0.5..2.0)).sin().abs())).collect();
            let mut b = signal(&mut r, &t, 0.3 * a0);
            // keep the window means of b below half the damping floor a0
            let b_sup = Cumulative::new(&t, &b).unwrap().window_sup(tau).unwrap();
            if b_sup > 0.5 * a0 * tau {
                let f = 0.5 * a0 * tau / b_sup;
                b.iter_mut().for_each(|x| *x *= f);
            }
            let c = signal(&mut r, &t, 2.0);
            let lambda: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let z = integrate(&mut r, &t, z0, &lambda, &c);
            let s = LemmaSeries::new(t, z, tau)
                .unwrap()
                .with("a", a)
                .unwrap()
                .with("b", b)
                .unwrap()
                .with("c", c)
                .unwrap();
            (s, LemmaParams::default())
        }
    }
}

/// Rebuilds an `L22` series step by step so the sampled inequality holds
/// after the damping pass: each step takes the smaller of the damped value
/// and the integrating-factor bound.
fn fix_l22(t: &[f64], damped: Vec<f64>, a: &[f64], b: &[f64], z0: f64) -> Vec<f64> {
    let mut z = vec![z0];
    for k in 0..t.len() - 1 {
        let dt = t[k + 1] - t[k];
        let grow = (0.5 * (a[k] + a[k + 1]) * dt).exp();
        let cap = z[k] * grow + 0.5 * dt * (b[k] * grow + b[k + 1]);
        z.push(damped[k + 1].min(cap));
    }
    z
}
