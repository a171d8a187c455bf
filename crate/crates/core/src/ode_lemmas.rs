//! Gronwall-type comparison lemmas: closed-form bounds and validators that
//! test sampled time series against each lemma's hypotheses and conclusion.
//!
//! * `L21`: `z' + a z ≤ h` with `sup ∫_t^{t+τ} h ≤ b` gives
//!   `z ≤ max{z(0) + b, b/(aτ) + 2b}`.
//! * `L22`: `z' ≤ a(t) z + b(t)` with window integrals of `a`, `b`, `z`
//!   bounded by `a₁`, `a₂`, `a₃` gives `z ≤ (a₃/τ + a₂) e^{a₁}` once a full
//!   window has elapsed.
//! * `L23`: `z' + a(t) z ≤ b(t) z + c(t)` with window integrals of `b`, `c`
//!   bounded by `b₁`, `c₁` and `∫(a − b) ≥ ϱ` over every window gives
//!   `z ≤ z(0) e^{b₁} + c₁ e^{2b₁}/(1 − e^{−ϱ}) + c₁ e^{b₁}`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::series::Cumulative;

/// Relative slack of the sampled differential-inequality check.
pub const DIFF_SLACK: f64 = 1e-6;
/// Relative slack of the conclusion check.
pub const CONCLUSION_SLACK: f64 = 1e-9;

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

fn finite(name: &str, x: f64) -> Result<()> {
    require(x.is_finite(), || format!("{name} must be finite, got {x}"))
}

pub fn lemma21_bound(z0: f64, a: f64, b: f64, tau: f64) -> Result<f64> {
    finite("z0", z0)?;
    require(a > 0.0 && a.is_finite(), || format!("a must be > 0, got {a}"))?;
    require(b > 0.0 && b.is_finite(), || format!("b must be > 0, got {b}"))?;
    require(tau > 0.0 && tau.is_finite(), || format!("tau must be > 0, got {tau}"))?;
    Ok((z0 + b).max(b / (a * tau) + 2.0 * b))
}

pub fn lemma22_bound(a1: f64, a2: f64, a3: f64, tau: f64) -> Result<f64> {
    for (name, x) in [("a1", a1), ("a2", a2), ("a3", a3)] {
        require(x >= 0.0 && x.is_finite(), || format!("{name} must be >= 0, got {x}"))?;
    }
    require(tau > 0.0 && tau.is_finite(), || format!("tau must be > 0, got {tau}"))?;
    Ok((a3 / tau + a2) * a1.exp())
}

pub fn lemma23_bound(z0: f64, b1: f64, c1: f64, rho: f64) -> Result<f64> {
    for (name, x) in [("z0", z0), ("b1", b1), ("c1", c1)] {
        require(x >= 0.0 && x.is_finite(), || format!("{name} must be >= 0, got {x}"))?;
    }
    require(rho > 0.0 && rho.is_finite(), || format!("rho must be > 0, got {rho}"))?;
    let e = b1.exp();
    Ok(z0 * e + c1 * e * e / -(-rho).exp_m1() + c1 * e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lemma {
    L21,
    L22,
    L23,
}

impl Lemma {
    /// Companion series the lemma needs, in addition to `z`.
    pub fn aux_names(self) -> &'static [&'static str] {
        match self {
            Lemma::L21 => &["h"],
            Lemma::L22 => &["a", "b"],
            Lemma::L23 => &["a", "b", "c"],
        }
    }
}

impl FromStr for Lemma {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L21" => Ok(Lemma::L21),
            "L22" => Ok(Lemma::L22),
            "L23" => Ok(Lemma::L23),
            _ => Err(Error::InvalidParameter(format!("unknown lemma {s:?}, expected L21, L22 or L23"))),
        }
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lemma::L21 => "L21",
            Lemma::L22 => "L22",
            Lemma::L23 => "L23",
        })
    }
}

/// A sampled quantity `z` with its companion series and window length.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaSeries {
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    pub aux: BTreeMap<String, Vec<f64>>,
    pub tau: f64,
}

impl LemmaSeries {
    pub fn new(times: Vec<f64>, z: Vec<f64>, tau: f64) -> Result<Self> {
        if times.len() < 2 || z.len() != times.len() {
            return Err(Error::Range(format!(
                "need at least two samples with matching lengths, got {} times and {} values",
                times.len(),
                z.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Range("times must be strictly increasing".into()));
        }
        if let Some(x) = times.iter().chain(&z).find(|x| !x.is_finite()) {
            return Err(Error::Range(format!("non-finite sample {x}")));
        }
        let span = times[times.len() - 1] - times[0];
        if !(tau > 0.0 && tau < span) {
            return Err(Error::Range(format!("tau must lie in (0, {span}), got {tau}")));
        }
        Ok(LemmaSeries {
            times,
            z,
            aux: BTreeMap::new(),
            tau,
        })
    }

    pub fn with(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.times.len() {
            return Err(Error::Range(format!(
                "series {name:?} has {} samples, expected {}",
                values.len(),
                self.times.len()
            )));
        }
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::Range(format!("non-finite sample {x} in {name:?}")));
        }
        self.aux.insert(name.to_string(), values);
        Ok(self)
    }

    fn aux(&self, name: &str) -> Result<&[f64]> {
        self.aux
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Range(format!("missing companion series {name:?}")))
    }

    fn window_sup(&self, values: &[f64]) -> Result<f64> {
        Cumulative::new(&self.times, values)?.window_sup(self.tau)
    }
}

/// Constants that are not read off the series.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LemmaParams {
    /// The constant `a` of `L21`.
    pub a: Option<f64>,
    /// An asserted window bound `b` for `h` in `L21`; defaults to the
    /// observed window supremum.
    pub b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub lemma: Lemma,
    pub hypotheses_hold: bool,
    /// Window suprema (and for `L23` the window infimum `rho`) by name.
    pub window_sups: Vec<(String, f64)>,
    pub bound: f64,
    pub conclusion_holds: bool,
    /// `max(0, max z − bound)` over the times the conclusion covers.
    pub max_violation: f64,
    pub max_z: f64,
    /// Largest violation of the sampled differential inequality, relative
    /// to the size of its terms (0 when it holds everywhere).
    pub diff_violation: f64,
}

/// Checks `z' ≤ −λ(t) z + c(t)` between consecutive samples in
/// integrating-factor form,
///
/// ```text
/// z_{k+1} ≤ z_k e^{−λ̄Δ} + Δ/2 (c_k e^{−λ̄Δ} + c_{k+1}),
/// ```
///
/// with `λ̄` the interval mean of `λ`. The form is exact for constant
/// coefficients, so exact solutions such as `e^{−t}` pass. Returns the
/// worst excess relative to the size of the terms (0 when none exceeds the
/// slack).
fn diff_inequality(t: &[f64], z: &[f64], lambda: &dyn Fn(usize) -> f64, c: &dyn Fn(usize) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..t.len() - 1 {
        let dt = t[k + 1] - t[k];
        let decay = (-0.5 * (lambda(k) + lambda(k + 1)) * dt).exp();
        let carried = z[k] * decay;
        let source = 0.5 * dt * (c(k) * decay + c(k + 1));
        let excess = z[k + 1] - carried - source;
        let scale = z[k + 1].abs() + carried.abs() + source.abs();
        if excess > DIFF_SLACK * scale {
            worst = worst.max(excess / scale);
        }
    }
    worst
}

pub fn validate(series: &LemmaSeries, which: Lemma, params: &LemmaParams) -> Result<Validation> {
    let t = &series.times;
    let z = &series.z;
    let tau = series.tau;
    let z0 = z[0];
    let nonneg = |v: &[f64]| v.iter().all(|&x| x >= 0.0);

    let mut sups = Vec::new();
    let (hyp, bound, from) = match which {
        Lemma::L21 => {
            let h = series.aux("h")?;
            let a = params
                .a
                .ok_or_else(|| Error::InvalidParameter("L21 needs the constant a".into()))?;
            require(a > 0.0, || format!("a must be > 0, got {a}"))?;
            let h_sup = series.window_sup(h)?;
            sups.push(("h".to_string(), h_sup));
            let b = params.b.unwrap_or(h_sup);
            let dv = diff_inequality(t, z, &|_| a, &|k| h[k]);
            let hyp = nonneg(z) && nonneg(h) && h_sup <= b * (1.0 + CONCLUSION_SLACK) && dv == 0.0;
            let bound = if b > 0.0 { lemma21_bound(z0, a, b, tau)? } else { f64::INFINITY };
            ((hyp, dv), bound, t[0])
        }
        Lemma::L22 => {
            let (a, b) = (series.aux("a")?, series.aux("b")?);
            let a1 = series.window_sup(a)?;
            let a2 = series.window_sup(b)?;
            let a3 = series.window_sup(z)?;
            sups.extend([("a".to_string(), a1), ("b".to_string(), a2), ("z".to_string(), a3)]);
            let dv = diff_inequality(t, z, &|k| -a[k], &|k| b[k]);
            let hyp = nonneg(a) && nonneg(b) && nonneg(z) && dv == 0.0;
            let bound = if a1 >= 0.0 && a2 >= 0.0 && a3 >= 0.0 {
                lemma22_bound(a1, a2, a3, tau)?
            } else {
                f64::INFINITY
            };
            // the uniform bound covers times after the first full window
            ((hyp, dv), bound, t[0] + tau)
        }
        Lemma::L23 => {
            let (a, b, c) = (series.aux("a")?, series.aux("b")?, series.aux("c")?);
            let b1 = series.window_sup(b)?;
            let c1 = series.window_sup(c)?;
            let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            let rho = Cumulative::new(t, &diff)?.window_inf(tau)?;
            sups.extend([("b".to_string(), b1), ("c".to_string(), c1), ("rho".to_string(), rho)]);
            let dv = diff_inequality(t, z, &|k| a[k] - b[k], &|k| c[k]);
            let hyp = nonneg(z) && a.iter().all(|&x| x > 0.0) && nonneg(b) && nonneg(c) && rho > 0.0 && dv == 0.0;
            let bound = if rho > 0.0 && z0 >= 0.0 {
                lemma23_bound(z0, b1, c1, rho)?
            } else {
                f64::INFINITY
            };
            ((hyp, dv), bound, t[0])
        }
    };
    let (hypotheses_hold, diff_violation) = hyp;
    let span = (t[t.len() - 1] - t[0]).abs().max(1.0);
    let max_z = t
        .iter()
        .zip(z)
        .filter(|(&s, _)| s >= from - 1e-12 * span)
        .map(|(_, &x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Validation {
        lemma: which,
        hypotheses_hold,
        window_sups: sups,
        bound,
        conclusion_holds: max_z <= bound * (1.0 + CONCLUSION_SLACK),
        max_violation: (max_z - bound).max(0.0),
        max_z,
        diff_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bound_examples() {
        assert_eq!(lemma21_bound(1.0, 1.0, 2.0, 0.5).unwrap(), 8.0);
        assert_relative_eq!(lemma21_bound(0.0, 10.0, 1.0, 1.0).unwrap(), 2.1, epsilon = 1e-15);
        assert_relative_eq!(lemma21_bound(3.0, 1.0, 1e-300, 1.0).unwrap(), 3.0);
        assert_eq!(lemma22_bound(0.0, 0.0, 0.7, 0.7).unwrap(), 1.0);
        assert_relative_eq!(lemma22_bound(2f64.ln(), 1.0, 2.0, 1.0).unwrap(), 6.0, epsilon = 1e-14);
        assert_relative_eq!(lemma22_bound(1.0, 0.5, 0.25, 0.5).unwrap(), std::f64::consts::E, epsilon = 1e-15);
        assert_eq!(lemma23_bound(2.5, 0.0, 0.0, 1.0).unwrap(), 2.5);
        assert_relative_eq!(lemma23_bound(1.0, 0.0, 1.0, 2f64.ln()).unwrap(), 4.0, epsilon = 1e-15);
        let e = std::f64::consts::E;
        let expected = e * e / (1.0 - 1.0 / e) + e;
        assert_relative_eq!(lemma23_bound(0.0, 1.0, 1.0, 1.0).unwrap(), expected, epsilon = 1e-13);
        assert!((lemma23_bound(0.0, 1.0, 1.0, 1.0).unwrap() - 14.4075).abs() < 1e-4);
    }

    #[test]
    fn bound_domain_errors() {
        assert!(lemma21_bound(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(lemma21_bound(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(lemma21_bound(0.0, 1.0, 1.0, -1.0).is_err());
        assert!(lemma22_bound(-1.0, 0.0, 0.0, 1.0).is_err());
        assert!(lemma22_bound(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(lemma23_bound(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(lemma23_bound(0.0, -1.0, 0.0, 1.0).is_err());
    }

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }

    #[test]
    fn decaying_series_with_explicit_b() {
        let t = grid(10.0, 1000);
        let z = t.iter().map(|s| (-s).exp()).collect();
        let s = LemmaSeries::new(t.clone(), z, 1.0)
            .unwrap()
            .with("h", vec![0.0; t.len()])
            .unwrap();
        let v = validate(&s, Lemma::L21, &LemmaParams { a: Some(1.0), b: Some(0.01) }).unwrap();
        assert!(v.hypotheses_hold);
        assert_relative_eq!(v.bound, 1.01, epsilon = 1e-15);
        assert!(v.conclusion_holds);
        assert_eq!(v.max_violation, 0.0);
    }

    #[test]
    fn stationary_series() {
        let t = grid(5.0, 50);
        let s = LemmaSeries::new(t.clone(), vec![5.0; t.len()], 1.0)
            .unwrap()
            .with("h", vec![5.0; t.len()])
            .unwrap();
        let v = validate(&s, Lemma::L21, &LemmaParams { a: Some(1.0), b: None }).unwrap();
        assert!(v.hypotheses_hold);
        assert_relative_eq!(v.bound, 15.0, epsilon = 1e-12);
        assert!(v.conclusion_holds);
    }

    #[test]
    fn fabricated_jump_fails() {
        let t = grid(5.0, 50);
        let mut z = vec![1.0; t.len()];
        z[30] = 100.0;
        let s = LemmaSeries::new(t.clone(), z, 1.0)
            .unwrap()
            .with("h", vec![1.0; t.len()])
            .unwrap();
        let v = validate(&s, Lemma::L21, &LemmaParams { a: Some(1.0), b: None }).unwrap();
        assert!(!v.conclusion_holds);
        assert!(v.max_violation > 0.0);
        // the jump also breaks the sampled differential inequality
        assert!(!v.hypotheses_hold);
    }

    #[test]
    fn uniform_gronwall_skips_first_window() {
        // z' = z on [0, 1] violates nothing with a ≡ 1, b ≡ 0
        let t = grid(3.0, 3000);
        let z: Vec<f64> = t.iter().map(|s| (0.1 * s).exp()).collect();
        let s = LemmaSeries::new(t.clone(), z.clone(), 1.0)
            .unwrap()
            .with("a", vec![0.1; t.len()])
            .unwrap()
            .with("b", vec![0.0; t.len()])
            .unwrap();
        let v = validate(&s, Lemma::L22, &LemmaParams::default()).unwrap();
        assert!(v.hypotheses_hold);
        assert!(v.conclusion_holds, "{v:?}");
    }

    #[test]
    fn pang_wang_needs_positive_gap() {
        let t = grid(4.0, 400);
        let s = LemmaSeries::new(t.clone(), vec![1.0; t.len()], 1.0)
            .unwrap()
            .with("a", vec![1.0; t.len()])
            .unwrap()
            .with("b", vec![1.0; t.len()])
            .unwrap()
            .with("c", vec![0.0; t.len()])
            .unwrap();
        let v = validate(&s, Lemma::L23, &LemmaParams::default()).unwrap();
        assert!(!v.hypotheses_hold);
        assert_eq!(v.bound, f64::INFINITY);
    }

    #[test]
    fn malformed_series() {
        assert!(matches!(LemmaSeries::new(vec![0.0], vec![1.0], 0.5), Err(Error::Range(_))));
        assert!(LemmaSeries::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.5).is_err());
        assert!(LemmaSeries::new(vec![0.0, 1.0], vec![1.0, 1.0], 1.0).is_err());
        let s = LemmaSeries::new(vec![0.0, 1.0, 2.0], vec![1.0; 3], 1.0).unwrap();
        assert!(s.clone().with("h", vec![1.0]).is_err());
        assert!(matches!(validate(&s, Lemma::L21, &LemmaParams { a: Some(1.0), b: None }), Err(Error::Range(_))));
        assert!("L24".parse::<Lemma>().is_err());
        assert_eq!("l22".parse::<Lemma>().unwrap(), Lemma::L22);
    }

    mod monotone {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn lemma21_monotone(z0 in 0.0..10.0f64, a in 0.1..5.0f64, b in 0.01..5.0f64, tau in 0.1..2.0f64, dz in 0.0..1.0f64, db in 0.0..1.0f64) {
                let base = lemma21_bound(z0, a, b, tau).unwrap();
                prop_assert!(lemma21_bound(z0 + dz, a, b, tau).unwrap() >= base);
                prop_assert!(lemma21_bound(z0, a, b + db, tau).unwrap() >= base);
            }

            #[test]
            fn lemma22_monotone(a1 in 0.0..3.0f64, a2 in 0.0..3.0f64, a3 in 0.0..3.0f64, tau in 0.1..2.0f64, d in 0.0..1.0f64) {
                let base = lemma22_bound(a1, a2, a3, tau).unwrap();
                prop_assert!(lemma22_bound(a1 + d, a2, a3, tau).unwrap() >= base);
                prop_assert!(lemma22_bound(a1, a2 + d, a3, tau).unwrap() >= base);
                prop_assert!(lemma22_bound(a1, a2, a3 + d, tau).unwrap() >= base);
            }

            #[test]
            fn lemma23_monotone(z0 in 0.0..5.0f64, b1 in 0.0..3.0f64, c1 in 0.0..3.0f64, rho in 0.05..3.0f64, d in 0.0..1.0f64) {
                let base = lemma23_bound(z0, b1, c1, rho).unwrap();
                prop_assert!(lemma23_bound(z0 + d, b1, c1, rho).unwrap() >= base);
                prop_assert!(lemma23_bound(z0, b1 + d, c1, rho).unwrap() >= base);
                prop_assert!(lemma23_bound(z0, b1, c1 + d, rho).unwrap() >= base);
            }
        }
    }
}
