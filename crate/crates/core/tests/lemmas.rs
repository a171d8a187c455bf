mod common;

use nutaxis::ode_lemmas::{lemma21_bound, validate, Lemma, LemmaParams, LemmaSeries};
use proptest::prelude::*;

#[test]
fn generated_series_satisfy_hypotheses_and_conclusions() {
    for lemma in [Lemma::L21, Lemma::L22, Lemma::L23] {
        for seed in 0..50 {
            let (s, p) = common::lemma_series(lemma, 1000 + seed);
            let v = validate(&s, lemma, &p).unwrap();
            assert!(v.hypotheses_hold, "{lemma} seed {seed}: {v:?}");
            assert!(v.conclusion_holds, "{lemma} seed {seed}: {v:?}");
        }
    }
}

#[test]
fn raising_z_past_the_bound_is_caught() {
    for lemma in [Lemma::L21, Lemma::L22, Lemma::L23] {
        let (s, p) = common::lemma_series(lemma, 7);
        let v = validate(&s, lemma, &p).unwrap();
        let mut bad = s.clone();
        let k = bad.z.len() - 1;
        bad.z[k] = 2.0 * v.bound + 1.0;
        let w = validate(&bad, lemma, &p).unwrap();
        // a jump that large breaks the differential inequality as well
        assert!(!w.hypotheses_hold, "{lemma}");
        assert!(!w.conclusion_holds || w.bound > v.bound, "{lemma}");
    }
}

#[test]
fn l21_bound_is_monotone_in_the_forcing() {
    let (s, p) = common::lemma_series(Lemma::L21, 3);
    let base = validate(&s, Lemma::L21, &p).unwrap();
    let b = base.window_sups[0].1;
    let looser = validate(&s, Lemma::L21, &LemmaParams { b: Some(2.0 * b), ..p }).unwrap();
    assert!(looser.bound >= base.bound);
    assert!(looser.conclusion_holds);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn l21_bound_dominates_its_inputs(z0 in 0.0..10.0f64, a in 0.01..10.0f64, b in 0.01..10.0f64, tau in 0.01..5.0f64) {
        let m = lemma21_bound(z0, a, b, tau).unwrap();
        prop_assert!(m >= z0 + b - 1e-12);
        prop_assert!(m >= 2.0 * b);
    }

    #[test]
    fn constant_solutions_of_l21_pass(c in 0.0..5.0f64, a in 0.1..5.0f64) {
        // z ≡ c/a solves z' = −az + c exactly
        let t: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let n = t.len();
        let s = LemmaSeries::new(t, vec![c / a; n], 1.0).unwrap().with("h", vec![c; n]).unwrap();
        let v = validate(&s, Lemma::L21, &LemmaParams { a: Some(a), b: None }).unwrap();
        prop_assert!(v.hypotheses_hold || c == 0.0);
        prop_assert!(v.conclusion_holds);
    }
}
