//! Trapezoidal quadrature over sampled time series.
//!
//! Samples are treated as the nodes of a piecewise-linear function, so
//! window integrals with endpoints between samples use linear
//! interpolation and the result is exact for piecewise-linear data.

use crate::error::{Error, Result};

/// Slack used when deciding whether a window end lies inside the series.
const COVER_EPS: f64 = 1e-12;

/// Cumulative trapezoidal integral of a sampled function.
#[derive(Debug, Clone)]
pub struct Cumulative<'a> {
    times: &'a [f64],
    values: &'a [f64],
    cum: Vec<f64>,
}

impl<'a> Cumulative<'a> {
    pub fn new(times: &'a [f64], values: &'a [f64]) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Range(format!(
                "time series lengths differ: {} times, {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::Range("empty time series".into()));
        }
        if times.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::Range("sample times must be nondecreasing".into()));
        }
        let mut cum = Vec::with_capacity(times.len());
        cum.push(0.0);
        for k in 1..times.len() {
            let dt = times[k] - times[k - 1];
            cum.push(cum[k - 1] + 0.5 * dt * (values[k] + values[k - 1]));
        }
        Ok(Cumulative { times, values, cum })
    }

    pub fn first(&self) -> f64 {
        self.times[0]
    }

    pub fn last(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Integral from the first sample to `t`.
    pub fn at(&self, t: f64) -> Result<f64> {
        let (t0, t1) = (self.first(), self.last());
        let span = (t1 - t0).abs().max(1.0);
        if t < t0 - COVER_EPS * span || t > t1 + COVER_EPS * span {
            return Err(Error::Range(format!("time {t} outside the series [{t0}, {t1}]")));
        }
        let t = t.clamp(t0, t1);
        // last k with times[k] <= t
        let k = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        if k + 1 >= self.times.len() || t == self.times[k] {
            return Ok(self.cum[k]);
        }
        let (ta, tb) = (self.times[k], self.times[k + 1]);
        let (fa, fb) = (self.values[k], self.values[k + 1]);
        let s = t - ta;
        let ft = fa + (fb - fa) * s / (tb - ta);
        Ok(self.cum[k] + 0.5 * s * (fa + ft))
    }

    /// `∫_t^{t+tau}` of the interpolant.
    pub fn window(&self, t: f64, tau: f64) -> Result<f64> {
        if tau < 0.0 {
            return Err(Error::Range(format!("negative window length {tau}")));
        }
        if tau == 0.0 {
            self.at(t)?;
            return Ok(0.0);
        }
        Ok(self.at(t + tau)? - self.at(t)?)
    }

    /// Window integrals for every sample time `t_k` with `t_k + tau` inside
    /// the series, paired with their start times.
    pub fn windows(&self, tau: f64) -> Result<Vec<(f64, f64)>> {
        if !(tau > 0.0) {
            return Err(Error::Range(format!("window length must be positive, got {tau}")));
        }
        let end = self.last();
        let span = (end - self.first()).abs().max(1.0);
        let mut out = Vec::new();
        for (k, &t) in self.times.iter().enumerate() {
            if t + tau > end + COVER_EPS * span {
                break;
            }
            out.push((t, self.at((t + tau).min(end))? - self.cum[k]));
        }
        if out.is_empty() {
            return Err(Error::Range(format!(
                "series of length {} cannot hold a window of {tau}",
                end - self.first()
            )));
        }
        Ok(out)
    }

    /// `sup` over admissible window starts.
    pub fn window_sup(&self, tau: f64) -> Result<f64> {
        Ok(self
            .windows(tau)?
            .into_iter()
            .map(|(_, w)| w)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// `inf` over admissible window starts.
    pub fn window_inf(&self, tau: f64) -> Result<f64> {
        Ok(self
            .windows(tau)?
            .into_iter()
            .map(|(_, w)| w)
            .fold(f64::INFINITY, f64::min))
    }

    /// Cumulative integral at each sample.
    pub fn nodes(&self) -> &[f64] {
        &self.cum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_and_linear_windows() {
        let t: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let c = vec![3.0; t.len()];
        let cum = Cumulative::new(&t, &c).unwrap();
        assert_relative_eq!(cum.window(0.2, 0.5).unwrap(), 1.5, epsilon = 1e-14);
        assert_eq!(cum.window(0.3, 0.0).unwrap(), 0.0);
        let lin = t.clone();
        let cum = Cumulative::new(&t, &lin).unwrap();
        assert_relative_eq!(cum.window(0.0, 1.0).unwrap(), 0.5, epsilon = 1e-14);
        // endpoints between samples are exact for linear data
        assert_relative_eq!(cum.window(0.05, 0.5).unwrap(), 0.5 * (0.55f64.powi(2) - 0.05f64.powi(2)), epsilon = 1e-14);
    }

    #[test]
    fn coverage_is_enforced() {
        let t = [0.0, 0.5, 1.0];
        let f = [1.0, 1.0, 1.0];
        let cum = Cumulative::new(&t, &f).unwrap();
        assert!(matches!(cum.window(0.8, 0.5), Err(Error::Range(_))));
        assert!(matches!(cum.windows(2.0), Err(Error::Range(_))));
        assert_eq!(cum.windows(0.5).unwrap().len(), 2);
        assert!(Cumulative::new(&[0.0, 1.0], &[1.0]).is_err());
        assert!(Cumulative::new(&[1.0, 0.0], &[1.0, 1.0]).is_err());
    }
}
