//! Residuals of the weak integral identities along stored trajectories.
//!
//! Test functions are `cos(kxπx/lx)·cos(kyπy/ly)·η(t)` with a smooth cutoff
//! `η`. Space integrals use cell midpoints, time integrals the trapezoid
//! rule over snapshots. The `φ_t` term is integrated against the exact
//! increments of `η` between snapshots, so for time-constant data it
//! telescopes against the `φ(0)` term to rounding.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{cell_grad_avg, face_gradients, read_snapshot, Field};
use crate::model::{ModelParams, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub kx: u32,
    pub ky: u32,
    /// `η(t) = 0` for `t ≥ t_cut`.
    pub t_cut: f64,
    /// Length of the transition from 1 to 0.
    pub width: f64,
}

/// `exp(−1/s)` for `s > 0`.
fn join(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

impl TestFunction {
    pub fn new(kx: u32, ky: u32, t_cut: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && t_cut.is_finite() && t_cut - width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "test function needs 0 < width < t_cut, got width {width}, t_cut {t_cut}"
            )));
        }
        Ok(TestFunction { kx, ky, t_cut, width })
    }

    /// Transition width `0.1·t_cut`.
    pub fn with_default_width(kx: u32, ky: u32, t_cut: f64) -> Result<Self> {
        Self::new(kx, ky, t_cut, 0.1 * t_cut)
    }

    pub fn eta(&self, t: f64) -> f64 {
        let s = (t - (self.t_cut - self.width)) / self.width;
        if s <= 0.0 {
            1.0
        } else if s >= 1.0 {
            0.0
        } else {
            let (a, b) = (join(s), join(1.0 - s));
            b / (a + b)
        }
    }

    fn wavenumbers(&self, s: &State) -> (f64, f64) {
        let g = s.grid();
        (self.kx as f64 * PI / g.lx(), self.ky as f64 * PI / g.ly())
    }

    pub fn spatial(&self, s: &State, x: f64, y: f64) -> f64 {
        let (a, b) = self.wavenumbers(s);
        (a * x).cos() * (b * y).cos()
    }
}

/// Per-snapshot spatial integrals of one identity: `m` pairs with `φ_t`
/// and `φ(0)`, `r` is the right-hand side integrand without `η`.
struct Terms {
    t: f64,
    m: f64,
    r: f64,
}

fn check_coverage(states: &[State], tf: &TestFunction) -> Result<()> {
    let (first, last) = match (states.first(), states.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(Error::Range("no snapshots".into())),
    };
    if first != 0.0 {
        return Err(Error::Range(format!("first snapshot at t = {first}, expected 0")));
    }
    if last < tf.t_cut {
        return Err(Error::Range(format!(
            "snapshots end at t = {last}, before the test function cutoff {}",
            tf.t_cut
        )));
    }
    if states.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(Error::Range("snapshot times must be strictly increasing".into()));
    }
    let g = states[0].grid();
    if states.iter().any(|s| s.grid() != g) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Snapshots needed up to the cutoff, including the first at or past it.
fn support(states: &[State], tf: &TestFunction) -> usize {
    states.iter().position(|s| s.t >= tf.t_cut).map_or(states.len(), |k| k + 1)
}

/// Both sides of one identity.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Defect {
    pub lhs: f64,
    pub rhs: f64,
}

impl Defect {
    /// `|lhs − rhs| / max(1, |lhs|)`.
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.lhs.abs().max(1.0)
    }
}

/// `lhs = s·(∫∫ m φ_t + ∫ m₀ φ(0))` and `rhs = ∫∫ r η`.
fn sides(terms: &[Terms], tf: &TestFunction, sign: f64) -> Defect {
    let eta: Vec<f64> = terms.iter().map(|k| tf.eta(k.t)).collect();
    let mut lhs = terms[0].m * eta[0];
    let mut rhs = 0.0;
    for k in 0..terms.len() - 1 {
        let (a, b) = (&terms[k], &terms[k + 1]);
        lhs += 0.5 * (a.m + b.m) * (eta[k + 1] - eta[k]);
        rhs += 0.5 * (b.t - a.t) * (a.r * eta[k] + b.r * eta[k + 1]);
    }
    Defect { lhs: sign * lhs, rhs }
}

fn u_terms(states: &[State], tf: &TestFunction, p: &ModelParams) -> Result<Vec<Terms>> {
    check_coverage(states, tf)?;
    p.validate()?;
    states[..support(states, tf)]
        .iter()
        .map(|s| {
            let g = s.grid();
            let (a, b) = tf.wavenumbers(s);
            let usq = s.u.map(|x| x * x)?;
            let (qx, qy) = cell_grad_avg(g, &face_gradients(&usq));
            let (vx, vy) = cell_grad_avg(g, &face_gradients(&s.v));
            let (u, v) = (s.u.values(), s.v.values());
            let (mut m, mut r) = (0.0, 0.0);
            for j in 0..g.ny() {
                for i in 0..g.nx() {
                    let k = g.idx(i, j);
                    let (x, y) = g.center(i, j);
                    let (cx, sx, cy, sy) = ((a * x).cos(), (a * x).sin(), (b * y).cos(), (b * y).sin());
                    let phi = cx * cy;
                    let (px, py) = (-a * sx * cy, -b * cx * sy);
                    m += u[k] * phi;
                    r += -0.5 * v[k] * (qx[k] * px + qy[k] * py)
                        + u[k] * u[k] * v[k] * (vx[k] * px + vy[k] * py)
                        + p.reaction(u[k]) * phi;
                }
            }
            let da = g.cell_area();
            Ok(Terms { t: s.t, m: da * m, r: da * r })
        })
        .collect()
}

fn v_terms(states: &[State], tf: &TestFunction) -> Result<Vec<Terms>> {
    check_coverage(states, tf)?;
    states[..support(states, tf)]
        .iter()
        .map(|s| {
            let g = s.grid();
            let (a, b) = tf.wavenumbers(s);
            let (vx, vy) = cell_grad_avg(g, &face_gradients(&s.v));
            let (u, v) = (s.u.values(), s.v.values());
            let (mut m, mut r) = (0.0, 0.0);
            for j in 0..g.ny() {
                for i in 0..g.nx() {
                    let k = g.idx(i, j);
                    let (x, y) = g.center(i, j);
                    let (cx, sx, cy, sy) = ((a * x).cos(), (a * x).sin(), (b * y).cos(), (b * y).sin());
                    let phi = cx * cy;
                    m += v[k] * phi;
                    r += vx[k] * (-a * sx * cy) + vy[k] * (-b * cx * sy) + u[k] * v[k] * phi;
                }
            }
            let da = g.cell_area();
            Ok(Terms { t: s.t, m: da * m, r: da * r })
        })
        .collect()
}

/// Sides of the `u` identity
/// `−∫∫uφ_t − ∫u₀φ(0) = −½∫∫v∇u²·∇φ + ∫∫u²v∇v·∇φ + ∫∫(ρu − μu^κ)φ`
/// for the combination `Σ cᵢφᵢ`.
pub fn defect_u(states: &[State], combo: &[(f64, TestFunction)], p: &ModelParams) -> Result<Defect> {
    let mut d = Defect::default();
    for (c, tf) in combo {
        let part = sides(&u_terms(states, tf, p)?, tf, -1.0);
        d.lhs += c * part.lhs;
        d.rhs += c * part.rhs;
    }
    Ok(d)
}

/// Sides of the `v` identity `∫∫vφ_t + ∫v₀φ(0) = ∫∫∇v·∇φ + ∫∫uvφ` for the
/// combination `Σ cᵢφᵢ`.
pub fn defect_v(states: &[State], combo: &[(f64, TestFunction)]) -> Result<Defect> {
    let mut d = Defect::default();
    for (c, tf) in combo {
        let part = sides(&v_terms(states, tf)?, tf, 1.0);
        d.lhs += c * part.lhs;
        d.rhs += c * part.rhs;
    }
    Ok(d)
}

/// Normalized residual of the `u` identity for one test function.
pub fn residual_u(states: &[State], tf: &TestFunction, p: &ModelParams) -> Result<f64> {
    Ok(defect_u(states, &[(1.0, *tf)], p)?.residual())
}

/// Normalized residual of the `v` identity for one test function.
pub fn residual_v(states: &[State], tf: &TestFunction) -> Result<f64> {
    Ok(defect_v(states, &[(1.0, *tf)])?.residual())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakResidual {
    pub kx: u32,
    pub ky: u32,
    pub u: f64,
    pub v: f64,
}

pub fn residuals(states: &[State], tfs: &[TestFunction], p: &ModelParams) -> Result<Vec<WeakResidual>> {
    tfs.iter()
        .map(|tf| {
            Ok(WeakResidual {
                kx: tf.kx,
                ky: tf.ky,
                u: residual_u(states, tf, p)?,
                v: residual_v(states, tf)?,
            })
        })
        .collect()
}

/// Parses `KX,KY;KX,KY;...`.
pub fn parse_modes(s: &str) -> Result<Vec<(u32, u32)>> {
    s.split(';')
        .filter(|m| !m.trim().is_empty())
        .map(|m| {
            let parts: Vec<&str> = m.split(',').map(str::trim).collect();
            match parts.as_slice() {
                [a, b] => Ok((
                    a.parse().map_err(|_| Error::Parse(format!("bad wavenumber {a:?}")))?,
                    b.parse().map_err(|_| Error::Parse(format!("bad wavenumber {b:?}")))?,
                )),
                _ => Err(Error::Parse(format!("mode {m:?} is not KX,KY"))),
            }
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(Error::Parse("no modes given".into()))
            } else {
                Ok(v)
            }
        })
}

/// Loads the `u_<step>.fld` / `v_<step>.fld` pairs of a snapshot directory,
/// ordered by step.
pub fn read_trajectory(dir: impl AsRef<Path>) -> Result<Vec<State>> {
    let dir = dir.as_ref();
    let mut steps = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let name = entry.map_err(|e| Error::io(dir, e))?.file_name();
        let name = name.to_string_lossy();
        if let Some(step) = name.strip_prefix("u_").and_then(|r| r.strip_suffix(".fld")) {
            steps.push(step.to_string());
        }
    }
    steps.sort();
    if steps.is_empty() {
        return Err(Error::Range(format!("no snapshots in {}", dir.display())));
    }
    steps
        .iter()
        .map(|step| {
            let (u, tu) = read_snapshot(dir.join(format!("u_{step}.fld")))?;
            let (v, tv) = read_snapshot(dir.join(format!("v_{step}.fld")))?;
            if tu != tv {
                return Err(Error::Parse(format!("snapshot {step}: u at t={tu}, v at t={tv}")));
            }
            State::new(u, v, tu)
        })
        .collect()
}

/// Evaluates a time-independent field pair as a trajectory sampled at `times`.
pub fn constant_trajectory(u: &Field, v: &Field, times: &[f64]) -> Result<Vec<State>> {
    times.iter().map(|&t| State::new(u.clone(), v.clone(), t)).collect()
}
