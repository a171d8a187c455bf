//! Empirical checks of functional inequalities on seeded families of
//! smooth positive fields, and of the weighted-gradient differential
//! inequality along simulated trajectories.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{cell_grad_sq, face_gradients, grad_pow, integrate_values, pow_real, Field, Grid2D};
use crate::model::State;

/// Default positivity floor of generated fields.
pub const DELTA_POS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// Cosine modes with random decaying coefficients.
    Trig,
    /// Sums of Gaussian bumps with random centers and widths.
    Bumps,
    /// Low-pass filtered random phases.
    Noise,
}

impl FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trig" => Ok(FamilyKind::Trig),
            "bumps" => Ok(FamilyKind::Bumps),
            "noise" => Ok(FamilyKind::Noise),
            _ => Err(Error::InvalidParameter(format!(
                "unknown family {s:?}, expected trig, bumps or noise"
            ))),
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Trig => "trig",
            FamilyKind::Bumps => "bumps",
            FamilyKind::Noise => "noise",
        })
    }
}

/// A reproducible family of strictly positive band-limited fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldFamily {
    pub kind: FamilyKind,
    pub count: usize,
    pub seed: u64,
    pub delta_pos: f64,
}

impl FieldFamily {
    pub fn new(kind: FamilyKind, count: usize, seed: u64) -> Self {
        FieldFamily {
            kind,
            count,
            seed,
            delta_pos: DELTA_POS,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParameter("field family is empty".into()));
        }
        if !(self.delta_pos > 0.0 && self.delta_pos.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "positivity floor must be > 0, got {}",
                self.delta_pos
            )));
        }
        Ok(())
    }

    /// `count` fields on `grid`.
    pub fn fields(&self, grid: &Grid2D) -> Result<Vec<Field>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count).map(|_| self.sample(grid, &mut rng)).collect()
    }

    /// `count` independent pairs `(φ, ψ)` on `grid`.
    pub fn pairs(&self, grid: &Grid2D) -> Result<Vec<(Field, Field)>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|_| Ok((self.sample(grid, &mut rng)?, self.sample(grid, &mut rng)?)))
            .collect()
    }

    fn sample(&self, g: &Grid2D, rng: &mut ChaCha8Rng) -> Result<Field> {
        let (lx, ly) = (g.lx(), g.ly());
        let raw: Box<dyn Fn(f64, f64) -> f64> = match self.kind {
            FamilyKind::Trig => {
                let modes = 4;
                let mut terms = Vec::new();
                for kx in 0..=modes {
                    for ky in 0..=modes {
                        if kx + ky == 0 {
                            continue;
                        }
                        let amp = rng.gen_range(-1.0..1.0) / (1.0 + (kx * kx + ky * ky) as f64);
                        terms.push((kx as f64 * PI / lx, ky as f64 * PI / ly, amp));
                    }
                }
                Box::new(move |x, y| terms.iter().map(|&(a, b, c)| c * (a * x).cos() * (b * y).cos()).sum())
            }
            FamilyKind::Bumps => {
                let n = rng.gen_range(1..=4);
                let bumps: Vec<(f64, f64, f64, f64)> = (0..n)
                    .map(|_| {
                        (
                            rng.gen_range(0.2..2.0),
                            rng.gen_range(0.0..lx),
                            rng.gen_range(0.0..ly),
                            rng.gen_range(0.05..0.3) * lx.min(ly),
                        )
                    })
                    .collect();
                Box::new(move |x, y| {
                    bumps
                        .iter()
                        .map(|&(a, cx, cy, s)| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp())
                        .sum()
                })
            }
            FamilyKind::Noise => {
                let cutoff = 3.0;
                let modes = 6;
                let mut terms = Vec::new();
                for kx in 0..=modes {
                    for ky in 0..=modes {
                        let k2 = (kx * kx + ky * ky) as f64;
                        let amp = (-k2 / (2.0 * cutoff * cutoff)).exp() * rng.gen_range(-1.0..1.0);
                        let (px, py) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
                        terms.push((kx as f64 * PI / lx, ky as f64 * PI / ly, px, py, amp));
                    }
                }
                Box::new(move |x, y| {
                    terms
                        .iter()
                        .map(|&(a, b, px, py, c)| c * (a * x + px).cos() * (b * y + py).cos())
                        .sum()
                })
            }
        };
        // shift so the minimum sits at the floor plus a random offset
        let offset = rng.gen_range(0.0..1.0) * rng.gen_range(0.0..1.0);
        let base = Field::from_fn(*g, raw)?;
        let shift = self.delta_pos + offset - base.min();
        base.map(|x| x + shift)
    }
}

/// One evaluated inequality instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl Sample {
    fn new(lhs: f64, rhs: f64) -> Self {
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Sample { lhs, rhs, ratio }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub name: String,
    pub samples: Vec<Sample>,
    pub max_ratio: f64,
    pub fitted_constant: Option<f64>,
    /// `max_ratio ≤ 1` when every constant is specified; `None` otherwise.
    pub pass: Option<bool>,
}

impl InequalityReport {
    fn from_samples(name: &str, samples: Vec<Sample>, fitted_constant: Option<f64>, judged: bool) -> Self {
        let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
        InequalityReport {
            name: name.to_string(),
            pass: judged.then_some(max_ratio <= 1.0),
            samples,
            max_ratio,
            fitted_constant,
        }
    }

    pub fn verdict(&self) -> &'static str {
        match self.pass {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "info",
        }
    }

    /// `name verdict max_ratio fitted_constant samples`.
    pub fn line(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{} {} {:.16e} {:.16e} {}",
            self.name,
            self.verdict(),
            self.max_ratio,
            self.fitted_constant.unwrap_or(f64::NAN),
            self.samples.len()
        );
        s
    }
}

fn same_grid(a: &Field, b: &Field) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `∫ρ² / (‖∇ρ‖²_{L¹} + ‖ρ‖²_{L¹})`, with `|∇ρ|` the square root of the
/// face-average reconstruction of `|∇ρ|²`.
pub fn sobolev_ratio(rho: &Field) -> Result<f64> {
    let g = rho.grid();
    let gsq = cell_grad_sq(g, &face_gradients(rho));
    let v = rho.values();
    let l2 = integrate_values(g, &v.iter().map(|x| x * x).collect::<Vec<_>>());
    let grad_l1 = integrate_values(g, &gsq.iter().map(|x| x.sqrt()).collect::<Vec<_>>());
    let l1 = integrate_values(g, &v.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let denom = grad_l1 * grad_l1 + l1 * l1;
    if !(denom > 0.0 && denom.is_finite()) {
        return Err(Error::DegenerateSample(format!("Sobolev denominator {denom:e}")));
    }
    Ok(l2 / denom)
}

/// Largest Sobolev ratio over the family: an empirical lower bound for the
/// embedding constant.
pub fn estimate_sobolev_c1(family: &FieldFamily, grid: &Grid2D) -> Result<f64> {
    Ok(sobolev_report(family, grid)?.max_ratio)
}

pub fn sobolev_report(family: &FieldFamily, grid: &Grid2D) -> Result<InequalityReport> {
    let samples = family
        .fields(grid)?
        .iter()
        .map(|f| sobolev_ratio(f).map(|r| Sample { lhs: r, rhs: 1.0, ratio: r }))
        .collect::<Result<Vec<_>>>()?;
    let mut rep = InequalityReport::from_samples("sobolev", samples, None, false);
    rep.fitted_constant = Some(rep.max_ratio);
    Ok(rep)
}

/// Cellwise building blocks shared by the two-field inequalities.
struct Pair<'a> {
    g: &'a Grid2D,
    phi: &'a [f64],
    psi: &'a [f64],
    gphi: Vec<f64>,
    gpsi: Vec<f64>,
}

impl<'a> Pair<'a> {
    fn new(phi: &'a Field, psi: &'a Field) -> Result<Self> {
        same_grid(phi, psi)?;
        phi.check_positive()?;
        psi.check_positive()?;
        let g = phi.grid();
        Ok(Pair {
            g,
            phi: phi.values(),
            psi: psi.values(),
            gphi: cell_grad_sq(g, &face_gradients(phi)),
            gpsi: cell_grad_sq(g, &face_gradients(psi)),
        })
    }

    /// `∫ f(φ, ψ, |∇φ|², |∇ψ|²)`.
    fn int(&self, f: impl Fn(f64, f64, f64, f64) -> f64) -> f64 {
        let mut s = 0.0;
        for k in 0..self.phi.len() {
            s += f(self.phi[k], self.psi[k], self.gphi[k], self.gpsi[k]);
        }
        self.g.cell_area() * s
    }
}

/// The constant `max{(p+1)²c₁/2, (p+1)²|Ω|c₁/2, c₁}` of the two-field
/// interpolation inequality.
pub fn lemma41_constant(p: f64, c1: f64, area: f64) -> f64 {
    let q = (p + 1.0) * (p + 1.0);
    (q * c1 / 2.0).max(q * area * c1 / 2.0).max(c1)
}

/// `∫φ^{p+1}ψ ≤ c{∫ψ|∇φ|² + ∫(φ/ψ)|∇ψ|² + ∫φψ}∫φ^p + c∫ψ|∇φ|²`.
pub fn check_lemma41(phi: &Field, psi: &Field, p: f64, c1: f64) -> Result<Sample> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    if !(c1 > 0.0 && c1.is_finite()) {
        return Err(Error::InvalidParameter(format!("c1 must be > 0, got {c1}")));
    }
    let pr = Pair::new(phi, psi)?;
    let c = lemma41_constant(p, c1, pr.g.area());
    let lhs = pr.int(|f, s, _, _| pow_real(f, p + 1.0) * s);
    let diff_phi = pr.int(|_, s, gf, _| s * gf);
    let diff_psi = pr.int(|f, s, _, gs| f / s * gs);
    let cross = pr.int(|f, s, _, _| f * s);
    let norm = pr.int(|f, _, _, _| pow_real(f, p));
    let rhs = c * (diff_phi + diff_psi + cross) * norm + c * diff_phi;
    Ok(Sample::new(lhs, rhs))
}

pub fn lemma41_report(family: &FieldFamily, grid: &Grid2D, p: f64, c1: f64) -> Result<InequalityReport> {
    let samples = family
        .pairs(grid)?
        .iter()
        .map(|(f, s)| check_lemma41(f, s, p, c1))
        .collect::<Result<Vec<_>>>()?;
    Ok(InequalityReport::from_samples("l41", samples, None, true))
}

/// The integrals of the weighted-gradient interpolation inequality
///
/// ```text
/// ∫φ^{p+1}ψ|∇ψ|² ≤ η∫φ^{p−1}ψ|∇φ|² + c{‖ψ‖∞ + ‖ψ‖∞³/η}∫φ^{p+1}ψ ∫|∇ψ|⁴/ψ³
///                 + c‖ψ‖∞²(∫φ)^{2p+1}∫|∇ψ|⁴/ψ³ + c‖ψ‖∞²∫φψ
/// ```
///
/// grouped as `lhs ≤ η·t1 + c·(t2 + t3 + t4)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma42Terms {
    pub lhs: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub eta: f64,
}

impl Lemma42Terms {
    pub fn rhs(&self, c: f64) -> f64 {
        self.eta * self.t1 + c * (self.t2 + self.t3 + self.t4)
    }

    /// Smallest `c ≥ 0` for which the inequality holds on this sample.
    pub fn minimal_c(&self) -> f64 {
        let gap = self.lhs - self.eta * self.t1;
        if gap <= 0.0 {
            return 0.0;
        }
        let rest = self.t2 + self.t3 + self.t4;
        if rest > 0.0 {
            gap / rest
        } else {
            f64::INFINITY
        }
    }
}

pub fn lemma42_terms(phi: &Field, psi: &Field, p: f64, eta: f64) -> Result<Lemma42Terms> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("eta must be > 0, got {eta}")));
    }
    let pr = Pair::new(phi, psi)?;
    let sup = psi.max();
    let lhs = pr.int(|f, s, _, gs| pow_real(f, p + 1.0) * s * gs);
    let t1 = pr.int(|f, s, gf, _| pow_real(f, p - 1.0) * s * gf);
    let w4 = pr.int(|_, s, _, gs| gs * gs / (s * s * s));
    let mass = pr.int(|f, _, _, _| f);
    let weighted = pr.int(|f, s, _, _| pow_real(f, p + 1.0) * s);
    let cross = pr.int(|f, s, _, _| f * s);
    Ok(Lemma42Terms {
        lhs,
        t1,
        t2: (sup + sup.powi(3) / eta) * weighted * w4,
        t3: sup * sup * pow_real(mass, 2.0 * p + 1.0) * w4,
        t4: sup * sup * cross,
        eta,
    })
}

/// Evaluates the inequality with a given constant.
pub fn check_lemma42(phi: &Field, psi: &Field, p: f64, eta: f64, c: f64) -> Result<Sample> {
    let t = lemma42_terms(phi, psi, p, eta)?;
    Ok(Sample::new(t.lhs, t.rhs(c)))
}

/// Fits the minimal constant over the family and reports every sample at
/// that constant.
pub fn lemma42_report(family: &FieldFamily, grid: &Grid2D, p: f64, eta: f64) -> Result<InequalityReport> {
    let terms = family
        .pairs(grid)?
        .iter()
        .map(|(f, s)| lemma42_terms(f, s, p, eta))
        .collect::<Result<Vec<_>>>()?;
    let c = terms.iter().map(|t| t.minimal_c()).fold(0.0, f64::max);
    let samples = terms.iter().map(|t| Sample::new(t.lhs, t.rhs(c))).collect();
    Ok(InequalityReport::from_samples("l42", samples, Some(c), false))
}

/// Result of replaying the weighted-gradient differential inequality on a
/// trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma52Report {
    pub q: u32,
    /// Largest γ for which the inequality holds at every interior snapshot;
    /// infinite when no snapshot constrains it.
    pub gamma: f64,
    /// `q / (8(q + √2)²)`, for comparison.
    pub gamma_struct: f64,
    /// `(t, γ_k)` per interior snapshot.
    pub per_snapshot: Vec<(f64, f64)>,
}

impl Lemma52Report {
    /// `l52_q<q> verdict gamma gamma_struct snapshots`, passing when the
    /// empirical γ is positive.
    pub fn line(&self) -> String {
        format!(
            "l52_q{} {} {:.16e} {:.16e} {}",
            self.q,
            if self.gamma > 0.0 { "pass" } else { "fail" },
            self.gamma,
            self.gamma_struct,
            self.per_snapshot.len()
        )
    }
}

pub fn gamma_struct(q: u32) -> f64 {
    let q = q as f64;
    q / (8.0 * (q + SQRT_2).powi(2))
}

/// `G = ∫v^{1−q}|∇v|^q`, `D = ∫v^{−q−1}|∇v|^{q+2}` and
/// `S = ∫u^{(q+2)/2}v + ∫v` of one state.
fn lemma52_integrals(s: &State, q: u32) -> Result<(f64, f64, f64)> {
    s.v.check_positive()?;
    let g = s.grid();
    let gsq = cell_grad_sq(g, &face_gradients(&s.v));
    let (u, v) = (s.u.values(), s.v.values());
    let e = (q as f64 + 2.0) / 2.0;
    let (mut big_g, mut big_d, mut big_s) = (0.0, 0.0, 0.0);
    for k in 0..v.len() {
        big_g += grad_pow(gsq[k], q) / v[k].powi(q as i32 - 1);
        big_d += grad_pow(gsq[k], q + 2) / v[k].powi(q as i32 + 1);
        big_s += pow_real(u[k], e) * v[k] + v[k];
    }
    let da = g.cell_area();
    Ok((da * big_g, da * big_d, da * big_s))
}

/// Largest γ with `G' + γD ≤ S/γ`, given the three values at one time.
fn gamma_at(dg: f64, d: f64, s: f64) -> f64 {
    if d > 0.0 {
        (-dg + (dg * dg + 4.0 * d * s).sqrt()) / (2.0 * d)
    } else if dg > 0.0 {
        s / dg
    } else {
        f64::INFINITY
    }
}

/// Empirical γ(q) along a trajectory: `G'` by central differences over the
/// neighbouring snapshots, the other integrals at the middle one.
pub fn check_lemma52_trajectory(states: &[State], q: u32) -> Result<Lemma52Report> {
    if q < 2 || q % 2 != 0 {
        return Err(Error::InvalidParameter(format!("q must be an even integer >= 2, got {q}")));
    }
    if states.len() < 10 {
        return Err(Error::Range(format!("need at least 10 snapshots, got {}", states.len())));
    }
    if states.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(Error::Range("snapshot times must be strictly increasing".into()));
    }
    let vals = states
        .iter()
        .map(|s| lemma52_integrals(s, q))
        .collect::<Result<Vec<_>>>()?;
    let mut per = Vec::with_capacity(states.len() - 2);
    for k in 1..states.len() - 1 {
        let dg = (vals[k + 1].0 - vals[k - 1].0) / (states[k + 1].t - states[k - 1].t);
        per.push((states[k].t, gamma_at(dg, vals[k].1, vals[k].2)));
    }
    let gamma = per.iter().map(|&(_, g)| g).fold(f64::INFINITY, f64::min);
    Ok(Lemma52Report {
        q,
        gamma,
        gamma_struct: gamma_struct(q),
        per_snapshot: per,
    })
}
