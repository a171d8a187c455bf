//! Per-state functionals, time-window integrals and bound verdicts.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{cell_grad_sq, face_gradients, integrate, pow_real, weighted_from_grad_sq, Field};
use crate::model::{ModelParams, State};
use crate::series::Cumulative;

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorConfig {
    /// Exponents `p` for the tracked `‖u‖_p`.
    pub p_list: Vec<f64>,
    /// Weight `b` of the entropy term in `energy_F`.
    pub b_weight: f64,
    pub window_tau: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            p_list: vec![2.0, 3.0, 4.0],
            b_weight: 1.0,
            window_tau: 1.0,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.p_list.iter().find(|&&p| !(p > 1.0 && p.is_finite())) {
            return Err(Error::InvalidParameter(format!("norm exponent must be > 1, got {p}")));
        }
        if !(self.b_weight > 0.0 && self.b_weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("b_weight must be > 0, got {}", self.b_weight)));
        }
        if !(self.window_tau > 0.0 && self.window_tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "window_tau must be > 0, got {}",
                self.window_tau
            )));
        }
        Ok(())
    }
}

/// One row of tracked functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorRecord {
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub sup_u: f64,
    pub sup_v: f64,
    pub inf_v: f64,
    /// `(p, ‖u‖_p)` in configuration order.
    pub norm_u_p: Vec<(f64, f64)>,
    pub entropy: f64,
    pub fisher_v: f64,
    pub w4: f64,
    pub w6: f64,
    pub cross_uv: f64,
    pub diss_u: f64,
    pub diss_mixed: f64,
    pub sup_grad_v: f64,
    pub energy_f: f64,
    pub lyap_y: f64,
}

const HEAD: [&str; 6] = ["t", "mass_u", "mass_v", "sup_u", "sup_v", "inf_v"];
const TAIL: [&str; 10] = [
    "entropy",
    "fisher_v",
    "w4",
    "w6",
    "cross_uv",
    "diss_u",
    "diss_mixed",
    "sup_grad_v",
    "energy_F",
    "lyap_y",
];

/// Column name of the `‖u‖_p` monitor, e.g. `norm_u_p2` or `norm_u_p2.5`.
pub fn norm_column(p: f64) -> String {
    format!("norm_u_p{p}")
}

/// CSV column names for the given exponent list.
pub fn columns(p_list: &[f64]) -> Vec<String> {
    let mut out: Vec<String> = HEAD.iter().map(|s| s.to_string()).collect();
    out.extend(p_list.iter().map(|&p| norm_column(p)));
    out.extend(TAIL.iter().map(|s| s.to_string()));
    out
}

impl MonitorRecord {
    pub fn p_list(&self) -> Vec<f64> {
        self.norm_u_p.iter().map(|&(p, _)| p).collect()
    }

    pub fn norm(&self, p: f64) -> Option<f64> {
        self.norm_u_p.iter().find(|&&(q, _)| q == p).map(|&(_, n)| n)
    }

    /// Value of the column called `name`.
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "t" => self.t,
            "mass_u" => self.mass_u,
            "mass_v" => self.mass_v,
            "sup_u" => self.sup_u,
            "sup_v" => self.sup_v,
            "inf_v" => self.inf_v,
            "entropy" => self.entropy,
            "fisher_v" => self.fisher_v,
            "w4" => self.w4,
            "w6" => self.w6,
            "cross_uv" => self.cross_uv,
            "diss_u" => self.diss_u,
            "diss_mixed" => self.diss_mixed,
            "sup_grad_v" => self.sup_grad_v,
            "energy_F" => self.energy_f,
            "lyap_y" => self.lyap_y,
            other => {
                return self
                    .norm_u_p
                    .iter()
                    .find(|&&(q, _)| norm_column(q) == other)
                    .map(|&(_, n)| n);
            }
        })
    }

    /// Values in CSV column order.
    pub fn values(&self) -> Vec<f64> {
        let mut out = vec![self.t, self.mass_u, self.mass_v, self.sup_u, self.sup_v, self.inf_v];
        out.extend(self.norm_u_p.iter().map(|&(_, n)| n));
        out.extend([
            self.entropy,
            self.fisher_v,
            self.w4,
            self.w6,
            self.cross_uv,
            self.diss_u,
            self.diss_mixed,
            self.sup_grad_v,
            self.energy_f,
            self.lyap_y,
        ]);
        out
    }

    fn from_values(p_list: &[f64], v: &[f64]) -> Self {
        let n = p_list.len();
        let tail = &v[6 + n..];
        MonitorRecord {
            t: v[0],
            mass_u: v[1],
            mass_v: v[2],
            sup_u: v[3],
            sup_v: v[4],
            inf_v: v[5],
            norm_u_p: p_list.iter().copied().zip(v[6..6 + n].iter().copied()).collect(),
            entropy: tail[0],
            fisher_v: tail[1],
            w4: tail[2],
            w6: tail[3],
            cross_uv: tail[4],
            diss_u: tail[5],
            diss_mixed: tail[6],
            sup_grad_v: tail[7],
            energy_f: tail[8],
            lyap_y: tail[9],
        }
    }
}

/// `x ln x` extended by 0 at 0.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Evaluates every tracked functional on `s`.
pub fn record(s: &State, cfg: &MonitorConfig) -> Result<MonitorRecord> {
    s.v.check_positive()?;
    s.u.check_nonnegative()?;
    let g = s.grid();
    let da = g.cell_area();
    let u = s.u.values();
    let v = s.v.values();

    let gv = cell_grad_sq(g, &face_gradients(&s.v));
    let gu = cell_grad_sq(g, &face_gradients(&s.u));

    let mut mass_u = 0.0;
    let mut mass_v = 0.0;
    let mut entropy = 0.0;
    let mut cross = 0.0;
    let mut diss_u = 0.0;
    let mut diss_mixed = 0.0;
    let mut max_gv: f64 = 0.0;
    for k in 0..u.len() {
        mass_u += u[k];
        mass_v += v[k];
        entropy += xlogx(u[k]);
        cross += u[k] * v[k];
        diss_u += v[k] * gu[k];
        diss_mixed += u[k] / v[k] * gv[k];
        max_gv = max_gv.max(gv[k]);
    }
    let norm_u_p = cfg
        .p_list
        .iter()
        .map(|&p| {
            let s: f64 = u.iter().map(|&x| pow_real(x, p)).sum();
            (p, (da * s).powf(1.0 / p))
        })
        .collect();

    let entropy = da * entropy;
    let fisher_v = weighted_from_grad_sq(g, &gv, v, 2, 1);
    let w4 = weighted_from_grad_sq(g, &gv, v, 4, 3);
    let cross_uv = da * cross;
    Ok(MonitorRecord {
        t: s.t,
        mass_u: da * mass_u,
        mass_v: da * mass_v,
        sup_u: s.u.max(),
        sup_v: s.v.max(),
        inf_v: s.v.min(),
        norm_u_p,
        entropy,
        fisher_v,
        w4,
        w6: weighted_from_grad_sq(g, &gv, v, 6, 5),
        cross_uv,
        diss_u: da * diss_u,
        diss_mixed: da * diss_mixed,
        sup_grad_v: max_gv.sqrt(),
        energy_f: 4.0 * cfg.b_weight * entropy + w4,
        lyap_y: entropy - cross_uv + 0.5 * fisher_v,
    })
}

fn column_of(series: &[MonitorRecord], name: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut ts = Vec::with_capacity(series.len());
    let mut vs = Vec::with_capacity(series.len());
    for r in series {
        ts.push(r.t);
        vs.push(
            r.get(name)
                .ok_or_else(|| Error::Range(format!("unknown monitor column {name:?}")))?,
        );
    }
    Ok((ts, vs))
}

/// Trapezoidal `∫_t^{t+tau}` of the named monitor.
pub fn window_integral(series: &[MonitorRecord], name: &str, t: f64, tau: f64) -> Result<f64> {
    let (ts, vs) = column_of(series, name)?;
    Cumulative::new(&ts, &vs)?.window(t, tau)
}

/// Largest per-step increase of `mass_v` relative to its value; positive
/// values above the tolerance mean the nutrient was produced somewhere.
pub fn mass_v_max_increase(series: &[MonitorRecord]) -> f64 {
    series
        .windows(2)
        .map(|w| (w[1].mass_v - w[0].mass_v) / w[0].mass_v.abs().max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Reported extremum without an asserted value.
    Info,
    /// The series lacks the data the bound needs.
    Skip,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Info => "info",
            Verdict::Skip => "skip",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pass" => Ok(Verdict::Pass),
            "fail" => Ok(Verdict::Fail),
            "info" => Ok(Verdict::Info),
            "skip" => Ok(Verdict::Skip),
            other => Err(Error::Parse(format!("unknown verdict {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundEntry {
    pub name: String,
    pub verdict: Verdict,
    pub asserted: f64,
    pub observed: f64,
    /// Distance to the asserted value, positive when the bound holds.
    pub margin: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundReport {
    pub entries: Vec<BoundEntry>,
}

impl BoundReport {
    pub fn get(&self, name: &str) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BoundEntry> {
        self.entries.iter().filter(|e| e.verdict == Verdict::Fail)
    }

    pub fn all_pass(&self) -> bool {
        self.failures().next().is_none()
    }

    /// One `name verdict asserted observed margin` line per entry.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{} {} {:.16e} {:.16e} {:.16e}",
                e.name, e.verdict, e.asserted, e.observed, e.margin
            );
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 5 {
                return Err(Error::Parse(format!("line {}: expected 5 fields, got {}", n + 1, parts.len())));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {s:?}", n + 1)))
            };
            entries.push(BoundEntry {
                name: parts[0].to_string(),
                verdict: parts[1].parse()?,
                asserted: num(parts[2])?,
                observed: num(parts[3])?,
                margin: num(parts[4])?,
            });
        }
        Ok(BoundReport { entries })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Initial data the bounds are measured against.
#[derive(Debug, Clone, Copy)]
pub struct InitialData<'a> {
    pub u0: &'a Field,
    pub v0: &'a Field,
}

/// Run facts that sharpen the comparisons.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundOptions {
    /// Largest step taken. When positive, the lower bound for `v` uses the
    /// rate of the explicit update, `-ln(1 - c₁Δ)/Δ`, instead of `c₁`.
    pub dt_max: f64,
    /// `sup u` over every step, when known; otherwise the monitored maximum.
    pub sup_u: Option<f64>,
}

const ABS_TOL: f64 = 1e-8;
const REL_TOL: f64 = 1e-6;
const QUAD_TOL: f64 = 1e-4;

fn upper(name: &str, asserted: f64, observed: f64, rel: f64, abs: f64) -> BoundEntry {
    let ok = observed <= asserted * (1.0 + rel) + abs;
    BoundEntry {
        name: name.to_string(),
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        asserted,
        observed,
        margin: asserted - observed,
    }
}

fn info(name: &str, observed: f64) -> BoundEntry {
    BoundEntry {
        name: name.to_string(),
        verdict: Verdict::Info,
        asserted: f64::INFINITY,
        observed,
        margin: f64::INFINITY,
    }
}

fn skip(name: &str) -> BoundEntry {
    BoundEntry {
        name: name.to_string(),
        verdict: Verdict::Skip,
        asserted: f64::NAN,
        observed: f64::NAN,
        margin: f64::NAN,
    }
}

/// The mass level `m`: `∫u` never exceeds `max{∫u₀, |Ω|(ρ/μ)^{1/(κ−1)}}`,
/// so the sum of both is a bound (`|Ω| + ∫u₀` for the logistic defaults).
pub fn mass_level(u0: &Field, p: &ModelParams) -> f64 {
    let area = u0.grid().area();
    let cap = if p.kappa == 2.0 {
        p.rho / p.mu
    } else {
        (p.rho / p.mu).powf(1.0 / (p.kappa - 1.0))
    };
    area * cap + integrate(u0)
}

pub fn check_bounds(
    series: &[MonitorRecord],
    init: InitialData<'_>,
    p: &ModelParams,
    cfg: &MonitorConfig,
) -> Result<BoundReport> {
    check_bounds_with(series, init, p, cfg, &BoundOptions::default())
}

/// Maps a monitor series to verdicts on the a-priori bounds.
pub fn check_bounds_with(
    series: &[MonitorRecord],
    init: InitialData<'_>,
    p: &ModelParams,
    cfg: &MonitorConfig,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    if series.is_empty() {
        return Err(Error::Range("empty monitor series".into()));
    }
    let max_of = |f: &dyn Fn(&MonitorRecord) -> f64| series.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let mut entries = Vec::new();

    // sup v never exceeds its initial maximum
    entries.push(upper("v_max_principle", init.v0.max(), max_of(&|r| r.sup_v), REL_TOL, ABS_TOL));

    let m = mass_level(init.u0, p);
    entries.push(upper("u_mass_bound", m, max_of(&|r| r.mass_u), REL_TOL, ABS_TOL));

    // ∫v(t) + ∫₀ᵗ∫uv = ∫v₀
    let v_mass0 = integrate(init.v0);
    let times: Vec<f64> = series.iter().map(|r| r.t).collect();
    let cross: Vec<f64> = series.iter().map(|r| r.cross_uv).collect();
    let cum = Cumulative::new(&times, &cross)?;
    let defect = series
        .iter()
        .zip(cum.nodes())
        .map(|(r, c)| (r.mass_v + c - v_mass0).abs() / v_mass0)
        .fold(0.0, f64::max);
    entries.push(upper("v_mass_conservation", QUAD_TOL, defect, 0.0, 0.0));

    // window integral of u² against (1 + ρτ)m/μ, which is 2m for the defaults
    let tau = cfg.window_tau;
    let span = times.last().unwrap() - times[0];
    match series[0].norm(2.0) {
        Some(_) if p.kappa == 2.0 && tau <= 1.0 && tau <= span => {
            let sq: Vec<f64> = series.iter().map(|r| r.norm(2.0).unwrap().powi(2)).collect();
            let w = Cumulative::new(&times, &sq)?.window_sup(tau)?;
            let asserted = (1.0 + p.rho) * m / p.mu;
            entries.push(upper("u_square_window", asserted, w, QUAD_TOL, 0.0));
        }
        _ => entries.push(skip("u_square_window")),
    }

    // inf v(t) ≥ inf v₀ · exp(−c₁ t)
    let c1 = opts.sup_u.unwrap_or(f64::NEG_INFINITY).max(max_of(&|r| r.sup_u));
    let dt = opts.dt_max;
    let rate = if dt > 0.0 && c1 * dt < 1.0 && c1 > 0.0 {
        -(-c1 * dt).ln_1p() / dt
    } else {
        c1
    };
    let inf_v0 = init.v0.min();
    let mut worst: Option<(f64, f64)> = None;
    for r in series {
        let lower = inf_v0 * (-rate * (r.t - times[0])).exp();
        let slack = r.inf_v - lower;
        if worst.map_or(true, |(a, o)| slack < o - a) {
            worst = Some((lower, r.inf_v));
        }
    }
    let (lower, observed) = worst.unwrap();
    let ok = observed >= lower * (1.0 - REL_TOL) - ABS_TOL;
    entries.push(BoundEntry {
        name: "v_lower_bound".into(),
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        asserted: lower,
        observed,
        margin: observed - lower,
    });

    entries.push(info("sup_entropy", max_of(&|r| r.entropy)));
    entries.push(info("sup_w4", max_of(&|r| r.w4)));
    entries.push(info("sup_w6", max_of(&|r| r.w6)));
    for (k, &(q, _)) in series[0].norm_u_p.iter().enumerate() {
        let name = format!("sup_{}", norm_column(q));
        entries.push(info(&name, max_of(&|r| r.norm_u_p[k].1)));
    }
    entries.push(info("sup_u", c1));
    entries.push(info("sup_grad_v", max_of(&|r| r.sup_grad_v)));
    Ok(BoundReport { entries })
}

/// CSV text of a monitor series with the exact column header.
pub fn csv_string(series: &[MonitorRecord], p_list: &[f64]) -> String {
    let mut s = columns(p_list).join(",");
    s.push('\n');
    for r in series {
        push_csv_row(&mut s, r);
    }
    s
}

pub(crate) fn push_csv_row(s: &mut String, r: &MonitorRecord) {
    for (k, v) in r.values().iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        let _ = write!(s, "{v:.16e}");
    }
    s.push('\n');
}

pub fn write_csv(path: impl AsRef<Path>, series: &[MonitorRecord], p_list: &[f64]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, csv_string(series, p_list)).map_err(|e| Error::io(path, e))
}

/// A parsed monitor CSV addressed by column name.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl MonitorTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty monitor file".into()))?;
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("row {}: bad number {x:?}", n + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != columns.len() {
                return Err(Error::Parse(format!(
                    "row {}: {} values for {} columns",
                    n + 1,
                    row.len(),
                    columns.len()
                )));
            }
            rows.push(row);
        }
        Ok(MonitorTable { columns, rows })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Range(format!("no column {name:?} in monitor table")))?;
        Ok(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Exponents of the `norm_u_p*` columns.
    pub fn p_list(&self) -> Result<Vec<f64>> {
        self.columns
            .iter()
            .filter_map(|c| c.strip_prefix("norm_u_p"))
            .map(|p| p.parse().map_err(|_| Error::Parse(format!("bad norm column suffix {p:?}"))))
            .collect()
    }

    /// Converts back to records; the header must be the canonical one.
    pub fn records(&self) -> Result<Vec<MonitorRecord>> {
        let p_list = self.p_list()?;
        if columns(&p_list) != self.columns {
            return Err(Error::Parse("monitor header does not match the canonical column list".into()));
        }
        Ok(self.rows.iter().map(|r| MonitorRecord::from_values(&p_list, r)).collect())
    }
}
