//! Initial-data presets, scenario configuration files and the ε-sweep.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};
use crate::model::{ModelParams, State};
use crate::monitors::{MonitorConfig, MonitorRecord};
use crate::stepper::{default_window_tau, run, RunConfig, RunResult, Scheme, StepControl};

/// Floor for generated nutrient fields.
pub const DELTA_V: f64 = 1e-3;

/// A field preset.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// `c` everywhere.
    Uniform(f64),
    /// `amp·exp(−|x − c|²/(2σ²))`.
    Gaussian { amp: f64, cx: f64, cy: f64, sigma: f64 },
    /// Two Gaussians of common width.
    TwoBumps { a1: f64, x1: f64, y1: f64, a2: f64, x2: f64, y2: f64, sigma: f64 },
    /// `max(0, base·(1 + amp·r))` with `r` a seeded band-limited field in `[−1, 1]`.
    RandomPerturbation { seed: Option<u64>, amp: f64, base: f64 },
    /// `base + amp·cos(kxπx/lx)·cos(kyπy/ly)`.
    Cosine { base: f64, amp: f64, kx: u32, ky: u32 },
    /// `1 + 0.1·cos(kπx/lx)`, paired with a vanishing density.
    HeatOnly(u32),
}

fn int_arg(x: f64, what: &str) -> Result<u32> {
    if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
        Ok(x as u32)
    } else {
        Err(Error::Parse(format!("{what} must be a nonnegative integer, got {x}")))
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = s
            .split_once('(')
            .ok_or_else(|| Error::Parse(format!("preset {s:?} is not name(args)")))?;
        let body = rest
            .strip_suffix(')')
            .ok_or_else(|| Error::Parse(format!("preset {s:?} lacks a closing parenthesis")))?;
        let args = body
            .split(',')
            .map(str::trim)
            .filter(|a| !a.is_empty())
            .map(|a| {
                a.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Parse(format!("bad number {a:?} in {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let arity = |n: &[usize]| -> Result<()> {
            if n.contains(&args.len()) {
                Ok(())
            } else {
                Err(Error::Parse(format!("{name} takes {n:?} arguments, got {}", args.len())))
            }
        };
        match name.trim() {
            "uniform" => {
                arity(&[1])?;
                Ok(Preset::Uniform(args[0]))
            }
            "gaussian" => {
                arity(&[4])?;
                Ok(Preset::Gaussian { amp: args[0], cx: args[1], cy: args[2], sigma: args[3] })
            }
            "two_bumps" => {
                arity(&[7])?;
                Ok(Preset::TwoBumps {
                    a1: args[0],
                    x1: args[1],
                    y1: args[2],
                    a2: args[3],
                    x2: args[4],
                    y2: args[5],
                    sigma: args[6],
                })
            }
            "random_perturbation" => {
                arity(&[1, 2, 3])?;
                let (seed, amp, base) = match args.as_slice() {
                    [amp] => (None, *amp, 1.0),
                    [seed, amp] => (Some(int_arg(*seed, "seed")? as u64), *amp, 1.0),
                    [seed, amp, base] => (Some(int_arg(*seed, "seed")? as u64), *amp, *base),
                    _ => unreachable!(),
                };
                Ok(Preset::RandomPerturbation { seed, amp, base })
            }
            "cosine" => {
                arity(&[4])?;
                Ok(Preset::Cosine {
                    base: args[0],
                    amp: args[1],
                    kx: int_arg(args[2], "kx")?,
                    ky: int_arg(args[3], "ky")?,
                })
            }
            "heat_only" => {
                arity(&[1])?;
                Ok(Preset::HeatOnly(int_arg(args[0], "mode")?))
            }
            other => Err(Error::Parse(format!(
                "unknown preset {other:?} (uniform, gaussian, two_bumps, random_perturbation, cosine, heat_only)"
            ))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Uniform(c) => write!(f, "uniform({c})"),
            Preset::Gaussian { amp, cx, cy, sigma } => write!(f, "gaussian({amp}, {cx}, {cy}, {sigma})"),
            Preset::TwoBumps { a1, x1, y1, a2, x2, y2, sigma } => {
                write!(f, "two_bumps({a1}, {x1}, {y1}, {a2}, {x2}, {y2}, {sigma})")
            }
            Preset::RandomPerturbation { seed: None, amp, .. } => write!(f, "random_perturbation({amp})"),
            Preset::RandomPerturbation { seed: Some(s), amp, base } => {
                write!(f, "random_perturbation({s}, {amp}, {base})")
            }
            Preset::Cosine { base, amp, kx, ky } => write!(f, "cosine({base}, {amp}, {kx}, {ky})"),
            Preset::HeatOnly(k) => write!(f, "heat_only({k})"),
        }
    }
}

fn gaussian(amp: f64, cx: f64, cy: f64, sigma: f64, x: f64, y: f64) -> f64 {
    amp * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * sigma * sigma)).exp()
}

impl Preset {
    /// Evaluates the preset at the cell centers of `g`. `seed` is used by
    /// random presets that do not name their own.
    pub fn field(&self, g: Grid2D, seed: u64) -> Result<Field> {
        let (lx, ly) = (g.lx(), g.ly());
        match *self {
            Preset::Uniform(c) => Field::constant(g, c),
            Preset::Gaussian { amp, cx, cy, sigma } => {
                if !(sigma > 0.0) {
                    return Err(Error::BadScenario(format!("gaussian width must be positive, got {sigma}")));
                }
                Field::from_fn(g, |x, y| gaussian(amp, cx, cy, sigma, x, y))
            }
            Preset::TwoBumps { a1, x1, y1, a2, x2, y2, sigma } => {
                if !(sigma > 0.0) {
                    return Err(Error::BadScenario(format!("bump width must be positive, got {sigma}")));
                }
                Field::from_fn(g, |x, y| gaussian(a1, x1, y1, sigma, x, y) + gaussian(a2, x2, y2, sigma, x, y))
            }
            Preset::RandomPerturbation { seed: own, amp, base } => {
                let mut rng = ChaCha8Rng::seed_from_u64(own.unwrap_or(seed));
                let modes = 4;
                let mut terms = Vec::new();
                for kx in 0..=modes {
                    for ky in 0..=modes {
                        if kx + ky > 0 {
                            terms.push((kx as f64 * PI / lx, ky as f64 * PI / ly, rng.gen_range(-1.0..1.0)));
                        }
                    }
                }
                let norm: f64 = terms.iter().map(|t: &(f64, f64, f64)| t.2.abs()).sum();
                Field::from_fn(g, |x, y| {
                    let r: f64 = terms.iter().map(|&(a, b, c)| c * (a * x).cos() * (b * y).cos()).sum();
                    (base * (1.0 + amp * r / norm)).max(0.0)
                })
            }
            Preset::Cosine { base, amp, kx, ky } => {
                let (a, b) = (kx as f64 * PI / lx, ky as f64 * PI / ly);
                Field::from_fn(g, |x, y| base + amp * (a * x).cos() * (b * y).cos())
            }
            Preset::HeatOnly(k) => {
                let a = k as f64 * PI / lx;
                Field::from_fn(g, |x, _| 1.0 + 0.1 * (a * x).cos())
            }
        }
    }
}

/// Everything needed to start a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub grid: Grid2D,
    pub u0: Preset,
    pub v0: Preset,
    pub params: ModelParams,
    pub control: StepControl,
    pub run: RunConfig,
    pub seed: u64,
    pub outdir: PathBuf,
}

const KEYS: [&str; 20] = [
    "name",
    "nx",
    "ny",
    "lx",
    "ly",
    "epsilon",
    "rho",
    "mu",
    "kappa",
    "cfl",
    "dt_max",
    "scheme",
    "t_end",
    "snapshot_every",
    "monitor_every",
    "window_tau",
    "u0",
    "v0",
    "seed",
    "outdir",
];

impl Scenario {
    /// Defaults around the given presets: unit square at 64², unit logistic
    /// source, `t_end = 1`.
    pub fn new(name: &str, n: usize, u0: Preset, v0: Preset) -> Result<Self> {
        let t_end = 1.0;
        Ok(Scenario {
            name: name.to_string(),
            grid: Grid2D::unit_square(n)?,
            u0,
            v0,
            params: ModelParams::default(),
            control: StepControl::default(),
            run: RunConfig::new(t_end, 0.1 * t_end, 100),
            seed: 0,
            outdir: PathBuf::from("out"),
        })
    }

    /// The reference taxis run: a Gaussian of amplitude 5 and width 0.1 in a
    /// uniform nutrient, ε = 1e−3, 128², until t = 50.
    pub fn reference() -> Self {
        let mut s = Scenario::new(
            "reference",
            128,
            Preset::Gaussian { amp: 5.0, cx: 0.5, cy: 0.5, sigma: 0.1 },
            Preset::Uniform(1.0),
        )
        .expect("valid reference grid");
        s.params.epsilon = 1e-3;
        s.run = RunConfig::new(50.0, 0.5, 1000);
        s
    }

    /// Parses the flat `key = value` format; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", n + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::Parse(format!("line {}: unknown key {k:?}", n + 1)));
            }
            if map.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key {k:?}", n + 1)));
            }
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let need = |k: &str| get(k).ok_or_else(|| Error::Parse(format!("missing key {k:?}")));
        fn num<T: FromStr>(map: &BTreeMap<String, String>, k: &str, default: T) -> Result<T> {
            match map.get(k) {
                None => Ok(default),
                Some(v) => v.parse().map_err(|_| Error::Parse(format!("{k} = {v:?} is not a valid number"))),
            }
        }

        let nx: usize = num(&map, "nx", 64)?;
        let ny: usize = num(&map, "ny", nx)?;
        let grid = Grid2D::new(nx, ny, num(&map, "lx", 1.0)?, num(&map, "ly", 1.0)?)?;
        let params = ModelParams {
            epsilon: num(&map, "epsilon", 0.0)?,
            rho: num(&map, "rho", 1.0)?,
            mu: num(&map, "mu", 1.0)?,
            kappa: num(&map, "kappa", 2.0)?,
        };
        let mut control = StepControl {
            cfl: num(&map, "cfl", StepControl::default().cfl)?,
            dt_max: num(&map, "dt_max", StepControl::default().dt_max)?,
            ..StepControl::default()
        };
        if let Some(s) = get("scheme") {
            control.scheme = s.parse::<Scheme>()?;
        }
        control.dt_min = control.dt_min.min(control.dt_max);
        let t_end: f64 = num(&map, "t_end", 1.0)?;
        let run = RunConfig {
            t_end,
            snapshot_every: num(&map, "snapshot_every", 0.1 * t_end)?,
            monitor_every: num(&map, "monitor_every", 100)?,
            window_tau: num(&map, "window_tau", default_window_tau(t_end))?,
        };
        let sc = Scenario {
            name: get("name").unwrap_or("scenario").to_string(),
            grid,
            u0: need("u0")?.parse()?,
            v0: need("v0")?.parse()?,
            params,
            control,
            run,
            seed: num(&map, "seed", 0)?,
            outdir: PathBuf::from(get("outdir").unwrap_or("out")),
        };
        sc.params.validate()?;
        sc.control.validate()?;
        sc.run.validate()?;
        Ok(sc)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scenario::parse(&text)
    }

    /// Renders the scenario in the configuration format.
    pub fn to_config(&self) -> String {
        let g = &self.grid;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("name", self.name.clone());
        kv("nx", g.nx().to_string());
        kv("ny", g.ny().to_string());
        kv("lx", g.lx().to_string());
        kv("ly", g.ly().to_string());
        kv("epsilon", self.params.epsilon.to_string());
        kv("rho", self.params.rho.to_string());
        kv("mu", self.params.mu.to_string());
        kv("kappa", self.params.kappa.to_string());
        kv("cfl", self.control.cfl.to_string());
        kv("dt_max", self.control.dt_max.to_string());
        kv("scheme", self.control.scheme.to_string());
        kv("t_end", self.run.t_end.to_string());
        kv("snapshot_every", self.run.snapshot_every.to_string());
        kv("monitor_every", self.run.monitor_every.to_string());
        kv("window_tau", self.run.window_tau.to_string());
        kv("u0", self.u0.to_string());
        kv("v0", self.v0.to_string());
        kv("seed", self.seed.to_string());
        kv("outdir", self.outdir.display().to_string());
        out
    }

    /// The initial state: presets evaluated at cell centers, `ε` added to
    /// the density, admissibility checked.
    ///
    /// Admissible data has `u₀ ≥ 0`, `u₀ ≢ 0` and `v₀ ≥ δ_v`. A `heat_only`
    /// nutrient is the pure diffusion reduction and requires a vanishing
    /// density instead.
    pub fn build(&self) -> Result<State> {
        self.params.validate()?;
        let u = self.u0.field(self.grid, self.seed)?;
        let v = self.v0.field(self.grid, self.seed.wrapping_add(1))?;
        if u.values().iter().chain(v.values()).any(|x| !x.is_finite()) {
            return Err(Error::BadScenario("initial data must be finite".into()));
        }
        if u.min() < 0.0 {
            return Err(Error::BadScenario(format!("u0 >= 0 violated: min u0 = {}", u.min())));
        }
        let heat = matches!(self.v0, Preset::HeatOnly(_));
        if heat {
            if u.max() != 0.0 || self.params.epsilon != 0.0 {
                return Err(Error::BadScenario(
                    "heat_only nutrient needs u0 = uniform(0) and epsilon = 0".into(),
                ));
            }
        } else if u.max() == 0.0 {
            return Err(Error::BadScenario("u0 not identically zero violated".into()));
        }
        if v.min() < DELTA_V {
            return Err(Error::BadScenario(format!(
                "v0 >= {DELTA_V} violated: min v0 = {}",
                v.min()
            )));
        }
        let eps = self.params.epsilon;
        let u = if eps > 0.0 { u.map(|x| x + eps)? } else { u };
        State::new(u, v, 0.0)
    }

    /// Builds and runs the scenario.
    pub fn execute(
        &self,
        mcfg: &MonitorConfig,
        sinks: &mut [&mut dyn crate::stepper::Sink],
    ) -> Result<RunResult> {
        let s0 = self.build()?;
        let mut r = self.run;
        r.window_tau = mcfg.window_tau;
        run(&s0, &self.params, &self.control, &r, mcfg, sinks)
    }

    /// Monitor settings matching the scenario's window length.
    pub fn monitor_config(&self) -> MonitorConfig {
        MonitorConfig {
            window_tau: self.run.window_tau,
            ..MonitorConfig::default()
        }
    }
}

/// Monitors whose suprema are compared across ε.
pub const SWEEP_MONITORS: [&str; 5] = ["sup_u", "entropy", "w4", "w6", "sup_grad_v"];

/// Outcome of one ε member.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMember {
    pub epsilon: f64,
    pub termination: String,
    /// `sup_t` of each of [`SWEEP_MONITORS`], in that order; empty if the
    /// run failed to start.
    pub sups: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub members: Vec<SweepMember>,
    /// `max/min` across ε per monitor; infinite when the suprema change
    /// sign or vanish, NaN when a member failed.
    pub ratios: Vec<(String, f64)>,
}

impl SweepReport {
    pub fn ratio(&self, name: &str) -> Option<f64> {
        self.ratios.iter().find(|(n, _)| n == name).map(|&(_, r)| r)
    }

    /// Every member completed and every ratio is below `limit`.
    pub fn passes(&self, limit: f64) -> bool {
        self.members.iter().all(|m| m.error.is_none() && m.termination == "completed")
            && self.ratios.iter().all(|&(_, r)| r < limit)
    }

    pub fn to_text(&self, limit: f64) -> String {
        let mut s = String::new();
        for m in &self.members {
            s.push_str(&format!("eps {:.6e} {}", m.epsilon, m.termination));
            for (name, v) in SWEEP_MONITORS.iter().zip(&m.sups) {
                s.push_str(&format!(" {name}={v:.16e}"));
            }
            if let Some(e) = &m.error {
                s.push_str(&format!(" error={e}"));
            }
            s.push('\n');
        }
        for (name, r) in &self.ratios {
            let verdict = if *r < limit { "pass" } else { "fail" };
            s.push_str(&format!("ratio_{name} {verdict} {limit:.16e} {r:.16e}\n"));
        }
        s
    }
}

/// `sup_t` of the sweep monitors from a finished run.
pub fn sweep_sups(res: &RunResult) -> Vec<f64> {
    SWEEP_MONITORS
        .iter()
        .map(|name| {
            let series_max = res
                .series
                .iter()
                .filter_map(|r: &MonitorRecord| r.get(name))
                .fold(f64::NEG_INFINITY, f64::max);
            if *name == "sup_u" {
                series_max.max(res.stats.sup_u)
            } else {
                series_max
            }
        })
        .collect()
}

/// `max/min` of positive values; infinite when any is not positive.
fn spread(values: &[f64]) -> f64 {
    if values.iter().any(|v| v.is_nan()) {
        return f64::NAN;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo > 0.0 {
        hi / lo
    } else if lo == hi {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Merges finished members, in ε order, into a report.
pub fn sweep_report(members: Vec<SweepMember>) -> SweepReport {
    let ratios = SWEEP_MONITORS
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let col: Vec<f64> = members.iter().map(|m| m.sups.get(i).copied().unwrap_or(f64::NAN)).collect();
            (name.to_string(), spread(&col))
        })
        .collect();
    SweepReport { members, ratios }
}

/// Runs `sc` once per ε and compares the suprema. Members run on up to
/// `threads` threads and are merged in list order, so the report does not
/// depend on the thread count.
pub fn epsilon_sweep(sc: &Scenario, eps_list: &[f64], threads: usize) -> Result<SweepReport> {
    if eps_list.is_empty() {
        return Err(Error::InvalidParameter("empty epsilon list".into()));
    }
    if let Some(e) = eps_list.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {e}")));
    }
    let mcfg = sc.monitor_config();
    let member = |eps: f64| {
        let mut s = sc.clone();
        s.params.epsilon = eps;
        match s.execute(&mcfg, &mut []) {
            Ok(res) => SweepMember {
                epsilon: eps,
                termination: res.termination.name().to_string(),
                sups: sweep_sups(&res),
                error: None,
            },
            Err(e) => SweepMember {
                epsilon: eps,
                termination: "error".into(),
                sups: Vec::new(),
                error: Some(e.to_string()),
            },
        }
    };
    let threads = threads.max(1);
    let mut members = Vec::with_capacity(eps_list.len());
    for chunk in eps_list.chunks(threads) {
        if threads == 1 {
            members.push(member(chunk[0]));
            continue;
        }
        thread::scope(|scope| {
            let handles: Vec<_> = chunk.iter().map(|&e| scope.spawn(move || member(e))).collect();
            for h in handles {
                members.push(h.join().expect("sweep member panicked"));
            }
        });
    }
    Ok(sweep_report(members))
}
