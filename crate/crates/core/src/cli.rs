//! Command-line front end.
//!
//! Exit codes: 0 when every required check passes, 1 when one fails, 2 on
//! usage, configuration or I/O errors. Diagnostics go to standard error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::grid::{read_snapshot, Grid2D};
use crate::inequalities::{
    check_lemma52_trajectory, estimate_sobolev_c1, lemma41_report, lemma42_report, sobolev_ratio,
    sobolev_report, FamilyKind, FieldFamily,
};
use crate::model::{ModelParams, State};
use crate::monitors::{check_bounds_with, write_csv, BoundOptions, InitialData, MonitorTable, Verdict};
use crate::ode_lemmas::{validate, Lemma, LemmaParams, LemmaSeries};
use crate::plot::line_chart;
use crate::scenarios::{epsilon_sweep, Scenario};
use crate::stepper::SnapshotDir;
use crate::weakform::{parse_modes, read_trajectory, residual_u, residual_v, TestFunction};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nutaxis", version, about = "Nutrient-taxis simulator and estimate checks")]
pub struct Cli {
    /// Base directory for outputs; relative output paths are resolved
    /// against it.
    #[arg(long, global = true)]
    pub outdir: Option<PathBuf>,
    /// Worker threads for commands with independent members.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Force single-threaded execution.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IneqCheck {
    Sobolev,
    L41,
    L42,
    L52,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Trig,
    Bumps,
    Noise,
}

impl From<Family> for FamilyKind {
    fn from(f: Family) -> Self {
        match f {
            Family::Trig => FamilyKind::Trig,
            Family::Bumps => FamilyKind::Bumps,
            Family::Noise => FamilyKind::Noise,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario; writes monitors.csv, bounds.txt, run.txt,
    /// scenario.cfg and snapshots/.
    Run { config: PathBuf },
    /// Run a scenario once per ε and compare monitor suprema.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// Largest admissible max/min ratio.
        #[arg(long, default_value_t = 2.0)]
        limit: f64,
    },
    /// Validate a Gronwall-type lemma on monitor columns.
    Gronwall {
        monitors: PathBuf,
        #[arg(long)]
        lemma: Lemma,
        /// `name=expr,...` where expr is a sum of `[coef*]column[^pow]` terms
        /// or numbers.
        #[arg(long)]
        map: String,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Empirical functional-inequality checks.
    Ineq {
        #[arg(value_enum)]
        check: IneqCheck,
        #[arg(long, value_enum, default_value_t = Family::Bumps)]
        family: Family,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Cells per side of the unit-square grid.
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 0.125)]
        eta: f64,
        /// Sobolev constant; defaults to twice the family estimate.
        #[arg(long)]
        c1: Option<f64>,
        /// Trajectory for the γ check.
        #[arg(long)]
        snapshots: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![4u32, 6])]
        q: Vec<u32>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Weak-form residuals of a stored trajectory.
    Weakcheck {
        #[arg(long)]
        snapshots: PathBuf,
        /// `KX,KY;KX,KY;...`
        #[arg(long)]
        modes: String,
        #[arg(long)]
        tcut: f64,
        /// Cutoff transition width; defaults to `0.1·tcut`.
        #[arg(long)]
        width: Option<f64>,
        /// Scenario file for the model parameters; defaults to scenario.cfg
        /// next to the snapshot directory.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// SVG line chart of monitor columns against t.
    Plot {
        monitors: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        cols: Vec<String>,
    },
    /// Aggregate every verdict in a run directory.
    Report { dir: PathBuf },
}

/// A failed required check, as opposed to an error.
struct Outcome {
    ok: bool,
}

pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(Outcome { ok: true }) => EXIT_OK,
        Ok(Outcome { ok: false }) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn threads(cli: &Cli) -> usize {
    if cli.deterministic {
        1
    } else {
        cli.threads.max(1)
    }
}

fn out_path(cli: &Cli, p: &Path) -> PathBuf {
    match &cli.outdir {
        Some(dir) => dir.join(p),
        None => p.to_path_buf(),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Prints report text and writes it when a path is given.
fn emit(cli: &Cli, report: &Option<PathBuf>, text: &str) -> Result<()> {
    print!("{text}");
    if let Some(p) = report {
        write_text(&out_path(cli, p), text)?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Run { config } => cmd_run(cli, config),
        Command::Sweep { config, eps, limit } => {
            let sc = Scenario::read(config)?;
            let outdir = cli.outdir.clone().unwrap_or_else(|| sc.outdir.clone());
            let rep = epsilon_sweep(&sc, eps, threads(cli))?;
            let text = rep.to_text(*limit);
            print!("{text}");
            write_text(&outdir.join("sweep.txt"), &text)?;
            Ok(Outcome { ok: rep.passes(*limit) })
        }
        Command::Gronwall { monitors, lemma, map, tau, a, b, report } => {
            let table = MonitorTable::read(monitors)?;
            let series = lemma_series(&table, *lemma, map, *tau)?;
            let v = validate(&series, *lemma, &LemmaParams { a: *a, b: *b })?;
            let verdict = if !v.hypotheses_hold {
                Verdict::Skip
            } else if v.conclusion_holds {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            let mut text = format!(
                "{} {} {:.16e} {:.16e} {:.16e}\n",
                v.lemma, verdict, v.bound, v.max_z, v.max_violation
            );
            text.push_str(&format!("# hypotheses_hold {}\n", v.hypotheses_hold));
            text.push_str(&format!("# diff_violation {:.16e}\n", v.diff_violation));
            for (name, s) in &v.window_sups {
                text.push_str(&format!("# window_{name} {s:.16e}\n"));
            }
            emit(cli, report, &text)?;
            Ok(Outcome { ok: verdict != Verdict::Fail })
        }
        Command::Ineq { check, family, count, seed, n, p, eta, c1, snapshots, q, report } => {
            let grid = Grid2D::unit_square(*n)?;
            let fam = FieldFamily::new((*family).into(), *count, *seed);
            let mut text = String::new();
            let mut ok = true;
            match check {
                IneqCheck::Sobolev => {
                    let rep = sobolev_report(&fam, &grid)?;
                    text.push_str(&rep.line());
                    text.push('\n');
                    let exact = scale_invariant(&fam, &grid)?;
                    ok &= exact;
                    text.push_str(&format!("sobolev_scale {}\n", if exact { "pass" } else { "fail" }));
                }
                IneqCheck::L41 => {
                    let c1 = match c1 {
                        Some(c) => *c,
                        None => 2.0 * estimate_sobolev_c1(&fam, &grid)?,
                    };
                    let rep = lemma41_report(&fam, &grid, *p, c1)?;
                    ok &= rep.pass != Some(false);
                    text.push_str(&rep.line());
                    text.push_str(&format!("\n# c1 {c1:.16e}\n"));
                }
                IneqCheck::L42 => {
                    let rep = lemma42_report(&fam, &grid, *p, *eta)?;
                    text.push_str(&rep.line());
                    text.push('\n');
                }
                IneqCheck::L52 => {
                    let dir = snapshots
                        .as_ref()
                        .ok_or_else(|| Error::InvalidParameter("l52 needs --snapshots".into()))?;
                    let states = read_trajectory(dir)?;
                    for &qq in q {
                        let rep = check_lemma52_trajectory(&states, qq)?;
                        ok &= rep.gamma > 0.0;
                        text.push_str(&rep.line());
                        text.push('\n');
                    }
                }
            }
            emit(cli, report, &text)?;
            Ok(Outcome { ok })
        }
        Command::Weakcheck { snapshots, modes, tcut, width, config, tol, report } => {
            let states = read_trajectory(snapshots)?;
            let params = weak_params(snapshots, config.as_deref())?;
            let mut text = String::new();
            let mut ok = true;
            for (kx, ky) in parse_modes(modes)? {
                let tf = match width {
                    Some(w) => TestFunction::new(kx, ky, *tcut, *w)?,
                    None => TestFunction::with_default_width(kx, ky, *tcut)?,
                };
                for (field, r) in [("u", residual_u(&states, &tf, &params)?), ("v", residual_v(&states, &tf)?)] {
                    let pass = r <= *tol;
                    ok &= pass;
                    text.push_str(&format!(
                        "weak_{field}_{kx}_{ky} {} {tol:.16e} {r:.16e}\n",
                        if pass { "pass" } else { "fail" }
                    ));
                }
            }
            emit(cli, report, &text)?;
            Ok(Outcome { ok })
        }
        Command::Plot { monitors, out, cols } => {
            let table = MonitorTable::read(monitors)?;
            let t = table.column("t")?;
            let series = cols
                .iter()
                .map(|c| Ok((c.clone(), table.column(c)?)))
                .collect::<Result<Vec<_>>>()?;
            write_text(&out_path(cli, out), &line_chart("t", &t, &series)?)?;
            Ok(Outcome { ok: true })
        }
        Command::Report { dir } => {
            let entries = aggregate(dir)?;
            let mut counts = BTreeMap::new();
            for (src, name, v) in &entries {
                println!("{src} {name} {v}");
                *counts.entry(v.as_str()).or_insert(0usize) += 1;
            }
            let fails = counts.get("fail").copied().unwrap_or(0);
            let ok = fails == 0 && !entries.is_empty();
            println!(
                "overall {} pass={} fail={} info={} skip={}",
                if ok { "pass" } else { "fail" },
                counts.get("pass").copied().unwrap_or(0),
                fails,
                counts.get("info").copied().unwrap_or(0),
                counts.get("skip").copied().unwrap_or(0)
            );
            if entries.is_empty() {
                eprintln!("no verdicts found in {}", dir.display());
            }
            Ok(Outcome { ok })
        }
    }
}

fn cmd_run(cli: &Cli, config: &Path) -> Result<Outcome> {
    let mut sc = Scenario::read(config)?;
    if let Some(d) = &cli.outdir {
        sc.outdir = d.clone();
    }
    let out = sc.outdir.clone();
    let snaps = out.join("snapshots");
    fs::create_dir_all(&snaps).map_err(|e| Error::io(&snaps, e))?;
    write_text(&out.join("scenario.cfg"), &sc.to_config())?;

    let s0 = sc.build()?;
    let mcfg = sc.monitor_config();
    let mut sink = SnapshotDir { dir: snaps };
    let res = sc.execute(&mcfg, &mut [&mut sink])?;
    write_csv(out.join("monitors.csv"), &res.series, &mcfg.p_list)?;
    let opts = BoundOptions {
        dt_max: res.stats.dt_max_used,
        sup_u: Some(res.stats.sup_u),
    };
    let bounds = check_bounds_with(&res.series, InitialData { u0: &s0.u, v0: &s0.v }, &sc.params, &mcfg, &opts)?;
    bounds.write(out.join("bounds.txt"))?;
    let completed = res.termination.is_completed();
    let run_txt = format!(
        "termination {} {}\nsteps info {}\ndt_min_used info {:.16e}\ndt_max_used info {:.16e}\nsup_u info {:.16e}\n",
        if completed { "pass" } else { "fail" },
        res.termination.name(),
        res.stats.steps,
        res.stats.dt_min_used,
        res.stats.dt_max_used,
        res.stats.sup_u
    );
    write_text(&out.join("run.txt"), &run_txt)?;
    eprintln!("{}: {} after {} steps", sc.name, res.termination, res.stats.steps);
    for e in bounds.failures() {
        eprintln!("bound {} failed: asserted {:e}, observed {:e}", e.name, e.asserted, e.observed);
    }
    Ok(Outcome { ok: completed && bounds.all_pass() })
}

fn scale_invariant(fam: &FieldFamily, grid: &Grid2D) -> Result<bool> {
    for f in fam.fields(grid)? {
        let base = sobolev_ratio(&f)?;
        for k in [0.25, 2.0, 1024.0] {
            if sobolev_ratio(&f.map(|x| k * x)?)? != base {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn weak_params(snapshots: &Path, config: Option<&Path>) -> Result<ModelParams> {
    if let Some(c) = config {
        return Ok(Scenario::read(c)?.params);
    }
    let beside = snapshots
        .canonicalize()
        .ok()
        .and_then(|p| p.parent().map(|d| d.join("scenario.cfg")));
    match beside {
        Some(p) if p.is_file() => Ok(Scenario::read(p)?.params),
        _ => Ok(ModelParams::default()),
    }
}

/// Evaluates `[coef*]column[^pow] + ...` on a monitor table.
pub fn eval_expr(table: &MonitorTable, expr: &str) -> Result<Vec<f64>> {
    let n = table.rows.len();
    let mut total = vec![0.0; n];
    for term in expr.split('+').map(str::trim) {
        if term.is_empty() {
            return Err(Error::Parse(format!("empty term in {expr:?}")));
        }
        if let Ok(c) = term.parse::<f64>() {
            total.iter_mut().for_each(|x| *x += c);
            continue;
        }
        let (coef, rest) = match term.split_once('*') {
            Some((c, r)) => (
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad coefficient in {term:?}")))?,
                r.trim(),
            ),
            None => (1.0, term),
        };
        let (col, pow) = match rest.split_once('^') {
            Some((c, p)) => (
                c.trim(),
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad exponent in {term:?}")))?,
            ),
            None => (rest, 1.0),
        };
        let values = table.column(col)?;
        for (t, v) in total.iter_mut().zip(values) {
            *t += coef * if pow == 1.0 { v } else { v.powf(pow) };
        }
    }
    Ok(total)
}

fn lemma_series(table: &MonitorTable, lemma: Lemma, map: &str, tau: f64) -> Result<LemmaSeries> {
    let mut exprs = BTreeMap::new();
    for item in map.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("map entry {item:?} is not name=expr")))?;
        let k = k.trim();
        if k != "z" && !lemma.aux_names().contains(&k) {
            return Err(Error::Parse(format!(
                "{lemma} takes z and {:?}, got {k:?}",
                lemma.aux_names()
            )));
        }
        exprs.insert(k.to_string(), v.trim().to_string());
    }
    let z = exprs
        .get("z")
        .ok_or_else(|| Error::Parse("map needs z=...".into()))?;
    let mut series = LemmaSeries::new(table.column("t")?, eval_expr(table, z)?, tau)?;
    for name in lemma.aux_names() {
        let e = exprs
            .get(*name)
            .ok_or_else(|| Error::Parse(format!("{lemma} needs {name}=... in the map")))?;
        series = series.with(name, eval_expr(table, e)?)?;
    }
    Ok(series)
}

/// Reads `key verdict ...` value from run.txt.
fn run_value(text: &str, key: &str) -> Option<f64> {
    text.lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>())
        .find(|p| p.first() == Some(&key))
        .and_then(|p| p.get(2).and_then(|v| v.parse().ok()))
}

/// Collects `(source, name, verdict)` from every `*.txt` report in `dir`
/// and re-derives the bound verdicts from the stored monitors and initial
/// snapshots when present.
pub fn aggregate(dir: &Path) -> Result<Vec<(String, String, Verdict)>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt") && p.is_file())
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in &files {
        let text = fs::read_to_string(f).map_err(|e| Error::io(f, e))?;
        let src = f.file_name().unwrap_or_default().to_string_lossy().to_string();
        for line in text.lines().filter(|l| !l.trim_start().starts_with('#')) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if let [name, verdict, ..] = parts.as_slice() {
                if let Ok(v) = verdict.parse::<Verdict>() {
                    out.push((src.clone(), name.to_string(), v));
                }
            }
        }
    }
    let (csv, cfg) = (dir.join("monitors.csv"), dir.join("scenario.cfg"));
    let snaps = dir.join("snapshots");
    let (u0, v0) = (snaps.join("u_00000000.fld"), snaps.join("v_00000000.fld"));
    if csv.is_file() && cfg.is_file() && u0.is_file() && v0.is_file() {
        let sc = Scenario::read(&cfg)?;
        let series = MonitorTable::read(&csv)?.records()?;
        let s0 = State::new(read_snapshot(&u0)?.0, read_snapshot(&v0)?.0, 0.0)?;
        let run_txt = fs::read_to_string(dir.join("run.txt")).unwrap_or_default();
        let opts = BoundOptions {
            dt_max: run_value(&run_txt, "dt_max_used").unwrap_or(0.0),
            sup_u: run_value(&run_txt, "sup_u"),
        };
        let mcfg = sc.monitor_config();
        let rep = check_bounds_with(&series, InitialData { u0: &s0.u, v0: &s0.v }, &sc.params, &mcfg, &opts)?;
        for e in rep.entries {
            out.push(("monitors.csv".to_string(), e.name, e.verdict));
        }
    }
    Ok(out)
}
