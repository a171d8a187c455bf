//! Explicit adaptive time integration.
//!
//! Every accepted step keeps `u >= 0` and `v > 0` without clamping, so the
//! discrete mass identities hold to rounding. A step that would break
//! positivity, produce a non-finite value, or need a step below `dt_min`
//! ends the run with the matching [`Termination`].

use std::fmt;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::{write_snapshot, Grid2D};
use crate::model::{ModelParams, Rhs, RhsStats, State};
use crate::monitors::{record, MonitorConfig, MonitorRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Euler,
    Heun,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euler" => Ok(Scheme::Euler),
            "heun" => Ok(Scheme::Heun),
            other => Err(Error::Parse(format!("unknown scheme `{other}` (euler|heun)"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Euler => "euler",
            Scheme::Heun => "heun",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub scheme: Scheme,
    /// A run stops with a step collapse once `sup u` exceeds this.
    pub blowup_threshold: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            cfl: 0.4,
            dt_min: 1e-12,
            dt_max: 1e-2,
            scheme: Scheme::Euler,
            blowup_threshold: 1e6,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParameter(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < dt_min <= dt_max, got {} and {}",
                self.dt_min, self.dt_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub t_end: f64,
    /// Time between saved snapshots.
    pub snapshot_every: f64,
    /// Steps between monitor records.
    pub monitor_every: u64,
    pub window_tau: f64,
}

impl RunConfig {
    /// Window length defaults to `min{1, t_end/2}`.
    pub fn new(t_end: f64, snapshot_every: f64, monitor_every: u64) -> Self {
        RunConfig {
            t_end,
            snapshot_every,
            monitor_every,
            window_tau: default_window_tau(t_end),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.snapshot_every > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "snapshot_every must be positive, got {}",
                self.snapshot_every
            )));
        }
        if self.monitor_every == 0 {
            return Err(Error::InvalidParameter("monitor_every must be at least 1".into()));
        }
        if !(self.window_tau > 0.0 && self.window_tau < self.t_end) {
            return Err(Error::InvalidParameter(format!(
                "window_tau must lie in (0, t_end), got {}",
                self.window_tau
            )));
        }
        Ok(())
    }
}

pub fn default_window_tau(t_end: f64) -> f64 {
    (0.5 * t_end).min(1.0)
}

/// The four explicit step limits before the safety factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBudget {
    /// `h²/(4 D_max)`, infinite when the degenerate coefficient vanishes.
    pub u_diffusion: f64,
    /// `h²/4`.
    pub v_diffusion: f64,
    /// `1/R_max`.
    pub reaction: f64,
    /// `h/(2 W_max)`, infinite without drift.
    pub advection: f64,
}

impl StepBudget {
    pub fn new(h: f64, d_max: f64, r_max: f64, w_max: f64) -> Self {
        let guard = |limit: f64, rate: f64| if rate > 0.0 { limit / rate } else { f64::INFINITY };
        StepBudget {
            u_diffusion: guard(h * h / 4.0, d_max),
            v_diffusion: h * h / 4.0,
            reaction: guard(1.0, r_max),
            advection: guard(h / 2.0, w_max),
        }
    }

    pub fn min(&self) -> f64 {
        self.u_diffusion
            .min(self.v_diffusion)
            .min(self.reaction)
            .min(self.advection)
    }

    fn from_stats(g: &Grid2D, stats: &RhsStats, p: &ModelParams) -> Self {
        StepBudget::new(g.h(), stats.d_max, p.reaction_rate_bound(stats.u_max), stats.w_max)
    }
}

fn clamp_dt(budget: &StepBudget, c: &StepControl) -> Result<f64> {
    let dt = c.cfl * budget.min();
    if dt < c.dt_min {
        return Err(Error::StepCollapse { dt, dt_min: c.dt_min });
    }
    Ok(dt.min(c.dt_max))
}

/// `clamp(cfl · min(budgets), dt_min, dt_max)`, or a step collapse when the
/// unclamped value falls below `dt_min`.
pub fn stable_dt(s: &State, p: &ModelParams, c: &StepControl) -> Result<f64> {
    s.check_positivity()?;
    let g = *s.grid();
    let mut rhs = Rhs::new(&g);
    let stats = rhs.eval(&g, s.u.values(), s.v.values(), p);
    clamp_dt(&StepBudget::from_stats(&g, &stats, p), c)
}

/// The budget of a state, before the safety factor and clamping.
pub fn step_budget(s: &State, p: &ModelParams) -> Result<StepBudget> {
    s.check_positivity()?;
    let g = *s.grid();
    let mut rhs = Rhs::new(&g);
    let stats = rhs.eval(&g, s.u.values(), s.v.values(), p);
    Ok(StepBudget::from_stats(&g, &stats, p))
}

/// Reusable buffers for stepping one grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid2D,
    rhs: Rhs,
    stage: Rhs,
    u1: Vec<f64>,
    v1: Vec<f64>,
}

/// What one accepted step consumed: `∫ reaction` and `∫uv`, each averaged
/// over the stages of the scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub reaction: f64,
    pub consumption: f64,
    /// Statistics of the state the step started from.
    pub stats: RhsStats,
}

impl Stepper {
    pub fn new(grid: Grid2D) -> Self {
        Stepper {
            grid,
            rhs: Rhs::new(&grid),
            stage: Rhs::new(&grid),
            u1: vec![0.0; grid.cells()],
            v1: vec![0.0; grid.cells()],
        }
    }

    /// Evaluates the right-hand side at `s` and returns the stable step.
    fn prepare(&mut self, s: &State, p: &ModelParams, c: &StepControl) -> (RhsStats, Result<f64>) {
        let stats = self.rhs.eval(&self.grid, s.u.values(), s.v.values(), p);
        let dt = clamp_dt(&StepBudget::from_stats(&self.grid, &stats, p), c);
        (stats, dt)
    }

    /// Advances `s` in place by exactly `dt` using the prepared right-hand side.
    fn apply(&mut self, s: &mut State, dt: f64, p: &ModelParams, scheme: Scheme, stats: RhsStats) -> Result<StepReport> {
        let g = self.grid;
        let n = g.cells();
        match scheme {
            Scheme::Euler => {
                euler_update(&mut self.u1, &mut self.v1, s.u.values(), s.v.values(), &self.rhs, dt)?;
                std::mem::swap(&mut self.u1, s.u.raw_mut());
                std::mem::swap(&mut self.v1, s.v.raw_mut());
                s.t += dt;
                Ok(StepReport {
                    dt,
                    reaction: stats.reaction,
                    consumption: stats.cross_uv,
                    stats,
                })
            }
            Scheme::Heun => {
                let (u, v) = (s.u.values(), s.v.values());
                euler_update(&mut self.u1, &mut self.v1, u, v, &self.rhs, dt)?;
                let st = self.stage.eval(&g, &self.u1, &self.v1, p);
                for k in 0..n {
                    let u2 = self.u1[k] + dt * self.stage.du[k];
                    let v2 = self.v1[k] + dt * self.stage.dv[k];
                    self.u1[k] = 0.5 * (u[k] + u2);
                    self.v1[k] = 0.5 * (v[k] + v2);
                }
                check_new_state(&self.u1, &self.v1)?;
                std::mem::swap(&mut self.u1, s.u.raw_mut());
                std::mem::swap(&mut self.v1, s.v.raw_mut());
                s.t += dt;
                Ok(StepReport {
                    dt,
                    reaction: 0.5 * (stats.reaction + st.reaction),
                    consumption: 0.5 * (stats.cross_uv + st.cross_uv),
                    stats,
                })
            }
        }
    }

    /// One step of exactly `dt` (no stability check).
    pub fn step_with(&mut self, s: &mut State, dt: f64, p: &ModelParams, scheme: Scheme) -> Result<StepReport> {
        if s.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let stats = self.rhs.eval(&self.grid, s.u.values(), s.v.values(), p);
        self.apply(s, dt, p, scheme, stats)
    }

    /// One step of the stable size, never longer than `max_dt`. A remainder
    /// shorter than two stable steps is covered in two equal halves.
    pub fn step_adaptive(
        &mut self,
        s: &mut State,
        p: &ModelParams,
        c: &StepControl,
        max_dt: Option<f64>,
    ) -> Result<StepReport> {
        if s.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let (stats, dt) = self.prepare(s, p, c);
        let mut dt = dt?;
        if let Some(m) = max_dt {
            // split the last stretch evenly instead of leaving a sliver
            dt = if m <= dt {
                m
            } else if m < 2.0 * dt {
                0.5 * m
            } else {
                dt
            };
        }
        self.apply(s, dt, p, c.scheme, stats)
    }
}

fn euler_update(u1: &mut [f64], v1: &mut [f64], u: &[f64], v: &[f64], rhs: &Rhs, dt: f64) -> Result<()> {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the target feature was detected at runtime.
        return unsafe { euler_update_avx2(u1, v1, u, v, rhs, dt) };
    }
    euler_update_portable(u1, v1, u, v, rhs, dt)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn euler_update_avx2(u1: &mut [f64], v1: &mut [f64], u: &[f64], v: &[f64], rhs: &Rhs, dt: f64) -> Result<()> {
    euler_update_portable(u1, v1, u, v, rhs, dt)
}

#[inline(always)]
fn euler_update_portable(u1: &mut [f64], v1: &mut [f64], u: &[f64], v: &[f64], rhs: &Rhs, dt: f64) -> Result<()> {
    let n = u.len();
    let (u1, v1, du, dv, v) = (&mut u1[..n], &mut v1[..n], &rhs.du[..n], &rhs.dv[..n], &v[..n]);
    let (mut umin, mut vmin, mut sum) = (f64::INFINITY, f64::INFINITY, 0.0);
    for k in 0..n {
        let a = u[k] + dt * du[k];
        let b = v[k] + dt * dv[k];
        u1[k] = a;
        v1[k] = b;
        umin = umin.min(a);
        vmin = vmin.min(b);
        sum += a + b;
    }
    if umin >= 0.0 && vmin > 0.0 && sum.is_finite() {
        return Ok(());
    }
    check_new_state(u1, v1)
}

fn check_new_state(u: &[f64], v: &[f64]) -> Result<()> {
    for (k, (&a, &b)) in u.iter().zip(v).enumerate() {
        if !a.is_finite() {
            return Err(Error::NonFinite { index: k, value: a });
        }
        if !b.is_finite() {
            return Err(Error::NonFinite { index: k, value: b });
        }
        if a < 0.0 {
            return Err(Error::PositivityViolation { field: "u", index: k, value: a });
        }
        if b <= 0.0 {
            return Err(Error::PositivityViolation { field: "v", index: k, value: b });
        }
    }
    Ok(())
}

/// One step of exactly `dt` from `s`.
pub fn step(s: &State, dt: f64, p: &ModelParams, c: &StepControl) -> Result<State> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    s.check_positivity()?;
    let mut next = s.clone();
    Stepper::new(*s.grid()).step_with(&mut next, dt, p, c.scheme)?;
    Ok(next)
}

/// Receives monitor rows and snapshots as a run progresses.
pub trait Sink {
    fn monitor(&mut self, _rec: &MonitorRecord) -> Result<()> {
        Ok(())
    }
    fn snapshot(&mut self, _step: u64, _state: &State) -> Result<()> {
        Ok(())
    }
}

/// Writes `u_<step>.fld` / `v_<step>.fld` into a directory.
#[derive(Debug, Clone)]
pub struct SnapshotDir {
    pub dir: PathBuf,
}

impl Sink for SnapshotDir {
    fn snapshot(&mut self, step: u64, state: &State) -> Result<()> {
        write_snapshot(self.dir.join(format!("u_{step:08}.fld")), &state.u, state.t)?;
        write_snapshot(self.dir.join(format!("v_{step:08}.fld")), &state.v, state.t)
    }
}

/// Keeps every snapshot in memory.
#[derive(Debug, Clone, Default)]
pub struct SnapshotMemory {
    pub states: Vec<State>,
}

impl Sink for SnapshotMemory {
    fn snapshot(&mut self, _step: u64, state: &State) -> Result<()> {
        self.states.push(state.clone());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    StepCollapse { t: f64, detail: String },
    PositivityViolation { t: f64, field: &'static str, index: usize, value: f64 },
    NonFinite { t: f64, index: usize },
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::StepCollapse { .. } => "step_collapse",
            Termination::PositivityViolation { .. } => "positivity_violation",
            Termination::NonFinite { .. } => "non_finite",
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Completed => write!(f, "completed"),
            Termination::StepCollapse { t, detail } => write!(f, "step_collapse at t={t}: {detail}"),
            Termination::PositivityViolation { t, field, index, value } => {
                write!(f, "positivity_violation at t={t}: {field}[{index}] = {value:e}")
            }
            Termination::NonFinite { t, index } => write!(f, "non_finite at t={t}, cell {index}"),
        }
    }
}

/// Trajectory-wide quantities tracked at every step rather than at the
/// monitor cadence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStats {
    pub steps: u64,
    pub dt_min_used: f64,
    pub dt_max_used: f64,
    /// Largest `sup u` over every accepted state.
    pub sup_u: f64,
    /// `Σ dt · ∫uv` with the scheme's stage weights.
    pub consumption: f64,
    /// `Σ dt · ∫(ρu − μu^κ)` with the scheme's stage weights.
    pub reaction: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_state: State,
    pub termination: Termination,
    pub series: Vec<MonitorRecord>,
    pub stats: RunStats,
}

/// Advances `s0` to `r.t_end`. Steps are shortened to land exactly on every
/// snapshot time and on `t_end`. Runtime failures end the run and are
/// reported in [`RunResult::termination`].
pub fn run(
    s0: &State,
    p: &ModelParams,
    c: &StepControl,
    r: &RunConfig,
    mcfg: &MonitorConfig,
    sinks: &mut [&mut dyn Sink],
) -> Result<RunResult> {
    p.validate()?;
    c.validate()?;
    r.validate()?;
    mcfg.validate()?;
    s0.check_positivity()?;

    let mut s = s0.clone();
    let mut stepper = Stepper::new(*s.grid());
    let mut series = Vec::new();
    let mut stats = RunStats {
        steps: 0,
        dt_min_used: f64::INFINITY,
        dt_max_used: 0.0,
        sup_u: s.u.max(),
        consumption: 0.0,
        reaction: 0.0,
    };

    let emit_monitor = |s: &State, series: &mut Vec<MonitorRecord>, sinks: &mut [&mut dyn Sink]| -> Result<()> {
        let rec = record(s, mcfg)?;
        for sink in sinks.iter_mut() {
            sink.monitor(&rec)?;
        }
        series.push(rec);
        Ok(())
    };

    emit_monitor(&s, &mut series, sinks)?;
    for sink in sinks.iter_mut() {
        sink.snapshot(0, &s)?;
    }

    let mut snap_index: u64 = 1;
    let mut next_snap = r.snapshot_every.min(r.t_end);
    let mut last_monitor_step = 0;
    let mut termination = Termination::Completed;

    while s.t < r.t_end {
        let target = next_snap.min(r.t_end);
        let remaining = target - s.t;
        let report = match stepper.step_adaptive(&mut s, p, c, Some(remaining)) {
            Ok(rep) => rep,
            Err(e) => {
                termination = match e {
                    Error::StepCollapse { dt, dt_min } => Termination::StepCollapse {
                        t: s.t,
                        detail: format!("stable step {dt:e} below dt_min {dt_min:e}"),
                    },
                    Error::PositivityViolation { field, index, value } => {
                        Termination::PositivityViolation { t: s.t, field, index, value }
                    }
                    Error::NonFinite { index, .. } => Termination::NonFinite { t: s.t, index },
                    other => return Err(other),
                };
                break;
            }
        };
        stats.steps += 1;
        stats.dt_min_used = stats.dt_min_used.min(report.dt);
        stats.dt_max_used = stats.dt_max_used.max(report.dt);
        stats.consumption += report.dt * report.consumption;
        stats.reaction += report.dt * report.reaction;

        let landed = report.dt == remaining;
        if landed {
            s.t = target;
        }
        // the step report carries the maximum of the state it started from
        let done = s.t >= r.t_end;
        let sup_u = if done { s.u.max() } else { report.stats.u_max };
        stats.sup_u = stats.sup_u.max(sup_u);

        if stats.steps % r.monitor_every == 0 || done {
            emit_monitor(&s, &mut series, sinks)?;
            last_monitor_step = stats.steps;
        }
        if landed && target == next_snap {
            for sink in sinks.iter_mut() {
                sink.snapshot(stats.steps, &s)?;
            }
            snap_index += 1;
            next_snap = snap_index as f64 * r.snapshot_every;
            if next_snap > r.t_end && s.t < r.t_end {
                next_snap = r.t_end;
            }
        } else if done {
            for sink in sinks.iter_mut() {
                sink.snapshot(stats.steps, &s)?;
            }
        }
        if sup_u > c.blowup_threshold {
            termination = Termination::StepCollapse {
                t: s.t,
                detail: format!("sup u = {sup_u:e} exceeded {:e}", c.blowup_threshold),
            };
            break;
        }
    }
    if !termination.is_completed() && last_monitor_step != stats.steps {
        emit_monitor(&s, &mut series, sinks)?;
    }
    if stats.steps == 0 {
        stats.dt_min_used = 0.0;
    }

    Ok(RunResult {
        final_state: s,
        termination,
        series,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate, Field};
    use approx::assert_relative_eq;

    fn uniform(n: usize, u: f64, v: f64) -> State {
        let g = Grid2D::unit_square(n).unwrap();
        State::new(Field::constant(g, u).unwrap(), Field::constant(g, v).unwrap(), 0.0).unwrap()
    }

    #[test]
    fn stable_dt_examples() {
        let p = ModelParams::default();
        let c = StepControl::default();
        // h = 0.1
        let dt = stable_dt(&uniform(10, 0.0, 1.0), &p, &c).unwrap();
        assert_relative_eq!(dt, 0.001, max_relative = 1e-12);
        let b = step_budget(&uniform(10, 1.0, 1.0), &p).unwrap();
        assert_relative_eq!(b.u_diffusion, 0.0025, max_relative = 1e-12);
        assert_relative_eq!(b.reaction, 1.0 / 3.0, max_relative = 1e-12);
        assert_eq!(b.advection, f64::INFINITY);
        assert_relative_eq!(stable_dt(&uniform(10, 1.0, 1.0), &p, &c).unwrap(), 0.001, max_relative = 1e-12);
    }

    #[test]
    fn advective_budget_does_not_bind_at_w10() {
        let b = StepBudget::new(0.1, 1.0, 3.0, 10.0);
        assert_relative_eq!(b.advection, 0.005, max_relative = 1e-12);
        assert_relative_eq!(0.4 * b.min(), 0.001, max_relative = 1e-12);
    }

    #[test]
    fn step_collapse_below_dt_min() {
        let c = StepControl {
            dt_min: 1e-2,
            ..Default::default()
        };
        assert!(matches!(
            stable_dt(&uniform(10, 0.0, 1.0), &ModelParams::default(), &c),
            Err(Error::StepCollapse { .. })
        ));
    }

    #[test]
    fn equilibrium_and_uniform_reduction() {
        let p = ModelParams::default();
        let c = StepControl::default();
        let s = uniform(6, 0.0, 1.0);
        let n = step(&s, 0.37, &p, &c).unwrap();
        assert_eq!(n.u, s.u);
        assert_eq!(n.v, s.v);
        assert_eq!(n.t, 0.37);

        let n = step(&uniform(6, 1.0, 2.0), 0.001, &p, &c).unwrap();
        assert!(n.u.values().iter().all(|&x| x == 1.0));
        assert!(n.v.values().iter().all(|&x| (x - 1.998).abs() < 1e-15));
    }

    #[test]
    fn two_by_two_mass_update() {
        let g = Grid2D::unit_square(2).unwrap();
        let s = State::new(
            Field::new(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
            Field::constant(g, 1.0).unwrap(),
            0.0,
        )
        .unwrap();
        let n = step(&s, 1e-4, &ModelParams::default(), &StepControl::default()).unwrap();
        assert_relative_eq!(integrate(&n.u), 2.4995, max_relative = 1e-14);
    }

    #[test]
    fn oversized_step_is_reported_not_clamped() {
        let p = ModelParams::default();
        let c = StepControl::default();
        let g = Grid2D::unit_square(8).unwrap();
        let u = Field::from_fn(g, |x, _| if x < 0.5 { 0.0 } else { 3.0 }).unwrap();
        let v = Field::from_fn(g, |x, _| 0.1 + x).unwrap();
        let s = State::new(u, v, 0.0).unwrap();
        let err = step(&s, 10.0, &p, &c).unwrap_err();
        assert!(matches!(err, Error::PositivityViolation { .. }), "{err}");
    }

    #[test]
    fn run_lands_on_snapshot_times() {
        let p = ModelParams::default();
        let c = StepControl::default();
        let r = RunConfig::new(0.05, 0.0125, 7);
        let mut mem = SnapshotMemory::default();
        let res = run(&uniform(8, 0.5, 1.0), &p, &c, &r, &MonitorConfig::default(), &mut [&mut mem]).unwrap();
        assert!(res.termination.is_completed());
        let times: Vec<f64> = mem.states.iter().map(|s| s.t).collect();
        let expected: Vec<f64> = (0..5).map(|k| k as f64 * 0.0125).collect();
        assert_eq!(times, expected);
        assert_eq!(res.final_state.t, 0.05);
        assert_eq!(res.series.first().unwrap().t, 0.0);
        assert_eq!(res.series.last().unwrap().t, 0.05);
    }

    #[test]
    fn run_rejects_bad_configuration() {
        let p = ModelParams::default();
        let c = StepControl::default();
        let mut r = RunConfig::new(1.0, 0.1, 1);
        r.t_end = 0.0;
        let m = MonitorConfig::default();
        assert!(run(&uniform(4, 1.0, 1.0), &p, &c, &r, &m, &mut []).is_err());
        let r = RunConfig::new(1.0, 0.1, 0);
        assert!(run(&uniform(4, 1.0, 1.0), &p, &c, &r, &m, &mut []).is_err());
    }

    #[test]
    fn step_collapse_is_a_termination_reason() {
        let p = ModelParams::default();
        let c = StepControl {
            dt_min: 5e-3,
            ..Default::default()
        };
        let r = RunConfig::new(1.0, 0.5, 1);
        let res = run(&uniform(10, 1.0, 1.0), &p, &c, &r, &MonitorConfig::default(), &mut []).unwrap();
        assert_eq!(res.termination.name(), "step_collapse");
        assert_eq!(res.stats.steps, 0);
    }
}
