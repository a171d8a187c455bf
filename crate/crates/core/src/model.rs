//! Discrete right-hand sides of the regularized system
//!
//! ```text
//! u_t = ∇·(uv∇u) − ∇·(u²v∇v) + ρu − μu^κ
//! v_t = Δv − uv
//! ```
//!
//! Face fluxes follow the convention `u_t = div F + reaction`, so a face
//! flux `F = (uv)∇u − u²v∇v` is oriented along the positive axis and a
//! negative value moves mass toward increasing x (or y).

use crate::error::{Error, Result};
use crate::grid::{divergence, face_gradients, Field, FaceField, Grid2D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Regularization level added to the initial density.
    pub epsilon: f64,
    pub rho: f64,
    pub mu: f64,
    pub kappa: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            epsilon: 0.0,
            rho: 1.0,
            mu: 1.0,
            kappa: 2.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.rho > 0.0 && self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rho and mu must be positive, got rho={} mu={}",
                self.rho, self.mu
            )));
        }
        if !(self.kappa >= 2.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be >= 2, got {}",
                self.kappa
            )));
        }
        Ok(())
    }

    /// Logistic source `ρu − μu^κ`; the quadratic case avoids `powf`.
    #[inline]
    pub fn reaction(&self, u: f64) -> f64 {
        let decay = if self.kappa == 2.0 {
            u * u
        } else {
            u.powf(self.kappa)
        };
        self.rho * u - self.mu * decay
    }

    /// Lipschitz budget `ρ + μκ u_max^{κ−1}` of the source on `[0, u_max]`.
    pub fn reaction_rate_bound(&self, u_max: f64) -> f64 {
        let slope = if self.kappa == 2.0 {
            u_max
        } else {
            u_max.powf(self.kappa - 1.0)
        };
        self.rho + self.mu * self.kappa * slope
    }
}

/// Density `u`, nutrient `v` and the simulation clock.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field,
    pub v: Field,
    pub t: f64,
}

impl State {
    /// Builds a state, enforcing `u >= 0`, `v > 0` and a shared grid.
    pub fn new(u: Field, v: Field, t: f64) -> Result<Self> {
        u.same_grid(&v)?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("time must be >= 0, got {t}")));
        }
        let s = State { u, v, t };
        s.check_positivity()?;
        Ok(s)
    }

    pub fn grid(&self) -> &Grid2D {
        self.u.grid()
    }

    pub(crate) fn check_positivity(&self) -> Result<()> {
        if let Some(index) = self.u.values().iter().position(|&x| x < 0.0) {
            return Err(Error::PositivityViolation {
                field: "u",
                index,
                value: self.u.values()[index],
            });
        }
        if let Some(index) = self.v.values().iter().position(|&x| x <= 0.0) {
            return Err(Error::PositivityViolation {
                field: "v",
                index,
                value: self.v.values()[index],
            });
        }
        Ok(())
    }

    /// The state reflected in x.
    pub fn mirror_x(&self) -> State {
        State {
            u: self.u.mirror_x(),
            v: self.v.mirror_x(),
            t: self.t,
        }
    }

    pub fn mirror_y(&self) -> State {
        State {
            u: self.u.mirror_y(),
            v: self.v.mirror_y(),
            t: self.t,
        }
    }
}

/// Maxima feeding the explicit step budget, plus the source integrals of
/// the evaluated state.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RhsStats {
    /// Largest diffusive coefficient `A(u)·A(v)` over interior faces.
    pub d_max: f64,
    /// Largest taxis drift speed `|U_up·A(v)·∇v|` over interior faces.
    pub w_max: f64,
    /// Largest cell value of u.
    pub u_max: f64,
    /// `∫uv` by the midpoint rule.
    pub cross_uv: f64,
    /// `∫(ρu − μu^κ)` by the midpoint rule.
    pub reaction: f64,
}

/// One interior face: returns `(flux, diffusive coefficient, drift speed)`.
///
/// `l`/`r` are the lower/upper neighbours along the face normal and
/// `rh` is the reciprocal spacing.
#[inline(always)]
fn face_flux(ul: f64, ur: f64, vl: f64, vr: f64, rh: f64) -> (f64, f64, f64) {
    let au = 0.5 * (ul + ur);
    let av = 0.5 * (vl + vr);
    let gu = (ur - ul) * rh;
    let gv = (vr - vl) * rh;
    // drift runs up the nutrient gradient; the donor is the cell it leaves
    let up = if gv > 0.0 { ul } else { ur };
    let drift = up * av * gv;
    let d = au * av;
    (d * gu - up * drift, d, drift.abs())
}

/// Fluxes and v-differences across one line of faces: `l`/`r` hold the
/// values on either side, results go to `flux` and `dv` (the latter as
/// `(vr − vl)·rh²`, ready for the Laplacian).
#[inline(always)]
fn face_line(
    ul: &[f64],
    ur: &[f64],
    vl: &[f64],
    vr: &[f64],
    rh: f64,
    flux: &mut [f64],
    dv: &mut [f64],
    stats: &mut RhsStats,
) {
    let rh2 = rh * rh;
    let n = flux.len();
    let (ul, ur, vl, vr, dv) = (&ul[..n], &ur[..n], &vl[..n], &vr[..n], &mut dv[..n]);
    let (mut d_max, mut w_max) = (stats.d_max, stats.w_max);
    for k in 0..n {
        let (f, d, w) = face_flux(ul[k], ur[k], vl[k], vr[k], rh);
        flux[k] = f;
        dv[k] = (vr[k] - vl[k]) * rh2;
        d_max = d_max.max(d);
        w_max = w_max.max(w);
    }
    stats.d_max = d_max;
    stats.w_max = w_max;
}

/// Scratch buffers for repeated right-hand-side evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Rhs {
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    // x-face fluxes and v-differences of the current row
    xf: Vec<f64>,
    xd: Vec<f64>,
    // y-faces below and above the current row
    bot_f: Vec<f64>,
    bot_d: Vec<f64>,
    top_f: Vec<f64>,
    top_d: Vec<f64>,
}

impl Rhs {
    pub fn new(grid: &Grid2D) -> Self {
        let (nx, n) = (grid.nx(), grid.cells());
        Rhs {
            du: vec![0.0; n],
            dv: vec![0.0; n],
            xf: vec![0.0; nx + 1],
            xd: vec![0.0; nx + 1],
            bot_f: vec![0.0; nx],
            bot_d: vec![0.0; nx],
            top_f: vec![0.0; nx],
            top_d: vec![0.0; nx],
        }
    }

    /// Fills `du` with div F + reaction and `dv` with Δv − uv in a single
    /// sweep over rows; returns the face maxima used by the step budget.
    pub fn eval(&mut self, g: &Grid2D, u: &[f64], v: &[f64], p: &ModelParams) -> RhsStats {
        #[cfg(target_arch = "x86_64")]
        {
            // SAFETY: each path runs only when its target feature was
            // detected at runtime.
            if std::arch::is_x86_feature_detected!("avx512f") {
                return unsafe { self.eval_avx512(g, u, v, p) };
            }
            if std::arch::is_x86_feature_detected!("avx2") {
                return unsafe { self.eval_avx2(g, u, v, p) };
            }
        }
        self.eval_portable(g, u, v, p)
    }

    // The same arithmetic as the portable path compiled for wider vectors.
    // Elementwise operations and fixed-order reductions make the results
    // bitwise identical on every path.
    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx512f")]
    unsafe fn eval_avx512(&mut self, g: &Grid2D, u: &[f64], v: &[f64], p: &ModelParams) -> RhsStats {
        self.eval_portable(g, u, v, p)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn eval_avx2(&mut self, g: &Grid2D, u: &[f64], v: &[f64], p: &ModelParams) -> RhsStats {
        self.eval_portable(g, u, v, p)
    }

    #[inline(always)]
    fn eval_portable(&mut self, g: &Grid2D, u: &[f64], v: &[f64], p: &ModelParams) -> RhsStats {
        if p.kappa == 2.0 {
            self.sweep::<true>(g, u, v, p)
        } else {
            self.sweep::<false>(g, u, v, p)
        }
    }

    #[inline(always)]
    fn sweep<const QUADRATIC: bool>(&mut self, g: &Grid2D, u: &[f64], v: &[f64], p: &ModelParams) -> RhsStats {
        let (nx, ny) = (g.nx(), g.ny());
        let (rhx, rhy) = (1.0 / g.hx(), 1.0 / g.hy());
        let (rho, mu, kappa) = (p.rho, p.mu, p.kappa);
        let mut stats = RhsStats::default();
        let mut u_max = 0.0f64;
        let mut cross = 0.0;
        let mut reaction = 0.0;

        self.bot_f.fill(0.0);
        self.bot_d.fill(0.0);
        self.xf[0] = 0.0;
        self.xf[nx] = 0.0;
        self.xd[0] = 0.0;
        self.xd[nx] = 0.0;
        for j in 0..ny {
            let row = j * nx..(j + 1) * nx;
            let (ur, vr) = (&u[row.clone()], &v[row.clone()]);
            face_line(
                &ur[..nx - 1],
                &ur[1..],
                &vr[..nx - 1],
                &vr[1..],
                rhx,
                &mut self.xf[1..nx],
                &mut self.xd[1..nx],
                &mut stats,
            );
            if j + 1 < ny {
                let next = (j + 1) * nx..(j + 2) * nx;
                face_line(ur, &u[next.clone()], vr, &v[next], rhy, &mut self.top_f, &mut self.top_d, &mut stats);
            } else {
                self.top_f.fill(0.0);
                self.top_d.fill(0.0);
            }

            let du = &mut self.du[row.clone()];
            let dv = &mut self.dv[row];
            let (xf, xd) = (&self.xf[..nx + 1], &self.xd[..nx + 1]);
            let (bf, bd, tf, td) = (&self.bot_f[..nx], &self.bot_d[..nx], &self.top_f[..nx], &self.top_d[..nx]);
            for i in 0..nx {
                let uc = ur[i];
                let decay = if QUADRATIC { uc * uc } else { uc.powf(kappa) };
                let r = rho * uc - mu * decay;
                du[i] = (xf[i + 1] - xf[i]) * rhx + (tf[i] - bf[i]) * rhy + r;
                let uv = uc * vr[i];
                dv[i] = (xd[i + 1] - xd[i]) + (td[i] - bd[i]) - uv;
                cross += uv;
                reaction += r;
                if uc > u_max {
                    u_max = uc;
                }
            }
            std::mem::swap(&mut self.bot_f, &mut self.top_f);
            std::mem::swap(&mut self.bot_d, &mut self.top_d);
        }
        let da = g.cell_area();
        stats.u_max = u_max;
        stats.cross_uv = cross * da;
        stats.reaction = reaction * da;
        stats
    }
}

/// Face fluxes of the u-equation; boundary faces stay zero.
fn fluxes(g: &Grid2D, u: &[f64], v: &[f64]) -> FaceField {
    let (nx, ny) = (g.nx(), g.ny());
    let (rhx, rhy) = (1.0 / g.hx(), 1.0 / g.hy());
    let mut flux = FaceField::zeros(g);
    for j in 0..ny {
        for i in 1..nx {
            let (l, r) = (j * nx + i - 1, j * nx + i);
            flux.x[g.x_face(i, j)] = face_flux(u[l], u[r], v[l], v[r], rhx).0;
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let (l, r) = ((j - 1) * nx + i, j * nx + i);
            flux.y[g.y_face(i, j)] = face_flux(u[l], u[r], v[l], v[r], rhy).0;
        }
    }
    flux
}

/// Total u-flux `A(u)A(v)∇u − U_up² A(v)∇v` on every face.
pub fn flux_u(s: &State) -> Result<FaceField> {
    s.check_positivity()?;
    Ok(fluxes(s.grid(), s.u.values(), s.v.values()))
}

/// Diffusive and taxis parts of the u-flux, separately.
pub fn flux_u_parts(s: &State) -> Result<(FaceField, FaceField)> {
    s.check_positivity()?;
    let g = *s.grid();
    let (u, v) = (s.u.values(), s.v.values());
    let gu = face_gradients(&s.u);
    let gv = face_gradients(&s.v);
    let mut diff = FaceField::zeros(&g);
    let mut taxis = FaceField::zeros(&g);
    let face = |l: usize, r: usize, gu: f64, gv: f64| {
        let av = 0.5 * (v[l] + v[r]);
        let up = if gv > 0.0 { u[l] } else { u[r] };
        (0.5 * (u[l] + u[r]) * av * gu, -up * up * av * gv)
    };
    for j in 0..g.ny() {
        for i in 1..g.nx() {
            let f = g.x_face(i, j);
            (diff.x[f], taxis.x[f]) = face(g.idx(i - 1, j), g.idx(i, j), gu.x[f], gv.x[f]);
        }
    }
    for j in 1..g.ny() {
        for i in 0..g.nx() {
            let f = g.y_face(i, j);
            (diff.y[f], taxis.y[f]) = face(g.idx(i, j - 1), g.idx(i, j), gu.y[f], gv.y[f]);
        }
    }
    Ok((diff, taxis))
}

/// `div F + ρu − μu^κ` cellwise.
pub fn rhs_u(s: &State, p: &ModelParams) -> Result<Field> {
    let g = *s.grid();
    let flux = flux_u(s)?;
    let mut out = divergence(&g, &flux);
    for (o, &u) in out.iter_mut().zip(s.u.values()) {
        *o += p.reaction(u);
    }
    Field::new(g, out)
}

/// Five-point Neumann Laplacian of v minus the consumption `uv`.
pub fn rhs_v(s: &State) -> Result<Field> {
    s.check_positivity()?;
    let g = *s.grid();
    let mut out = laplacian(&s.v);
    for ((o, &u), &v) in out.iter_mut().zip(s.u.values()).zip(s.v.values()) {
        *o -= u * v;
    }
    Field::new(g, out)
}

/// Conservative zero-flux Laplacian.
pub fn laplacian(f: &Field) -> Vec<f64> {
    divergence(f.grid(), &face_gradients(f))
}
