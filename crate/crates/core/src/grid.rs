//! Rectangle geometry, cell-centered fields and the discrete operators
//! shared by the solver and every monitored functional.
//!
//! Cells are stored row-major: cell `(i, j)` (column `i` along x, row `j`
//! along y) lives at `j * nx + i`. Face arrays follow the same convention:
//! x-face `(i, j)` sits on the left edge of cell `(i, j)` and there are
//! `nx + 1` of them per row; y-face `(i, j)` sits on the bottom edge of cell
//! `(i, j)` and there are `ny + 1` rows of them. Boundary faces always carry
//! a zero gradient (ghost reflection of the zero-flux condition).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Cell-centered discretization of `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    hx: f64,
    hy: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2x2 cells, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "side lengths must be positive and finite, got {lx} x {ly}"
            )));
        }
        Ok(Grid2D {
            nx,
            ny,
            lx,
            ly,
            hx: lx / nx as f64,
            hy: ly / ny as f64,
        })
    }

    /// `n x n` cells on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn hx(&self) -> f64 {
        self.hx
    }
    pub fn hy(&self) -> f64 {
        self.hy
    }

    /// Smallest mesh width.
    pub fn h(&self) -> f64 {
        self.hx.min(self.hy)
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// The discrete |Ω|.
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn x_faces(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn y_faces(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x_face(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn y_face(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Coordinates of the center of cell `(i, j)`.
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx, (j as f64 + 0.5) * self.hy)
    }
}

/// One scalar value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid2D,
    values: Vec<f64>,
}

impl Field {
    /// Wraps `values`, rejecting a length mismatch or any non-finite entry.
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::LengthMismatch {
                expected: grid.cells(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: Grid2D, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.cells()])
    }

    /// Samples `f(x, y)` at cell centers.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                values.push(f(x, y));
            }
        }
        Self::new(grid, values)
    }

    /// Skips validation; callers must check finiteness themselves.
    pub(crate) fn from_raw(grid: Grid2D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.cells());
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Direct buffer access for in-place stepping; length must not change.
    pub(crate) fn raw_mut(&mut self) -> &mut Vec<f64> {
        &mut self.values
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cellwise image under `f`, validated.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid, self.values.iter().map(|&x| f(x)).collect())
    }

    /// Mirror image in x: column `i` becomes column `nx - 1 - i`.
    pub fn mirror_x(&self) -> Field {
        let g = self.grid;
        let mut out = vec![0.0; g.cells()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                out[g.idx(g.nx - 1 - i, j)] = self.values[g.idx(i, j)];
            }
        }
        Field::from_raw(g, out)
    }

    /// Mirror image in y.
    pub fn mirror_y(&self) -> Field {
        let g = self.grid;
        let mut out = vec![0.0; g.cells()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                out[g.idx(i, g.ny - 1 - j)] = self.values[g.idx(i, j)];
            }
        }
        Field::from_raw(g, out)
    }

    pub fn check_nonnegative(&self) -> Result<()> {
        match self.values.iter().position(|&x| x < 0.0) {
            Some(index) => Err(Error::NegativeField {
                index,
                value: self.values[index],
            }),
            None => Ok(()),
        }
    }

    pub fn check_positive(&self) -> Result<()> {
        match self.values.iter().position(|&x| x <= 0.0) {
            Some(index) => Err(Error::NonpositiveField {
                index,
                value: self.values[index],
            }),
            None => Ok(()),
        }
    }

    pub(crate) fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Values living on x-faces and y-faces (gradients or fluxes).
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: &Grid2D) -> Self {
        FaceField {
            x: vec![0.0; grid.x_faces()],
            y: vec![0.0; grid.y_faces()],
        }
    }
}

/// Midpoint rule over raw cell values, summed in cell order.
pub fn integrate_values(grid: &Grid2D, values: &[f64]) -> f64 {
    grid.cell_area() * values.iter().sum::<f64>()
}

/// `hx * hy * sum(f)`; exact for cellwise-constant integrands.
pub fn integrate(f: &Field) -> f64 {
    integrate_values(&f.grid, &f.values)
}

/// Face difference quotients with zero gradient on boundary faces.
pub fn face_gradients(f: &Field) -> FaceField {
    let g = &f.grid;
    let mut out = FaceField::zeros(g);
    face_gradients_into(g, &f.values, &mut out);
    out
}

pub(crate) fn face_gradients_into(g: &Grid2D, f: &[f64], out: &mut FaceField) {
    let (nx, ny) = (g.nx, g.ny);
    let (rhx, rhy) = (1.0 / g.hx, 1.0 / g.hy);
    for j in 0..ny {
        let row = &f[j * nx..(j + 1) * nx];
        let faces = &mut out.x[j * (nx + 1)..(j + 1) * (nx + 1)];
        faces[0] = 0.0;
        faces[nx] = 0.0;
        for i in 1..nx {
            faces[i] = (row[i] - row[i - 1]) * rhx;
        }
    }
    out.y[..nx].fill(0.0);
    out.y[ny * nx..].fill(0.0);
    for j in 1..ny {
        for i in 0..nx {
            out.y[j * nx + i] = (f[j * nx + i] - f[(j - 1) * nx + i]) * rhy;
        }
    }
}

/// Conservative divergence of a face flux: `(F_right - F_left)/hx + (F_up - F_down)/hy`.
pub fn divergence(grid: &Grid2D, flux: &FaceField) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (rhx, rhy) = (1.0 / grid.hx, 1.0 / grid.hy);
    let mut out = vec![0.0; grid.cells()];
    for j in 0..ny {
        for i in 0..nx {
            let fx = flux.x[grid.x_face(i + 1, j)] - flux.x[grid.x_face(i, j)];
            let fy = flux.y[grid.y_face(i, j + 1)] - flux.y[grid.y_face(i, j)];
            out[j * nx + i] = fx * rhx + fy * rhy;
        }
    }
    out
}

/// Cell reconstruction of `|∇f|²`: the mean of the squared left/right face
/// gradients plus the mean of the squared bottom/top ones.
pub fn cell_grad_sq(grid: &Grid2D, grad: &FaceField) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut out = vec![0.0; grid.cells()];
    for j in 0..ny {
        for i in 0..nx {
            let l = grad.x[grid.x_face(i, j)];
            let r = grad.x[grid.x_face(i + 1, j)];
            let d = grad.y[grid.y_face(i, j)];
            let u = grad.y[grid.y_face(i, j + 1)];
            out[j * nx + i] = 0.5 * (l * l + r * r) + 0.5 * (d * d + u * u);
        }
    }
    out
}

/// Cell-centered gradient vector obtained by averaging the two face
/// gradients in each direction.
pub fn cell_grad_avg(grid: &Grid2D, grad: &FaceField) -> (Vec<f64>, Vec<f64>) {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut gx = vec![0.0; grid.cells()];
    let mut gy = vec![0.0; grid.cells()];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            gx[k] = 0.5 * (grad.x[grid.x_face(i, j)] + grad.x[grid.x_face(i + 1, j)]);
            gy[k] = 0.5 * (grad.y[grid.y_face(i, j)] + grad.y[grid.y_face(i, j + 1)]);
        }
    }
    (gx, gy)
}

/// `(∫ f^p)^{1/p}` for a nonnegative field.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("L^p exponent must be >= 1, got {p}")));
    }
    f.check_nonnegative()?;
    let s = integrate_values(&f.grid, &f.values.iter().map(|&x| pow_real(x, p)).collect::<Vec<_>>());
    Ok(s.powf(1.0 / p))
}

/// `x^p` using integer multiplication when `p` is integral.
#[inline]
pub(crate) fn pow_real(x: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() <= 64.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

/// `(|∇v|²)^{a/2}` from the squared reconstruction.
#[inline]
pub(crate) fn grad_pow(grad_sq: f64, a: u32) -> f64 {
    if a % 2 == 0 {
        grad_sq.powi((a / 2) as i32)
    } else {
        grad_sq.powf(a as f64 / 2.0)
    }
}

/// `∫ |∇v|^a / v^b`, the family of singularly weighted gradient integrals.
pub fn weighted_gradient_functional(v: &Field, a: u32, b: u32) -> Result<f64> {
    if a < 2 {
        return Err(Error::InvalidParameter(format!("gradient power must be >= 2, got {a}")));
    }
    v.check_positive()?;
    let g = &v.grid;
    let gsq = cell_grad_sq(g, &face_gradients(v));
    Ok(weighted_from_grad_sq(g, &gsq, &v.values, a, b))
}

pub(crate) fn weighted_from_grad_sq(g: &Grid2D, gsq: &[f64], v: &[f64], a: u32, b: u32) -> f64 {
    let mut sum = 0.0;
    for (&s, &w) in gsq.iter().zip(v) {
        sum += grad_pow(s, a) / w.powi(b as i32);
    }
    g.cell_area() * sum
}

/// Writes the snapshot text format: a `# nx ny lx ly t` header followed by
/// one value per line in row-major order, 17 significant digits.
pub fn write_snapshot(path: impl AsRef<Path>, f: &Field, t: f64) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, snapshot_string(f, t)).map_err(|e| Error::io(path, e))
}

pub fn snapshot_string(f: &Field, t: f64) -> String {
    let g = &f.grid;
    let mut s = String::with_capacity(24 * (g.cells() + 1));
    let _ = writeln!(
        s,
        "# {} {} {:.16e} {:.16e} {:.16e}",
        g.nx, g.ny, g.lx, g.ly, t
    );
    for v in &f.values {
        let _ = writeln!(s, "{v:.16e}");
    }
    s
}

/// Reads a snapshot file back into a field and its time stamp.
pub fn read_snapshot(path: impl AsRef<Path>) -> Result<(Field, f64)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_snapshot(text: &str) -> Result<(Field, f64)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty snapshot".into()))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("snapshot header must start with '#'".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 {
        return Err(Error::Parse(format!(
            "snapshot header needs `nx ny lx ly t`, got {} tokens",
            parts.len()
        )));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("{s}: {e}")));
    let real = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
    let grid = Grid2D::new(int(parts[0])?, int(parts[1])?, real(parts[2])?, real(parts[3])?)?;
    let t = real(parts[4])?;
    let values = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| real(l.trim()))
        .collect::<Result<Vec<_>>>()?;
    Ok((Field::new(grid, values)?, t))
}
