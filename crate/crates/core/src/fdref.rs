//! Five-point finite-difference solver for
//! `-Lap u - (2 pi nu / c(z))^2 u = g1` on the unit square with `u = 0` on
//! the boundary. Used as the reference field for the 2D Helmholtz problems.

use std::f64::consts::PI;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Nodal field on a uniform `(n x n)` grid over `[0,1]^2`, boundary included.
/// `field[i * n + j]` is the value at `(i h, j h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FdGrid {
    points_per_axis: usize,
    spacing: f64,
    field: Vec<f64>,
}

impl FdGrid {
    pub fn from_field(points_per_axis: usize, field: Vec<f64>) -> Result<Self> {
        if points_per_axis < 2 {
            return Err(Error::InvalidArgument("grid needs at least two points per axis".into()));
        }
        crate::error::check_len("grid field", points_per_axis * points_per_axis, field.len())?;
        Ok(Self {
            points_per_axis,
            spacing: 1.0 / (points_per_axis - 1) as f64,
            field,
        })
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn field(&self) -> &[f64] {
        &self.field
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.field[i * self.points_per_axis + j]
    }

    /// Bilinear interpolation at `z` in `[0,1]^2`.
    pub fn sample(&self, z: &[f64]) -> Result<f64> {
        if z.len() != 2 || z.iter().any(|&c| !(0.0..=1.0).contains(&c)) {
            return Err(Error::InvalidArgument(format!("point {z:?} is outside the unit square")));
        }
        let last = self.points_per_axis - 1;
        let locate = |c: f64| {
            let s = c * last as f64;
            let i = (s.floor() as usize).min(last - 1);
            (i, s - i as f64)
        };
        let (i, ti) = locate(z[0]);
        let (j, tj) = locate(z[1]);
        let f00 = self.at(i, j);
        let f01 = self.at(i, j + 1);
        let f10 = self.at(i + 1, j);
        let f11 = self.at(i + 1, j + 1);
        Ok((1.0 - ti) * ((1.0 - tj) * f00 + tj * f01) + ti * ((1.0 - tj) * f10 + tj * f11))
    }

    const MAGIC: &'static [u8; 8] = b"MLMFDREF";

    /// Little-endian binary dump: magic, `points_per_axis` as `u64`, values.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(16 + 8 * self.field.len());
        bytes.extend_from_slice(Self::MAGIC);
        bytes.extend_from_slice(&(self.points_per_axis as u64).to_le_bytes());
        for v in &self.field {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let mut file = fs::File::create(path).map_err(|e| io_error(path, e))?;
        file.write_all(&bytes).map_err(|e| io_error(path, e))
    }

    pub fn read_cache(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| io_error(path, e))?;
        let bad = || Error::InvalidArgument(format!("{} is not a reference cache file", path.display()));
        if bytes.len() < 16 || &bytes[..8] != Self::MAGIC {
            return Err(bad());
        }
        let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let body = &bytes[16..];
        if n < 2 || body.len() != 8 * n * n {
            return Err(bad());
        }
        let field = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_field(n, field)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidArgument(format!("{}: {e}", path.display()))
}

/// Cache file name for a reference field.
pub fn cache_file_name(nu: f64, variant: &str, points_per_axis: usize) -> String {
    format!("helmholtz2d_nu{nu}_{variant}_n{points_per_axis}.bin")
}

/// Band LU with partial pivoting. Row `r` stores columns
/// `r - kl ..= r + kl + ku`, which holds the fill created by row swaps.
struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: Vec::new(),
        }
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.kl + self.ku);
        r * self.width + c + self.kl - r
    }

    fn set(&mut self, r: usize, c: usize, v: f64) {
        let k = self.idx(r, c);
        self.data[k] = v;
    }

    /// Factorizes in place; returns the smallest pivot magnitude relative to
    /// the largest entry, or `None` if a pivot column is exactly zero.
    fn factor(&mut self) -> Option<f64> {
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut min_pivot = f64::INFINITY;
        self.pivots = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let last_row = (i + self.kl).min(self.n - 1);
            let last_col = (i + self.kl + self.ku).min(self.n - 1);
            let mut p = i;
            let mut best = self.data[self.idx(i, i)].abs();
            for r in i + 1..=last_row {
                let v = self.data[self.idx(r, i)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return None;
            }
            min_pivot = min_pivot.min(best / scale);
            self.pivots.push(p);
            if p != i {
                for c in i..=last_col {
                    let a = self.idx(i, c);
                    let b = self.idx(p, c);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(i, i)];
            let row_i = self.idx(i, i);
            for r in i + 1..=last_row {
                let ri = self.idx(r, i);
                let m = self.data[ri] / pivot;
                if m == 0.0 {
                    continue;
                }
                self.data[ri] = m;
                for c in i + 1..=last_col {
                    let src = self.data[row_i + (c - i)];
                    let k = self.idx(r, c);
                    self.data[k] -= m * src;
                }
            }
        }
        Some(min_pivot)
    }

    fn solve(&self, rhs: &mut [f64]) {
        for i in 0..self.n {
            let p = self.pivots[i];
            rhs.swap(i, p);
            let last_row = (i + self.kl).min(self.n - 1);
            for r in i + 1..=last_row {
                rhs[r] -= self.data[self.idx(r, i)] * rhs[i];
            }
        }
        for i in (0..self.n).rev() {
            let last_col = (i + self.kl + self.ku).min(self.n - 1);
            let mut s = rhs[i];
            for c in i + 1..=last_col {
                s -= self.data[self.idx(i, c)] * rhs[c];
            }
            rhs[i] = s / self.data[self.idx(i, i)];
        }
    }
}

/// Pivots smaller than this (relative to the largest matrix entry) are
/// reported as resonance.
const RESONANCE_TOL: f64 = 1e-13;

/// Solves the discrete Helmholtz problem with wavenumber `2 pi nu / c(z)`
/// on an `(n x n)` grid including the zero boundary.
pub fn solve_helmholtz_fd(
    nu: f64,
    velocity: &dyn Fn(&[f64]) -> f64,
    source: &dyn Fn(&[f64]) -> f64,
    points_per_axis: usize,
) -> Result<FdGrid> {
    let n = points_per_axis;
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 points per axis, got {n}")));
    }
    if !nu.is_finite() {
        return Err(Error::InvalidArgument("nu must be finite".into()));
    }
    let h = 1.0 / (n - 1) as f64;
    let m = n - 2;
    let unknowns = m * m;
    let inv_h2 = 1.0 / (h * h);
    let mut lu = BandLu::new(unknowns, m, m);
    let mut rhs = vec![0.0; unknowns];
    let mut k2_max = 0.0f64;
    // Interior node (i, j) is unknown (i - 1) * m + (j - 1).
    for a in 0..m {
        for b in 0..m {
            let row = a * m + b;
            let z = [(a + 1) as f64 * h, (b + 1) as f64 * h];
            let c = velocity(&z);
            if !(c.is_finite() && c != 0.0) {
                return Err(Error::InvalidArgument(format!("velocity {c} at {z:?} is not usable")));
            }
            let k = 2.0 * PI * nu / c;
            k2_max = k2_max.max(k * k);
            lu.set(row, row, 4.0 * inv_h2 - k * k);
            if a > 0 {
                lu.set(row, row - m, -inv_h2);
            }
            if a + 1 < m {
                lu.set(row, row + m, -inv_h2);
            }
            if b > 0 {
                lu.set(row, row - 1, -inv_h2);
            }
            if b + 1 < m {
                lu.set(row, row + 1, -inv_h2);
            }
            rhs[row] = source(&z);
        }
    }
    let resonance = || {
        Error::Numerical(format!(
            "discrete Helmholtz operator is singular (resonant) for wavenumber {:.6}",
            k2_max.sqrt()
        ))
    };
    match lu.factor() {
        Some(p) if p > RESONANCE_TOL => {}
        _ => return Err(resonance()),
    }
    let mut u = rhs.clone();
    lu.solve(&mut u);

    let mut field = vec![0.0; n * n];
    for a in 0..m {
        for b in 0..m {
            field[(a + 1) * n + b + 1] = u[a * m + b];
        }
    }
    let grid = FdGrid::from_field(n, field)?;
    let residual = discrete_residual(&grid, nu, velocity, source);
    let scale = rhs.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let unorm = u.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let denom = scale.max((4.0 * inv_h2 + k2_max) * unorm).max(f64::MIN_POSITIVE);
    if !(residual / denom < 1e-10) {
        return Err(Error::Numerical(format!(
            "discrete residual {residual:.3e} too large relative to {denom:.3e}; wavenumber {:.6}",
            k2_max.sqrt()
        )));
    }
    Ok(grid)
}

/// Max-norm residual of the 5-point system at interior nodes.
pub fn discrete_residual(
    grid: &FdGrid,
    nu: f64,
    velocity: &dyn Fn(&[f64]) -> f64,
    source: &dyn Fn(&[f64]) -> f64,
) -> f64 {
    let n = grid.points_per_axis;
    let h = grid.spacing;
    let mut worst = 0.0f64;
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let z = [i as f64 * h, j as f64 * h];
            let k = 2.0 * PI * nu / velocity(&z);
            let lap = (grid.at(i - 1, j) + grid.at(i + 1, j) + grid.at(i, j - 1) + grid.at(i, j + 1)
                - 4.0 * grid.at(i, j))
                / (h * h);
            let r = -lap - k * k * grid.at(i, j) - source(&z);
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// Bilinear sample of `grid` at `z`.
pub fn sample_reference(grid: &FdGrid, z: &[f64]) -> Result<f64> {
    grid.sample(z)
}
