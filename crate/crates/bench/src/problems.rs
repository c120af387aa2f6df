//! Registry of benchmark problems.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use mlm_core::fdref::{cache_file_name, solve_helmholtz_fd, FdGrid};
use mlm_core::pde::{Field, Operator, PdeProblem};

/// Velocity fields for the 2D Helmholtz problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Velocity {
    /// `c = 40`
    Constant,
    /// `20` for `z1 < 0.5`, else `40`
    TwoLayer,
    /// `20, 40, 60, 80` on the quarters of `z1`
    FourLayer,
    /// `0.1 sin(z1 + z2)`
    Sinusoidal,
}

impl Velocity {
    pub const ALL: [Velocity; 4] = [
        Velocity::Constant,
        Velocity::TwoLayer,
        Velocity::FourLayer,
        Velocity::Sinusoidal,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Velocity::Constant => "c1",
            Velocity::TwoLayer => "c2",
            Velocity::FourLayer => "c3",
            Velocity::Sinusoidal => "c4",
        }
    }

    pub fn eval(self, z: &[f64]) -> f64 {
        match self {
            Velocity::Constant => 40.0,
            Velocity::TwoLayer => {
                if z[0] < 0.5 {
                    20.0
                } else {
                    40.0
                }
            }
            Velocity::FourLayer => match z[0] {
                x if x < 0.25 => 20.0,
                x if x < 0.5 => 40.0,
                x if x < 0.75 => 60.0,
                _ => 80.0,
            },
            Velocity::Sinusoidal => 0.1 * (z[0] + z[1]).sin(),
        }
    }

    pub fn field(self) -> Field {
        Arc::new(move |z: &[f64]| self.eval(z))
    }
}

/// Benchmark problem identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemId {
    Poisson1d,
    Poisson2d,
    Helmholtz1d,
    Helmholtz2d(Velocity),
    Sine1d,
    Exp2d,
}

impl ProblemId {
    pub fn all() -> Vec<ProblemId> {
        let mut out = vec![ProblemId::Poisson1d, ProblemId::Poisson2d, ProblemId::Helmholtz1d];
        out.extend(Velocity::ALL.iter().map(|&c| ProblemId::Helmholtz2d(c)));
        out.push(ProblemId::Sine1d);
        out.push(ProblemId::Exp2d);
        out
    }

    pub fn dim(self) -> usize {
        match self {
            ProblemId::Poisson1d | ProblemId::Helmholtz1d | ProblemId::Sine1d => 1,
            _ => 2,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            ProblemId::Poisson1d => "-u'' = nu^2 cos(nu z), u = cos(nu z)",
            ProblemId::Poisson2d => "-Lap u = 2 nu^2 cos(nu (z1+z2)), u = cos(nu (z1+z2))",
            ProblemId::Helmholtz1d => "-u'' - nu^2 u = 0, u = sin(nu z) + cos(nu z)",
            ProblemId::Helmholtz2d(Velocity::Constant) => "-Lap u - (2 pi nu / c)^2 u = 1_box, c = 40",
            ProblemId::Helmholtz2d(Velocity::TwoLayer) => "-Lap u - (2 pi nu / c)^2 u = 1_box, c = 20 | 40 in z1",
            ProblemId::Helmholtz2d(Velocity::FourLayer) => {
                "-Lap u - (2 pi nu / c)^2 u = 1_box, c = 20 | 40 | 60 | 80 in z1"
            }
            ProblemId::Helmholtz2d(Velocity::Sinusoidal) => {
                "-Lap u - (2 pi nu / c)^2 u = 1_box, c = 0.1 sin(z1 + z2)"
            }
            ProblemId::Sine1d => "u'' + sin u = g1, u = 0.1 cos(nu z)",
            ProblemId::Exp2d => "Lap u + exp u = g1, u = log(nu / (z1 + z2 + 10))",
        }
    }

    /// Default outer-iteration cap for the problem.
    pub fn default_max_iter(self) -> usize {
        match self {
            ProblemId::Helmholtz2d(_) => 200,
            _ => 2000,
        }
    }

    /// Default gradient tolerance.
    pub fn default_epsilon(self) -> f64 {
        if self.dim() == 1 {
            1e-4
        } else {
            1e-3
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemId::Poisson1d => f.write_str("poisson1d"),
            ProblemId::Poisson2d => f.write_str("poisson2d"),
            ProblemId::Helmholtz1d => f.write_str("helmholtz1d"),
            ProblemId::Helmholtz2d(c) => write!(f, "helmholtz2d-{}", c.tag()),
            ProblemId::Sine1d => f.write_str("sine1d"),
            ProblemId::Exp2d => f.write_str("exp2d"),
        }
    }
}

impl FromStr for ProblemId {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemId::all()
            .into_iter()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| anyhow!("unknown problem '{s}' (see list-problems)"))
    }
}

/// Indicator of the open box `(0.25, 0.75)^2`.
pub fn box_indicator(z: &[f64]) -> f64 {
    if z.iter().all(|&c| c > 0.25 && c < 0.75) {
        1.0
    } else {
        0.0
    }
}

/// Where to find or build finite-difference reference fields.
#[derive(Debug, Clone)]
pub struct ReferenceSettings<'a> {
    pub resolution: usize,
    pub cache_dir: Option<&'a Path>,
}

impl Default for ReferenceSettings<'_> {
    fn default() -> Self {
        Self {
            resolution: 201,
            cache_dir: None,
        }
    }
}

/// Loads the cached reference field or computes (and caches) it.
pub fn helmholtz_reference(nu: f64, velocity: Velocity, settings: &ReferenceSettings) -> Result<FdGrid> {
    let path = settings
        .cache_dir
        .map(|d| d.join(cache_file_name(nu, velocity.tag(), settings.resolution)));
    if let Some(path) = &path {
        if path.exists() {
            let grid = FdGrid::read_cache(path)?;
            if grid.points_per_axis() == settings.resolution {
                return Ok(grid);
            }
        }
    }
    let grid = solve_helmholtz_fd(nu, &|z| velocity.eval(z), &box_indicator, settings.resolution)
        .with_context(|| format!("finite-difference reference for nu = {nu}, {}", velocity.tag()))?;
    if let Some(path) = &path {
        std::fs::create_dir_all(path.parent().unwrap())
            .with_context(|| format!("creating {}", path.parent().unwrap().display()))?;
        grid.write_cache(path)?;
    }
    Ok(grid)
}

/// Builds the problem with penalty `penalty_factor * t`, `t` the number of
/// training points.
pub fn build_problem(
    id: ProblemId,
    nu: f64,
    penalty_factor: f64,
    grid_points: Option<usize>,
    reference: &ReferenceSettings,
) -> Result<PdeProblem> {
    if !(nu > 0.0 && nu.is_finite()) {
        bail!("nu must be positive, got {nu}");
    }
    let zero: Field = Arc::new(|_| 0.0);
    let (operator, source, boundary, exact): (Operator, Field, Field, Option<Field>) = match id {
        ProblemId::Poisson1d => {
            let u: Field = Arc::new(move |z| (nu * z[0]).cos());
            (Operator::Poisson, Arc::new(move |z| nu * nu * (nu * z[0]).cos()), u.clone(), Some(u))
        }
        ProblemId::Poisson2d => {
            let u: Field = Arc::new(move |z| (nu * (z[0] + z[1])).cos());
            let g: Field = Arc::new(move |z| 2.0 * nu * nu * (nu * (z[0] + z[1])).cos());
            (Operator::Poisson, g, u.clone(), Some(u))
        }
        ProblemId::Helmholtz1d => {
            let u: Field = Arc::new(move |z| (nu * z[0]).sin() + (nu * z[0]).cos());
            (Operator::Helmholtz1d { nu }, zero.clone(), u.clone(), Some(u))
        }
        ProblemId::Helmholtz2d(c) => {
            let op = Operator::Helmholtz2d { nu, velocity: c.field() };
            (op, Arc::new(box_indicator), zero.clone(), None)
        }
        ProblemId::Sine1d => {
            let u: Field = Arc::new(move |z| 0.1 * (nu * z[0]).cos());
            let g: Field = Arc::new(move |z| {
                let u = 0.1 * (nu * z[0]).cos();
                -nu * nu * u + u.sin()
            });
            (Operator::SineNonlinear, g, u.clone(), Some(u))
        }
        ProblemId::Exp2d => {
            let u: Field = Arc::new(move |z| (nu / (z[0] + z[1] + 10.0)).ln());
            let g: Field = Arc::new(move |z| {
                let s = z[0] + z[1] + 10.0;
                2.0 / (s * s) + nu / s
            });
            (Operator::ExpNonlinear, g, u.clone(), Some(u))
        }
    };
    let mut problem = PdeProblem::new(id.dim(), nu, operator, source, boundary, 1.0)?;
    if let Some(n) = grid_points {
        problem = problem.with_grid_points(n);
    }
    let t = problem.points_per_axis()?.pow(id.dim() as u32) as f64;
    problem = problem.with_penalty(penalty_factor * t)?;
    let reference = match (exact, id) {
        (Some(u), _) => u,
        (None, ProblemId::Helmholtz2d(c)) => {
            let grid = Arc::new(helmholtz_reference(nu, c, reference)?);
            Arc::new(move |z: &[f64]| grid.sample(z).expect("test points lie in the unit square"))
        }
        (None, _) => unreachable!("every other problem has a closed-form solution"),
    };
    Ok(problem.with_reference(reference))
}
