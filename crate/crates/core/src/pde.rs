//! Benchmark PDE problems on the unit hypercube and the residual system
//! whose half squared norm is the network training loss
//!
//! `L(p) = 1/(2t) (sum_interior (D(z, u) - g1)^2 + penalty * sum_boundary (u - g2)^2)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::ann::NetworkArch;
use crate::error::{check_len, Error, Result};
use crate::lm::LeastSquares;

/// Scalar function on `R^N`.
pub type Field = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Differential operator `D(z, u)`.
#[derive(Clone)]
pub enum Operator {
    /// `-Lap u`
    Poisson,
    /// `-Lap u - nu^2 u`
    Helmholtz1d { nu: f64 },
    /// `-Lap u - (2 pi nu / c(z))^2 u`
    Helmholtz2d { nu: f64, velocity: Field },
    /// `Lap u + sin u`
    SineNonlinear,
    /// `Lap u + exp u`
    ExpNonlinear,
}

impl Operator {
    pub fn name(&self) -> &'static str {
        match self {
            Operator::Poisson => "poisson",
            Operator::Helmholtz1d { .. } => "helmholtz1d",
            Operator::Helmholtz2d { .. } => "helmholtz2d",
            Operator::SineNonlinear => "sine_nonlinear",
            Operator::ExpNonlinear => "exp_nonlinear",
        }
    }

    fn allows_dim(&self, dim: usize) -> bool {
        match self {
            Operator::Poisson => dim == 1 || dim == 2,
            Operator::Helmholtz1d { .. } | Operator::SineNonlinear => dim == 1,
            Operator::Helmholtz2d { .. } | Operator::ExpNonlinear => dim == 2,
        }
    }

    /// Returns `(D, dD/dLap, dD/du)` at `z` given `u` and `Lap u`.
    #[inline]
    pub fn apply(&self, z: &[f64], u: f64, lap: f64) -> (f64, f64, f64) {
        match self {
            Operator::Poisson => (-lap, -1.0, 0.0),
            Operator::Helmholtz1d { nu } => {
                let k2 = nu * nu;
                (-lap - k2 * u, -1.0, -k2)
            }
            Operator::Helmholtz2d { nu, velocity } => {
                let k = 2.0 * PI * nu / velocity(z);
                let k2 = k * k;
                (-lap - k2 * u, -1.0, -k2)
            }
            Operator::SineNonlinear => (lap + u.sin(), 1.0, u.cos()),
            Operator::ExpNonlinear => {
                let e = u.exp();
                (lap + e, 1.0, e)
            }
        }
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operator::Helmholtz1d { nu } => write!(f, "Helmholtz1d {{ nu: {nu} }}"),
            Operator::Helmholtz2d { nu, .. } => write!(f, "Helmholtz2d {{ nu: {nu} }}"),
            other => f.write_str(other.name()),
        }
    }
}

/// A Dirichlet problem `D(z, u) = g1` in `(0,1)^N`, `u = g2` on the boundary.
#[derive(Clone)]
pub struct PdeProblem {
    dim: usize,
    frequency: f64,
    operator: Operator,
    source: Field,
    boundary: Field,
    penalty: f64,
    reference: Option<Field>,
    grid_points: Option<usize>,
}

impl PdeProblem {
    /// `frequency` drives the training grid spacing `1/(2 frequency)`.
    pub fn new(
        dim: usize,
        frequency: f64,
        operator: Operator,
        source: Field,
        boundary: Field,
        penalty: f64,
    ) -> Result<Self> {
        if !operator.allows_dim(dim) {
            return Err(Error::InvalidArgument(format!(
                "operator {} is not defined in dimension {dim}",
                operator.name()
            )));
        }
        if !(penalty > 0.0 && penalty.is_finite()) {
            return Err(Error::InvalidArgument(format!("penalty must be positive, got {penalty}")));
        }
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "frequency must be positive, got {frequency}"
            )));
        }
        Ok(Self {
            dim,
            frequency,
            operator,
            source,
            boundary,
            penalty,
            reference: None,
            grid_points: None,
        })
    }

    /// Attach a closed-form solution or an external reference field used by RMSE.
    pub fn with_reference(mut self, reference: Field) -> Self {
        self.reference = Some(reference);
        self
    }

    /// Override the number of training points per axis.
    pub fn with_grid_points(mut self, points_per_axis: usize) -> Self {
        self.grid_points = Some(points_per_axis);
        self
    }

    pub fn with_penalty(mut self, penalty: f64) -> Result<Self> {
        if !(penalty > 0.0 && penalty.is_finite()) {
            return Err(Error::InvalidArgument(format!("penalty must be positive, got {penalty}")));
        }
        self.penalty = penalty;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn source(&self, z: &[f64]) -> f64 {
        (self.source)(z)
    }

    pub fn boundary_value(&self, z: &[f64]) -> f64 {
        (self.boundary)(z)
    }

    pub fn reference(&self) -> Option<&Field> {
        self.reference.as_ref()
    }

    /// Training points per axis: the override, else `2 nu + 1`.
    pub fn points_per_axis(&self) -> Result<usize> {
        if let Some(n) = self.grid_points {
            if n < 2 {
                return Err(Error::InvalidArgument("at least two grid points per axis required".into()));
            }
            return Ok(n);
        }
        let intervals = 2.0 * self.frequency;
        let rounded = intervals.round();
        if rounded < 1.0 || (intervals - rounded).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "2*nu must be a positive integer for the default grid, got nu = {}",
                self.frequency
            )));
        }
        Ok(rounded as usize + 1)
    }
}

impl fmt::Debug for PdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeProblem")
            .field("dim", &self.dim)
            .field("frequency", &self.frequency)
            .field("operator", &self.operator)
            .field("penalty", &self.penalty)
            .field("has_reference", &self.reference.is_some())
            .field("grid_points", &self.grid_points)
            .finish()
    }
}

/// Collocation points split into interior and boundary sets.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    dim: usize,
    interior: Vec<Vec<f64>>,
    boundary: Vec<Vec<f64>>,
}

impl TrainingSet {
    /// Cartesian uniform grid on `[0,1]^dim` with `points_per_axis` nodes per
    /// axis; nodes with any coordinate at 0 or 1 are boundary points.
    pub fn uniform(dim: usize, points_per_axis: usize) -> Result<Self> {
        if dim == 0 || points_per_axis < 2 {
            return Err(Error::InvalidArgument(
                "uniform grid needs dim >= 1 and >= 2 points per axis".into(),
            ));
        }
        let last = points_per_axis - 1;
        let h = 1.0 / last as f64;
        let total = points_per_axis.pow(dim as u32);
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let z: Vec<f64> = idx.iter().map(|&i| if i == last { 1.0 } else { i as f64 * h }).collect();
            if idx.iter().any(|&i| i == 0 || i == last) {
                boundary.push(z);
            } else {
                interior.push(z);
            }
            // Last axis varies fastest.
            for k in (0..dim).rev() {
                idx[k] += 1;
                if idx[k] <= last {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(Self {
            dim,
            interior,
            boundary,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn interior(&self) -> &[Vec<f64>] {
        &self.interior
    }

    pub fn boundary(&self) -> &[Vec<f64>] {
        &self.boundary
    }

    /// Total point count `t`.
    pub fn len(&self) -> usize {
        self.interior.len() + self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn contains(&self, z: &[f64]) -> bool {
        let same = |q: &Vec<f64>| q.iter().zip(z).all(|(a, b)| (a - b).abs() < 1e-12);
        self.interior.iter().any(same) || self.boundary.iter().any(same)
    }
}

pub fn build_training_set(problem: &PdeProblem) -> Result<TrainingSet> {
    TrainingSet::uniform(problem.dim(), problem.points_per_axis()?)
}

/// The map `p -> F(p)` over the training set, scaled so that the training
/// loss is exactly `0.5 * |F(p)|^2`. Interior rows come first, then
/// boundary rows.
#[derive(Debug, Clone)]
pub struct ResidualSystem {
    problem: Arc<PdeProblem>,
    training: Arc<TrainingSet>,
    arch: NetworkArch,
    interior_scale: f64,
    boundary_scale: f64,
    // g1 at interior points and g2 at boundary points, in row order.
    targets: Vec<f64>,
}

impl ResidualSystem {
    pub fn new(problem: PdeProblem, arch: NetworkArch) -> Result<Self> {
        let training = build_training_set(&problem)?;
        Self::with_training(Arc::new(problem), Arc::new(training), arch)
    }

    pub fn with_training(
        problem: Arc<PdeProblem>,
        training: Arc<TrainingSet>,
        arch: NetworkArch,
    ) -> Result<Self> {
        check_len("network input dimension", problem.dim(), arch.input_dim())?;
        check_len("training point dimension", problem.dim(), training.dim())?;
        if training.boundary().is_empty() {
            return Err(Error::InvalidArgument("training set has no boundary points".into()));
        }
        let t = training.len() as f64;
        let targets = training
            .interior()
            .iter()
            .map(|z| problem.source(z))
            .chain(training.boundary().iter().map(|z| problem.boundary_value(z)))
            .collect();
        Ok(Self {
            interior_scale: 1.0 / t.sqrt(),
            boundary_scale: (problem.penalty() / t).sqrt(),
            problem,
            training,
            arch,
            targets,
        })
    }

    /// Same problem and training points with a different network.
    pub fn with_arch(&self, arch: NetworkArch) -> Result<Self> {
        check_len("network input dimension", self.problem.dim(), arch.input_dim())?;
        Ok(Self {
            arch,
            ..self.clone()
        })
    }

    pub fn problem(&self) -> &PdeProblem {
        &self.problem
    }

    pub fn training(&self) -> &TrainingSet {
        &self.training
    }

    pub fn arch(&self) -> &NetworkArch {
        &self.arch
    }

    /// Residual count `m`.
    pub fn num_residuals(&self) -> usize {
        self.training.len()
    }

    /// Parameter count `n`.
    pub fn num_params(&self) -> usize {
        self.arch.num_params()
    }

    pub fn residual_vector(&self, p: &[f64]) -> Result<DVector<f64>> {
        check_len("network parameters", self.num_params(), p.len())?;
        let mut out = DVector::zeros(self.num_residuals());
        let op = self.problem.operator();
        let n_int = self.training.interior().len();
        for (row, z) in self.training.interior().iter().enumerate() {
            let ev = self.arch.point_eval(p, z);
            let (d, _, _) = op.apply(z, ev.value, ev.laplacian);
            out[row] = self.interior_scale * (d - self.targets[row]);
        }
        for (k, z) in self.training.boundary().iter().enumerate() {
            let row = n_int + k;
            let u = self.arch.eval_unchecked(p, z);
            out[row] = self.boundary_scale * (u - self.targets[row]);
        }
        Ok(out)
    }

    /// Residuals and the `m x n` Jacobian in a single pass.
    pub fn residual_and_jacobian(&self, p: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        check_len("network parameters", self.num_params(), p.len())?;
        let (m, n) = (self.num_residuals(), self.num_params());
        let mut f = DVector::zeros(m);
        let mut jac = DMatrix::zeros(m, n);
        let op = self.problem.operator();
        let mut value_grad = vec![0.0; n];
        let mut lap_grad = vec![0.0; n];
        let n_int = self.training.interior().len();

        for (row, z) in self.training.interior().iter().enumerate() {
            let ev = self.arch.point_eval(p, z);
            let (d, d_lap, d_u) = op.apply(z, ev.value, ev.laplacian);
            f[row] = self.interior_scale * (d - self.targets[row]);
            self.arch.fill_laplacian_grad(p, z, &ev, &mut lap_grad);
            if d_u != 0.0 {
                self.arch.fill_value_grad(p, z, &ev, &mut value_grad);
                for k in 0..n {
                    jac[(row, k)] = self.interior_scale * (d_lap * lap_grad[k] + d_u * value_grad[k]);
                }
            } else {
                for k in 0..n {
                    jac[(row, k)] = self.interior_scale * d_lap * lap_grad[k];
                }
            }
        }
        for (k, z) in self.training.boundary().iter().enumerate() {
            let row = n_int + k;
            let ev = self.arch.point_eval(p, z);
            f[row] = self.boundary_scale * (ev.value - self.targets[row]);
            self.arch.fill_value_grad(p, z, &ev, &mut value_grad);
            for c in 0..n {
                jac[(row, c)] = self.boundary_scale * value_grad[c];
            }
        }
        Ok((f, jac))
    }

    pub fn residual_jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.residual_and_jacobian(p)?.1)
    }

    pub fn loss(&self, p: &[f64]) -> Result<f64> {
        Ok(0.5 * self.residual_vector(p)?.norm_squared())
    }

    /// `(0.5 |F|^2, J^T F)`.
    pub fn loss_and_gradient(&self, p: &[f64]) -> Result<(f64, DVector<f64>)> {
        let (f, jac) = self.residual_and_jacobian(p)?;
        Ok((0.5 * f.norm_squared(), jac.tr_mul(&f)))
    }

    /// RMSE against the problem's reference on the `k^N` cell-centre test
    /// grid, skipping any point that coincides with a training point.
    pub fn rmse(&self, p: &[f64], points_per_axis: usize) -> Result<f64> {
        let reference = self
            .problem
            .reference()
            .ok_or_else(|| Error::InvalidState("problem has no reference solution".into()))?
            .clone();
        self.rmse_against(p, points_per_axis, reference.as_ref())
    }

    pub fn rmse_against(
        &self,
        p: &[f64],
        points_per_axis: usize,
        reference: &dyn Fn(&[f64]) -> f64,
    ) -> Result<f64> {
        check_len("network parameters", self.num_params(), p.len())?;
        if points_per_axis == 0 {
            return Err(Error::InvalidArgument("test grid needs at least one point".into()));
        }
        let pts = test_grid(self.problem.dim(), points_per_axis);
        let mut sum = 0.0;
        let mut count = 0usize;
        for z in pts.iter().filter(|z| !self.training.contains(z)) {
            let e = self.arch.eval_unchecked(p, z) - reference(z);
            sum += e * e;
            count += 1;
        }
        if count == 0 {
            return Err(Error::InvalidState("test grid coincides with the training set".into()));
        }
        Ok((sum / count as f64).sqrt())
    }
}

/// Cell-centre grid `((i + 1/2) / k)` per axis, last axis fastest.
pub fn test_grid(dim: usize, points_per_axis: usize) -> Vec<Vec<f64>> {
    let k = points_per_axis;
    let total = k.pow(dim as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        out.push(idx.iter().map(|&i| (i as f64 + 0.5) / k as f64).collect());
        for a in (0..dim).rev() {
            idx[a] += 1;
            if idx[a] < k {
                break;
            }
            idx[a] = 0;
        }
    }
    out
}

impl LeastSquares for ResidualSystem {
    fn num_params(&self) -> usize {
        self.arch.num_params()
    }

    fn num_residuals(&self) -> usize {
        self.training.len()
    }

    fn residuals(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.residual_vector(x.as_slice())
    }

    fn residuals_and_jacobian(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.residual_and_jacobian(x.as_slice())
    }
}
