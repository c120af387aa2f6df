//! One-level Levenberg-Marquardt for `min 0.5 |F(x)|^2`.
//!
//! Each iteration minimizes the regularized Gauss-Newton model
//! `f + g^T s + s^T J^T J s / 2 + lambda |s|^2 / 2` by truncated CGLS,
//! accepts the step when the ratio of actual to predicted reduction reaches
//! `eta1`, and adapts `lambda` from that ratio.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::linsolve::{cgls_from_gradient, FlopCounter};
use crate::trace::{Level, TraceRecord};

/// A nonlinear least-squares problem `min 0.5 |F(x)|^2`.
pub trait LeastSquares {
    fn num_params(&self) -> usize;
    fn num_residuals(&self) -> usize;
    fn residuals(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn residuals_and_jacobian(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)>;
}

/// Parameters of the outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct LmConfig {
    pub eta1: f64,
    pub eta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub lambda0: f64,
    pub lambda_min: f64,
    /// Gradient-norm stopping tolerance.
    pub epsilon: f64,
    /// Inner stopping constant in `|grad m(s)| <= theta |s|^2`.
    pub theta: f64,
    pub max_outer_iter: usize,
    /// CGLS iteration cap; `None` means the number of parameters.
    pub max_inner_iter: Option<usize>,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            eta1: 0.1,
            eta2: 0.75,
            gamma1: 0.85,
            gamma2: 0.5,
            gamma3: 1.5,
            lambda0: 0.05,
            lambda_min: 1e-6,
            epsilon: 1e-4,
            theta: 0.1,
            max_outer_iter: 2000,
            max_inner_iter: None,
        }
    }
}

impl LmConfig {
    /// Checks `0 < eta1 <= eta2 < 1`, `0 < gamma2 <= gamma1 < 1 < gamma3`,
    /// `lambda0 > lambda_min > 0`, and positive tolerances.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if !(0.0 < self.eta1 && self.eta1 <= self.eta2 && self.eta2 < 1.0) {
            return bad("need 0 < eta1 <= eta2 < 1");
        }
        if !(0.0 < self.gamma2 && self.gamma2 <= self.gamma1 && self.gamma1 < 1.0 && 1.0 < self.gamma3) {
            return bad("need 0 < gamma2 <= gamma1 < 1 < gamma3");
        }
        if !(self.lambda_min > 0.0 && self.lambda0 > self.lambda_min) {
            return bad("need lambda0 > lambda_min > 0");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.theta > 0.0) {
            return bad("theta must be positive");
        }
        Ok(())
    }

    /// Regularization update from the step ratio.
    pub fn update_lambda(&self, lambda: f64, rho: f64) -> f64 {
        if rho >= self.eta1 {
            let factor = if rho >= self.eta2 { self.gamma2 } else { self.gamma1 };
            (factor * lambda).max(self.lambda_min)
        } else {
            self.gamma3 * lambda
        }
    }
}

/// Outcome of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Coarse-level attempts among `iterations` (two-level runs only).
    pub coarse_attempts: usize,
    pub coarse_accepted: usize,
    pub final_gradient_norm: f64,
    pub final_loss: f64,
    /// Loss at the start and after every accepted step.
    pub loss_history: Vec<f64>,
    pub matvec_flops: u64,
    pub converged: bool,
    pub final_params: Vec<f64>,
    pub trace: Vec<TraceRecord>,
}

/// Consecutive regularization increases tolerated after inner-solver failures.
pub(crate) const MAX_ESCALATIONS: usize = 50;

/// Current iterate with cached Jacobian and gradient.
pub(crate) struct Iterate {
    pub x: DVector<f64>,
    pub jac: DMatrix<f64>,
    pub loss: f64,
    pub grad: DVector<f64>,
}

impl Iterate {
    pub fn new<S: LeastSquares + ?Sized>(sys: &S, x: DVector<f64>, counter: &mut FlopCounter) -> Result<Self> {
        let (residual, jac) = sys.residuals_and_jacobian(&x)?;
        let loss = 0.5 * residual.norm_squared();
        let grad = jac.tr_mul(&residual);
        counter.matvec(jac.nrows(), jac.ncols());
        Ok(Self {
            x,
            jac,
            loss,
            grad,
        })
    }
}

/// What happened to a proposed step.
pub(crate) struct StepResult {
    pub rho: f64,
    pub accepted: bool,
}

/// Predicted reduction of the unregularized Taylor model for step `s`.
pub(crate) fn taylor_decrease(it: &Iterate, step: &DVector<f64>, counter: &mut FlopCounter) -> f64 {
    let js = &it.jac * step;
    counter.matvec(it.jac.nrows(), it.jac.ncols());
    -(it.grad.dot(step) + 0.5 * js.norm_squared())
}

/// Evaluates `x + step`, forms the ratio against `pred`, and on acceptance
/// moves the iterate (refreshing Jacobian and gradient).
pub(crate) fn try_step<S: LeastSquares + ?Sized>(
    sys: &S,
    it: &mut Iterate,
    step: &DVector<f64>,
    pred: f64,
    cfg: &LmConfig,
    counter: &mut FlopCounter,
) -> Result<StepResult> {
    if !(pred > 0.0) || !pred.is_finite() || step.iter().all(|&s| s == 0.0) {
        return Ok(StepResult {
            rho: f64::NAN,
            accepted: false,
        });
    }
    let trial = &it.x + step;
    let trial_residual = sys.residuals(&trial)?;
    let trial_loss = 0.5 * trial_residual.norm_squared();
    if !trial_loss.is_finite() {
        return Ok(StepResult {
            rho: f64::NEG_INFINITY,
            accepted: false,
        });
    }
    let rho = (it.loss - trial_loss) / pred;
    if rho >= cfg.eta1 {
        *it = Iterate::new(sys, trial, counter)?;
        Ok(StepResult { rho, accepted: true })
    } else {
        Ok(StepResult { rho, accepted: false })
    }
}

/// One Taylor-model step from `it` with regularization `lambda`. Retries
/// with a larger `lambda` when the inner solver fails; returns the ratio
/// outcome and the `lambda` actually used.
pub(crate) fn fine_step<S: LeastSquares + ?Sized>(
    sys: &S,
    it: &mut Iterate,
    mut lambda: f64,
    cfg: &LmConfig,
    counter: &mut FlopCounter,
) -> Result<(StepResult, f64)> {
    let max_inner = cfg.max_inner_iter.unwrap_or(it.x.len());
    let mut escalations = 0;
    let inner = loop {
        match cgls_from_gradient(&it.jac, &it.grad, lambda, cfg.theta, max_inner, counter) {
            Ok(inner) => break inner,
            Err(Error::Numerical(msg)) => {
                escalations += 1;
                if escalations > MAX_ESCALATIONS {
                    return Err(Error::Numerical(format!(
                        "inner solver failed after {MAX_ESCALATIONS} regularization increases: {msg}"
                    )));
                }
                lambda *= cfg.gamma3;
            }
            Err(e) => return Err(e),
        }
    };
    let pred = taylor_decrease(it, &inner.step, counter);
    let result = try_step(sys, it, &inner.step, pred, cfg, counter)?;
    Ok((result, lambda))
}

/// Runs the one-level method from `x0`.
pub fn lm_solve<S: LeastSquares + ?Sized>(sys: &S, x0: &DVector<f64>, cfg: &LmConfig) -> Result<SolveReport> {
    cfg.validate()?;
    check_len("initial parameters", sys.num_params(), x0.len())?;
    let mut counter = FlopCounter::new();
    let mut it = Iterate::new(sys, x0.clone(), &mut counter)?;
    if !it.loss.is_finite() {
        return Err(Error::InvalidArgument("loss is not finite at the initial point".into()));
    }
    let mut lambda = cfg.lambda0;
    let mut report = SolveReport::start(it.loss);

    loop {
        let grad_norm = it.grad.norm();
        if grad_norm <= cfg.epsilon {
            report.converged = true;
            break;
        }
        if report.iterations >= cfg.max_outer_iter {
            break;
        }
        let loss = it.loss;
        let (step, used_lambda) = fine_step(sys, &mut it, lambda, cfg, &mut counter)?;
        lambda = cfg.update_lambda(used_lambda, step.rho);
        report.record(TraceRecord {
            iteration: report.iterations,
            level: Level::Fine,
            loss,
            grad_norm,
            lambda: used_lambda,
            rho: step.rho,
            accepted: step.accepted,
            flops: counter.matvec_flops(),
            go_down: None,
            coherence_error: None,
        });
        if step.accepted {
            report.loss_history.push(it.loss);
        }
    }
    Ok(report.finish(it, counter))
}

impl SolveReport {
    pub(crate) fn start(loss: f64) -> Self {
        Self {
            iterations: 0,
            accepted_steps: 0,
            rejected_steps: 0,
            coarse_attempts: 0,
            coarse_accepted: 0,
            final_gradient_norm: f64::NAN,
            final_loss: loss,
            loss_history: vec![loss],
            matvec_flops: 0,
            converged: false,
            final_params: Vec::new(),
            trace: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, rec: TraceRecord) {
        self.iterations += 1;
        if rec.accepted {
            self.accepted_steps += 1;
        } else {
            self.rejected_steps += 1;
        }
        if rec.level == Level::Coarse {
            self.coarse_attempts += 1;
            if rec.accepted {
                self.coarse_accepted += 1;
            }
        }
        self.trace.push(rec);
    }

    pub(crate) fn finish(mut self, it: Iterate, counter: FlopCounter) -> Self {
        self.final_gradient_norm = it.grad.norm();
        self.final_loss = it.loss;
        self.matvec_flops = counter.matvec_flops();
        self.final_params = it.x.as_slice().to_vec();
        self
    }
}
