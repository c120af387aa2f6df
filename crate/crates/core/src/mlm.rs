//! Two-level Levenberg-Marquardt.
//!
//! After every fine step, if the restricted gradient is large enough, the
//! next step is computed on a coarse network: the coarse loss is corrected
//! by a linear term so that its gradient at the restricted iterate equals
//! the restricted fine gradient, at most `max_coarse_iter` LM iterations
//! (with direct inner solves) are run on it, and the resulting coarse step
//! is prolongated and judged by the fine loss.

use nalgebra::DVector;

use crate::amg::{apply_blockwise, Direction, TransferOperators};
use crate::error::{check_len, Error, Result};
use crate::linsolve::{FlopCounter, RegularizedDirect};
use crate::lm::{fine_step, try_step, Iterate, LeastSquares, LmConfig, SolveReport};
use crate::pde::ResidualSystem;
use crate::trace::{Level, TraceRecord};

/// A problem that can produce its coarse counterpart with a given number
/// of hidden nodes.
pub trait Coarsen: LeastSquares {
    type Coarse: LeastSquares;
    fn coarse_system(&self, coarse_hidden: usize) -> Result<Self::Coarse>;
}

impl Coarsen for ResidualSystem {
    type Coarse = ResidualSystem;

    fn coarse_system(&self, coarse_hidden: usize) -> Result<ResidualSystem> {
        self.with_arch(self.arch().with_hidden(coarse_hidden)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlmConfig {
    pub lm: LmConfig,
    /// Relative threshold of the coarse-step test.
    pub kappa_h: f64,
    /// Absolute threshold of the coarse-step test; `None` uses `lm.epsilon`.
    pub epsilon_h: Option<f64>,
    pub max_coarse_iter: usize,
}

impl Default for MlmConfig {
    fn default() -> Self {
        Self {
            lm: LmConfig::default(),
            kappa_h: 0.1,
            epsilon_h: None,
            max_coarse_iter: 10,
        }
    }
}

impl MlmConfig {
    pub fn validate(&self) -> Result<()> {
        self.lm.validate()?;
        if !(self.kappa_h > 0.0 && self.kappa_h < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "kappa_h must lie in (0,1), got {}",
                self.kappa_h
            )));
        }
        if !(self.epsilon_h() > 0.0) {
            return Err(Error::InvalidArgument("epsilon_h must be positive".into()));
        }
        Ok(())
    }

    pub fn epsilon_h(&self) -> f64 {
        self.epsilon_h.unwrap_or(self.lm.epsilon)
    }
}

/// Coarse objective `m(x) = f_H(x) + corr^T (x - x0)` around `x0 = R x_fine`.
#[derive(Debug, Clone)]
pub struct CoarseModel<C> {
    pub system: C,
    pub corr: DVector<f64>,
    pub x0: DVector<f64>,
    /// `R grad f_h(x_fine)` (blockwise, `d` component copied).
    pub restricted_grad: DVector<f64>,
    /// `|grad m(x0) - R grad f_h|` recomputed after construction.
    pub coherence_error: f64,
}

impl<C: LeastSquares> CoarseModel<C> {
    /// `m(x)` given `f_H(x)`.
    fn value(&self, coarse_loss: f64, x: &DVector<f64>) -> f64 {
        coarse_loss + self.corr.dot(&(x - &self.x0))
    }
}

/// Builds the corrected coarse model at the fine iterate `x_fine` with
/// fine gradient `grad_fine`.
pub fn build_coarse_model<S: Coarsen>(
    fine: &S,
    x_fine: &DVector<f64>,
    grad_fine: &DVector<f64>,
    ops: &TransferOperators,
    counter: &mut FlopCounter,
) -> Result<CoarseModel<S::Coarse>> {
    check_len("fine parameters", fine.num_params(), x_fine.len())?;
    check_len("fine gradient", fine.num_params(), grad_fine.len())?;
    let system = fine.coarse_system(ops.coarse_size())?;
    let x0 = apply_blockwise(ops, x_fine, Direction::Restrict)?;
    check_len("coarse parameters", system.num_params(), x0.len())?;
    let restricted_grad = apply_blockwise(ops, grad_fine, Direction::Restrict)?;
    let (res, jac) = system.residuals_and_jacobian(&x0)?;
    let coarse_grad = jac.tr_mul(&res);
    counter.matvec(jac.nrows(), jac.ncols());
    let corr = &restricted_grad - &coarse_grad;
    let coherence_error = (&coarse_grad + &corr - &restricted_grad).norm();
    Ok(CoarseModel {
        system,
        corr,
        x0,
        restricted_grad,
        coherence_error,
    })
}

/// `|R g| >= kappa_h |g|` and `|R g| > epsilon_h`.
pub fn go_down(grad_fine: &DVector<f64>, ops: &TransferOperators, kappa_h: f64, epsilon_h: f64) -> Result<bool> {
    let rg = apply_blockwise(ops, grad_fine, Direction::Restrict)?.norm();
    Ok(rg >= kappa_h * grad_fine.norm() && rg > epsilon_h)
}

/// Result of minimizing the coarse model.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseOutcome {
    /// `x_* - x0` on the coarse level.
    pub step: DVector<f64>,
    /// `m(x0) - m(x_*)`.
    pub pred: f64,
    pub iterations: usize,
    pub accepted: usize,
}

/// Runs at most `max_coarse_iter` LM iterations on the coarse model starting
/// at `x0` with regularization `lambda`; inner systems are solved directly
/// (see [`RegularizedDirect`]).
pub fn coarse_cycle<C: LeastSquares>(
    model: &CoarseModel<C>,
    lambda: f64,
    cfg: &MlmConfig,
    counter: &mut FlopCounter,
) -> Result<CoarseOutcome> {
    let lm = &cfg.lm;
    let sys = &model.system;
    let eps = cfg.epsilon_h();
    let mut lambda = lambda;

    let mut x = model.x0.clone();
    let (res, jac) = sys.residuals_and_jacobian(&x)?;
    let f0 = 0.5 * res.norm_squared();
    let m0 = model.value(f0, &x);
    let mut m_x = m0;
    let (rows, cols) = jac.shape();
    let mut grad: DVector<f64> = jac.tr_mul(&res) + &model.corr;
    counter.matvec(rows, cols);
    let mut jac = Some(jac);
    let mut solver: Option<RegularizedDirect> = None;

    let mut iterations = 0;
    let mut accepted = 0;
    let mut escalations = 0;
    while iterations < cfg.max_coarse_iter && grad.norm() > eps {
        iterations += 1;
        if solver.is_none() {
            solver = Some(RegularizedDirect::new(jac.take().expect("Jacobian is current"), counter)?);
        }
        let direct = solver.as_ref().unwrap();
        let step = match direct.solve(lambda, &(-&grad), counter) {
            Ok(s) => s,
            Err(Error::Numerical(_)) => {
                escalations += 1;
                if escalations > crate::lm::MAX_ESCALATIONS {
                    return Err(Error::Numerical("coarse direct solve keeps failing".into()));
                }
                lambda *= lm.gamma3;
                continue;
            }
            Err(e) => return Err(e),
        };
        escalations = 0;
        let js = direct.jacobian() * &step;
        counter.matvec(rows, cols);
        let pred = -(grad.dot(&step) + 0.5 * js.norm_squared());
        let mut rho = f64::NAN;
        if pred > 0.0 && pred.is_finite() {
            let trial = &x + &step;
            let trial_res = sys.residuals(&trial)?;
            let m_trial = model.value(0.5 * trial_res.norm_squared(), &trial);
            rho = (m_x - m_trial) / pred;
            if rho >= lm.eta1 {
                x = trial;
                m_x = m_trial;
                let (r, j) = sys.residuals_and_jacobian(&x)?;
                grad = j.tr_mul(&r) + &model.corr;
                counter.matvec(rows, cols);
                jac = Some(j);
                solver = None;
                accepted += 1;
            }
        }
        lambda = lm.update_lambda(lambda, rho);
    }

    Ok(CoarseOutcome {
        step: &x - &model.x0,
        pred: m0 - m_x,
        iterations,
        accepted,
    })
}

/// Two-level solve from `x0` with transfer operators `ops` (built once,
/// typically from the Jacobian at `x0`).
pub fn mlm_solve<S: Coarsen>(
    sys: &S,
    x0: &DVector<f64>,
    cfg: &MlmConfig,
    ops: &TransferOperators,
) -> Result<SolveReport> {
    cfg.validate()?;
    check_len("initial parameters", sys.num_params(), x0.len())?;
    let lm = &cfg.lm;
    let mut counter = FlopCounter::new();
    let mut it = Iterate::new(sys, x0.clone(), &mut counter)?;
    if !it.loss.is_finite() {
        return Err(Error::InvalidArgument("loss is not finite at the initial point".into()));
    }
    // Validate the operator layout once.
    apply_blockwise(ops, &it.x, Direction::Restrict)?;

    let mut lambda = lm.lambda0;
    let mut report = SolveReport::start(it.loss);
    let mut previous_fine = true;

    loop {
        let grad_norm = it.grad.norm();
        if grad_norm <= lm.epsilon {
            report.converged = true;
            break;
        }
        if report.iterations >= lm.max_outer_iter {
            break;
        }
        let loss = it.loss;
        let try_coarse = previous_fine && go_down(&it.grad, ops, cfg.kappa_h, cfg.epsilon_h())?;

        let mut record = TraceRecord {
            iteration: report.iterations,
            level: Level::Fine,
            loss,
            grad_norm,
            lambda,
            rho: f64::NAN,
            accepted: false,
            flops: 0,
            go_down: Some(try_coarse),
            coherence_error: None,
        };

        let mut coarse_done = false;
        if try_coarse {
            let model = build_coarse_model(sys, &it.x, &it.grad, ops, &mut counter)?;
            record.coherence_error = Some(model.coherence_error);
            match coarse_cycle(&model, lambda, cfg, &mut counter) {
                Ok(outcome) => {
                    let step = apply_blockwise(ops, &outcome.step, Direction::Prolong)?;
                    let result = try_step(sys, &mut it, &step, outcome.pred, lm, &mut counter)?;
                    record.level = Level::Coarse;
                    record.rho = result.rho;
                    record.accepted = result.accepted;
                    lambda = lm.update_lambda(lambda, result.rho);
                    coarse_done = true;
                }
                // Fall back to a fine step in this iteration.
                Err(Error::Numerical(_)) => {}
                Err(e) => return Err(e),
            }
            previous_fine = false;
        }
        if !coarse_done {
            let (result, used_lambda) = fine_step(sys, &mut it, lambda, lm, &mut counter)?;
            record.lambda = used_lambda;
            record.rho = result.rho;
            record.accepted = result.accepted;
            lambda = lm.update_lambda(used_lambda, result.rho);
            previous_fine = true;
        }
        record.flops = counter.matvec_flops();
        let accepted = record.accepted;
        report.record(record);
        if accepted {
            report.loss_history.push(it.loss);
        }
    }
    Ok(report.finish(it, counter))
}
