//! Inner solvers for the regularized model `(J^T J + lambda I) s = -(J^T F + corr)`.
//!
//! Only matrix-vector work is charged to the [`FlopCounter`]: `2 * rows * cols`
//! per dense product with a matrix or its transpose. A matrix-matrix product
//! counts as one product per column; factorizations are not charged, the
//! triangular solves with the factor count as one product with it.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};

/// Accumulates matrix-vector flops.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct FlopCounter {
    matvec_flops: u64,
}

impl FlopCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// One dense product with a `rows x cols` matrix (or its transpose).
    #[inline]
    pub fn matvec(&mut self, rows: usize, cols: usize) {
        self.matvec_flops += 2 * (rows as u64) * (cols as u64);
    }

    pub fn add(&mut self, flops: u64) {
        self.matvec_flops += flops;
    }

    pub fn matvec_flops(&self) -> u64 {
        self.matvec_flops
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolveResult {
    pub step: DVector<f64>,
    /// `|(J^T J + lambda I) s + J^T F + corr|`, recomputed from scratch on exit.
    pub model_gradient_norm: f64,
    pub iterations: usize,
    /// Whether `model_gradient_norm <= theta |s|^2` holds.
    pub satisfied: bool,
}

/// Truncated CGLS on `(J^T J + lambda I) s = -(J^T F + corr)`, stopped at the
/// first iterate with `|grad_s m(s)| <= theta |s|^2`.
pub fn cgls_truncated(
    jac: &DMatrix<f64>,
    residual: &DVector<f64>,
    lambda: f64,
    corr: Option<&DVector<f64>>,
    theta: f64,
    max_iter: usize,
    counter: &mut FlopCounter,
) -> Result<InnerSolveResult> {
    check_len("residual vector", jac.nrows(), residual.len())?;
    check_finite("residual vector", residual.as_slice())?;
    let mut gradient = jac.tr_mul(residual);
    counter.matvec(jac.nrows(), jac.ncols());
    if let Some(c) = corr {
        check_len("correction", jac.ncols(), c.len())?;
        gradient += c;
    }
    cgls_from_gradient(jac, &gradient, lambda, theta, max_iter, counter)
}

/// Same as [`cgls_truncated`] with the model gradient at `s = 0`
/// (`J^T F + corr`) already available.
pub fn cgls_from_gradient(
    jac: &DMatrix<f64>,
    gradient: &DVector<f64>,
    lambda: f64,
    theta: f64,
    max_iter: usize,
    counter: &mut FlopCounter,
) -> Result<InnerSolveResult> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if !(theta > 0.0) {
        return Err(Error::InvalidArgument(format!("theta must be positive, got {theta}")));
    }
    let (m, n) = jac.shape();
    check_len("gradient", n, gradient.len())?;
    check_finite("jacobian", jac.as_slice())?;
    check_finite("gradient", gradient.as_slice())?;

    let apply = |x: &DVector<f64>, counter: &mut FlopCounter| -> DVector<f64> {
        let jx = jac * x;
        let mut out = jac.tr_mul(&jx);
        counter.matvec(m, n);
        counter.matvec(m, n);
        out.axpy(lambda, x, 1.0);
        out
    };

    let rhs = -gradient;
    let mut step = DVector::zeros(n);
    let mut res = rhs.clone();
    let mut rr = res.norm_squared();
    if rr == 0.0 {
        return Ok(InnerSolveResult {
            step,
            model_gradient_norm: 0.0,
            iterations: 0,
            satisfied: true,
        });
    }
    let mut dir = res.clone();
    let mut iterations = 0;

    while iterations < max_iter {
        let ad = apply(&dir, counter);
        let curvature = dir.dot(&ad);
        if !(curvature > 0.0) || !curvature.is_finite() {
            return Err(Error::Numerical(format!(
                "non-positive curvature {curvature} in CGLS"
            )));
        }
        let alpha = rr / curvature;
        step.axpy(alpha, &dir, 1.0);
        res.axpy(-alpha, &ad, 1.0);
        iterations += 1;

        let mut rr_new = res.norm_squared();
        let bound = theta * step.norm_squared();
        if rr_new.sqrt() <= bound {
            // Confirm against the true residual before stopping.
            res = &rhs - apply(&step, counter);
            rr_new = res.norm_squared();
            if rr_new.sqrt() <= bound {
                return Ok(InnerSolveResult {
                    step,
                    model_gradient_norm: rr_new.sqrt(),
                    iterations,
                    satisfied: true,
                });
            }
            rr = rr_new;
            dir = res.clone();
            continue;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        dir *= beta;
        dir += &res;
    }

    let true_res = &rhs - apply(&step, counter);
    let norm = true_res.norm();
    Ok(InnerSolveResult {
        satisfied: norm <= theta * step.norm_squared(),
        step,
        model_gradient_norm: norm,
        iterations,
    })
}

/// Solves the SPD system `matrix * x = rhs` by Cholesky.
pub fn direct_solve(matrix: &DMatrix<f64>, rhs: &DVector<f64>, counter: &mut FlopCounter) -> Result<DVector<f64>> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "direct solve needs a square matrix, got {}x{}",
            n,
            matrix.ncols()
        )));
    }
    check_len("right-hand side", n, rhs.len())?;
    check_finite("matrix", matrix.as_slice())?;
    check_finite("right-hand side", rhs.as_slice())?;
    let chol = matrix
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("matrix is not positive definite; increase lambda".into()))?;
    counter.matvec(n, n);
    Ok(chol.solve(rhs))
}

/// Direct solver for `(J^T J + lambda I) s = rhs` with one Jacobian and
/// varying `lambda`.
///
/// For `m >= n` the `n x n` Gram matrix is formed once. For `m < n` the
/// `m x m` matrix `J J^T` is formed instead and
/// `s = (rhs - J^T (J J^T + lambda I)^{-1} J rhs) / lambda`.
#[derive(Debug, Clone)]
pub struct RegularizedDirect {
    jac: DMatrix<f64>,
    kernel: DMatrix<f64>,
    wide: bool,
}

impl RegularizedDirect {
    pub fn new(jac: DMatrix<f64>, counter: &mut FlopCounter) -> Result<Self> {
        check_finite("Jacobian", jac.as_slice())?;
        let (m, n) = jac.shape();
        let wide = m < n;
        let kernel = if wide {
            counter.add(2 * (m * m * n) as u64);
            &jac * jac.transpose()
        } else {
            counter.add(2 * (m * n * n) as u64);
            jac.tr_mul(&jac)
        };
        Ok(Self { jac, kernel, wide })
    }

    pub fn jacobian(&self) -> &DMatrix<f64> {
        &self.jac
    }

    pub fn solve(&self, lambda: f64, rhs: &DVector<f64>, counter: &mut FlopCounter) -> Result<DVector<f64>> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        check_len("right-hand side", self.jac.ncols(), rhs.len())?;
        let mut shifted = self.kernel.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += lambda;
        }
        if !self.wide {
            return direct_solve(&shifted, rhs, counter);
        }
        let (m, n) = self.jac.shape();
        let jr = &self.jac * rhs;
        counter.matvec(m, n);
        let y = direct_solve(&shifted, &jr, counter)?;
        let jty = self.jac.tr_mul(&y);
        counter.matvec(m, n);
        Ok((rhs - jty) / lambda)
    }
}

fn check_finite(what: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("{what} contains non-finite values")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn regularized(jac: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
        let n = jac.ncols();
        jac.tr_mul(jac) + DMatrix::identity(n, n) * lambda
    }

    #[test]
    fn identity_system() {
        let j = DMatrix::<f64>::identity(4, 4);
        let mut f = DVector::zeros(4);
        f[0] = -1.0;
        let mut c = FlopCounter::new();
        let out = cgls_truncated(&j, &f, 1.0, None, 0.1, 4, &mut c).unwrap();
        assert!((out.step[0] - 0.5).abs() < 1e-12);
        assert!(out.step.rows(1, 3).amax() < 1e-12);
        assert!(out.satisfied);
    }

    #[test]
    fn zero_rhs_returns_zero_step() {
        let j = DMatrix::<f64>::identity(3, 3);
        let mut c = FlopCounter::new();
        let out = cgls_truncated(&j, &DVector::zeros(3), 0.5, None, 0.1, 3, &mut c).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.step, DVector::zeros(3));
        assert!(out.satisfied);
        // only J^T F was charged
        assert_eq!(c.matvec_flops(), 18);
    }

    #[test]
    fn matches_direct_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let j = random_matrix(&mut rng, 20, 10);
        let f = DVector::from_fn(20, |_, _| rng.gen_range(-1.0..1.0));
        let lambda = 0.3;
        let theta = 0.1;
        let mut c = FlopCounter::new();
        let out = cgls_truncated(&j, &f, lambda, None, theta, 50, &mut c).unwrap();
        let a = regularized(&j, lambda);
        let exact = a.clone().cholesky().unwrap().solve(&(-j.tr_mul(&f)));
        // |s - s*| <= |A^-1| |A s - b| <= |A^-1| theta |s|^2
        let min_eig = a.symmetric_eigenvalues().min();
        let bound = (theta * out.step.norm_squared() / min_eig).max(1e-8);
        assert!((&out.step - &exact).norm() <= bound * exact.norm().max(1.0));
        assert!(out.satisfied);
    }

    #[test]
    fn correction_shifts_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let j = random_matrix(&mut rng, 6, 6);
        let f = DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));
        let corr = DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));
        let mut c = FlopCounter::new();
        let out = cgls_truncated(&j, &f, 1.0, Some(&corr), 1e-9, 200, &mut c).unwrap();
        let exact = regularized(&j, 1.0).cholesky().unwrap().solve(&(-(j.tr_mul(&f) + corr)));
        assert!((&out.step - exact).norm() < 1e-8);
    }

    #[test]
    fn satisfied_results_reverify() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..30 {
            let (m, n) = (5 + trial % 7, 3 + trial % 11);
            let j = random_matrix(&mut rng, m, n);
            let f = DVector::from_fn(m, |_, _| rng.gen_range(-2.0..2.0));
            let lambda = 10f64.powf(rng.gen_range(-4.0..1.0));
            let theta = 10f64.powf(rng.gen_range(-3.0..1.0));
            let mut c = FlopCounter::new();
            let out = cgls_truncated(&j, &f, lambda, None, theta, n, &mut c).unwrap();
            if out.satisfied {
                let g = regularized(&j, lambda) * &out.step + j.tr_mul(&f);
                assert!(g.norm() <= theta * out.step.norm_squared() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn flop_count_is_deterministic_and_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let j = random_matrix(&mut rng, 8, 5);
        let f = DVector::from_fn(8, |_, _| rng.gen_range(-1.0..1.0));
        let mut c1 = FlopCounter::new();
        let mut c2 = FlopCounter::new();
        let a = cgls_truncated(&j, &f, 0.1, None, 0.1, 5, &mut c1).unwrap();
        let b = cgls_truncated(&j, &f, 0.1, None, 0.1, 5, &mut c2).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(a, b);
        // J^T F, two products per iteration, plus at least one verification.
        let per = 2 * 8 * 5;
        assert!(c1.matvec_flops() >= per * (1 + 2 * a.iterations as u64 + 2));
        assert_eq!(c1.matvec_flops() % per, 0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let j = DMatrix::<f64>::identity(2, 2);
        let f = DVector::from_vec(vec![1.0, 1.0]);
        let mut c = FlopCounter::new();
        assert!(matches!(
            cgls_truncated(&j, &f, 0.0, None, 0.1, 2, &mut c),
            Err(Error::InvalidArgument(_))
        ));
        let bad = DVector::from_vec(vec![f64::NAN, 1.0]);
        assert!(matches!(
            cgls_truncated(&j, &bad, 1.0, None, 0.1, 2, &mut c),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn direct_solve_small_cases() {
        let mut c = FlopCounter::new();
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!(direct_solve(&DMatrix::identity(3, 3), &e1, &mut c).unwrap(), e1);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let x = direct_solve(&d, &DVector::from_vec(vec![2.0, 4.0]), &mut c).unwrap();
        assert!((x - DVector::from_vec(vec![1.0, 1.0])).amax() < 1e-15);
    }

    #[test]
    fn direct_solve_rejects_indefinite() {
        let mut c = FlopCounter::new();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            direct_solve(&a, &DVector::from_vec(vec![1.0, 1.0]), &mut c),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn regularized_direct_matches_dense_solve_for_both_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for (m, n) in [(12, 8), (5, 17), (9, 9)] {
            let j = random_matrix(&mut rng, m, n);
            let rhs = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let mut c = FlopCounter::new();
            let solver = RegularizedDirect::new(j.clone(), &mut c).unwrap();
            let setup = c.matvec_flops();
            assert_eq!(setup, 2 * (m.min(n) * m.min(n) * m.max(n)) as u64);
            for lambda in [1e-6, 0.05, 3.0] {
                let s = solver.solve(lambda, &rhs, &mut c).unwrap();
                let a = regularized(&j, lambda);
                let res = &a * &s - &rhs;
                let backward = res.norm() / (a.norm() * s.norm() + rhs.norm());
                assert!(backward <= 1e-13, "{m}x{n} lambda {lambda}: {backward}");
            }
            assert!(solver.solve(0.0, &rhs, &mut c).is_err());
        }
    }

    #[test]
    fn direct_and_cgls_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let j = random_matrix(&mut rng, 12, 8);
        let f = DVector::from_fn(12, |_, _| rng.gen_range(-1.0..1.0));
        let lambda = 0.7;
        let mut c = FlopCounter::new();
        let direct = direct_solve(&regularized(&j, lambda), &(-j.tr_mul(&f)), &mut c).unwrap();
        let a = regularized(&j, lambda);
        let res = &a * &direct + j.tr_mul(&f);
        assert!(res.norm() <= 1e-10 * j.tr_mul(&f).norm());
        let iter = cgls_truncated(&j, &f, lambda, None, 1e-12, 100, &mut c).unwrap();
        assert!((direct - iter.step).amax() < 1e-8);
    }
}
