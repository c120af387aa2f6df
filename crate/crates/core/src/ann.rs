//! One-hidden-layer feedforward network `u(p, z) = sum_i v_i s(<w_i, z> + b_i) + d`.
//!
//! Parameters are stored flat in the order `[v | w_1 | ... | w_N | b | d]`,
//! where `w_j` holds the weights leaving input node `j` (one per hidden
//! node). All derivatives are closed form.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{check_len, Error, Result};

/// Hidden-layer activation.
///
/// `Sigmoid` is `(e^x - 1)/(e^x + 1)`, which equals `tanh(x/2)`; it is kept
/// under its conventional name in this family of networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Logistic,
    Softplus,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Logistic,
        Activation::Softplus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Logistic => "logistic",
            Activation::Softplus => "softplus",
        }
    }

    /// Derivative of order `order` (0..=3) at `x`.
    ///
    /// # Panics
    /// If `order > 3`.
    pub fn eval(self, order: usize, x: f64) -> f64 {
        assert!(order <= 3, "activation derivative order must be in 0..=3");
        self.derivatives(x)[order]
    }

    /// Orders 0 through 3 at `x`, computed together.
    pub fn derivatives(self, x: f64) -> [f64; 4] {
        match self {
            Activation::Sigmoid => {
                let s = (0.5 * x).tanh();
                let q = 1.0 - s * s;
                [s, 0.5 * q, -0.5 * s * q, 0.25 * (3.0 * s * s - 1.0) * q]
            }
            Activation::Tanh => {
                let t = x.tanh();
                let q = 1.0 - t * t;
                [t, q, -2.0 * t * q, (6.0 * t * t - 2.0) * q]
            }
            Activation::Logistic => {
                let (g, h) = logistic_pair(x);
                let q = g * h;
                [g, q, q * (h - g), q * (1.0 - 6.0 * q)]
            }
            Activation::Softplus => {
                let (g, h) = logistic_pair(x);
                let q = g * h;
                [softplus(x), g, q, q * (h - g)]
            }
        }
    }
}

/// `(g(x), 1 - g(x))` for the logistic function `g`, both without overflow.
fn logistic_pair(x: f64) -> (f64, f64) {
    if x >= 0.0 {
        let e = (-x).exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    } else {
        let e = x.exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "logistic" => Ok(Activation::Logistic),
            "softplus" => Ok(Activation::Softplus),
            other => Err(Error::InvalidArgument(format!("unknown activation '{other}'"))),
        }
    }
}

/// Which scalar map of the network a parameter gradient refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Value,
    Laplacian,
}

/// Shape of the network: `hidden` nodes, `input_dim` inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkArch {
    hidden: usize,
    input_dim: usize,
    activation: Activation,
}

impl NetworkArch {
    pub fn new(hidden: usize, input_dim: usize, activation: Activation) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::InvalidArgument("hidden node count must be >= 1".into()));
        }
        if input_dim == 0 {
            return Err(Error::InvalidArgument("input dimension must be >= 1".into()));
        }
        Ok(Self {
            hidden,
            input_dim,
            activation,
        })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Same input dimension and activation, different hidden width.
    pub fn with_hidden(&self, hidden: usize) -> Result<Self> {
        Self::new(hidden, self.input_dim, self.activation)
    }

    /// `(N + 2) r + 1`.
    pub fn num_params(&self) -> usize {
        (self.input_dim + 2) * self.hidden + 1
    }

    pub fn v_range(&self) -> Range<usize> {
        0..self.hidden
    }

    /// Weights leaving input node `j` (0-based).
    pub fn w_range(&self, j: usize) -> Range<usize> {
        debug_assert!(j < self.input_dim);
        let start = (1 + j) * self.hidden;
        start..start + self.hidden
    }

    pub fn b_range(&self) -> Range<usize> {
        let start = (1 + self.input_dim) * self.hidden;
        start..start + self.hidden
    }

    pub fn d_index(&self) -> usize {
        self.num_params() - 1
    }

    /// Number of per-node blocks (`v`, each `w_j`, `b`).
    pub fn num_blocks(&self) -> usize {
        self.input_dim + 2
    }

    /// Range of the `k`-th per-node block in the order `v, w_1..w_N, b`.
    pub fn block_range(&self, k: usize) -> Range<usize> {
        debug_assert!(k < self.num_blocks());
        k * self.hidden..(k + 1) * self.hidden
    }

    fn check(&self, p: &[f64], z: &[f64]) -> Result<()> {
        check_len("network parameters", self.num_params(), p.len())?;
        check_len("input point", self.input_dim, z.len())
    }

    #[inline]
    fn pre_activation(&self, p: &[f64], z: &[f64], i: usize) -> f64 {
        let r = self.hidden;
        let mut a = p[(1 + self.input_dim) * r + i];
        for (j, zj) in z.iter().enumerate() {
            a += p[(1 + j) * r + i] * zj;
        }
        a
    }

    #[inline]
    fn squared_input_norm(&self, p: &[f64], i: usize) -> f64 {
        let r = self.hidden;
        (0..self.input_dim)
            .map(|j| {
                let w = p[(1 + j) * r + i];
                w * w
            })
            .sum()
    }

    /// Network output at `z`.
    pub fn eval(&self, p: &[f64], z: &[f64]) -> Result<f64> {
        self.check(p, z)?;
        Ok(self.eval_unchecked(p, z))
    }

    pub(crate) fn eval_unchecked(&self, p: &[f64], z: &[f64]) -> f64 {
        let act = self.activation;
        let mut u = p[self.d_index()];
        for i in 0..self.hidden {
            u += p[i] * act.eval(0, self.pre_activation(p, z, i));
        }
        u
    }

    /// Spatial gradient of the output at `z`.
    pub fn grad_z(&self, p: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.check(p, z)?;
        let r = self.hidden;
        let mut g = vec![0.0; self.input_dim];
        for i in 0..r {
            let s1 = self.activation.eval(1, self.pre_activation(p, z, i));
            for (j, gj) in g.iter_mut().enumerate() {
                *gj += p[i] * p[(1 + j) * r + i] * s1;
            }
        }
        Ok(g)
    }

    /// Spatial Laplacian of the output at `z`.
    pub fn laplacian_z(&self, p: &[f64], z: &[f64]) -> Result<f64> {
        self.check(p, z)?;
        let mut lap = 0.0;
        for i in 0..self.hidden {
            let s2 = self.activation.eval(2, self.pre_activation(p, z, i));
            lap += p[i] * self.squared_input_norm(p, i) * s2;
        }
        Ok(lap)
    }

    /// Gradient with respect to `p` of the output (`Quantity::Value`) or of
    /// its spatial Laplacian (`Quantity::Laplacian`).
    pub fn param_jacobian(&self, p: &[f64], z: &[f64], quantity: Quantity) -> Result<Vec<f64>> {
        self.check(p, z)?;
        let n = self.num_params();
        let mut out = vec![0.0; n];
        let eval = self.point_eval(p, z);
        match quantity {
            Quantity::Value => self.fill_value_grad(p, z, &eval, &mut out),
            Quantity::Laplacian => self.fill_laplacian_grad(p, z, &eval, &mut out),
        }
        Ok(out)
    }

    /// Activation derivatives of every hidden node at `z`, plus output and
    /// Laplacian. Inputs are assumed validated.
    pub(crate) fn point_eval(&self, p: &[f64], z: &[f64]) -> PointEval {
        let r = self.hidden;
        let mut derivs = Vec::with_capacity(r);
        let mut sq_norms = Vec::with_capacity(r);
        let mut value = p[self.d_index()];
        let mut laplacian = 0.0;
        for i in 0..r {
            let ds = self.activation.derivatives(self.pre_activation(p, z, i));
            let s = self.squared_input_norm(p, i);
            value += p[i] * ds[0];
            laplacian += p[i] * s * ds[2];
            derivs.push(ds);
            sq_norms.push(s);
        }
        PointEval {
            derivs,
            sq_norms,
            value,
            laplacian,
        }
    }

    /// Writes `d u / d p` into `out` (length `num_params`).
    pub(crate) fn fill_value_grad(&self, p: &[f64], z: &[f64], eval: &PointEval, out: &mut [f64]) {
        let r = self.hidden;
        for i in 0..r {
            let [s0, s1, _, _] = eval.derivs[i];
            let vs1 = p[i] * s1;
            out[i] = s0;
            for (j, zj) in z.iter().enumerate() {
                out[(1 + j) * r + i] = vs1 * zj;
            }
            out[(1 + self.input_dim) * r + i] = vs1;
        }
        out[self.d_index()] = 1.0;
    }

    /// Writes `d (Laplacian u) / d p` into `out` (length `num_params`).
    pub(crate) fn fill_laplacian_grad(
        &self,
        p: &[f64],
        z: &[f64],
        eval: &PointEval,
        out: &mut [f64],
    ) {
        let r = self.hidden;
        for i in 0..r {
            let [_, _, s2, s3] = eval.derivs[i];
            let v = p[i];
            let s = eval.sq_norms[i];
            out[i] = s * s2;
            for (j, zj) in z.iter().enumerate() {
                let w = p[(1 + j) * r + i];
                out[(1 + j) * r + i] = v * (2.0 * w * s2 + s * zj * s3);
            }
            out[(1 + self.input_dim) * r + i] = v * s * s3;
        }
        out[self.d_index()] = 0.0;
    }
}

/// Per-point intermediate quantities shared by value and Laplacian gradients.
pub(crate) struct PointEval {
    derivs: Vec<[f64; 4]>,
    sq_norms: Vec<f64>,
    pub value: f64,
    pub laplacian: f64,
}

/// Owned parameter vector tied to an architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    arch: NetworkArch,
    data: Vec<f64>,
}

impl NetworkParams {
    pub fn from_vec(arch: NetworkArch, data: Vec<f64>) -> Result<Self> {
        check_len("network parameters", arch.num_params(), data.len())?;
        Ok(Self { arch, data })
    }

    pub fn zeros(arch: NetworkArch) -> Self {
        Self {
            arch,
            data: vec![0.0; arch.num_params()],
        }
    }

    /// Assemble from the individual blocks; `w[j]` is the group leaving input `j`.
    pub fn from_parts(arch: NetworkArch, v: &[f64], w: &[Vec<f64>], b: &[f64], d: f64) -> Result<Self> {
        let r = arch.hidden();
        check_len("output weights", r, v.len())?;
        check_len("input weight groups", arch.input_dim(), w.len())?;
        check_len("hidden biases", r, b.len())?;
        let mut data = Vec::with_capacity(arch.num_params());
        data.extend_from_slice(v);
        for wj in w {
            check_len("input weights", r, wj.len())?;
            data.extend_from_slice(wj);
        }
        data.extend_from_slice(b);
        data.push(d);
        Ok(Self { arch, data })
    }

    pub fn arch(&self) -> &NetworkArch {
        &self.arch
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn v(&self) -> &[f64] {
        &self.data[self.arch.v_range()]
    }

    pub fn w(&self, j: usize) -> &[f64] {
        &self.data[self.arch.w_range(j)]
    }

    pub fn b(&self) -> &[f64] {
        &self.data[self.arch.b_range()]
    }

    pub fn d(&self) -> f64 {
        self.data[self.arch.d_index()]
    }
}

impl AsRef<[f64]> for NetworkParams {
    fn as_ref(&self) -> &[f64] {
        &self.data
    }
}

pub fn activation_eval(a: Activation, order: usize, x: f64) -> f64 {
    a.eval(order, x)
}

pub fn net_eval(arch: &NetworkArch, p: &NetworkParams, z: &[f64]) -> Result<f64> {
    arch.eval(p.as_slice(), z)
}

pub fn net_grad_z(arch: &NetworkArch, p: &NetworkParams, z: &[f64]) -> Result<Vec<f64>> {
    arch.grad_z(p.as_slice(), z)
}

pub fn net_laplacian_z(arch: &NetworkArch, p: &NetworkParams, z: &[f64]) -> Result<f64> {
    arch.laplacian_z(p.as_slice(), z)
}

pub fn net_param_jacobian(
    arch: &NetworkArch,
    p: &NetworkParams,
    z: &[f64],
    quantity: Quantity,
) -> Result<Vec<f64>> {
    arch.param_jacobian(p.as_slice(), z, quantity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
    }

    // Direct transcriptions of the closed forms, used as an independent check.
    fn naive(a: Activation, x: f64) -> f64 {
        match a {
            Activation::Sigmoid => (x.exp() - 1.0) / (x.exp() + 1.0),
            Activation::Tanh => ((2.0 * x).exp() - 1.0) / ((2.0 * x).exp() + 1.0),
            Activation::Logistic => x.exp() / (x.exp() + 1.0),
            Activation::Softplus => (x.exp() + 1.0).ln(),
        }
    }

    fn random_params(rng: &mut ChaCha8Rng, arch: NetworkArch) -> Vec<f64> {
        (0..arch.num_params()).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn activation_values_at_origin() {
        assert_eq!(Activation::Sigmoid.eval(0, 0.0), 0.0);
        assert_eq!(Activation::Logistic.eval(0, 0.0), 0.5);
        assert_eq!(Activation::Tanh.eval(0, 0.0), 0.0);
        assert!((Activation::Softplus.eval(0, 0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn activation_matches_closed_form() {
        for a in Activation::ALL {
            for k in 0..=40 {
                let x = -10.0 + 0.5 * k as f64;
                let want = naive(a, x);
                assert!(close(a.eval(0, x), want, 1e-13), "{a} at {x}");
            }
        }
    }

    #[test]
    fn tanh_first_derivative_matches_central_difference() {
        let h = 1e-5;
        let x = 0.3;
        let fd = (Activation::Tanh.eval(0, x + h) - Activation::Tanh.eval(0, x - h)) / (2.0 * h);
        let exact = Activation::Tanh.eval(1, x);
        assert!(((fd - exact) / exact).abs() < 1e-8);
    }

    #[test]
    fn derivative_chain_is_consistent() {
        let h = 1e-5;
        for a in Activation::ALL {
            for k in 0..3 {
                for i in 0..100 {
                    let x = -5.0 + 10.0 * i as f64 / 99.0;
                    let fd = (a.eval(k, x + h) - a.eval(k, x - h)) / (2.0 * h);
                    let exact = a.eval(k + 1, x);
                    assert!(close(fd, exact, 1e-6), "{a} order {k} at {x}: {fd} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn activations_stay_finite_for_large_inputs() {
        for a in Activation::ALL {
            for x in [-700.0, -300.0, 300.0, 700.0] {
                for k in 0..=3 {
                    assert!(a.eval(k, x).is_finite(), "{a} order {k} at {x}");
                }
            }
        }
        assert_eq!(Activation::Softplus.eval(0, 700.0), 700.0);
        assert!(Activation::Logistic.eval(0, -700.0) >= 0.0);
    }

    #[test]
    #[should_panic]
    fn order_above_three_panics() {
        Activation::Tanh.eval(4, 0.0);
    }

    #[test]
    fn parameter_layout() {
        let arch = NetworkArch::new(3, 2, Activation::Tanh).unwrap();
        assert_eq!(arch.num_params(), 13);
        assert_eq!(arch.v_range(), 0..3);
        assert_eq!(arch.w_range(0), 3..6);
        assert_eq!(arch.w_range(1), 6..9);
        assert_eq!(arch.b_range(), 9..12);
        assert_eq!(arch.d_index(), 12);
        let p = NetworkParams::from_parts(
            arch,
            &[1.0, 2.0, 3.0],
            &[vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]],
            &[10.0, 11.0, 12.0],
            13.0,
        )
        .unwrap();
        assert_eq!(p.as_slice(), &(1..=13).map(f64::from).collect::<Vec<_>>()[..]);
        assert_eq!(p.w(1), &[7.0, 8.0, 9.0]);
        assert_eq!(p.d(), 13.0);
    }

    #[test]
    fn rejects_empty_architecture() {
        assert!(NetworkArch::new(0, 1, Activation::Tanh).is_err());
        assert!(NetworkArch::new(4, 0, Activation::Tanh).is_err());
    }

    #[test]
    fn eval_trivial_cases() {
        let arch = NetworkArch::new(4, 2, Activation::Tanh).unwrap();
        let mut p = vec![0.7; arch.num_params()];
        p[arch.v_range()].fill(0.0);
        p[arch.d_index()] = 3.5;
        assert_eq!(arch.eval(&p, &[0.2, 0.9]).unwrap(), 3.5);
        assert_eq!(arch.grad_z(&p, &[0.2, 0.9]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(arch.laplacian_z(&p, &[0.2, 0.9]).unwrap(), 0.0);

        let arch = NetworkArch::new(1, 1, Activation::Sigmoid).unwrap();
        assert_eq!(arch.eval(&[1.0, 0.0, 0.0, 0.0], &[7.0]).unwrap(), 0.0);

        let arch = NetworkArch::new(2, 1, Activation::Logistic).unwrap();
        assert_eq!(arch.eval(&[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn grad_z_at_origin_is_chain_rule() {
        let c = 1.7;
        let arch = NetworkArch::new(1, 1, Activation::Tanh).unwrap();
        let g = arch.grad_z(&[1.0, c, 0.0, 0.0], &[0.0]).unwrap();
        assert_eq!(g, vec![c * Activation::Tanh.eval(1, 0.0)]);
    }

    #[test]
    fn zero_input_weights_give_zero_laplacian() {
        let arch = NetworkArch::new(3, 2, Activation::Softplus).unwrap();
        let mut p = vec![0.4; arch.num_params()];
        for j in 0..2 {
            p[arch.w_range(j)].fill(0.0);
        }
        assert_eq!(arch.laplacian_z(&p, &[0.3, 0.1]).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let arch = NetworkArch::new(3, 2, Activation::Tanh).unwrap();
        let p = vec![0.0; arch.num_params()];
        assert!(matches!(arch.eval(&p, &[0.1]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(arch.eval(&p[1..], &[0.1, 0.2]), Err(Error::DimensionMismatch { .. })));
        assert!(arch.param_jacobian(&p, &[0.0; 3], Quantity::Value).is_err());
    }

    #[test]
    fn spatial_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for a in Activation::ALL {
            for n in 1..=2 {
                let arch = NetworkArch::new(6, n, a).unwrap();
                let p = random_params(&mut rng, arch);
                let z: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();

                let h = 1e-5;
                let g = arch.grad_z(&p, &z).unwrap();
                for j in 0..n {
                    let (mut zp, mut zm) = (z.clone(), z.clone());
                    zp[j] += h;
                    zm[j] -= h;
                    let fd = (arch.eval(&p, &zp).unwrap() - arch.eval(&p, &zm).unwrap()) / (2.0 * h);
                    assert!(close(g[j], fd, 1e-6), "{a} grad {j}: {} vs {fd}", g[j]);
                }

                let h = 1e-4;
                let u0 = arch.eval(&p, &z).unwrap();
                let mut fd_lap = 0.0;
                for j in 0..n {
                    let (mut zp, mut zm) = (z.clone(), z.clone());
                    zp[j] += h;
                    zm[j] -= h;
                    fd_lap += (arch.eval(&p, &zp).unwrap() - 2.0 * u0 + arch.eval(&p, &zm).unwrap()) / (h * h);
                }
                let lap = arch.laplacian_z(&p, &z).unwrap();
                assert!(close(lap, fd_lap, 1e-5), "{a} laplacian: {lap} vs {fd_lap}");
            }
        }
    }

    #[test]
    fn parameter_jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-6;
        for draw in 0..20 {
            let a = Activation::ALL[draw % 4];
            let n = 1 + draw % 2;
            let arch = NetworkArch::new(5, n, a).unwrap();
            let p = random_params(&mut rng, arch);
            let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for q in [Quantity::Value, Quantity::Laplacian] {
                let scalar = |p: &[f64]| match q {
                    Quantity::Value => arch.eval(p, &z).unwrap(),
                    Quantity::Laplacian => arch.laplacian_z(p, &z).unwrap(),
                };
                let jac = arch.param_jacobian(&p, &z, q).unwrap();
                assert_eq!(jac.len(), arch.num_params());
                for k in 0..p.len() {
                    let (mut pp, mut pm) = (p.clone(), p.clone());
                    pp[k] += h;
                    pm[k] -= h;
                    let fd = (scalar(&pp) - scalar(&pm)) / (2.0 * h);
                    assert!(close(jac[k], fd, 1e-6), "{a} {q:?} component {k}: {} vs {fd}", jac[k]);
                }
                let expected_d = if q == Quantity::Value { 1.0 } else { 0.0 };
                assert_eq!(jac[arch.d_index()], expected_d);
            }
        }
    }

    #[test]
    fn laplacian_is_linear_in_output_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let arch = NetworkArch::new(7, 2, Activation::Tanh).unwrap();
        let p = random_params(&mut rng, arch);
        let mut p2 = p.clone();
        for x in &mut p2[arch.v_range()] {
            *x *= 2.0;
        }
        let z = [0.25, 0.6];
        let l1 = arch.laplacian_z(&p, &z).unwrap();
        let l2 = arch.laplacian_z(&p2, &z).unwrap();
        assert!((l2 - 2.0 * l1).abs() <= 1e-14 * l1.abs().max(1.0));
    }

    #[test]
    fn activation_parses_from_name() {
        for a in Activation::ALL {
            assert_eq!(a.name().parse::<Activation>().unwrap(), a);
        }
        assert!("relu".parse::<Activation>().is_err());
    }
}
