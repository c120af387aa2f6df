use approx::assert_relative_eq;
use mlm_core::amg::{apply_blockwise, build_interpolation, ruge_stuben_split, CouplingMatrix, Direction, TransferOperators};
use mlm_core::ann::{Activation, NetworkArch};
use mlm_core::linsolve::{cgls_from_gradient, FlopCounter};
use mlm_core::lm::LmConfig;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn activation() -> impl Strategy<Value = Activation> {
    prop::sample::select(Activation::ALL.to_vec())
}

fn spd(seed: u64, r: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = DMatrix::from_fn(r + 2, r, |_, _| rng.gen_range(-1.0..1.0));
    b.tr_mul(&b) + DMatrix::identity(r, r) * 0.05
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn activation_derivatives_match_differences(act in activation(), x in -4.0f64..4.0) {
        let h = 1e-5;
        for order in 1..=3 {
            let fd = (act.eval(order - 1, x + h) - act.eval(order - 1, x - h)) / (2.0 * h);
            assert_relative_eq!(act.eval(order, x), fd, epsilon = 1e-8, max_relative = 1e-6);
        }
    }

    #[test]
    fn network_laplacian_matches_differences(act in activation(), seed in any::<u64>(), z0 in 0.1f64..0.9, z1 in 0.1f64..0.9) {
        let arch = NetworkArch::new(5, 2, act).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p: Vec<f64> = (0..arch.num_params()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z = [z0, z1];
        let h = 1e-4;
        let u = arch.eval(&p, &z).unwrap();
        let mut fd = 0.0;
        for j in 0..2 {
            let mut plus = z;
            let mut minus = z;
            plus[j] += h;
            minus[j] -= h;
            fd += (arch.eval(&p, &plus).unwrap() - 2.0 * u + arch.eval(&p, &minus).unwrap()) / (h * h);
        }
        assert_relative_eq!(arch.laplacian_z(&p, &z).unwrap(), fd, epsilon = 1e-5, max_relative = 1e-5);
    }

    #[test]
    fn splitting_partitions_and_interpolates(seed in any::<u64>(), r in 3usize..20, strength in 0.2f64..0.95) {
        let a = CouplingMatrix::new(spd(seed, r)).unwrap();
        let first = ruge_stuben_split(&a, strength).unwrap();
        let (ops, split) = build_interpolation(&a, &first, strength).unwrap();
        let mut all: Vec<usize> = split.coarse.iter().chain(&split.fine).copied().collect();
        all.sort();
        prop_assert_eq!(all, (0..r).collect::<Vec<_>>());
        prop_assert_eq!(ops.coarse_size(), split.coarse.len());
        let p = ops.unscaled_interpolation();
        for &i in &split.fine {
            prop_assert!(p.row(i).iter().any(|&x| x != 0.0));
        }
        for (k, &c) in split.coarse.iter().enumerate() {
            prop_assert_eq!(p[(c, k)], 1.0);
        }
        prop_assert!((ops.restriction_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blockwise_transfer_keeps_the_bias(seed in any::<u64>(), blocks in 1usize..4, d in -5.0f64..5.0) {
        let a = CouplingMatrix::new(spd(seed, 8)).unwrap();
        let first = ruge_stuben_split(&a, 0.5).unwrap();
        let (ops, _) = build_interpolation(&a, &first, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let mut x = DVector::from_fn(blocks * 8 + 1, |_, _| rng.gen_range(-1.0..1.0));
        x[blocks * 8] = d;
        let coarse = apply_blockwise(&ops, &x, Direction::Restrict).unwrap();
        prop_assert_eq!(coarse.len(), blocks * ops.coarse_size() + 1);
        prop_assert_eq!(coarse[coarse.len() - 1], d);
        let back = apply_blockwise(&ops, &coarse, Direction::Prolong).unwrap();
        prop_assert_eq!(back[back.len() - 1], d);
        for k in 0..blocks {
            let expect = ops.restriction() * x.rows(k * 8, 8);
            prop_assert!((coarse.rows(k * ops.coarse_size(), ops.coarse_size()) - expect).amax() < 1e-14);
        }
    }

    #[test]
    fn satisfied_inner_solves_reverify(seed in any::<u64>(), m in 2usize..30, n in 2usize..30, log_lambda in -6.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jac = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
        let grad = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let lambda = 10f64.powf(log_lambda);
        let theta = 0.1;
        let mut c = FlopCounter::new();
        let out = cgls_from_gradient(&jac, &grad, lambda, theta, 4 * n, &mut c).unwrap();
        if out.satisfied {
            let s = &out.step;
            let g = jac.tr_mul(&(&jac * s)) + s * lambda + &grad;
            prop_assert!(g.norm() <= theta * s.norm_squared() * (1.0 + 1e-8));
            assert_relative_eq!(g.norm(), out.model_gradient_norm, epsilon = 1e-12, max_relative = 1e-6);
        }
        prop_assert!(c.matvec_flops() > 0);
    }

    #[test]
    fn lambda_update_respects_the_schedule(log_lambda in -5.0f64..3.0, rho in -2.0f64..2.0) {
        let cfg = LmConfig::default();
        let lambda = 10f64.powf(log_lambda);
        let next = cfg.update_lambda(lambda, rho);
        if rho < cfg.eta1 {
            assert_relative_eq!(next, cfg.gamma3 * lambda);
        } else {
            prop_assert!(next <= lambda || next == cfg.lambda_min);
            prop_assert!(next >= cfg.lambda_min);
        }
    }
}

#[test]
fn identity_transfer_is_exact() {
    let ops = TransferOperators::identity(4);
    let x = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
    assert_eq!(apply_blockwise(&ops, &x, Direction::Restrict).unwrap(), x);
    assert_eq!(ops.sigma(), 1.0);
}
