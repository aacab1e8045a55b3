use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

use sasoc::exec::Execution;
use sasoc::optimizer::estimate::{bernoulli_perturbation, hessian_rank_one_update, p_vector, q_vector, spsa_gradient, woodbury_inverse_update};
use sasoc::optimizer::{run, Algorithm, BoxError, Hyperparams, StageModel, StageSample};
use sasoc::oracle::{LinearConstraint, SyntheticProblem};
use sasoc::rng::stream_rng;

fn quadratic() -> SyntheticProblem {
    SyntheticProblem::coupled(vec![1.5, 3.0, 2.0, 3.5], 5)
}

fn short(algorithm: Algorithm, seed: u64) -> Hyperparams {
    Hyperparams { algorithm, seed, iterations: 200, replications: 2, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn multipliers_stay_nonnegative_and_theta_in_box(
        alg in prop::sample::select(Algorithm::ALL.to_vec()),
        seed in any::<u64>(),
        offsets in prop::collection::vec(-0.5f64..0.5, 2),
        slope in -0.3f64..0.3,
        discrete in any::<bool>(),
        noise in 0.0f64..0.2,
    ) {
        let mut p = quadratic().with_noise(noise).discrete(discrete);
        for o in offsets {
            p = p.with_constraint(LinearConstraint { coeffs: vec![slope, 0.0, -slope, 0.0], offset: o }).unwrap();
        }
        let hp = Hyperparams { b0: 5.0, lambda_init: 0.3, ..short(alg, seed) };
        let out = run(&p, &hp, Execution::Sequential).unwrap();
        for row in &out.trace.rows {
            prop_assert!(row.lambda.all_nonnegative());
            prop_assert!(row.theta_bar.iter().all(|t| (0.0..=5.0).contains(t)));
        }
        prop_assert!(out.theta_bar.0.iter().all(|t| (0.0..=5.0).contains(t)));
    }
}

#[test]
fn violated_constraint_raises_multiplier_every_iteration() {
    let p = quadratic().with_constraint(LinearConstraint::constant(4, 0.2)).unwrap().with_h(1.0);
    for alg in Algorithm::ALL {
        let out = run(&p, &short(alg, 1), Execution::Sequential).unwrap();
        let sla: Vec<f64> = out.trace.rows.iter().map(|r| r.lambda.sla[0]).collect();
        let queue: Vec<f64> = out.trace.rows.iter().map(|r| r.lambda.queue).collect();
        assert!(sla.windows(2).all(|w| w[1] > w[0]), "{alg}");
        assert!(queue.windows(2).all(|w| w[1] > w[0]), "{alg}");
    }
}

#[test]
fn violated_constraint_stops_at_cap() {
    let p = quadratic().with_constraint(LinearConstraint::constant(4, 0.5)).unwrap();
    let hp = Hyperparams { lambda_cap: Some(1.0), ..short(Algorithm::Gradient, 2) };
    let out = run(&p, &hp, Execution::Sequential).unwrap();
    let sla: Vec<f64> = out.trace.rows.iter().map(|r| r.lambda.sla[0]).collect();
    let capped = sla.iter().position(|&l| l >= 1.0).unwrap();
    assert!(sla[..=capped].windows(2).all(|w| w[1] > w[0]));
    assert!(sla[capped..].iter().all(|&l| l == 1.0));
}

#[test]
fn slack_constraint_lets_multiplier_decay_to_zero() {
    let p = quadratic().with_constraint(LinearConstraint::constant(4, -0.3)).unwrap();
    let hp = Hyperparams { lambda_init: 0.5, ..short(Algorithm::Woodbury, 3) };
    let out = run(&p, &hp, Execution::Sequential).unwrap();
    let sla: Vec<f64> = out.trace.rows.iter().map(|r| r.lambda.sla[0]).collect();
    assert!(sla.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(*sla.last().unwrap(), 0.0);
}

/// Without projection the Woodbury recursion tracks the inverse of the
/// rank-one Hessian recursion step by step.
#[test]
fn woodbury_recursion_inverts_hessian_recursion() {
    let n = 4;
    let mut rng = stream_rng(8, &[]);
    let mut h = DMatrix::identity(n, n);
    let mut m = DMatrix::identity(n, n);
    for step in 1..=200u32 {
        let b = 0.5 / (step as f64 + 1.0).powf(0.75);
        let diff = 0.01 * (rng.random::<f64>() - 0.5);
        let p = p_vector(0.5, &bernoulli_perturbation(n, &mut rng));
        let q = q_vector(0.5, &bernoulli_perturbation(n, &mut rng));
        h = hessian_rank_one_update(&h, b, diff, &p, &q);
        m = woodbury_inverse_update(&m, b, diff, &p, &q).unwrap();
        let direct = h.clone().try_inverse().unwrap();
        assert!((&m - &direct).amax() <= 1e-8, "step {step}");
    }
}

/// Mean one-sided SPSA estimate over independent perturbations lies within
/// `δ · max|H| · N` plus three standard errors of the analytic gradient.
#[test]
fn gradient_estimate_is_consistent() {
    let p = quadratic();
    let theta = [2.5, 1.0, 4.0, 2.0];
    let delta = 0.05;
    let grad = p.gradient(&theta);
    let h_bound = p.hessian().amax();
    let mut rng = stream_rng(21, &[]);
    let samples = 100_000;
    let mut sum = vec![0.0; 4];
    let mut sum_sq = vec![0.0; 4];
    let base = p.objective(&theta);
    for _ in 0..samples {
        let d = bernoulli_perturbation(4, &mut rng);
        let shifted: Vec<f64> = theta.iter().zip(&d).map(|(t, di)| t + delta * di).collect();
        for (i, g) in spsa_gradient(base, p.objective(&shifted), delta, &d).into_iter().enumerate() {
            sum[i] += g;
            sum_sq[i] += g * g;
        }
    }
    for i in 0..4 {
        let mean = sum[i] / samples as f64;
        let var = sum_sq[i] / samples as f64 - mean * mean;
        let bound = delta * h_bound * 4.0 + 3.0 * (var / samples as f64).sqrt();
        assert!((mean - grad[i]).abs() <= bound, "component {i}: {mean} vs {} (bound {bound})", grad[i]);
    }
}

/// The averaged first-order direction over 10^4 draws points within 5
/// degrees of the true gradient.
#[test]
fn mean_gradient_direction_is_aligned() {
    let p = quadratic();
    let theta = [0.5, 4.5, 1.0, 1.0];
    let delta = 0.1;
    let grad = p.gradient(&theta);
    let mut rng = stream_rng(33, &[]);
    let mut acc = vec![0.0; 4];
    let base = p.objective(&theta);
    for _ in 0..10_000 {
        let d = bernoulli_perturbation(4, &mut rng);
        let shifted: Vec<f64> = theta.iter().zip(&d).map(|(t, di)| t + delta * di).collect();
        for (a, g) in acc.iter_mut().zip(spsa_gradient(base, p.objective(&shifted), delta, &d)) {
            *a += g;
        }
    }
    let dot: f64 = acc.iter().zip(&grad).map(|(a, g)| a * g).sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let angle = (dot / (norm(&acc) * norm(&grad))).clamp(-1.0, 1.0).acos().to_degrees();
    assert!(angle < 5.0, "angle {angle}");
}

/// Flipping every perturbation sign leaves a linear function's estimate
/// unchanged, and the two one-sided estimates of a quadratic average to the
/// central difference.
#[test]
fn perturbation_sign_flip_symmetry() {
    let mut rng = stream_rng(4, &[]);
    let coeffs = [0.3, -1.2, 0.7, 2.0];
    let linear = |x: &[f64]| x.iter().zip(&coeffs).map(|(a, c)| a * c).sum::<f64>();
    let p = quadratic();
    let theta = [1.0, 2.0, 3.0, 4.0];
    let delta = 0.2;
    for _ in 0..100 {
        let d = bernoulli_perturbation(4, &mut rng);
        let neg: Vec<f64> = d.iter().map(|x| -x).collect();
        let at = |dir: &[f64], f: &dyn Fn(&[f64]) -> f64| {
            let shifted: Vec<f64> = theta.iter().zip(dir).map(|(t, di)| t + delta * di).collect();
            spsa_gradient(f(&theta), f(&shifted), delta, dir)
        };
        for (a, b) in at(&d, &linear).iter().zip(at(&neg, &linear)) {
            assert!((a - b).abs() < 1e-12);
        }
        let q = |x: &[f64]| p.objective(x);
        let plus: Vec<f64> = theta.iter().zip(&d).map(|(t, di)| t + delta * di).collect();
        let minus: Vec<f64> = theta.iter().zip(&d).map(|(t, di)| t - delta * di).collect();
        let central = (q(&plus) - q(&minus)) / (2.0 * delta);
        for (i, (a, b)) in at(&d, &q).iter().zip(at(&neg, &q)).enumerate() {
            assert!(((a + b) / 2.0 - central / d[i]).abs() < 1e-12);
        }
    }
}

/// Per-iteration multiplier movement becomes negligible next to parameter
/// movement as the run ages.
#[test]
fn multipliers_move_on_the_slowest_timescale() {
    let p = quadratic().with_noise(0.05).with_constraint(LinearConstraint { coeffs: vec![0.1, 0.0, 0.0, 0.0], offset: -0.2 }).unwrap();
    let hp = Hyperparams { iterations: 20_000, replications: 1, lambda_init: 1.0, seed: 6, ..Default::default() };
    let out = run(&p, &hp, Execution::Sequential).unwrap();
    let rows = &out.trace.rows;
    let ratios: Vec<f64> = rows
        .windows(2)
        .filter_map(|w| {
            let dl = (w[1].lambda.sla[0] - w[0].lambda.sla[0]).abs() + (w[1].lambda.queue - w[0].lambda.queue).abs();
            let dt: f64 = w[1].theta_bar.iter().zip(&w[0].theta_bar).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            (dt > 0.0).then_some(dl / dt)
        })
        .collect();
    let median = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s[s.len() / 2]
    };
    let q = ratios.len() / 4;
    let early = median(&ratios[q / 10..q]);
    let late = median(&ratios[3 * q..]);
    assert!(late < 0.5 * early, "early {early}, late {late}");
}

#[test]
fn runs_are_reproducible_across_execution_modes() {
    let p = quadratic().with_noise(0.1).discrete(true);
    for alg in Algorithm::ALL {
        let hp = short(alg, 99);
        let a = run(&p, &hp, Execution::Parallel).unwrap();
        let b = run(&p, &hp, Execution::Sequential).unwrap();
        assert_eq!(a.trace.to_csv_string(), b.trace.to_csv_string());
        assert_eq!(a.theta_star, b.theta_star);
        let c = run(&p, &Hyperparams { seed: 100, ..hp }, Execution::Parallel).unwrap();
        assert_ne!(a.trace.to_csv_string(), c.trace.to_csv_string());
    }
}

/// Counts every evaluation it is asked for.
struct Counting {
    inner: SyntheticProblem,
    calls: AtomicU64,
}

impl StageModel for Counting {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }
    fn w_max(&self) -> u32 {
        self.inner.w_max
    }
    fn n_constraints(&self) -> usize {
        self.inner.n_constraints()
    }
    fn is_discrete(&self) -> bool {
        true
    }
    fn sample(&self, point: &[f64], seed: u64) -> Result<StageSample, BoxError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.sample(point, seed)
    }
}

#[test]
fn run_consumes_two_k_r_replications() {
    for (r, k) in [(1, 1), (7, 3), (50, 10)] {
        let model = Counting { inner: quadratic(), calls: AtomicU64::new(0) };
        let hp = Hyperparams { iterations: r, replications: k, algorithm: Algorithm::Newton, ..Default::default() };
        let out = run(&model, &hp, Execution::Parallel).unwrap();
        let expected = 2 * k as u64 * r;
        assert_eq!(model.calls.load(Ordering::Relaxed), expected);
        assert_eq!(out.simulations, expected);
        assert_eq!(hp.simulations(), expected);
    }
}
