//! Cross-module properties: identities that hold across estimators and
//! invariants that must survive whole training runs.

use moweight_core::env::{
    true_pareto_front, ArmReward, DeepSeaTreasure, DstConfig, MoBandit, MoBanditConfig, MoEnvironment, MoveSet,
    TabularMdp, DEFAULT_ENUMERATION_CAP,
};
use moweight_core::pareto::weakly_dominates;
use moweight_core::rl::{
    estimator_gradient, per_objective_estimator_gradients, per_objective_gradients, reinforce_gradient,
    returns_per_objective, sample_groups, Algorithm, ClipConfig, Policy,
};
use moweight_core::trainer::{lemma_replay_error, train, RunRecord, TrainerConfig, Weighting};
use moweight_core::weighting::{ratio_bound, ScheduleConfig, WeightVector, SIMPLEX_TOL};
use moweight_core::Execution;
use proptest::prelude::*;

fn simplex(k: usize) -> impl Strategy<Value = WeightVector> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(|v| WeightVector::normalized(v).unwrap())
}

fn dst() -> Box<dyn MoEnvironment> {
    Box::new(DeepSeaTreasure::new(DstConfig::default()).unwrap())
}

fn short_run(weighting: Weighting, seed: u64, algorithm: Algorithm) -> RunRecord {
    let mut c = TrainerConfig::new(weighting, 25);
    if weighting != Weighting::GradientBased {
        c.w0 = Some(vec![0.6, 0.4]);
    }
    c.algorithm = algorithm;
    c.batch_size = 4;
    c.rollout_size = 4;
    c.lr = ScheduleConfig::constant(0.5);
    c.eta = ScheduleConfig::polynomial(2.0, 1.03);
    c.mu = 1.0;
    c.seed = seed;
    train(c, dst(), Execution::Sequential).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn scalarized_gradient_is_linear_in_weights(
        env_seed in 0u64..1000,
        theta in prop::collection::vec(-3.0f64..3.0, 9),
        w in simplex(3),
        gamma in 0.5f64..=1.0,
    ) {
        let env = TabularMdp::random(3, 3, 3, 3, env_seed).unwrap();
        let policy = Policy::tabular(3, 3).with_theta(theta).unwrap();
        let contexts: Vec<usize> = (0..env.num_contexts()).collect();
        let groups = sample_groups(&policy, &env, &contexts, 4, env_seed, 1, Execution::Sequential).unwrap();
        let clip = ClipConfig::default();
        let cases = [
            (per_objective_gradients(&policy, &groups, gamma, None).unwrap(), reinforce_gradient(&policy, &groups, &w, gamma).unwrap()),
            (
                per_objective_estimator_gradients(&policy, &groups, Algorithm::Rloo, gamma, &clip, None).unwrap(),
                estimator_gradient(&policy, &groups, w.as_slice(), Algorithm::Rloo, gamma, &clip).unwrap(),
            ),
        ];
        for (per, scalar) in cases {
            for (d, s) in scalar.iter().enumerate() {
                let combined: f64 = per.iter().zip(w.as_slice()).map(|(g, wi)| wi * g[d]).sum();
                prop_assert!((combined - s).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn sampled_returns_stay_in_reward_bounds(env_seed in 0u64..1000, theta in prop::collection::vec(-3.0f64..3.0, 12)) {
        let env = TabularMdp::random(3, 4, 5, 2, env_seed).unwrap();
        let max = env.descriptor().reward_max;
        let policy = Policy::tabular(3, 4).with_theta(theta).unwrap();
        let groups = sample_groups(&policy, &env, &[0], 8, env_seed, 0, Execution::Sequential).unwrap();
        for t in &groups[0].trajectories {
            for step in &t.steps {
                prop_assert!(step.reward.iter().all(|&r| (0.0..=max).contains(&r)));
            }
        }
    }

    #[test]
    fn bandit_outcomes_are_covered_by_the_enumerated_front(
        arms in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 2..6),
        theta in prop::collection::vec(-3.0f64..3.0, 5),
        seed in 0u64..1000,
    ) {
        let n = arms.len();
        let config = MoBanditConfig {
            arms: arms.iter().map(|a| a.iter().map(|&v| ArmReward::Deterministic(v)).collect()).collect(),
        };
        let env = MoBandit::new(config).unwrap();
        let front = true_pareto_front(&env, DEFAULT_ENUMERATION_CAP).unwrap();
        let policy = Policy::tabular(1, n).with_theta(theta[..n].to_vec()).unwrap();
        let groups = sample_groups(&policy, &env, &[0], 16, seed, 0, Execution::Sequential).unwrap();
        for t in &groups[0].trajectories {
            let ret: Vec<f64> = returns_per_objective(t, 1.0).unwrap().iter().map(|r| r[0]).collect();
            let p = moweight_core::pareto::ObjectiveVector::new(ret).unwrap();
            prop_assert!(front.iter().any(|f| weakly_dominates(f, &p).unwrap()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn training_keeps_weights_on_the_simplex_and_under_the_ratio_ceiling(seed in 0u64..10_000) {
        let rec = short_run(Weighting::GradientBased, seed, Algorithm::Rloo);
        let w0 = &rec.steps[0].weights;
        let mut ell = 0.0;
        let mut max_influence: f64 = 0.0;
        for s in &rec.steps {
            prop_assert!((s.weights.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL);
            prop_assert!(s.weights.iter().all(|&w| w > 0.0));
            if let (Some(tau), Some(inf)) = (s.tau, &s.influence) {
                ell += tau;
                max_influence = max_influence.max(inf.iter().fold(0.0f64, |m, x| m.max(x.abs())));
            }
        }
        // |I_i| <= K C^2 holds with C^2 = max |I| / K, which is all the bound uses.
        let k = w0.len();
        let c = (max_influence / k as f64).sqrt().max(f64::MIN_POSITIVE);
        for s in &rec.steps {
            for i in 0..k {
                for j in 0..k {
                    let bound = ratio_bound(w0[i], w0[j], k, c, ell).unwrap();
                    prop_assert!(s.weights[i] / s.weights[j] <= bound * (1.0 + 1e-12));
                }
            }
        }
        prop_assert!(lemma_replay_error(&rec).unwrap() <= 1e-8);
    }

    #[test]
    fn buffer_hypervolume_never_decreases(seed in 0u64..10_000, algo in prop::sample::select(vec![Algorithm::Reinforce, Algorithm::Rloo, Algorithm::Grpo])) {
        for weighting in [Weighting::Fixed, Weighting::HypervolumeGuided, Weighting::GradientBased] {
            let rec = short_run(weighting, seed, algo);
            let hvs: Vec<f64> = rec.steps.iter().filter_map(|s| s.buffer_hv).collect();
            prop_assert!(hvs.windows(2).all(|w| w[1] >= w[0]));
            prop_assert_eq!(hvs.last().copied(), Some(rec.buffer.hypervolume()));
        }
    }

    #[test]
    fn same_seed_same_record(seed in 0u64..10_000) {
        let a = short_run(Weighting::HypervolumeGuided, seed, Algorithm::Grpo);
        let b = short_run(Weighting::HypervolumeGuided, seed, Algorithm::Grpo);
        prop_assert_eq!(a.to_jsonl(), b.to_jsonl());
        prop_assert_eq!(a.checkpoints, b.checkpoints);
    }
}

#[test]
fn both_move_sets_share_the_default_front() {
    let front = |moves| {
        let env = DeepSeaTreasure::new(DstConfig { moves, ..DstConfig::default() }).unwrap();
        true_pareto_front(&env, DEFAULT_ENUMERATION_CAP).unwrap()
    };
    assert_eq!(front(MoveSet::Compass), front(MoveSet::DownRight));
}
