use serde::{Deserialize, Serialize};

use super::MoEnvironment;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::pareto::ObjectiveVector;
use crate::rl::{rollout, ActionSelection, Policy};
use crate::rng::{self, domain};

/// Fixed evaluation episodes. Episode `i` runs context
/// `contexts[i / episodes_per_context]` with action stream `(seed, i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSet {
    pub contexts: Vec<usize>,
    pub episodes_per_context: usize,
    pub seed: u64,
    #[serde(default)]
    pub greedy: bool,
}

impl EvaluationSet {
    pub fn all_contexts(env: &dyn MoEnvironment, episodes_per_context: usize, seed: u64) -> Self {
        Self { contexts: (0..env.num_contexts()).collect(), episodes_per_context, seed, greedy: false }
    }

    pub fn len(&self) -> usize {
        self.contexts.len() * self.episodes_per_context
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Mean objectives and mean raw metrics over an evaluation set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub objectives: ObjectiveVector,
    pub raw_metrics: Vec<f64>,
}

pub fn evaluate(policy: &Policy, env: &dyn MoEnvironment, set: &EvaluationSet, exec: Execution) -> Result<ObjectiveVector> {
    Ok(evaluate_detailed(policy, env, set, exec)?.objectives)
}

pub fn evaluate_detailed(
    policy: &Policy,
    env: &dyn MoEnvironment,
    set: &EvaluationSet,
    exec: Execution,
) -> Result<Evaluation> {
    if set.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    policy.check_compatible(env.descriptor())?;
    let selection = if set.greedy { ActionSelection::Greedy } else { ActionSelection::Sample };
    let per_episode = exec.try_map_range(set.len(), |i| {
        let context = set.contexts[i / set.episodes_per_context];
        let mut r = rng::stream(set.seed, &[domain::EVAL, i as u64]);
        let traj = rollout(policy, env, context, &mut r, selection)?;
        Ok((traj.total_reward(), env.raw_metrics(&traj)))
    })?;
    let k = env.descriptor().num_objectives();
    let n = per_episode.len() as f64;
    let mut objectives = vec![0.0; k];
    let mut raw = vec![0.0; per_episode[0].1.len()];
    for (obj, metrics) in &per_episode {
        for (acc, v) in objectives.iter_mut().zip(obj) {
            *acc += v;
        }
        for (acc, v) in raw.iter_mut().zip(metrics) {
            *acc += v;
        }
    }
    objectives.iter_mut().chain(raw.iter_mut()).for_each(|x| *x /= n);
    Ok(Evaluation { objectives: ObjectiveVector::new(objectives)?, raw_metrics: raw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ArmReward, DeepSeaTreasure, DstAction, DstConfig, MoBandit, MoBanditConfig};

    fn two_arm() -> MoBandit {
        MoBandit::new(MoBanditConfig {
            arms: vec![
                vec![ArmReward::Deterministic(1.0), ArmReward::Deterministic(0.0)],
                vec![ArmReward::Deterministic(0.0), ArmReward::Deterministic(1.0)],
            ],
        })
        .unwrap()
    }

    #[test]
    fn empty_set_rejected() {
        let env = two_arm();
        let set = EvaluationSet { contexts: vec![], episodes_per_context: 5, seed: 0, greedy: false };
        assert!(evaluate(&Policy::tabular(1, 2), &env, &set, Execution::Sequential).is_err());
    }

    #[test]
    fn uniform_policy_on_two_arm_bandit_approaches_half() {
        let env = two_arm();
        let set = EvaluationSet::all_contexts(&env, 40_000, 9);
        let v = evaluate(&Policy::tabular(1, 2), &env, &set, Execution::default()).unwrap();
        // 4 binomial standard errors at n = 40000.
        for x in v.as_slice() {
            assert!((x - 0.5).abs() < 4.0 * 0.5 / 200.0, "{v:?}");
        }
    }

    #[test]
    fn repeatable_and_mode_independent() {
        let env = DeepSeaTreasure::new(DstConfig::default()).unwrap();
        let p = Policy::tabular(env.descriptor().num_states, env.descriptor().num_actions);
        let set = EvaluationSet::all_contexts(&env, 64, 3);
        let a = evaluate_detailed(&p, &env, &set, Execution::Sequential).unwrap();
        let b = evaluate_detailed(&p, &env, &set, Execution::Parallel).unwrap();
        let c = evaluate_detailed(&p.clone(), &env, &set, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn deterministic_policy_gives_exact_objectives() {
        let env = DeepSeaTreasure::new(DstConfig::default()).unwrap();
        let n = env.descriptor().num_states;
        let na = env.descriptor().num_actions;
        let mut theta = vec![0.0; n * na];
        theta[env.config().moves.index_of(DstAction::Down).unwrap()] = 50.0;
        let p = Policy::tabular(n, na).with_theta(theta).unwrap();
        let set = EvaluationSet { contexts: vec![0], episodes_per_context: 3, seed: 1, greedy: true };
        let v = evaluate(&p, &env, &set, Execution::Sequential).unwrap();
        for (got, want) in v.as_slice().iter().zip(env.treasure_objectives(0, 1)) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
        assert_eq!(v, evaluate(&p, &env, &set, Execution::Parallel).unwrap());
    }
}
