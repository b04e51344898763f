use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_action, EnvDescriptor, MoEnvironment, ObjectiveInfo, Outcome, REFERENCE_MARGIN};
use crate::error::{Error, Result};
use crate::pareto::ReferencePoint;
use crate::rng::{self, domain};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    pub state: usize,
    pub action: usize,
    pub prob: f64,
    pub next_state: usize,
    pub reward: Vec<f64>,
    #[serde(default)]
    pub done: bool,
}

/// Explicit transition table; one initial state per context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularMdpConfig {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub initial_states: Vec<usize>,
    pub transitions: Vec<TransitionEntry>,
}

#[derive(Clone, Debug)]
pub struct TabularMdp {
    table: Vec<Vec<Outcome>>,
    initial_states: Vec<usize>,
    descriptor: EnvDescriptor,
}

impl TabularMdp {
    pub fn new(config: TabularMdpConfig) -> Result<Self> {
        let (s, a) = (config.num_states, config.num_actions);
        if s == 0 || a == 0 || config.horizon == 0 {
            return Err(Error::config("tabular MDP needs states, actions and a horizon"));
        }
        if config.initial_states.is_empty() || config.initial_states.iter().any(|&x| x >= s) {
            return Err(Error::config("initial states must be non-empty and in range"));
        }
        let k = config
            .transitions
            .first()
            .map(|t| t.reward.len())
            .ok_or_else(|| Error::config("transition table is empty"))?;
        if k == 0 {
            return Err(Error::config("rewards need at least one objective"));
        }
        let mut table = vec![Vec::new(); s * a];
        let mut reward_max = 0.0f64;
        for t in config.transitions {
            if t.state >= s || t.action >= a || t.next_state >= s {
                return Err(Error::config(format!("transition {}/{} out of range", t.state, t.action)));
            }
            if t.reward.len() != k || t.reward.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
                return Err(Error::config("rewards must have a common length and be finite, >= 0"));
            }
            if !(t.prob > 0.0 && t.prob <= 1.0) {
                return Err(Error::config("transition probabilities must lie in (0, 1]"));
            }
            reward_max = t.reward.iter().copied().fold(reward_max, f64::max);
            table[t.state * a + t.action].push(Outcome {
                prob: t.prob,
                next_state: t.next_state,
                reward: t.reward,
                done: t.done,
            });
        }
        for (i, row) in table.iter().enumerate() {
            let total: f64 = row.iter().map(|o| o.prob).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::config(format!(
                    "state {} action {}: probabilities sum to {total}",
                    i / a,
                    i % a
                )));
            }
        }
        let descriptor = EnvDescriptor {
            name: "tabular_mdp".into(),
            num_states: s,
            num_actions: a,
            horizon: config.horizon,
            reward_max,
            objectives: (0..k).map(|j| ObjectiveInfo::plain(&format!("objective_{j}"))).collect(),
            default_reference: ReferencePoint::new(vec![-REFERENCE_MARGIN; k])?,
        };
        Ok(Self { table, initial_states: config.initial_states, descriptor })
    }

    /// Single-action deterministic chain `0 -> 1 -> ... -> n-1` paying
    /// `rewards[i]` on leaving state `i`.
    pub fn chain(n: usize, rewards: &[Vec<f64>]) -> Result<Self> {
        if rewards.len() != n {
            return Err(Error::config("one reward vector per chain state"));
        }
        let transitions = rewards
            .iter()
            .enumerate()
            .map(|(i, r)| TransitionEntry {
                state: i,
                action: 0,
                prob: 1.0,
                next_state: (i + 1).min(n - 1),
                reward: r.clone(),
                done: i + 1 == n,
            })
            .collect();
        Self::new(TabularMdpConfig { num_states: n, num_actions: 1, horizon: n, initial_states: vec![0], transitions })
    }

    /// Random stochastic MDP with two outcomes per (state, action) and
    /// rewards in [0, 1].
    pub fn random(states: usize, actions: usize, horizon: usize, objectives: usize, seed: u64) -> Result<Self> {
        let mut r = rng::stream(seed, &[domain::INIT]);
        let mut transitions = Vec::new();
        for s in 0..states {
            for a in 0..actions {
                let p: f64 = r.gen_range(0.1..0.9);
                for prob in [p, 1.0 - p] {
                    transitions.push(TransitionEntry {
                        state: s,
                        action: a,
                        prob,
                        next_state: r.gen_range(0..states),
                        reward: (0..objectives).map(|_| r.gen::<f64>()).collect(),
                        done: r.gen_bool(0.2),
                    });
                }
            }
        }
        Self::new(TabularMdpConfig { num_states: states, num_actions: actions, horizon, initial_states: vec![0], transitions })
    }
}

impl MoEnvironment for TabularMdp {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn num_contexts(&self) -> usize {
        self.initial_states.len()
    }

    fn initial_state(&self, context: usize) -> Result<usize> {
        self.initial_states
            .get(context)
            .copied()
            .ok_or_else(|| Error::invalid(format!("context {context} out of range")))
    }

    fn outcomes(&self, state: usize, _t: usize, action: usize) -> Result<Vec<Outcome>> {
        check_action(&self.descriptor, state, action)?;
        Ok(self.table[state * self.descriptor.num_actions + action].clone())
    }

    fn box_clone(&self) -> Box<dyn MoEnvironment> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probabilities_must_sum_to_one() {
        let cfg = TabularMdpConfig {
            num_states: 1,
            num_actions: 1,
            horizon: 1,
            initial_states: vec![0],
            transitions: vec![TransitionEntry { state: 0, action: 0, prob: 0.5, next_state: 0, reward: vec![1.0], done: true }],
        };
        assert!(TabularMdp::new(cfg).is_err());
    }

    #[test]
    fn random_mdps_are_valid_and_seeded() {
        let a = TabularMdp::random(3, 2, 4, 2, 1).unwrap();
        let b = TabularMdp::random(3, 2, 4, 2, 1).unwrap();
        assert_eq!(a.table, b.table);
    }
}
