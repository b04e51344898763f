use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::Policy;
use crate::env::MoEnvironment;
use crate::error::{check_dim, Error, Result};
use crate::exec::Execution;
use crate::rng::{self, domain};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    /// Reward vector received after taking `action`.
    pub reward: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub context: usize,
    pub steps: Vec<Transition>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn num_objectives(&self) -> usize {
        self.steps.first().map_or(0, |s| s.reward.len())
    }

    /// Undiscounted per-objective episode total.
    pub fn total_reward(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.num_objectives()];
        for s in &self.steps {
            for (t, r) in total.iter_mut().zip(&s.reward) {
                *t += r;
            }
        }
        total
    }
}

/// Trajectories sharing one context, sampled from the same policy.
#[derive(Clone, Debug, PartialEq)]
pub struct RolloutGroup {
    pub context: usize,
    pub trajectories: Vec<Trajectory>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionSelection {
    Sample,
    Greedy,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid(format!("discount {gamma} outside (0, 1]")));
    }
    Ok(())
}

fn discounted_suffix_sums(rewards: impl DoubleEndedIterator<Item = f64> + ExactSizeIterator, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (i, r) in rewards.enumerate().rev() {
        acc = r + gamma * acc;
        out[i] = acc;
    }
    out
}

/// `G[i][t] = sum_l gamma^l r^i_{t+l}`.
pub fn returns_per_objective(traj: &Trajectory, gamma: f64) -> Result<Vec<Vec<f64>>> {
    check_gamma(gamma)?;
    if traj.is_empty() {
        return Err(Error::invalid("empty trajectory"));
    }
    let k = traj.num_objectives();
    for s in &traj.steps {
        check_dim(k, s.reward.len())?;
    }
    Ok((0..k)
        .map(|i| discounted_suffix_sums(traj.steps.iter().map(|s| s.reward[i]), gamma))
        .collect())
}

/// Returns of the pre-scalarized reward stream `weights . r_t`.
pub fn scalar_returns(traj: &Trajectory, weights: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    if traj.is_empty() {
        return Err(Error::invalid("empty trajectory"));
    }
    for s in &traj.steps {
        check_dim(weights.len(), s.reward.len())?;
    }
    Ok(discounted_suffix_sums(
        traj.steps.iter().map(|s| crate::weighting::dot(weights, &s.reward)),
        gamma,
    ))
}

pub fn rollout<R: RngCore>(
    policy: &Policy,
    env: &dyn MoEnvironment,
    context: usize,
    rng: &mut R,
    selection: ActionSelection,
) -> Result<Trajectory> {
    let horizon = env.descriptor().horizon;
    let mut state = env.initial_state(context)?;
    let mut steps = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let action = match selection {
            ActionSelection::Greedy => policy.greedy_action(state)?,
            ActionSelection::Sample => sample_action(&policy.probs(state)?, rng),
        };
        let outcome = env.step(state, t, action, rng)?;
        steps.push(Transition { state, action, reward: outcome.reward });
        if outcome.done {
            break;
        }
        state = outcome.next_state;
    }
    Ok(Trajectory { context, steps })
}

pub fn sample_trajectory<R: RngCore>(
    policy: &Policy,
    env: &dyn MoEnvironment,
    context: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    rollout(policy, env, context, rng, ActionSelection::Sample)
}

fn sample_action<R: RngCore>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Samples `group_size` trajectories for each context. Trajectory `j` of
/// group `g` at training step `step` draws from stream `(seed, step, g, j)`.
pub fn sample_groups(
    policy: &Policy,
    env: &dyn MoEnvironment,
    contexts: &[usize],
    group_size: usize,
    seed: u64,
    step: u64,
    exec: Execution,
) -> Result<Vec<RolloutGroup>> {
    if group_size == 0 || contexts.is_empty() {
        return Err(Error::invalid("need at least one context and one rollout per group"));
    }
    let mut trajs = exec.try_map_range(contexts.len() * group_size, |i| {
        let (g, j) = (i / group_size, i % group_size);
        let mut r = rng::stream(seed, &[domain::ROLLOUT, step, g as u64, j as u64]);
        sample_trajectory(policy, env, contexts[g], &mut r)
    })?;
    let mut groups = Vec::with_capacity(contexts.len());
    for &context in contexts.iter().rev() {
        let trajectories = trajs.split_off(trajs.len() - group_size);
        groups.push(RolloutGroup { context, trajectories });
    }
    groups.reverse();
    Ok(groups)
}
