use serde::{Deserialize, Serialize};

use super::trajectory::{returns_per_objective, scalar_returns};
use super::update::{clipped_surrogate_coef, ClipConfig};
use super::{Policy, RolloutGroup};
use crate::error::{check_dim, Error, Result};
use crate::weighting::WeightVector;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[default]
    #[serde(rename = "REINFORCE", alias = "reinforce")]
    Reinforce,
    #[serde(rename = "RLOO", alias = "rloo")]
    Rloo,
    #[serde(rename = "GRPO", alias = "grpo")]
    Grpo,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Reinforce => "REINFORCE",
            Algorithm::Rloo => "RLOO",
            Algorithm::Grpo => "GRPO",
        })
    }
}

/// Leave-one-out baseline: `a_i = r_i - mean_{j != i} r_j`.
pub fn rloo_advantages(rewards: &[f64]) -> Result<Vec<f64>> {
    let g = rewards.len();
    if g < 2 {
        return Err(Error::invalid("leave-one-out baseline needs a group of at least 2"));
    }
    let total: f64 = rewards.iter().sum();
    let denom = (g - 1) as f64;
    Ok(rewards.iter().map(|&r| r - (total - r) / denom).collect())
}

/// Group mean/std normalization with population std; constant groups map to zeros.
pub fn grpo_advantages(rewards: &[f64]) -> Result<Vec<f64>> {
    let g = rewards.len();
    if g < 2 {
        return Err(Error::invalid("group normalization needs a group of at least 2"));
    }
    let n = g as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let centered: Vec<f64> = rewards.iter().map(|r| r - mean).collect();
    let std = (centered.iter().map(|c| c * c).sum::<f64>() / n).sqrt();
    // Relative guard: spreads at rounding level are treated as constant.
    let scale = rewards.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if std == 0.0 || std <= 1e-12 * scale {
        return Ok(vec![0.0; g]);
    }
    Ok(centered.into_iter().map(|c| c / std).collect())
}

fn check_groups(groups: &[RolloutGroup]) -> Result<usize> {
    let n: usize = groups.iter().map(|g| g.trajectories.len()).sum();
    if n == 0 {
        return Err(Error::invalid("rollout groups are empty"));
    }
    Ok(n)
}

/// Mean over trajectories of `sum_t coef(g, j, t) * grad log pi(a_t | s_t)`.
fn score_sum(
    policy: &Policy,
    groups: &[RolloutGroup],
    mut coef: impl FnMut(usize, usize, usize) -> f64,
) -> Result<Vec<f64>> {
    let n = check_groups(groups)? as f64;
    let mut out = vec![0.0; policy.num_params()];
    for (gi, group) in groups.iter().enumerate() {
        for (j, traj) in group.trajectories.iter().enumerate() {
            for (t, step) in traj.steps.iter().enumerate() {
                let c = coef(gi, j, t);
                if c != 0.0 {
                    policy.accumulate_log_prob_grad(step.state, step.action, c / n, &mut out)?;
                }
            }
        }
    }
    Ok(out)
}

fn weighted_reinforce(policy: &Policy, groups: &[RolloutGroup], weights: &[f64], gamma: f64) -> Result<Vec<f64>> {
    let returns: Vec<Vec<Vec<f64>>> = groups
        .iter()
        .map(|g| g.trajectories.iter().map(|t| scalar_returns(t, weights, gamma)).collect())
        .collect::<Result<_>>()?;
    score_sum(policy, groups, |g, j, t| returns[g][j][t])
}

/// Vanilla REINFORCE on the scalarized reward stream.
pub fn reinforce_gradient(policy: &Policy, groups: &[RolloutGroup], w: &WeightVector, gamma: f64) -> Result<Vec<f64>> {
    weighted_reinforce(policy, groups, w.as_slice(), gamma)
}

fn apply_mask(policy: &Policy, mask: Option<&[bool]>, grads: &mut [Vec<f64>]) -> Result<()> {
    if let Some(m) = mask {
        check_dim(policy.num_params(), m.len())?;
        for g in grads.iter_mut() {
            for (x, &keep) in g.iter_mut().zip(m) {
                if !keep {
                    *x = 0.0;
                }
            }
        }
    }
    Ok(())
}

/// One REINFORCE gradient per objective from the same trajectories, with
/// out-of-mask coordinates zeroed.
pub fn per_objective_gradients(
    policy: &Policy,
    groups: &[RolloutGroup],
    gamma: f64,
    mask: Option<&[bool]>,
) -> Result<Vec<Vec<f64>>> {
    check_groups(groups)?;
    let returns: Vec<Vec<Vec<Vec<f64>>>> = groups
        .iter()
        .map(|g| g.trajectories.iter().map(|t| returns_per_objective(t, gamma)).collect())
        .collect::<Result<_>>()?;
    let k = returns[0]
        .first()
        .map(|r| r.len())
        .ok_or_else(|| Error::invalid("first group is empty"))?;
    let mut grads = (0..k)
        .map(|i| score_sum(policy, groups, |g, j, t| returns[g][j][i][t]))
        .collect::<Result<Vec<_>>>()?;
    apply_mask(policy, mask, &mut grads)?;
    Ok(grads)
}

/// Gradient of the chosen estimator for reward weights `weights`.
///
/// REINFORCE uses per-step returns. RLOO and GRPO use the episode return
/// `G_0` of each trajectory, baselined within its group, as the advantage of
/// every step.
pub fn estimator_gradient(
    policy: &Policy,
    groups: &[RolloutGroup],
    weights: &[f64],
    algorithm: Algorithm,
    gamma: f64,
    clip: &ClipConfig,
) -> Result<Vec<f64>> {
    if algorithm == Algorithm::Reinforce {
        return weighted_reinforce(policy, groups, weights, gamma);
    }
    check_groups(groups)?;
    let advantages: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let scores = g
                .trajectories
                .iter()
                .map(|t| scalar_returns(t, weights, gamma).map(|r| r[0]))
                .collect::<Result<Vec<_>>>()?;
            match algorithm {
                Algorithm::Rloo => rloo_advantages(&scores),
                _ => grpo_advantages(&scores)?
                    .into_iter()
                    .map(|a| clipped_surrogate_coef(1.0, a, clip))
                    .collect::<Result<Vec<_>>>(),
            }
        })
        .collect::<Result<_>>()?;
    score_sum(policy, groups, |g, j, _| advantages[g][j])
}

/// [`estimator_gradient`] for each objective's basis weight, masked.
pub fn per_objective_estimator_gradients(
    policy: &Policy,
    groups: &[RolloutGroup],
    algorithm: Algorithm,
    gamma: f64,
    clip: &ClipConfig,
    mask: Option<&[bool]>,
) -> Result<Vec<Vec<f64>>> {
    if algorithm == Algorithm::Reinforce {
        return per_objective_gradients(policy, groups, gamma, mask);
    }
    let k = groups
        .iter()
        .flat_map(|g| g.trajectories.first())
        .next()
        .map(|t| t.num_objectives())
        .ok_or_else(|| Error::invalid("rollout groups are empty"))?;
    let mut grads = (0..k)
        .map(|i| {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            estimator_gradient(policy, groups, &e, algorithm, gamma, clip)
        })
        .collect::<Result<Vec<_>>>()?;
    apply_mask(policy, mask, &mut grads)?;
    Ok(grads)
}
