use super::trajectory::scalar_returns;
use super::{Policy, Trajectory, Transition};
use crate::env::MoEnvironment;
use crate::error::{check_dim, Error, Result};

/// Expectation of the REINFORCE estimator, computed by enumerating every
/// trajectory. `objective` is the expected scalarized episode return
/// `E[G_0]`; with `gamma = 1` the gradient is exactly its derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactGradient {
    pub objective: f64,
    pub gradient: Vec<f64>,
    pub trajectories: usize,
}

struct Enumerator<'a> {
    policy: &'a Policy,
    env: &'a dyn MoEnvironment,
    horizon: usize,
    cap: usize,
    count: usize,
}

impl Enumerator<'_> {
    /// Calls `leaf(prob, trajectory)` for every complete trajectory from `context`.
    fn run(&mut self, context: usize, leaf: &mut dyn FnMut(f64, &Trajectory) -> Result<()>) -> Result<()> {
        let state = self.env.initial_state(context)?;
        let mut traj = Trajectory { context, steps: Vec::with_capacity(self.horizon) };
        self.visit(state, 1.0, &mut traj, leaf)
    }

    fn visit(
        &mut self,
        state: usize,
        prob: f64,
        traj: &mut Trajectory,
        leaf: &mut dyn FnMut(f64, &Trajectory) -> Result<()>,
    ) -> Result<()> {
        let t = traj.steps.len();
        let probs = self.policy.probs(state)?;
        for (action, &pa) in probs.iter().enumerate() {
            for o in self.env.outcomes(state, t, action)? {
                let p = prob * pa * o.prob;
                traj.steps.push(Transition { state, action, reward: o.reward });
                if o.done || t + 1 == self.horizon {
                    self.count += 1;
                    if self.count > self.cap {
                        return Err(Error::EnumerationCap(format!("more than {} trajectories", self.cap)));
                    }
                    leaf(p, traj)?;
                } else {
                    self.visit(o.next_state, p, traj, leaf)?;
                }
                traj.steps.pop();
            }
        }
        Ok(())
    }
}

/// Contexts are weighted uniformly.
pub fn exact_gradient_oracle(
    policy: &Policy,
    env: &dyn MoEnvironment,
    weights: &[f64],
    gamma: f64,
    cap: usize,
) -> Result<ExactGradient> {
    policy.check_compatible(env.descriptor())?;
    check_dim(env.descriptor().num_objectives(), weights.len())?;
    let contexts = env.num_contexts();
    let mut e = Enumerator { policy, env, horizon: env.descriptor().horizon, cap, count: 0 };
    let mut objective = 0.0;
    let mut gradient = vec![0.0; policy.num_params()];
    for c in 0..contexts {
        let scale = 1.0 / contexts as f64;
        e.run(c, &mut |p, traj| {
            let g = scalar_returns(traj, weights, gamma)?;
            objective += scale * p * g[0];
            for (step, gt) in traj.steps.iter().zip(&g) {
                policy.accumulate_log_prob_grad(step.state, step.action, scale * p * gt, &mut gradient)?;
            }
            Ok(())
        })?;
    }
    Ok(ExactGradient { objective, gradient, trajectories: e.count })
}

/// Expected undiscounted per-objective episode totals, contexts weighted uniformly.
pub fn exact_objectives(policy: &Policy, env: &dyn MoEnvironment, cap: usize) -> Result<Vec<f64>> {
    policy.check_compatible(env.descriptor())?;
    let contexts = env.num_contexts();
    let mut e = Enumerator { policy, env, horizon: env.descriptor().horizon, cap, count: 0 };
    let mut total = vec![0.0; env.descriptor().num_objectives()];
    for c in 0..contexts {
        let scale = 1.0 / contexts as f64;
        e.run(c, &mut |p, traj| {
            for (acc, r) in total.iter_mut().zip(traj.total_reward()) {
                *acc += scale * p * r;
            }
            Ok(())
        })?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ArmReward, MoBandit, MoBanditConfig, TabularMdp};
    use crate::rl::{reinforce_gradient, sample_groups, DEFAULT_ORACLE_CAP};
    use crate::exec::Execution;
    use crate::weighting::WeightVector;

    fn det_bandit(rows: &[&[f64]]) -> MoBandit {
        MoBandit::new(MoBanditConfig {
            arms: rows.iter().map(|r| r.iter().map(|&v| ArmReward::Deterministic(v)).collect()).collect(),
        })
        .unwrap()
    }

    #[test]
    fn uniform_two_arm_objectives() {
        let env = det_bandit(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let j = exact_objectives(&Policy::tabular(1, 2), &env, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(j, vec![0.5, 0.5]);
    }

    #[test]
    fn two_arm_closed_form() {
        let (r1, r2) = (0.9, 0.2);
        let env = det_bandit(&[&[r1], &[r2]]);
        let theta = vec![0.4, -0.3];
        let p = Policy::tabular(1, 2).with_theta(theta).unwrap();
        let pr = p.probs(0).unwrap()[0];
        let g = exact_gradient_oracle(&p, &env, &[1.0], 1.0, DEFAULT_ORACLE_CAP).unwrap();
        let c = pr * (1.0 - pr) * (r1 - r2);
        assert!((g.gradient[0] - c).abs() < 1e-15);
        assert!((g.gradient[1] + c).abs() < 1e-15);
    }

    #[test]
    fn deterministic_single_path_matches_sample_estimate() {
        // One action, deterministic chain: the only trajectory has probability 1.
        let env = TabularMdp::chain(3, &[vec![0.2, 0.5], vec![0.0, 1.0], vec![0.7, 0.1]]).unwrap();
        let p = Policy::tabular(3, 1);
        let exact = exact_gradient_oracle(&p, &env, &[0.5, 0.5], 1.0, DEFAULT_ORACLE_CAP).unwrap();
        let groups = sample_groups(&p, &env, &[0], 2, 0, 0, Execution::Sequential).unwrap();
        let sampled = reinforce_gradient(&p, &groups, &WeightVector::uniform(2), 1.0).unwrap();
        assert_eq!(exact.trajectories, 1);
        assert_eq!(exact.gradient, sampled);
        assert!((exact.objective - 1.25).abs() < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        let env = TabularMdp::random(3, 3, 4, 2, 7).unwrap();
        let p = Policy::tabular(3, 3);
        assert!(matches!(exact_objectives(&p, &env, 5), Err(Error::EnumerationCap(_))));
    }
}
