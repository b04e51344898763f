//! Softmax policies, trajectories, and the on-policy gradient estimators.

mod estimators;
mod kl;
mod oracle;
mod policy;
mod trajectory;
mod update;

pub use estimators::{
    estimator_gradient, grpo_advantages, per_objective_estimator_gradients, per_objective_gradients,
    reinforce_gradient, rloo_advantages, Algorithm,
};
pub use kl::policy_kl;
pub use oracle::{exact_gradient_oracle, exact_objectives, ExactGradient};
pub use policy::{Policy, PolicyCheckpoint, PolicyClass};
pub use trajectory::{
    returns_per_objective, rollout, sample_groups, sample_trajectory, scalar_returns, ActionSelection, RolloutGroup,
    Trajectory, Transition,
};
pub use update::{clipped_surrogate_coef, policy_update, ClipConfig};

/// Default maximum number of enumerated trajectories for exact oracles.
pub const DEFAULT_ORACLE_CAP: usize = 1 << 20;
