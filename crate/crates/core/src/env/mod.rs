//! Small multi-objective environments with enumerable ground truth.
//!
//! An environment is described by its transition/reward distribution
//! ([`MoEnvironment::outcomes`]); sampling, exact enumeration and front
//! enumeration are all built on that one method. Rewards may depend on the
//! step index `t` (e.g. time-to-treasure), while policies condition on the
//! state alone.

mod bandit;
mod dst;
mod eval;
mod front;
mod synthetic;
mod tabular;

pub use bandit::{ArmReward, MoBandit, MoBanditConfig};
pub use dst::{DeepSeaTreasure, DstAction, DstConfig, MoveSet};
pub use eval::{evaluate, evaluate_detailed, Evaluation, EvaluationSet};
pub use front::{nonconvexity_certificate, true_pareto_front, NonConvexity, DEFAULT_ENUMERATION_CAP};
pub use synthetic::{SyntheticReasoning, SyntheticReasoningConfig, Template};
pub use tabular::{TabularMdp, TabularMdpConfig, TransitionEntry};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pareto::ReferencePoint;
use crate::rl::Trajectory;

/// Margin below the smallest achievable objective value used for default
/// reference points.
pub const REFERENCE_MARGIN: f64 = 1e-6;

/// One possible result of taking an action.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub prob: f64,
    pub next_state: usize,
    pub reward: Vec<f64>,
    pub done: bool,
}

/// Maps an objective value back to the raw metric it was derived from:
/// `raw = scale * value + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    Identity,
    Affine { scale: f64, offset: f64 },
}

impl Report {
    pub fn apply(&self, value: f64) -> f64 {
        match *self {
            Report::Identity => value,
            Report::Affine { scale, offset } => scale * value + offset,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveInfo {
    pub name: String,
    /// Reported name of the raw metric, when it differs from `name`.
    pub raw_name: Option<String>,
    pub report: Report,
}

impl ObjectiveInfo {
    pub fn plain(name: &str) -> Self {
        Self { name: name.to_string(), raw_name: None, report: Report::Identity }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvDescriptor {
    pub name: String,
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// Upper bound on every per-step reward component (lower bound is 0).
    pub reward_max: f64,
    pub objectives: Vec<ObjectiveInfo>,
    /// Componentwise minimum achievable episode objective minus [`REFERENCE_MARGIN`].
    pub default_reference: ReferencePoint,
}

impl EnvDescriptor {
    pub fn num_objectives(&self) -> usize {
        self.objectives.len()
    }
}

pub trait MoEnvironment: Send + Sync {
    fn descriptor(&self) -> &EnvDescriptor;

    /// Number of distinct contexts (initial states / query types).
    fn num_contexts(&self) -> usize {
        1
    }

    fn initial_state(&self, context: usize) -> Result<usize>;

    /// Full outcome distribution of taking `action` in `state` at step `t`.
    fn outcomes(&self, state: usize, t: usize, action: usize) -> Result<Vec<Outcome>>;

    /// Samples one outcome. Deterministic transitions consume no randomness.
    fn step(&self, state: usize, t: usize, action: usize, rng: &mut dyn RngCore) -> Result<Outcome> {
        let mut outcomes = self.outcomes(state, t, action)?;
        if outcomes.len() == 1 {
            return Ok(outcomes.pop().expect("one outcome"));
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let last = outcomes.len() - 1;
        for (i, o) in outcomes.iter().enumerate() {
            acc += o.prob;
            if u < acc || i == last {
                return Ok(outcomes.swap_remove(i));
            }
        }
        Err(Error::invalid("empty outcome distribution"))
    }

    /// Names of raw (un-oriented) metrics logged per episode.
    fn raw_metric_names(&self) -> Vec<String> {
        Vec::new()
    }

    fn raw_metrics(&self, _trajectory: &Trajectory) -> Vec<f64> {
        Vec::new()
    }

    /// Called once per training step with every trajectory sampled in it.
    fn end_of_batch(&mut self, _trajectories: &[Trajectory]) {}

    fn box_clone(&self) -> Box<dyn MoEnvironment>;
}

impl Clone for Box<dyn MoEnvironment> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

/// Tagged environment configuration, as found in harness config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvConfig {
    DeepSeaTreasure(DstConfig),
    SyntheticReasoning(SyntheticReasoningConfig),
    MoBandit(MoBanditConfig),
    TabularMdp(TabularMdpConfig),
}

impl EnvConfig {
    pub fn build(&self) -> Result<Box<dyn MoEnvironment>> {
        Ok(match self {
            EnvConfig::DeepSeaTreasure(c) => Box::new(DeepSeaTreasure::new(c.clone())?),
            EnvConfig::SyntheticReasoning(c) => Box::new(SyntheticReasoning::new(c.clone())?),
            EnvConfig::MoBandit(c) => Box::new(MoBandit::new(c.clone())?),
            EnvConfig::TabularMdp(c) => Box::new(TabularMdp::new(c.clone())?),
        })
    }
}

pub(crate) fn check_action(env: &EnvDescriptor, state: usize, action: usize) -> Result<()> {
    if state >= env.num_states {
        return Err(Error::invalid(format!("state {state} out of range ({})", env.num_states)));
    }
    if action >= env.num_actions {
        return Err(Error::invalid(format!("action {action} out of range ({})", env.num_actions)));
    }
    Ok(())
}
