use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rl::{Algorithm, ClipConfig};
use crate::weighting::{ScheduleConfig, ScheduleKind, WeightVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Fixed,
    HypervolumeGuided,
    GradientBased,
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Weighting::Fixed => "fixed",
            Weighting::HypervolumeGuided => "hypervolume_guided",
            Weighting::GradientBased => "gradient_based",
        })
    }
}

/// Parameters that enter the influence computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamMask {
    /// Contiguous block `[start, end)` of the flat parameter vector.
    Range { start: usize, end: usize },
    Explicit { keep: Vec<bool> },
}

impl ParamMask {
    pub fn resolve(&self, num_params: usize) -> Result<Vec<bool>> {
        match self {
            ParamMask::Range { start, end } => {
                if start >= end || *end > num_params {
                    return Err(Error::config(format!("mask range {start}..{end} invalid for {num_params} parameters")));
                }
                Ok((0..num_params).map(|i| (*start..*end).contains(&i)).collect())
            }
            ParamMask::Explicit { keep } => {
                if keep.len() != num_params {
                    return Err(Error::config(format!("mask has {} entries for {num_params} parameters", keep.len())));
                }
                Ok(keep.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default = "default_episodes")]
    pub episodes_per_context: usize,
    #[serde(default)]
    pub greedy: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { episodes_per_context: default_episodes(), greedy: false }
    }
}

fn default_episodes() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerConfig {
    #[serde(default)]
    pub algorithm: Algorithm,
    pub weighting: Weighting,
    /// Initial weights. Required for fixed and hypervolume-guided weighting;
    /// uniform by default for gradient-based weighting.
    #[serde(default)]
    pub w0: Option<Vec<f64>>,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_rollouts")]
    pub rollout_size: usize,
    pub max_steps: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Policy step size.
    #[serde(default = "default_lr")]
    pub lr: ScheduleConfig,
    /// Weight-update step size.
    #[serde(default = "default_eta")]
    pub eta: ScheduleConfig,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub clip: ClipConfig,
    /// Global gradient-norm cap; `inf` disables it.
    #[serde(default = "default_max_grad_norm")]
    pub max_grad_norm: f64,
    #[serde(default = "default_one")]
    pub eval_every: usize,
    #[serde(default)]
    pub evaluation: EvalConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mask: Option<ParamMask>,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
    /// Hypervolume reference point; the environment's default when absent.
    #[serde(default)]
    pub reference: Option<Vec<f64>>,
    /// Pins the hypervolume-guided multiplier at 1.
    #[serde(default)]
    pub freeze_meta_reward: bool,
}

fn default_batch() -> usize {
    64
}
fn default_rollouts() -> usize {
    8
}
fn default_gamma() -> f64 {
    1.0
}
fn default_lr() -> ScheduleConfig {
    ScheduleConfig::constant(1e-6)
}
fn default_eta() -> ScheduleConfig {
    ScheduleConfig::polynomial(1e-6, 1.03)
}
fn default_mu() -> f64 {
    1e-5
}
fn default_max_grad_norm() -> f64 {
    1.0
}
fn default_one() -> usize {
    1
}
fn default_checkpoint_every() -> usize {
    10
}

impl TrainerConfig {
    /// Defaults for everything but the weighting mode and step budget.
    pub fn new(weighting: Weighting, max_steps: usize) -> Self {
        Self {
            algorithm: Algorithm::default(),
            weighting,
            w0: None,
            batch_size: default_batch(),
            rollout_size: default_rollouts(),
            max_steps,
            gamma: default_gamma(),
            lr: default_lr(),
            eta: default_eta(),
            mu: default_mu(),
            clip: ClipConfig::default(),
            max_grad_norm: default_max_grad_norm(),
            eval_every: default_one(),
            evaluation: EvalConfig::default(),
            seed: 0,
            mask: None,
            checkpoint_every: default_checkpoint_every(),
            reference: None,
            freeze_meta_reward: false,
        }
    }

    pub fn max_grad_norm_cap(&self) -> Option<f64> {
        self.max_grad_norm.is_finite().then_some(self.max_grad_norm)
    }

    /// Checks the config against an environment with `k` objectives and
    /// returns the initial weights.
    pub fn validate(&self, k: usize) -> Result<WeightVector> {
        if self.batch_size == 0 || self.rollout_size == 0 || self.max_steps == 0 {
            return Err(Error::config("batch_size, rollout_size and max_steps must be >= 1"));
        }
        if self.algorithm != Algorithm::Reinforce && self.rollout_size < 2 {
            return Err(Error::config(format!("{} needs rollout_size >= 2", self.algorithm)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config("gamma must lie in (0, 1]"));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::config("mu must be positive"));
        }
        if self.max_grad_norm.is_nan() || self.max_grad_norm <= 0.0 {
            return Err(Error::config("max_grad_norm must be positive (inf disables it)"));
        }
        if self.eval_every == 0 || self.checkpoint_every == 0 {
            return Err(Error::config("eval_every and checkpoint_every must be >= 1"));
        }
        if self.evaluation.episodes_per_context == 0 {
            return Err(Error::config("evaluation.episodes_per_context must be >= 1"));
        }
        self.lr.validate()?;
        self.eta.validate()?;
        self.clip.validate()?;
        let w0 = match (&self.w0, self.weighting) {
            (Some(w), _) => WeightVector::new(w.clone())?,
            (None, Weighting::GradientBased) => WeightVector::uniform(k),
            (None, mode) => return Err(Error::config(format!("{mode} weighting needs explicit w0"))),
        };
        if w0.len() != k {
            return Err(Error::config(format!("w0 has {} weights for {k} objectives", w0.len())));
        }
        if self.weighting == Weighting::GradientBased {
            if !w0.is_uniform() {
                log::warn!("gradient-based weighting with non-uniform w0 {:?}", w0.as_slice());
            }
            if self.eta.kind == ScheduleKind::Constant {
                log::warn!("constant weight schedule: the weight-ratio ceiling does not apply");
            }
        }
        Ok(w0)
    }
}
