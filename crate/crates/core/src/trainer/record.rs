use serde::{Deserialize, Serialize};

use super::TrainerConfig;
use crate::env::EnvDescriptor;
use crate::error::{Error, Result};
use crate::pareto::ParetoBuffer;
use crate::rl::PolicyCheckpoint;

/// One line of the run log. Step 0 is the initial evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Weights in force for this step's rewards.
    pub weights: Vec<f64>,
    pub influence: Option<Vec<f64>>,
    /// `eta / mu` used for this step's weight update.
    pub tau: Option<f64>,
    /// Multiplier applied to this step's scalar rewards.
    pub r_pareto: Option<f64>,
    pub delta_hv: Option<f64>,
    pub accepted: Option<bool>,
    pub validation: Option<Vec<f64>>,
    pub raw_metrics: Option<Vec<f64>>,
    pub buffer_hv: Option<f64>,
    pub train_reward_mean: Option<f64>,
    pub train_objectives: Option<Vec<f64>>,
    pub grad_norm: Option<f64>,
    pub checkpoint: Option<String>,
}

impl StepRecord {
    pub(crate) fn empty(step: usize, weights: Vec<f64>) -> Self {
        Self {
            step,
            weights,
            influence: None,
            tau: None,
            r_pareto: None,
            delta_hv: None,
            accepted: None,
            validation: None,
            raw_metrics: None,
            buffer_hv: None,
            train_reward_mean: None,
            train_objectives: None,
            grad_norm: None,
            checkpoint: None,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("step records serialize")
    }
}

pub fn checkpoint_path(step: usize) -> String {
    format!("checkpoints/step_{step:06}.json")
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub config: TrainerConfig,
    pub env: EnvDescriptor,
    pub steps: Vec<StepRecord>,
    pub buffer: ParetoBuffer,
    pub checkpoints: Vec<PolicyCheckpoint>,
}

impl RunRecord {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&s.to_json_line());
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(text: &str) -> Result<Vec<StepRecord>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::invalid(format!("record line {}: {e}", i + 1))))
            .collect()
    }

    pub fn final_weights(&self) -> Option<&[f64]> {
        self.steps.last().map(|s| s.weights.as_slice())
    }
}
