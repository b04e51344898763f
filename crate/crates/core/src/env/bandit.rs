use serde::{Deserialize, Serialize};

use super::{check_action, EnvDescriptor, MoEnvironment, ObjectiveInfo, Outcome, REFERENCE_MARGIN};
use crate::error::{Error, Result};
use crate::pareto::ReferencePoint;

/// Reward of one objective for one arm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArmReward {
    Deterministic(f64),
    Bernoulli { bernoulli: f64 },
}

impl ArmReward {
    fn support(self) -> Vec<(f64, f64)> {
        match self {
            ArmReward::Deterministic(v) => vec![(1.0, v)],
            ArmReward::Bernoulli { bernoulli: p } => vec![(1.0 - p, 0.0), (p, 1.0)],
        }
    }

    fn min(self) -> f64 {
        match self {
            ArmReward::Deterministic(v) => v,
            ArmReward::Bernoulli { .. } => 0.0,
        }
    }

    fn max(self) -> f64 {
        match self {
            ArmReward::Deterministic(v) => v,
            ArmReward::Bernoulli { .. } => 1.0,
        }
    }

    pub fn mean(self) -> f64 {
        match self {
            ArmReward::Deterministic(v) => v,
            ArmReward::Bernoulli { bernoulli } => bernoulli,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoBanditConfig {
    /// One row per arm, one entry per objective.
    pub arms: Vec<Vec<ArmReward>>,
}

/// Horizon-1 multi-objective bandit.
#[derive(Clone, Debug)]
pub struct MoBandit {
    config: MoBanditConfig,
    descriptor: EnvDescriptor,
}

impl MoBandit {
    pub fn new(config: MoBanditConfig) -> Result<Self> {
        let k = config
            .arms
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::config("bandit needs at least one arm"))?;
        if k == 0 {
            return Err(Error::config("bandit arms need at least one objective"));
        }
        for (i, arm) in config.arms.iter().enumerate() {
            if arm.len() != k {
                return Err(Error::config(format!("arm {i} has {} objectives, expected {k}", arm.len())));
            }
            for r in arm {
                match *r {
                    ArmReward::Deterministic(v) if !(v.is_finite() && v >= 0.0) => {
                        return Err(Error::config(format!("arm {i}: rewards must be finite and >= 0")));
                    }
                    ArmReward::Bernoulli { bernoulli: p } if !(0.0..=1.0).contains(&p) => {
                        return Err(Error::config(format!("arm {i}: Bernoulli parameter {p} outside [0, 1]")));
                    }
                    _ => {}
                }
            }
        }
        let reference = (0..k)
            .map(|j| config.arms.iter().map(|a| a[j].min()).fold(f64::INFINITY, f64::min) - REFERENCE_MARGIN)
            .collect();
        let reward_max = config
            .arms
            .iter()
            .flatten()
            .map(|r| r.max())
            .fold(0.0, f64::max);
        let descriptor = EnvDescriptor {
            name: "mo_bandit".into(),
            num_states: 1,
            num_actions: config.arms.len(),
            horizon: 1,
            reward_max,
            objectives: (0..k).map(|j| ObjectiveInfo::plain(&format!("objective_{j}"))).collect(),
            default_reference: ReferencePoint::new(reference)?,
        };
        Ok(Self { config, descriptor })
    }

    pub fn arm_means(&self, arm: usize) -> Vec<f64> {
        self.config.arms[arm].iter().map(|r| r.mean()).collect()
    }
}

impl MoEnvironment for MoBandit {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn initial_state(&self, _context: usize) -> Result<usize> {
        Ok(0)
    }

    fn outcomes(&self, state: usize, _t: usize, action: usize) -> Result<Vec<Outcome>> {
        check_action(&self.descriptor, state, action)?;
        // Product distribution over independent objectives.
        let mut outcomes = vec![(1.0, Vec::new())];
        for r in &self.config.arms[action] {
            outcomes = outcomes
                .into_iter()
                .flat_map(|(p, rew): (f64, Vec<f64>)| {
                    r.support().into_iter().map(move |(q, v)| {
                        let mut rew = rew.clone();
                        rew.push(v);
                        (p * q, rew)
                    })
                })
                .filter(|(p, _)| *p > 0.0)
                .collect();
        }
        Ok(outcomes
            .into_iter()
            .map(|(prob, reward)| Outcome { prob, next_state: 0, reward, done: true })
            .collect())
    }

    fn box_clone(&self) -> Box<dyn MoEnvironment> {
        Box::new(self.clone())
    }
}
