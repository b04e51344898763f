use serde::{Deserialize, Serialize};

use super::{check_action, EnvDescriptor, MoEnvironment, ObjectiveInfo, Outcome, Report, REFERENCE_MARGIN};
use crate::error::{Error, Result};
use crate::pareto::ReferencePoint;
use crate::rl::Trajectory;

/// A canned solution the policy can emit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Template {
    pub length: u32,
    pub has_steps: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticReasoningConfig {
    pub templates: Vec<Template>,
    /// `correct[context][template]`: whether the template solves the query.
    pub correct: Vec<Vec<bool>>,
    /// Average length used before any response has been seen; defaults to
    /// the mean template length.
    #[serde(default)]
    pub initial_average: Option<f64>,
}

impl Default for SyntheticReasoningConfig {
    fn default() -> Self {
        let t = |length, has_steps| Template { length, has_steps };
        Self {
            templates: vec![t(120, true), t(40, false), t(50, true), t(90, true), t(20, false), t(150, false)],
            correct: vec![
                vec![true, true, false, true, false, true],
                vec![true, true, false, true, false, true],
                vec![true, false, false, true, false, true],
                vec![true, false, false, false, false, true],
            ],
            initial_average: None,
        }
    }
}

/// One-step query answering with accuracy, conciseness and clarity rewards.
///
/// Each context is a query; each action picks a template. Conciseness is 1
/// when the template is strictly shorter than the running mean length of all
/// responses from previous batches.
#[derive(Clone, Debug)]
pub struct SyntheticReasoning {
    config: SyntheticReasoningConfig,
    length_sum: f64,
    length_count: u64,
    initial_average: f64,
    descriptor: EnvDescriptor,
}

impl SyntheticReasoning {
    pub fn new(config: SyntheticReasoningConfig) -> Result<Self> {
        let n = config.templates.len();
        if n == 0 {
            return Err(Error::config("template table is empty"));
        }
        if config.correct.is_empty() {
            return Err(Error::config("need at least one context"));
        }
        if let Some((i, row)) = config.correct.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::config(format!("context {i} lists {} templates, expected {n}", row.len())));
        }
        let mean = config.templates.iter().map(|t| f64::from(t.length)).sum::<f64>() / n as f64;
        let initial_average = config.initial_average.unwrap_or(mean);
        if !(initial_average.is_finite() && initial_average >= 0.0) {
            return Err(Error::config("initial_average must be finite and >= 0"));
        }
        let descriptor = EnvDescriptor {
            name: "synthetic_reasoning".into(),
            num_states: config.correct.len(),
            num_actions: n,
            horizon: 1,
            reward_max: 1.0,
            objectives: vec![
                ObjectiveInfo::plain("accuracy"),
                ObjectiveInfo {
                    name: "conciseness".into(),
                    raw_name: Some("response_length".into()),
                    report: Report::Identity,
                },
                ObjectiveInfo::plain("clarity"),
            ],
            default_reference: ReferencePoint::new(vec![-REFERENCE_MARGIN; 3])?,
        };
        Ok(Self { config, length_sum: 0.0, length_count: 0, initial_average, descriptor })
    }

    pub fn config(&self) -> &SyntheticReasoningConfig {
        &self.config
    }

    pub fn running_average(&self) -> f64 {
        if self.length_count == 0 {
            self.initial_average
        } else {
            self.length_sum / self.length_count as f64
        }
    }

    pub fn reward(&self, context: usize, template: usize) -> Vec<f64> {
        let t = &self.config.templates[template];
        let b = |x: bool| if x { 1.0 } else { 0.0 };
        vec![
            b(self.config.correct[context][template]),
            b(f64::from(t.length) < self.running_average()),
            b(t.has_steps),
        ]
    }
}

impl MoEnvironment for SyntheticReasoning {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn num_contexts(&self) -> usize {
        self.config.correct.len()
    }

    fn initial_state(&self, context: usize) -> Result<usize> {
        if context >= self.num_contexts() {
            return Err(Error::invalid(format!("context {context} out of range")));
        }
        Ok(context)
    }

    fn outcomes(&self, state: usize, _t: usize, action: usize) -> Result<Vec<Outcome>> {
        check_action(&self.descriptor, state, action)?;
        Ok(vec![Outcome { prob: 1.0, next_state: state, reward: self.reward(state, action), done: true }])
    }

    fn raw_metric_names(&self) -> Vec<String> {
        vec!["response_length".into()]
    }

    fn raw_metrics(&self, trajectory: &Trajectory) -> Vec<f64> {
        trajectory
            .steps
            .first()
            .map(|s| vec![f64::from(self.config.templates[s.action].length)])
            .unwrap_or_default()
    }

    fn end_of_batch(&mut self, trajectories: &[Trajectory]) {
        for traj in trajectories {
            for step in &traj.steps {
                self.length_sum += f64::from(self.config.templates[step.action].length);
                self.length_count += 1;
            }
        }
    }

    fn box_clone(&self) -> Box<dyn MoEnvironment> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::{pareto_filter, ObjectiveVector};
    use crate::rl::Transition;

    #[test]
    fn rejects_empty_tables() {
        let mut c = SyntheticReasoningConfig::default();
        c.templates.clear();
        assert!(SyntheticReasoning::new(c).is_err());
        let mut c = SyntheticReasoningConfig::default();
        c.correct[1].pop();
        assert!(SyntheticReasoning::new(c).is_err());
    }

    #[test]
    fn short_correct_stepwise_template_scores_all_ones() {
        let mut c = SyntheticReasoningConfig::default();
        c.correct[0][2] = true;
        let env = SyntheticReasoning::new(c).unwrap();
        // Template 2: length 50 < cold-start mean 78.33, has steps.
        assert_eq!(env.reward(0, 2), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn cold_start_uses_configured_average() {
        let c = SyntheticReasoningConfig { initial_average: Some(30.0), ..Default::default() };
        let env = SyntheticReasoning::new(c).unwrap();
        assert_eq!(env.running_average(), 30.0);
        assert_eq!(env.reward(0, 2)[1], 0.0);
        assert_eq!(env.reward(0, 4)[1], 1.0);
    }

    #[test]
    fn running_average_tracks_previous_batches() {
        let mut env = SyntheticReasoning::new(SyntheticReasoningConfig::default()).unwrap();
        let traj = |a| Trajectory {
            context: 0,
            steps: vec![Transition { state: 0, action: a, reward: vec![0.0; 3] }],
        };
        env.end_of_batch(&[traj(0), traj(5)]);
        assert_eq!(env.running_average(), 135.0);
        assert_eq!(env.reward(0, 0)[1], 1.0);
    }

    #[test]
    fn objectives_conflict_within_contexts() {
        let env = SyntheticReasoning::new(SyntheticReasoningConfig::default()).unwrap();
        for ctx in 0..env.num_contexts() {
            let pts: Vec<ObjectiveVector> = (0..env.descriptor().num_actions)
                .map(|a| ObjectiveVector::new(env.reward(ctx, a)).unwrap())
                .collect();
            let front = pareto_filter(&pts).unwrap();
            assert!(front.len() >= 2, "context {ctx}: {front:?}");
        }
    }
}
