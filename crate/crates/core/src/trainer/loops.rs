use rand::Rng;

use super::record::{checkpoint_path, RunRecord, StepRecord};
use super::{TrainerConfig, Weighting};
use crate::env::{evaluate_detailed, EvaluationSet, MoEnvironment};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::pareto::{ParetoBuffer, ReferencePoint};
use crate::rl::{
    estimator_gradient, per_objective_estimator_gradients, policy_update, sample_groups, Algorithm, Policy,
    PolicyCheckpoint, Trajectory,
};
use crate::rng::{self, domain};
use crate::weighting::{dot, influence, meta_reward, update_weights, ScheduleKind, ScheduleState, WeightVector};

/// Weights below this under a constant schedule trigger a starvation warning.
const STARVATION_WARNING: f64 = 1e-6;

/// Step-by-step training driver. The record is complete up to the last
/// successful step even when a later step fails.
pub struct Trainer {
    config: TrainerConfig,
    env: Box<dyn MoEnvironment>,
    exec: Execution,
    policy: Policy,
    mask: Option<Vec<bool>>,
    weights: WeightVector,
    r_pareto: f64,
    lr: ScheduleState,
    eta: ScheduleState,
    eval_set: EvaluationSet,
    step: usize,
    starvation_warned: bool,
    record: RunRecord,
}

impl Trainer {
    /// Validates the config and evaluates the initial policy (step 0).
    pub fn new(config: TrainerConfig, env: Box<dyn MoEnvironment>, exec: Execution) -> Result<Self> {
        let desc = env.descriptor().clone();
        let weights = config.validate(desc.num_objectives())?;
        let reference = match &config.reference {
            Some(r) => ReferencePoint::new(r.clone())?,
            None => desc.default_reference.clone(),
        };
        if reference.len() != desc.num_objectives() {
            return Err(Error::config("reference point dimension differs from the objective count"));
        }
        let policy = Policy::tabular(desc.num_states, desc.num_actions);
        let mask = config.mask.as_ref().map(|m| m.resolve(policy.num_params())).transpose()?;
        let policy = policy.with_mask(mask.clone())?;
        if config.algorithm == Algorithm::Grpo && config.weighting == Weighting::HypervolumeGuided {
            log::info!("GRPO advantages are invariant to a common reward scale within a step");
        }
        let eval_set = EvaluationSet {
            contexts: (0..env.num_contexts()).collect(),
            episodes_per_context: config.evaluation.episodes_per_context,
            seed: rng::stream_key(config.seed, &[domain::EVAL]),
            greedy: config.evaluation.greedy,
        };
        let initial = evaluate_detailed(&policy, env.as_ref(), &eval_set, exec)?;
        let buffer = ParetoBuffer::seeded(reference, initial.objectives.clone(), 0)?;
        let mut first = StepRecord::empty(0, weights.as_slice().to_vec());
        first.delta_hv = Some(buffer.hypervolume());
        first.accepted = Some(true);
        first.validation = Some(initial.objectives.into_vec());
        first.raw_metrics = Some(initial.raw_metrics);
        first.buffer_hv = Some(buffer.hypervolume());
        first.checkpoint = Some(checkpoint_path(0));
        let record = RunRecord {
            config: config.clone(),
            env: desc,
            steps: vec![first],
            buffer,
            checkpoints: vec![PolicyCheckpoint { step: 0, policy: policy.clone() }],
        };
        Ok(Self {
            lr: config.lr.start()?,
            eta: config.eta.start()?,
            config,
            env,
            exec,
            policy,
            mask,
            weights,
            r_pareto: 1.0,
            eval_set,
            step: 0,
            starvation_warned: false,
            record,
        })
    }

    pub fn record(&self) -> &RunRecord {
        &self.record
    }

    pub fn into_record(self) -> RunRecord {
        self.record
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.config.max_steps
    }

    fn batch_contexts(&self, step: usize) -> Vec<usize> {
        let n = self.env.num_contexts();
        let mut r = rng::stream(self.config.seed, &[domain::BATCH, step as u64]);
        (0..self.config.batch_size).map(|_| if n == 1 { 0 } else { r.gen_range(0..n) }).collect()
    }

    /// Runs one training step and returns its record.
    pub fn step(&mut self) -> Result<&StepRecord> {
        if self.is_finished() {
            return Err(Error::invalid("training already finished"));
        }
        let t = self.step + 1;
        self.run_step(t).map_err(|e| match e {
            Error::Aborted { .. } => e,
            other => Error::Aborted { step: t, reason: other.to_string() },
        })?;
        self.step = t;
        Ok(self.record.steps.last().expect("step recorded"))
    }

    fn run_step(&mut self, t: usize) -> Result<()> {
        let cfg = &self.config;
        let contexts = self.batch_contexts(t);
        let groups = sample_groups(
            &self.policy,
            self.env.as_ref(),
            &contexts,
            cfg.rollout_size,
            cfg.seed,
            t as u64,
            self.exec,
        )?;
        let mut rec = StepRecord::empty(t, Vec::new());

        if cfg.weighting == Weighting::GradientBased {
            let grads = per_objective_estimator_gradients(
                &self.policy,
                &groups,
                cfg.algorithm,
                cfg.gamma,
                &cfg.clip,
                self.mask.as_deref(),
            )?;
            let inf = influence(&grads)?;
            if inf.as_slice().iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("influence"));
            }
            let (eta, next) = self.eta.next_rate();
            self.eta = next;
            self.weights = update_weights(&self.weights, &inf, eta, cfg.mu)?;
            rec.tau = Some(eta / cfg.mu);
            rec.influence = Some(inf.as_slice().to_vec());
            if cfg.eta.kind == ScheduleKind::Constant
                && !self.starvation_warned
                && self.weights.as_slice().iter().any(|&w| w < STARVATION_WARNING)
            {
                log::warn!("step {t}: a reward weight fell below {STARVATION_WARNING:e}");
                self.starvation_warned = true;
            }
        }

        let scale = if cfg.weighting == Weighting::HypervolumeGuided {
            rec.r_pareto = Some(self.r_pareto);
            self.r_pareto
        } else {
            1.0
        };
        let reward_weights: Vec<f64> = self.weights.as_slice().iter().map(|w| scale * w).collect();
        rec.weights = self.weights.as_slice().to_vec();

        let grad = estimator_gradient(&self.policy, &groups, &reward_weights, cfg.algorithm, cfg.gamma, &cfg.clip)?;
        let (lr, next) = self.lr.next_rate();
        self.lr = next;
        rec.grad_norm = Some(grad.iter().map(|g| g * g).sum::<f64>().sqrt());
        self.policy = policy_update(&self.policy, &grad, lr, cfg.max_grad_norm_cap())?;

        let trajectories: Vec<Trajectory> = groups.into_iter().flat_map(|g| g.trajectories).collect();
        let n = trajectories.len() as f64;
        let k = reward_weights.len();
        let mut objectives = vec![0.0; k];
        for traj in &trajectories {
            for (acc, r) in objectives.iter_mut().zip(traj.total_reward()) {
                *acc += r / n;
            }
        }
        rec.train_reward_mean = Some(dot(&reward_weights, &objectives));
        rec.train_objectives = Some(objectives);
        self.env.end_of_batch(&trajectories);

        let evaluate = cfg.weighting == Weighting::HypervolumeGuided || t.is_multiple_of(cfg.eval_every) || t == cfg.max_steps;
        let mut accepted = false;
        if evaluate {
            let eval = evaluate_detailed(&self.policy, self.env.as_ref(), &self.eval_set, self.exec)?;
            let (buffer, delta) = self.record.buffer.insert(eval.objectives.clone(), t)?;
            self.record.buffer = buffer;
            accepted = delta > 0.0;
            if cfg.weighting == Weighting::HypervolumeGuided && !cfg.freeze_meta_reward {
                // Applies to the next step's rewards.
                self.r_pareto = meta_reward(delta)?;
            }
            rec.delta_hv = Some(delta);
            rec.accepted = Some(accepted);
            rec.validation = Some(eval.objectives.into_vec());
            rec.raw_metrics = Some(eval.raw_metrics);
            rec.buffer_hv = Some(self.record.buffer.hypervolume());
        }
        if accepted || t.is_multiple_of(cfg.checkpoint_every) || t == cfg.max_steps {
            rec.checkpoint = Some(checkpoint_path(t));
            self.record.checkpoints.push(PolicyCheckpoint { step: t, policy: self.policy.clone() });
        }
        self.record.steps.push(rec);
        Ok(())
    }

    /// Runs to `max_steps`. On failure returns the error together with the
    /// partial record.
    #[allow(clippy::result_large_err)] // cold path; the record is moved, not copied
    pub fn run(mut self) -> std::result::Result<RunRecord, (Error, RunRecord)> {
        while !self.is_finished() {
            if let Err(e) = self.step() {
                return Err((e, self.record));
            }
        }
        Ok(self.record)
    }
}

/// Trains with whichever weighting `config` selects.
pub fn train(config: TrainerConfig, env: Box<dyn MoEnvironment>, exec: Execution) -> Result<RunRecord> {
    Trainer::new(config, env, exec)?.run().map_err(|(e, _)| e)
}

fn train_as(expected: Weighting, config: TrainerConfig, env: Box<dyn MoEnvironment>, exec: Execution) -> Result<RunRecord> {
    if config.weighting != expected {
        return Err(Error::config(format!("expected {expected} weighting, config has {}", config.weighting)));
    }
    train(config, env, exec)
}

pub fn train_fixed(config: TrainerConfig, env: Box<dyn MoEnvironment>, exec: Execution) -> Result<RunRecord> {
    train_as(Weighting::Fixed, config, env, exec)
}

pub fn train_hypervolume_guided(config: TrainerConfig, env: Box<dyn MoEnvironment>, exec: Execution) -> Result<RunRecord> {
    train_as(Weighting::HypervolumeGuided, config, env, exec)
}

pub fn train_gradient_based(config: TrainerConfig, env: Box<dyn MoEnvironment>, exec: Execution) -> Result<RunRecord> {
    train_as(Weighting::GradientBased, config, env, exec)
}
