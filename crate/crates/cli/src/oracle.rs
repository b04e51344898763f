//! Brute-force verification behind `moweight oracle`.
//!
//! Every check returns a result struct with the observed errors and a pass
//! flag; the binary maps a failed check to its own exit status.

use moweight_core::env::{nonconvexity_certificate, true_pareto_front, EnvConfig, NonConvexity, TabularMdp};
use moweight_core::pareto::oracle::inclusion_exclusion_hypervolume;
use moweight_core::pareto::{hypervolume, mc_hypervolume, ObjectiveVector, ParetoBuffer, ReferencePoint};
use moweight_core::rl::{
    exact_gradient_oracle, reinforce_gradient, sample_trajectory, Policy, RolloutGroup, DEFAULT_ORACLE_CAP,
};
use moweight_core::rng;
use moweight_core::trainer::{lemma_replay_error, Weighting};
use moweight_core::weighting::{closed_form_weights, update_weights, InfluenceVector, WeightVector};
use moweight_core::env::MoEnvironment;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;
use crate::run::LoadedRun;

/// Relative tolerance between the exact sweep and inclusion-exclusion.
pub const HV_EXACT_TOL: f64 = 1e-9;
/// Monte Carlo estimates must fall within this many standard errors.
pub const HV_MC_SIGMAS: f64 = 3.0;
/// Finite-difference vs analytic gradient, relative to the gradient's max norm.
pub const GRAD_FD_TOL: f64 = 1e-6;
/// Sampled REINFORCE mean vs exact gradient, in standard errors.
pub const GRAD_MC_SIGMAS: f64 = 4.0;
/// Recorded weights vs closed-form replay of a live run.
pub const LEMMA_RUN_TOL: f64 = 1e-8;
/// Iterated vs closed-form weights on synthetic traces, relative.
pub const LEMMA_SYNTHETIC_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvCheck {
    pub instances: usize,
    pub max_relative_error: f64,
    pub mc_violations: usize,
    pub max_sigmas: f64,
    pub passed: bool,
}

/// Random point sets in `[0,1]^K` (`K` cycling through `dims`, up to
/// `max_points` points) checked against inclusion-exclusion and Monte Carlo.
pub fn hv_check(instances: usize, dims: &[usize], max_points: usize, samples: usize, seed: u64) -> Result<HvCheck, Failure> {
    if dims.is_empty() || dims.contains(&0) || max_points == 0 || samples == 0 {
        return Err(Failure::Config("hv-check needs dims >= 1, max_points >= 1 and samples >= 1".into()));
    }
    let mut out = HvCheck { instances, max_relative_error: 0.0, mc_violations: 0, max_sigmas: 0.0, passed: true };
    for i in 0..instances {
        let k = dims[i % dims.len()];
        let mut r = rng::stream(seed, &[i as u64]);
        let n = r.gen_range(1..=max_points);
        let points: Vec<ObjectiveVector> = (0..n)
            .map(|_| ObjectiveVector::new((0..k).map(|_| r.gen::<f64>()).collect()))
            .collect::<Result<_, _>>()?;
        let reference = ReferencePoint::origin(k);
        let exact = hypervolume(&points, &reference)?;
        let ie = inclusion_exclusion_hypervolume(&points, &reference)?;
        let rel = (exact - ie).abs() / ie.abs().max(f64::MIN_POSITIVE);
        out.max_relative_error = out.max_relative_error.max(rel);
        let bound = ObjectiveVector::new(vec![1.0; k])?;
        let mc = mc_hypervolume(&points, &reference, &bound, samples, rng::stream_key(seed, &[i as u64, 1]))?;
        let sigmas = if mc.stderr > 0.0 {
            (mc.estimate - exact).abs() / mc.stderr
        } else if (mc.estimate - exact).abs() <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        out.max_sigmas = out.max_sigmas.max(sigmas);
        out.mc_violations += usize::from(sigmas > HV_MC_SIGMAS);
    }
    out.passed = out.max_relative_error <= HV_EXACT_TOL && out.mc_violations == 0;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheck {
    pub trials: usize,
    /// Worst `max_i |fd_i - g_i| / max_i |g_i|` over trials.
    pub max_fd_relative_error: f64,
    pub rollouts: usize,
    /// Worst `|sample mean - exact| / stderr` over coordinates; 0 when skipped.
    pub max_sigmas: f64,
    pub passed: bool,
}

/// Central differences of the exactly enumerated objective against the
/// analytic policy gradient on random 3-state, 3-action, horizon-3 MDPs.
/// With `rollouts > 0`, the first trial also checks the sampled REINFORCE
/// estimator's mean against the exact gradient.
pub fn grad_check(trials: usize, rollouts: usize, seed: u64) -> Result<GradCheck, Failure> {
    const H: f64 = 1e-5;
    let mut out = GradCheck { trials, max_fd_relative_error: 0.0, rollouts, max_sigmas: 0.0, passed: true };
    for t in 0..trials {
        let env = TabularMdp::random(3, 3, 3, 2, rng::stream_key(seed, &[t as u64]))?;
        let mut r = rng::stream(seed, &[t as u64, 1]);
        let policy = Policy::tabular(3, 3).with_theta((0..9).map(|_| r.gen_range(-1.5..1.5)).collect())?;
        let raw: Vec<f64> = (0..2).map(|_| r.gen_range(0.05..1.0)).collect();
        let w = WeightVector::normalized(raw)?;
        let exact = exact_gradient_oracle(&policy, &env, w.as_slice(), 1.0, DEFAULT_ORACLE_CAP)?;
        let scale = exact.gradient.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(1e-12);
        for i in 0..policy.num_params() {
            let mut plus = policy.theta().to_vec();
            let mut minus = plus.clone();
            plus[i] += H;
            minus[i] -= H;
            let jp = exact_gradient_oracle(&policy.clone().with_theta(plus)?, &env, w.as_slice(), 1.0, DEFAULT_ORACLE_CAP)?;
            let jm = exact_gradient_oracle(&policy.clone().with_theta(minus)?, &env, w.as_slice(), 1.0, DEFAULT_ORACLE_CAP)?;
            let fd = (jp.objective - jm.objective) / (2.0 * H);
            out.max_fd_relative_error = out.max_fd_relative_error.max((fd - exact.gradient[i]).abs() / scale);
        }
        if t == 0 && rollouts > 0 {
            out.max_sigmas = sampled_gradient_sigmas(&policy, &env, &w, &exact.gradient, rollouts, seed)?;
        }
    }
    out.passed = out.max_fd_relative_error <= GRAD_FD_TOL && out.max_sigmas <= GRAD_MC_SIGMAS;
    Ok(out)
}

fn sampled_gradient_sigmas(
    policy: &Policy,
    env: &dyn MoEnvironment,
    w: &WeightVector,
    exact: &[f64],
    rollouts: usize,
    seed: u64,
) -> Result<f64, Failure> {
    let d = policy.num_params();
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let contexts = env.num_contexts();
    let mut r = rng::stream(seed, &[u64::MAX]);
    for _ in 0..rollouts {
        let context = r.gen_range(0..contexts);
        let traj = sample_trajectory(policy, env, context, &mut r)?;
        let g = reinforce_gradient(policy, &[RolloutGroup { context, trajectories: vec![traj] }], w, 1.0)?;
        for j in 0..d {
            sum[j] += g[j];
            sum_sq[j] += g[j] * g[j];
        }
    }
    let n = rollouts as f64;
    let mut worst: f64 = 0.0;
    for j in 0..d {
        let mean = sum[j] / n;
        let var = (sum_sq[j] / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        let se = (var / n).sqrt();
        let gap = (mean - exact[j]).abs();
        let sig = if se > 0.0 { gap / se } else if gap <= 1e-12 { 0.0 } else { f64::INFINITY };
        worst = worst.max(sig);
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Rebuilds a gradient-based run's final weights from its recorded
/// `(tau, influence)` trace.
pub fn lemma_check_run(run: &LoadedRun) -> Result<LemmaCheck, Failure> {
    if run.info.trainer.weighting != Weighting::GradientBased {
        return Err(Failure::Config(format!(
            "{} is a {} run; lemma-check needs gradient_based weighting",
            run.dir.display(),
            run.info.trainer.weighting
        )));
    }
    let err = lemma_replay_error(&run.record)?;
    Ok(LemmaCheck { max_error: err, tolerance: LEMMA_RUN_TOL, passed: err <= LEMMA_RUN_TOL })
}

/// Iterated exponentiated updates vs the one-shot closed form on random
/// traces of up to 100 steps with `K` in 2..=5.
pub fn lemma_check_synthetic(sequences: usize, seed: u64) -> Result<LemmaCheck, Failure> {
    let mut worst: f64 = 0.0;
    for s in 0..sequences {
        let mut r = rng::stream(seed, &[s as u64]);
        let k = r.gen_range(2..=5);
        let steps = r.gen_range(1..=100);
        let w0 = WeightVector::normalized((0..k).map(|_| r.gen_range(0.05..1.0)).collect())?;
        let mu = r.gen_range(0.1..2.0);
        let mut w = w0.clone();
        let mut taus = Vec::with_capacity(steps);
        let mut infs = Vec::with_capacity(steps);
        for _ in 0..steps {
            let eta = r.gen_range(0.0..0.05);
            let inf = InfluenceVector::new((0..k).map(|_| r.gen_range(-1.0..1.0)).collect())?;
            w = update_weights(&w, &inf, eta, mu)?;
            taus.push(eta / mu);
            infs.push(inf);
        }
        let closed = closed_form_weights(&w0, &taus, &infs)?;
        for (a, b) in w.as_slice().iter().zip(closed.as_slice()) {
            worst = worst.max((a - b).abs() / b.abs().max(f64::MIN_POSITIVE));
        }
    }
    Ok(LemmaCheck { max_error: worst, tolerance: LEMMA_SYNTHETIC_TOL, passed: worst <= LEMMA_SYNTHETIC_TOL })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontEnum {
    pub objectives: Vec<String>,
    pub points: Vec<Vec<f64>>,
    pub hypervolume: f64,
    /// Front point strictly below the upper convex hull, for two objectives.
    pub nonconvex_point: Option<Vec<f64>>,
    pub nonconvex_gap: Option<f64>,
}

/// Exhaustive front of `env` plus a front file in the buffer format.
pub fn front_enum(env: &EnvConfig, cap: usize) -> Result<(FrontEnum, ParetoBuffer), Failure> {
    let built = env.build()?;
    let desc = built.descriptor().clone();
    let mut front = true_pareto_front(built.as_ref(), cap)?;
    front.sort_by(|a, b| a.as_slice().partial_cmp(b.as_slice()).expect("finite objectives"));
    let reference = desc.default_reference.clone();
    let mut buffer = ParetoBuffer::new(reference.clone());
    for p in &front {
        buffer = buffer.insert(p.clone(), 0)?.0;
    }
    let cert: Option<NonConvexity> =
        if desc.num_objectives() == 2 { nonconvexity_certificate(&front)? } else { None };
    let report = FrontEnum {
        objectives: desc.objectives.iter().map(|o| o.name.clone()).collect(),
        points: front.iter().map(|p| p.as_slice().to_vec()).collect(),
        hypervolume: hypervolume(&front, &reference)?,
        nonconvex_point: cert.as_ref().map(|c| c.point.as_slice().to_vec()),
        nonconvex_gap: cert.map(|c| c.gap),
    };
    Ok((report, buffer))
}
