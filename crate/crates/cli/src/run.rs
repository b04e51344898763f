//! `run`: every (arm, seed) pair trains in its own directory.
//!
//! ```text
//! <out>/<arm>/seed_<n>/
//!     run.json        arm, seed, environment and trainer settings
//!     record.jsonl    one step record per line
//!     front.json      final buffer (reference, points, insertion history)
//!     summary.json    hypervolume, steps-to-front, front averages
//!     meta.json       timestamps and host; never compared
//!     checkpoints/step_NNNNNN.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use moweight_core::env::{EnvConfig, EnvDescriptor};
use moweight_core::pareto::ParetoBuffer;
use moweight_core::rl::PolicyCheckpoint;
use moweight_core::trainer::{front_summary, steps_to_front, FrontSummary, RunRecord, Trainer, TrainerConfig};
use moweight_core::Execution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Arm, HarnessConfig};
use crate::failure::Failure;

pub const RUN_FILE: &str = "run.json";
pub const RECORD_FILE: &str = "record.jsonl";
pub const FRONT_FILE: &str = "front.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const META_FILE: &str = "meta.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub arm: String,
    pub seed: u64,
    pub env: EnvConfig,
    pub trainer: TrainerConfig,
    pub descriptor: EnvDescriptor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub arm: String,
    pub seed: u64,
    pub weighting: String,
    pub steps: usize,
    pub hypervolume: f64,
    pub steps_to_front: f64,
    pub final_weights: Vec<f64>,
    pub front: FrontSummary,
}

#[derive(Serialize)]
struct Meta {
    started_unix_secs: u64,
    finished_unix_secs: u64,
    elapsed_secs: f64,
    host: String,
    version: &'static str,
    threads: usize,
}

/// A completed run read back from disk.
#[derive(Clone, Debug)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub info: RunInfo,
    pub record: RunRecord,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Concurrent runs; 1 runs everything sequentially on the calling thread.
    pub parallel: usize,
    /// Restrict to these arms; empty runs all.
    pub arms: Vec<String>,
}

pub fn run_dir(out: &Path, arm: &str, seed: u64) -> PathBuf {
    out.join(arm).join(format!("seed_{seed}"))
}

/// Trains every selected (arm, seed) pair and writes its directory. Returns
/// the summaries in (arm, seed) order.
pub fn run_all(config: &HarnessConfig, opts: &RunOptions) -> Result<Vec<RunSummary>, Failure> {
    for name in &opts.arms {
        if config.arm(name).is_none() {
            let known: Vec<&str> = config.arms.iter().map(|a| a.name.as_str()).collect();
            return Err(Failure::Config(format!("no arm named `{name}` (have: {})", known.join(", "))));
        }
    }
    if opts.parallel == 0 {
        return Err(Failure::Config("--parallel must be >= 1".into()));
    }
    let jobs: Vec<(&Arm, u64)> = config
        .arms
        .iter()
        .filter(|a| opts.arms.is_empty() || opts.arms.contains(&a.name))
        .flat_map(|a| config.seeds().into_iter().map(move |s| (a, s)))
        .collect();
    let results: Vec<Result<RunSummary, Failure>> = if opts.parallel == 1 {
        jobs.iter()
            .map(|(arm, seed)| run_one(&config.env, arm, *seed, &opts.out, Execution::Sequential, 1))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.parallel)
            .build()
            .map_err(|e| Failure::runtime(format!("thread pool: {e}")))?;
        pool.install(|| {
            jobs.par_iter()
                .map(|(arm, seed)| run_one(&config.env, arm, *seed, &opts.out, Execution::Parallel, opts.parallel))
                .collect()
        })
    };
    results.into_iter().collect()
}

/// Trains one arm at one seed into `<out>/<arm>/seed_<seed>`. A run that
/// aborts still writes the steps completed so far.
pub fn run_one(
    env: &EnvConfig,
    arm: &Arm,
    seed: u64,
    out: &Path,
    exec: Execution,
    threads: usize,
) -> Result<RunSummary, Failure> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let mut trainer_config = arm.trainer.clone();
    trainer_config.seed = seed;
    let built = env.build()?;
    let info = RunInfo {
        arm: arm.name.clone(),
        seed,
        env: env.clone(),
        trainer: trainer_config.clone(),
        descriptor: built.descriptor().clone(),
    };
    let dir = run_dir(out, &arm.name, seed);
    log::info!("training {} seed {seed} -> {}", arm.name, dir.display());
    let trainer = Trainer::new(trainer_config, built, exec)?;
    let (record, failure) = match trainer.run() {
        Ok(r) => (r, None),
        Err((e, r)) => (r, Some(e)),
    };
    write_run(&dir, &info, &record)?;
    write_meta(&dir, started, clock, threads)?;
    if let Some(e) = failure {
        return Err(Failure::Runtime(anyhow::Error::new(e).context(format!("{} seed {seed}", arm.name))));
    }
    let summary = summarize(&info, &record)?;
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

pub fn summarize(info: &RunInfo, record: &RunRecord) -> Result<RunSummary, Failure> {
    Ok(RunSummary {
        arm: info.arm.clone(),
        seed: info.seed,
        weighting: info.trainer.weighting.to_string(),
        steps: record.steps.last().map_or(0, |s| s.step),
        hypervolume: record.buffer.hypervolume(),
        steps_to_front: steps_to_front(record)?,
        final_weights: record.final_weights().unwrap_or_default().to_vec(),
        front: front_summary(record)?,
    })
}

/// Replaces `dir` with the run's files.
pub fn write_run(dir: &Path, info: &RunInfo, record: &RunRecord) -> Result<(), Failure> {
    if dir.exists() {
        fs::remove_dir_all(dir).with_context(|| format!("clearing {}", dir.display()))?;
    }
    let ckpt_dir = dir.join("checkpoints");
    fs::create_dir_all(&ckpt_dir).with_context(|| format!("creating {}", ckpt_dir.display()))?;
    write_json(&dir.join(RUN_FILE), info)?;
    write_text(&dir.join(RECORD_FILE), &record.to_jsonl())?;
    write_text(&dir.join(FRONT_FILE), &record.buffer.to_json())?;
    for c in &record.checkpoints {
        write_text(&dir.join(moweight_core::trainer::checkpoint_path(c.step)), &c.to_json()?)?;
    }
    Ok(())
}

fn write_meta(dir: &Path, started: SystemTime, clock: Instant, threads: usize) -> Result<(), Failure> {
    let secs = |t: SystemTime| t.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let host = std::env::var("HOSTNAME")
        .ok()
        .or_else(|| fs::read_to_string("/etc/hostname").ok())
        .map(|h| h.trim().to_string())
        .unwrap_or_default();
    let meta = Meta {
        started_unix_secs: secs(started),
        finished_unix_secs: secs(SystemTime::now()),
        elapsed_secs: clock.elapsed().as_secs_f64(),
        host,
        version: env!("CARGO_PKG_VERSION"),
        threads,
    };
    write_json(&dir.join(META_FILE), &meta)
}

/// Reads a run directory back into a full record.
pub fn load_run(dir: &Path) -> Result<LoadedRun, Failure> {
    let info: RunInfo = read_json(&dir.join(RUN_FILE))?;
    let steps = RunRecord::parse_jsonl(&read_text(&dir.join(RECORD_FILE))?)
        .map_err(|e| Failure::runtime(format!("{}: {e}", dir.display())))?;
    let buffer = ParetoBuffer::from_json(&read_text(&dir.join(FRONT_FILE))?)
        .map_err(|e| Failure::runtime(format!("{}: {e}", dir.join(FRONT_FILE).display())))?;
    let mut checkpoints = Vec::new();
    let ckpt_dir = dir.join("checkpoints");
    if ckpt_dir.is_dir() {
        let mut paths: Vec<PathBuf> = fs::read_dir(&ckpt_dir)
            .with_context(|| format!("listing {}", ckpt_dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for p in paths {
            let c = PolicyCheckpoint::from_json(&read_text(&p)?)
                .map_err(|e| Failure::runtime(format!("{}: {e}", p.display())))?;
            checkpoints.push(c);
        }
        checkpoints.sort_by_key(|c| c.step);
    }
    let record = RunRecord {
        config: info.trainer.clone(),
        env: info.descriptor.clone(),
        steps,
        buffer,
        checkpoints,
    };
    Ok(LoadedRun { dir: dir.to_path_buf(), info, record })
}

/// Run directories under each of `paths`, recursively, in sorted order.
pub fn discover_runs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    fn walk(dir: &Path, found: &mut Vec<PathBuf>) -> Result<(), Failure> {
        if dir.join(RUN_FILE).is_file() {
            found.push(dir.to_path_buf());
            return Ok(());
        }
        let mut children: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("listing {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        children.sort();
        for c in children {
            walk(&c, found)?;
        }
        Ok(())
    }
    let mut found = Vec::new();
    for p in paths {
        if !p.is_dir() {
            return Err(Failure::runtime(format!("{} is not a directory", p.display())));
        }
        walk(p, &mut found)?;
    }
    found.dedup();
    Ok(found)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).context("serializing JSON")?;
    text.push('\n');
    write_text(path, &text)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub(crate) fn read_text(path: &Path) -> Result<String, Failure> {
    Ok(fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = read_text(path)?;
    Ok(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"
n_seeds = 2
[env]
kind = "mo_bandit"
arms = [[1.0, 0.0], [0.0, 1.0], [0.4, 0.4]]
[trainer]
max_steps = 6
batch_size = 2
rollout_size = 4
checkpoint_every = 2
[trainer.lr]
kind = "constant"
base_rate = 0.5
[trainer.eta]
kind = "polynomial"
base_rate = 1.0
[[arms]]
name = "fixed"
weighting = "fixed"
w0 = [1.0, 1.0]
[[arms]]
name = "dynamic"
weighting = "gradient_based"
"#;

    #[test]
    fn writes_and_reloads_runs() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = HarnessConfig::parse(CONFIG, &[]).unwrap();
        let opts = RunOptions { out: tmp.path().to_path_buf(), parallel: 1, arms: vec![] };
        let summaries = run_all(&cfg, &opts).unwrap();
        assert_eq!(summaries.len(), 4);
        let dir = run_dir(tmp.path(), "dynamic", 1);
        for f in [RUN_FILE, RECORD_FILE, FRONT_FILE, SUMMARY_FILE, META_FILE] {
            assert!(dir.join(f).is_file(), "{f}");
        }
        let loaded = load_run(&dir).unwrap();
        assert_eq!(loaded.info.seed, 1);
        assert_eq!(loaded.record.steps.len(), 7);
        assert!(loaded.record.checkpoints.iter().any(|c| c.step == 6));
        assert_eq!(loaded.record.buffer.hypervolume(), summaries[3].hypervolume);
        let found = discover_runs(&[tmp.path().to_path_buf()]).unwrap();
        assert_eq!(found.len(), 4);
    }

    #[test]
    fn parallel_dispatch_matches_sequential() {
        let cfg = HarnessConfig::parse(CONFIG, &[]).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_all(&cfg, &RunOptions { out: a.path().into(), parallel: 1, arms: vec![] }).unwrap();
        run_all(&cfg, &RunOptions { out: b.path().into(), parallel: 3, arms: vec!["dynamic".into()] }).unwrap();
        for seed in [0, 1] {
            let ra = fs::read(run_dir(a.path(), "dynamic", seed).join(RECORD_FILE)).unwrap();
            let rb = fs::read(run_dir(b.path(), "dynamic", seed).join(RECORD_FILE)).unwrap();
            assert_eq!(ra, rb);
        }
        assert!(!run_dir(b.path(), "fixed", 0).exists());
    }

    #[test]
    fn unknown_arm_is_a_config_error() {
        let cfg = HarnessConfig::parse(CONFIG, &[]).unwrap();
        let opts = RunOptions { out: "unused".into(), parallel: 1, arms: vec!["nope".into()] };
        assert!(matches!(run_all(&cfg, &opts), Err(Failure::Config(_))));
    }
}
