//! `export`: plot-ready CSV files from completed runs.
//!
//! | target        | file(s)                         | rows                                  |
//! |---------------|---------------------------------|---------------------------------------|
//! | `weights`     | `weights.csv`                   | one per step: step, one column per objective |
//! | `meta-reward` | `meta_reward.csv`               | one per evaluated step                |
//! | `fronts`      | `front_<a>__<b>.csv` per pair   | exactly the final buffer points       |
//! | `kl`          | `kl.csv`                        | one per checkpoint step both runs share |

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use moweight_core::rl::policy_kl;

use crate::failure::Failure;
use crate::run::LoadedRun;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportTarget {
    Weights,
    MetaReward,
    Fronts,
    Kl,
}

impl FromStr for ExportTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weights" => Ok(ExportTarget::Weights),
            "meta-reward" => Ok(ExportTarget::MetaReward),
            "fronts" => Ok(ExportTarget::Fronts),
            "kl" => Ok(ExportTarget::Kl),
            other => Err(format!("unknown export target `{other}` (weights, meta-reward, fronts, kl)")),
        }
    }
}

/// Writes `target` for `run` into `out` and returns the files written.
/// `other` is the second run for `kl`.
pub fn export(target: ExportTarget, run: &LoadedRun, other: Option<&LoadedRun>, out: &Path) -> Result<Vec<PathBuf>, Failure> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match target {
        ExportTarget::Weights => export_weights(run, out).map(|p| vec![p]),
        ExportTarget::MetaReward => export_meta_reward(run, out).map(|p| vec![p]),
        ExportTarget::Fronts => export_fronts(run, out),
        ExportTarget::Kl => {
            let other = other.ok_or_else(|| Failure::Config("kl export needs a second run (--against DIR)".into()))?;
            export_kl(run, other, out).map(|p| vec![p])
        }
    }
}

fn objective_names(run: &LoadedRun) -> Vec<String> {
    run.info.descriptor.objectives.iter().map(|o| o.name.clone()).collect()
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, Failure> {
    Ok(csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?)
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<PathBuf, Failure> {
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(path.to_path_buf())
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Failure + '_ {
    move |e| Failure::runtime(format!("writing {}: {e}", path.display()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn export_weights(run: &LoadedRun, out: &Path) -> Result<PathBuf, Failure> {
    let path = out.join("weights.csv");
    let mut w = writer(&path)?;
    let mut header = vec!["step".to_string()];
    header.extend(objective_names(run).into_iter().map(|n| format!("w_{n}")));
    w.write_record(&header).map_err(csv_err(&path))?;
    for s in &run.record.steps {
        let mut row = vec![s.step.to_string()];
        row.extend(s.weights.iter().map(|x| x.to_string()));
        w.write_record(&row).map_err(csv_err(&path))?;
    }
    finish(w, &path)
}

pub fn export_meta_reward(run: &LoadedRun, out: &Path) -> Result<PathBuf, Failure> {
    let path = out.join("meta_reward.csv");
    let mut w = writer(&path)?;
    w.write_record(["step", "delta_hv", "accepted", "r_pareto", "buffer_hv"]).map_err(csv_err(&path))?;
    for s in run.record.steps.iter().filter(|s| s.delta_hv.is_some()) {
        w.write_record([
            s.step.to_string(),
            opt(s.delta_hv),
            s.accepted.map(|a| a.to_string()).unwrap_or_default(),
            opt(s.r_pareto),
            opt(s.buffer_hv),
        ])
        .map_err(csv_err(&path))?;
    }
    finish(w, &path)
}

/// One file per objective pair, or a single file when there is one objective.
pub fn export_fronts(run: &LoadedRun, out: &Path) -> Result<Vec<PathBuf>, Failure> {
    let names = objective_names(run);
    let points = run.record.buffer.points();
    let pairs: Vec<Vec<usize>> = if names.len() == 1 {
        vec![vec![0]]
    } else {
        (0..names.len()).flat_map(|a| (a + 1..names.len()).map(move |b| vec![a, b])).collect()
    };
    let mut written = Vec::new();
    for cols in pairs {
        let stem: Vec<&str> = cols.iter().map(|&c| names[c].as_str()).collect();
        let path = out.join(format!("front_{}.csv", stem.join("__")));
        let mut w = writer(&path)?;
        w.write_record(&stem).map_err(csv_err(&path))?;
        for p in points {
            let row: Vec<String> = cols.iter().map(|&c| p.as_slice()[c].to_string()).collect();
            w.write_record(&row).map_err(csv_err(&path))?;
        }
        written.push(finish(w, &path)?);
    }
    Ok(written)
}

/// Policy KL between the two runs' checkpoints at every shared step, with
/// states weighted uniformly.
pub fn export_kl(run: &LoadedRun, other: &LoadedRun, out: &Path) -> Result<PathBuf, Failure> {
    if run.record.checkpoints.is_empty() || other.record.checkpoints.is_empty() {
        return Err(Failure::runtime(format!(
            "kl export needs checkpoints in both runs ({} has {}, {} has {})",
            run.dir.display(),
            run.record.checkpoints.len(),
            other.dir.display(),
            other.record.checkpoints.len()
        )));
    }
    let path = out.join("kl.csv");
    let mut w = writer(&path)?;
    w.write_record(["step", "kl", "kl_reverse"]).map_err(csv_err(&path))?;
    let mut rows = 0;
    for a in &run.record.checkpoints {
        let Some(b) = other.record.checkpoints.iter().find(|b| b.step == a.step) else {
            continue;
        };
        let n = a.policy.num_states();
        let states = vec![1.0 / n as f64; n];
        let kl = policy_kl(&a.policy, &b.policy, &states)?;
        let reverse = policy_kl(&b.policy, &a.policy, &states)?;
        w.write_record([a.step.to_string(), kl.to_string(), reverse.to_string()]).map_err(csv_err(&path))?;
        rows += 1;
    }
    if rows == 0 {
        return Err(Failure::runtime("the two runs share no checkpoint step"));
    }
    finish(w, &path)
}
