//! `compare`: hypervolume, steps-to-front and front dominance across runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use moweight_core::pareto::{dominates, hypervolume, pareto_filter, ObjectiveVector};
use moweight_core::trainer::steps_to_front;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;
use crate::run::{discover_runs, load_run, write_json, LoadedRun};

pub const REPORT_JSON: &str = "compare.json";
pub const RUNS_CSV: &str = "compare_runs.csv";
pub const ARMS_CSV: &str = "compare_arms.csv";
pub const DOMINANCE_CSV: &str = "compare_dominance.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub arm: String,
    pub seed: u64,
    pub weighting: String,
    pub dir: String,
    pub hypervolume: f64,
    pub steps_to_front: f64,
    pub front_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmRow {
    pub arm: String,
    pub weighting: String,
    pub runs: usize,
    pub mean_hypervolume: f64,
    pub min_hypervolume: f64,
    pub max_hypervolume: f64,
    pub mean_steps_to_front: f64,
    /// Hypervolume of the non-dominated union of this arm's fronts.
    pub union_hypervolume: f64,
    pub union_front: Vec<Vec<f64>>,
}

/// How much of `arm`'s front is strictly dominated by `by`'s front.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    /// `"union"` over all seeds, or `"seed_<n>"`.
    pub scope: String,
    pub arm: String,
    pub by: String,
    pub dominated_points: usize,
    pub total_points: usize,
    pub full: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub reference: Vec<f64>,
    pub objectives: Vec<String>,
    pub runs: Vec<RunRow>,
    pub arms: Vec<ArmRow>,
    /// Hypervolume per arm, keyed by seed.
    pub per_seed: BTreeMap<u64, BTreeMap<String, f64>>,
    pub dominance: Vec<DominanceRow>,
}

impl CompareReport {
    pub fn arm(&self, name: &str) -> Option<&ArmRow> {
        self.arms.iter().find(|a| a.arm == name)
    }

    /// Whether `arm`'s front is fully dominated by `by` in `scope`.
    pub fn fully_dominated(&self, scope: &str, arm: &str, by: &str) -> Option<bool> {
        self.dominance
            .iter()
            .find(|d| d.scope == scope && d.arm == arm && d.by == by)
            .map(|d| d.full)
    }
}

/// Loads every run under `paths` and compares them.
pub fn compare_dirs(paths: &[PathBuf]) -> Result<CompareReport, Failure> {
    let dirs = discover_runs(paths)?;
    let runs = dirs.iter().map(|d| load_run(d)).collect::<Result<Vec<_>, _>>()?;
    compare(&runs)
}

pub fn compare(runs: &[LoadedRun]) -> Result<CompareReport, Failure> {
    if runs.len() < 2 {
        return Err(Failure::Config(format!("compare needs at least 2 runs, found {}", runs.len())));
    }
    let first = &runs[0];
    let reference = first.record.buffer.reference().clone();
    for r in &runs[1..] {
        if r.record.buffer.reference() != &reference {
            return Err(Failure::Config(format!(
                "reference point {:?} in {} differs from {:?} in {}; hypervolumes are not comparable",
                r.record.buffer.reference().as_slice(),
                r.dir.display(),
                reference.as_slice(),
                first.dir.display()
            )));
        }
        if r.info.descriptor != first.info.descriptor {
            return Err(Failure::Config(format!(
                "{} and {} were trained on different environments",
                r.dir.display(),
                first.dir.display()
            )));
        }
    }
    let mut seen = BTreeMap::new();
    for r in runs {
        if let Some(prev) = seen.insert((r.info.arm.clone(), r.info.seed), r.dir.clone()) {
            return Err(Failure::Config(format!(
                "arm `{}` seed {} appears twice ({} and {})",
                r.info.arm,
                r.info.seed,
                prev.display(),
                r.dir.display()
            )));
        }
    }

    let mut rows = Vec::new();
    for r in runs {
        rows.push(RunRow {
            arm: r.info.arm.clone(),
            seed: r.info.seed,
            weighting: r.info.trainer.weighting.to_string(),
            dir: r.dir.display().to_string(),
            hypervolume: r.record.buffer.hypervolume(),
            steps_to_front: steps_to_front(&r.record)?,
            front_size: r.record.buffer.points().len(),
        });
    }

    let mut by_arm: BTreeMap<String, Vec<&LoadedRun>> = BTreeMap::new();
    for r in runs {
        by_arm.entry(r.info.arm.clone()).or_default().push(r);
    }
    let mut arms = Vec::new();
    let mut unions: BTreeMap<String, Vec<ObjectiveVector>> = BTreeMap::new();
    for (name, members) in &by_arm {
        let hvs: Vec<f64> = members.iter().map(|r| r.record.buffer.hypervolume()).collect();
        let stfs = members.iter().map(|r| steps_to_front(&r.record)).collect::<Result<Vec<_>, _>>()?;
        let all: Vec<ObjectiveVector> = members.iter().flat_map(|r| r.record.buffer.points().to_vec()).collect();
        let union = pareto_filter(&all)?;
        let n = members.len() as f64;
        arms.push(ArmRow {
            arm: name.clone(),
            weighting: members[0].info.trainer.weighting.to_string(),
            runs: members.len(),
            mean_hypervolume: hvs.iter().sum::<f64>() / n,
            min_hypervolume: hvs.iter().copied().fold(f64::INFINITY, f64::min),
            max_hypervolume: hvs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_steps_to_front: stfs.iter().sum::<f64>() / n,
            union_hypervolume: hypervolume(&union, &reference)?,
            union_front: union.iter().map(|p| p.as_slice().to_vec()).collect(),
        });
        unions.insert(name.clone(), union);
    }

    let mut per_seed: BTreeMap<u64, BTreeMap<String, f64>> = BTreeMap::new();
    let mut seed_fronts: BTreeMap<u64, BTreeMap<String, Vec<ObjectiveVector>>> = BTreeMap::new();
    for r in runs {
        per_seed.entry(r.info.seed).or_default().insert(r.info.arm.clone(), r.record.buffer.hypervolume());
        seed_fronts
            .entry(r.info.seed)
            .or_default()
            .insert(r.info.arm.clone(), r.record.buffer.points().to_vec());
    }

    let mut dominance = dominance_rows("union", &unions)?;
    for (seed, fronts) in &seed_fronts {
        dominance.extend(dominance_rows(&format!("seed_{seed}"), fronts)?);
    }

    Ok(CompareReport {
        reference: reference.as_slice().to_vec(),
        objectives: first.info.descriptor.objectives.iter().map(|o| o.name.clone()).collect(),
        runs: rows,
        arms,
        per_seed,
        dominance,
    })
}

fn dominance_rows(scope: &str, fronts: &BTreeMap<String, Vec<ObjectiveVector>>) -> Result<Vec<DominanceRow>, Failure> {
    let mut rows = Vec::new();
    for (arm, points) in fronts {
        for (by, other) in fronts {
            if arm == by {
                continue;
            }
            let mut dominated = 0;
            for p in points {
                let mut hit = false;
                for q in other {
                    if dominates(q, p)? {
                        hit = true;
                        break;
                    }
                }
                dominated += usize::from(hit);
            }
            rows.push(DominanceRow {
                scope: scope.to_string(),
                arm: arm.clone(),
                by: by.clone(),
                dominated_points: dominated,
                total_points: points.len(),
                full: !points.is_empty() && dominated == points.len(),
            });
        }
    }
    Ok(rows)
}

/// Writes the JSON report and three CSV tables into `out`.
pub fn write_report(report: &CompareReport, out: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_json(&out.join(REPORT_JSON), report)?;
    write_csv(&out.join(RUNS_CSV), &report.runs)?;
    let arm_rows: Vec<_> = report
        .arms
        .iter()
        .map(|a| {
            (
                &a.arm,
                &a.weighting,
                a.runs,
                a.mean_hypervolume,
                a.min_hypervolume,
                a.max_hypervolume,
                a.mean_steps_to_front,
                a.union_hypervolume,
                a.union_front.len(),
            )
        })
        .collect();
    let mut w = csv::Writer::from_path(out.join(ARMS_CSV)).context("creating arm table")?;
    w.write_record([
        "arm",
        "weighting",
        "runs",
        "mean_hypervolume",
        "min_hypervolume",
        "max_hypervolume",
        "mean_steps_to_front",
        "union_hypervolume",
        "union_front_size",
    ])
    .context("writing arm table")?;
    for row in arm_rows {
        w.serialize(row).context("writing arm table")?;
    }
    w.flush().context("writing arm table")?;
    write_csv(&out.join(DOMINANCE_CSV), &report.dominance)?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r).with_context(|| format!("writing {}", path.display()))?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Plain-text table for the terminal.
pub fn render(report: &CompareReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("reference {:?}\n", report.reference));
    s.push_str(&format!(
        "{:<24} {:>5} {:>12} {:>12} {:>12} {:>10}\n",
        "arm", "runs", "mean_hv", "union_hv", "mean_stf", "union_n"
    ));
    for a in &report.arms {
        s.push_str(&format!(
            "{:<24} {:>5} {:>12.6} {:>12.6} {:>12.2} {:>10}\n",
            a.arm,
            a.runs,
            a.mean_hypervolume,
            a.union_hypervolume,
            a.mean_steps_to_front,
            a.union_front.len()
        ));
    }
    for (seed, hvs) in &report.per_seed {
        let cells: Vec<String> = hvs.iter().map(|(a, h)| format!("{a}={h:.6}")).collect();
        s.push_str(&format!("seed {seed}: {}\n", cells.join("  ")));
    }
    for d in report.dominance.iter().filter(|d| d.scope == "union" && d.full) {
        s.push_str(&format!("front of {} is fully dominated by {}\n", d.arm, d.by));
    }
    s
}
