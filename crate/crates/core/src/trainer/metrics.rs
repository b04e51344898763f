use serde::{Deserialize, Serialize};

use super::RunRecord;
use crate::env::ObjectiveInfo;
use crate::error::{Error, Result};
use crate::pareto::ObjectiveVector;
use crate::weighting::{closed_form_weights, InfluenceVector, WeightVector};

/// Mean accepting step over the points that survive in the final buffer.
pub fn steps_to_front(record: &RunRecord) -> Result<f64> {
    let survivors = record.buffer.surviving_steps();
    if survivors.is_empty() {
        return Err(Error::invalid("final buffer is empty"));
    }
    Ok(survivors.iter().map(|(_, s)| *s as f64).sum::<f64>() / survivors.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontSummary {
    pub names: Vec<String>,
    /// Componentwise mean of front points, oriented as optimized.
    pub objectives: Vec<f64>,
    /// Same means mapped back to raw reporting units.
    pub reported: Vec<f64>,
    pub reported_names: Vec<String>,
    /// Mean raw evaluation metrics over the evaluations behind the front.
    pub raw_metrics: Vec<f64>,
    pub size: usize,
}

pub fn summarize_front(points: &[ObjectiveVector], objectives: &[ObjectiveInfo]) -> Result<FrontSummary> {
    let first = points.first().ok_or_else(|| Error::invalid("front is empty"))?;
    let k = first.len();
    if objectives.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: objectives.len() });
    }
    let n = points.len() as f64;
    let mut mean = vec![0.0; k];
    for p in points {
        if p.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: p.len() });
        }
        for (m, v) in mean.iter_mut().zip(p.as_slice()) {
            *m += v / n;
        }
    }
    Ok(FrontSummary {
        names: objectives.iter().map(|o| o.name.clone()).collect(),
        reported: mean.iter().zip(objectives).map(|(m, o)| o.report.apply(*m)).collect(),
        reported_names: objectives
            .iter()
            .map(|o| o.raw_name.clone().unwrap_or_else(|| o.name.clone()))
            .collect(),
        objectives: mean,
        raw_metrics: Vec::new(),
        size: points.len(),
    })
}

pub fn front_summary(record: &RunRecord) -> Result<FrontSummary> {
    let mut summary = summarize_front(record.buffer.points(), &record.env.objectives)?;
    let survivors = record.buffer.surviving_steps();
    let raws: Vec<&Vec<f64>> = survivors
        .iter()
        .filter_map(|(_, step)| record.steps.iter().find(|s| s.step == *step))
        .filter_map(|s| s.raw_metrics.as_ref())
        .collect();
    if let Some(width) = raws.first().map(|r| r.len()) {
        let n = raws.len() as f64;
        let mut mean = vec![0.0; width];
        for r in &raws {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v / n;
            }
        }
        summary.raw_metrics = mean;
    }
    Ok(summary)
}

/// Largest componentwise gap between the final recorded weights and the
/// closed-form weights rebuilt from the recorded `(tau, influence)` trace.
pub fn lemma_replay_error(record: &RunRecord) -> Result<f64> {
    let first = record.steps.first().ok_or_else(|| Error::invalid("record has no steps"))?;
    let w0 = WeightVector::new(first.weights.clone())?;
    let mut taus = Vec::new();
    let mut infs = Vec::new();
    for s in &record.steps[1..] {
        match (s.tau, &s.influence) {
            (Some(t), Some(i)) => {
                taus.push(t);
                infs.push(InfluenceVector::new(i.clone())?);
            }
            _ => return Err(Error::invalid(format!("step {} has no weight-update trace", s.step))),
        }
    }
    let replayed = closed_form_weights(&w0, &taus, &infs)?;
    let recorded = record.final_weights().expect("non-empty");
    Ok(replayed
        .as_slice()
        .iter()
        .zip(recorded)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{DeepSeaTreasure, DstConfig, Report};
    use crate::exec::Execution;
    use crate::pareto::{ov, ParetoBuffer, ReferencePoint};
    use crate::trainer::{train, TrainerConfig, Weighting};
    use crate::weighting::ScheduleConfig;

    fn record_with(buffer: ParetoBuffer) -> RunRecord {
        let env = DeepSeaTreasure::new(DstConfig::default()).unwrap();
        let mut config = TrainerConfig::new(Weighting::GradientBased, 1);
        config.batch_size = 2;
        let mut rec = train(config, Box::new(env), Execution::Sequential).unwrap();
        rec.buffer = buffer;
        rec
    }

    fn buffer_from(events: &[(&[f64], usize)]) -> ParetoBuffer {
        let reference = ReferencePoint::new(vec![0.0, 0.0]).unwrap();
        let mut b = ParetoBuffer::new(reference);
        for (p, s) in events {
            b = b.insert(ov(p), *s).unwrap().0;
        }
        b
    }

    #[test]
    fn steps_to_front_examples() {
        assert_eq!(steps_to_front(&record_with(buffer_from(&[(&[1.0, 1.0], 10)]))).unwrap(), 10.0);
        let pair = buffer_from(&[(&[1.0, 2.0], 10), (&[2.0, 1.0], 30)]);
        assert_eq!(steps_to_front(&record_with(pair)).unwrap(), 20.0);
        let pruned = buffer_from(&[(&[1.0, 1.0], 5), (&[3.0, 1.0], 20), (&[2.0, 2.0], 40)]);
        // (1,1) is dominated by (2,2) and pruned; survivors accepted at 20 and 40.
        assert_eq!(steps_to_front(&record_with(pruned)).unwrap(), 30.0);
        let empty = ParetoBuffer::new(ReferencePoint::new(vec![0.0, 0.0]).unwrap());
        assert!(steps_to_front(&record_with(empty)).is_err());
    }

    #[test]
    fn summary_examples() {
        let infos = vec![
            ObjectiveInfo::plain("accuracy"),
            ObjectiveInfo {
                name: "conciseness".into(),
                raw_name: Some("length".into()),
                report: Report::Affine { scale: -1.0, offset: 0.0 },
            },
            ObjectiveInfo::plain("clarity"),
        ];
        let front = [ov(&[0.8, -600.0, 1.0]), ov(&[0.9, -800.0, 0.9])];
        let s = summarize_front(&front, &infos).unwrap();
        let expected = [0.85, 700.0, 0.95];
        for (a, b) in s.reported.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(s.reported_names[1], "length");
        let single = summarize_front(&front[..1], &infos).unwrap();
        assert_eq!(single.objectives, vec![0.8, -600.0, 1.0]);
        assert!(summarize_front(&[], &infos).is_err());
    }

    #[test]
    fn live_run_replays_through_closed_form() {
        let env = DeepSeaTreasure::new(DstConfig::default()).unwrap();
        let mut c = TrainerConfig::new(Weighting::GradientBased, 60);
        c.batch_size = 4;
        c.rollout_size = 4;
        c.lr = ScheduleConfig::constant(0.5);
        c.eta = ScheduleConfig::polynomial(0.2, 1.03);
        c.mu = 1.0;
        let rec = train(c, Box::new(env), Execution::Sequential).unwrap();
        assert!(!WeightVector::new(rec.final_weights().unwrap().to_vec()).unwrap().is_uniform());
        assert!(lemma_replay_error(&rec).unwrap() < 1e-8);
    }
}
