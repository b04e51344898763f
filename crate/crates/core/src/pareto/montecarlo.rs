use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dominance::weakly_dominates_slice;
use super::{validate_against_reference, ObjectiveVector, ReferencePoint};
use crate::error::{check_dim, Error, Result};
use crate::exec::Execution;
use crate::rng::{self, domain};

/// Samples per independent RNG stream. Fixed so results do not depend on the
/// number of worker threads.
const CHUNK: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// Binomial standard error scaled by the sampling-box volume.
    pub stderr: f64,
}

/// Monte Carlo hypervolume over the box `[reference, bound]`.
pub fn mc_hypervolume(
    points: &[ObjectiveVector],
    reference: &ReferencePoint,
    bound: &ObjectiveVector,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    mc_hypervolume_with(Execution::default(), points, reference, bound, samples, seed)
}

pub fn mc_hypervolume_with(
    exec: Execution,
    points: &[ObjectiveVector],
    reference: &ReferencePoint,
    bound: &ObjectiveVector,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_dim(reference.len(), bound.len())?;
    validate_against_reference(points, reference)?;
    if samples == 0 {
        return Err(Error::invalid("mc_hypervolume needs at least one sample"));
    }
    let lo = reference.as_slice();
    let hi = bound.as_slice();
    let volume: f64 = hi.iter().zip(lo).map(|(h, l)| h - l).product();
    if hi.iter().zip(lo).any(|(h, l)| h <= l) || volume <= 0.0 {
        return Err(Error::invalid("degenerate Monte Carlo box (zero volume)"));
    }
    if points
        .iter()
        .any(|p| !weakly_dominates_slice(hi, p.as_slice()))
    {
        return Err(Error::invalid("bound must weakly dominate every point"));
    }
    if points.is_empty() {
        return Ok(McEstimate { estimate: 0.0, stderr: 0.0 });
    }

    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = exec
        .map_range(chunks, |c| {
            let n = CHUNK.min(samples - c * CHUNK);
            let mut rng = rng::stream(seed, &[domain::MONTE_CARLO, c as u64]);
            let mut sample = vec![0.0; lo.len()];
            let mut hits = 0u64;
            for _ in 0..n {
                for (j, s) in sample.iter_mut().enumerate() {
                    *s = lo[j] + rng.gen::<f64>() * (hi[j] - lo[j]);
                }
                if points
                    .iter()
                    .any(|p| weakly_dominates_slice(p.as_slice(), &sample))
                {
                    hits += 1;
                }
            }
            hits
        })
        .into_iter()
        .sum();

    let n = samples as f64;
    let frac = hits as f64 / n;
    Ok(McEstimate {
        estimate: volume * frac,
        stderr: volume * (frac * (1.0 - frac) / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::ov;

    #[test]
    fn fully_covered_box() {
        let r = ReferencePoint::origin(2);
        let est = mc_hypervolume(&[ov(&[2.0, 2.0])], &r, &ov(&[2.0, 2.0]), 1_000_000, 1).unwrap();
        assert_eq!(est.estimate, 4.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn two_point_front_within_three_sigma() {
        let r = ReferencePoint::origin(2);
        let pts = [ov(&[1.0, 3.0]), ov(&[3.0, 1.0])];
        let est = mc_hypervolume(&pts, &r, &ov(&[3.0, 3.0]), 1_000_000, 2).unwrap();
        assert!((est.estimate - 5.0).abs() <= 3.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn empty_and_degenerate() {
        let r = ReferencePoint::origin(2);
        let est = mc_hypervolume(&[], &r, &ov(&[1.0, 1.0]), 10, 0).unwrap();
        assert_eq!(est.estimate, 0.0);
        assert!(mc_hypervolume(&[], &r, &ov(&[1.0, 0.0]), 10, 0).is_err());
        assert!(mc_hypervolume(&[ov(&[2.0, 2.0])], &r, &ov(&[1.0, 1.0]), 10, 0).is_err());
        assert!(mc_hypervolume(&[ov(&[1.0, 1.0])], &r, &ov(&[1.0, 1.0]), 0, 0).is_err());
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let r = ReferencePoint::origin(3);
        let pts = [ov(&[0.2, 0.9, 0.5]), ov(&[0.8, 0.3, 0.6]), ov(&[0.5, 0.5, 0.9])];
        let b = ov(&[1.0, 1.0, 1.0]);
        let a = mc_hypervolume_with(Execution::Sequential, &pts, &r, &b, 200_000, 9).unwrap();
        let p = mc_hypervolume_with(Execution::Parallel, &pts, &r, &b, 200_000, 9).unwrap();
        assert_eq!(a, p);
    }
}
