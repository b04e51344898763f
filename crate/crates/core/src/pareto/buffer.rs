use serde::{Deserialize, Serialize};

use super::dominance::dominates_slice;
use super::hypervolume::{hypervolume_improvement, hypervolume_unchecked};
use super::{validate_against_reference, ObjectiveVector, ReferencePoint};
use crate::error::{check_dim, Error, Result};

/// One insertion attempt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BufferEvent {
    pub step: usize,
    pub point: ObjectiveVector,
    pub accepted: bool,
    pub delta_hv: f64,
}

/// Archive of mutually non-dominated evaluation points with a fixed reference.
///
/// Updated functionally: [`ParetoBuffer::insert`] returns a new buffer. Only
/// candidates with a positive hypervolume gain are stored; every attempt is
/// logged in `history`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoBuffer {
    reference: ReferencePoint,
    points: Vec<ObjectiveVector>,
    history: Vec<BufferEvent>,
}

impl ParetoBuffer {
    pub fn new(reference: ReferencePoint) -> Self {
        Self { reference, points: Vec::new(), history: Vec::new() }
    }

    /// Buffer initialised with a single evaluation, accepted unconditionally.
    pub fn seeded(reference: ReferencePoint, initial: ObjectiveVector, step: usize) -> Result<Self> {
        validate_against_reference(std::slice::from_ref(&initial), &reference)?;
        let delta_hv = hypervolume_unchecked(std::slice::from_ref(&initial), &reference);
        Ok(Self {
            reference,
            points: vec![initial.clone()],
            history: vec![BufferEvent { step, point: initial, accepted: true, delta_hv }],
        })
    }

    /// Offers `candidate`; returns the updated buffer and the gain measured
    /// before insertion. A candidate equal to a stored point gains nothing.
    pub fn insert(&self, candidate: ObjectiveVector, step: usize) -> Result<(Self, f64)> {
        validate_against_reference(std::slice::from_ref(&candidate), &self.reference)?;
        let delta_hv = hypervolume_improvement(&candidate, &self.points, &self.reference)?;
        let accepted = delta_hv > 0.0;
        let mut next = self.clone();
        if accepted {
            next.points
                .retain(|p| !dominates_slice(candidate.as_slice(), p.as_slice()));
            next.points.push(candidate.clone());
        }
        next.history.push(BufferEvent { step, point: candidate, accepted, delta_hv });
        Ok((next, delta_hv))
    }

    pub fn reference(&self) -> &ReferencePoint {
        &self.reference
    }

    pub fn points(&self) -> &[ObjectiveVector] {
        &self.points
    }

    pub fn history(&self) -> &[BufferEvent] {
        &self.history
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn hypervolume(&self) -> f64 {
        hypervolume_unchecked(&self.points, &self.reference)
    }

    /// Surviving points paired with the step at which each was accepted.
    pub fn surviving_steps(&self) -> Vec<(ObjectiveVector, usize)> {
        self.points
            .iter()
            .map(|p| {
                let step = self
                    .history
                    .iter()
                    .rev()
                    .find(|e| e.accepted && &e.point == p)
                    .map(|e| e.step)
                    .expect("every stored point has an accepting history event");
                (p.clone(), step)
            })
            .collect()
    }

    /// Re-checks the structural invariants, e.g. after deserialisation.
    pub fn validate(&self) -> Result<()> {
        for p in &self.points {
            check_dim(self.reference.len(), p.len())?;
        }
        validate_against_reference(&self.points, &self.reference)?;
        for (i, a) in self.points.iter().enumerate() {
            for (j, b) in self.points.iter().enumerate() {
                if i != j && (a == b || dominates_slice(a.as_slice(), b.as_slice())) {
                    return Err(Error::invalid(format!(
                        "buffer points {i} and {j} are not mutually non-dominated"
                    )));
                }
            }
            if !self.history.iter().any(|e| e.accepted && &e.point == a) {
                return Err(Error::invalid(format!("buffer point {i} has no accepting event")));
            }
        }
        if self.history.windows(2).any(|w| w[1].step < w[0].step) {
            return Err(Error::invalid("buffer history steps must be non-decreasing"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("buffer serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let buffer: Self = serde_json::from_str(s)
            .map_err(|e| Error::invalid(format!("front JSON: {e}")))?;
        buffer.validate()?;
        Ok(buffer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::ov;
    use proptest::prelude::*;

    fn origin() -> ReferencePoint {
        ReferencePoint::origin(2)
    }

    #[test]
    fn insert_examples() {
        let b = ParetoBuffer::new(origin());
        let (b, d) = b.insert(ov(&[1.0, 3.0]), 1).unwrap();
        assert_eq!(d, 3.0);
        let (b, _) = b.insert(ov(&[3.0, 1.0]), 2).unwrap();
        let (b, d) = b.insert(ov(&[3.0, 3.0]), 3).unwrap();
        assert_eq!(d, 4.0);
        assert_eq!(b.points(), &[ov(&[3.0, 3.0])]);

        let b = ParetoBuffer::new(origin());
        let (b, d) = b.insert(ov(&[2.0, 2.0]), 0).unwrap();
        assert_eq!(d, 4.0);
        let (b2, d) = b.insert(ov(&[1.0, 1.0]), 1).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(b2.points(), b.points());
        assert_eq!(b2.history().len(), 2);
        assert!(!b2.history()[1].accepted);
    }

    #[test]
    fn duplicate_candidate_gains_nothing() {
        let b = ParetoBuffer::seeded(origin(), ov(&[2.0, 2.0]), 0).unwrap();
        let (b, d) = b.insert(ov(&[2.0, 2.0]), 5).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(b.points().len(), 1);
        assert_eq!(b.surviving_steps(), vec![(ov(&[2.0, 2.0]), 0)]);
    }

    #[test]
    fn reference_violation_rejected() {
        let b = ParetoBuffer::new(origin());
        assert!(matches!(b.insert(ov(&[-1.0, 2.0]), 0), Err(Error::BelowReference { .. })));
    }

    #[test]
    fn json_round_trip_and_schema() {
        let b = ParetoBuffer::seeded(origin(), ov(&[1.0, 2.0]), 0).unwrap();
        let (b, _) = b.insert(ov(&[2.0, 1.0]), 3).unwrap();
        let json = b.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["reference"], serde_json::json!([0.0, 0.0]));
        assert_eq!(v["points"][1], serde_json::json!([2.0, 1.0]));
        assert_eq!(v["history"][1]["step"], 3);
        assert_eq!(v["history"][1]["accepted"], true);
        assert_eq!(ParetoBuffer::from_json(&json).unwrap(), b);
    }

    #[test]
    fn tampered_front_fails_validation() {
        let json = r#"{"reference":[0,0],"points":[[1,1],[2,2]],"history":[]}"#;
        assert!(ParetoBuffer::from_json(json).is_err());
    }

    proptest! {
        #[test]
        fn hv_accounting_and_invariants(
            cands in prop::collection::vec(prop::collection::vec((0u8..6).prop_map(|x| f64::from(x) / 5.0), 3), 1..40)
        ) {
            let mut b = ParetoBuffer::new(ReferencePoint::origin(3));
            let mut hv = 0.0;
            for (step, c) in cands.into_iter().enumerate() {
                let (next, d) = b.insert(ObjectiveVector::new(c).unwrap(), step).unwrap();
                let new_hv = next.hypervolume();
                prop_assert!(d >= 0.0);
                prop_assert!(new_hv >= hv - 1e-12);
                prop_assert!((new_hv - (hv + d)).abs() <= 1e-9 * new_hv.max(1e-12));
                next.validate().unwrap();
                hv = new_hv;
                b = next;
            }
        }
    }
}
