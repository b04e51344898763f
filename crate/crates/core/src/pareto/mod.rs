//! Pareto dominance, hypervolume geometry and the non-dominated archive.
//!
//! All objective vectors are oriented "larger is better". Raw metrics that should
//! be minimised are negated once, at ingestion, via [`ObjectiveVector::from_raw`].

mod buffer;
mod dominance;
mod hypervolume;
mod montecarlo;
pub mod oracle;

pub use buffer::{BufferEvent, ParetoBuffer};
pub use dominance::{dominates, pareto_filter, weakly_dominates};
pub use hypervolume::{hypervolume, hypervolume_contribution, hypervolume_improvement};
pub use montecarlo::{mc_hypervolume, mc_hypervolume_with, McEstimate};

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};

/// Direction of a raw metric before it enters objective space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Maximize,
    Minimize,
}

/// A point in objective space, every component to be maximised.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("objective vector must have at least one component"));
        }
        check_finite(&values, "objective vector")?;
        Ok(Self(values))
    }

    /// Builds an objective vector from raw metrics, negating minimised ones.
    pub fn from_raw(raw: &[f64], orientation: &[Orientation]) -> Result<Self> {
        check_dim(orientation.len(), raw.len())?;
        let values = raw
            .iter()
            .zip(orientation)
            .map(|(&v, o)| match o {
                Orientation::Maximize => v,
                Orientation::Minimize => -v,
            })
            .collect();
        Self::new(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for ObjectiveVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ObjectiveVector> for Vec<f64> {
    fn from(v: ObjectiveVector) -> Self {
        v.0
    }
}

impl Index<usize> for ObjectiveVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Lower corner of every hypervolume box. Must be weakly dominated by every
/// point it is used with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ReferencePoint(Vec<f64>);

impl ReferencePoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("reference point must have at least one component"));
        }
        check_finite(&values, "reference point")?;
        Ok(Self(values))
    }

    pub fn origin(k: usize) -> Self {
        Self(vec![0.0; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ReferencePoint {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ReferencePoint> for Vec<f64> {
    fn from(v: ReferencePoint) -> Self {
        v.0
    }
}

/// Checks dimensions and that every point weakly dominates the reference.
pub(crate) fn validate_against_reference(
    points: &[ObjectiveVector],
    reference: &ReferencePoint,
) -> Result<()> {
    for (index, p) in points.iter().enumerate() {
        check_dim(reference.len(), p.len())?;
        if let Some(objective) = p
            .as_slice()
            .iter()
            .zip(reference.as_slice())
            .position(|(a, r)| a < r)
        {
            return Err(Error::BelowReference { index, objective });
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) fn ov(values: &[f64]) -> ObjectiveVector {
    ObjectiveVector::new(values.to_vec()).unwrap()
}
