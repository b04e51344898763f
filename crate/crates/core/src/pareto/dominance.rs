use super::ObjectiveVector;
use crate::error::{check_dim, Error, Result};

/// Strict Pareto dominance: `a >= b` componentwise and `a != b`.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool> {
    check_dim(a.len(), b.len())?;
    Ok(dominates_slice(a.as_slice(), b.as_slice()))
}

/// `a >= b` componentwise (equality allowed).
pub fn weakly_dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool> {
    check_dim(a.len(), b.len())?;
    Ok(weakly_dominates_slice(a.as_slice(), b.as_slice()))
}

pub(crate) fn dominates_slice(a: &[f64], b: &[f64]) -> bool {
    weakly_dominates_slice(a, b) && a != b
}

pub(crate) fn weakly_dominates_slice(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

/// Returns the non-dominated subset, in first-occurrence order, with duplicates
/// collapsed.
pub fn pareto_filter(points: &[ObjectiveVector]) -> Result<Vec<ObjectiveVector>> {
    let first = points
        .first()
        .ok_or_else(|| Error::invalid("pareto_filter needs at least one point"))?;
    for p in points {
        check_dim(first.len(), p.len())?;
    }
    Ok(non_dominated(points))
}

pub(crate) fn non_dominated(points: &[ObjectiveVector]) -> Vec<ObjectiveVector> {
    let mut out: Vec<ObjectiveVector> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let dominated = points
            .iter()
            .enumerate()
            .any(|(j, q)| j != i && dominates_slice(q.as_slice(), p.as_slice()));
        if !dominated && !out.contains(p) {
            out.push(p.clone());
        }
    }
    out
}
