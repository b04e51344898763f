//! Exact hypervolume.
//!
//! Points are first translated so the reference sits at the origin and boxes with
//! zero volume are dropped. Then:
//!
//! * K = 1: the largest coordinate.
//! * K = 2: sort by the first coordinate (descending) and sweep, O(n log n).
//! * K = 3: dimension sweep on the third coordinate, maintaining the 2-D
//!   staircase of points seen so far.
//! * K >= 4: slice objective space along the sorted last coordinate and recurse
//!   on the projected prefix sets.

use std::cmp::Ordering;

use super::dominance::{dominates_slice, weakly_dominates_slice};
use super::{validate_against_reference, ObjectiveVector, ReferencePoint};
use crate::error::Result;

/// Lebesgue measure of the union of boxes `[reference, a]` over `points`.
pub fn hypervolume(points: &[ObjectiveVector], reference: &ReferencePoint) -> Result<f64> {
    validate_against_reference(points, reference)?;
    Ok(hypervolume_unchecked(points, reference))
}

pub(crate) fn hypervolume_unchecked(points: &[ObjectiveVector], reference: &ReferencePoint) -> f64 {
    let k = reference.len();
    let rel: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            p.as_slice()
                .iter()
                .zip(reference.as_slice())
                .map(|(a, r)| a - r)
                .collect::<Vec<f64>>()
        })
        .filter(|p| p.iter().all(|&x| x > 0.0))
        .collect();
    hv_relative(rel, k)
}

/// Contribution of `a` in the set-difference form: `HV(points ∪ {a}) − HV(points \ {a})`.
///
/// When `a` is already a member of `points` this is its exclusive contribution.
pub fn hypervolume_contribution(
    a: &ObjectiveVector,
    points: &[ObjectiveVector],
    reference: &ReferencePoint,
) -> Result<f64> {
    validate_against_reference(std::slice::from_ref(a), reference)?;
    validate_against_reference(points, reference)?;
    let others: Vec<ObjectiveVector> = points.iter().filter(|p| *p != a).cloned().collect();
    Ok(gain_over(a, &others, reference))
}

/// Improvement form `HV(points ∪ {a}) − HV(points)`: zero when `a` is already
/// present, otherwise identical to [`hypervolume_contribution`].
pub fn hypervolume_improvement(
    a: &ObjectiveVector,
    points: &[ObjectiveVector],
    reference: &ReferencePoint,
) -> Result<f64> {
    validate_against_reference(std::slice::from_ref(a), reference)?;
    validate_against_reference(points, reference)?;
    if points.contains(a) {
        return Ok(0.0);
    }
    Ok(gain_over(a, points, reference))
}

fn gain_over(a: &ObjectiveVector, others: &[ObjectiveVector], reference: &ReferencePoint) -> f64 {
    // Exact zero for covered points, independent of rounding in the sweeps.
    if others
        .iter()
        .any(|p| weakly_dominates_slice(p.as_slice(), a.as_slice()))
    {
        return 0.0;
    }
    let mut with: Vec<ObjectiveVector> = others.to_vec();
    with.push(a.clone());
    let gain = hypervolume_unchecked(&with, reference) - hypervolume_unchecked(others, reference);
    gain.max(0.0)
}

fn desc(a: f64, b: f64) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

fn hv_relative(mut pts: Vec<Vec<f64>>, k: usize) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    match k {
        1 => pts.iter().map(|p| p[0]).fold(0.0, f64::max),
        2 => sweep_2d(&mut pts),
        3 => sweep_3d(&mut pts),
        _ => slice_last(pts, k),
    }
}

fn sweep_2d(pts: &mut [Vec<f64>]) -> f64 {
    pts.sort_by(|a, b| desc(a[0], b[0]).then(desc(a[1], b[1])));
    let mut area = 0.0;
    let mut covered_y = 0.0;
    for p in pts.iter() {
        if p[1] > covered_y {
            area += p[0] * (p[1] - covered_y);
            covered_y = p[1];
        }
    }
    area
}

/// 2-D staircase: x strictly increasing, y strictly decreasing.
#[derive(Default)]
struct Staircase {
    steps: Vec<(f64, f64)>,
}

impl Staircase {
    fn insert(&mut self, x: f64, y: f64) {
        if self.steps.iter().any(|&(sx, sy)| sx >= x && sy >= y) {
            return;
        }
        self.steps.retain(|&(sx, sy)| !(sx <= x && sy <= y));
        let at = self.steps.partition_point(|&(sx, _)| sx < x);
        self.steps.insert(at, (x, y));
    }

    fn area(&self) -> f64 {
        let mut prev_x = 0.0;
        let mut area = 0.0;
        for &(x, y) in &self.steps {
            area += (x - prev_x) * y;
            prev_x = x;
        }
        area
    }
}

fn sweep_3d(pts: &mut [Vec<f64>]) -> f64 {
    pts.sort_by(|a, b| desc(a[2], b[2]));
    let mut stairs = Staircase::default();
    let mut volume = 0.0;
    for i in 0..pts.len() {
        stairs.insert(pts[i][0], pts[i][1]);
        let next_z = pts.get(i + 1).map_or(0.0, |p| p[2]);
        let depth = pts[i][2] - next_z;
        if depth > 0.0 {
            volume += stairs.area() * depth;
        }
    }
    volume
}

fn slice_last(mut pts: Vec<Vec<f64>>, k: usize) -> f64 {
    let last = k - 1;
    pts.sort_by(|a, b| desc(a[last], b[last]));
    let mut volume = 0.0;
    let mut slab: Vec<Vec<f64>> = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        let projected = pts[i][..last].to_vec();
        if !slab.iter().any(|q| weakly_dominates_slice(q, &projected)) {
            slab.retain(|q| !dominates_slice(&projected, q));
            slab.push(projected);
        }
        let next = pts.get(i + 1).map_or(0.0, |p| p[last]);
        let depth = pts[i][last] - next;
        if depth > 0.0 {
            volume += hv_relative(slab.clone(), last) * depth;
        }
    }
    volume
}
