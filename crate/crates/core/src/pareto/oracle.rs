//! Independent hypervolume oracle by inclusion–exclusion over all 2^n subsets.
//!
//! Shares nothing with the sweep implementation beyond the input types; used by
//! the test suites and `moweight oracle hv-check`.

use super::{validate_against_reference, ObjectiveVector, ReferencePoint};
use crate::error::{Error, Result};

/// Largest point count accepted (2^n terms).
pub const MAX_POINTS: usize = 20;

pub fn inclusion_exclusion_hypervolume(
    points: &[ObjectiveVector],
    reference: &ReferencePoint,
) -> Result<f64> {
    validate_against_reference(points, reference)?;
    if points.len() > MAX_POINTS {
        return Err(Error::EnumerationCap(format!(
            "inclusion-exclusion over {} points (max {MAX_POINTS})",
            points.len()
        )));
    }
    let r = reference.as_slice();
    let mut total = 0.0;
    let mut mins = r.to_vec();
    for (i, p) in points.iter().enumerate() {
        mins.copy_from_slice(p.as_slice());
        accumulate(points, r, i + 1, &mut mins, 1.0, &mut total);
    }
    Ok(total)
}

/// Adds the signed volume of the intersection box `[r, mins]` and recurses on
/// every extension of the current subset with a later point.
fn accumulate(
    points: &[ObjectiveVector],
    r: &[f64],
    next: usize,
    mins: &mut Vec<f64>,
    sign: f64,
    total: &mut f64,
) {
    let vol: f64 = mins.iter().zip(r).map(|(m, rj)| m - rj).product();
    if vol <= 0.0 {
        return; // every superset intersection is empty too
    }
    *total += sign * vol;
    for j in next..points.len() {
        let saved = mins.clone();
        for (m, &x) in mins.iter_mut().zip(points[j].as_slice()) {
            *m = m.min(x);
        }
        accumulate(points, r, j + 1, mins, -sign, total);
        *mins = saved;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::ov;

    #[test]
    fn small_cases() {
        let r = ReferencePoint::origin(2);
        let v = inclusion_exclusion_hypervolume(&[ov(&[1.0, 3.0]), ov(&[3.0, 1.0])], &r).unwrap();
        assert_eq!(v, 5.0);
        let v = inclusion_exclusion_hypervolume(&[ov(&[1.0, 1.0]), ov(&[2.0, 2.0])], &r).unwrap();
        assert_eq!(v, 4.0);
    }
}
