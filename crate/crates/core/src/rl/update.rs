use serde::{Deserialize, Serialize};

use super::Policy;
use crate::error::{check_dim, Error, Result};

/// Ratio clipping for the surrogate objective, with a dual clip on negative
/// advantages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipConfig {
    pub enabled: bool,
    pub epsilon: f64,
    pub dual_clip_c: f64,
}

impl Default for ClipConfig {
    /// Wide enough to never bind.
    fn default() -> Self {
        Self { enabled: true, epsilon: 100.0, dual_clip_c: 100.0 }
    }
}

impl ClipConfig {
    pub fn disabled() -> Self {
        Self { enabled: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.enabled && !(self.epsilon > 0.0 && self.dual_clip_c > 1.0) {
            return Err(Error::config("clip needs epsilon > 0 and dual_clip_c > 1"));
        }
        Ok(())
    }
}

/// Coefficient on `grad log pi` of the clipped surrogate at importance ratio
/// `ratio`. Equals `advantage` whenever no clip binds, in particular at ratio 1.
pub fn clipped_surrogate_coef(ratio: f64, advantage: f64, clip: &ClipConfig) -> Result<f64> {
    clip.validate()?;
    if !(ratio.is_finite() && ratio > 0.0) || !advantage.is_finite() {
        return Err(Error::NonFinite("surrogate ratio or advantage"));
    }
    if !clip.enabled {
        return Ok(ratio * advantage);
    }
    let (lo, hi) = (1.0 - clip.epsilon, 1.0 + clip.epsilon);
    let active = if advantage >= 0.0 {
        ratio <= hi
    } else {
        ratio >= lo && ratio <= clip.dual_clip_c
    };
    Ok(if active { ratio * advantage } else { 0.0 })
}

/// Gradient ascent step `theta + lr * g`, with `g` rescaled to norm at most
/// `max_grad_norm` when given.
pub fn policy_update(policy: &Policy, gradient: &[f64], lr: f64, max_grad_norm: Option<f64>) -> Result<Policy> {
    check_dim(policy.num_params(), gradient.len())?;
    if gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("policy gradient"));
    }
    if !(lr.is_finite() && lr >= 0.0) {
        return Err(Error::invalid(format!("learning rate {lr} must be finite and >= 0")));
    }
    if lr == 0.0 {
        return Ok(policy.clone());
    }
    let norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
    let factor = match max_grad_norm {
        Some(cap) if cap <= 0.0 => return Err(Error::invalid("max_grad_norm must be positive")),
        Some(cap) if norm > cap => cap / norm,
        _ => 1.0,
    };
    let theta: Vec<f64> = policy
        .theta()
        .iter()
        .zip(gradient)
        .map(|(t, g)| t + lr * factor * g)
        .collect();
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("policy parameters after update"));
    }
    Ok(policy.with_theta_unchecked(theta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_learning_rate_is_identity() {
        let p = Policy::tabular(2, 2).with_theta(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(policy_update(&p, &[5.0, 1.0, 1.0, 1.0], 0.0, Some(1.0)).unwrap(), p);
    }

    #[test]
    fn norm_cap_rescales_to_unit_norm() {
        let p = Policy::tabular(1, 2);
        let q = policy_update(&p, &[6.0, 8.0], 1.0, Some(1.0)).unwrap();
        assert!((q.theta()[0] - 0.6).abs() < 1e-15);
        assert!((q.theta()[1] - 0.8).abs() < 1e-15);
        let r = policy_update(&p, &[0.3, 0.4], 1.0, Some(1.0)).unwrap();
        assert_eq!(r.theta(), &[0.3, 0.4]);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let p = Policy::tabular(1, 2);
        assert!(matches!(policy_update(&p, &[f64::NAN, 0.0], 1.0, None), Err(Error::NonFinite(_))));
        assert!(policy_update(&p, &[1.0], 1.0, None).is_err());
    }

    #[test]
    fn clip_is_inactive_on_policy() {
        for &a in &[-3.0, -0.1, 0.0, 0.5, 7.0] {
            for clip in [ClipConfig::default(), ClipConfig { enabled: true, epsilon: 0.2, dual_clip_c: 3.0 }, ClipConfig::disabled()] {
                assert_eq!(clipped_surrogate_coef(1.0, a, &clip).unwrap(), a);
            }
        }
    }

    #[test]
    fn clip_binds_off_policy() {
        let clip = ClipConfig { enabled: true, epsilon: 0.2, dual_clip_c: 3.0 };
        assert_eq!(clipped_surrogate_coef(1.5, 1.0, &clip).unwrap(), 0.0);
        assert_eq!(clipped_surrogate_coef(1.1, 1.0, &clip).unwrap(), 1.1);
        assert_eq!(clipped_surrogate_coef(0.5, -1.0, &clip).unwrap(), 0.0);
        assert_eq!(clipped_surrogate_coef(2.0, -1.0, &clip).unwrap(), -2.0);
        assert_eq!(clipped_surrogate_coef(4.0, -1.0, &clip).unwrap(), 0.0);
        assert!(clipped_surrogate_coef(1.0, 1.0, &ClipConfig { enabled: true, epsilon: 0.2, dual_clip_c: 1.0 }).is_err());
    }
}
