use serde::{Deserialize, Serialize};

use crate::env::EnvDescriptor;
use crate::error::{check_dim, check_finite, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyClass {
    /// One logit per (state, action); `theta[s * A + a]`.
    Tabular,
    /// Logits `theta[a * F + f] * features[s][f]` summed over `f`.
    Linear { features: Vec<Vec<f64>> },
}

/// Softmax policy over a finite action set. Immutable; updates return a new
/// policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    class: PolicyClass,
    num_states: usize,
    num_actions: usize,
    theta: Vec<f64>,
    /// Parameters that take part in influence computation; `None` means all.
    #[serde(default)]
    mask: Option<Vec<bool>>,
}

/// On-disk policy snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub step: usize,
    #[serde(flatten)]
    pub policy: Policy,
}

impl PolicyCheckpoint {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cp: Self = serde_json::from_str(s).map_err(|e| Error::invalid(e.to_string()))?;
        cp.policy.validate()?;
        Ok(cp)
    }
}

impl Policy {
    /// Uniform tabular policy (all logits zero).
    pub fn tabular(num_states: usize, num_actions: usize) -> Self {
        Self {
            class: PolicyClass::Tabular,
            num_states,
            num_actions,
            theta: vec![0.0; num_states * num_actions],
            mask: None,
        }
    }

    /// Uniform linear-feature policy; `features[s]` is state `s`'s feature row.
    pub fn linear(features: Vec<Vec<f64>>, num_actions: usize) -> Result<Self> {
        let f = features.first().map(Vec::len).unwrap_or(0);
        let p = Self {
            num_states: features.len(),
            num_actions,
            theta: vec![0.0; f * num_actions],
            class: PolicyClass::Linear { features },
            mask: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_theta(mut self, theta: Vec<f64>) -> Result<Self> {
        check_dim(self.theta.len(), theta.len())?;
        check_finite(&theta, "policy parameters")?;
        self.theta = theta;
        Ok(self)
    }

    pub fn with_mask(mut self, mask: Option<Vec<bool>>) -> Result<Self> {
        if let Some(m) = &mask {
            check_dim(self.theta.len(), m.len())?;
        }
        self.mask = mask;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_states == 0 || self.num_actions == 0 {
            return Err(Error::invalid("policy needs at least one state and one action"));
        }
        let expected = match &self.class {
            PolicyClass::Tabular => self.num_states * self.num_actions,
            PolicyClass::Linear { features } => {
                let f = features[0].len();
                if f == 0 || features.iter().any(|row| row.len() != f) {
                    return Err(Error::invalid("feature rows must share a non-zero width"));
                }
                for row in features {
                    check_finite(row, "features")?;
                }
                f * self.num_actions
            }
        };
        check_dim(expected, self.theta.len())?;
        check_finite(&self.theta, "policy parameters")?;
        if let Some(m) = &self.mask {
            check_dim(self.theta.len(), m.len())?;
        }
        Ok(())
    }

    pub fn class(&self) -> &PolicyClass {
        &self.class
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_params(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn check_compatible(&self, env: &EnvDescriptor) -> Result<()> {
        if self.num_states != env.num_states || self.num_actions != env.num_actions {
            return Err(Error::invalid(format!(
                "policy is {}x{} but environment '{}' is {}x{}",
                self.num_states, self.num_actions, env.name, env.num_states, env.num_actions
            )));
        }
        Ok(())
    }

    fn check_state(&self, state: usize) -> Result<()> {
        if state >= self.num_states {
            return Err(Error::invalid(format!("state {state} out of range ({})", self.num_states)));
        }
        Ok(())
    }

    pub fn logits(&self, state: usize) -> Result<Vec<f64>> {
        self.check_state(state)?;
        let a = self.num_actions;
        Ok(match &self.class {
            PolicyClass::Tabular => self.theta[state * a..(state + 1) * a].to_vec(),
            PolicyClass::Linear { features } => {
                let phi = &features[state];
                let f = phi.len();
                (0..a)
                    .map(|b| self.theta[b * f..(b + 1) * f].iter().zip(phi).map(|(t, x)| t * x).sum())
                    .collect()
            }
        })
    }

    /// Action probabilities; strictly positive and summing to 1.
    pub fn probs(&self, state: usize) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(state)?))
    }

    pub fn log_probs(&self, state: usize) -> Result<Vec<f64>> {
        Ok(log_softmax(&self.logits(state)?))
    }

    /// Highest-probability action; ties go to the lowest index.
    pub fn greedy_action(&self, state: usize) -> Result<usize> {
        let logits = self.logits(state)?;
        let mut best = 0;
        for (i, &l) in logits.iter().enumerate() {
            if l > logits[best] {
                best = i;
            }
        }
        Ok(best)
    }

    /// `out += scale * d/dtheta log pi(action | state)`.
    pub fn accumulate_log_prob_grad(&self, state: usize, action: usize, scale: f64, out: &mut [f64]) -> Result<()> {
        check_dim(self.theta.len(), out.len())?;
        if action >= self.num_actions {
            return Err(Error::invalid(format!("action {action} out of range ({})", self.num_actions)));
        }
        let probs = self.probs(state)?;
        let a = self.num_actions;
        match &self.class {
            PolicyClass::Tabular => {
                let row = &mut out[state * a..(state + 1) * a];
                for (b, (o, p)) in row.iter_mut().zip(&probs).enumerate() {
                    let indicator = if b == action { 1.0 } else { 0.0 };
                    *o += scale * (indicator - p);
                }
            }
            PolicyClass::Linear { features } => {
                let phi = &features[state];
                let f = phi.len();
                for (b, p) in probs.iter().enumerate() {
                    let indicator = if b == action { 1.0 } else { 0.0 };
                    let c = scale * (indicator - p);
                    for (o, x) in out[b * f..(b + 1) * f].iter_mut().zip(phi) {
                        *o += c * x;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn log_prob_grad(&self, state: usize, action: usize) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.theta.len()];
        self.accumulate_log_prob_grad(state, action, 1.0, &mut g)?;
        Ok(g)
    }

    /// Zeroes coordinates outside the parameter mask.
    pub fn apply_mask(&self, grad: &mut [f64]) {
        if let Some(mask) = &self.mask {
            for (g, &m) in grad.iter_mut().zip(mask) {
                if !m {
                    *g = 0.0;
                }
            }
        }
    }

    pub(crate) fn same_space(&self, other: &Policy) -> bool {
        self.num_states == other.num_states && self.num_actions == other.num_actions
    }

    pub(crate) fn with_theta_unchecked(&self, theta: Vec<f64>) -> Self {
        Self { theta, ..self.clone() }
    }
}

pub(crate) fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_init_and_probabilities() {
        let p = Policy::tabular(3, 4);
        assert_eq!(p.probs(2).unwrap(), vec![0.25; 4]);
        assert!(p.probs(3).is_err());
        assert!(Policy::tabular(2, 2).with_theta(vec![0.0; 3]).is_err());
        assert!(Policy::tabular(2, 2).with_theta(vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn linear_with_one_hot_features_matches_tabular() {
        let theta = vec![0.3, -1.2, 0.7, 2.0, 0.1, -0.4];
        let tab = Policy::tabular(2, 3).with_theta(theta.clone()).unwrap();
        // Linear layout is [action][feature]; transpose the tabular [state][action] table.
        let lin_theta = vec![theta[0], theta[3], theta[1], theta[4], theta[2], theta[5]];
        let lin = Policy::linear(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 3)
            .unwrap()
            .with_theta(lin_theta)
            .unwrap();
        for s in 0..2 {
            let (a, b) = (tab.probs(s).unwrap(), lin.probs(s).unwrap());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn checkpoint_round_trip_preserves_theta() {
        let p = Policy::tabular(2, 2).with_theta(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let cp = PolicyCheckpoint { step: 7, policy: p };
        let back = PolicyCheckpoint::from_json(&cp.to_json().unwrap()).unwrap();
        assert_eq!(back, cp);
        let v: serde_json::Value = serde_json::from_str(&cp.to_json().unwrap()).unwrap();
        assert!(v.get("theta").is_some() && v.get("step").is_some() && v.get("num_states").is_some());
    }

    fn finite_difference(p: &Policy, s: usize, a: usize) -> Vec<f64> {
        let h = 1e-6;
        (0..p.num_params())
            .map(|i| {
                let mut plus = p.theta().to_vec();
                let mut minus = p.theta().to_vec();
                plus[i] += h;
                minus[i] -= h;
                let lp = p.with_theta_unchecked(plus).log_probs(s).unwrap()[a];
                let lm = p.with_theta_unchecked(minus).log_probs(s).unwrap()[a];
                (lp - lm) / (2.0 * h)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(theta in prop::collection::vec(-50.0f64..50.0, 12)) {
            let p = Policy::tabular(3, 4).with_theta(theta).unwrap();
            for s in 0..3 {
                let probs = p.probs(s).unwrap();
                prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(probs.iter().all(|&x| x >= 0.0));
            }
        }

        #[test]
        fn clamped_logits_give_bounded_score(theta in prop::collection::vec(-20.0f64..=20.0, 12), s in 0usize..3, a in 0usize..4) {
            let p = Policy::tabular(3, 4).with_theta(theta).unwrap();
            let g = p.log_prob_grad(s, a).unwrap();
            prop_assert!(g.iter().map(|x| x * x).sum::<f64>().sqrt() <= 2.0);
        }

        #[test]
        fn score_matches_finite_differences(
            theta in prop::collection::vec(-3.0f64..3.0, 6),
            feats in prop::collection::vec(-1.0f64..1.0, 4),
            s in 0usize..2,
            a in 0usize..3,
        ) {
            let lin = Policy::linear(vec![feats[..2].to_vec(), feats[2..].to_vec()], 3).unwrap().with_theta(theta.clone()).unwrap();
            let tab = Policy::tabular(2, 3).with_theta(theta).unwrap();
            for p in [lin, tab] {
                let g = p.log_prob_grad(s, a).unwrap();
                for (x, y) in g.iter().zip(finite_difference(&p, s, a)) {
                    prop_assert!((x - y).abs() < 1e-7);
                }
            }
        }
    }
}
