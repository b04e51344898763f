use super::policy::log_softmax;
use super::Policy;
use crate::error::{check_dim, Error, Result};

/// `sum_s weight(s) * KL(p(.|s) || q(.|s))`.
pub fn policy_kl(p: &Policy, q: &Policy, state_weights: &[f64]) -> Result<f64> {
    if !p.same_space(q) {
        return Err(Error::invalid("policies act on different state/action spaces"));
    }
    check_dim(p.num_states(), state_weights.len())?;
    if state_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid("state weights must be finite and >= 0"));
    }
    let mut total = 0.0;
    for (s, &w) in state_weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let lp = log_softmax(&p.logits(s)?);
        let lq = log_softmax(&q.logits(s)?);
        let kl: f64 = lp.iter().zip(&lq).map(|(a, b)| a.exp() * (a - b)).sum();
        total += w * kl.max(0.0);
    }
    Ok(total)
}
