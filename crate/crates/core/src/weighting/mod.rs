//! Reward-weighting math: the hypervolume meta-reward, linear scalarization,
//! gradient influence and the exponentiated weight update.
//!
//! The weight update is entropic mirror descent on the simplex:
//! `w_i <- w_i * exp(eta * I_i / mu)` followed by renormalisation, where
//! `I_i = <g_i, sum_k g_k>` for per-objective policy gradients `g_k`. Only the ratio
//! `tau = eta / mu` matters, and `T` updates collapse to a single softmax of the
//! accumulated `tau * I` (see [`closed_form_weights`]).

mod schedule;

pub use schedule::{riemann_zeta, ScheduleConfig, ScheduleKind, ScheduleState};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};

/// Largest accepted deviation of a weight vector's sum from one.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Reward weights on the probability simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Validates simplex membership: non-negative, sum one within [`SIMPLEX_TOL`].
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("weight vector must be non-empty"));
        }
        check_finite(&values, "weight vector")?;
        if values.iter().any(|&w| w < 0.0) {
            return Err(Error::invalid("weights must be non-negative"));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!("weights sum to {sum}, expected 1")));
        }
        Ok(Self(values))
    }

    /// Projects non-negative values onto the simplex by dividing by their sum.
    pub fn normalized(values: Vec<f64>) -> Result<Self> {
        check_finite(&values, "weight vector")?;
        let sum: f64 = values.iter().sum();
        if values.iter().any(|&w| w < 0.0) || sum <= 0.0 {
            return Err(Error::invalid("cannot normalise: need non-negative weights with positive sum"));
        }
        Ok(Self(values.into_iter().map(|w| w / sum).collect()))
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform weights need k > 0");
        Self(vec![1.0 / k as f64; k])
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.0.len() as f64;
        self.0.iter().all(|&w| (w - u).abs() <= SIMPLEX_TOL)
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

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

/// Per-objective influence, all taken from one gradient snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InfluenceVector(Vec<f64>);

impl InfluenceVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values, "influence")?;
        Ok(Self(values))
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

/// Largest `f64` below 2: the meta-reward's supremum is never attained.
pub const META_REWARD_CEILING: f64 = 2.0 - f64::EPSILON;

/// `0.5 + 1.5 tanh(delta_hv)`: 0.5 for no gain, approaching 2 for large gains.
///
/// `tanh` rounds to exactly 1 beyond roughly 19, so the result is capped one ulp
/// below 2 to keep the range half-open.
pub fn meta_reward(delta_hv: f64) -> Result<f64> {
    if delta_hv.is_nan() {
        return Err(Error::NonFinite("hypervolume contribution"));
    }
    if delta_hv < 0.0 {
        return Err(Error::invalid(format!(
            "hypervolume contribution must be non-negative, got {delta_hv}"
        )));
    }
    Ok((0.5 + 1.5 * delta_hv.tanh()).min(META_REWARD_CEILING))
}

/// Linear scalarization `w . r`.
pub fn scalarize(w: &WeightVector, r: &[f64]) -> Result<f64> {
    check_dim(w.len(), r.len())?;
    Ok(dot(w.as_slice(), r))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `I_i = <g_i, sum_k g_k>`.
pub fn influence(per_objective_grads: &[Vec<f64>]) -> Result<InfluenceVector> {
    let first = per_objective_grads
        .first()
        .ok_or_else(|| Error::invalid("influence needs at least one gradient"))?;
    let dim = first.len();
    let mut total = vec![0.0; dim];
    for g in per_objective_grads {
        check_dim(dim, g.len())?;
        check_finite(g, "per-objective gradient")?;
        for (t, x) in total.iter_mut().zip(g) {
            *t += x;
        }
    }
    InfluenceVector::new(per_objective_grads.iter().map(|g| dot(g, &total)).collect())
}

/// Softmax-style renormalisation of `w_i * exp(e_i)`, shifted by `max e` so large
/// exponents cannot overflow.
fn exponentiate(w: &[f64], exponents: &[f64]) -> Result<Vec<f64>> {
    check_finite(exponents, "weight-update exponent")?;
    let max = exponents
        .iter()
        .zip(w)
        .filter(|(_, &wi)| wi > 0.0)
        .map(|(e, _)| *e)
        .fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = w
        .iter()
        .zip(exponents)
        .map(|(wi, e)| if *wi > 0.0 { wi * (e - max).exp() } else { 0.0 })
        .collect();
    let sum: f64 = scaled.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) {
        return Err(Error::NonFinite("weight normalisation"));
    }
    Ok(scaled.into_iter().map(|x| x / sum).collect())
}

/// One exponentiated-gradient step `w' ∝ w ⊙ exp(eta I / mu)`.
pub fn update_weights(
    w: &WeightVector,
    influence: &InfluenceVector,
    eta: f64,
    mu: f64,
) -> Result<WeightVector> {
    check_dim(w.len(), influence.len())?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::invalid(format!("regularisation mu must be positive, got {mu}")));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("learning rate eta must be non-negative, got {eta}")));
    }
    if eta == 0.0 {
        return Ok(w.clone());
    }
    let exponents: Vec<f64> = influence.as_slice().iter().map(|i| eta * i / mu).collect();
    Ok(WeightVector(exponentiate(w.as_slice(), &exponents)?))
}

/// Weights after `T` updates in one shot:
/// `w_i ∝ w0_i exp(sum_t tau_t I_i^t)`.
pub fn closed_form_weights(
    w0: &WeightVector,
    taus: &[f64],
    influences: &[InfluenceVector],
) -> Result<WeightVector> {
    check_dim(taus.len(), influences.len())?;
    check_finite(taus, "tau sequence")?;
    let mut acc = vec![0.0; w0.len()];
    for (tau, inf) in taus.iter().zip(influences) {
        check_dim(w0.len(), inf.len())?;
        for (a, i) in acc.iter_mut().zip(inf.as_slice()) {
            *a += tau * i;
        }
    }
    Ok(WeightVector(exponentiate(w0.as_slice(), &acc)?))
}

/// Ceiling on `w_i / w_j` for influence bounded by `K C^2` and total step size `ell`:
/// `(w0_i / w0_j) exp(2 K C^2 ell)`.
pub fn ratio_bound(w0_i: f64, w0_j: f64, k: usize, c: f64, ell: f64) -> Result<f64> {
    if !(w0_i > 0.0 && w0_j > 0.0 && c > 0.0 && k > 0) {
        return Err(Error::invalid("ratio_bound needs positive weights, K and C"));
    }
    if !(ell >= 0.0 && ell.is_finite()) {
        return Err(Error::invalid("ratio_bound needs a finite, non-negative step-size sum"));
    }
    Ok(w0_i / w0_j * (2.0 * k as f64 * c * c * ell).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wv(v: &[f64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    fn iv(v: &[f64]) -> InfluenceVector {
        InfluenceVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn meta_reward_examples() {
        assert_eq!(meta_reward(0.0).unwrap(), 0.5);
        let one = meta_reward(1.0).unwrap();
        assert!((one - (0.5 + 1.5 * 1.0f64.tanh())).abs() < 1e-15);
        assert!((one - 1.642).abs() < 1e-3);
        let ten = meta_reward(10.0).unwrap();
        assert!(ten > 1.999 && ten < 2.0);
        assert!(meta_reward(1e6).unwrap() < 2.0);
        assert!(meta_reward(f64::INFINITY).unwrap() < 2.0);
        assert!(meta_reward(-1e-9).is_err());
        assert!(meta_reward(f64::NAN).is_err());
    }

    #[test]
    fn scalarize_examples() {
        assert_eq!(scalarize(&wv(&[0.5, 0.25, 0.25]), &[1.0, 0.0, 1.0]).unwrap(), 0.75);
        assert!((scalarize(&WeightVector::uniform(3), &[1.0, 1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(scalarize(&wv(&[1.0, 0.0, 0.0]), &[0.3, 9.0, -4.0]).unwrap(), 0.3);
        assert!(scalarize(&wv(&[0.5, 0.5]), &[1.0]).is_err());
    }

    #[test]
    fn paper_weight_configurations_are_on_the_simplex() {
        for w in [[0.5, 0.25, 0.25], [0.334, 0.333, 0.333], [0.25, 0.375, 0.375]] {
            WeightVector::new(w.to_vec()).unwrap();
        }
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn influence_examples() {
        let i = influence(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(i.as_slice(), &[1.0, 1.0]);
        let i = influence(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(i.as_slice(), &[0.0, 0.0]);
        let i = influence(&[vec![3.0, -4.0]]).unwrap();
        assert_eq!(i.as_slice(), &[25.0]);
        assert!(influence(&[vec![1.0, f64::INFINITY]]).is_err());
        assert!(influence(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn influence_decomposes_into_cross_terms_plus_self_magnitude() {
        let grads = vec![vec![0.3, -1.2, 0.7], vec![2.0, 0.1, -0.4], vec![-0.5, 0.5, 0.9]];
        let inf = influence(&grads).unwrap();
        for i in 0..3 {
            let cross: f64 = (0..3).filter(|&k| k != i).map(|k| dot(&grads[i], &grads[k])).sum();
            let own = dot(&grads[i], &grads[i]);
            assert!((inf.as_slice()[i] - (cross + own)).abs() < 1e-14);
        }
    }

    #[test]
    fn update_examples() {
        let w = wv(&[0.2, 0.3, 0.5]);
        assert_eq!(update_weights(&w, &iv(&[4.0, 4.0, 4.0]), 1.0, 1.0).unwrap().as_slice(), w.as_slice());
        let out = update_weights(&wv(&[0.5, 0.5]), &iv(&[2f64.ln(), 0.0]), 1.0, 1.0).unwrap();
        assert!((out.as_slice()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((out.as_slice()[1] - 1.0 / 3.0).abs() < 1e-15);
        let u = WeightVector::uniform(3);
        assert_eq!(update_weights(&u, &iv(&[1.0, -7.0, 3.0]), 0.0, 1e-5).unwrap(), u);
        assert!(update_weights(&u, &iv(&[1.0, 2.0, 3.0]), 1.0, 0.0).is_err());
        assert!(update_weights(&u, &iv(&[1.0, 2.0, 3.0]), -1.0, 1.0).is_err());
    }

    #[test]
    fn huge_exponents_do_not_overflow() {
        let out = update_weights(&wv(&[0.5, 0.5]), &iv(&[1e6, 1e6 - 1.0]), 1.0, 1e-3).unwrap();
        assert!(out.as_slice().iter().all(|w| w.is_finite()));
        assert!((out.as_slice().iter().sum::<f64>() - 1.0).abs() < SIMPLEX_TOL);
    }

    #[test]
    fn closed_form_examples() {
        let w0 = wv(&[0.2, 0.8]);
        let i1 = iv(&[0.7, -0.2]);
        let step = update_weights(&w0, &i1, 0.3, 1.0).unwrap();
        let closed = closed_form_weights(&w0, &[0.3], &[i1]).unwrap();
        for (a, b) in step.as_slice().iter().zip(closed.as_slice()) {
            assert!((a - b).abs() <= 1e-15);
        }
        let zeros = vec![iv(&[0.0, 0.0]); 4];
        assert_eq!(closed_form_weights(&w0, &[1.0; 4], &zeros).unwrap(), w0);
        assert!(closed_form_weights(&w0, &[1.0, 2.0], &zeros).is_err());
    }

    #[test]
    fn closed_form_matches_iteration_on_random_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = 4;
        let w0 = WeightVector::normalized((0..k).map(|_| rng.gen_range(0.05..1.0)).collect()).unwrap();
        let taus: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..0.5)).collect();
        let infs: Vec<InfluenceVector> =
            (0..50).map(|_| iv(&(0..k).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<_>>())).collect();
        let mut w = w0.clone();
        for (tau, inf) in taus.iter().zip(&infs) {
            w = update_weights(&w, inf, *tau, 1.0).unwrap();
        }
        let closed = closed_form_weights(&w0, &taus, &infs).unwrap();
        for (a, b) in w.as_slice().iter().zip(closed.as_slice()) {
            assert!((a - b).abs() <= 1e-10 * b.abs());
        }
    }

    #[test]
    fn ratio_bound_examples() {
        assert_eq!(ratio_bound(0.2, 0.4, 3, 1.0, 0.0).unwrap(), 0.5);
        let b = ratio_bound(1.0 / 3.0, 1.0 / 3.0, 3, 1.0, 0.5).unwrap();
        assert!((b - 3f64.exp()).abs() < 1e-12);
        let base = ratio_bound(0.5, 0.5, 2, 1.0, 1.0).unwrap();
        assert!(ratio_bound(0.5, 0.5, 3, 1.0, 1.0).unwrap() > base);
        assert!(ratio_bound(0.5, 0.5, 2, 1.1, 1.0).unwrap() > base);
        assert!(ratio_bound(0.5, 0.5, 2, 1.0, 1.1).unwrap() > base);
        assert!(ratio_bound(0.0, 0.5, 2, 1.0, 1.0).is_err());
        assert!(ratio_bound(0.5, 0.5, 2, -1.0, 1.0).is_err());
    }

    fn simplex(k: usize) -> impl Strategy<Value = WeightVector> {
        prop::collection::vec(0.01f64..1.0, k).prop_map(|v| WeightVector::normalized(v).unwrap())
    }

    proptest! {
        #[test]
        fn simplex_closure(w in simplex(4), inf in prop::collection::vec(-50.0f64..50.0, 4), eta in 0.0f64..2.0) {
            let out = update_weights(&w, &iv(&inf), eta, 0.7).unwrap();
            prop_assert!((out.as_slice().iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL);
            prop_assert!(out.as_slice().iter().all(|&x| x > 0.0));
        }

        #[test]
        fn shift_invariance(w in simplex(3), inf in prop::collection::vec(-5.0f64..5.0, 3), c in -10.0f64..10.0) {
            let shifted: Vec<f64> = inf.iter().map(|x| x + c).collect();
            let a = update_weights(&w, &iv(&inf), 0.3, 1.0).unwrap();
            let b = update_weights(&w, &iv(&shifted), 0.3, 1.0).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn only_eta_over_mu_matters(w in simplex(3), inf in prop::collection::vec(-5.0f64..5.0, 3), s in 0.01f64..100.0) {
            let a = update_weights(&w, &iv(&inf), 1e-6, 1e-5).unwrap();
            let b = update_weights(&w, &iv(&inf), 1e-6 * s, 1e-5 * s).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn meta_reward_is_strictly_increasing(a in 0.0f64..5.0, d in 1e-6f64..1.0) {
            let lo = meta_reward(a).unwrap();
            let hi = meta_reward(a + d).unwrap();
            prop_assert!(hi > lo);
            prop_assert!((0.5..2.0).contains(&lo));
        }
    }
}
