use super::MoEnvironment;
use crate::error::{Error, Result};
use crate::pareto::{pareto_filter, ObjectiveVector};

pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 22;

/// Non-dominated set of expected objective vectors over deterministic
/// stationary policies.
///
/// Horizon-1 environments are solved per context and combined; multi-step
/// environments must be deterministic with a single context, and are solved
/// by enumerating self-avoiding paths (a revisit closes a cycle the policy
/// then follows until the horizon).
pub fn true_pareto_front(env: &dyn MoEnvironment, cap: usize) -> Result<Vec<ObjectiveVector>> {
    let desc = env.descriptor();
    if desc.horizon == 1 {
        one_step_front(env, cap)
    } else if env.num_contexts() == 1 {
        path_front(env, cap)
    } else {
        Err(Error::EnumerationCap("multi-step multi-context front enumeration unsupported".into()))
    }
}

fn one_step_front(env: &dyn MoEnvironment, cap: usize) -> Result<Vec<ObjectiveVector>> {
    let desc = env.descriptor();
    let k = desc.num_objectives();
    let contexts = env.num_contexts();
    // Front of a Minkowski sum lies in the sum of the fronts.
    let mut acc = vec![vec![0.0; k]];
    let mut work = 0usize;
    for c in 0..contexts {
        let s = env.initial_state(c)?;
        let mut options = Vec::with_capacity(desc.num_actions);
        for a in 0..desc.num_actions {
            let mut mean = vec![0.0; k];
            for o in env.outcomes(s, 0, a)? {
                for (m, r) in mean.iter_mut().zip(&o.reward) {
                    *m += o.prob * r;
                }
            }
            options.push(ObjectiveVector::new(mean)?);
        }
        let options = pareto_filter(&options)?;
        work += acc.len() * options.len();
        if work > cap {
            return Err(Error::EnumerationCap(format!("front enumeration exceeded {cap} combinations")));
        }
        let sums: Vec<ObjectiveVector> = acc
            .iter()
            .flat_map(|x| {
                options.iter().map(move |y| x.iter().zip(y.as_slice()).map(|(a, b)| a + b).collect::<Vec<_>>())
            })
            .map(ObjectiveVector::new)
            .collect::<Result<_>>()?;
        acc = pareto_filter(&sums)?.into_iter().map(ObjectiveVector::into_vec).collect();
    }
    let n = contexts as f64;
    let means = acc
        .into_iter()
        .map(|v| ObjectiveVector::new(v.into_iter().map(|x| x / n).collect()))
        .collect::<Result<Vec<_>>>()?;
    pareto_filter(&means)
}

struct PathSearch<'a> {
    env: &'a dyn MoEnvironment,
    horizon: usize,
    choice: Vec<Option<usize>>,
    leaves: Vec<ObjectiveVector>,
    count: usize,
    cap: usize,
}

impl PathSearch<'_> {
    fn deterministic_step(&self, state: usize, t: usize, action: usize) -> Result<super::Outcome> {
        let mut o = self.env.outcomes(state, t, action)?;
        if o.len() != 1 {
            return Err(Error::invalid("path enumeration requires deterministic transitions"));
        }
        Ok(o.pop().expect("one outcome"))
    }

    fn leaf(&mut self, total: Vec<f64>) -> Result<()> {
        self.count += 1;
        if self.count > self.cap {
            return Err(Error::EnumerationCap(format!("more than {} paths", self.cap)));
        }
        self.leaves.push(ObjectiveVector::new(total)?);
        Ok(())
    }

    fn visit(&mut self, state: usize, t: usize, total: &[f64]) -> Result<()> {
        for a in 0..self.env.descriptor().num_actions {
            self.choice[state] = Some(a);
            let o = self.deterministic_step(state, t, a)?;
            let mut acc: Vec<f64> = total.iter().zip(&o.reward).map(|(x, r)| x + r).collect();
            if o.done || t + 1 == self.horizon {
                self.leaf(acc)?;
            } else if self.choice[o.next_state].is_some() {
                // Cycle: the fixed choices repeat until the horizon.
                let (mut s, mut tt) = (o.next_state, t + 1);
                while tt < self.horizon {
                    let a = self.choice[s].expect("state on cycle has a choice");
                    let o = self.deterministic_step(s, tt, a)?;
                    acc.iter_mut().zip(&o.reward).for_each(|(x, r)| *x += r);
                    if o.done {
                        break;
                    }
                    s = o.next_state;
                    tt += 1;
                }
                self.leaf(acc)?;
            } else {
                self.visit(o.next_state, t + 1, &acc)?;
            }
            // Keep the leaf count bounded by filtering as we go.
            if self.leaves.len() > 4096 {
                self.leaves = pareto_filter(&self.leaves)?;
            }
        }
        self.choice[state] = None;
        Ok(())
    }
}

fn path_front(env: &dyn MoEnvironment, cap: usize) -> Result<Vec<ObjectiveVector>> {
    let desc = env.descriptor();
    let mut search = PathSearch {
        env,
        horizon: desc.horizon,
        choice: vec![None; desc.num_states],
        leaves: Vec::new(),
        count: 0,
        cap,
    };
    let start = env.initial_state(0)?;
    search.visit(start, 0, &vec![0.0; desc.num_objectives()])?;
    pareto_filter(&search.leaves)
}

/// A front point lying strictly below the upper convex hull of a
/// two-objective front, by vertical distance `gap`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonConvexity {
    pub point: ObjectiveVector,
    pub gap: f64,
}

/// Finds the front point deepest inside the concave region, if any.
pub fn nonconvexity_certificate(front: &[ObjectiveVector]) -> Result<Option<NonConvexity>> {
    if front.iter().any(|p| p.len() != 2) {
        return Err(Error::invalid("non-convexity certificate needs two objectives"));
    }
    let mut pts: Vec<(f64, f64)> = pareto_filter(front)?.iter().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) >= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let mut best: Option<NonConvexity> = None;
    for &(x, y) in &pts {
        let Some(i) = hull.windows(2).position(|w| w[0].0 <= x && x <= w[1].0) else {
            continue;
        };
        let (a, b) = (hull[i], hull[i + 1]);
        let upper = a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0);
        let gap = upper - y;
        if gap > 1e-12 && best.as_ref().is_none_or(|c| gap > c.gap) {
            best = Some(NonConvexity { point: ObjectiveVector::new(vec![x, y])?, gap });
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ArmReward, DeepSeaTreasure, DstConfig, MoBandit, MoBanditConfig, MoveSet};
    use crate::pareto::{ov, weakly_dominates};
    use crate::rl::{sample_trajectory, Policy};
    use crate::rng;
    use rand::Rng;

    fn bandit(rows: &[&[f64]]) -> MoBandit {
        MoBandit::new(MoBanditConfig {
            arms: rows.iter().map(|r| r.iter().map(|&v| ArmReward::Deterministic(v)).collect()).collect(),
        })
        .unwrap()
    }

    #[test]
    fn bandit_fronts() {
        let env = bandit(&[&[1.0, 0.0], &[0.0, 1.0], &[0.2, 0.2]]);
        let f = true_pareto_front(&env, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(f, vec![ov(&[1.0, 0.0]), ov(&[0.0, 1.0]), ov(&[0.2, 0.2])]);
        let single = bandit(&[&[0.3, 0.7]]);
        assert_eq!(true_pareto_front(&single, DEFAULT_ENUMERATION_CAP).unwrap().len(), 1);
    }

    /// Brute-force enumeration of every path the default grid allows.
    fn brute_force_dst(env: &DeepSeaTreasure) -> Vec<ObjectiveVector> {
        let cfg = env.config();
        let mut pts = Vec::new();
        // Shortest path to column c is depth + c moves; any treasure reachable
        // within the horizon can be reached in exactly its shortest time.
        for c in 0..cfg.depths.len() {
            let steps = cfg.depths[c] + c;
            if steps <= cfg.horizon {
                pts.push(ObjectiveVector::new(env.treasure_objectives(c, steps)).unwrap());
            }
        }
        pareto_filter(&pts).unwrap()
    }

    #[test]
    fn dst_front_matches_shortest_paths_and_is_nonconvex() {
        let env = DeepSeaTreasure::new(DstConfig::default()).unwrap();
        let mut f = true_pareto_front(&env, DEFAULT_ENUMERATION_CAP).unwrap();
        let mut expected = brute_force_dst(&env);
        let key = |p: &ObjectiveVector| p[0];
        f.sort_by(|a, b| key(a).total_cmp(&key(b)));
        expected.sort_by(|a, b| key(a).total_cmp(&key(b)));
        assert_eq!(f, expected);
        assert!(f.len() >= 3);
        let cert = nonconvexity_certificate(&f).unwrap().expect("default grid is non-convex");
        assert!(cert.gap > 0.0);
    }

    #[test]
    fn sampled_rollouts_are_covered_by_the_front() {
        let mut r = rng::stream(21, &[]);
        for moves in [MoveSet::Compass, MoveSet::DownRight] {
            let env = DeepSeaTreasure::new(DstConfig { moves, ..DstConfig::default() }).unwrap();
            let front = true_pareto_front(&env, DEFAULT_ENUMERATION_CAP).unwrap();
            let (n, na) = (env.descriptor().num_states, env.descriptor().num_actions);
            for seed in 0..300u64 {
                let theta: Vec<f64> = (0..n * na).map(|_| r.gen_range(-4.0..4.0)).collect();
                let p = Policy::tabular(n, na).with_theta(theta).unwrap();
                let traj = sample_trajectory(&p, &env, 0, &mut rng::stream(seed, &[])).unwrap();
                let v = ObjectiveVector::new(traj.total_reward()).unwrap();
                assert!(front.iter().any(|f| weakly_dominates(f, &v).unwrap()), "{v:?}");
            }
        }
        let bandit_env = bandit(&[&[1.0, 0.0], &[0.0, 1.0], &[0.2, 0.2]]);
        let bf = true_pareto_front(&bandit_env, DEFAULT_ENUMERATION_CAP).unwrap();
        for seed in 0..50u64 {
            let p = Policy::tabular(1, 3);
            let traj = sample_trajectory(&p, &bandit_env, 0, &mut rng::stream(seed, &[])).unwrap();
            let v = ObjectiveVector::new(traj.total_reward()).unwrap();
            assert!(bf.iter().any(|f| weakly_dominates(f, &v).unwrap()));
        }
    }

    #[test]
    fn certificate_on_convex_and_concave_sets() {
        let convex = [ov(&[0.0, 1.0]), ov(&[0.8, 0.8]), ov(&[1.0, 0.0])];
        assert!(nonconvexity_certificate(&convex).unwrap().is_none());
        let concave = [ov(&[0.0, 1.0]), ov(&[0.3, 0.3]), ov(&[1.0, 0.0])];
        let c = nonconvexity_certificate(&concave).unwrap().unwrap();
        assert_eq!(c.point, ov(&[0.3, 0.3]));
        assert!((c.gap - 0.4).abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let env = DeepSeaTreasure::new(DstConfig::default()).unwrap();
        assert!(matches!(true_pareto_front(&env, 10), Err(Error::EnumerationCap(_))));
    }
}
