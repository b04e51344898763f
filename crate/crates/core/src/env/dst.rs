use serde::{Deserialize, Serialize};

use super::{check_action, EnvDescriptor, MoEnvironment, ObjectiveInfo, Outcome, Report, REFERENCE_MARGIN};
use crate::error::{Error, Result};
use crate::pareto::ReferencePoint;

/// Grid moves. Moves into walls, blocked cells or off the grid leave the
/// agent in place.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DstAction {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl DstAction {
    pub const ALL: [DstAction; 4] = [DstAction::Up, DstAction::Down, DstAction::Left, DstAction::Right];
}

/// Action set exposed to the agent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveSet {
    /// Up, down, left, right as action indices 0..4.
    #[default]
    Compass,
    /// Down (0) and right (1) only; every episode is a monotone path.
    DownRight,
}

impl MoveSet {
    pub fn actions(self) -> &'static [DstAction] {
        match self {
            MoveSet::Compass => &DstAction::ALL,
            MoveSet::DownRight => &[DstAction::Down, DstAction::Right],
        }
    }

    /// Action index of `action`, if this set exposes it.
    pub fn index_of(self, action: DstAction) -> Option<usize> {
        self.actions().iter().position(|&a| a == action)
    }
}

/// Column `c` holds a treasure worth `treasures[c]` at row `depths[c]`;
/// cells below it are sea floor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DstConfig {
    pub depths: Vec<usize>,
    pub treasures: Vec<f64>,
    pub horizon: usize,
    #[serde(default)]
    pub moves: MoveSet,
}

impl Default for DstConfig {
    fn default() -> Self {
        Self {
            depths: vec![1, 2, 3, 4, 4, 4],
            treasures: vec![1.0, 3.0, 4.5, 6.0, 7.5, 10.0],
            horizon: 12,
            moves: MoveSet::DownRight,
        }
    }
}

/// Deterministic two-objective gridworld.
///
/// Objective 0 is treasure value divided by the largest treasure. Objective 1
/// is `(horizon - steps) / horizon`, paid on reaching a treasure, so an
/// episode that never finds treasure scores 0 on both. Both are reported
/// back in raw units (treasure value, steps taken).
#[derive(Clone, Debug)]
pub struct DeepSeaTreasure {
    config: DstConfig,
    rows: usize,
    cols: usize,
    max_treasure: f64,
    descriptor: EnvDescriptor,
}

impl DeepSeaTreasure {
    pub fn new(config: DstConfig) -> Result<Self> {
        let cols = config.depths.len();
        if cols == 0 {
            return Err(Error::config("grid needs at least one column"));
        }
        if config.treasures.len() != cols {
            return Err(Error::config(format!(
                "{} treasures for {cols} columns",
                config.treasures.len()
            )));
        }
        if config.depths.contains(&0) {
            return Err(Error::config("treasure depths must be >= 1 (row 0 holds the start)"));
        }
        if config.depths.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::config("treasure depths must be non-decreasing left to right"));
        }
        if config.treasures.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::config("treasure values must be finite and positive"));
        }
        if config.horizon == 0 {
            return Err(Error::config("horizon must be >= 1"));
        }
        let rows = config.depths.iter().max().copied().unwrap_or(0) + 1;
        let max_treasure = config.treasures.iter().copied().fold(0.0, f64::max);
        let h = config.horizon as f64;
        let descriptor = EnvDescriptor {
            name: "deep_sea_treasure".into(),
            num_states: rows * cols,
            num_actions: config.moves.actions().len(),
            horizon: config.horizon,
            reward_max: 1.0,
            objectives: vec![
                ObjectiveInfo {
                    name: "treasure".into(),
                    raw_name: Some("treasure_value".into()),
                    report: Report::Affine { scale: max_treasure, offset: 0.0 },
                },
                ObjectiveInfo {
                    name: "time".into(),
                    raw_name: Some("steps".into()),
                    report: Report::Affine { scale: -h, offset: h },
                },
            ],
            default_reference: ReferencePoint::new(vec![-REFERENCE_MARGIN, -REFERENCE_MARGIN])?,
        };
        Ok(Self { config, rows, cols, max_treasure, descriptor })
    }

    pub fn config(&self) -> &DstConfig {
        &self.config
    }

    pub fn cell(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn coords(&self, state: usize) -> (usize, usize) {
        (state / self.cols, state % self.cols)
    }

    fn open(&self, row: usize, col: usize) -> bool {
        row < self.rows && col < self.cols && row <= self.config.depths[col]
    }

    /// Objective vector of reaching column `col`'s treasure after `steps` moves.
    pub fn treasure_objectives(&self, col: usize, steps: usize) -> Vec<f64> {
        let h = self.config.horizon as f64;
        vec![self.config.treasures[col] / self.max_treasure, (h - steps as f64) / h]
    }
}

impl MoEnvironment for DeepSeaTreasure {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn initial_state(&self, _context: usize) -> Result<usize> {
        Ok(0)
    }

    fn outcomes(&self, state: usize, t: usize, action: usize) -> Result<Vec<Outcome>> {
        check_action(&self.descriptor, state, action)?;
        let (row, col) = self.coords(state);
        if !self.open(row, col) || row == self.config.depths[col] {
            return Err(Error::invalid(format!("state {state} is not a live cell")));
        }
        let (nr, nc) = match self.config.moves.actions()[action] {
            DstAction::Up => (row.wrapping_sub(1), col),
            DstAction::Down => (row + 1, col),
            DstAction::Left => (row, col.wrapping_sub(1)),
            DstAction::Right => (row, col + 1),
        };
        let (nr, nc) = if self.open(nr, nc) { (nr, nc) } else { (row, col) };
        let next_state = self.cell(nr, nc);
        let done = nr == self.config.depths[nc];
        let reward = if done { self.treasure_objectives(nc, t + 1) } else { vec![0.0, 0.0] };
        Ok(vec![Outcome { prob: 1.0, next_state, reward, done }])
    }

    fn raw_metric_names(&self) -> Vec<String> {
        vec!["treasure_value".into(), "steps".into()]
    }

    fn raw_metrics(&self, trajectory: &crate::rl::Trajectory) -> Vec<f64> {
        let total = trajectory.total_reward();
        vec![total[0] * self.max_treasure, trajectory.len() as f64]
    }

    fn box_clone(&self) -> Box<dyn MoEnvironment> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::{sample_trajectory, Policy};
    use crate::rng;
    use rand::Rng;

    #[test]
    fn rejects_malformed_grids() {
        let bad = [
            DstConfig { depths: vec![], treasures: vec![], horizon: 5, moves: MoveSet::Compass },
            DstConfig { depths: vec![1, 2], treasures: vec![1.0], horizon: 5, moves: MoveSet::Compass },
            DstConfig { depths: vec![2, 1], treasures: vec![1.0, 2.0], horizon: 5, moves: MoveSet::Compass },
            DstConfig { depths: vec![0, 1], treasures: vec![1.0, 2.0], horizon: 5, moves: MoveSet::Compass },
            DstConfig { depths: vec![1, 2], treasures: vec![1.0, -2.0], horizon: 5, moves: MoveSet::Compass },
            DstConfig { depths: vec![1, 2], treasures: vec![1.0, 2.0], horizon: 0, moves: MoveSet::Compass },
        ];
        for c in bad {
            assert!(DeepSeaTreasure::new(c.clone()).is_err(), "{c:?}");
        }
    }

    #[test]
    fn moving_down_reaches_nearest_treasure() {
        let env = DeepSeaTreasure::new(DstConfig::default()).unwrap();
        let down = env.config().moves.index_of(DstAction::Down).unwrap();
        let o = env.outcomes(0, 0, down).unwrap();
        assert_eq!(o.len(), 1);
        assert!(o[0].done);
        assert_eq!(o[0].reward, env.treasure_objectives(0, 1));
        let h = env.config().horizon as f64;
        assert_eq!(o[0].reward, vec![0.1, (h - 1.0) / h]);
    }

    #[test]
    fn walls_leave_agent_in_place() {
        let env = DeepSeaTreasure::new(DstConfig { moves: MoveSet::Compass, ..DstConfig::default() }).unwrap();
        for a in [DstAction::Up, DstAction::Left] {
            let o = env.outcomes(0, 0, a as usize).unwrap();
            assert_eq!(o[0].next_state, 0);
            assert!(!o[0].done);
        }
        // A depth jump exposes sea floor: (2,1) has blocked cell (2,0) to its left.
        let env = DeepSeaTreasure::new(DstConfig { depths: vec![1, 3], treasures: vec![1.0, 2.0], horizon: 6, moves: MoveSet::Compass }).unwrap();
        let s = env.cell(2, 1);
        assert_eq!(env.outcomes(s, 0, DstAction::Left as usize).unwrap()[0].next_state, s);
    }

    #[test]
    fn down_right_paths_are_monotone() {
        let env = DeepSeaTreasure::new(DstConfig::default()).unwrap();
        assert_eq!(env.descriptor().num_actions, 2);
        // Right along row 0 to column 3, then down to its treasure at depth 4.
        let mut s = 0;
        let mut t = 0;
        for _ in 0..3 {
            let o = env.outcomes(s, t, 1).unwrap();
            assert!(!o[0].done);
            s = o[0].next_state;
            t += 1;
        }
        assert_eq!(env.coords(s), (0, 3));
        let mut last = None;
        for _ in 0..4 {
            let o = env.outcomes(s, t, 0).unwrap();
            s = o[0].next_state;
            t += 1;
            last = Some(o[0].clone());
        }
        let last = last.unwrap();
        assert!(last.done);
        assert_eq!(last.reward, env.treasure_objectives(3, 7));
        // Right at the last column is a wall.
        let edge = env.cell(0, 5);
        assert_eq!(env.outcomes(edge, 0, 1).unwrap()[0].next_state, edge);
    }

    #[test]
    fn report_transform_recovers_raw_units() {
        let env = DeepSeaTreasure::new(DstConfig::default()).unwrap();
        let d = env.descriptor();
        let obj = env.treasure_objectives(4, 8);
        assert!((d.objectives[0].report.apply(obj[0]) - 7.5).abs() < 1e-12);
        assert!((d.objectives[1].report.apply(obj[1]) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn rewards_bounded_under_random_play() {
        let mut r = rng::stream(11, &[]);
        for moves in [MoveSet::Compass, MoveSet::DownRight] {
            let env = DeepSeaTreasure::new(DstConfig { moves, ..DstConfig::default() }).unwrap();
            let (ns, na) = (env.descriptor().num_states, env.descriptor().num_actions);
            for seed in 0..500u64 {
                let theta: Vec<f64> = (0..ns * na).map(|_| r.gen_range(-3.0..3.0)).collect();
                let policy = Policy::tabular(ns, na).with_theta(theta).unwrap();
                let traj = sample_trajectory(&policy, &env, 0, &mut rng::stream(seed, &[])).unwrap();
                assert!(traj.len() <= env.descriptor().horizon);
                for step in &traj.steps {
                    assert!(step.reward.iter().all(|&x| (0.0..=1.0).contains(&x)));
                }
            }
        }
    }
}
