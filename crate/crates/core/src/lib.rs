//! Multi-objective policy-gradient training with dynamic reward weighting.
//!
//! The crate is organised bottom-up:
//!
//! * [`pareto`]: dominance, exact hypervolume, hypervolume contribution and the
//!   non-dominated archive used as a performance buffer.
//! * [`weighting`]: meta-reward, scalarization, gradient influence and the
//!   exponentiated (entropic mirror descent) weight update with its closed form.
//! * [`rl`]: tabular / linear softmax policies, trajectories, REINFORCE, RLOO and
//!   GRPO estimators, and exact enumeration oracles.
//! * [`env`]: small environments with enumerable Pareto fronts.
//! * [`trainer`]: fixed-weight, hypervolume-guided and gradient-based training
//!   loops plus run bookkeeping.
//!
//! Data-parallel inner loops (Monte Carlo sampling, rollout groups, evaluation
//! episodes) go through [`exec::Execution`]; with the `parallel` feature they run on
//! rayon, otherwise sequentially. Results are bit-identical either way.

pub mod env;
pub mod error;
pub mod exec;
pub mod pareto;
pub mod rl;
pub mod rng;
pub mod trainer;
pub mod weighting;

pub use error::{Error, Result};
pub use exec::Execution;
