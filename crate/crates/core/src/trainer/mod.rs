//! Training loops: fixed-weight scalarization, hypervolume-guided reward
//! scaling, and gradient-influence weight optimization.

mod config;
mod loops;
mod metrics;
mod record;

pub use config::{EvalConfig, ParamMask, TrainerConfig, Weighting};
pub use loops::{train, train_fixed, train_gradient_based, train_hypervolume_guided, Trainer};
pub use metrics::{front_summary, lemma_replay_error, steps_to_front, summarize_front, FrontSummary};
pub use record::{checkpoint_path, RunRecord, StepRecord};
