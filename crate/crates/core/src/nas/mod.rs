//! Constrained width × depth architecture search.

mod filter;
mod io;
mod score;
mod space;
mod training;

pub use filter::{filter_candidates, BudgetCheck, Budgets, FilterCounts};
pub use io::{read_candidates_jsonl, read_rows, write_candidates_jsonl, write_rows, CandidateRow, SpaceConfig, ROW_HEADER};
pub use score::{rank, score_all, NormBounds, ScoredCandidate};
pub use space::{Candidate, Layout, SearchSpace, DEFAULT_WIDTHS};
pub use training::{
    evaluator_from_spec, run_training_loop, train_candidate, CommandEvaluator, Evaluator, EvaluatorFailure,
    SyntheticEvaluator, TrainOutcome, TrainingConfig, Verdict,
};

use crate::archspec::ArchError;

#[derive(Debug, thiserror::Error)]
pub enum NasError {
    #[error("search space: {0}")]
    Config(String),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error("degenerate normalization bounds: {0}")]
    DegenerateBounds(String),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
}

impl From<crate::archspec::ShapeError> for NasError {
    fn from(e: crate::archspec::ShapeError) -> Self {
        Self::Arch(e.into())
    }
}
