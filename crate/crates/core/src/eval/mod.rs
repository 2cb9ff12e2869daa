//! Prequential evaluation, the multi-run experiment runner and grid search.

mod experiment;
mod grid;
mod learner;
mod protocol;

pub use experiment::{
    run_experiment, write_results_csv, write_segments_csv, write_summary_csv, DatasetSpec, Evaluation, ExperimentResult,
    ExperimentSpec, MeanStd, RunTrace,
};
pub use grid::{grid_search, write_grid_csv, GridPoint, GridResult, GridSpec};
pub use learner::{Approach, BaselineLearner, MarlineLearner};
pub use protocol::{
    prequential, run_prequential, run_sliding_window, score_stream, sliding_window, window_size, PrequentialTrace,
    ScoredStream, StreamLearner,
};
