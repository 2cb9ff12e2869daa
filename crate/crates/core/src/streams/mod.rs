//! Data sources: synthetic Gaussian drift streams, CSV ingestion and the
//! schedule that interleaves source and target arrivals.

mod csv_source;
mod schedule;
mod synthetic;

pub use csv_source::{ingest_csv, median, CsvStreamSpec, FilterOp, RowFilter};
pub use schedule::{interleave, write_schedule_csv, InterleavePolicy, ScheduleEntry, StreamSchedule};
pub use synthetic::{
    generate_synthetic, incremental_path, table_dataset, DatasetFamily, DriftType, GaussianConceptSpec, SourceSimilarity,
    SyntheticDataset, SyntheticStreamSpec, SOURCE_CLASS_SIZE,
};

use crate::learners::Example;
use crate::marline::StreamId;

/// A finite labelled stream with ground-truth drift marks (local indices of
/// the first example of each new concept).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledStream {
    pub id: StreamId,
    pub examples: Vec<Example>,
    pub drift_marks: Vec<usize>,
}

impl LabelledStream {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dims(&self) -> Option<usize> {
        self.examples.first().map(Example::dims)
    }
}
