use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::learner::Approach;
use super::protocol::{mean, prequential, sample_std, score_stream, sliding_window, window_size, PrequentialTrace};
use crate::error::{Error, Result};
use crate::marline::{MarlineConfig, StreamId};
use crate::rng;
use crate::streams::{
    ingest_csv, interleave, table_dataset, CsvStreamSpec, DatasetFamily, InterleavePolicy, LabelledStream, SourceSimilarity,
    StreamSchedule, SOURCE_CLASS_SIZE,
};

const DATA_SALT: u64 = 0xda7a;
const LEARNER_SALT: u64 = 0x1ea2;

fn default_source_class_size() -> usize {
    SOURCE_CLASS_SIZE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// One of the artificial benchmark datasets, regenerated per run.
    Synthetic {
        family: DatasetFamily,
        similarity: SourceSimilarity,
        class_size: usize,
        #[serde(default = "default_source_class_size")]
        source_class_size: usize,
    },
    /// Streams read from CSV files; identical in every run. Target is
    /// stream 0, sources 1.. in order.
    Csv {
        target: CsvStreamSpec,
        #[serde(default)]
        sources: Vec<CsvStreamSpec>,
    },
}

impl DatasetSpec {
    pub fn materialize(&self, seed: u64) -> Result<(LabelledStream, Vec<LabelledStream>)> {
        match self {
            DatasetSpec::Synthetic {
                family,
                similarity,
                class_size,
                source_class_size,
            } => table_dataset(*family, *similarity, *class_size, *source_class_size, seed).generate(),
            DatasetSpec::Csv { target, sources } => {
                let t = ingest_csv(StreamId(0), target)?;
                let s = sources
                    .iter()
                    .enumerate()
                    .map(|(i, spec)| ingest_csv(StreamId(i as u32 + 1), spec))
                    .collect::<Result<Vec<_>>>()?;
                Ok((t, s))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    /// Objective is the mean of per-segment prequential accuracies.
    #[default]
    PrequentialReset,
    /// Objective is the mean of the sliding-window series.
    SlidingWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub approach: Approach,
    pub config: MarlineConfig,
    pub dataset: DatasetSpec,
    pub interleave: InterleavePolicy,
    pub runs: usize,
    pub seed_base: u64,
    pub evaluation: Evaluation,
    /// Window length as a share of the target stream. The windowed series is
    /// always reported; it drives the objective only under
    /// [`Evaluation::SlidingWindow`].
    pub window_fraction: f64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("runs must be at least 1"));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::config("window_fraction must lie in (0, 1]"));
        }
        self.config.validate()
    }

    /// Seed of run `r`; data and learner randomness are derived from it
    /// independently.
    pub fn run_seed(&self, r: usize) -> u64 {
        self.seed_base.wrapping_add(r as u64)
    }

    /// Target and source streams of run `r`.
    pub fn streams(&self, r: usize) -> Result<(LabelledStream, Vec<LabelledStream>)> {
        self.dataset.materialize(rng::mix(self.run_seed(r), DATA_SALT))
    }

    /// The schedule of run `r` as the approach sees it.
    pub fn schedule(&self, r: usize) -> Result<StreamSchedule> {
        let (target, sources) = self.streams(r)?;
        let schedule = interleave(&target, &sources, self.interleave)?;
        Ok(if self.approach.uses_sources() {
            schedule
        } else {
            schedule.target_only()
        })
    }

    pub fn run_one(&self, r: usize) -> Result<RunTrace> {
        let schedule = self.schedule(r)?;
        let dims = schedule
            .entries
            .first()
            .map(|e| e.example.dims())
            .ok_or_else(|| Error::config("dataset produced no examples"))?;
        let window = window_size(self.window_fraction, schedule.target_len())?;
        let seed = self.run_seed(r);
        let mut learner = self
            .approach
            .build(&self.config, dims, schedule.target, rng::mix(seed, LEARNER_SALT))?;
        let scored = score_stream(&mut learner, &schedule)?;
        let ratio = scored.source_weight_ratio.iter().copied().collect::<Option<Vec<f64>>>();
        Ok(RunTrace {
            run: r,
            seed,
            prequential: prequential(&scored.correct, &scored.drift_mark, true),
            window: sliding_window(&scored.correct, window),
            source_weight_ratio: ratio,
            correct: scored.correct,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub run: usize,
    pub seed: u64,
    pub prequential: PrequentialTrace,
    pub window: Vec<f64>,
    pub source_weight_ratio: Option<Vec<f64>>,
    pub correct: Vec<bool>,
}

impl RunTrace {
    pub fn objective(&self, evaluation: Evaluation) -> f64 {
        match evaluation {
            Evaluation::PrequentialReset => self.prequential.mean_segment_accuracy(),
            Evaluation::SlidingWindow => mean(&self.window),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    fn of(xs: &[f64]) -> Self {
        MeanStd {
            mean: mean(xs),
            std: sample_std(xs),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub evaluation: Evaluation,
    /// Ordered by run index.
    pub runs: Vec<RunTrace>,
    pub running: Vec<MeanStd>,
    pub window: Vec<MeanStd>,
    pub source_weight_ratio: Option<Vec<MeanStd>>,
    pub segment_accuracy: Vec<MeanStd>,
    pub objective: f64,
}

fn per_step(runs: &[RunTrace], series: impl Fn(&RunTrace) -> &[f64]) -> Vec<MeanStd> {
    let len = series(&runs[0]).len();
    (0..len)
        .map(|t| MeanStd::of(&runs.iter().map(|r| series(r)[t]).collect::<Vec<_>>()))
        .collect()
}

pub(crate) fn aggregate(evaluation: Evaluation, runs: Vec<RunTrace>) -> Result<ExperimentResult> {
    let first = &runs[0];
    for r in &runs {
        if r.correct.len() != first.correct.len() || r.prequential.segment_accuracy.len() != first.prequential.segment_accuracy.len() {
            return Err(Error::Invariant(format!(
                "run {} has a different shape from run {}",
                r.run, first.run
            )));
        }
    }
    let segments = first.prequential.segment_accuracy.len();
    let segment_accuracy = (0..segments)
        .map(|s| MeanStd::of(&runs.iter().map(|r| r.prequential.segment_accuracy[s]).collect::<Vec<_>>()))
        .collect();
    let source_weight_ratio = runs
        .iter()
        .all(|r| r.source_weight_ratio.is_some())
        .then(|| per_step(&runs, |r| r.source_weight_ratio.as_deref().expect("checked above")));
    let objective = mean(&runs.iter().map(|r| r.objective(evaluation)).collect::<Vec<_>>());
    Ok(ExperimentResult {
        evaluation,
        running: per_step(&runs, |r| &r.prequential.per_step),
        window: per_step(&runs, |r| &r.window),
        source_weight_ratio,
        segment_accuracy,
        objective,
        runs,
    })
}

/// Executes every run. `parallelism` is the worker count (`None` uses the
/// global pool); results do not depend on it.
pub fn run_experiment(spec: &ExperimentSpec, parallelism: Option<usize>) -> Result<ExperimentResult> {
    spec.validate()?;
    let work = || (0..spec.runs).into_par_iter().map(|r| spec.run_one(r)).collect::<Result<Vec<_>>>();
    let runs = match parallelism {
        None => work()?,
        Some(0) => return Err(Error::config("parallelism must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?
            .install(work)?,
    };
    aggregate(spec.evaluation, runs)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// `run,t,segment,accuracy_running,accuracy_window,source_weight_ratio`, one
/// row per run and target step. The ratio is empty for baselines.
pub fn write_results_csv<W: Write>(result: &ExperimentResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "run,t,segment,accuracy_running,accuracy_window,source_weight_ratio")?;
    for run in &result.runs {
        let p = &run.prequential;
        for t in 0..p.per_step.len() {
            let ratio = run.source_weight_ratio.as_ref().map(|r| r[t]);
            writeln!(
                out,
                "{},{t},{},{},{},{}",
                run.run,
                p.segment[t],
                p.per_step[t],
                run.window[t],
                opt(ratio)
            )?;
        }
    }
    out.flush()
}

/// Mean and standard deviation across runs at every target step.
pub fn write_summary_csv<W: Write>(result: &ExperimentResult, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "t,segment,accuracy_running_mean,accuracy_running_std,accuracy_window_mean,accuracy_window_std,source_weight_ratio_mean,source_weight_ratio_std"
    )?;
    let segment = &result.runs[0].prequential.segment;
    for t in 0..result.running.len() {
        let ratio = result.source_weight_ratio.as_ref().map(|r| r[t]);
        writeln!(
            out,
            "{t},{},{},{},{},{},{},{}",
            segment[t],
            result.running[t].mean,
            result.running[t].std,
            result.window[t].mean,
            result.window[t].std,
            opt(ratio.map(|r| r.mean)),
            opt(ratio.map(|r| r.std))
        )?;
    }
    out.flush()
}

/// Final accuracy of each segment, mean and standard deviation across runs.
pub fn write_segments_csv<W: Write>(result: &ExperimentResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "segment,accuracy_mean,accuracy_std")?;
    for (s, m) in result.segment_accuracy.iter().enumerate() {
        writeln!(out, "{s},{},{}", m.mean, m.std)?;
    }
    out.flush()
}
