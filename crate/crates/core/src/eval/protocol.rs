use crate::error::{Error, Result};
use crate::learners::{Example, Label};
use crate::marline::StreamId;
use crate::streams::StreamSchedule;

/// Anything that can be scored on a schedule: predict on target examples,
/// learn from every example.
pub trait StreamLearner {
    fn predict(&mut self, features: &[f64]) -> Result<Label>;
    fn observe(&mut self, stream: StreamId, ex: &Example) -> Result<()>;

    /// Vote share held outside the current target concept, if the learner
    /// has such a notion.
    fn source_weight_ratio(&self) -> Option<f64> {
        None
    }
}

impl<L: StreamLearner + ?Sized> StreamLearner for Box<L> {
    fn predict(&mut self, features: &[f64]) -> Result<Label> {
        (**self).predict(features)
    }

    fn observe(&mut self, stream: StreamId, ex: &Example) -> Result<()> {
        (**self).observe(stream, ex)
    }

    fn source_weight_ratio(&self) -> Option<f64> {
        (**self).source_weight_ratio()
    }
}

/// Per-target-step record of one pass over a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredStream {
    pub correct: Vec<bool>,
    /// True where the target example is the first of a new concept.
    pub drift_mark: Vec<bool>,
    /// Ratio after learning from the step's example.
    pub source_weight_ratio: Vec<Option<f64>>,
}

/// Runs `learner` over `schedule` test-then-train. Entries after the last
/// target example are never delivered.
pub fn score_stream<L: StreamLearner + ?Sized>(learner: &mut L, schedule: &StreamSchedule) -> Result<ScoredStream> {
    let Some(last) = schedule.entries.iter().rposition(|e| e.stream == schedule.target) else {
        return Err(Error::config("schedule contains no target examples"));
    };
    let marks = schedule.target_marks();
    let n = schedule.target_len();
    let mut out = ScoredStream {
        correct: Vec::with_capacity(n),
        drift_mark: Vec::with_capacity(n),
        source_weight_ratio: Vec::with_capacity(n),
    };
    for (g, entry) in schedule.entries[..=last].iter().enumerate() {
        if entry.stream == schedule.target {
            let predicted = learner.predict(&entry.example.features)?;
            out.correct.push(predicted == entry.example.label);
            out.drift_mark.push(marks.contains(&g));
            learner.observe(entry.stream, &entry.example)?;
            out.source_weight_ratio.push(learner.source_weight_ratio());
        } else {
            learner.observe(entry.stream, &entry.example)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrequentialTrace {
    /// Running accuracy of the current segment after each target step.
    pub per_step: Vec<f64>,
    /// Segment index of each target step.
    pub segment: Vec<usize>,
    /// Target steps at which the counters were zeroed.
    pub reset_points: Vec<usize>,
    /// Final running accuracy of every segment.
    pub segment_accuracy: Vec<f64>,
}

impl PrequentialTrace {
    /// Equal-weight mean of the segment accuracies.
    pub fn mean_segment_accuracy(&self) -> f64 {
        mean(&self.segment_accuracy)
    }
}

/// Running accuracy over `correct`, zeroing counters before each step with
/// `reset[t]` set (when `reset_at_drifts`). A reset at step 0 is a no-op.
pub fn prequential(correct: &[bool], reset: &[bool], reset_at_drifts: bool) -> PrequentialTrace {
    assert_eq!(correct.len(), reset.len(), "one reset flag per step");
    let mut trace = PrequentialTrace {
        per_step: Vec::with_capacity(correct.len()),
        segment: Vec::with_capacity(correct.len()),
        reset_points: Vec::new(),
        segment_accuracy: Vec::new(),
    };
    let (mut hits, mut seen) = (0u64, 0u64);
    let mut segment = 0;
    for (t, (&c, &r)) in correct.iter().zip(reset).enumerate() {
        if reset_at_drifts && r && t > 0 {
            trace.segment_accuracy.push(hits as f64 / seen as f64);
            trace.reset_points.push(t);
            hits = 0;
            seen = 0;
            segment += 1;
        }
        seen += 1;
        hits += u64::from(c);
        trace.per_step.push(hits as f64 / seen as f64);
        trace.segment.push(segment);
    }
    if seen > 0 {
        trace.segment_accuracy.push(hits as f64 / seen as f64);
    }
    trace
}

/// Mean correctness over the last `min(t, window)` steps, at every step.
pub fn sliding_window(correct: &[bool], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must hold at least one example");
    let mut out = Vec::with_capacity(correct.len());
    let mut hits = 0u64;
    for (t, &c) in correct.iter().enumerate() {
        hits += u64::from(c);
        if t >= window {
            hits -= u64::from(correct[t - window]);
        }
        out.push(hits as f64 / (t + 1).min(window) as f64);
    }
    out
}

/// `ceil(fraction * target_len)`.
pub fn window_size(fraction: f64, target_len: usize) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::config("window_fraction must lie in (0, 1]"));
    }
    let w = (fraction * target_len as f64).ceil() as usize;
    if w == 0 {
        return Err(Error::config("sliding window would be empty"));
    }
    Ok(w)
}

pub fn run_prequential<L: StreamLearner + ?Sized>(
    learner: &mut L,
    schedule: &StreamSchedule,
    reset_at_drifts: bool,
) -> Result<PrequentialTrace> {
    let scored = score_stream(learner, schedule)?;
    Ok(prequential(&scored.correct, &scored.drift_mark, reset_at_drifts))
}

pub fn run_sliding_window<L: StreamLearner + ?Sized>(
    learner: &mut L,
    schedule: &StreamSchedule,
    window_fraction: f64,
) -> Result<Vec<f64>> {
    let window = window_size(window_fraction, schedule.target_len())?;
    let scored = score_stream(learner, schedule)?;
    Ok(sliding_window(&scored.correct, window))
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub(crate) fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}
