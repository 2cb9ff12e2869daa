//! The multi-source transfer model.
//!
//! Every stream (sources and the target) owns a pool of base ensembles, one
//! per concept its drift detector has identified. Target examples are
//! projected into every concept's geometry, and each sub-classifier of each
//! concept votes on its projection with a weight earned from recent target
//! performance.

mod snapshot;
mod weighting;

pub use snapshot::Snapshot;
pub use weighting::{sub_classifier_weights, update_stats, weighted_scores, SubClassifierStats, VoteAccumulator};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::drift::{DetectorKind, DriftDetector, DriftStatus, HddmA};
use crate::error::{Error, Result};
use crate::learners::{BaseEnsemble, EnsembleKind, Example, HoeffdingTreeParams, Label, LabelDistribution, PoissonDraw};
use crate::mapping::{AlignMap, CentroidTracker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StreamId(pub u32);

impl fmt::Display for StreamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarlineConfig {
    /// Sub-classifiers per base ensemble.
    pub ensemble_size: usize,
    /// Forgetting factor for centroids and performance accumulators.
    pub theta: f64,
    /// Performance index: sub-classifiers with alpha <= sigma get no vote.
    pub sigma: f64,
    pub ensemble_kind: EnsembleKind,
    pub detector: DetectorKind,
    pub hddm_drift_confidence: f64,
    pub hddm_warning_confidence: f64,
    /// Lower clamp for SC and SW in the weight update.
    pub eps_clamp: f64,
    pub tree: HoeffdingTreeParams,
}

impl Default for MarlineConfig {
    fn default() -> Self {
        MarlineConfig {
            ensemble_size: 10,
            theta: 0.9,
            sigma: 0.4,
            ensemble_kind: EnsembleKind::OnlineBagging,
            detector: DetectorKind::HddmA,
            hddm_drift_confidence: HddmA::DEFAULT_DRIFT_CONFIDENCE,
            hddm_warning_confidence: HddmA::DEFAULT_WARNING_CONFIDENCE,
            eps_clamp: 1e-10,
            tree: HoeffdingTreeParams::default(),
        }
    }
}

impl MarlineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble_size < 1 {
            return Err(Error::config("ensemble_size must be at least 1"));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::config("theta must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.sigma) {
            return Err(Error::config("sigma must lie in [0, 1]"));
        }
        if !(self.eps_clamp > 0.0) {
            return Err(Error::config("eps_clamp must be positive"));
        }
        for (name, c) in [
            ("hddm_drift_confidence", self.hddm_drift_confidence),
            ("hddm_warning_confidence", self.hddm_warning_confidence),
        ] {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::config(format!("{name} must lie in (0, 1)")));
            }
        }
        self.tree.validate()
    }

    pub fn new_detector(&self) -> DriftDetector {
        match self.detector {
            DetectorKind::Ddm => DriftDetector::new(DetectorKind::Ddm),
            DetectorKind::HddmA => DriftDetector::hddm_a(self.hddm_drift_confidence, self.hddm_warning_confidence),
        }
    }

    pub fn new_ensemble(&self, dims: usize) -> BaseEnsemble {
        BaseEnsemble::new(self.ensemble_kind, self.ensemble_size, dims, self.tree)
    }
}

/// One concept of one stream: its ensemble, its centroids and the
/// performance stats of its sub-classifiers on the current target concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub ensemble: BaseEnsemble,
    pub tracker: CentroidTracker,
    pub stats: Vec<SubClassifierStats>,
}

impl Concept {
    fn fresh(config: &MarlineConfig, dims: usize) -> Self {
        Concept {
            ensemble: config.new_ensemble(dims),
            tracker: CentroidTracker::new(dims, config.theta),
            stats: vec![SubClassifierStats::default(); config.ensemble_size],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptPool {
    stream: StreamId,
    concepts: Vec<Concept>,
    detector: DriftDetector,
    observed: u64,
}

impl ConceptPool {
    fn new(stream: StreamId, config: &MarlineConfig, dims: usize) -> Self {
        ConceptPool {
            stream,
            concepts: vec![Concept::fresh(config, dims)],
            detector: config.new_detector(),
            observed: 0,
        }
    }

    pub fn stream(&self) -> StreamId {
        self.stream
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn current(&self) -> &Concept {
        self.concepts.last().expect("pool always holds a concept")
    }

    fn current_mut(&mut self) -> &mut Concept {
        self.concepts.last_mut().expect("pool always holds a concept")
    }

    pub fn detector(&self) -> &DriftDetector {
        &self.detector
    }

    /// Examples received from this pool's stream.
    pub fn observed(&self) -> u64 {
        self.observed
    }
}

/// What one call to [`MarlineModel::observe`] did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObserveOutcome {
    pub registered: bool,
    pub drift: bool,
    pub weights_updated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionPath {
    /// Weighted vote over all sub-classifiers.
    Weighted,
    /// Unweighted vote of the current target ensemble.
    Fallback,
    /// No target example has arrived yet.
    ColdStart,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    /// `[score(Neg), score(Pos)]`.
    pub scores: [f64; 2],
    pub path: PredictionPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarlineModel {
    config: MarlineConfig,
    dims: usize,
    target: StreamId,
    pools: BTreeMap<StreamId, ConceptPool>,
}

impl MarlineModel {
    pub fn new(config: MarlineConfig, dims: usize, target: StreamId) -> Result<Self> {
        config.validate()?;
        if dims == 0 {
            return Err(Error::config("feature dimensionality must be positive"));
        }
        Ok(MarlineModel {
            config,
            dims,
            target,
            pools: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &MarlineConfig {
        &self.config
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn target(&self) -> StreamId {
        self.target
    }

    pub fn pool(&self, stream: StreamId) -> Option<&ConceptPool> {
        self.pools.get(&stream)
    }

    pub fn pools(&self) -> impl Iterator<Item = &ConceptPool> {
        self.pools.values()
    }

    pub fn is_registered(&self, stream: StreamId) -> bool {
        self.pools.contains_key(&stream)
    }

    /// Total number of concepts across all pools.
    pub fn concept_count(&self) -> usize {
        self.pools.values().map(|p| p.concepts.len()).sum()
    }

    pub fn sub_classifier_count(&self) -> usize {
        self.concept_count() * self.config.ensemble_size
    }

    /// All stats in canonical order: pools by stream id, then concepts, then
    /// ensemble members.
    pub fn stats(&self) -> impl Iterator<Item = &SubClassifierStats> {
        self.pools
            .values()
            .flat_map(|p| p.concepts.iter())
            .flat_map(|c| c.stats.iter())
    }

    fn stats_mut(&mut self) -> Vec<&mut SubClassifierStats> {
        self.pools
            .values_mut()
            .flat_map(|p| p.concepts.iter_mut())
            .flat_map(|c| c.stats.iter_mut())
            .collect()
    }

    fn reset_all_stats(&mut self) {
        for s in self.stats_mut() {
            s.reset();
        }
    }

    /// One step of the learning procedure for an example from `stream`.
    pub fn observe<P: PoissonDraw + ?Sized>(&mut self, stream: StreamId, ex: &Example, draw: &mut P) -> Result<ObserveOutcome> {
        Error::check_dims(self.dims, ex.dims())?;
        let mut outcome = ObserveOutcome {
            registered: false,
            drift: false,
            weights_updated: false,
        };
        if !self.pools.contains_key(&stream) {
            self.pools.insert(stream, ConceptPool::new(stream, &self.config, self.dims));
            outcome.registered = true;
        }
        let pool = self.pools.get_mut(&stream).expect("registered above");
        pool.observed += 1;

        // Test-then-train: the detector sees the latest ensemble's verdict
        // on the example before anything learns from it.
        let correct = pool.current().ensemble.predict_unchecked(&ex.features).predicted() == ex.label;
        if pool.detector.update(correct) == DriftStatus::Drift {
            pool.concepts.push(Concept::fresh(&self.config, self.dims));
            pool.detector.reset();
            outcome.drift = true;
            if stream == self.target {
                self.reset_all_stats();
            }
        }

        let pool = self.pools.get_mut(&stream).expect("registered above");
        let concept = pool.current_mut();
        concept.ensemble.train(ex, draw)?;
        concept.tracker.update(ex)?;

        if stream == self.target {
            outcome.weights_updated = self.update_weights(ex)?;
        }
        Ok(outcome)
    }

    /// Projections of `features` onto every concept, in canonical order.
    /// The current target concept, concepts missing a class, and degenerate
    /// geometry all get the raw features.
    fn projections(&self, features: &[f64]) -> Vec<Vec<f64>> {
        let target_concept = self.pools.get(&self.target).map(ConceptPool::current);
        let target_geom = target_concept.and_then(|c| {
            let v = c.tracker.concept_vector()?;
            let pos = c.tracker.centroid(Label::Pos)?;
            Some((v, pos))
        });
        let mut out = Vec::with_capacity(self.concept_count());
        for pool in self.pools.values() {
            let last = pool.concepts.len() - 1;
            for (j, concept) in pool.concepts.iter().enumerate() {
                let is_current_target = pool.stream == self.target && j == last;
                let projected = match (&target_geom, is_current_target) {
                    (Some((v_tgt, c_tgt_pos)), false) => concept
                        .tracker
                        .concept_vector()
                        .zip(concept.tracker.centroid(Label::Pos))
                        .and_then(|(v_src, c_src_pos)| {
                            let map = AlignMap::build(&v_src, v_tgt).ok()?;
                            map.project(features, c_tgt_pos, &c_src_pos).ok()
                        }),
                    _ => None,
                };
                out.push(projected.unwrap_or_else(|| features.to_vec()));
            }
        }
        out
    }

    /// Every sub-classifier's distribution on its concept's projection, in
    /// canonical order.
    pub fn member_distributions(&self, features: &[f64]) -> Result<Vec<LabelDistribution>> {
        Error::check_dims(self.dims, features.len())?;
        let projections = self.projections(features);
        let mut dists = Vec::with_capacity(self.sub_classifier_count());
        let concepts = self.pools.values().flat_map(|p| p.concepts.iter());
        for (concept, x) in concepts.zip(&projections) {
            dists.extend(concept.ensemble.member_predictions(x));
        }
        Ok(dists)
    }

    fn target_ready(&self) -> bool {
        self.pools
            .get(&self.target)
            .is_some_and(|p| p.current().tracker.has_both_classes())
    }

    /// Updates every sub-classifier's performance on one target example.
    /// Returns `false` (and leaves stats alone) while the current target
    /// concept has not yet seen both classes.
    pub fn update_weights(&mut self, target_ex: &Example) -> Result<bool> {
        Error::check_dims(self.dims, target_ex.dims())?;
        if !self.target_ready() {
            return Ok(false);
        }
        let p_correct: Vec<f64> = self
            .member_distributions(&target_ex.features)?
            .iter()
            .map(|d| d.prob(target_ex.label))
            .collect();
        let (theta, eps) = (self.config.theta, self.config.eps_clamp);
        let mut stats = self.stats_mut();
        update_stats(&mut stats, &p_correct, theta, eps);
        Ok(true)
    }

    /// Current vote weight of every sub-classifier, in canonical order.
    pub fn weights(&self) -> Vec<f64> {
        sub_classifier_weights(self.stats().map(|s| s.alpha), self.config.sigma)
    }

    pub fn predict(&self, features: &[f64]) -> Result<Prediction> {
        Error::check_dims(self.dims, features.len())?;
        let Some(target_pool) = self.pools.get(&self.target) else {
            return Ok(Prediction {
                label: Label::Neg,
                scores: [0.5, 0.5],
                path: PredictionPath::ColdStart,
            });
        };
        if self.target_ready() {
            let weights = self.weights();
            if weights.iter().any(|&w| w > 0.0) {
                let dists = self.member_distributions(features)?;
                let scores = weighted_scores(&weights, &dists);
                if scores[0] != scores[1] {
                    let label = if scores[1] > scores[0] { Label::Pos } else { Label::Neg };
                    return Ok(Prediction {
                        label,
                        scores,
                        path: PredictionPath::Weighted,
                    });
                }
            }
        }
        let d = target_pool.current().ensemble.predict_unchecked(features);
        Ok(Prediction {
            label: d.predicted(),
            scores: [d.prob_neg(), d.prob_pos()],
            path: PredictionPath::Fallback,
        })
    }

    /// Share of the vote held by sub-classifiers outside the current target
    /// concept (sources and past target concepts).
    pub fn source_weight_ratio(&self) -> f64 {
        let weights = self.weights();
        let k = self.config.ensemble_size;
        let mut offset = 0;
        let mut ratio = 0.0;
        for pool in self.pools.values() {
            let n = pool.concepts.len() * k;
            let own = if pool.stream == self.target { n - k } else { n };
            ratio += weights[offset..offset + own].iter().sum::<f64>();
            offset += n;
        }
        ratio
    }

    /// Overwrites the stats of every sub-classifier, in canonical order.
    pub fn set_stats(&mut self, stats: &[SubClassifierStats]) -> Result<()> {
        let mut slots = self.stats_mut();
        if slots.len() != stats.len() {
            return Err(Error::config(format!(
                "expected {} stats entries, got {}",
                slots.len(),
                stats.len()
            )));
        }
        for (slot, s) in slots.iter_mut().zip(stats) {
            **slot = *s;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
