use serde::{Deserialize, Serialize};

use super::protocol::StreamLearner;
use crate::drift::{DriftDetector, DriftStatus};
use crate::error::Result;
use crate::learners::{BaseEnsemble, Example, Label};
use crate::marline::{MarlineConfig, MarlineModel, StreamId};
use crate::rng::{self, StdRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    MarlineWithSource,
    /// The full model fed only the target stream; old target concepts still
    /// act as sources.
    MarlineNoSource,
    /// A single base ensemble trained on the target, never reset.
    BaseEnsemblePlain,
    /// A base ensemble that is replaced by a fresh one on every drift alarm.
    BaseEnsembleWithDetectorReset,
}

impl Approach {
    pub fn uses_sources(self) -> bool {
        self == Approach::MarlineWithSource
    }

    pub fn is_marline(self) -> bool {
        matches!(self, Approach::MarlineWithSource | Approach::MarlineNoSource)
    }

    pub fn build(self, config: &MarlineConfig, dims: usize, target: StreamId, seed: u64) -> Result<Box<dyn StreamLearner + Send>> {
        Ok(match self {
            Approach::MarlineWithSource | Approach::MarlineNoSource => {
                Box::new(MarlineLearner::new(config.clone(), dims, target, seed)?)
            }
            Approach::BaseEnsemblePlain => Box::new(BaselineLearner::new(config, dims, target, false, seed)?),
            Approach::BaseEnsembleWithDetectorReset => Box::new(BaselineLearner::new(config, dims, target, true, seed)?),
        })
    }
}

pub struct MarlineLearner {
    pub model: MarlineModel,
    rng: StdRng,
}

impl MarlineLearner {
    pub fn new(config: MarlineConfig, dims: usize, target: StreamId, seed: u64) -> Result<Self> {
        Ok(MarlineLearner {
            model: MarlineModel::new(config, dims, target)?,
            rng: rng::seeded(seed),
        })
    }
}

impl StreamLearner for MarlineLearner {
    fn predict(&mut self, features: &[f64]) -> Result<Label> {
        Ok(self.model.predict(features)?.label)
    }

    fn observe(&mut self, stream: StreamId, ex: &Example) -> Result<()> {
        self.model.observe(stream, ex, &mut self.rng).map(|_| ())
    }

    fn source_weight_ratio(&self) -> Option<f64> {
        Some(self.model.source_weight_ratio())
    }
}

/// Online bagging or boosting on the target alone, optionally with a drift
/// detector that swaps in a fresh ensemble on alarm.
pub struct BaselineLearner {
    config: MarlineConfig,
    target: StreamId,
    pub ensemble: BaseEnsemble,
    pub detector: Option<DriftDetector>,
    pub resets: usize,
    rng: StdRng,
}

impl BaselineLearner {
    pub fn new(config: &MarlineConfig, dims: usize, target: StreamId, with_detector: bool, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(BaselineLearner {
            config: config.clone(),
            target,
            ensemble: config.new_ensemble(dims),
            detector: with_detector.then(|| config.new_detector()),
            resets: 0,
            rng: rng::seeded(seed),
        })
    }
}

impl StreamLearner for BaselineLearner {
    fn predict(&mut self, features: &[f64]) -> Result<Label> {
        Ok(self.ensemble.predict(features)?.predicted())
    }

    fn observe(&mut self, stream: StreamId, ex: &Example) -> Result<()> {
        if stream != self.target {
            return Ok(());
        }
        if let Some(detector) = &mut self.detector {
            let correct = self.ensemble.predict(&ex.features)?.predicted() == ex.label;
            if detector.update(correct) == DriftStatus::Drift {
                self.ensemble = self.config.new_ensemble(self.ensemble.dims());
                detector.reset();
                self.resets += 1;
            }
        }
        self.ensemble.train(ex, &mut self.rng)
    }
}
