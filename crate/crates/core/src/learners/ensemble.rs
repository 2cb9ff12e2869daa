use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::tree::{HoeffdingTree, HoeffdingTreeParams};
use super::{Example, LabelDistribution};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    OnlineBagging,
    OnlineBoosting,
}

/// Source of Poisson-distributed training weights. Every [`Rng`] is one;
/// tests substitute fixed draws.
pub trait PoissonDraw {
    fn poisson(&mut self, lambda: f64) -> f64;
}

impl<R: Rng + ?Sized> PoissonDraw for R {
    fn poisson(&mut self, lambda: f64) -> f64 {
        match Poisson::new(lambda) {
            Ok(p) => p.sample(self),
            Err(_) => 0.0,
        }
    }
}

const EPSILON_CLAMP: f64 = 1e-10;

/// Online bagging or boosting over a fixed number of Hoeffding trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseEnsemble {
    kind: EnsembleKind,
    members: Vec<HoeffdingTree>,
    lambda_correct: Vec<f64>,
    lambda_wrong: Vec<f64>,
    trained_count: u64,
}

impl BaseEnsemble {
    pub fn new(kind: EnsembleKind, size: usize, dims: usize, params: HoeffdingTreeParams) -> Self {
        assert!(size >= 1, "ensemble needs at least one member");
        BaseEnsemble {
            kind,
            members: (0..size).map(|_| HoeffdingTree::new(dims, params)).collect(),
            lambda_correct: vec![0.0; size],
            lambda_wrong: vec![0.0; size],
            trained_count: 0,
        }
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn dims(&self) -> usize {
        self.members[0].dims()
    }

    pub fn members(&self) -> &[HoeffdingTree] {
        &self.members
    }

    /// Number of examples this ensemble has been trained on.
    pub fn trained_count(&self) -> u64 {
        self.trained_count
    }

    pub fn boosting_lambdas(&self) -> (&[f64], &[f64]) {
        (&self.lambda_correct, &self.lambda_wrong)
    }

    pub fn train<P: PoissonDraw + ?Sized>(&mut self, ex: &Example, draw: &mut P) -> Result<()> {
        Error::check_dims(self.dims(), ex.dims())?;
        match self.kind {
            EnsembleKind::OnlineBagging => {
                for tree in &mut self.members {
                    let k = draw.poisson(1.0);
                    if k > 0.0 {
                        tree.train(&ex.features, ex.label, k)?;
                    }
                }
            }
            EnsembleKind::OnlineBoosting => {
                let mut lambda = 1.0;
                for m in 0..self.members.len() {
                    let k = draw.poisson(lambda);
                    if k > 0.0 {
                        self.members[m].train(&ex.features, ex.label, k)?;
                    }
                    let correct = self.members[m].predict_unchecked(&ex.features).predicted() == ex.label;
                    if correct {
                        self.lambda_correct[m] += lambda;
                    } else {
                        self.lambda_wrong[m] += lambda;
                    }
                    let eps = (self.lambda_wrong[m] / (self.lambda_correct[m] + self.lambda_wrong[m]))
                        .clamp(EPSILON_CLAMP, 1.0 - EPSILON_CLAMP);
                    lambda /= if correct { 2.0 * (1.0 - eps) } else { 2.0 * eps };
                }
            }
        }
        self.trained_count += 1;
        Ok(())
    }

    /// Unweighted mean of the member distributions.
    pub fn predict(&self, features: &[f64]) -> Result<LabelDistribution> {
        Error::check_dims(self.dims(), features.len())?;
        Ok(self.predict_unchecked(features))
    }

    pub(crate) fn predict_unchecked(&self, features: &[f64]) -> LabelDistribution {
        LabelDistribution::mean(self.members.iter().map(|t| t.predict_unchecked(features)))
    }

    /// Per-member distributions, in member order.
    pub(crate) fn member_predictions<'a>(
        &'a self,
        features: &'a [f64],
    ) -> impl Iterator<Item = LabelDistribution> + 'a {
        self.members.iter().map(move |t| t.predict_unchecked(features))
    }
}
