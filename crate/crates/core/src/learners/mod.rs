//! Online base learners: Hoeffding trees and the online bagging / boosting
//! ensembles built from them.

mod ensemble;
mod gaussian;
mod tree;

pub use ensemble::{BaseEnsemble, EnsembleKind, PoissonDraw};
pub use gaussian::GaussianEstimator;
pub use tree::{HoeffdingTree, HoeffdingTreeParams, LeafPrediction};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Neg, Label::Pos];

    pub fn index(self) -> usize {
        match self {
            Label::Neg => 0,
            Label::Pos => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::Neg
        } else {
            Label::Pos
        }
    }

    /// The {-1, +1} encoding.
    pub fn sign(self) -> i8 {
        match self {
            Label::Neg => -1,
            Label::Pos => 1,
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Neg => Label::Pos,
            Label::Pos => Label::Neg,
        }
    }
}

/// One labelled observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: Label,
}

impl Example {
    pub fn new(features: Vec<f64>, label: Label) -> Result<Self> {
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(format!("feature {i} is not finite")));
        }
        Ok(Example { features, label })
    }

    pub fn dims(&self) -> usize {
        self.features.len()
    }
}

/// Class probabilities for the two labels. Always normalised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    probs: [f64; 2],
}

impl Default for LabelDistribution {
    fn default() -> Self {
        Self::UNIFORM
    }
}

impl LabelDistribution {
    pub const UNIFORM: LabelDistribution = LabelDistribution { probs: [0.5, 0.5] };

    /// Normalises nonnegative votes. Degenerate or non-finite votes give the
    /// uniform distribution.
    pub fn from_votes(neg: f64, pos: f64) -> Self {
        let neg = if neg.is_finite() { neg.max(0.0) } else { 0.0 };
        let pos = if pos.is_finite() { pos.max(0.0) } else { 0.0 };
        let total = neg + pos;
        if total <= 0.0 || !total.is_finite() {
            return Self::UNIFORM;
        }
        let p_pos = pos / total;
        LabelDistribution {
            probs: [1.0 - p_pos, p_pos],
        }
    }

    pub fn certain(label: Label) -> Self {
        let mut probs = [0.0; 2];
        probs[label.index()] = 1.0;
        LabelDistribution { probs }
    }

    pub fn prob(&self, label: Label) -> f64 {
        self.probs[label.index()]
    }

    pub fn prob_neg(&self) -> f64 {
        self.probs[0]
    }

    pub fn prob_pos(&self) -> f64 {
        self.probs[1]
    }

    /// Arg-max with ties resolved to [`Label::Neg`].
    pub fn predicted(&self) -> Label {
        if self.probs[1] > self.probs[0] {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    /// Arithmetic mean of distributions; uniform for an empty input.
    pub fn mean<I: IntoIterator<Item = LabelDistribution>>(dists: I) -> Self {
        let mut sum = [0.0; 2];
        let mut n = 0usize;
        for d in dists {
            sum[0] += d.probs[0];
            sum[1] += d.probs[1];
            n += 1;
        }
        if n == 0 {
            return Self::UNIFORM;
        }
        Self::from_votes(sum[0], sum[1])
    }
}

/// Hoeffding radius `sqrt(R^2 ln(1/delta) / (2n))`.
pub fn hoeffding_bound(range: f64, delta: f64, n: f64) -> f64 {
    debug_assert!(n > 0.0);
    ((range * range * (1.0 / delta).ln()) / (2.0 * n)).sqrt()
}
