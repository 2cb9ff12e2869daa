//! Sub-classifier performance tracking and vote weights.

use std::borrow::{Borrow, BorrowMut};

use serde::{Deserialize, Serialize};

use crate::learners::LabelDistribution;

/// Decayed evidence for one sub-classifier on the current target concept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubClassifierStats {
    pub lambda_sc: f64,
    pub lambda_sw: f64,
    pub alpha: f64,
}

impl Default for SubClassifierStats {
    fn default() -> Self {
        SubClassifierStats {
            lambda_sc: 0.0,
            lambda_sw: 0.0,
            alpha: 1.0,
        }
    }
}

impl SubClassifierStats {
    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// Alpha-weighted confidence of the whole ensemble on one target example.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VoteAccumulator {
    /// Sum of `alpha * P(correct)`.
    pub sc: f64,
    /// Sum of `alpha * P(wrong)`.
    pub sw: f64,
}

impl VoteAccumulator {
    pub fn accumulate<S: Borrow<SubClassifierStats>>(stats: &[S], p_correct: &[f64]) -> Self {
        let mut acc = VoteAccumulator::default();
        for (s, &p) in stats.iter().zip(p_correct) {
            let alpha = s.borrow().alpha;
            acc.sc += alpha * p;
            acc.sw += alpha * (1.0 - p);
        }
        acc
    }

    /// The weight `SW / SC` the current example receives.
    pub fn example_weight(&self, eps: f64) -> f64 {
        self.sw.max(eps) / self.sc.max(eps)
    }
}

/// Updates every sub-classifier's lambdas and alpha from its probability of
/// the true label. All contributions use the alphas held before the call.
pub fn update_stats<S: BorrowMut<SubClassifierStats>>(
    stats: &mut [S],
    p_correct: &[f64],
    theta: f64,
    eps: f64,
) -> VoteAccumulator {
    assert_eq!(stats.len(), p_correct.len());
    let acc = VoteAccumulator::accumulate(stats, p_correct);
    let sc = acc.sc.max(eps);
    let sw = acc.sw.max(eps);
    let weight = sw / sc;
    for (s, &p) in stats.iter_mut().zip(p_correct) {
        let s = s.borrow_mut();
        let alpha = s.alpha;
        s.lambda_sc = theta * s.lambda_sc + weight * alpha * p / sc;
        s.lambda_sw = theta * s.lambda_sw + weight * alpha * (1.0 - p) / sw;
        let total = s.lambda_sc + s.lambda_sw;
        s.alpha = if total > 0.0 { s.lambda_sc / total } else { 1.0 };
    }
    acc
}

/// Normalised weights over the sub-classifiers whose alpha exceeds `sigma`;
/// everything else gets zero.
pub fn sub_classifier_weights<I>(alphas: I, sigma: f64) -> Vec<f64>
where
    I: IntoIterator<Item = f64>,
{
    let alphas: Vec<f64> = alphas.into_iter().collect();
    let total: f64 = alphas.iter().filter(|&&a| a > sigma).sum();
    alphas
        .iter()
        .map(|&a| if a > sigma && total > 0.0 { a / total } else { 0.0 })
        .collect()
}

/// Per-class weighted vote `[score(Neg), score(Pos)]`.
pub fn weighted_scores(weights: &[f64], dists: &[LabelDistribution]) -> [f64; 2] {
    let mut scores = [0.0; 2];
    for (w, d) in weights.iter().zip(dists) {
        if *w > 0.0 {
            scores[0] += w * d.prob_neg();
            scores[1] += w * d.prob_pos();
        }
    }
    scores
}
