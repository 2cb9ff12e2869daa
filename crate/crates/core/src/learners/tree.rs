use serde::{Deserialize, Serialize};

use super::gaussian::GaussianEstimator;
use super::{hoeffding_bound, Label, LabelDistribution};
use crate::error::{Error, Result};

/// How a leaf turns its statistics into a class distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafPrediction {
    MajorityClass,
    /// Naive Bayes, unless the majority class has been the better predictor
    /// at this leaf so far.
    NaiveBayesAdaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HoeffdingTreeParams {
    /// Training weight a leaf accumulates between split attempts.
    pub grace_period: u32,
    pub split_confidence: f64,
    pub tie_threshold: f64,
    pub leaf_prediction: LeafPrediction,
}

impl Default for HoeffdingTreeParams {
    fn default() -> Self {
        HoeffdingTreeParams {
            grace_period: 200,
            split_confidence: 1e-7,
            tie_threshold: 0.05,
            leaf_prediction: LeafPrediction::NaiveBayesAdaptive,
        }
    }
}

impl HoeffdingTreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.grace_period < 1 {
            return Err(Error::config("grace_period must be at least 1"));
        }
        if !(self.split_confidence > 0.0 && self.split_confidence < 1.0) {
            return Err(Error::config("split_confidence must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.tie_threshold) {
            return Err(Error::config("tie_threshold must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Candidate thresholds evaluated per numeric attribute.
const SPLIT_BINS: usize = 10;
/// A split must send at least this fraction of the weight down two branches.
const MIN_BRANCH_FRACTION: f64 = 0.01;
/// Range of information gain for two classes (log2 of the class count).
const MERIT_RANGE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Leaf {
    class_weights: [f64; 2],
    /// Per attribute, one estimator per class.
    observers: Vec<[GaussianEstimator; 2]>,
    weight_at_last_eval: f64,
    mc_correct: f64,
    nb_correct: f64,
}

impl Leaf {
    fn new(dims: usize, class_weights: [f64; 2]) -> Self {
        Leaf {
            class_weights,
            observers: vec![Default::default(); dims],
            weight_at_last_eval: class_weights[0] + class_weights[1],
            mc_correct: 0.0,
            nb_correct: 0.0,
        }
    }

    fn weight_seen(&self) -> f64 {
        self.class_weights[0] + self.class_weights[1]
    }

    fn majority(&self) -> LabelDistribution {
        LabelDistribution::from_votes(self.class_weights[0], self.class_weights[1])
    }

    fn naive_bayes(&self, features: &[f64]) -> LabelDistribution {
        let total = self.weight_seen();
        if total <= 0.0 {
            return LabelDistribution::UNIFORM;
        }
        let mut log_votes = [0.0; 2];
        for (c, lv) in log_votes.iter_mut().enumerate() {
            *lv = (self.class_weights[c] / total).ln();
        }
        for (obs, &x) in self.observers.iter().zip(features) {
            if obs[0].weight() + obs[1].weight() <= 0.0 {
                continue;
            }
            for (c, lv) in log_votes.iter_mut().enumerate() {
                *lv += obs[c].log_density(x);
            }
        }
        let top = log_votes[0].max(log_votes[1]);
        if !top.is_finite() {
            return self.majority();
        }
        LabelDistribution::from_votes((log_votes[0] - top).exp(), (log_votes[1] - top).exp())
    }

    fn distribution(&self, features: &[f64], mode: LeafPrediction) -> LabelDistribution {
        match mode {
            LeafPrediction::MajorityClass => self.majority(),
            LeafPrediction::NaiveBayesAdaptive => {
                if self.mc_correct > self.nb_correct {
                    self.majority()
                } else {
                    self.naive_bayes(features)
                }
            }
        }
    }

    fn learn(&mut self, features: &[f64], label: Label, weight: f64, mode: LeafPrediction) {
        if mode == LeafPrediction::NaiveBayesAdaptive {
            if self.majority().predicted() == label {
                self.mc_correct += weight;
            }
            if self.naive_bayes(features).predicted() == label {
                self.nb_correct += weight;
            }
        }
        self.class_weights[label.index()] += weight;
        for (obs, &x) in self.observers.iter_mut().zip(features) {
            obs[label.index()].add(x, weight);
        }
    }

    fn is_pure(&self) -> bool {
        self.class_weights.iter().filter(|&&w| w > 0.0).count() < 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(Leaf),
    Split {
        attribute: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

struct SplitCandidate {
    merit: f64,
    attribute: usize,
    threshold: f64,
    left: [f64; 2],
    right: [f64; 2],
}

/// Very fast decision tree over numeric attributes. Nodes live in an arena;
/// index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingTree {
    params: HoeffdingTreeParams,
    dims: usize,
    nodes: Vec<Node>,
}

impl HoeffdingTree {
    pub fn new(dims: usize, params: HoeffdingTreeParams) -> Self {
        HoeffdingTree {
            params,
            dims,
            nodes: vec![Node::Leaf(Leaf::new(dims, [0.0; 2]))],
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn params(&self) -> &HoeffdingTreeParams {
        &self.params
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn split_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }

    fn leaf_index(&self, features: &[f64]) -> usize {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf(_) => return idx,
                Node::Split {
                    attribute,
                    threshold,
                    left,
                    right,
                } => idx = if features[*attribute] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn train(&mut self, features: &[f64], label: Label, weight: f64) -> Result<()> {
        Error::check_dims(self.dims, features.len())?;
        if !(weight > 0.0) || !weight.is_finite() {
            return Ok(());
        }
        let idx = self.leaf_index(features);
        let mode = self.params.leaf_prediction;
        let grace = f64::from(self.params.grace_period);
        let due = match &mut self.nodes[idx] {
            Node::Leaf(leaf) => {
                leaf.learn(features, label, weight, mode);
                leaf.weight_seen() - leaf.weight_at_last_eval >= grace
            }
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        };
        if due {
            self.attempt_split(idx);
        }
        Ok(())
    }

    pub fn predict(&self, features: &[f64]) -> Result<LabelDistribution> {
        Error::check_dims(self.dims, features.len())?;
        Ok(self.predict_unchecked(features))
    }

    pub(crate) fn predict_unchecked(&self, features: &[f64]) -> LabelDistribution {
        match &self.nodes[self.leaf_index(features)] {
            Node::Leaf(leaf) => leaf.distribution(features, self.params.leaf_prediction),
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    fn attempt_split(&mut self, idx: usize) {
        let Node::Leaf(leaf) = &mut self.nodes[idx] else {
            return;
        };
        let seen = leaf.weight_seen();
        leaf.weight_at_last_eval = seen;
        if leaf.is_pure() {
            return;
        }

        let pre = leaf.class_weights;
        let pre_entropy = entropy(&pre);
        let mut candidates: Vec<SplitCandidate> = Vec::with_capacity(self.dims + 1);
        for (attribute, obs) in leaf.observers.iter().enumerate() {
            if let Some(c) = best_split_for_attribute(attribute, obs, pre_entropy) {
                candidates.push(c);
            }
        }
        // The "do not split" option has zero gain.
        let mut best: Option<&SplitCandidate> = None;
        let mut best_merit = 0.0;
        let mut second_merit = 0.0;
        for c in &candidates {
            if c.merit > best_merit {
                second_merit = best_merit;
                best_merit = c.merit;
                best = Some(c);
            } else if c.merit > second_merit {
                second_merit = c.merit;
            }
        }
        let Some(best) = best else {
            return;
        };

        let bound = hoeffding_bound(MERIT_RANGE, self.params.split_confidence, seen);
        if best_merit - second_merit > bound || bound < self.params.tie_threshold {
            let (attribute, threshold) = (best.attribute, best.threshold);
            let (l, r) = (best.left, best.right);
            let left = self.nodes.len();
            self.nodes.push(Node::Leaf(Leaf::new(self.dims, l)));
            self.nodes.push(Node::Leaf(Leaf::new(self.dims, r)));
            self.nodes[idx] = Node::Split {
                attribute,
                threshold,
                left,
                right: left + 1,
            };
        }
    }
}

fn entropy(dist: &[f64; 2]) -> f64 {
    let total = dist[0] + dist[1];
    if total <= 0.0 {
        return 0.0;
    }
    dist.iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            -p * p.log2()
        })
        .sum()
}

fn info_gain(pre_entropy: f64, left: &[f64; 2], right: &[f64; 2]) -> f64 {
    let wl = left[0] + left[1];
    let wr = right[0] + right[1];
    let total = wl + wr;
    if total <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let populated = [wl, wr]
        .iter()
        .filter(|&&w| w / total > MIN_BRANCH_FRACTION)
        .count();
    if populated < 2 {
        return f64::NEG_INFINITY;
    }
    pre_entropy - (wl / total) * entropy(left) - (wr / total) * entropy(right)
}

fn best_split_for_attribute(
    attribute: usize,
    obs: &[GaussianEstimator; 2],
    pre_entropy: f64,
) -> Option<SplitCandidate> {
    let populated: Vec<&GaussianEstimator> = obs.iter().filter(|g| g.weight() > 0.0).collect();
    if populated.is_empty() {
        return None;
    }
    let lo = populated.iter().map(|g| g.min()).fold(f64::INFINITY, f64::min);
    let hi = populated.iter().map(|g| g.max()).fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return None;
    }
    let step = (hi - lo) / (SPLIT_BINS as f64 + 1.0);
    let mut best: Option<SplitCandidate> = None;
    for i in 1..=SPLIT_BINS {
        let threshold = lo + step * i as f64;
        let mut left = [0.0; 2];
        let mut right = [0.0; 2];
        for c in 0..2 {
            let below = obs[c].weight_at_or_below(threshold);
            left[c] = below;
            right[c] = (obs[c].weight() - below).max(0.0);
        }
        let merit = info_gain(pre_entropy, &left, &right);
        if merit.is_finite() && best.as_ref().is_none_or(|b| merit > b.merit) {
            best = Some(SplitCandidate {
                merit,
                attribute,
                threshold,
                left,
                right,
            });
        }
    }
    best
}
