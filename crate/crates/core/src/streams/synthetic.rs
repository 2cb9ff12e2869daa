use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::LabelledStream;
use crate::error::{Error, Result};
use crate::learners::{Example, Label};
use crate::marline::StreamId;
use crate::rng;

/// Class-conditional Gaussians of one concept (diagonal covariance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianConceptSpec {
    pub mean_neg: Vec<f64>,
    pub mean_pos: Vec<f64>,
    pub variance: Vec<f64>,
}

impl GaussianConceptSpec {
    pub fn new(mean_neg: &[f64], mean_pos: &[f64], variance: &[f64]) -> Self {
        GaussianConceptSpec {
            mean_neg: mean_neg.to_vec(),
            mean_pos: mean_pos.to_vec(),
            variance: variance.to_vec(),
        }
    }

    pub fn dims(&self) -> usize {
        self.mean_neg.len()
    }

    fn validate(&self) -> Result<()> {
        let d = self.dims();
        if d == 0 || self.mean_pos.len() != d || self.variance.len() != d {
            return Err(Error::config("concept means and variance must share a positive dimension"));
        }
        if self.variance.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::config("covariance diagonal entries must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftType {
    NoDrift,
    Abrupt,
    Incremental,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticStreamSpec {
    pub drift: DriftType,
    /// Examples per class per concept.
    pub class_size: usize,
    /// One concept for no-drift, two for abrupt, the starting concept for
    /// incremental.
    pub concepts: Vec<GaussianConceptSpec>,
    /// Examples between increments; incremental only, must be `2 * class_size`.
    pub increment_period: Option<usize>,
    pub seed: u64,
}

impl SyntheticStreamSpec {
    pub fn validate(&self) -> Result<()> {
        if self.class_size == 0 {
            return Err(Error::config("class_size must be positive"));
        }
        let expected = match self.drift {
            DriftType::NoDrift | DriftType::Incremental => 1,
            DriftType::Abrupt => 2,
        };
        if self.concepts.len() != expected {
            return Err(Error::config(format!(
                "{:?} stream needs exactly {expected} concept(s), got {}",
                self.drift,
                self.concepts.len()
            )));
        }
        for c in &self.concepts {
            c.validate()?;
        }
        if self.concepts.iter().any(|c| c.dims() != self.concepts[0].dims()) {
            return Err(Error::config("all concepts must share one dimensionality"));
        }
        if let (DriftType::Incremental, Some(p)) = (self.drift, self.increment_period) {
            if p != 2 * self.class_size {
                return Err(Error::config(format!(
                    "increment_period {p} must equal 2 * class_size ({})",
                    2 * self.class_size
                )));
            }
        }
        Ok(())
    }

    /// The sequence of concepts the stream passes through.
    pub fn concept_sequence(&self) -> Vec<GaussianConceptSpec> {
        match self.drift {
            DriftType::Incremental => incremental_path(&self.concepts[0]),
            _ => self.concepts.clone(),
        }
    }
}

/// Moves the two class means one unit per coordinate toward each other's
/// starting point until they have swapped places. Returns every position,
/// start and end included.
pub fn incremental_path(start: &GaussianConceptSpec) -> Vec<GaussianConceptSpec> {
    let (from, to) = (start.mean_neg.clone(), start.mean_pos.clone());
    let mut path = vec![start.clone()];
    let mut neg = from.clone();
    let mut pos = to.clone();
    while neg.iter().zip(&to).any(|(a, b)| (a - b).abs() > 1e-12) {
        for i in 0..neg.len() {
            let step = (to[i] - neg[i]).clamp(-1.0, 1.0);
            neg[i] += step;
            pos[i] -= step;
        }
        path.push(GaussianConceptSpec {
            mean_neg: neg.clone(),
            mean_pos: pos.clone(),
            variance: start.variance.clone(),
        });
    }
    path
}

/// Draws the stream: classes alternate Neg, Pos within every concept, each
/// concept emitting `class_size` examples per class.
pub fn generate_synthetic(id: StreamId, spec: &SyntheticStreamSpec) -> Result<LabelledStream> {
    spec.validate()?;
    let mut r = rng::seeded(spec.seed);
    let concepts = spec.concept_sequence();
    let mut examples = Vec::with_capacity(concepts.len() * 2 * spec.class_size);
    let mut drift_marks = Vec::new();
    for (ci, concept) in concepts.iter().enumerate() {
        if ci > 0 {
            drift_marks.push(examples.len());
        }
        let sd: Vec<f64> = concept.variance.iter().map(|v| v.sqrt()).collect();
        for i in 0..2 * spec.class_size {
            let label = Label::from_index(i % 2);
            let mean = if label == Label::Pos {
                &concept.mean_pos
            } else {
                &concept.mean_neg
            };
            let features = mean
                .iter()
                .zip(&sd)
                .map(|(m, s)| {
                    let z: f64 = StandardNormal.sample(&mut r);
                    m + s * z
                })
                .collect();
            examples.push(Example { features, label });
        }
    }
    Ok(LabelledStream {
        id,
        examples,
        drift_marks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFamily {
    NoDrift,
    Abrupt,
    Incremental,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSimilarity {
    Similar,
    NonSimilar,
}

/// Examples per class in every artificial source stream.
pub const SOURCE_CLASS_SIZE: usize = 5000;

/// A target stream plus its source streams.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub target: SyntheticStreamSpec,
    pub sources: Vec<SyntheticStreamSpec>,
}

impl SyntheticDataset {
    /// Target gets [`StreamId`] 0, sources 1.. in order.
    pub fn generate(&self) -> Result<(LabelledStream, Vec<LabelledStream>)> {
        let target = generate_synthetic(StreamId(0), &self.target)?;
        let sources = self
            .sources
            .iter()
            .enumerate()
            .map(|(i, s)| generate_synthetic(StreamId(i as u32 + 1), s))
            .collect::<Result<_>>()?;
        Ok((target, sources))
    }
}

const NARROW: [f64; 2] = [1.0, 2.0];
const WIDE: [f64; 2] = [2.0, 2.0];

/// The artificial benchmark datasets: two numeric features, Gaussian
/// classes, one target and one or more drift-free sources.
pub fn table_dataset(
    family: DatasetFamily,
    similarity: SourceSimilarity,
    class_size: usize,
    source_class_size: usize,
    seed: u64,
) -> SyntheticDataset {
    let concept = |neg: [f64; 2], pos: [f64; 2], var: [f64; 2]| GaussianConceptSpec::new(&neg, &pos, &var);
    let stream = |drift, class_size, concepts, salt| SyntheticStreamSpec {
        drift,
        class_size,
        concepts,
        increment_period: (drift == DriftType::Incremental).then_some(2 * class_size),
        seed: rng::mix(seed, salt),
    };
    let source = |c: GaussianConceptSpec, salt| stream(DriftType::NoDrift, source_class_size, vec![c], salt);
    let non_similar = concept([-2.0, -3.0], [-7.0, 2.0], NARROW);
    let target_var = match (family, similarity) {
        (DatasetFamily::NoDrift, _) | (_, SourceSimilarity::NonSimilar) => WIDE,
        _ => NARROW,
    };

    match family {
        DatasetFamily::NoDrift => SyntheticDataset {
            target: stream(DriftType::NoDrift, class_size, vec![concept([2.0, 3.0], [7.0, 8.0], target_var)], 0),
            sources: vec![match similarity {
                SourceSimilarity::Similar => source(concept([2.0, 1.0], [7.0, 8.0], NARROW), 1),
                SourceSimilarity::NonSimilar => source(non_similar, 1),
            }],
        },
        DatasetFamily::Abrupt => SyntheticDataset {
            target: stream(
                DriftType::Abrupt,
                class_size,
                vec![
                    concept([2.0, 3.0], [7.0, 8.0], target_var),
                    concept([2.0, 9.0], [5.0, 4.0], target_var),
                ],
                0,
            ),
            sources: vec![match similarity {
                SourceSimilarity::Similar => source(concept([2.0, 9.0], [5.0, 4.0], NARROW), 1),
                SourceSimilarity::NonSimilar => source(non_similar, 1),
            }],
        },
        DatasetFamily::Incremental => {
            let start = concept([2.0, 3.0], [7.0, 8.0], target_var);
            let sources = match similarity {
                SourceSimilarity::Similar => incremental_path(&concept([2.0, 3.0], [7.0, 8.0], NARROW))
                    .into_iter()
                    .enumerate()
                    .map(|(i, c)| source(c, i as u64 + 1))
                    .collect(),
                SourceSimilarity::NonSimilar => vec![source(non_similar, 1)],
            };
            SyntheticDataset {
                target: stream(DriftType::Incremental, class_size, vec![start], 0),
                sources,
            }
        }
    }
}
