//! Concept geometry.
//!
//! Each concept keeps exponentially decayed class centroids. The vector from
//! the negative to the positive centroid summarises the concept; a scaled
//! rotation that carries the target concept's vector onto another concept's
//! vector, anchored at the positive centroids, projects target examples into
//! that concept's feature space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{Example, Label};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ClassCentroid {
    sum: Vec<f64>,
    normalizer: f64,
    seen: bool,
}

/// Decayed per-class centroids of one concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidTracker {
    dims: usize,
    theta: f64,
    classes: [ClassCentroid; 2],
}

impl CentroidTracker {
    pub fn new(dims: usize, theta: f64) -> Self {
        let empty = ClassCentroid {
            sum: vec![0.0; dims],
            normalizer: 0.0,
            seen: false,
        };
        CentroidTracker {
            dims,
            theta,
            classes: [empty.clone(), empty],
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn update(&mut self, ex: &Example) -> Result<()> {
        Error::check_dims(self.dims, ex.dims())?;
        let class = &mut self.classes[ex.label.index()];
        if class.seen {
            for (s, &x) in class.sum.iter_mut().zip(&ex.features) {
                *s = self.theta * *s + x;
            }
            class.normalizer = self.theta * class.normalizer + 1.0;
        } else {
            class.sum.copy_from_slice(&ex.features);
            class.normalizer = 1.0;
            class.seen = true;
        }
        Ok(())
    }

    pub fn seen(&self, label: Label) -> bool {
        self.classes[label.index()].seen
    }

    pub fn has_both_classes(&self) -> bool {
        self.classes[0].seen && self.classes[1].seen
    }

    pub fn decayed_sum(&self, label: Label) -> &[f64] {
        &self.classes[label.index()].sum
    }

    pub fn normalizer(&self, label: Label) -> f64 {
        self.classes[label.index()].normalizer
    }

    pub fn centroid(&self, label: Label) -> Option<Vec<f64>> {
        let class = &self.classes[label.index()];
        class
            .seen
            .then(|| class.sum.iter().map(|s| s / class.normalizer).collect())
    }

    /// Positive centroid minus negative centroid; `None` until both classes
    /// have been seen.
    pub fn concept_vector(&self) -> Option<Vec<f64>> {
        let pos = self.centroid(Label::Pos)?;
        let neg = self.centroid(Label::Neg)?;
        Some(pos.iter().zip(&neg).map(|(p, n)| p - n).collect())
    }
}

/// Scaled rotation `R` with `R · v_tgt = v_src`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignMap {
    dims: usize,
    /// Row-major `dims x dims`.
    matrix: Vec<f64>,
    scale: f64,
    degenerate: bool,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative tolerance below which a concept vector counts as zero.
pub fn degeneracy_tolerance(v_src: &[f64], v_tgt: &[f64]) -> f64 {
    1e-9 * (1.0 + norm(v_src).max(norm(v_tgt)))
}

impl AlignMap {
    pub fn identity(dims: usize) -> Self {
        let mut matrix = vec![0.0; dims * dims];
        for i in 0..dims {
            matrix[i * dims + i] = 1.0;
        }
        AlignMap {
            dims,
            matrix,
            scale: 1.0,
            degenerate: true,
        }
    }

    pub fn build(v_src: &[f64], v_tgt: &[f64]) -> Result<Self> {
        Self::build_with_tolerance(v_src, v_tgt, degeneracy_tolerance(v_src, v_tgt))
    }

    /// Two Householder reflections, `s · H_u · H_(u+v)`, where `u`, `v` are the
    /// unit source and target vectors and `s = |v_src| / |v_tgt|`. When `u` and
    /// `v` are (numerically) antiparallel the single reflection `s · H_(u-v)`
    /// is used instead; it equals `s · H_v` at exact antiparallelism.
    pub fn build_with_tolerance(v_src: &[f64], v_tgt: &[f64], eps: f64) -> Result<Self> {
        Error::check_dims(v_src.len(), v_tgt.len())?;
        let d = v_src.len();
        let (ns, nt) = (norm(v_src), norm(v_tgt));
        if !(ns > eps && nt > eps) || !ns.is_finite() || !nt.is_finite() {
            return Ok(Self::identity(d));
        }
        let u: Vec<f64> = v_src.iter().map(|x| x / ns).collect();
        let v: Vec<f64> = v_tgt.iter().map(|x| x / nt).collect();
        let scale = ns / nt;
        let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let mut matrix = vec![0.0; d * d];
        if norm(&w) > eps {
            // (I - 2uu')(I - 2ww'/q) = I - 2uu' - 2ww'/q + 4(u.w/q) u w'
            let q = dot(&w, &w);
            let uw = dot(&u, &w);
            for i in 0..d {
                for j in 0..d {
                    let id = if i == j { 1.0 } else { 0.0 };
                    let e = id - 2.0 * u[i] * u[j] - 2.0 * w[i] * w[j] / q + 4.0 * uw / q * u[i] * w[j];
                    matrix[i * d + j] = scale * e;
                }
            }
        } else {
            let z: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
            let q = dot(&z, &z);
            for i in 0..d {
                for j in 0..d {
                    let id = if i == j { 1.0 } else { 0.0 };
                    matrix[i * d + j] = scale * (id - 2.0 * z[i] * z[j] / q);
                }
            }
        }
        Ok(AlignMap {
            dims: d,
            matrix,
            scale,
            degenerate: false,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.dims + col]
    }

    /// `R · x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dims];
        self.apply_into(x, &mut out);
        out
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (row, o) in self.matrix.chunks_exact(self.dims).zip(out.iter_mut()) {
            *o = dot(row, x);
        }
    }

    /// `c_src_pos + R · (x - c_tgt_pos)`, or `x` itself for a degenerate map.
    pub fn project(&self, features: &[f64], c_tgt_pos: &[f64], c_src_pos: &[f64]) -> Result<Vec<f64>> {
        Error::check_dims(self.dims, features.len())?;
        Error::check_dims(self.dims, c_tgt_pos.len())?;
        Error::check_dims(self.dims, c_src_pos.len())?;
        if self.degenerate {
            return Ok(features.to_vec());
        }
        let shifted: Vec<f64> = features.iter().zip(c_tgt_pos).map(|(x, c)| x - c).collect();
        let mut out = vec![0.0; self.dims];
        self.apply_into(&shifted, &mut out);
        for (o, c) in out.iter_mut().zip(c_src_pos) {
            *o += c;
        }
        Ok(out)
    }
}

/// Projection of one target example onto a source+ concept.
pub fn project_target_example(
    features: &[f64],
    map: &AlignMap,
    c_tgt_pos: &[f64],
    c_src_pos: &[f64],
) -> Result<Vec<f64>> {
    map.project(features, c_tgt_pos, c_src_pos)
}
