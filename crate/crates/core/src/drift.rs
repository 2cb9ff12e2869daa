//! Drift detection over a stream of prediction-correctness bits.
//!
//! Two detectors share one interface: DDM tracks the running error rate and
//! its binomial standard deviation; HDDM_A compares the running error mean
//! against the best earlier cut point with Hoeffding's inequality (one-sided,
//! so only error increases raise alarms).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftStatus {
    Stable,
    Warning,
    Drift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Ddm,
    HddmA,
}

/// DDM (Gama et al., 2004).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ddm {
    n: u64,
    error_rate: f64,
    std_dev: f64,
    /// (p, s) at the minimum of p + s seen since the last reset.
    minimum: Option<(f64, f64)>,
}

impl Default for Ddm {
    fn default() -> Self {
        Ddm {
            n: 0,
            error_rate: 0.0,
            std_dev: 0.0,
            minimum: None,
        }
    }
}

impl Ddm {
    pub const MIN_OBSERVATIONS: u64 = 30;
    pub const WARNING_LEVEL: f64 = 2.0;
    pub const DRIFT_LEVEL: f64 = 3.0;

    pub fn update(&mut self, correct: bool) -> DriftStatus {
        let err = if correct { 0.0 } else { 1.0 };
        self.n += 1;
        self.error_rate += (err - self.error_rate) / self.n as f64;
        self.std_dev = (self.error_rate * (1.0 - self.error_rate) / self.n as f64).sqrt();
        if self.n < Self::MIN_OBSERVATIONS {
            return DriftStatus::Stable;
        }
        let level = self.error_rate + self.std_dev;
        let (p_min, s_min) = match self.minimum {
            Some((p, s)) if p + s < level => (p, s),
            _ => {
                self.minimum = Some((self.error_rate, self.std_dev));
                (self.error_rate, self.std_dev)
            }
        };
        if level > p_min + Self::DRIFT_LEVEL * s_min {
            *self = Ddm::default();
            DriftStatus::Drift
        } else if level > p_min + Self::WARNING_LEVEL * s_min {
            DriftStatus::Warning
        } else {
            DriftStatus::Stable
        }
    }

    pub fn error_rate(&self) -> f64 {
        self.error_rate
    }

    pub fn std_dev(&self) -> f64 {
        self.std_dev
    }

    /// `p_min + s_min`, once 30 observations have been seen.
    pub fn min_level(&self) -> Option<f64> {
        self.minimum.map(|(p, s)| p + s)
    }
}

/// HDDM with the A-test (Frías-Blanco et al., 2015), error-increase side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HddmA {
    drift_confidence: f64,
    warning_confidence: f64,
    total_n: f64,
    total_errors: f64,
    cut_n: f64,
    cut_errors: f64,
}

impl HddmA {
    pub const DEFAULT_DRIFT_CONFIDENCE: f64 = 0.001;
    pub const DEFAULT_WARNING_CONFIDENCE: f64 = 0.005;

    pub fn new(drift_confidence: f64, warning_confidence: f64) -> Self {
        HddmA {
            drift_confidence,
            warning_confidence,
            total_n: 0.0,
            total_errors: 0.0,
            cut_n: 0.0,
            cut_errors: 0.0,
        }
    }

    fn bound(n: f64, confidence: f64) -> f64 {
        ((1.0 / (2.0 * n)) * (1.0 / confidence).ln()).sqrt()
    }

    /// Tests whether the mean since the cut point exceeds the mean up to the
    /// cut by more than the Hoeffding deviation at `confidence`.
    fn mean_increased(&self, confidence: f64) -> bool {
        if self.cut_n == self.total_n {
            return false;
        }
        // 1/n' = 1/n_cut - 1/n_total
        let inv_n = 1.0 / self.cut_n - 1.0 / self.total_n;
        let eps = (inv_n / 2.0 * (1.0 / confidence).ln()).sqrt();
        self.total_errors / self.total_n - self.cut_errors / self.cut_n >= eps
    }

    pub fn update(&mut self, correct: bool) -> DriftStatus {
        let err = if correct { 0.0 } else { 1.0 };
        self.total_n += 1.0;
        self.total_errors += err;
        if self.cut_n == 0.0 {
            self.cut_n = self.total_n;
            self.cut_errors = self.total_errors;
        }
        let cut_upper = self.cut_errors / self.cut_n + Self::bound(self.cut_n, self.drift_confidence);
        let total_upper =
            self.total_errors / self.total_n + Self::bound(self.total_n, self.drift_confidence);
        if cut_upper >= total_upper {
            self.cut_n = self.total_n;
            self.cut_errors = self.total_errors;
        }
        if self.mean_increased(self.drift_confidence) {
            *self = HddmA::new(self.drift_confidence, self.warning_confidence);
            DriftStatus::Drift
        } else if self.mean_increased(self.warning_confidence) {
            DriftStatus::Warning
        } else {
            DriftStatus::Stable
        }
    }
}

impl Default for HddmA {
    fn default() -> Self {
        HddmA::new(Self::DEFAULT_DRIFT_CONFIDENCE, Self::DEFAULT_WARNING_CONFIDENCE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Inner {
    Ddm(Ddm),
    HddmA(HddmA),
}

/// A drift detector of either kind plus the shared bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftDetector {
    inner: Inner,
    observed: u64,
    status: DriftStatus,
}

impl DriftDetector {
    pub fn new(kind: DetectorKind) -> Self {
        let inner = match kind {
            DetectorKind::Ddm => Inner::Ddm(Ddm::default()),
            DetectorKind::HddmA => Inner::HddmA(HddmA::default()),
        };
        DriftDetector {
            inner,
            observed: 0,
            status: DriftStatus::Stable,
        }
    }

    pub fn hddm_a(drift_confidence: f64, warning_confidence: f64) -> Self {
        DriftDetector {
            inner: Inner::HddmA(HddmA::new(drift_confidence, warning_confidence)),
            observed: 0,
            status: DriftStatus::Stable,
        }
    }

    pub fn kind(&self) -> DetectorKind {
        match self.inner {
            Inner::Ddm(_) => DetectorKind::Ddm,
            Inner::HddmA(_) => DetectorKind::HddmA,
        }
    }

    pub fn update(&mut self, prediction_correct: bool) -> DriftStatus {
        self.observed += 1;
        self.status = match &mut self.inner {
            Inner::Ddm(d) => d.update(prediction_correct),
            Inner::HddmA(h) => h.update(prediction_correct),
        };
        self.status
    }

    pub fn reset(&mut self) {
        self.inner = match &self.inner {
            Inner::Ddm(_) => Inner::Ddm(Ddm::default()),
            Inner::HddmA(h) => Inner::HddmA(HddmA::new(h.drift_confidence, h.warning_confidence)),
        };
        self.observed = 0;
        self.status = DriftStatus::Stable;
    }

    pub fn status(&self) -> DriftStatus {
        self.status
    }

    pub fn observed_count(&self) -> u64 {
        self.observed
    }

    pub fn as_ddm(&self) -> Option<&Ddm> {
        match &self.inner {
            Inner::Ddm(d) => Some(d),
            Inner::HddmA(_) => None,
        }
    }
}
