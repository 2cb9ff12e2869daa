use serde::{Deserialize, Serialize};

/// Weighted running mean and variance (West's incremental update).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GaussianEstimator {
    weight: f64,
    mean: f64,
    var_sum: f64,
    min: f64,
    max: f64,
}

const MIN_VARIANCE: f64 = 1e-6;

impl GaussianEstimator {
    pub fn add(&mut self, value: f64, weight: f64) {
        if weight <= 0.0 {
            return;
        }
        if self.weight > 0.0 {
            self.weight += weight;
            let last = self.mean;
            self.mean += weight * (value - last) / self.weight;
            self.var_sum += weight * (value - last) * (value - self.mean);
            self.min = self.min.min(value);
            self.max = self.max.max(value);
        } else {
            self.weight = weight;
            self.mean = value;
            self.var_sum = 0.0;
            self.min = value;
            self.max = value;
        }
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn variance(&self) -> f64 {
        if self.weight > 1.0 {
            (self.var_sum / (self.weight - 1.0)).max(0.0)
        } else {
            0.0
        }
    }

    fn floored_std(&self) -> f64 {
        self.variance().max(MIN_VARIANCE).sqrt()
    }

    /// Log density with a variance floor, so single-point estimators still
    /// rank values by distance to their mean.
    pub fn log_density(&self, value: f64) -> f64 {
        if self.weight <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let sd = self.floored_std();
        let z = (value - self.mean) / sd;
        -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    /// Estimated weight of observations `<= value`.
    pub fn weight_at_or_below(&self, value: f64) -> f64 {
        if self.weight <= 0.0 {
            return 0.0;
        }
        if value < self.min {
            return 0.0;
        }
        if value >= self.max {
            return self.weight;
        }
        let sd = self.variance().sqrt();
        if sd <= 0.0 {
            return if value >= self.mean { self.weight } else { 0.0 };
        }
        normal_cdf((value - self.mean) / sd) * self.weight
    }
}

/// Standard normal CDF via the complementary error function.
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

// Numerical Recipes erfc (Chebyshev fit, fractional error < 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t
        * (-z * z - 1.265_512_23
            + t * (1.000_023_68
                + t * (0.374_091_96
                    + t * (0.096_784_18
                        + t * (-0.186_288_06
                            + t * (0.278_868_07
                                + t * (-1.135_203_98
                                    + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
            .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}
