use std::io::Write;

use serde::{Deserialize, Serialize};

use super::experiment::{run_experiment, ExperimentSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub ensemble_size: Vec<usize>,
    pub theta: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Default for GridSpec {
    /// K from 1 to 30, theta from 0.90 to 1.00 in steps of 0.01, sigma from
    /// 0.1 to 1.0 in steps of 0.1.
    fn default() -> Self {
        GridSpec {
            ensemble_size: (1..=30).collect(),
            theta: (0..=10).map(|i| (90 + i) as f64 / 100.0).collect(),
            sigma: (1..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub ensemble_size: usize,
    pub theta: f64,
    pub sigma: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    /// Every evaluated point, in ascending (K, theta, sigma) order.
    pub points: Vec<GridPoint>,
    pub best: GridPoint,
}

fn sorted_unique(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Evaluates the template at every grid point and keeps the highest
/// objective; ties go to smaller K, then theta, then sigma. Baselines ignore
/// theta and sigma, so those axes collapse to the template's values.
pub fn grid_search(template: &ExperimentSpec, grid: &GridSpec, parallelism: Option<usize>) -> Result<GridResult> {
    if grid.ensemble_size.is_empty() || grid.theta.is_empty() || grid.sigma.is_empty() {
        return Err(Error::config("every grid axis needs at least one value"));
    }
    let mut ks = grid.ensemble_size.clone();
    ks.sort_unstable();
    ks.dedup();
    let (thetas, sigmas) = if template.approach.is_marline() {
        (sorted_unique(grid.theta.clone()), sorted_unique(grid.sigma.clone()))
    } else {
        (vec![template.config.theta], vec![template.config.sigma])
    };

    let mut points = Vec::with_capacity(ks.len() * thetas.len() * sigmas.len());
    for &k in &ks {
        for &theta in &thetas {
            for &sigma in &sigmas {
                let mut spec = template.clone();
                spec.config.ensemble_size = k;
                spec.config.theta = theta;
                spec.config.sigma = sigma;
                let result = run_experiment(&spec, parallelism)?;
                points.push(GridPoint {
                    ensemble_size: k,
                    theta,
                    sigma,
                    objective: result.objective,
                });
            }
        }
    }
    let best = select_best(&points);
    Ok(GridResult { points, best })
}

/// Highest objective; ties go to smaller K, then theta, then sigma.
pub(crate) fn select_best(points: &[GridPoint]) -> GridPoint {
    let key = |p: &GridPoint| (p.ensemble_size, p.theta, p.sigma);
    let mut best = points[0];
    for p in &points[1..] {
        let better = p.objective > best.objective
            || (p.objective == best.objective && key(p).partial_cmp(&key(&best)) == Some(std::cmp::Ordering::Less));
        if better {
            best = *p;
        }
    }
    best
}

/// `k,theta,sigma,objective`, one row per grid point.
pub fn write_grid_csv<W: Write>(result: &GridResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "k,theta,sigma,objective")?;
    for p in &result.points {
        writeln!(out, "{},{},{},{}", p.ensemble_size, p.theta, p.sigma, p.objective)?;
    }
    out.flush()
}
