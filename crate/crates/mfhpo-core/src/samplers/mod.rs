//! Outer-loop configuration proposal: uniform random search and
//! forest-surrogate Bayesian optimization with an upper-confidence-bound
//! acquisition whose exploration weight decays cyclically.

mod forest;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::benchmark::{sample_config, HpConfig, HpSpace};
use crate::{Error, Result};

pub use forest::{fit_forest, ForestSurrogate};

/// Min-max standardization to [0, 1] followed by `ln(y' + epsilon)`.
/// All-equal inputs map to the midpoint before the log. Strictly monotone
/// on non-degenerate inputs, so argmax is preserved.
pub fn transform_objective(raw: &[f64]) -> Result<Vec<f64>> {
    const EPSILON: f64 = 1e-3;
    if raw.is_empty() {
        return Err(Error::InvalidRunConfig("no scores to transform".into()));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidRunConfig(
            "non-finite score in objective transform".into(),
        ));
    }
    let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    Ok(raw
        .iter()
        .map(|&y| {
            let unit = if span > 0.0 { (y - min) / span } else { 0.5 };
            (unit + EPSILON).ln()
        })
        .collect())
}

/// Exploration-weight schedule: `kappa(i) = kappa_max * exp(-lambda * (i mod period))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UcbSchedule {
    pub kappa_max: f64,
    pub lambda: f64,
    pub period: usize,
}

impl Default for UcbSchedule {
    fn default() -> Self {
        Self {
            kappa_max: 1.96,
            lambda: 0.1,
            period: 25,
        }
    }
}

impl UcbSchedule {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.kappa_max) || !positive(self.lambda) || self.period == 0 {
            return Err(Error::InvalidRunConfig(
                "kappa_max and lambda must be > 0, period >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn kappa(&self, iteration: usize) -> f64 {
        self.kappa_max * (-self.lambda * (iteration % self.period) as f64).exp()
    }
}

/// Proposes the next configuration to evaluate.
pub trait Sampler {
    fn kind(&self) -> SamplerKind;

    /// `history` holds (config, raw objective) for every finished trial.
    fn propose(
        &mut self,
        space: &HpSpace,
        history: &[(HpConfig, f64)],
        rng: &mut dyn RngCore,
    ) -> Result<HpConfig>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Random,
    ForestBo,
}

impl SamplerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerKind::Random => "random",
            SamplerKind::ForestBo => "forest_bo",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "random" => Some(SamplerKind::Random),
            "forest_bo" => Some(SamplerKind::ForestBo),
            _ => None,
        }
    }
}

/// Uniform random search; ignores history entirely.
#[derive(Debug, Clone, Default)]
pub struct RandomSampler;

impl Sampler for RandomSampler {
    fn kind(&self) -> SamplerKind {
        SamplerKind::Random
    }

    fn propose(
        &mut self,
        space: &HpSpace,
        _history: &[(HpConfig, f64)],
        rng: &mut dyn RngCore,
    ) -> Result<HpConfig> {
        Ok(sample_config(space, &mut *rng))
    }
}

/// Forest-surrogate Bayesian optimization: fit a forest on the transformed
/// history, then take the acquisition argmax over a candidate pool (or the
/// whole space when `exhaustive` is set). Ties break by pool order.
#[derive(Debug, Clone)]
pub struct ForestBoSampler {
    pub schedule: UcbSchedule,
    pub n_trees: usize,
    pub pool_size: usize,
    pub exhaustive: bool,
    iteration: usize,
}

impl ForestBoSampler {
    pub fn new(
        schedule: UcbSchedule,
        n_trees: usize,
        pool_size: usize,
        exhaustive: bool,
    ) -> Result<Self> {
        schedule.validate()?;
        if n_trees == 0 || pool_size == 0 {
            return Err(Error::InvalidRunConfig(
                "n_trees and acq_pool must be >= 1".into(),
            ));
        }
        Ok(Self {
            schedule,
            n_trees,
            pool_size,
            exhaustive,
            iteration: 0,
        })
    }

    fn encode(config: &HpConfig) -> Vec<f64> {
        config.values().iter().map(|&v| v as f64).collect()
    }
}

impl Sampler for ForestBoSampler {
    fn kind(&self) -> SamplerKind {
        SamplerKind::ForestBo
    }

    fn propose(
        &mut self,
        space: &HpSpace,
        history: &[(HpConfig, f64)],
        rng: &mut dyn RngCore,
    ) -> Result<HpConfig> {
        let kappa = self.schedule.kappa(self.iteration);
        self.iteration += 1;

        let surrogate = if history.len() < 2 {
            ForestSurrogate::prior()
        } else {
            let xs: Vec<Vec<f64>> = history.iter().map(|(c, _)| Self::encode(c)).collect();
            let raw: Vec<f64> = history.iter().map(|&(_, y)| y).collect();
            let ys = transform_objective(&raw)?;
            fit_forest(&xs, &ys, self.n_trees, &mut *rng)
        };

        let pool: Vec<HpConfig> = if self.exhaustive {
            space.enumerate().collect()
        } else {
            (0..self.pool_size)
                .map(|_| sample_config(space, &mut *rng))
                .collect()
        };

        let mut best: Option<(f64, &HpConfig)> = None;
        for candidate in &pool {
            let (mu, sigma) = surrogate.predict(&Self::encode(candidate));
            let acq = mu + kappa * sigma;
            if best.is_none_or(|(b, _)| acq > b) {
                best = Some((acq, candidate));
            }
        }
        Ok(best.expect("pool is non-empty").1.clone())
    }
}
