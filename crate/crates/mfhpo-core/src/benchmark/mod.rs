//! Search spaces and deterministic learning-curve benchmarks.
//!
//! A [`Benchmark`] maps `(config, epoch, seed)` to a pair of scores
//! `(valid, test)`, larger is better. Two backends exist: a synthetic
//! generator built on the saturating four-parameter curve model
//! ([`SyntheticBenchmark`]) and a file-backed curve table
//! ([`FileBenchmark`]). Both are immutable after construction, so handles
//! can be queried concurrently.

mod synthetic;
mod table;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use synthetic::SyntheticBenchmark;
pub use table::{
    export_curve_table, load_curve_table, read_curve_table, write_curve_table, CurveTable,
    FileBenchmark, TABLE_HEADER,
};

/// One categorical dimension of a search space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HpDimension {
    pub name: String,
    pub choices: Vec<String>,
}

/// An ordered list of categorical dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HpSpace {
    dimensions: Vec<HpDimension>,
}

impl HpSpace {
    /// Builds a space, rejecting empty dimension lists, empty choice lists,
    /// and duplicate names.
    pub fn new(dimensions: Vec<HpDimension>) -> Result<Self> {
        if dimensions.is_empty() {
            return Err(Error::InvalidSpace("no dimensions".into()));
        }
        let mut names = BTreeSet::new();
        for dim in &dimensions {
            if dim.choices.is_empty() {
                return Err(Error::InvalidSpace(format!(
                    "dimension {:?} has no choices",
                    dim.name
                )));
            }
            if !names.insert(dim.name.clone()) {
                return Err(Error::InvalidSpace(format!(
                    "duplicate dimension name {:?}",
                    dim.name
                )));
            }
        }
        Ok(Self { dimensions })
    }

    /// The two-layer fully-connected tabular space: 9 dimensions, 62,208
    /// total configurations.
    pub fn fcnet_tabular() -> Self {
        let dim = |name: &str, choices: &[&str]| HpDimension {
            name: name.to_string(),
            choices: choices.iter().map(|c| c.to_string()).collect(),
        };
        Self::new(vec![
            dim(
                "initial_lr",
                &["0.0005", "0.001", "0.005", "0.01", "0.05", "0.1"],
            ),
            dim("batch_size", &["8", "16", "32", "64"]),
            dim("lr_schedule", &["cosine", "fix"]),
            dim("activation_l1", &["relu", "tanh"]),
            dim("activation_l2", &["relu", "tanh"]),
            dim("layer1_size", &["16", "32", "64", "128", "256", "512"]),
            dim("layer2_size", &["16", "32", "64", "128", "256", "512"]),
            dim("dropout_l1", &["0.0", "0.3", "0.6"]),
            dim("dropout_l2", &["0.0", "0.3", "0.6"]),
        ])
        .expect("static space is valid")
    }

    pub fn dimensions(&self) -> &[HpDimension] {
        &self.dimensions
    }

    /// Total number of configurations (product of arities).
    pub fn cardinality(&self) -> u128 {
        self.dimensions
            .iter()
            .map(|d| d.choices.len() as u128)
            .product()
    }

    /// Validates that `values` index into this space.
    pub fn check_config(&self, config: &HpConfig) -> Result<()> {
        if config.values.len() != self.dimensions.len() {
            return Err(Error::ConfigMismatch(format!(
                "expected {} values, got {}",
                self.dimensions.len(),
                config.values.len()
            )));
        }
        for (dim, &v) in self.dimensions.iter().zip(&config.values) {
            if v >= dim.choices.len() {
                return Err(Error::ConfigMismatch(format!(
                    "index {} out of range for dimension {:?} (arity {})",
                    v,
                    dim.name,
                    dim.choices.len()
                )));
            }
        }
        Ok(())
    }

    /// Enumerates every configuration in row-major order. Intended for
    /// exhaustive acquisition over small spaces.
    pub fn enumerate(&self) -> impl Iterator<Item = HpConfig> + '_ {
        let arities: Vec<usize> = self.dimensions.iter().map(|d| d.choices.len()).collect();
        let total = self.cardinality();
        (0..total).map(move |mut i| {
            let mut values = vec![0usize; arities.len()];
            for (slot, &arity) in values.iter_mut().zip(&arities).rev() {
                *slot = (i % arity as u128) as usize;
                i /= arity as u128;
            }
            HpConfig { values }
        })
    }
}

/// One point in a search space: a choice index per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HpConfig {
    values: Vec<usize>,
}

impl HpConfig {
    pub fn new(space: &HpSpace, values: Vec<usize>) -> Result<Self> {
        let config = Self { values };
        space.check_config(&config)?;
        Ok(config)
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    /// Stable printable id, e.g. `3-0-1-1-0-4-2-0-1`.
    pub fn id(&self) -> String {
        self.values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }
}

impl fmt::Display for HpConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Draws one configuration uniformly over the Cartesian product.
pub fn sample_config(space: &HpSpace, rng: &mut (impl Rng + ?Sized)) -> HpConfig {
    let values = space
        .dimensions
        .iter()
        .map(|d| rng.gen_range(0..d.choices.len()))
        .collect();
    HpConfig { values }
}

/// Samples `n` distinct configurations (rejection on duplicates).
pub fn sample_distinct_configs(
    space: &HpSpace,
    n: usize,
    rng: &mut (impl Rng + ?Sized),
) -> Result<Vec<HpConfig>> {
    if (n as u128) > space.cardinality() {
        return Err(Error::InvalidSpec(format!(
            "cannot sample {} distinct configs from a space of {}",
            n,
            space.cardinality()
        )));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let c = sample_config(space, rng);
        if seen.insert(c.clone()) {
            out.push(c);
        }
    }
    Ok(out)
}

/// Which synthetic curve family (or file source) backs a benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Curves never cross: the ranking at epoch 1 is the final ranking.
    Dominant,
    /// Early and asymptotic quality are drawn independently, so a fraction
    /// of config pairs rank-invert between epoch 1 and the final epoch.
    Crossing,
    /// Curves come from a stored table.
    File,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Dominant => f.write_str("dominant"),
            Regime::Crossing => f.write_str("crossing"),
            Regime::File => f.write_str("file"),
        }
    }
}

/// Construction parameters for a benchmark.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchSpec {
    pub regime: Regime,
    pub z_max: usize,
    pub noise_sigma: f64,
    pub n_seeds: u64,
    pub master_seed: u64,
    pub source_path: Option<PathBuf>,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            regime: Regime::Dominant,
            z_max: 100,
            noise_sigma: 0.0,
            n_seeds: 1,
            master_seed: 0,
            source_path: None,
        }
    }
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.z_max < 1 {
            return Err(Error::InvalidSpec("z_max must be >= 1".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidSpec("noise_sigma must be >= 0".into()));
        }
        if self.n_seeds < 1 {
            return Err(Error::InvalidSpec("n_seeds must be >= 1".into()));
        }
        if self.regime == Regime::File && self.source_path.is_none() {
            return Err(Error::InvalidSpec("file regime needs source_path".into()));
        }
        Ok(())
    }
}

/// Per-epoch validation and test scores for one config and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub config_id: String,
    pub seed: u64,
    pub valid: Vec<f64>,
    pub test: Vec<f64>,
}

impl LearningCurve {
    pub fn z_max(&self) -> usize {
        self.valid.len()
    }
}

/// Deterministic oracle mapping `(config, epoch, seed)` to scores.
///
/// `query` is a pure function of its arguments for a fixed handle;
/// handles carry no interior mutability.
pub trait Benchmark: Send + Sync {
    fn space(&self) -> &HpSpace;
    fn z_max(&self) -> usize;
    fn n_seeds(&self) -> u64;

    /// Returns `(valid, test)` for one epoch. `epoch` is 1-based.
    fn query(&self, config: &HpConfig, epoch: usize, seed: u64) -> Result<(f64, f64)>;

    /// Convenience: the complete curve for one config and seed.
    fn full_curve(&self, config: &HpConfig, seed: u64) -> Result<LearningCurve> {
        let z_max = self.z_max();
        let mut valid = Vec::with_capacity(z_max);
        let mut test = Vec::with_capacity(z_max);
        for epoch in 1..=z_max {
            let (v, t) = self.query(config, epoch, seed)?;
            valid.push(v);
            test.push(t);
        }
        Ok(LearningCurve {
            config_id: config.id(),
            seed,
            valid,
            test,
        })
    }
}

/// Builds a benchmark from a spec: synthetic regimes on the given space
/// (the tabular default if `None`), file regime from its source path.
pub fn build_benchmark(spec: &BenchSpec, space: Option<HpSpace>) -> Result<Box<dyn Benchmark>> {
    spec.validate()?;
    match spec.regime {
        Regime::File => {
            let path = spec.source_path.as_ref().expect("validated");
            Ok(Box::new(FileBenchmark::load(path)?))
        }
        Regime::Dominant | Regime::Crossing => {
            let space = space.unwrap_or_else(HpSpace::fcnet_tabular);
            Ok(Box::new(SyntheticBenchmark::new(spec.clone(), space)?))
        }
    }
}
