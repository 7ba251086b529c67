//! Synthetic curve generator: a stable hash of (master seed, config) picks
//! ground-truth curve parameters, and per-epoch Gaussian noise is keyed the
//! same way, so every query is a pure function of its arguments.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{BenchSpec, Benchmark, HpConfig, HpSpace, Regime};
use crate::curve_model::mmf4_eval;
use crate::seed::child_rng;
use crate::{Error, Result};

const TAG_THETA: u64 = 10;
const TAG_FAMILY: u64 = 11;
const TAG_NOISE_VALID: u64 = 12;
const TAG_NOISE_TEST: u64 = 13;

// Ground-truth parameter ranges: early value in [0.1, 0.5], asymptote in
// [0.5, 1.0], transition shape t1 in [1, 50], t3 in [0.5, 3].
const T0_LO: f64 = 0.1;
const T0_SPAN: f64 = 0.4;
const T2_LO: f64 = 0.5;
const T2_SPAN: f64 = 0.5;
const T1_LO: f64 = 1.0;
const T1_SPAN: f64 = 49.0;
const T3_LO: f64 = 0.5;
const T3_SPAN: f64 = 2.5;

/// Benchmark whose curves are saturating model curves plus optional noise.
///
/// Dominant regime: one shared transition shape for the whole family and
/// early value / asymptote both increasing in a single per-config quality
/// draw, so curves never cross. Crossing regime: all four parameters drawn
/// independently per config, so early and final rankings disagree for a
/// fraction of pairs.
pub struct SyntheticBenchmark {
    spec: BenchSpec,
    space: HpSpace,
    /// Shared (t1, t3) for the dominant family.
    family: Option<(f64, f64)>,
}

impl SyntheticBenchmark {
    pub fn new(spec: BenchSpec, space: HpSpace) -> Result<Self> {
        spec.validate()?;
        if spec.regime == Regime::File {
            return Err(Error::InvalidSpec(
                "file regime is handled by FileBenchmark".into(),
            ));
        }
        let family = match spec.regime {
            Regime::Dominant => {
                let mut rng = child_rng(spec.master_seed, TAG_FAMILY, &[]);
                let t1 = T1_LO + T1_SPAN * rng.gen::<f64>();
                let t3 = T3_LO + T3_SPAN * rng.gen::<f64>();
                Some((t1, t3))
            }
            _ => None,
        };
        Ok(Self {
            spec,
            space,
            family,
        })
    }

    pub fn spec(&self) -> &BenchSpec {
        &self.spec
    }

    fn config_words(config: &HpConfig) -> Vec<u64> {
        config.values().iter().map(|&v| v as u64).collect()
    }

    /// The exact curve parameters behind a config's noiseless scores.
    pub fn ground_truth_theta(&self, config: &HpConfig) -> Result<[f64; 4]> {
        self.space.check_config(config)?;
        let words = Self::config_words(config);
        let mut rng = child_rng(self.spec.master_seed, TAG_THETA, &words);
        Ok(match self.spec.regime {
            Regime::Dominant => {
                let (t1, t3) = self.family.expect("dominant family set");
                let quality = rng.gen::<f64>();
                [T0_LO + T0_SPAN * quality, t1, T2_LO + T2_SPAN * quality, t3]
            }
            Regime::Crossing => [
                T0_LO + T0_SPAN * rng.gen::<f64>(),
                T1_LO + T1_SPAN * rng.gen::<f64>(),
                T2_LO + T2_SPAN * rng.gen::<f64>(),
                T3_LO + T3_SPAN * rng.gen::<f64>(),
            ],
            Regime::File => unreachable!("rejected in new"),
        })
    }

    fn noise(&self, tag: u64, config: &HpConfig, epoch: usize, seed: u64) -> f64 {
        if self.spec.noise_sigma == 0.0 {
            return 0.0;
        }
        let mut words = Self::config_words(config);
        words.push(seed);
        words.push(epoch as u64);
        let mut rng = child_rng(self.spec.master_seed, tag, &words);
        let e: f64 = StandardNormal.sample(&mut rng);
        self.spec.noise_sigma * e
    }
}

impl Benchmark for SyntheticBenchmark {
    fn space(&self) -> &HpSpace {
        &self.space
    }

    fn z_max(&self) -> usize {
        self.spec.z_max
    }

    fn n_seeds(&self) -> u64 {
        self.spec.n_seeds
    }

    fn query(&self, config: &HpConfig, epoch: usize, seed: u64) -> Result<(f64, f64)> {
        if epoch < 1 || epoch > self.spec.z_max {
            return Err(Error::EpochOutOfRange {
                epoch,
                z_max: self.spec.z_max,
            });
        }
        if seed >= self.spec.n_seeds {
            return Err(Error::SeedOutOfRange {
                seed,
                n_seeds: self.spec.n_seeds,
            });
        }
        let theta = self.ground_truth_theta(config)?;
        let mean = mmf4_eval(theta, epoch as f64);
        let valid = mean + self.noise(TAG_NOISE_VALID, config, epoch, seed);
        let test = mean + self.noise(TAG_NOISE_TEST, config, epoch, seed);
        Ok((valid, test))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::sample_config;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(regime: Regime, noise: f64) -> BenchSpec {
        BenchSpec {
            regime,
            z_max: 100,
            noise_sigma: noise,
            n_seeds: 2,
            master_seed: 42,
            source_path: None,
        }
    }

    fn bench(regime: Regime, noise: f64) -> SyntheticBenchmark {
        SyntheticBenchmark::new(spec(regime, noise), HpSpace::fcnet_tabular()).unwrap()
    }

    #[test]
    fn zero_noise_query_equals_model_value() {
        let b = bench(Regime::Dominant, 0.0);
        let config = HpConfig::new(b.space(), vec![0; 9]).unwrap();
        let theta = b.ground_truth_theta(&config).unwrap();
        let (v, t) = b.query(&config, 100, 0).unwrap();
        assert_eq!(v, mmf4_eval(theta, 100.0));
        assert_eq!(t, v);
    }

    #[test]
    fn query_is_pure() {
        let b = bench(Regime::Crossing, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..32 {
            let config = sample_config(b.space(), &mut rng);
            let epoch = rng.gen_range(1..=100);
            let seed = rng.gen_range(0..2);
            assert_eq!(
                b.query(&config, epoch, seed).unwrap(),
                b.query(&config, epoch, seed).unwrap()
            );
        }
    }

    #[test]
    fn valid_and_test_noise_are_independent() {
        let b = bench(Regime::Dominant, 0.1);
        let config = HpConfig::new(b.space(), vec![1; 9]).unwrap();
        let (v, t) = b.query(&config, 3, 0).unwrap();
        assert_ne!(v, t);
    }

    #[test]
    fn dominant_curves_never_cross() {
        // Exhaustive over z = 1..=100 for 100 sampled pairs at zero noise.
        let b = bench(Regime::Dominant, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = sample_config(b.space(), &mut rng);
            let c = sample_config(b.space(), &mut rng);
            let (va1, _) = b.query(&a, 1, 0).unwrap();
            let (vc1, _) = b.query(&c, 1, 0).unwrap();
            if va1 == vc1 {
                continue; // identical configs sampled
            }
            let a_leads = va1 > vc1;
            for z in 1..=100 {
                let (va, _) = b.query(&a, z, 0).unwrap();
                let (vc, _) = b.query(&c, z, 0).unwrap();
                assert_eq!(va > vc, a_leads, "rank flip at z = {z}");
            }
        }
    }

    #[test]
    fn crossing_regime_has_rank_inversions() {
        let b = bench(Regime::Crossing, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut inversions = 0;
        for _ in 0..1_000 {
            let a = sample_config(b.space(), &mut rng);
            let c = sample_config(b.space(), &mut rng);
            let (va1, _) = b.query(&a, 1, 0).unwrap();
            let (vc1, _) = b.query(&c, 1, 0).unwrap();
            let (vaz, _) = b.query(&a, 100, 0).unwrap();
            let (vcz, _) = b.query(&c, 100, 0).unwrap();
            if (va1 > vc1) != (vaz > vcz) {
                inversions += 1;
            }
        }
        assert!(inversions > 0, "no rank inversion in 1,000 pairs");
    }

    #[test]
    fn epoch_and_seed_bounds_are_enforced() {
        let b = bench(Regime::Dominant, 0.0);
        let config = HpConfig::new(b.space(), vec![0; 9]).unwrap();
        assert!(matches!(
            b.query(&config, 0, 0),
            Err(Error::EpochOutOfRange { .. })
        ));
        assert!(matches!(
            b.query(&config, 101, 0),
            Err(Error::EpochOutOfRange { .. })
        ));
        assert!(matches!(
            b.query(&config, 1, 2),
            Err(Error::SeedOutOfRange { .. })
        ));
        let bad = HpConfig::new(&HpSpace::fcnet_tabular(), vec![0; 9]).unwrap();
        let tiny_space = HpSpace::new(vec![super::super::HpDimension {
            name: "x".into(),
            choices: vec!["a".into(), "b".into()],
        }])
        .unwrap();
        let b2 = SyntheticBenchmark::new(spec(Regime::Dominant, 0.0), tiny_space).unwrap();
        assert!(b2.query(&bad, 1, 0).is_err());
    }
}
