//! Run-config assembly: defaults, then file values, then CLI flags, the
//! later winning. The file grammar is one `key = value` per line with `#`
//! comments; unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::PathBuf;

use mfhpo_core::benchmark::{BenchSpec, Regime};
use mfhpo_core::engine::RunConfig;
use mfhpo_core::policies::PolicyKind;
use mfhpo_core::samplers::SamplerKind;
use mfhpo_core::Error as CoreError;

use crate::RunOpts;

pub const SEED_ENV: &str = "MFHPO_SEED";

fn bad(msg: String) -> CoreError {
    CoreError::InvalidRunConfig(msg)
}

/// Parses the plain-text run-config grammar into a key-value map.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CoreError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected `key = value`", i + 1)))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(bad(format!("line {}: empty key or value", i + 1)));
        }
        if out.insert(key.clone(), value).is_some() {
            return Err(bad(format!("line {}: duplicate key {key:?}", i + 1)));
        }
    }
    Ok(out)
}

const KNOWN_KEYS: &[&str] = &[
    "policy",
    "sampler",
    "iters",
    "topk",
    "zmax",
    "seed",
    "regime",
    "noise_sigma",
    "bench_seed",
    "n_seeds",
    "bench_path",
    "eta",
    "rung_base",
    "tau",
    "n_patience",
    "z_min",
    "check_from",
    "rober_samples",
    "predictive_noise",
    "resume_topk",
    "kappa_max",
    "kappa_lambda",
    "kappa_period",
    "acq_pool",
    "n_trees",
    "exhaustive_acq",
];

struct KeySource {
    map: BTreeMap<String, String>,
}

impl KeySource {
    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CoreError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| bad(format!("bad value {v:?} for key {key:?}"))),
        }
    }

    fn get_bool(&self, key: &str) -> Result<Option<bool>, CoreError> {
        match self.map.get(key).map(String::as_str) {
            None => Ok(None),
            Some("true" | "1" | "yes") => Ok(Some(true)),
            Some("false" | "0" | "no") => Ok(Some(false)),
            Some(v) => Err(bad(format!("bad boolean {v:?} for key {key:?}"))),
        }
    }
}

/// Builds the effective run config. Seed resolution order: flag, file,
/// `MFHPO_SEED`, default 0.
pub fn build_run_config(opts: &RunOpts) -> Result<RunConfig, CoreError> {
    let file_map = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let map = parse_config_file(&text)?;
            for key in map.keys() {
                if !KNOWN_KEYS.contains(&key.as_str()) {
                    return Err(bad(format!("unknown run-config key {key:?}")));
                }
            }
            map
        }
        None => BTreeMap::new(),
    };
    let file = KeySource { map: file_map };
    let mut cfg = RunConfig::default();

    // Policy and sampler names.
    let policy_name = opts
        .policy
        .clone()
        .or(file.get::<String>("policy")?)
        .unwrap_or_else(|| "max_fidelity".into());
    cfg.policy = PolicyKind::parse(&policy_name)
        .ok_or_else(|| bad(format!("unknown policy {policy_name:?}")))?;
    let sampler_name = opts
        .sampler
        .clone()
        .or(file.get::<String>("sampler")?)
        .unwrap_or_else(|| "random".into());
    cfg.sampler = SamplerKind::parse(&sampler_name)
        .ok_or_else(|| bad(format!("unknown sampler {sampler_name:?}")))?;

    // Outer loop.
    cfg.outer_iters = opts.iters.or(file.get("iters")?).unwrap_or(200);
    cfg.top_k = opts.topk.or(file.get("topk")?).unwrap_or(3);
    cfg.master_seed = match opts.seed.or(file.get("seed")?) {
        Some(s) => s,
        None => match std::env::var(SEED_ENV) {
            Ok(v) => v
                .parse()
                .map_err(|_| bad(format!("bad {SEED_ENV} value {v:?}")))?,
            Err(_) => 0,
        },
    };
    cfg.resume_topk = opts
        .resume_topk
        .then_some(true)
        .or(file.get_bool("resume_topk")?)
        .unwrap_or(false);

    // Benchmark.
    let regime_name = opts
        .regime
        .clone()
        .or(file.get::<String>("regime")?)
        .unwrap_or_else(|| "dominant".into());
    let regime = match regime_name.as_str() {
        "dominant" => Regime::Dominant,
        "crossing" => Regime::Crossing,
        "file" => Regime::File,
        other => return Err(bad(format!("unknown regime {other:?}"))),
    };
    cfg.bench = BenchSpec {
        regime,
        z_max: opts.zmax.or(file.get("zmax")?).unwrap_or(100),
        noise_sigma: opts.noise_sigma.or(file.get("noise_sigma")?).unwrap_or(0.0),
        n_seeds: opts.n_seeds.or(file.get("n_seeds")?).unwrap_or(1),
        master_seed: opts.bench_seed.or(file.get("bench_seed")?).unwrap_or(0),
        source_path: opts
            .bench_path
            .clone()
            .or(file.get::<PathBuf>("bench_path")?),
    };

    // Halving ladder.
    cfg.eta = opts.eta.or(file.get("eta")?).unwrap_or(3);
    cfg.rung_base = opts.rung_base.or(file.get("rung_base")?);

    // Early rejection.
    if let Some(tau) = opts.tau.or(file.get("tau")?) {
        cfg.rober.tau = tau;
    }
    if let Some(n) = opts.n_patience.or(file.get("n_patience")?) {
        cfg.rober.n_patience = n;
    }
    if let Some(z) = opts.z_min.or(file.get("z_min")?) {
        cfg.rober.z_min = z;
    }
    if let Some(c) = opts.check_from.or(file.get("check_from")?) {
        cfg.rober.check_from = c;
    }
    if let Some(n) = opts.rober_samples.or(file.get("rober_samples")?) {
        cfg.rober.n_samples = n;
    }
    if let Some(b) = file.get_bool("predictive_noise")? {
        cfg.rober.predictive_noise = b;
    }
    if opts.no_predictive_noise {
        cfg.rober.predictive_noise = false;
    }

    // Acquisition.
    if let Some(k) = opts.kappa_max.or(file.get("kappa_max")?) {
        cfg.ucb.kappa_max = k;
    }
    if let Some(l) = opts.kappa_lambda.or(file.get("kappa_lambda")?) {
        cfg.ucb.lambda = l;
    }
    if let Some(p) = opts.kappa_period.or(file.get("kappa_period")?) {
        cfg.ucb.period = p;
    }
    cfg.acq_pool = opts.acq_pool.or(file.get("acq_pool")?).unwrap_or(1_000);
    cfg.n_trees = opts.n_trees.or(file.get("n_trees")?).unwrap_or(100);
    cfg.exhaustive_acq = opts
        .exhaustive_acq
        .then_some(true)
        .or(file.get_bool("exhaustive_acq")?)
        .unwrap_or(false);

    cfg.validate()?;
    Ok(cfg)
}
