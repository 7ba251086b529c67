//! The bi-level optimization loop.
//!
//! One outer iteration draws a configuration from the sampler and hands it
//! to the inner loop, which trains it epoch-by-epoch (a single model at a
//! time) until the policy stops it. Every consumed epoch increments one
//! global counter and appends one event to the log, including the final
//! model-selection phase, so the log alone re-derives every trajectory and
//! every budget figure. Runs are deterministic functions of their config.

mod event_log;
mod trial;

use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::benchmark::{build_benchmark, BenchSpec, Benchmark, HpConfig, HpSpace};
use crate::policies::{
    Decision, HyperbandPolicy, MaxFidelityPolicy, OneEpochPolicy, Policy, PolicyKind, RoberConfig,
    RoberPolicy, RungLadder, ShaPolicy, StopReason, TrialView,
};
use crate::samplers::{ForestBoSampler, RandomSampler, Sampler, SamplerKind, UcbSchedule};
use crate::seed::{child_rng, stream};
use crate::{Error, Result};

pub use event_log::{event_log_to_string, read_event_log, write_event_log, Event};
pub use trial::{TrialState, TrialStatus};

/// Everything a run needs. Field defaults mirror the CLI defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub bench: BenchSpec,
    /// Explicit search space; `None` uses the tabular default (synthetic
    /// regimes) or the file's config list.
    pub space: Option<HpSpace>,
    pub policy: PolicyKind,
    pub sampler: SamplerKind,
    /// Outer-loop iterations (configurations drawn).
    pub outer_iters: usize,
    /// Finalists trained to full fidelity by one-epoch model selection.
    pub top_k: usize,
    pub master_seed: u64,
    /// Resume top-K finalists from their checkpoints instead of retraining
    /// from scratch.
    pub resume_topk: bool,
    pub eta: usize,
    /// First rung of the halving ladder; `None` means `eta`.
    pub rung_base: Option<usize>,
    pub rober: RoberConfig,
    pub ucb: UcbSchedule,
    pub n_trees: usize,
    pub acq_pool: usize,
    pub exhaustive_acq: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            bench: BenchSpec::default(),
            space: None,
            policy: PolicyKind::MaxFidelity,
            sampler: SamplerKind::Random,
            outer_iters: 200,
            top_k: 3,
            master_seed: 0,
            resume_topk: false,
            eta: 3,
            rung_base: None,
            rober: RoberConfig::default(),
            ucb: UcbSchedule::default(),
            n_trees: 100,
            acq_pool: 1_000,
            exhaustive_acq: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.bench.validate()?;
        if self.outer_iters == 0 {
            return Err(Error::InvalidRunConfig("iters must be >= 1".into()));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidRunConfig("topk must be >= 1".into()));
        }
        if self.eta < 2 {
            return Err(Error::InvalidRunConfig("eta must be >= 2".into()));
        }
        self.rober.validate()?;
        self.ucb.validate()?;
        if self.n_trees == 0 || self.acq_pool == 0 {
            return Err(Error::InvalidRunConfig(
                "n_trees and acq_pool must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Complete log of one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub policy: String,
    pub sampler: String,
    pub master_seed: u64,
    pub z_max: usize,
    pub outer_iters: usize,
    /// Distinct trials actually started (Hyperband's bracket schedule may
    /// use fewer than `outer_iters`).
    pub n_trials: usize,
    pub events: Vec<Event>,
    pub cumulative_epochs: usize,
    pub selected_trial: usize,
    pub selected_config_id: String,
    pub selected_final_valid: f64,
    pub selected_final_test: f64,
    /// Trial with the best validation score at its own final epoch,
    /// regardless of fidelity reached; lets analysis compare against the
    /// fidelity-preferring selection rule.
    pub best_observed_trial: usize,
    pub trials: Vec<TrialState>,
    pub warnings: Vec<String>,
    /// Wall-time metadata; excluded from the event-log file so identical
    /// runs stay byte-identical.
    pub wall_time_ms: u128,
}

fn build_policy(cfg: &RunConfig, z_max: usize) -> Result<Box<dyn Policy>> {
    Ok(match cfg.policy {
        PolicyKind::MaxFidelity => Box::new(MaxFidelityPolicy::new(z_max)),
        PolicyKind::OneEpoch => Box::new(OneEpochPolicy),
        PolicyKind::Sha => {
            let base = cfg.rung_base.unwrap_or(cfg.eta).min(z_max);
            Box::new(ShaPolicy::new(RungLadder::new(cfg.eta, base, z_max)?))
        }
        PolicyKind::Hyperband => Box::new(HyperbandPolicy::new(z_max, cfg.eta)?),
        PolicyKind::Rober => Box::new(RoberPolicy::new(cfg.rober.clone(), z_max, cfg.master_seed)?),
    })
}

fn build_sampler(cfg: &RunConfig) -> Result<Box<dyn Sampler>> {
    Ok(match cfg.sampler {
        SamplerKind::Random => Box::new(RandomSampler),
        SamplerKind::ForestBo => Box::new(ForestBoSampler::new(
            cfg.ucb.clone(),
            cfg.n_trees,
            cfg.acq_pool,
            cfg.exhaustive_acq,
        )?),
    })
}

/// Queries epochs `checkpoint+1 ..= to_epoch`, appending to the trial.
/// Already-trained epochs are never re-consumed; resuming to the current
/// checkpoint is a no-op. Returns the new `(epoch, valid, test)` triples.
pub fn resume_trial(
    trial: &mut TrialState,
    to_epoch: usize,
    bench: &dyn Benchmark,
    replicate: u64,
) -> Result<Vec<(usize, f64, f64)>> {
    if to_epoch > bench.z_max() {
        return Err(Error::Engine {
            trial: trial.id,
            message: format!("resume target {to_epoch} beyond z_max {}", bench.z_max()),
        });
    }
    if to_epoch <= trial.checkpoint_epoch() {
        return Ok(Vec::new());
    }
    trial.reopen()?;
    let mut new = Vec::with_capacity(to_epoch - trial.checkpoint_epoch());
    while trial.checkpoint_epoch() < to_epoch {
        let epoch = trial.checkpoint_epoch() + 1;
        let (v, t) = bench.query(&trial.config, epoch, replicate)?;
        trial.push_epoch(epoch, v, t)?;
        new.push((epoch, v, t));
    }
    Ok(new)
}

struct SelectionOutcome {
    selected: usize,
    best_observed: usize,
}

/// Trains a trial to `z_max` during the selection phase, logging every
/// consumed epoch. `from_scratch` discards the checkpoint first (the
/// default accounting: a finalist costs a full `z_max` epochs).
fn selection_train(
    trial: &mut TrialState,
    from_scratch: bool,
    bench: &dyn Benchmark,
    replicate: u64,
    events: &mut Vec<Event>,
    cum_epochs: &mut usize,
) -> Result<()> {
    let z_max = bench.z_max();
    if from_scratch {
        trial.reset_for_retraining();
    }
    if trial.status() == TrialStatus::Completed {
        return Ok(());
    }
    let steps = if trial.checkpoint_epoch() < z_max {
        resume_trial(trial, z_max, bench, replicate)?
    } else {
        trial.reopen()?;
        Vec::new()
    };
    for (epoch, valid, test) in steps {
        *cum_epochs += 1;
        let decision = if epoch == z_max {
            Decision::Stop(StopReason::Completed).label()
        } else {
            Decision::Continue.label()
        };
        events.push(Event {
            trial: trial.id,
            epoch,
            valid,
            test,
            decision,
            cum_epochs: *cum_epochs,
        });
    }
    trial.complete();
    Ok(())
}

/// Stable argmax by validation score: earlier index wins ties.
fn argmax_by<F: Fn(&TrialState) -> f64>(ids: &[usize], trials: &[TrialState], key: F) -> usize {
    let mut best = ids[0];
    let mut best_score = key(&trials[best]);
    for &id in &ids[1..] {
        let s = key(&trials[id]);
        if s > best_score {
            best = id;
            best_score = s;
        }
    }
    best
}

fn model_select(
    cfg: &RunConfig,
    trials: &mut [TrialState],
    bench: &dyn Benchmark,
    replicate: u64,
    events: &mut Vec<Event>,
    cum_epochs: &mut usize,
    warnings: &mut Vec<String>,
) -> Result<SelectionOutcome> {
    let all: Vec<usize> = (0..trials.len()).collect();
    let best_observed = argmax_by(&all, trials, |t| {
        t.final_valid().unwrap_or(f64::NEG_INFINITY)
    });

    let selected = match cfg.policy {
        PolicyKind::OneEpoch => {
            let mut k = cfg.top_k;
            if k > trials.len() {
                warnings.push(format!(
                    "topk {k} exceeds trial count {}; clamping",
                    trials.len()
                ));
                k = trials.len();
            }
            // Rank by epoch-1 score, descending; stable sort keeps
            // submission order on ties.
            let mut ranked: Vec<usize> = (0..trials.len()).collect();
            ranked.sort_by(|&a, &b| {
                let sa = trials[a].valid_at(1).unwrap_or(f64::NEG_INFINITY);
                let sb = trials[b].valid_at(1).unwrap_or(f64::NEG_INFINITY);
                sb.partial_cmp(&sa).expect("finite scores")
            });
            let finalists = &ranked[..k];
            for &id in finalists {
                selection_train(
                    &mut trials[id],
                    !cfg.resume_topk,
                    bench,
                    replicate,
                    events,
                    cum_epochs,
                )?;
            }
            argmax_by(finalists, trials, |t| {
                t.final_valid().unwrap_or(f64::NEG_INFINITY)
            })
        }
        _ => {
            let completed: Vec<usize> = (0..trials.len())
                .filter(|&i| trials[i].status() == TrialStatus::Completed)
                .collect();
            if completed.is_empty() {
                // Nothing reached full fidelity (possible under patience or
                // aggressive extrapolation): finish the best candidate so
                // the returned model is always a max-fidelity one.
                warnings.push(format!(
                    "no trial completed; training trial {best_observed} to z_max for selection"
                ));
                selection_train(
                    &mut trials[best_observed],
                    true,
                    bench,
                    replicate,
                    events,
                    cum_epochs,
                )?;
                best_observed
            } else {
                argmax_by(&completed, trials, |t| {
                    t.final_valid().unwrap_or(f64::NEG_INFINITY)
                })
            }
        }
    };
    Ok(SelectionOutcome {
        selected,
        best_observed,
    })
}

/// Runs the full experiment: `T` outer iterations under the configured
/// sampler and policy, then model selection. Deterministic given the
/// config; every consumed epoch appears exactly once in the event log.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let started = Instant::now();

    let bench = build_benchmark(&cfg.bench, cfg.space.clone())?;
    let z_max = bench.z_max();
    let mut policy = build_policy(cfg, z_max)?;
    let mut sampler = build_sampler(cfg)?;
    let rng_stream = match cfg.sampler {
        SamplerKind::Random => stream::SAMPLER,
        SamplerKind::ForestBo => stream::FOREST,
    };
    let mut rng: ChaCha8Rng = child_rng(cfg.master_seed, rng_stream, &[]);
    let replicate = cfg.master_seed % bench.n_seeds();

    let n_trials = policy.max_trials(cfg.outer_iters);
    let mut warnings = Vec::new();
    let mut events = Vec::new();
    let mut cum_epochs = 0usize;
    let mut trials: Vec<TrialState> = Vec::with_capacity(n_trials);
    let mut sampler_history: Vec<(HpConfig, f64)> = Vec::with_capacity(n_trials);

    for t in 0..n_trials {
        let config = sampler.propose(bench.space(), &sampler_history, &mut rng)?;
        let mut trial = TrialState::new(t, config.clone());
        loop {
            let epoch = trial.checkpoint_epoch() + 1;
            let (valid, test) =
                bench
                    .query(&config, epoch, replicate)
                    .map_err(|e| Error::Engine {
                        trial: t,
                        message: e.to_string(),
                    })?;
            trial.push_epoch(epoch, valid, test)?;
            cum_epochs += 1;
            policy.observe(t, epoch, valid);
            let decision = policy.decide(TrialView {
                id: t,
                history: trial.history(),
            });
            events.push(Event {
                trial: t,
                epoch,
                valid,
                test,
                decision: decision.label(),
                cum_epochs,
            });
            match decision {
                Decision::Continue => {
                    debug_assert!(epoch < z_max, "policy continued at z_max");
                }
                Decision::Stop(StopReason::Completed) => {
                    trial.complete();
                    break;
                }
                Decision::Stop(StopReason::Budget) => {
                    trial.pause();
                    break;
                }
                Decision::Stop(reason) => {
                    trial.stop(reason);
                    break;
                }
            }
        }
        sampler_history.push((
            config,
            trial.best_valid().expect("trial trained >= 1 epoch"),
        ));
        trials.push(trial);
    }

    let outcome = model_select(
        cfg,
        &mut trials,
        bench.as_ref(),
        replicate,
        &mut events,
        &mut cum_epochs,
        &mut warnings,
    )?;

    debug_assert_eq!(cum_epochs, events.len());
    let selected = &trials[outcome.selected];
    Ok(RunRecord {
        policy: cfg.policy.as_str().to_string(),
        sampler: cfg.sampler.as_str().to_string(),
        master_seed: cfg.master_seed,
        z_max,
        outer_iters: cfg.outer_iters,
        n_trials,
        cumulative_epochs: cum_epochs,
        selected_trial: selected.id,
        selected_config_id: selected.config.id(),
        selected_final_valid: selected.final_valid().expect("selected trial trained"),
        selected_final_test: selected.final_test().expect("selected trial trained"),
        best_observed_trial: outcome.best_observed,
        events,
        trials,
        warnings,
        wall_time_ms: started.elapsed().as_millis(),
    })
}
