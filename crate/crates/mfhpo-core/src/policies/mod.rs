//! Inner-loop early-discarding policies.
//!
//! After every observed epoch the engine asks the active policy whether the
//! current trial keeps training. Policies are deterministic functions of
//! the trial history plus whatever peer state they maintain (rung score
//! tables, per-epoch score populations); the engine feeds that peer state
//! through [`Policy::observe`] and serializes all decisions, so identical
//! histories always produce identical decisions.

mod baselines;
mod hyperband;
mod rober;
mod sha;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use baselines::{MaxFidelityPolicy, OneEpochPolicy};
pub use hyperband::{hyperband_schedule, HyperbandPolicy};
pub use rober::{quartiles, RoberConfig, RoberPolicy};
pub use sha::{RungLadder, ShaPolicy};

/// Why a trial stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The policy's per-trial budget is exhausted (resumable later).
    Budget,
    /// Cut at a successive-halving rung.
    RungCut,
    /// Below the lower whisker of the score population at this epoch.
    Outlier,
    /// Extrapolated final score is worse than the incumbent with high
    /// probability.
    Extrapolation,
    /// No improvement for the configured number of epochs.
    Patience,
    /// Reached maximum fidelity.
    Completed,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Budget => "budget",
            StopReason::RungCut => "rung_cut",
            StopReason::Outlier => "outlier",
            StopReason::Extrapolation => "extrapolation",
            StopReason::Patience => "patience",
            StopReason::Completed => "completed",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Verdict for the current trial after its latest epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop(StopReason),
}

impl Decision {
    /// Event-log encoding: `continue` or `stop:<reason>`.
    pub fn label(&self) -> String {
        match self {
            Decision::Continue => "continue".to_string(),
            Decision::Stop(reason) => format!("stop:{reason}"),
        }
    }
}

/// What a policy sees of the trial under decision: its id and the
/// validation history observed so far, epochs contiguous from 1.
#[derive(Debug, Clone, Copy)]
pub struct TrialView<'a> {
    pub id: usize,
    pub history: &'a [(usize, f64)],
}

impl<'a> TrialView<'a> {
    pub fn latest(&self) -> (usize, f64) {
        *self.history.last().expect("trial has >= 1 observation")
    }
}

/// An early-discarding policy. `observe` is called once per epoch event
/// (for every trial) before `decide` runs for the trial that produced it.
pub trait Policy {
    fn kind(&self) -> PolicyKind;

    /// Records a score so later decisions can compare against peers.
    fn observe(&mut self, _trial: usize, _epoch: usize, _valid: f64) {}

    /// Decides whether the trial keeps training after its latest epoch.
    fn decide(&mut self, trial: TrialView<'_>) -> Decision;

    /// How many trials this policy runs given `t_outer` outer iterations.
    fn max_trials(&self, t_outer: usize) -> usize {
        t_outer
    }
}

/// Which policy drives the inner loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    MaxFidelity,
    OneEpoch,
    Sha,
    Hyperband,
    Rober,
}

impl PolicyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::MaxFidelity => "max_fidelity",
            PolicyKind::OneEpoch => "one_epoch",
            PolicyKind::Sha => "sha",
            PolicyKind::Hyperband => "hyperband",
            PolicyKind::Rober => "rober",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "max_fidelity" => Some(PolicyKind::MaxFidelity),
            "one_epoch" => Some(PolicyKind::OneEpoch),
            "sha" => Some(PolicyKind::Sha),
            "hyperband" => Some(PolicyKind::Hyperband),
            "rober" => Some(PolicyKind::Rober),
            _ => None,
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
