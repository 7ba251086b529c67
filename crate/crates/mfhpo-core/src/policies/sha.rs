//! Asynchronous successive halving over a geometric rung ladder.

use std::collections::BTreeMap;

use super::{Decision, Policy, PolicyKind, StopReason, TrialView};
use crate::{Error, Result};

/// Rungs at `min_fidelity * eta^k`, capped at `z_max`.
#[derive(Debug, Clone)]
pub struct RungLadder {
    eta: usize,
    rungs: Vec<usize>,
    z_max: usize,
}

impl RungLadder {
    pub fn new(eta: usize, min_fidelity: usize, z_max: usize) -> Result<Self> {
        if eta < 2 {
            return Err(Error::InvalidRunConfig("eta must be >= 2".into()));
        }
        if min_fidelity < 1 || min_fidelity > z_max {
            return Err(Error::InvalidRunConfig(format!(
                "rung base must be in 1..={z_max}, got {min_fidelity}"
            )));
        }
        let mut rungs = Vec::new();
        let mut r = min_fidelity;
        while r <= z_max {
            rungs.push(r);
            match r.checked_mul(eta) {
                Some(next) => r = next,
                None => break,
            }
        }
        Ok(Self { eta, rungs, z_max })
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    pub fn rungs(&self) -> &[usize] {
        &self.rungs
    }

    pub fn is_rung(&self, epoch: usize) -> bool {
        self.rungs.binary_search(&epoch).is_ok()
    }
}

#[derive(Debug, Clone, Default)]
pub(super) struct RungTable {
    scores: Vec<f64>,
}

/// Asynchronous successive halving with the stopping rule: at each rung a
/// trial continues only if its score is in the top `ceil(n/eta)` of the
/// `n` scores recorded at that rung so far (itself included). Decisions
/// are made against currently available peers, so the first arrival at a
/// rung is always promoted and a new best is never cut.
#[derive(Debug, Clone)]
pub struct ShaPolicy {
    ladder: RungLadder,
    tables: BTreeMap<usize, RungTable>,
}

impl ShaPolicy {
    pub fn new(ladder: RungLadder) -> Self {
        Self {
            ladder,
            tables: BTreeMap::new(),
        }
    }

    pub fn ladder(&self) -> &RungLadder {
        &self.ladder
    }

    /// Promote/cut rule for one arrival; shared with Hyperband brackets.
    pub(super) fn rung_decision(table: &mut RungTable, score: f64, eta: usize) -> Decision {
        table.scores.push(score);
        let n = table.scores.len();
        let quota = n.div_ceil(eta);
        // Rank 1 = best; ties share the better rank.
        let rank = 1 + table.scores.iter().filter(|&&s| s > score).count();
        if rank <= quota {
            Decision::Continue
        } else {
            Decision::Stop(StopReason::RungCut)
        }
    }

    pub(super) fn decide_with(
        ladder: &RungLadder,
        tables: &mut BTreeMap<usize, RungTable>,
        trial: TrialView<'_>,
    ) -> Decision {
        let (epoch, score) = trial.latest();
        if epoch >= ladder.z_max {
            return Decision::Stop(StopReason::Completed);
        }
        if !ladder.is_rung(epoch) {
            return Decision::Continue;
        }
        let table = tables.entry(epoch).or_default();
        Self::rung_decision(table, score, ladder.eta)
    }
}

impl Policy for ShaPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Sha
    }

    fn decide(&mut self, trial: TrialView<'_>) -> Decision {
        Self::decide_with(&self.ladder, &mut self.tables, trial)
    }
}
