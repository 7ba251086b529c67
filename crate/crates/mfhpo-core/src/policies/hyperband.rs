//! Hyperband: a fixed schedule of successive-halving brackets that start
//! at different fidelities, trading extra epochs for robustness to noisy
//! low-fidelity scores.

use std::collections::BTreeMap;

use super::sha::{RungLadder, RungTable, ShaPolicy};
use super::{Decision, Policy, PolicyKind, TrialView};
use crate::Result;

/// Bracket ladder: `s_max = floor(log_eta(z_max))`; bracket `s` (from
/// `s_max` down to 0) runs `ceil((s_max+1)/(s+1)) * eta^s` configs starting
/// at fidelity `max(1, floor(z_max * eta^-s))`.
pub fn hyperband_schedule(z_max: usize, eta: usize) -> Vec<(usize, usize)> {
    assert!(eta >= 2, "eta must be >= 2");
    assert!(z_max >= eta, "z_max must be >= eta");
    let mut s_max = 0usize;
    let mut power = eta;
    while power <= z_max {
        s_max += 1;
        match power.checked_mul(eta) {
            Some(next) => power = next,
            None => break,
        }
    }
    (0..=s_max)
        .rev()
        .map(|s| {
            let n = (s_max + 1).div_ceil(s + 1) * eta.pow(s as u32);
            let r = (z_max / eta.pow(s as u32)).max(1);
            (n, r)
        })
        .collect()
}

struct Bracket {
    ladder: RungLadder,
    tables: BTreeMap<usize, RungTable>,
}

/// Runs the bracket schedule over the engine's sequential trial stream:
/// trial ids fill bracket `s_max` first, then the next bracket, and so on.
/// Each bracket keeps its own rung tables.
pub struct HyperbandPolicy {
    brackets: Vec<Bracket>,
    /// Exclusive cumulative trial-count boundary per bracket.
    boundaries: Vec<usize>,
}

impl HyperbandPolicy {
    pub fn new(z_max: usize, eta: usize) -> Result<Self> {
        let schedule = hyperband_schedule(z_max, eta);
        let mut brackets = Vec::with_capacity(schedule.len());
        let mut boundaries = Vec::with_capacity(schedule.len());
        let mut cum = 0;
        for (n, r) in schedule {
            brackets.push(Bracket {
                ladder: RungLadder::new(eta, r, z_max)?,
                tables: BTreeMap::new(),
            });
            cum += n;
            boundaries.push(cum);
        }
        Ok(Self {
            brackets,
            boundaries,
        })
    }

    pub fn schedule_total(&self) -> usize {
        *self.boundaries.last().expect("at least one bracket")
    }

    fn bracket_of(&self, trial: usize) -> usize {
        self.boundaries
            .iter()
            .position(|&b| trial < b)
            .unwrap_or(self.brackets.len() - 1)
    }
}

impl Policy for HyperbandPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Hyperband
    }

    fn decide(&mut self, trial: TrialView<'_>) -> Decision {
        let b = self.bracket_of(trial.id);
        let bracket = &mut self.brackets[b];
        ShaPolicy::decide_with(&bracket.ladder, &mut bracket.tables, trial)
    }

    fn max_trials(&self, t_outer: usize) -> usize {
        self.schedule_total().min(t_outer)
    }
}
