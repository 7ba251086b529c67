//! The two fixed-fidelity baselines: train everything to the end, or train
//! everything for exactly one epoch and let model selection finish the job.

use super::{Decision, Policy, PolicyKind, StopReason, TrialView};

/// Trains every trial to maximum fidelity.
#[derive(Debug, Clone)]
pub struct MaxFidelityPolicy {
    z_max: usize,
}

impl MaxFidelityPolicy {
    pub fn new(z_max: usize) -> Self {
        Self { z_max }
    }
}

impl Policy for MaxFidelityPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::MaxFidelity
    }

    fn decide(&mut self, trial: TrialView<'_>) -> Decision {
        let (epoch, _) = trial.latest();
        if epoch >= self.z_max {
            Decision::Stop(StopReason::Completed)
        } else {
            Decision::Continue
        }
    }
}

/// Stops every trial after its first epoch. The engine's model-selection
/// phase later trains the top-K of these one-epoch scores to full fidelity.
#[derive(Debug, Clone, Default)]
pub struct OneEpochPolicy;

impl Policy for OneEpochPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::OneEpoch
    }

    fn decide(&mut self, _trial: TrialView<'_>) -> Decision {
        Decision::Stop(StopReason::Budget)
    }
}
