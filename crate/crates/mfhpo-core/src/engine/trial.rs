//! Per-trial training state.

use serde::{Deserialize, Serialize};

use crate::benchmark::HpConfig;
use crate::policies::StopReason;
use crate::{Error, Result};

/// Lifecycle of a trial. Transitions move forward only; `Paused` may
/// return to `Running`, the terminal states may not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Running,
    Paused,
    Stopped(StopReason),
    Completed,
}

/// Training progress of one configuration: contiguous epoch history for
/// validation and test scores, plus the checkpoint the trial can resume
/// from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialState {
    pub id: usize,
    pub config: HpConfig,
    history: Vec<(usize, f64)>,
    test_history: Vec<(usize, f64)>,
    status: TrialStatus,
}

impl TrialState {
    pub fn new(id: usize, config: HpConfig) -> Self {
        Self {
            id,
            config,
            history: Vec::new(),
            test_history: Vec::new(),
            status: TrialStatus::Running,
        }
    }

    pub fn history(&self) -> &[(usize, f64)] {
        &self.history
    }

    pub fn test_history(&self) -> &[(usize, f64)] {
        &self.test_history
    }

    pub fn status(&self) -> TrialStatus {
        self.status
    }

    /// Last completed epoch; 0 before any training.
    pub fn checkpoint_epoch(&self) -> usize {
        self.history.last().map_or(0, |&(z, _)| z)
    }

    pub fn is_terminal(&self) -> bool {
        matches!(
            self.status,
            TrialStatus::Stopped(_) | TrialStatus::Completed
        )
    }

    /// Appends one epoch of scores. Epochs must stay contiguous and the
    /// trial must be running.
    pub fn push_epoch(&mut self, epoch: usize, valid: f64, test: f64) -> Result<()> {
        if self.status != TrialStatus::Running {
            return Err(Error::Engine {
                trial: self.id,
                message: format!("push_epoch on {:?} trial", self.status),
            });
        }
        if epoch != self.checkpoint_epoch() + 1 {
            return Err(Error::Engine {
                trial: self.id,
                message: format!(
                    "non-contiguous epoch {epoch} after checkpoint {}",
                    self.checkpoint_epoch()
                ),
            });
        }
        self.history.push((epoch, valid));
        self.test_history.push((epoch, test));
        Ok(())
    }

    pub fn pause(&mut self) {
        debug_assert_eq!(self.status, TrialStatus::Running);
        self.status = TrialStatus::Paused;
    }

    /// Paused -> Running, ahead of a resume.
    pub fn reopen(&mut self) -> Result<()> {
        match self.status {
            TrialStatus::Paused | TrialStatus::Running => {
                self.status = TrialStatus::Running;
                Ok(())
            }
            other => Err(Error::Engine {
                trial: self.id,
                message: format!("cannot resume a {other:?} trial"),
            }),
        }
    }

    pub fn stop(&mut self, reason: StopReason) {
        debug_assert_eq!(self.status, TrialStatus::Running);
        self.status = TrialStatus::Stopped(reason);
    }

    pub fn complete(&mut self) {
        debug_assert_eq!(self.status, TrialStatus::Running);
        self.status = TrialStatus::Completed;
    }

    /// Discards all progress so the selection phase can retrain this
    /// configuration from scratch. Allowed regardless of status: the
    /// engine uses it only when model selection re-evaluates a candidate.
    pub fn reset_for_retraining(&mut self) {
        self.history.clear();
        self.test_history.clear();
        self.status = TrialStatus::Running;
    }

    pub fn valid_at(&self, epoch: usize) -> Option<f64> {
        self.history
            .iter()
            .find(|&&(z, _)| z == epoch)
            .map(|&(_, v)| v)
    }

    pub fn test_at(&self, epoch: usize) -> Option<f64> {
        self.test_history
            .iter()
            .find(|&&(z, _)| z == epoch)
            .map(|&(_, v)| v)
    }

    pub fn best_valid(&self) -> Option<f64> {
        self.history
            .iter()
            .map(|&(_, v)| v)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    /// Validation score at the trial's own final epoch.
    pub fn final_valid(&self) -> Option<f64> {
        self.history.last().map(|&(_, v)| v)
    }

    pub fn final_test(&self) -> Option<f64> {
        self.test_history.last().map(|&(_, v)| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{HpConfig, HpSpace};

    fn trial() -> TrialState {
        let space = HpSpace::fcnet_tabular();
        TrialState::new(0, HpConfig::new(&space, vec![0; 9]).unwrap())
    }

    #[test]
    fn epochs_must_be_contiguous() {
        let mut t = trial();
        t.push_epoch(1, 0.1, 0.1).unwrap();
        assert!(t.push_epoch(3, 0.3, 0.3).is_err());
        t.push_epoch(2, 0.2, 0.2).unwrap();
        assert_eq!(t.checkpoint_epoch(), 2);
    }

    #[test]
    fn terminal_trials_reject_training_and_resume() {
        let mut t = trial();
        t.push_epoch(1, 0.1, 0.1).unwrap();
        t.stop(StopReason::Patience);
        assert!(t.push_epoch(2, 0.2, 0.2).is_err());
        assert!(t.reopen().is_err());
    }

    #[test]
    fn paused_trials_can_reopen() {
        let mut t = trial();
        t.push_epoch(1, 0.1, 0.1).unwrap();
        t.pause();
        t.reopen().unwrap();
        t.push_epoch(2, 0.2, 0.2).unwrap();
        assert_eq!(t.best_valid(), Some(0.2));
    }
}
