//! Multi-fidelity hyperparameter optimization with early-discarding policies.
//!
//! The crate is organized around a bi-level loop: an outer loop proposes
//! hyperparameter configurations ([`samplers`]), an inner loop trains one
//! candidate at a time epoch-by-epoch against a deterministic surrogate
//! benchmark ([`benchmark`]) and decides after every epoch whether to keep
//! going ([`policies`]). The [`engine`] orchestrates both loops, accounts
//! every consumed epoch, and writes a replayable event log. [`analysis`]
//! turns event logs into trajectories, speedups, and rank-stability
//! diagnostics. [`curve_model`] holds the parametric learning-curve model
//! (least-squares fit, Bayesian posterior, probability-of-being-worse) used
//! by the extrapolation policy.
//!
//! All scores inside the engine follow a single convention: larger is
//! better. Loss-like objectives are negated at the benchmark boundary.

pub mod analysis;
pub mod benchmark;
pub mod curve_model;
pub mod engine;
mod error;
pub mod policies;
pub mod samplers;
pub mod seed;

pub use error::{Error, Result};
