//! Random-walk Metropolis over `(theta, log sigma^2)` and the
//! probability-of-being-worse estimate.
//!
//! Posterior: likelihood `prod_i N(y_i; f(z_i; theta), sigma^2)`, prior
//! `N(theta_hat, I)` on the parameters and `Exp(1)` on `sigma^2`. The
//! chain walks in `u = log sigma^2`, which adds the change-of-variable
//! term `u` to the log-density.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{mmf4_eval, Mmf4Params, PartialCurve};
use crate::{Error, Result};

const BURN_IN: usize = 1_000;
const INITIAL_PROPOSAL_STD: f64 = 0.05;
const TARGET_ACCEPTANCE: f64 = 0.3;
const ADAPT_WINDOW: usize = 50;

/// Default number of posterior draws used by the early-rejection policy.
pub const DEFAULT_N_SAMPLES: usize = 2_000;

/// Draws from the posterior plus sampler diagnostics.
#[derive(Debug, Clone)]
pub struct PosteriorSamples {
    pub draws: Vec<Mmf4Params>,
    pub acceptance_rate: f64,
    /// Set when the post-adaptation acceptance rate leaves [0.05, 0.95].
    pub poor_mixing: bool,
}

fn log_target(theta: [f64; 4], u: f64, theta_hat: [f64; 4], curve: &PartialCurve) -> f64 {
    let mut sse = 0.0;
    for &(z, y) in curve.observations() {
        let f = mmf4_eval(theta, z);
        if !f.is_finite() {
            return f64::NEG_INFINITY;
        }
        let r = y - f;
        sse += r * r;
    }
    let n = curve.len() as f64;
    let sigma2 = u.exp();
    let log_lik = -0.5 * sse / sigma2 - 0.5 * n * ((2.0 * std::f64::consts::PI).ln() + u);
    let log_prior_theta: f64 = theta
        .iter()
        .zip(&theta_hat)
        .map(|(t, h)| -0.5 * (t - h) * (t - h))
        .sum();
    // Exp(1) prior on sigma^2 expressed in u: -e^u + u.
    let log_prior_sigma = -sigma2 + u;
    log_lik + log_prior_theta + log_prior_sigma
}

/// Samples `n_samples` posterior draws after a 1,000-step burn-in with
/// proposal-scale adaptation (thinning 1). Deterministic given the RNG
/// state.
pub fn posterior_sample(
    curve: &PartialCurve,
    theta_hat: [f64; 4],
    sigma2_hat: f64,
    n_samples: usize,
    rng: &mut (impl Rng + ?Sized),
) -> Result<PosteriorSamples> {
    if n_samples == 0 {
        return Err(Error::DegenerateModel("n_samples must be > 0".into()));
    }

    let mut theta = theta_hat;
    let mut u = sigma2_hat.max(1e-12).ln();
    let mut lt = log_target(theta, u, theta_hat, curve);
    if !lt.is_finite() {
        return Err(Error::DegenerateModel(
            "posterior start has zero density".into(),
        ));
    }

    let mut scale = 1.0f64;
    let mut window_accepts = 0usize;
    let mut post_accepts = 0usize;
    let mut draws = Vec::with_capacity(n_samples);

    for step in 0..BURN_IN + n_samples {
        let mut cand_theta = theta;
        for t in cand_theta.iter_mut() {
            let e: f64 = StandardNormal.sample(rng);
            *t += INITIAL_PROPOSAL_STD * scale * e;
        }
        let e: f64 = StandardNormal.sample(rng);
        let cand_u = u + INITIAL_PROPOSAL_STD * scale * e;

        let cand_lt = log_target(cand_theta, cand_u, theta_hat, curve);
        let accept = cand_lt.is_finite() && {
            let log_ratio = cand_lt - lt;
            log_ratio >= 0.0 || rng.gen::<f64>() < log_ratio.exp()
        };
        if accept {
            theta = cand_theta;
            u = cand_u;
            lt = cand_lt;
            if step < BURN_IN {
                window_accepts += 1;
            } else {
                post_accepts += 1;
            }
        }

        if step < BURN_IN && (step + 1) % ADAPT_WINDOW == 0 {
            let rate = window_accepts as f64 / ADAPT_WINDOW as f64;
            scale = (scale * (0.5 * (rate - TARGET_ACCEPTANCE)).exp()).clamp(1e-4, 1e3);
            window_accepts = 0;
        }

        if step >= BURN_IN {
            draws.push(Mmf4Params {
                theta,
                sigma2: u.exp(),
            });
        }
    }

    let acceptance_rate = post_accepts as f64 / n_samples as f64;
    Ok(PosteriorSamples {
        draws,
        acceptance_rate,
        poor_mixing: !(0.05..=0.95).contains(&acceptance_rate),
    })
}

/// Predicted final-epoch scores, one per posterior draw. When
/// `predictive_noise` is set each draw gets one observation-noise sample
/// `N(0, sigma^2)` on top of the model mean, matching what an actual
/// final-epoch measurement would look like.
pub fn predictive_finals(
    samples: &PosteriorSamples,
    z_max: usize,
    predictive_noise: bool,
    rng: &mut (impl Rng + ?Sized),
) -> Vec<f64> {
    samples
        .draws
        .iter()
        .map(|p| {
            let mean = mmf4_eval(p.theta, z_max as f64);
            if predictive_noise {
                let e: f64 = StandardNormal.sample(rng);
                mean + p.sigma2.sqrt() * e
            } else {
                mean
            }
        })
        .collect()
}

/// Fraction of predicted final scores strictly below the incumbent.
pub fn prob_worse(
    samples: &PosteriorSamples,
    z_max: usize,
    y_star: f64,
    predictive_noise: bool,
    rng: &mut (impl Rng + ?Sized),
) -> f64 {
    let finals = predictive_finals(samples, z_max, predictive_noise, rng);
    prob_worse_from_finals(&finals, y_star)
}

/// Same estimate from precomputed predictive finals; lets callers sweep
/// `y_star` on a fixed sample set.
pub fn prob_worse_from_finals(finals: &[f64], y_star: f64) -> f64 {
    if finals.is_empty() {
        return 0.0;
    }
    finals.iter().filter(|&&v| v < y_star).count() as f64 / finals.len() as f64
}
