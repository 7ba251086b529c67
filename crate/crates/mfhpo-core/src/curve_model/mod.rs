//! Parametric learning-curve model with least-squares fitting and a
//! Bayesian layer.
//!
//! The model is a four-parameter saturating ratio
//!
//! ```text
//! f(z; t) = (t0*t1 + t2*z^t3) / (t1 + z^t3)
//! ```
//!
//! with `t0` the early value, `t2` the asymptote, and `t1`, `t3` shaping
//! the transition. Fitting minimizes squared residuals `y - f(z)` with
//! Levenberg-Marquardt over a fixed multi-start set; the posterior over
//! `(t, sigma^2)` is sampled by random-walk Metropolis and drives the
//! probability-of-being-worse estimate used for early rejection.

mod fit;
mod posterior;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use fit::{fit_least_squares, FitResult, MIN_OBSERVATIONS};
pub use posterior::{
    posterior_sample, predictive_finals, prob_worse, prob_worse_from_finals, PosteriorSamples,
    DEFAULT_N_SAMPLES,
};

/// Curve parameters plus observation-noise variance for the Bayesian layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mmf4Params {
    pub theta: [f64; 4],
    pub sigma2: f64,
}

/// A partially observed learning curve: `(z, y)` pairs with strictly
/// increasing epochs, plus the horizon and the incumbent score the curve
/// competes against.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialCurve {
    observations: Vec<(f64, f64)>,
    pub z_max: usize,
    pub y_star: f64,
}

impl PartialCurve {
    pub fn new(observations: Vec<(f64, f64)>, z_max: usize, y_star: f64) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::DegenerateModel("empty curve".into()));
        }
        for w in observations.windows(2) {
            // NaN epochs fail this comparison and are caught below.
            if w[1].0 <= w[0].0 {
                return Err(Error::DegenerateModel(
                    "epochs must be strictly increasing".into(),
                ));
            }
        }
        for &(z, y) in &observations {
            if !z.is_finite() || !y.is_finite() || z < 1.0 {
                return Err(Error::DegenerateModel(format!(
                    "bad observation ({z}, {y})"
                )));
            }
        }
        Ok(Self {
            observations,
            z_max,
            y_star,
        })
    }

    pub fn observations(&self) -> &[(f64, f64)] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn first_y(&self) -> f64 {
        self.observations[0].1
    }

    pub fn last_y(&self) -> f64 {
        self.observations[self.observations.len() - 1].1
    }
}

/// Evaluates the curve model at epoch `z` (identity fidelity transform).
///
/// Degenerate parameters produce non-finite values; callers that need the
/// distinction check `is_finite` on the result.
pub fn mmf4_eval(theta: [f64; 4], z: f64) -> f64 {
    let [t0, t1, t2, t3] = theta;
    let zp = z.powf(t3);
    (t0 * t1 + t2 * zp) / (t1 + zp)
}

/// Residual vector `y_i - f(z_i)`, flagging non-finite model values.
pub fn residuals(theta: [f64; 4], curve: &PartialCurve) -> Result<Vec<f64>> {
    curve
        .observations
        .iter()
        .map(|&(z, y)| {
            let f = mmf4_eval(theta, z);
            if f.is_finite() {
                Ok(y - f)
            } else {
                Err(Error::DegenerateModel(format!(
                    "model value not finite at z = {z}"
                )))
            }
        })
        .collect()
}

/// Closed-form partials of the model value w.r.t. each parameter, one row
/// per epoch. With `D = t1 + z^t3` and `N = t0*t1 + t2*z^t3`:
///
/// ```text
/// df/dt0 = t1 / D
/// df/dt1 = (t0*D - N) / D^2
/// df/dt2 = z^t3 / D
/// df/dt3 = z^t3 * ln(z) * (t2*D - N) / D^2
/// ```
pub fn model_jacobian(theta: [f64; 4], zs: &[f64]) -> Result<Vec<[f64; 4]>> {
    let [t0, t1, t2, t3] = theta;
    zs.iter()
        .map(|&z| {
            if z < 1.0 {
                return Err(Error::DegenerateModel(format!(
                    "jacobian needs z >= 1, got {z}"
                )));
            }
            let zp = z.powf(t3);
            let d = t1 + zp;
            let n = t0 * t1 + t2 * zp;
            let d2 = d * d;
            let row = [
                t1 / d,
                (t0 * d - n) / d2,
                zp / d,
                zp * z.ln() * (t2 * d - n) / d2,
            ];
            if row.iter().all(|v| v.is_finite()) {
                Ok(row)
            } else {
                Err(Error::DegenerateModel(format!(
                    "jacobian not finite at z = {z}"
                )))
            }
        })
        .collect()
}

/// Jacobian of the residual vector: the negated model Jacobian.
pub fn residual_jacobian(theta: [f64; 4], zs: &[f64]) -> Result<Vec<[f64; 4]>> {
    let mut rows = model_jacobian(theta, zs)?;
    for row in &mut rows {
        for v in row.iter_mut() {
            *v = -*v;
        }
    }
    Ok(rows)
}
