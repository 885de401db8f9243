//! Pointwise fifth-order WENO reconstruction.
//!
//! Everything here works on a five-point window of split-flux values
//! `(f_{i-2}, ..., f_{i+2})` for the `i+1/2` interface of the positive
//! branch; the negative branch reuses the same machinery on the reflected
//! window. Three candidate parabolas are blended with data-dependent
//! weights: classical Jiang-Shu weights, Z weights built on the global
//! indicator `tau5 = |beta_0 - beta_2|`, or the DS variant where each
//! `beta` is first scaled by a learned multiplier `delta + C`.

use crate::error::{Error, Result};

/// Ideal weights recovering the upstream fifth-order scheme.
pub const IDEAL_WEIGHTS: [f64; 3] = [0.1, 0.6, 0.3];

/// Which nonlinear weighting the scheme uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Js,
    Z,
    Ds,
}

impl Weighting {
    pub fn label(&self) -> &'static str {
        match self {
            Weighting::Js => "weno-js",
            Weighting::Z => "weno-z",
            Weighting::Ds => "weno-ds",
        }
    }
}

/// Reconstruction parameters shared by all schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub weighting: Weighting,
    /// Regularizer in the weight denominators.
    pub epsilon: f64,
    /// Offset added to the learned multipliers; keeps them bounded away
    /// from zero so the DS indicators never vanish where the originals
    /// do not.
    pub c: f64,
}

impl SchemeConfig {
    pub fn new(weighting: Weighting) -> Self {
        SchemeConfig {
            weighting,
            epsilon: 1e-13,
            c: 0.1,
        }
    }
}

/// Third-order candidate fluxes at `i+1/2` from the three substencils.
#[inline]
pub fn candidate_fluxes(w: &[f64; 5]) -> [f64; 3] {
    [
        (2.0 * w[0] - 7.0 * w[1] + 11.0 * w[2]) / 6.0,
        (-w[1] + 5.0 * w[2] + 2.0 * w[3]) / 6.0,
        (2.0 * w[2] + 5.0 * w[3] - w[4]) / 6.0,
    ]
}

/// Jiang-Shu smoothness indicators of the three substencils.
#[inline]
pub fn smoothness_indicators(w: &[f64; 5]) -> [f64; 3] {
    let b0 = 13.0 / 12.0 * (w[0] - 2.0 * w[1] + w[2]).powi(2)
        + 0.25 * (w[0] - 4.0 * w[1] + 3.0 * w[2]).powi(2);
    let b1 =
        13.0 / 12.0 * (w[1] - 2.0 * w[2] + w[3]).powi(2) + 0.25 * (-w[1] + w[3]).powi(2);
    let b2 = 13.0 / 12.0 * (w[2] - 2.0 * w[3] + w[4]).powi(2)
        + 0.25 * (3.0 * w[2] - 4.0 * w[3] + w[4]).powi(2);
    [b0, b1, b2]
}

/// Global smoothness indicator of the Z weights.
#[inline]
pub fn tau5(beta: &[f64; 3]) -> f64 {
    (beta[0] - beta[2]).abs()
}

/// Classical nonlinear weights `alpha_m = d_m / (eps + beta_m)^2`, normalized.
#[inline]
pub fn weights_js(beta: &[f64; 3], epsilon: f64) -> [f64; 3] {
    let mut alpha = [0.0; 3];
    for m in 0..3 {
        alpha[m] = IDEAL_WEIGHTS[m] / (epsilon + beta[m]).powi(2);
    }
    normalize(alpha)
}

/// Z weights `alpha_m = d_m [1 + (tau5 / (beta_m + eps))^2]`, normalized.
#[inline]
pub fn weights_z(beta: &[f64; 3], epsilon: f64) -> [f64; 3] {
    let t = tau5(beta);
    let mut alpha = [0.0; 3];
    for m in 0..3 {
        let r = t / (beta[m] + epsilon);
        alpha[m] = IDEAL_WEIGHTS[m] * (1.0 + r * r);
    }
    normalize(alpha)
}

#[inline]
fn normalize(alpha: [f64; 3]) -> [f64; 3] {
    let s = alpha[0] + alpha[1] + alpha[2];
    [alpha[0] / s, alpha[1] / s, alpha[2] / s]
}

/// Scale each indicator by its multiplier: `beta_m * (delta_m + C)`.
///
/// The caller applies the same per-node triple to both the `i+1/2` and the
/// `i-1/2` indicator sets of a node.
#[inline]
pub fn ds_indicators(beta: &[f64; 3], delta: &[f64; 3], c: f64) -> [f64; 3] {
    [
        beta[0] * (delta[0] + c),
        beta[1] * (delta[1] + c),
        beta[2] * (delta[2] + c),
    ]
}

/// Convex combination of the candidate fluxes at `i+1/2`.
///
/// `delta` is required exactly when the config selects the DS weighting; the
/// DS weights are the Z weights evaluated on the scaled indicators (including
/// `tau5`, so a uniform multiplier cancels and reproduces WENO-Z bit for bit).
pub fn interface_flux(w: &[f64; 5], cfg: &SchemeConfig, delta: Option<&[f64; 3]>) -> Result<f64> {
    let beta = smoothness_indicators(w);
    let omega = match cfg.weighting {
        Weighting::Js => weights_js(&beta, cfg.epsilon),
        Weighting::Z => weights_z(&beta, cfg.epsilon),
        Weighting::Ds => {
            let delta = delta.ok_or(Error::MissingMultipliers)?;
            let scaled = ds_indicators(&beta, delta, cfg.c);
            weights_z(&scaled, cfg.epsilon)
        }
    };
    let fhat = candidate_fluxes(w);
    Ok(omega[0] * fhat[0] + omega[1] * fhat[1] + omega[2] * fhat[2])
}

/// Negative-branch reconstruction at `i+1/2`.
///
/// Takes the window in natural grid order `(f_{i-1}, ..., f_{i+3})` and
/// evaluates the positive machinery on the reflected window; `delta`, when
/// present, must already be ordered for the reflected orientation.
pub fn negative_branch_reconstruct(
    w_natural: &[f64; 5],
    cfg: &SchemeConfig,
    delta: Option<&[f64; 3]>,
) -> Result<f64> {
    let w = [
        w_natural[4],
        w_natural[3],
        w_natural[2],
        w_natural[1],
        w_natural[0],
    ];
    interface_flux(&w, cfg, delta)
}
