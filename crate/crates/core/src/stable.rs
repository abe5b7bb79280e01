//! Symmetric stable laws and stable Levy increments.
//!
//! Normalization: a standard symmetric `beta`-stable variable `X` has
//! characteristic function `exp(-|t|^beta)`. At `beta = 2` this is the
//! centered Gaussian with variance 2, at `beta = 1` the standard Cauchy.
//! A scale `s` multiplies `X`, so the characteristic exponent becomes
//! `s^beta |t|^beta`.

use std::f64::consts::FRAC_PI_2;

use log::info;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats;

/// Minimum sample size accepted by [`tail_index_estimate`].
pub const MIN_TAIL_SAMPLES: usize = 10_000;

/// Fraction of the largest order statistics used by the Hill estimator.
pub const HILL_FRACTION: f64 = 0.005;

#[derive(Clone, Debug, PartialEq)]
pub struct StableParams {
    pub beta: f64,
    /// Per-mode scales for the driven modes `l = 0..m`; every mode at or
    /// beyond `m` is undriven.
    pub sigma: Vec<f64>,
}

impl StableParams {
    pub fn new(beta: f64, sigma: Vec<f64>) -> Result<Self> {
        check_beta(beta)?;
        if sigma.is_empty() {
            return Err(Error::param("at least one driven mode is required (m >= 1)"));
        }
        if let Some(s) = sigma.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::param(format!("noise scale {s} must be finite and >= 0")));
        }
        Ok(Self { beta, sigma })
    }

    pub fn m(&self) -> usize {
        self.sigma.len()
    }

    /// `sum_l |sigma_l|^beta lambda_l^{beta/2}` over the driven modes. Always
    /// finite for a finite mode count; logged so runs carry the value.
    pub fn finiteness_sum(&self, lambda: &[f64]) -> f64 {
        let s: f64 = self
            .sigma
            .iter()
            .zip(lambda)
            .map(|(s, l)| s.abs().powf(self.beta) * l.powf(self.beta / 2.0))
            .sum();
        info!("noise regularity sum sum|sigma|^beta lambda^(beta/2) = {s:.6e}");
        s
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 2.0 {
        Ok(())
    } else {
        Err(Error::param(format!("stability index beta={beta} outside (0, 2]")))
    }
}

/// Chambers-Mallows-Stuck draw for a validated `beta`.
#[inline]
pub(crate) fn cms(beta: f64, stream: &mut RngStream) -> f64 {
    let v = stream.uniform_in(-FRAC_PI_2, FRAC_PI_2);
    let w = stream.exponential();
    if beta == 1.0 {
        return v.tan();
    }
    if beta == 2.0 {
        // sin(2V)/sqrt(cos V) * sqrt(W / cos V) simplifies to 2 sin V sqrt(W).
        return 2.0 * v.sin() * w.sqrt();
    }
    let bv = beta * v;
    bv.sin() / v.cos().powf(1.0 / beta) * (((1.0 - beta) * v).cos() / w).powf((1.0 - beta) / beta)
}

/// One draw from the standard symmetric `beta`-stable law.
pub fn sample_standard_stable(beta: f64, stream: &mut RngStream) -> Result<f64> {
    check_beta(beta)?;
    Ok(cms(beta, stream))
}

/// Increment `L(t+dt) - L(t)` of a symmetric stable Levy process with unit
/// time scale `scale`: by self-similarity it is `scale * dt^{1/beta} * X`.
pub fn levy_increment(beta: f64, scale: f64, dt: f64, stream: &mut RngStream) -> Result<f64> {
    check_beta(beta)?;
    if !(dt > 0.0) {
        return Err(Error::param(format!("time step dt={dt} must be positive")));
    }
    if !(scale >= 0.0) {
        return Err(Error::param(format!("scale={scale} must be >= 0")));
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(scale * dt.powf(1.0 / beta) * cms(beta, stream))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailEstimate {
    /// Hill estimate of the tail exponent.
    pub index: f64,
    /// Number of upper order statistics used.
    pub k: usize,
    /// Set when the estimate exceeds 2: no stable law with `beta < 2` fits,
    /// which is the Gaussian (`beta = 2`) situation where Hill is inconsistent.
    pub light_tail: bool,
}

/// Hill estimator on `|x|` using the top [`HILL_FRACTION`] of the sample.
pub fn tail_index_estimate(samples: &[f64]) -> Result<TailEstimate> {
    if samples.len() < MIN_TAIL_SAMPLES {
        return Err(Error::Diagnostic(format!(
            "tail index needs at least {MIN_TAIL_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let mut abs: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    abs.sort_by(|a, b| b.total_cmp(a));
    let k = ((abs.len() as f64 * HILL_FRACTION) as usize).max(10);
    let threshold = abs[k];
    if !(threshold > 0.0) || !abs[0].is_finite() {
        return Err(Error::Diagnostic("degenerate sample: no upper tail".into()));
    }
    let h = abs[..k].iter().map(|x| (x / threshold).ln()).sum::<f64>() / k as f64;
    if !(h > 0.0) {
        return Err(Error::Diagnostic("degenerate sample: flat upper tail".into()));
    }
    let index = 1.0 / h;
    Ok(TailEstimate {
        index,
        k,
        light_tail: index > 2.0,
    })
}

/// Monte-Carlo estimate of `E|X|^p` for standard `X`, with its standard error.
///
/// This is the absolute-moment constant behind the OU moment formula. Moments
/// of order `p >= beta` diverge and are rejected.
pub fn abs_moment_mc(beta: f64, p: f64, n: usize, stream: &mut RngStream) -> Result<(f64, f64)> {
    check_beta(beta)?;
    if beta < 2.0 && p >= beta {
        return Err(Error::MomentDivergence { p, beta });
    }
    if n < 2 {
        return Err(Error::param("need at least two Monte-Carlo samples"));
    }
    let draws: Vec<f64> = (0..n).map(|_| cms(beta, stream).abs().powf(p)).collect();
    let m = stats::mean(&draws);
    let se = (stats::variance(&draws) / n as f64).sqrt();
    Ok((m, se))
}
