use alloc::vec::Vec;

use rand::Rng as _;

use super::fit::{joint_fit, FitOptions, FitSpace};
use super::ExperimentalDataset;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::runner::Runner;
use crate::stats::{mean, std_dev};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum NormalizationPolicy {
    /// Normalization drawn uniformly from [1 − w, 1 + w] × nominal.
    PlusMinus(f64),
    /// Drawn uniformly between the echo curve's earliest value and its
    /// straight-line extrapolation (first two points) to t = 0.
    EarlyTimeInterpolation,
}

impl NormalizationPolicy {
    pub const PLUS_MINUS_10PCT: Self = NormalizationPolicy::PlusMinus(0.1);

    fn range(&self, echo: &ExperimentalDataset) -> Result<(f64, f64)> {
        match *self {
            NormalizationPolicy::PlusMinus(w) => {
                if !(0.0..1.0).contains(&w) {
                    return Err(Error::invalid("policy", "half-width must be in [0, 1)"));
                }
                Ok((1.0 - w, 1.0 + w))
            }
            NormalizationPolicy::EarlyTimeInterpolation => {
                let c = &echo.curve;
                if c.len() < 2 {
                    return Err(Error::TooFewPoints { needed: 2, got: c.len() });
                }
                let (t1, t2) = (c.times[0], c.times[1]);
                let (c1, c2) = (c.coherence[0], c.coherence[1]);
                let c0 = c1 - t1 * (c2 - c1) / (t2 - t1);
                if !(c0 > 0.0 && c1 > 0.0) {
                    return Err(Error::invalid("echo", "early points do not give a positive normalization"));
                }
                Ok((c0.min(c1), c0.max(c1)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TauCEstimate {
    pub mean: f64,
    pub std: f64,
    pub n_resamples: usize,
    pub n_failed: usize,
    pub policy: NormalizationPolicy,
    /// Normalization factor range sampled.
    pub factor_range: (f64, f64),
    /// Pooled τ_c values (linear and neg-log fits of every good resample).
    pub values: Vec<f64>,
}

/// Propagates normalization uncertainty into τ_c: each resample draws a
/// normalization factor, renormalizes both curves and runs the joint fit
/// in both spaces. Mean and standard deviation are over the pooled values.
#[allow(clippy::too_many_arguments)]
pub fn extract_tau_c<R: Runner>(
    deer: &ExperimentalDataset,
    echo: &ExperimentalDataset,
    policy: NormalizationPolicy,
    n_resamples: usize,
    seed: u64,
    dimension: u8,
    alpha: f64,
    opts: &FitOptions,
    runner: &R,
) -> Result<TauCEstimate> {
    if n_resamples < 50 {
        return Err(Error::invalid("n_resamples", "need at least 50 resamples"));
    }
    let (lo, hi) = policy.range(echo)?;
    let outcomes = runner.map(n_resamples, |r| {
        let mut rng = rng::stream(seed, r as u64, Purpose::Resample);
        let f = lo + (hi - lo) * rng.random::<f64>();
        let (d, e) = (deer.rescaled(f), echo.rescaled(f));
        let lin = joint_fit(&d, &e, dimension, alpha, FitSpace::Linear, opts);
        let neg = joint_fit(&d, &e, dimension, alpha, FitSpace::NegLog, opts);
        match (lin, neg) {
            (Ok(a), Ok(b)) => Ok([a.tau_c, b.tau_c]),
            (Err(e), _) | (_, Err(e)) => Err(e),
        }
    });
    let mut values = Vec::with_capacity(2 * n_resamples);
    let mut failed = 0;
    let mut last_err = None;
    for o in outcomes {
        match o {
            Ok(v) => values.extend_from_slice(&v),
            Err(e) => {
                failed += 1;
                last_err = Some(e);
            }
        }
    }
    if failed * 5 > n_resamples {
        return Err(Error::ResampleFailures { failed, total: n_resamples });
    }
    if values.is_empty() {
        return Err(last_err.unwrap_or(Error::Empty("resamples")));
    }
    Ok(TauCEstimate {
        mean: mean(&values),
        std: std_dev(&values),
        n_resamples,
        n_failed: failed,
        policy,
        factor_range: (lo, hi),
        values,
    })
}
