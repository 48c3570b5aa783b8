//! Inverse problem: normalization, stretched-exponential fits, dimension
//! classification, correlation-time extraction and density estimation.

mod classify;
mod density;
mod fit;
mod tau_c;

pub use classify::{classify_dimension, ClassifyOptions, DimensionalityReport, FitRow, PooledRow, Verdict};
pub use density::{build_static_family, estimate_density, DensityEstimate, DensityOptions, FamilyMember};
pub use fit::{fit_datasets, fit_profile, joint_fit, FitOptions, FitResult, FitSpace};
pub use tau_c::{extract_tau_c, NormalizationPolicy, TauCEstimate};

use alloc::vec::Vec;

use crate::curve::CoherenceCurve;
use crate::error::{require_positive, Error, Result};
use crate::math::sqrt;
use crate::sequence::SequenceSpec;

/// Default early-time cut (μs).
pub const DEFAULT_MIN_TIME_CUT: f64 = 0.5;

/// A measured (or synthetic) coherence curve with its sequence.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExperimentalDataset {
    pub curve: CoherenceCurve,
    pub sequence: SequenceSpec,
    /// Only points with t > min_time_cut are fitted.
    pub min_time_cut: f64,
}

impl ExperimentalDataset {
    pub fn new(curve: CoherenceCurve, sequence: SequenceSpec) -> Self {
        Self {
            curve,
            sequence,
            min_time_cut: DEFAULT_MIN_TIME_CUT,
        }
    }

    pub fn with_cut(mut self, cut: f64) -> Self {
        self.min_time_cut = cut;
        self
    }

    /// The points that enter a fit.
    pub fn fitted(&self) -> CoherenceCurve {
        self.curve.window(self.min_time_cut, None)
    }

    /// Same data renormalized by `factor` (C → C/factor).
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            curve: self.curve.scaled(factor),
            ..self.clone()
        }
    }
}

/// Raw two-state readout: S_0(t), S_{−1}(t) and their errors.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RawContrast {
    pub times: Vec<f64>,
    pub s0: Vec<f64>,
    pub s1: Vec<f64>,
    pub sigma0: Vec<f64>,
    pub sigma1: Vec<f64>,
}

/// C = (S_0 − S_{−1})/t0 with errors added in quadrature, including the
/// relative error of t0.
pub fn normalize_contrast(raw: &RawContrast, t0_value: f64, t0_sigma: f64) -> Result<CoherenceCurve> {
    require_positive("t0_value", t0_value)?;
    if !(t0_sigma >= 0.0) {
        return Err(Error::invalid("t0_sigma", "must be non-negative"));
    }
    let n = raw.times.len();
    if [raw.s0.len(), raw.s1.len(), raw.sigma0.len(), raw.sigma1.len()].iter().any(|&l| l != n) {
        return Err(Error::Mismatch("raw contrast columns differ in length".into()));
    }
    let mut c = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    for i in 0..n {
        let v = (raw.s0[i] - raw.s1[i]) / t0_value;
        let point = sqrt(raw.sigma0[i] * raw.sigma0[i] + raw.sigma1[i] * raw.sigma1[i]) / t0_value;
        let rel = t0_sigma / t0_value;
        c.push(v);
        e.push(sqrt(point * point + v * v * rel * rel));
    }
    CoherenceCurve::new(raw.times.clone(), c, e)
}

/// Raw contrast C_raw = S_0 − S_{−1} at the first time point.
pub fn first_contrast(raw: &RawContrast) -> Result<(f64, f64)> {
    if raw.times.is_empty() {
        return Err(Error::Empty("raw contrast"));
    }
    let v = raw.s0[0] - raw.s1[0];
    let s = sqrt(raw.sigma0[0] * raw.sigma0[0] + raw.sigma1[0] * raw.sigma1[0]);
    Ok((v, s))
}
