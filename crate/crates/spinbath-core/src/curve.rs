use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Coherence samples C(t) with per-point standard errors.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CoherenceCurve {
    pub times: Vec<f64>,
    pub coherence: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl CoherenceCurve {
    /// Builds a curve, checking lengths, finiteness and strictly increasing
    /// times.
    pub fn new(times: Vec<f64>, coherence: Vec<f64>, stderr: Vec<f64>) -> Result<Self> {
        if times.len() != coherence.len() || times.len() != stderr.len() {
            return Err(Error::Mismatch(alloc::format!(
                "curve columns have lengths {}, {}, {}",
                times.len(),
                coherence.len(),
                stderr.len()
            )));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Mismatch(alloc::format!("times must be strictly increasing (index {})", i + 1)));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&times) || !finite(&coherence) || !finite(&stderr) {
            return Err(Error::invalid("curve", "non-finite value"));
        }
        if stderr.iter().any(|&s| s < 0.0) {
            return Err(Error::invalid("stderr", "negative standard error"));
        }
        Ok(Self { times, coherence, stderr })
    }

    /// Noise-free curve (all standard errors zero).
    pub fn exact(times: Vec<f64>, coherence: Vec<f64>) -> Result<Self> {
        let n = times.len();
        Self::new(times, coherence, alloc::vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Points with `lo < t` (and `t ≤ hi` if given).
    pub fn window(&self, lo: f64, hi: Option<f64>) -> Self {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.times[i] > lo && hi.is_none_or(|h| self.times[i] <= h))
            .collect();
        Self {
            times: keep.iter().map(|&i| self.times[i]).collect(),
            coherence: keep.iter().map(|&i| self.coherence[i]).collect(),
            stderr: keep.iter().map(|&i| self.stderr[i]).collect(),
        }
    }

    /// Divides coherence and standard errors by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            times: self.times.clone(),
            coherence: self.coherence.iter().map(|c| c / factor).collect(),
            stderr: self.stderr.iter().map(|s| s / factor).collect(),
        }
    }

    /// Synthetic measurement: each point multiplied by (1 + rel·z), z ~ N(0, 1),
    /// with standard error rel·|C|.
    pub fn with_relative_noise(&self, rel: f64, rng: &mut Rng) -> Self {
        let mut out = self.clone();
        for (c, s) in out.coherence.iter_mut().zip(out.stderr.iter_mut()) {
            let z: f64 = StandardNormal.sample(rng);
            *s = rel * c.abs();
            *c *= 1.0 + rel * z;
        }
        out
    }
}
