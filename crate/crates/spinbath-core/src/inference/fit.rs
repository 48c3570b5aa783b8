use alloc::string::ToString;
use alloc::vec::Vec;

use super::ExperimentalDataset;
use crate::error::{Error, Result};
use crate::geometry::positional_prefactor;
use crate::lsq::{levenberg_marquardt, std_errors, LmOptions};
use crate::math::{exp, fabs, log, log10, pow};
use crate::sequence::{chi_closed_form, SequenceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum FitSpace {
    /// Residuals in C.
    Linear,
    /// Residuals in −log C, with σ = σ_C/C and points below 3σ_C dropped.
    NegLog,
}

impl FitSpace {
    pub fn name(&self) -> &'static str {
        match self {
            FitSpace::Linear => "linear",
            FitSpace::NegLog => "neglog",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// τ_c range of the start grid (μs).
    pub tau_grid: (f64, f64),
    pub starts_per_decade: usize,
    pub lm: LmOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tau_grid: (0.1, 100.0),
            starts_per_decade: 8,
            lm: LmOptions {
                max_iterations: 200,
                ..LmOptions::default()
            },
        }
    }
}

impl FitOptions {
    /// τ_c bounds: one decade beyond the start grid on each side.
    pub fn tau_bounds(&self) -> (f64, f64) {
        (self.tau_grid.0 / 10.0, self.tau_grid.1 * 10.0)
    }

    /// Same options with every time-valued setting multiplied by `lambda`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        Self {
            tau_grid: (self.tau_grid.0 * lambda, self.tau_grid.1 * lambda),
            ..*self
        }
    }

    fn starts(&self) -> Vec<f64> {
        let (lo, hi) = self.tau_grid;
        let decades = log10(hi / lo);
        let n = ((decades * self.starts_per_decade as f64) as usize).max(1);
        (0..=n).map(|i| lo * pow(hi / lo, i as f64 / n as f64)).collect()
    }
}

/// Best-fit (A, τ_c) of C = exp(−A·χ^{D/2α}).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FitResult {
    pub amplitude: f64,
    pub amplitude_err: f64,
    pub tau_c: f64,
    pub tau_c_err: f64,
    pub dimension: u8,
    pub alpha: f64,
    pub chi2_reduced: f64,
    pub fit_space: FitSpace,
    pub n_points: usize,
    pub n_params: usize,
    /// τ_c ended on a search bound.
    pub unresolved: bool,
}

struct Point {
    t: f64,
    y: f64,
    sigma: f64,
    seq: SequenceSpec,
}

fn collect_points(datasets: &[&ExperimentalDataset], space: FitSpace) -> Result<Vec<Point>> {
    let mut pts = Vec::new();
    for ds in datasets {
        let c = ds.fitted();
        let floor = c.stderr.iter().copied().filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min);
        let weighted = floor.is_finite();
        for i in 0..c.len() {
            let (t, v, s) = (c.times[i], c.coherence[i], c.stderr[i]);
            let sigma = if weighted { s.max(floor) } else { 1.0 };
            match space {
                FitSpace::Linear => pts.push(Point {
                    t,
                    y: v,
                    sigma,
                    seq: ds.sequence,
                }),
                FitSpace::NegLog => {
                    if v <= 0.0 || (weighted && v < 3.0 * sigma) {
                        continue;
                    }
                    let sigma = if weighted { sigma / v } else { 1.0 };
                    pts.push(Point {
                        t,
                        y: -log(v),
                        sigma,
                        seq: ds.sequence,
                    });
                }
            }
        }
    }
    Ok(pts)
}

fn model_exponent(pt: &Point, amp: f64, tau: f64, half_s: f64) -> Option<f64> {
    let chi = chi_closed_form(&pt.seq, pt.t, tau).ok()?;
    Some(amp * pow(chi, half_s))
}

/// Weighted fit of one or more datasets sharing (A, τ_c).
pub fn fit_datasets(datasets: &[&ExperimentalDataset], dimension: u8, alpha: f64, space: FitSpace, opts: &FitOptions) -> Result<FitResult> {
    positional_prefactor(dimension, alpha)?;
    if datasets.is_empty() {
        return Err(Error::Empty("datasets"));
    }
    let pts = collect_points(datasets, space)?;
    if pts.len() < 6 {
        return Err(Error::TooFewPoints { needed: 6, got: pts.len() });
    }
    let half_s = dimension as f64 / (2.0 * alpha);
    let residuals = |p: &[f64; 2], out: &mut [f64]| -> bool {
        let (amp, tau) = (exp(p[0]), exp(p[1]));
        for (i, pt) in pts.iter().enumerate() {
            let Some(e) = model_exponent(pt, amp, tau, half_s) else {
                return false;
            };
            let m = match space {
                FitSpace::Linear => exp(-e),
                FitSpace::NegLog => e,
            };
            out[i] = (pt.y - m) / pt.sigma;
        }
        true
    };
    let (tlo, thi) = opts.tau_bounds();
    let lo = [log(1e-12), log(tlo)];
    let hi = [log(1e12), log(thi)];
    // amplitude seed from the earliest usable point
    let seed_pt = pts.iter().find(|p| match space {
        FitSpace::Linear => p.y > 0.0 && p.y < 1.0,
        FitSpace::NegLog => p.y > 0.0,
    });
    let mut best: Option<crate::lsq::LmResult<2>> = None;
    for tau0 in opts.starts() {
        let a0 = seed_pt
            .and_then(|p| {
                let target = match space {
                    FitSpace::Linear => -log(p.y),
                    FitSpace::NegLog => p.y,
                };
                let unit = model_exponent(p, 1.0, tau0, half_s)?;
                (unit > 0.0).then(|| target / unit)
            })
            .filter(|a| a.is_finite() && *a > 0.0)
            .unwrap_or(1.0);
        let res = levenberg_marquardt(residuals, pts.len(), [log(a0), log(tau0)], lo, hi, &opts.lm);
        if res.cost.is_finite() && best.as_ref().is_none_or(|b| res.cost < b.cost) {
            best = Some(res);
        }
    }
    let mut best = best.ok_or_else(|| Error::NoConvergence {
        reason: "no start produced a finite residual".to_string(),
        best: None,
    })?;
    // A start that ran out of iterations in a shallow valley gets restarted
    // from where it stopped.
    for _ in 0..4 {
        if best.converged {
            break;
        }
        let res = levenberg_marquardt(residuals, pts.len(), best.params, lo, hi, &opts.lm);
        if res.cost <= best.cost {
            best = res;
        }
    }
    let (amp, tau) = (exp(best.params[0]), exp(best.params[1]));
    if !best.converged {
        return Err(Error::NoConvergence {
            reason: "iteration limit reached".to_string(),
            best: Some((amp, tau)),
        });
    }
    let errs = best.covariance.as_ref().map(std_errors).unwrap_or([f64::NAN; 2]);
    let edge = 1e-3;
    let unresolved = fabs(best.params[1] - lo[1]) < edge || fabs(best.params[1] - hi[1]) < edge;
    Ok(FitResult {
        amplitude: amp,
        amplitude_err: amp * errs[0],
        tau_c: tau,
        tau_c_err: tau * errs[1],
        dimension,
        alpha,
        chi2_reduced: best.cost / (pts.len() - 2) as f64,
        fit_space: space,
        n_points: pts.len(),
        n_params: 2,
        unresolved,
    })
}

/// Fit of a single curve.
pub fn fit_profile(data: &ExperimentalDataset, dimension: u8, alpha: f64, space: FitSpace, opts: &FitOptions) -> Result<FitResult> {
    fit_datasets(&[data], dimension, alpha, space, opts)
}

/// Simultaneous DEER + echo fit with shared (A, τ_c).
pub fn joint_fit(
    deer: &ExperimentalDataset,
    echo: &ExperimentalDataset,
    dimension: u8,
    alpha: f64,
    space: FitSpace,
    opts: &FitOptions,
) -> Result<FitResult> {
    fit_datasets(&[deer, echo], dimension, alpha, space, opts)
}
