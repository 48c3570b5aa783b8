//! Disorder-averaged decay profiles C(t) = exp(−A·χ(t)^{D/2α}), stretch
//! powers and decay timescales.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::curve::CoherenceCurve;
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::geometry::positional_prefactor;
use crate::math::{cos, exp, log, pow, sqrt, unit_ball_volume};
use crate::sequence::{chi_closed_form, SequenceSpec};
use crate::stats::fit_line;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Amplitude {
    /// A in μs^{−D/α}.
    Phenomenological { a: f64 },
    /// A = n·(C·ḡ·J_z)^{D/α}.
    Microscopic { density: f64, coupling: f64, g_bar: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ProfileParams {
    pub dimension: u8,
    pub alpha: f64,
    pub sequence: SequenceSpec,
    /// `None` for a frozen bath.
    pub tau_c: Option<f64>,
    pub amplitude: Amplitude,
}

impl ProfileParams {
    pub fn validate(&self) -> Result<()> {
        positional_prefactor(self.dimension, self.alpha)?;
        self.sequence.validate()?;
        if let Some(t) = self.tau_c {
            require_positive("tau_c", t)?;
        }
        match self.amplitude {
            Amplitude::Phenomenological { a } => require_positive("amplitude", a),
            Amplitude::Microscopic { density, coupling, g_bar } => {
                require_positive("density", density)?;
                require_positive("coupling", coupling)?;
                require_non_negative("g_bar", g_bar)
            }
        }
    }

    /// The exponent prefactor A.
    pub fn amplitude_value(&self) -> Result<f64> {
        Ok(match self.amplitude {
            Amplitude::Phenomenological { a } => a,
            Amplitude::Microscopic { density, coupling, g_bar } => {
                let c = positional_prefactor(self.dimension, self.alpha)?;
                density * pow(c * g_bar * coupling, self.dimension as f64 / self.alpha)
            }
        })
    }

    /// χ(t) for this sequence; a frozen bath gives t² (Ramsey) or 0.
    pub fn chi(&self, t: f64) -> Result<f64> {
        match self.tau_c {
            Some(tau) => chi_closed_form(&self.sequence, t, tau),
            None => Ok(match self.sequence {
                SequenceSpec::RamseyDeer => t * t,
                _ => 0.0,
            }),
        }
    }
}

/// C(t) = exp(−A·χ(t)^{D/2α}).
pub fn coherence(params: &ProfileParams, t: f64) -> Result<f64> {
    params.validate()?;
    require_non_negative("t", t)?;
    let chi = params.chi(t)?;
    if chi == 0.0 {
        return Ok(1.0);
    }
    let a = params.amplitude_value()?;
    Ok(exp(-a * pow(chi, params.dimension as f64 / (2.0 * params.alpha))))
}

/// Noise-free curve on a grid.
pub fn profile_curve(params: &ProfileParams, times: &[f64]) -> Result<CoherenceCurve> {
    let c = times.iter().map(|&t| coherence(params, t)).collect::<Result<Vec<_>>>()?;
    CoherenceCurve::exact(times.to_vec(), c)
}

/// Ramsey decay of a frozen bath of binary ±1/2 spins:
/// −log C = n·(D·A_D/α)·(−Γ(−s)cos(πs/2))·(ḡ·J·t/2)^s with s = D/α.
///
/// The Gaussian-phase form exp(−n(C·ḡ·J·t)^s) has a different constant
/// because ⟨cos φ⟩ for a binary spin is not exp(−⟨φ²⟩/2).
pub fn static_binary_coherence(dimension: u8, alpha: f64, density: f64, coupling: f64, g_bar: f64, t: f64) -> Result<f64> {
    positional_prefactor(dimension, alpha)?;
    let s = dimension as f64 / alpha;
    let k = dimension as f64 * unit_ball_volume(dimension) / alpha * (-crate::math::gamma(-s) * cos(PI * s / 2.0));
    Ok(exp(-density * k * pow(g_bar * coupling * t / 2.0, s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum NoiseClass {
    Gaussian,
    Telegraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum TimeRegime {
    Early,
    Late,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum StretchRegime {
    EarlyRamsey,
    EarlyEchoGaussian,
    EarlyEchoTelegraph,
    Late,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StretchReport {
    pub regime: StretchRegime,
    pub beta: f64,
}

/// Expected stretch power for a sequence, noise class and regime.
pub fn stretch_report(seq: &SequenceSpec, noise: NoiseClass, regime: TimeRegime, dimension: u8, alpha: f64) -> StretchReport {
    let s = dimension as f64 / alpha;
    let (regime, beta) = match (seq, regime, noise) {
        (_, TimeRegime::Late, _) | (SequenceSpec::Xy8 { .. }, _, _) => (StretchRegime::Late, s / 2.0),
        (SequenceSpec::RamseyDeer, TimeRegime::Early, _) => (StretchRegime::EarlyRamsey, s),
        (SequenceSpec::SpinEcho, TimeRegime::Early, NoiseClass::Gaussian) => (StretchRegime::EarlyEchoGaussian, 1.5 * s),
        (SequenceSpec::SpinEcho, TimeRegime::Early, NoiseClass::Telegraph) => (StretchRegime::EarlyEchoTelegraph, 1.0 + s),
    };
    StretchReport { regime, beta }
}

pub fn stretch_power(seq: &SequenceSpec, noise: NoiseClass, regime: TimeRegime, dimension: u8, alpha: f64) -> f64 {
    stretch_report(seq, noise, regime, dimension, alpha).beta
}

/// Local slope of log(−log C) against log t.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StretchSeries {
    pub times: Vec<f64>,
    pub beta: Vec<f64>,
    pub beta_err: Vec<f64>,
    /// Points dropped for C ≥ threshold or C ≤ 0.
    pub excluded: usize,
}

/// Sliding-window regression; points with C above `upper` (default 0.999)
/// or non-positive are dropped first.
pub fn local_stretch_with(curve: &CoherenceCurve, window: usize, upper: f64) -> Result<StretchSeries> {
    if window < 4 {
        return Err(Error::invalid("window", "must be at least 4 points"));
    }
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut excluded = 0;
    for i in 0..curve.len() {
        let c = curve.coherence[i];
        let t = curve.times[i];
        if c >= upper || c <= 0.0 || t <= 0.0 {
            excluded += 1;
            continue;
        }
        lx.push(log(t));
        ly.push(log(-log(c)));
    }
    if lx.len() < window {
        return Err(Error::TooFewPoints {
            needed: window,
            got: lx.len(),
        });
    }
    let mut out = StretchSeries {
        times: Vec::new(),
        beta: Vec::new(),
        beta_err: Vec::new(),
        excluded,
    };
    for start in 0..=lx.len() - window {
        let xs = &lx[start..start + window];
        let ys = &ly[start..start + window];
        let fit = fit_line(xs, ys, None).ok_or_else(|| Error::invalid("curve", "degenerate time window"))?;
        out.times.push(exp(crate::stats::mean(xs)));
        out.beta.push(fit.slope);
        out.beta_err.push(fit.slope_err);
    }
    Ok(out)
}

pub fn local_stretch(curve: &CoherenceCurve, window: usize) -> Result<StretchSeries> {
    local_stretch_with(curve, window, 0.999)
}

/// Weighted straight-line fit of log(−log C) against log t over the points
/// with `lo < C < hi`; the slope is the stretch power.
pub fn fit_stretch(curve: &CoherenceCurve, lo: f64, hi: f64) -> Result<crate::stats::LineFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    for i in 0..curve.len() {
        let c = curve.coherence[i];
        if c > lo && c < hi && curve.times[i] > 0.0 {
            let l = -log(c);
            x.push(log(curve.times[i]));
            y.push(log(l));
            let s = curve.stderr[i] / (c * l);
            w.push(if s > 0.0 { 1.0 / (s * s) } else { 1.0 });
        }
    }
    if x.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: x.len() });
    }
    let weighted = curve.stderr.iter().any(|&s| s > 0.0);
    fit_line(&x, &y, if weighted { Some(&w) } else { None }).ok_or_else(|| Error::invalid("curve", "degenerate time window"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum TimescaleRegime {
    EarlyRamsey,
    EarlyEcho,
    Late,
    Xy8,
}

/// 1/e time of the pure-regime profile.
pub fn decay_timescale(params: &ProfileParams, regime: TimescaleRegime) -> Result<f64> {
    params.validate()?;
    let Amplitude::Microscopic { density, coupling, g_bar } = params.amplitude else {
        return Err(Error::invalid("amplitude", "timescales need the microscopic decomposition"));
    };
    let c = positional_prefactor(params.dimension, params.alpha)?;
    let k = c * g_bar * pow(density, params.alpha / params.dimension as f64) * coupling;
    let tau = || params.tau_c.ok_or_else(|| Error::invalid("tau_c", "required for this regime"));
    Ok(match regime {
        TimescaleRegime::EarlyRamsey => 1.0 / k,
        TimescaleRegime::EarlyEcho => pow(6.0 * tau()?, 1.0 / 3.0) * pow(k, -2.0 / 3.0),
        TimescaleRegime::Late => 1.0 / (2.0 * tau()? * k * k),
        TimescaleRegime::Xy8 => match params.sequence {
            SequenceSpec::Xy8 { tau_p } => 24.0 * tau()? / (tau_p * tau_p * k * k),
            _ => return Err(Error::invalid("sequence", "XY8 timescale needs an XY8 sequence")),
        },
    })
}

/// Time at which a monotone decreasing `coherence(t)` crosses 1/e,
/// by bisection on `[lo, hi]`.
pub fn one_over_e_time<F: Fn(f64) -> f64>(coherence: F, lo: f64, hi: f64) -> Option<f64> {
    let target = exp(-1.0);
    let (mut a, mut b) = (lo, hi);
    if !(coherence(a) > target && coherence(b) < target) {
        return None;
    }
    for _ in 0..200 {
        let m = sqrt(a * b);
        if coherence(m) > target {
            a = m;
        } else {
            b = m;
        }
        if b / a - 1.0 < 1e-14 {
            break;
        }
    }
    Some(sqrt(a * b))
}
