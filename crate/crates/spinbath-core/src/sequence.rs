//! Pulse sequences as toggling functions η(t′; t) and the accumulated
//! phase variance χ(t) = ∫∫ η(t′)η(t″) ξ(t′−t″) dt′dt″.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::math::{cos, exp, expm1, fabs, round, sin, tan};
use crate::quad::{self, Options};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum SequenceSpec {
    RamseyDeer,
    SpinEcho,
    Xy8 { tau_p: f64 },
}

/// Constant-η piece `[start, end)` of a toggling function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Regime {
    Short,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum ChiMethod {
    ClosedForm,
    Quadrature,
    Spectral,
    Asymptotic(Regime),
}

impl ChiMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ChiMethod::ClosedForm => "closed_form",
            ChiMethod::Quadrature => "quadrature",
            ChiMethod::Spectral => "spectral",
            ChiMethod::Asymptotic(Regime::Short) => "asymptotic_short",
            ChiMethod::Asymptotic(Regime::Long) => "asymptotic_long",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ChiEvaluation {
    pub times: Vec<f64>,
    pub chi: Vec<f64>,
    pub method: ChiMethod,
}

/// Bath autocorrelation ξ used by the quadrature route.
#[derive(Clone, Copy)]
pub enum Kernel<'a> {
    /// ξ(u) = e^{−|u|/τ_c}
    Exponential { tau_c: f64 },
    /// Arbitrary even ξ, evaluated for u ≥ 0.
    General(&'a dyn Fn(f64) -> f64),
}

const SNAP_TOL: f64 = 1e-9;

impl SequenceSpec {
    pub fn label(&self) -> &'static str {
        match self {
            SequenceSpec::RamseyDeer => "deer",
            SequenceSpec::SpinEcho => "echo",
            SequenceSpec::Xy8 { .. } => "xy8",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let SequenceSpec::Xy8 { tau_p } = *self {
            require_positive("tau_p", tau_p)?;
        }
        Ok(())
    }

    /// Number of whole XY8 periods in `total`, or an error if `total` is not
    /// a multiple of τ_p.
    fn periods(tau_p: f64, total: f64) -> Result<usize> {
        let m = round(total / tau_p);
        if m < 1.0 || fabs(m * tau_p - total) > SNAP_TOL * total.max(tau_p) {
            return Err(Error::invalid(
                "total",
                alloc::format!("XY8 total time {total} is not a whole multiple of tau_p = {tau_p}"),
            ));
        }
        Ok(m as usize)
    }

    /// Nearest admissible total time for this sequence (whole XY8 periods,
    /// at least one).
    pub fn snap_time(&self, t: f64) -> f64 {
        match *self {
            SequenceSpec::Xy8 { tau_p } => round(t / tau_p).max(1.0) * tau_p,
            _ => t,
        }
    }

    /// Constant-η pieces covering `[0, total)`.
    pub fn segments(&self, total: f64) -> Result<Vec<Segment>> {
        require_non_negative("total", total)?;
        self.validate()?;
        let seg = |start, end, eta| Segment { start, end, eta };
        Ok(match *self {
            SequenceSpec::RamseyDeer => alloc::vec![seg(0.0, total, 1.0)],
            SequenceSpec::SpinEcho => {
                let h = 0.5 * total;
                alloc::vec![seg(0.0, h, 1.0), seg(h, total, -1.0)]
            }
            SequenceSpec::Xy8 { tau_p } => {
                let m = Self::periods(tau_p, total)?;
                let mut out = Vec::with_capacity(2 * m + 1);
                out.push(seg(0.0, 0.25 * tau_p, 1.0));
                for k in 0..m {
                    let k = k as f64;
                    out.push(seg((k + 0.25) * tau_p, (k + 0.75) * tau_p, -1.0));
                    let end = if k as usize == m - 1 { total } else { (k + 1.25) * tau_p };
                    out.push(seg((k + 0.75) * tau_p, end, 1.0));
                }
                out
            }
        })
    }

    /// Toggling function η(t′; total).
    pub fn eta(&self, t_prime: f64, total: f64) -> Result<f64> {
        if !(t_prime >= 0.0 && t_prime < total) {
            return Err(Error::OutOfRange {
                name: "t_prime",
                value: t_prime,
                reason: "must lie in [0, total)",
            });
        }
        Ok(match *self {
            SequenceSpec::RamseyDeer => 1.0,
            SequenceSpec::SpinEcho => {
                if t_prime < 0.5 * total {
                    1.0
                } else {
                    -1.0
                }
            }
            SequenceSpec::Xy8 { tau_p } => {
                Self::periods(tau_p, total)?;
                let phase = t_prime / tau_p + 0.25;
                let frac = phase - crate::math::floor(phase);
                if frac < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
        })
    }
}

/// e^{−x} − 1 + x without cancellation for small x.
pub(crate) fn exp_m1_plus_x(x: f64) -> f64 {
    if x < 0.5 {
        let mut term = x * x / 2.0;
        let mut sum = 0.0;
        let mut k = 2.0;
        while fabs(term) > 1e-17 * fabs(sum) || k < 4.0 {
            sum += term;
            k += 1.0;
            term *= -x / k;
        }
        sum
    } else {
        expm1(-x) + x
    }
}

/// x − (1−y)(3−y) with y = e^{−x/2}, i.e. x − 3 − e^{−x} + 4e^{−x/2}.
fn echo_shape(x: f64) -> f64 {
    if x < 1.0 {
        // Σ_{k≥3} (−x)^k (2^{2−k} − 1)/k!
        let mut pow = -x * x * x / 6.0;
        let mut scale = 0.5;
        let mut sum = 0.0;
        let mut k = 3.0;
        loop {
            let term = pow * (scale - 1.0);
            sum += term;
            if fabs(term) <= 1e-17 * fabs(sum) {
                break;
            }
            k += 1.0;
            pow *= -x / k;
            scale *= 0.5;
        }
        sum
    } else {
        let om = -expm1(-0.5 * x);
        x - om * (2.0 + om)
    }
}

fn check_times(t: f64, tau_c: f64) -> Result<()> {
    require_non_negative("t", t)?;
    require_positive("tau_c", tau_c)
}

/// Exact χ for DEER and spin echo under ξ = e^{−|t|/τ_c}; for XY8 the
/// τ_p ≪ τ_c asymptote τ_p²t/(24τ_c).
pub fn chi_closed_form(seq: &SequenceSpec, t: f64, tau_c: f64) -> Result<f64> {
    check_times(t, tau_c)?;
    let x = t / tau_c;
    match *seq {
        SequenceSpec::RamseyDeer => Ok(2.0 * tau_c * tau_c * exp_m1_plus_x(x)),
        SequenceSpec::SpinEcho => Ok(2.0 * tau_c * tau_c * echo_shape(x)),
        SequenceSpec::Xy8 { tau_p } => {
            seq.validate()?;
            if tau_p > tau_c / 10.0 {
                return Err(Error::AsymptoticInvalid { tau_p, tau_c });
            }
            Ok(tau_p * tau_p * t / (24.0 * tau_c))
        }
    }
}

/// Short- and long-time limits of χ.
pub fn chi_asymptotic(seq: &SequenceSpec, t: f64, tau_c: f64, regime: Regime) -> Result<f64> {
    check_times(t, tau_c)?;
    match (*seq, regime) {
        (SequenceSpec::RamseyDeer, Regime::Short) => Ok(t * t - t * t * t / (3.0 * tau_c)),
        (SequenceSpec::SpinEcho, Regime::Short) => Ok(t * t * t / (6.0 * tau_c)),
        (SequenceSpec::RamseyDeer, Regime::Long) => Ok(2.0 * tau_c * t - 2.0 * tau_c * tau_c),
        (SequenceSpec::SpinEcho, Regime::Long) => Ok(2.0 * tau_c * t - 6.0 * tau_c * tau_c),
        (SequenceSpec::Xy8 { .. }, _) => chi_closed_form(seq, t, tau_c),
    }
}

/// χ by direct integration of the definition.
///
/// For an exponential kernel every segment pair integrates in closed form
/// and the pair sum collapses to a single pass over the segments. For a
/// general kernel χ = 2∫₀ᵗ ξ(u)W(u)du with W the (piecewise linear)
/// autocorrelation of η, integrated adaptively between the kinks of W.
pub fn chi_quadrature(seq: &SequenceSpec, t: f64, kernel: Kernel<'_>) -> Result<f64> {
    require_non_negative("t", t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let segs = seq.segments(t)?;
    match kernel {
        Kernel::Exponential { tau_c } => {
            require_positive("tau_c", tau_c)?;
            Ok(segment_exact(&segs, tau_c))
        }
        Kernel::General(xi) => general_quadrature(&segs, t, xi),
    }
}

fn segment_exact(segs: &[Segment], tau_c: f64) -> f64 {
    let tau2 = tau_c * tau_c;
    let mut chi = 0.0;
    // Σ_{i<j} η_i (1 − e^{−x_i}) e^{−(start_j − end_i)/τ_c}, carried forward
    let mut acc = 0.0;
    let mut last_end = 0.0;
    for s in segs {
        let x = (s.end - s.start) / tau_c;
        let one_minus = -expm1(-x);
        acc *= exp(-(s.start - last_end) / tau_c);
        chi += 2.0 * tau2 * exp_m1_plus_x(x);
        chi += 2.0 * tau2 * s.eta * one_minus * acc;
        acc = acc * exp(-x) + s.eta * one_minus;
        last_end = s.end;
    }
    chi
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

fn general_quadrature(segs: &[Segment], t: f64, xi: &dyn Fn(f64) -> f64) -> Result<f64> {
    let w = |u: f64| {
        let mut acc = 0.0;
        for a in segs {
            for b in segs {
                acc += a.eta * b.eta * overlap(a.start, a.end, b.start - u, b.end - u);
            }
        }
        acc
    };
    let mut kinks: Vec<f64> = Vec::new();
    for a in segs {
        for b in segs {
            for d in [b.start - a.start, b.start - a.end, b.end - a.start, b.end - a.end] {
                if d > 0.0 && d < t {
                    kinks.push(d);
                }
            }
        }
    }
    kinks.push(0.0);
    kinks.push(t);
    kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    kinks.dedup_by(|a, b| fabs(*a - *b) <= 1e-14 * t);
    let opts = Options {
        rel_tol: 1e-10,
        abs_tol: 1e-300,
        max_intervals: 20_000,
    };
    let r = quad::integrate_pieces(|u| xi(u) * w(u), &kinks, opts)?;
    Ok(2.0 * r.value)
}

/// Unnormalized filter function f(ω) = ∫₀ᵗ η(t′) e^{iωt′} dt′ as (re, im).
pub fn filter_function(segs: &[Segment], omega: f64) -> (f64, f64) {
    let mut re = 0.0;
    let mut im = 0.0;
    for s in segs {
        let len = s.end - s.start;
        let mid = 0.5 * (s.start + s.end);
        let half = 0.5 * omega * len;
        let sinc = if fabs(half) < 1e-8 { 1.0 - half * half / 6.0 } else { sin(half) / half };
        let amp = s.eta * len * sinc;
        re += amp * cos(omega * mid);
        im += amp * sin(omega * mid);
    }
    (re, im)
}

/// Result of the frequency-domain evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    /// Quadrature error plus a bound on the truncated high-frequency tail.
    pub error: f64,
}

/// χ = ∫|f(ω)|² S(ω) dω with S(ω) = (1/π) τ_c/(1+ω²τ_c²), so ∫S = ξ(0) = 1.
///
/// The substitution ω = tan(θ)/τ_c turns S dω into dθ/π. The integrand is
/// even in θ; the last ε of [0, π/2) is dropped and bounded using
/// |f| ≤ 2K/|ω| for K segments.
pub fn chi_spectral_estimate(seq: &SequenceSpec, t: f64, tau_c: f64, rel_tol: f64) -> Result<SpectralEstimate> {
    check_times(t, tau_c)?;
    if t == 0.0 {
        return Ok(SpectralEstimate { value: 0.0, error: 0.0 });
    }
    let segs = seq.segments(t)?;
    let k = segs.len() as f64;
    let scale = match *seq {
        SequenceSpec::SpinEcho => (t * t * t / tau_c).min(t * tau_c).min(t * t),
        SequenceSpec::Xy8 { tau_p } => (tau_p * tau_p * t / tau_c).min(t * t),
        SequenceSpec::RamseyDeer => (t * t).min(t * tau_c),
    };
    // (2/π)·(4K²τ²/3)·ε³ ≤ 1e-3 · rel_tol · scale
    let target = 1e-3 * rel_tol * scale;
    let eps = crate::math::pow(target * 3.0 * PI / (8.0 * k * k * tau_c * tau_c), 1.0 / 3.0).min(0.1);
    let tail = 8.0 * k * k * tau_c * tau_c * eps * eps * eps / (3.0 * PI);
    let integrand = |theta: f64| {
        let (re, im) = filter_function(&segs, tan(theta) / tau_c);
        re * re + im * im
    };
    let opts = Options {
        rel_tol: 0.5 * rel_tol,
        abs_tol: 0.1 * rel_tol * scale,
        max_intervals: 200_000,
    };
    let r = quad::integrate(integrand, 0.0, FRAC_PI_2 - eps, opts)?;
    let value = 2.0 * r.value / PI;
    let error = 2.0 * r.error / PI + tail;
    if error > rel_tol * fabs(value) {
        return Err(Error::Tolerance {
            value,
            achieved: error,
            requested: rel_tol * fabs(value),
        });
    }
    Ok(SpectralEstimate { value, error })
}

/// Spectral χ to relative accuracy 10⁻⁹.
pub fn chi_spectral(seq: &SequenceSpec, t: f64, tau_c: f64) -> Result<f64> {
    chi_spectral_estimate(seq, t, tau_c, 1e-9).map(|e| e.value)
}

/// χ on a time grid by the requested route (exponential ξ).
pub fn evaluate_chi(seq: &SequenceSpec, times: &[f64], tau_c: f64, method: ChiMethod) -> Result<ChiEvaluation> {
    let chi = times
        .iter()
        .map(|&t| match method {
            ChiMethod::ClosedForm => chi_closed_form(seq, t, tau_c),
            ChiMethod::Quadrature => chi_quadrature(seq, t, Kernel::Exponential { tau_c }),
            ChiMethod::Spectral => chi_spectral(seq, t, tau_c),
            ChiMethod::Asymptotic(r) => chi_asymptotic(seq, t, tau_c, r),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChiEvaluation {
        times: times.to_vec(),
        chi,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Values below come from a brute-force double integral of
    // η(t′)η(t″)e^{−|t′−t″|/τ_c} (independent of the closed forms).
    const DEER_T1: f64 = 0.735_758_882_342_884_6;
    const ECHO_T1: f64 = 0.116_486_395_358_182_73;

    fn rel(a: f64, b: f64) -> f64 {
        fabs(a - b) / fabs(b)
    }

    #[test]
    fn eta_definitions() {
        let echo = SequenceSpec::SpinEcho;
        assert_eq!(echo.eta(0.6, 1.0).unwrap(), -1.0);
        assert_eq!(echo.eta(0.49, 1.0).unwrap(), 1.0);
        assert_eq!(SequenceSpec::RamseyDeer.eta(0.3, 1.0).unwrap(), 1.0);
        let xy8 = SequenceSpec::Xy8 { tau_p: 1.0 };
        assert_eq!(xy8.eta(0.1, 2.0).unwrap(), 1.0);
        assert_eq!(xy8.eta(0.3, 2.0).unwrap(), -1.0);
        assert_eq!(xy8.eta(0.8, 2.0).unwrap(), 1.0);
        assert_eq!(xy8.eta(1.9, 2.0).unwrap(), 1.0);
        assert!(echo.eta(1.0, 1.0).is_err());
        assert!(xy8.eta(0.1, 2.5).is_err());
    }

    #[test]
    fn segments_agree_with_eta() {
        let xy8 = SequenceSpec::Xy8 { tau_p: 0.4 };
        let segs = xy8.segments(2.0).unwrap();
        let integral: f64 = segs.iter().map(|s| s.eta * (s.end - s.start)).sum();
        assert!(integral.abs() < 1e-14);
        for s in &segs {
            let mid = 0.5 * (s.start + s.end);
            assert_eq!(xy8.eta(mid, 2.0).unwrap(), s.eta);
        }
        assert_eq!(segs.last().unwrap().end, 2.0);
    }

    #[test]
    fn closed_form_oracles() {
        assert!(rel(chi_closed_form(&SequenceSpec::RamseyDeer, 1.0, 1.0).unwrap(), DEER_T1) < 1e-14);
        assert!(rel(chi_closed_form(&SequenceSpec::SpinEcho, 1.0, 1.0).unwrap(), ECHO_T1) < 1e-14);
    }

    #[test]
    fn echo_refocuses_static_bath() {
        let t = 1.0;
        let tau_c = 1e6 * t;
        let chi = chi_closed_form(&SequenceSpec::SpinEcho, t, tau_c).unwrap();
        // residual is the leading dynamic term t³/(6τ_c)
        assert!(chi < 1e-6 * t * t);
        assert!(rel(chi, t * t * t / (6.0 * tau_c)) < 1e-6);
    }

    #[test]
    fn series_and_direct_branches_meet() {
        for seq in [SequenceSpec::RamseyDeer, SequenceSpec::SpinEcho] {
            for &x in &[0.499_999_9, 0.5, 0.999_999_9, 1.0] {
                let a = chi_closed_form(&seq, x, 1.0).unwrap();
                let b = chi_quadrature(&seq, x, Kernel::Exponential { tau_c: 1.0 }).unwrap();
                assert!(rel(a, b) < 1e-12, "{seq:?} {x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for &t in &[0.01, 0.1, 1.0, 7.3, 20.0] {
            for seq in [SequenceSpec::RamseyDeer, SequenceSpec::SpinEcho] {
                let a = chi_closed_form(&seq, t, 1.0).unwrap();
                let b = chi_quadrature(&seq, t, Kernel::Exponential { tau_c: 1.0 }).unwrap();
                let xi = |u: f64| exp(-u);
                let c = chi_quadrature(&seq, t, Kernel::General(&xi)).unwrap();
                assert!(rel(a, b) < 1e-10);
                assert!(rel(a, c) < 1e-8);
            }
        }
    }

    #[test]
    fn static_kernel_gives_ballistic_chi() {
        let one = |_u: f64| 1.0;
        let chi = chi_quadrature(&SequenceSpec::RamseyDeer, 3.0, Kernel::General(&one)).unwrap();
        assert!(rel(chi, 9.0) < 1e-12);
    }

    #[test]
    fn spectral_matches_closed_form() {
        let v = chi_spectral(&SequenceSpec::RamseyDeer, 1.0, 1.0).unwrap();
        assert!(fabs(v - DEER_T1) < 1e-5);
        let v = chi_spectral(&SequenceSpec::SpinEcho, 1.0, 1.0).unwrap();
        assert!(rel(v, ECHO_T1) < 1e-7);
    }

    #[test]
    fn echo_filter_vanishes_at_dc() {
        let segs = SequenceSpec::SpinEcho.segments(2.0).unwrap();
        let (re, im) = filter_function(&segs, 0.0);
        assert!(re.abs() < 1e-15 && im.abs() < 1e-15);
    }

    #[test]
    fn parseval_identity() {
        // (1/2π)∫|f(ω)|²dω = ∫η² = t
        for seq in [SequenceSpec::RamseyDeer, SequenceSpec::SpinEcho] {
            let t = 1.5;
            let segs = seq.segments(t).unwrap();
            let opts = Options {
                rel_tol: 1e-9,
                abs_tol: 0.0,
                max_intervals: 100_000,
            };
            // |f|² decays like 1/ω²: integrate a finite window and add the
            // tail of its oscillation average (2/ω² for DEER, 6/ω² for echo).
            let big = 4000.0;
            let r = quad::integrate(
                |w| {
                    let (re, im) = filter_function(&segs, w);
                    re * re + im * im
                },
                0.0,
                big,
                opts,
            )
            .unwrap();
            let tail_avg = if segs.len() == 1 { 2.0 / big } else { 6.0 / big };
            let total = 2.0 * (r.value + tail_avg) / (2.0 * PI);
            assert!(rel(total, t) < 1e-4, "{seq:?}: {total}");
        }
    }

    #[test]
    fn xy8_asymptote() {
        let tau_c = 1.0;
        let tau_p = 0.01;
        let t = 50.0;
        let seq = SequenceSpec::Xy8 { tau_p };
        let q = chi_quadrature(&seq, t, Kernel::Exponential { tau_c }).unwrap();
        let a = chi_closed_form(&seq, t, tau_c).unwrap();
        assert!(rel(a, q) < 1e-2, "{a} vs {q}");
        assert!(matches!(
            chi_closed_form(&SequenceSpec::Xy8 { tau_p: 0.5 }, 5.0, 1.0),
            Err(Error::AsymptoticInvalid { .. })
        ));
    }

    #[test]
    fn asymptotic_limits() {
        let short = chi_asymptotic(&SequenceSpec::SpinEcho, 0.1, 1.0, Regime::Short).unwrap();
        let exact = chi_closed_form(&SequenceSpec::SpinEcho, 0.1, 1.0).unwrap();
        assert!(rel(short, exact) < 0.05);
        let long = chi_asymptotic(&SequenceSpec::RamseyDeer, 100.0, 1.0, Regime::Long).unwrap();
        let exact = chi_closed_form(&SequenceSpec::RamseyDeer, 100.0, 1.0).unwrap();
        assert!(fabs(long - exact) <= 2.0 * exp(-100.0) + 1e-13 * exact);
        let t = 1e-4;
        let deer = chi_asymptotic(&SequenceSpec::RamseyDeer, t, 1.0, Regime::Short).unwrap();
        assert!(rel(deer, t * t) < 1e-3);
    }
}
