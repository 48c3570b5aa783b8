//! Classical stochastic models for the bath spins' s_z(t).
//!
//! All paths use the spin-1/2 convention s_z ∈ [−1/2, +1/2], so that
//! ξ(t) = 4⟨s_z(t)s_z(0)⟩ equals one at zero lag.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::lsq::{levenberg_marquardt, LmOptions};
use crate::math::{ceil_steps, exp, expm1, sincos, sqrt};
use crate::rng::{self, Rng};

/// Resonant drive with Gaussian phase jumps (Lorentzian spectrum).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DriveSpec {
    /// Rabi frequency Ω (rad/μs).
    pub rabi: f64,
    /// Drive linewidth δω (rad/μs).
    pub linewidth: f64,
    /// Phase update interval δt (μs).
    pub sample_step: f64,
}

impl DriveSpec {
    pub fn validate(&self) -> Result<()> {
        require_positive("rabi", self.rabi)?;
        require_non_negative("linewidth", self.linewidth)?;
        require_positive("sample_step", self.sample_step)?;
        let sigma = self.jump_std();
        if sigma > 1.0 {
            return Err(Error::PhaseJumpTooLarge { sigma });
        }
        Ok(())
    }

    /// Per-step phase-jump standard deviation √(δω·δt).
    pub fn jump_std(&self) -> f64 {
        sqrt(self.linewidth * self.sample_step)
    }

    /// Largest step that resolves the Rabi period. The phase jumps are part
    /// of the model, so the linewidth only bounds the step through
    /// `validate`.
    pub fn max_step(&self) -> f64 {
        0.1 / self.rabi
    }

    /// Strong-dephasing estimate τ_c ≈ δω/(2Ω²), valid for δω ≫ Ω.
    pub fn tau_c_estimate(&self) -> f64 {
        self.linewidth / (2.0 * self.rabi * self.rabi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum NoiseModelSpec {
    GaussMarkov { tau_c: f64 },
    Telegraph { tau_c: f64 },
    DrivenSpin(DriveSpec),
    Static,
}

impl NoiseModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModelSpec::GaussMarkov { tau_c } | NoiseModelSpec::Telegraph { tau_c } => require_positive("tau_c", *tau_c),
            NoiseModelSpec::DrivenSpin(d) => d.validate(),
            NoiseModelSpec::Static => Ok(()),
        }
    }

    pub fn tau_c(&self) -> Option<f64> {
        match self {
            NoiseModelSpec::GaussMarkov { tau_c } | NoiseModelSpec::Telegraph { tau_c } => Some(*tau_c),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            NoiseModelSpec::GaussMarkov { .. } => "gauss_markov",
            NoiseModelSpec::Telegraph { .. } => "telegraph",
            NoiseModelSpec::DrivenSpin(_) => "driven_spin",
            NoiseModelSpec::Static => "static",
        }
    }

    /// Checks that `dt` resolves the model's fastest timescale.
    pub fn check_step(&self, dt: f64) -> Result<()> {
        require_positive("dt", dt)?;
        let limit = match self {
            NoiseModelSpec::GaussMarkov { tau_c } | NoiseModelSpec::Telegraph { tau_c } => tau_c / 10.0,
            NoiseModelSpec::DrivenSpin(d) => d.max_step(),
            NoiseModelSpec::Static => f64::INFINITY,
        };
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::UnresolvedStep { dt, limit });
        }
        Ok(())
    }
}

/// s_z sampled at `t_k = k·dt`, k = 0, 1, ….
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct NoiseTrajectory {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl NoiseTrajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.dt)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AutocorrelationEstimate {
    pub lags: Vec<f64>,
    pub xi: Vec<f64>,
    pub stderr: Vec<f64>,
}

fn check_common(tau_c: f64, dt: f64, duration: f64) -> Result<usize> {
    require_positive("tau_c", tau_c)?;
    require_positive("duration", duration)?;
    require_positive("dt", dt)?;
    if dt > tau_c / 10.0 {
        return Err(Error::UnresolvedStep { dt, limit: tau_c / 10.0 });
    }
    Ok(ceil_steps(duration, dt))
}

fn random_sign(rng: &mut Rng) -> f64 {
    if rng.random::<bool>() {
        0.5
    } else {
        -0.5
    }
}

/// Continuous-time telegraph path: initial value and flip instants.
#[derive(Debug, Clone, PartialEq)]
pub struct TelegraphPath {
    pub initial: f64,
    pub flips: Vec<f64>,
}

impl TelegraphPath {
    /// Draws a stationary path on `[0, horizon]`. The flip rate is
    /// γ = 1/(2τ_c): each flip reverses the sign, so ⟨s(t)s(0)⟩ decays as
    /// e^{−2γ|t|} = e^{−|t|/τ_c}.
    pub fn sample(rng: &mut Rng, tau_c: f64, horizon: f64) -> Self {
        let initial = random_sign(rng);
        let mean_wait = 2.0 * tau_c;
        let mut flips = Vec::new();
        let mut t = 0.0;
        loop {
            let e: f64 = Exp1.sample(rng);
            t += mean_wait * e;
            if t > horizon {
                break;
            }
            flips.push(t);
        }
        Self { initial, flips }
    }

    /// Writes s(k·dt) into `out`.
    pub fn fill_grid(&self, dt: f64, out: &mut [f64]) {
        let mut value = self.initial;
        let mut next = 0;
        for (k, v) in out.iter_mut().enumerate() {
            let t = k as f64 * dt;
            while next < self.flips.len() && self.flips[next] <= t {
                value = -value;
                next += 1;
            }
            *v = value;
        }
    }
}

/// Exact Ornstein–Uhlenbeck recursion with stationary start and variance 1/4.
pub fn fill_gauss_markov(rng: &mut Rng, tau_c: f64, dt: f64, out: &mut [f64]) {
    let a = exp(-dt / tau_c);
    let b = 0.5 * sqrt(-expm1(-2.0 * dt / tau_c));
    let z0: f64 = StandardNormal.sample(rng);
    let mut x = 0.5 * z0;
    for v in out.iter_mut() {
        *v = x;
        let z: f64 = StandardNormal.sample(rng);
        x = a * x + b * z;
    }
}

/// Drive phase θ_k at t = k·δt: uniform start, Gaussian increments.
pub fn fill_drive_phase(rng: &mut Rng, drive: &DriveSpec, out: &mut [f64]) {
    let sigma = drive.jump_std();
    let mut theta = 2.0 * PI * rng.random::<f64>();
    for v in out.iter_mut() {
        *v = theta;
        if sigma > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            theta += sigma * z;
        }
    }
}

/// Bloch vector rotated each step about (cos θ_k, sin θ_k, 0) by Ω·δt;
/// writes s_z into `out`.
///
/// Works in the frame that follows the drive axis: u_k = R_z(−θ_k)·s_k
/// obeys u_{k+1} = R_z(−Δθ_k)·R_x(Ω·δt)·u_k and has the same z component,
/// so θ_0 drops out and each step costs one sincos.
pub fn fill_driven_spin(rng: &mut Rng, drive: &DriveSpec, out: &mut [f64]) {
    let sigma = drive.jump_std();
    let mut u = [0.0, 0.0, random_sign(rng)];
    let angle = drive.rabi * drive.sample_step;
    let (sa, ca) = sincos(angle);
    for v in out.iter_mut() {
        *v = u[2];
        // R_x(a)
        let y = u[1] * ca - u[2] * sa;
        let z = u[1] * sa + u[2] * ca;
        u[1] = y;
        u[2] = z;
        if sigma > 0.0 {
            let dz: f64 = StandardNormal.sample(rng);
            let (sd, cd) = sincos(sigma * dz);
            // R_z(−Δθ)
            let x = u[0] * cd + u[1] * sd;
            let y = u[1] * cd - u[0] * sd;
            u[0] = x;
            u[1] = y;
        }
    }
}

/// Random telegraph path taking values ±1/2.
pub fn sample_telegraph(tau_c: f64, dt: f64, duration: f64, seed: u64) -> Result<NoiseTrajectory> {
    let n = check_common(tau_c, dt, duration)?;
    let mut rng = rng::from_seed(seed);
    let path = TelegraphPath::sample(&mut rng, tau_c, n as f64 * dt);
    let mut values = vec![0.0; n + 1];
    path.fill_grid(dt, &mut values);
    Ok(NoiseTrajectory { dt, values })
}

/// Stationary Gauss–Markov path, mean 0 and variance 1/4.
pub fn sample_gauss_markov(tau_c: f64, dt: f64, duration: f64, seed: u64) -> Result<NoiseTrajectory> {
    let n = check_common(tau_c, dt, duration)?;
    let mut rng = rng::from_seed(seed);
    let mut values = vec![0.0; n + 1];
    fill_gauss_markov(&mut rng, tau_c, dt, &mut values);
    Ok(NoiseTrajectory { dt, values })
}

/// Phase random walk on the grid `k·δt`.
pub fn sample_drive_phase(drive: &DriveSpec, duration: f64, seed: u64) -> Result<Vec<f64>> {
    drive.validate()?;
    require_positive("duration", duration)?;
    let n = ceil_steps(duration, drive.sample_step);
    let mut rng = rng::from_seed(seed);
    let mut theta = vec![0.0; n + 1];
    fill_drive_phase(&mut rng, drive, &mut theta);
    Ok(theta)
}

/// s_z of a single spin under the noisy drive.
pub fn simulate_driven_spin(drive: &DriveSpec, duration: f64, seed: u64) -> Result<NoiseTrajectory> {
    drive.validate()?;
    require_positive("duration", duration)?;
    let limit = drive.max_step();
    if drive.sample_step > limit * (1.0 + 1e-12) {
        return Err(Error::UnresolvedStep {
            dt: drive.sample_step,
            limit,
        });
    }
    let n = ceil_steps(duration, drive.sample_step);
    let mut rng = rng::from_seed(seed);
    let mut values = vec![0.0; n + 1];
    fill_driven_spin(&mut rng, drive, &mut values);
    Ok(NoiseTrajectory {
        dt: drive.sample_step,
        values,
    })
}

/// Frozen ±1/2 path.
pub fn sample_static(dt: f64, duration: f64, seed: u64) -> Result<NoiseTrajectory> {
    require_positive("dt", dt)?;
    require_positive("duration", duration)?;
    let n = ceil_steps(duration, dt);
    let mut rng = rng::from_seed(seed);
    let s = random_sign(&mut rng);
    Ok(NoiseTrajectory { dt, values: vec![s; n + 1] })
}

/// Pooled autocorrelation at every lag up to `max_lag`.
pub fn autocorrelation(paths: &[NoiseTrajectory], max_lag: f64) -> Result<AutocorrelationEstimate> {
    autocorrelation_strided(paths, max_lag, 1)
}

/// Pooled autocorrelation at lags that are multiples of `lag_stride` steps.
///
/// Each path contributes the unbiased lag average
/// A_p(L) = Σ_k x_k x_{k+L} / (n − L); the estimate is
/// ξ(L) = Σ_p A_p(L) / Σ_p A_p(0), with jackknife errors over paths.
pub fn autocorrelation_strided(paths: &[NoiseTrajectory], max_lag: f64, lag_stride: usize) -> Result<AutocorrelationEstimate> {
    let first = paths.first().ok_or(Error::Empty("paths"))?;
    let dt = first.dt;
    if paths.iter().any(|p| p.dt != dt) {
        return Err(Error::Mismatch("paths do not share dt".into()));
    }
    require_non_negative("max_lag", max_lag)?;
    let stride = lag_stride.max(1);
    let shortest = paths.iter().map(|p| p.values.len()).min().unwrap_or(0);
    let duration = (shortest.saturating_sub(1)) as f64 * dt;
    if max_lag > duration / 2.0 + 1e-9 * dt {
        return Err(Error::OutOfRange {
            name: "max_lag",
            value: max_lag,
            reason: "must not exceed half the path duration",
        });
    }
    let max_steps = crate::math::floor(max_lag / dt + 1e-9) as usize;
    let lag_steps: Vec<usize> = (0..=max_steps).step_by(stride).collect();
    let nl = lag_steps.len();
    let np = paths.len();
    let mut per_path = vec![0.0; np * nl];
    for (p, path) in paths.iter().enumerate() {
        let x = &path.values;
        let n = x.len();
        for (j, &lag) in lag_steps.iter().enumerate() {
            let mut acc = 0.0;
            for k in 0..n - lag {
                acc += x[k] * x[k + lag];
            }
            per_path[p * nl + j] = acc / (n - lag) as f64;
        }
    }
    let mut totals = vec![0.0; nl];
    for p in 0..np {
        for j in 0..nl {
            totals[j] += per_path[p * nl + j];
        }
    }
    let zero = totals[0];
    if !(zero > 0.0) {
        return Err(Error::invalid("paths", "zero variance at lag zero"));
    }
    let xi: Vec<f64> = totals.iter().map(|t| t / zero).collect();
    let mut stderr = vec![0.0; nl];
    if np > 1 {
        let npf = np as f64;
        for j in 0..nl {
            let mut loo = Vec::with_capacity(np);
            for p in 0..np {
                let z = zero - per_path[p * nl];
                loo.push((totals[j] - per_path[p * nl + j]) / z);
            }
            let m = crate::stats::mean(&loo);
            let ss: f64 = loo.iter().map(|v| (v - m) * (v - m)).sum();
            stderr[j] = sqrt((npf - 1.0) / npf * ss);
        }
    }
    Ok(AutocorrelationEstimate {
        lags: lag_steps.iter().map(|&l| l as f64 * dt).collect(),
        xi,
        stderr,
    })
}

/// Least-squares fit of e^{−t/τ_c} to the leading part of ξ(t) (lags with
/// ξ > 0.05 up to the first drop below it). Returns (τ_c, 1σ error).
///
/// Lags are weighted equally: the per-lag errors are strongly correlated and
/// nearly vanish at short lags, where a driven spin's ξ is not yet
/// exponential, so inverse-variance weights would fit the onset alone. The
/// error comes from the residual scatter.
pub fn estimate_tau_c_from_xi(xi: &AutocorrelationEstimate) -> Result<(f64, f64)> {
    if xi.xi.iter().all(|&v| v >= 0.7) {
        return Err(Error::Unresolved("autocorrelation never drops below 0.7; increase the duration".into()));
    }
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for i in 0..xi.lags.len() {
        if xi.xi[i] <= 0.05 {
            break;
        }
        if xi.lags[i] > 0.0 {
            pts.push((xi.lags[i], xi.xi[i]));
        }
    }
    if pts.len() < 5 {
        return Err(Error::TooFewPoints { needed: 5, got: pts.len() });
    }
    // Start from a log-linear fit.
    let lx: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ly: Vec<f64> = pts.iter().map(|p| crate::math::log(p.1)).collect();
    let start = crate::stats::fit_line(&lx, &ly, None)
        .map(|f| -1.0 / f.slope)
        .filter(|t| t.is_finite() && *t > 0.0)
        .unwrap_or(lx[lx.len() / 2]);
    let t_max = lx[lx.len() - 1];
    let res = levenberg_marquardt(
        |p: &[f64; 1], out: &mut [f64]| {
            for (i, pt) in pts.iter().enumerate() {
                out[i] = exp(-pt.0 / p[0]) - pt.1;
            }
            true
        },
        pts.len(),
        [start],
        [1e-6 * t_max],
        [1e6 * t_max],
        &LmOptions::default(),
    );
    let tau = res.params[0];
    let var = res.covariance.map(|c| c[0][0]).unwrap_or(f64::NAN) * res.cost / (pts.len() - 1) as f64;
    Ok((tau, sqrt(var.max(0.0))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::cos;

    #[test]
    fn telegraph_is_binary_and_deterministic() {
        let a = sample_telegraph(1.0, 0.01, 10.0, 7).unwrap();
        assert!(a.values.iter().all(|&v| v == 0.5 || v == -0.5));
        assert!((a.values.len() as f64) * a.dt >= 10.0);
        let b = sample_telegraph(1.0, 0.01, 10.0, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn step_guard() {
        assert!(matches!(sample_telegraph(1.0, 0.2, 10.0, 1), Err(Error::UnresolvedStep { .. })));
        assert!(sample_gauss_markov(1.0, 0.01, 0.0, 1).is_err());
        assert!(sample_gauss_markov(-1.0, 0.01, 1.0, 1).is_err());
    }

    #[test]
    fn monochromatic_drive_has_constant_phase() {
        let d = DriveSpec {
            rabi: 1.0,
            linewidth: 0.0,
            sample_step: 0.01,
        };
        let th = sample_drive_phase(&d, 5.0, 3).unwrap();
        assert!(th.iter().all(|&v| v == th[0]));
    }

    #[test]
    fn large_phase_jumps_rejected() {
        let d = DriveSpec {
            rabi: 1.0,
            linewidth: 200.0,
            sample_step: 0.01,
        };
        assert!(matches!(sample_drive_phase(&d, 1.0, 0), Err(Error::PhaseJumpTooLarge { .. })));
    }

    #[test]
    fn pure_rabi_oscillation() {
        let d = DriveSpec {
            rabi: 2.0,
            linewidth: 0.0,
            sample_step: 0.001,
        };
        for seed in 0..20 {
            let tr = simulate_driven_spin(&d, 5.0, seed).unwrap();
            let sign = tr.values[0] * 2.0;
            for (t, v) in tr.times().zip(&tr.values) {
                assert!((v - sign * 0.5 * cos(2.0 * t)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn static_paths_have_unit_autocorrelation() {
        let paths: Vec<_> = (0..5).map(|s| sample_static(0.1, 10.0, s).unwrap()).collect();
        let est = autocorrelation(&paths, 5.0).unwrap();
        assert!(est.xi.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert!(est.stderr.iter().all(|&s| s.abs() < 1e-15));
    }

    #[test]
    fn autocorrelation_input_errors() {
        assert!(matches!(autocorrelation(&[], 1.0), Err(Error::Empty(_))));
        let a = sample_static(0.1, 10.0, 1).unwrap();
        let b = sample_static(0.2, 10.0, 1).unwrap();
        assert!(matches!(autocorrelation(&[a.clone(), b], 1.0), Err(Error::Mismatch(_))));
        assert!(autocorrelation(&[a], 6.0).is_err());
    }

    #[test]
    fn exact_exponential_recovers_tau() {
        let lags: Vec<f64> = (0..60).map(|i| 0.25 * i as f64).collect();
        let xi = AutocorrelationEstimate {
            xi: lags.iter().map(|t| exp(-t / 3.0)).collect(),
            stderr: vec![0.0; lags.len()],
            lags,
        };
        let (tau, err) = estimate_tau_c_from_xi(&xi).unwrap();
        assert!((tau - 3.0).abs() < 1e-8);
        assert!(err < 1e-6);
    }

    #[test]
    fn slow_decay_is_unresolved() {
        let lags: Vec<f64> = (0..20).map(|i| 0.1 * i as f64).collect();
        let xi = AutocorrelationEstimate {
            xi: lags.iter().map(|t| exp(-t / 100.0)).collect(),
            stderr: vec![0.0; lags.len()],
            lags,
        };
        assert!(matches!(estimate_tau_c_from_xi(&xi), Err(Error::Unresolved(_))));
    }
}
