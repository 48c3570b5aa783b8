use rustfft::{num_complex::Complex, FftPlanner};
use spinbath_core::noise::{
    autocorrelation, estimate_tau_c_from_xi, sample_gauss_markov, sample_telegraph, simulate_driven_spin, DriveSpec, NoiseTrajectory,
};

fn paths<F: Fn(u64) -> NoiseTrajectory>(n: u64, f: F) -> Vec<NoiseTrajectory> {
    (0..n).map(f).collect()
}

fn assert_exponential(paths: &[NoiseTrajectory], tau_c: f64, tol: f64) {
    let xi = autocorrelation(paths, 3.0 * tau_c).unwrap();
    for (k, (&lag, &x)) in xi.lags.iter().zip(&xi.xi).enumerate() {
        let want = (-lag / tau_c).exp();
        assert!((x - want).abs() < tol, "lag {lag} (#{k}): xi {x} vs {want}");
    }
}

#[test]
fn telegraph_autocorrelation_is_exponential() {
    let tau: f64 = 0.5;
    let p = paths(200, |s| sample_telegraph(tau, 0.01, 100.0, s).unwrap());
    assert_exponential(&p, tau, 0.03);
}

#[test]
fn gauss_markov_autocorrelation_is_exponential() {
    let tau: f64 = 0.5;
    let p = paths(200, |s| sample_gauss_markov(tau, 0.01, 100.0, s).unwrap());
    assert_exponential(&p, tau, 0.03);
}

#[test]
fn telegraph_flip_rate() {
    let (tau, dur) = (0.2, 2000.0);
    let p = sample_telegraph(tau, 0.001, dur, 7).unwrap();
    let flips = p.values.windows(2).filter(|w| w[0] != w[1]).count() as f64;
    // Poisson with mean dur/(2τ) = 5000; 4σ ≈ 283.
    let expected = dur / (2.0 * tau);
    assert!((flips - expected).abs() < 4.0 * expected.sqrt(), "{flips} flips vs {expected}");
    assert!(p.values.iter().all(|&v| v == 0.5 || v == -0.5));
}

#[test]
fn gauss_markov_is_stationary() {
    let tau = 1.0;
    let p = paths(400, |s| sample_gauss_markov(tau, 0.05, 20.0, s).unwrap());
    let n = p[0].values.len();
    for k in [0, n / 2, n - 1] {
        let var: f64 = p.iter().map(|x| x.values[k] * x.values[k]).sum::<f64>() / p.len() as f64;
        let mean: f64 = p.iter().map(|x| x.values[k]).sum::<f64>() / p.len() as f64;
        // Variance 1/4; sample std of the variance estimate ≈ 0.25·√(2/400).
        assert!((var - 0.25).abs() < 0.06, "step {k}: var {var}");
        assert!(mean.abs() < 4.0 * 0.5 / 20.0, "step {k}: mean {mean}");
    }
}

/// Averaged periodogram of the sampled OU process against the exact AR(1)
/// spectrum (1 − a²)/(1 − 2a·cos ω + a²).
#[test]
fn gauss_markov_spectrum_is_lorentzian() {
    let (tau, dt, len): (f64, f64, usize) = (0.2, 0.01, 4096);
    let a: f64 = (-dt / tau).exp();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(len);
    let mut psd = vec![0.0; len / 2];
    let segments = 200;
    for s in 0..segments {
        let p = sample_gauss_markov(tau, dt, (len - 1) as f64 * dt, 1000 + s).unwrap();
        let mut buf: Vec<Complex<f64>> = p.values[..len].iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft.process(&mut buf);
        for (k, slot) in psd.iter_mut().enumerate() {
            *slot += buf[k].norm_sqr() / (len as f64 * segments as f64);
        }
    }
    let exact = |k: usize| {
        let w = 2.0 * std::f64::consts::PI * k as f64 / len as f64;
        0.25 * (1.0 - a * a) / (1.0 - 2.0 * a * w.cos() + a * a)
    };
    // Band averages over 16 bins: relative noise ≈ 1/√(16·200).
    for start in [16, 64, 256, 1024] {
        let band = start..start + 16;
        let got: f64 = band.clone().map(|k| psd[k]).sum();
        let want: f64 = band.map(exact).sum();
        assert!((got / want - 1.0).abs() < 0.1, "bins from {start}: {got} vs {want}");
    }
}

#[test]
fn driven_spin_stays_on_the_bloch_sphere_and_decorrelates() {
    let drive = DriveSpec {
        rabi: 2.0 * std::f64::consts::PI * 2.0,
        linewidth: 2.0 * std::f64::consts::PI * 20.0,
        sample_step: 0.001,
    };
    let tau_est = drive.tau_c_estimate();
    let p = paths(100, |s| simulate_driven_spin(&drive, 60.0 * tau_est, s).unwrap());
    for path in &p {
        assert!(path.values.iter().all(|v| v.abs() <= 0.5 + 1e-12));
        // Continuity: one step rotates by at most Ω·δt plus nothing from the
        // phase jump (a z rotation).
        let max_jump = path.values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(max_jump <= 0.5 * drive.rabi * drive.sample_step + 1e-12, "jump {max_jump}");
    }
    let xi = autocorrelation(&p, 4.0 * tau_est).unwrap();
    let (tau, _) = estimate_tau_c_from_xi(&xi).unwrap();
    assert!((tau / tau_est - 1.0).abs() < 0.15, "tau {tau} vs estimate {tau_est}");
}
