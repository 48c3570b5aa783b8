//! Monte Carlo disorder average: fresh geometry and fresh bath trajectories
//! per realization, probe phase φ(t) = Σ_i c_i ∫ η(t′) s_i(t′) dt′, and
//! C(t) = ⟨cos φ(t)⟩.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::curve::CoherenceCurve;
use crate::error::{require_positive, Error, Result};
use crate::geometry::{positional_prefactor, sample_couplings, GeometrySpec, DEFAULT_TAIL_TOLERANCE};
use crate::math::{cos, exp, expm1, fabs, log, pow, round, sin, sqrt, unit_ball_volume};
use crate::noise::{fill_driven_spin, fill_gauss_markov, NoiseModelSpec, TelegraphPath};
use crate::quad::{self, Options};
use crate::rng::{self, Purpose, Rng};
use crate::runner::Runner;
use crate::sequence::{chi_closed_form, chi_quadrature, Kernel, SequenceSpec};
use crate::stats::jackknife_mean;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EnsembleSpec {
    pub geometry: GeometrySpec,
    pub noise: NoiseModelSpec,
    pub sequence: SequenceSpec,
    pub times: Vec<f64>,
    pub n_realizations: usize,
    pub master_seed: u64,
    /// Noise grid step (μs).
    pub dt: f64,
    /// Bound on the neglected far-field share of −log C at the last time.
    pub tail_tolerance: f64,
    /// Reuse one bath configuration for every realization.
    pub fixed_geometry: bool,
    /// Replace a Gauss–Markov bath by one process of amplitude √(Σc_i²).
    /// Exact in law (a sum of independent OU processes with a common τ_c is
    /// an OU process), and much cheaper.
    pub aggregate_gaussian: bool,
}

impl EnsembleSpec {
    pub fn new(
        geometry: GeometrySpec,
        noise: NoiseModelSpec,
        sequence: SequenceSpec,
        times: Vec<f64>,
        n_realizations: usize,
        master_seed: u64,
        dt: f64,
    ) -> Self {
        Self {
            geometry,
            noise,
            sequence,
            times,
            n_realizations,
            master_seed,
            dt,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            fixed_geometry: false,
            aggregate_gaussian: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Simulation {
    /// Times are the grid-snapped output times.
    pub curve: CoherenceCurve,
    /// ⟨sin φ⟩ and its standard error (zero in expectation).
    pub sin_mean: Vec<f64>,
    pub sin_stderr: Vec<f64>,
    pub radius: f64,
    pub mean_spins: f64,
    /// C at the last time is below three standard errors.
    pub below_noise_floor: bool,
}

/// Grid steps of each output time, adjusted so that every η switch falls on
/// a grid point.
fn snap_steps(seq: &SequenceSpec, times: &[f64], dt: f64) -> Result<Vec<usize>> {
    let steps: Vec<usize> = match *seq {
        SequenceSpec::RamseyDeer => times.iter().map(|&t| round(t / dt).max(1.0) as usize).collect(),
        SequenceSpec::SpinEcho => times.iter().map(|&t| 2 * round(t / (2.0 * dt)).max(1.0) as usize).collect(),
        SequenceSpec::Xy8 { tau_p } => {
            let q = tau_p / (4.0 * dt);
            if fabs(q - round(q)) > 1e-6 * q.max(1.0) || round(q) < 1.0 {
                return Err(Error::invalid("dt", "XY8 needs tau_p/4 to be a whole number of steps"));
            }
            let per_period = 4 * round(q) as usize;
            times.iter().map(|&t| round(t / tau_p).max(1.0) as usize * per_period).collect()
        }
    };
    if steps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("times", "output times collide after snapping to the grid"));
    }
    Ok(steps)
}

struct Plan {
    steps: Vec<usize>,
    /// (start index, end index, η) per output time.
    segments: Vec<Vec<(usize, usize, f64)>>,
    /// ∫η dt′ per output time.
    eta_integral: Vec<f64>,
    max_steps: usize,
}

fn plan(spec: &EnsembleSpec) -> Result<Plan> {
    let steps = snap_steps(&spec.sequence, &spec.times, spec.dt)?;
    let mut segments = Vec::with_capacity(steps.len());
    let mut eta_integral = Vec::with_capacity(steps.len());
    for &m in &steps {
        let t = m as f64 * spec.dt;
        let segs = spec.sequence.segments(t)?;
        let idx: Vec<(usize, usize, f64)> = segs
            .iter()
            .map(|s| (round(s.start / spec.dt) as usize, round(s.end / spec.dt) as usize, s.eta))
            .collect();
        eta_integral.push(idx.iter().map(|&(a, b, e)| e * (b - a) as f64 * spec.dt).sum());
        segments.push(idx);
    }
    let max_steps = *steps.last().unwrap_or(&0);
    Ok(Plan {
        steps,
        segments,
        eta_integral,
        max_steps,
    })
}

fn validate(spec: &EnsembleSpec) -> Result<()> {
    spec.geometry.validate()?;
    spec.noise.validate()?;
    spec.sequence.validate()?;
    if spec.n_realizations == 0 {
        return Err(Error::invalid("n_realizations", "must be at least 1"));
    }
    if spec.times.is_empty() {
        return Err(Error::Empty("times"));
    }
    if spec.times.iter().any(|&t| !(t > 0.0 && t.is_finite())) || spec.times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("times", "must be positive and strictly increasing"));
    }
    spec.noise.check_step(spec.dt)?;
    if let NoiseModelSpec::DrivenSpin(d) = spec.noise {
        if fabs(d.sample_step - spec.dt) > 1e-12 * spec.dt {
            return Err(Error::invalid("dt", "must equal the drive sample step"));
        }
    }
    require_positive("tail_tolerance", spec.tail_tolerance)
}

/// Phase variance used to size the region: far spins contribute c²χ/8
/// under the sequence's own χ. Without a known τ_c, t² bounds χ.
fn chi_bound(noise: &NoiseModelSpec, seq: &SequenceSpec, t_max: f64) -> Result<f64> {
    Ok(match *noise {
        NoiseModelSpec::GaussMarkov { tau_c } | NoiseModelSpec::Telegraph { tau_c } => match seq {
            SequenceSpec::Xy8 { .. } => chi_quadrature(seq, t_max, Kernel::Exponential { tau_c })?,
            _ => chi_closed_form(seq, t_max, tau_c)?,
        },
        _ => t_max * t_max,
    })
}

/// Adds c·∫₀^{t_j} x into `acc[j]` by the trapezoid rule.
fn accumulate(acc: &mut [f64], x: &[f64], c: f64, dt: f64) {
    let mut s = 0.0;
    let h = 0.5 * dt * c;
    for j in 1..acc.len() {
        s += h * (x[j - 1] + x[j]);
        acc[j] += s;
    }
}

fn random_sign(rng: &mut Rng) -> f64 {
    if rng.random::<bool>() {
        0.5
    } else {
        -0.5
    }
}

struct Realization {
    cos: Vec<f64>,
    sin: Vec<f64>,
    spins: usize,
}

fn run_realization(spec: &EnsembleSpec, plan: &Plan, radius: f64, r: usize) -> Realization {
    let geo_index = if spec.fixed_geometry { 0 } else { r as u64 };
    let mut geo_rng = rng::stream(spec.master_seed, geo_index, Purpose::Geometry);
    let mut couplings = Vec::new();
    sample_couplings(&mut geo_rng, &spec.geometry, radius, &mut couplings);
    let mut rng = rng::stream(spec.master_seed, r as u64, Purpose::Noise);

    let len = plan.max_steps + 1;
    let dt = spec.dt;
    let mut phi_grid = vec![0.0; len];
    let mut static_weight = 0.0;
    let mut scratch = vec![0.0; len];
    match spec.noise {
        NoiseModelSpec::Static => {
            for &c in &couplings {
                static_weight += c * random_sign(&mut rng);
            }
        }
        NoiseModelSpec::GaussMarkov { tau_c } => {
            if spec.aggregate_gaussian {
                let c_eff = sqrt(couplings.iter().map(|c| c * c).sum::<f64>());
                if c_eff > 0.0 {
                    fill_gauss_markov(&mut rng, tau_c, dt, &mut scratch);
                    accumulate(&mut phi_grid, &scratch, c_eff, dt);
                }
            } else {
                for &c in &couplings {
                    fill_gauss_markov(&mut rng, tau_c, dt, &mut scratch);
                    accumulate(&mut phi_grid, &scratch, c, dt);
                }
            }
        }
        NoiseModelSpec::Telegraph { tau_c } => {
            let horizon = plan.max_steps as f64 * dt;
            for &c in &couplings {
                let path = TelegraphPath::sample(&mut rng, tau_c, horizon);
                if path.flips.is_empty() {
                    static_weight += c * path.initial;
                } else {
                    path.fill_grid(dt, &mut scratch);
                    accumulate(&mut phi_grid, &scratch, c, dt);
                }
            }
        }
        NoiseModelSpec::DrivenSpin(drive) => {
            for &c in &couplings {
                fill_driven_spin(&mut rng, &drive, &mut scratch);
                accumulate(&mut phi_grid, &scratch, c, dt);
            }
        }
    }
    let k = plan.steps.len();
    let mut out_cos = Vec::with_capacity(k);
    let mut out_sin = Vec::with_capacity(k);
    for i in 0..k {
        let mut phi = static_weight * plan.eta_integral[i];
        for &(a, b, eta) in &plan.segments[i] {
            phi += eta * (phi_grid[b] - phi_grid[a]);
        }
        out_cos.push(cos(phi));
        out_sin.push(sin(phi));
    }
    Realization {
        cos: out_cos,
        sin: out_sin,
        spins: couplings.len(),
    }
}

fn reduce(results: &[Realization], times: Vec<f64>, radius: f64) -> Result<Simulation> {
    let k = times.len();
    let n = results.len();
    let mut coherence = Vec::with_capacity(k);
    let mut stderr = Vec::with_capacity(k);
    let mut sin_mean = Vec::with_capacity(k);
    let mut sin_stderr = Vec::with_capacity(k);
    let mut column = vec![0.0; n];
    for i in 0..k {
        for (r, res) in results.iter().enumerate() {
            column[r] = res.cos[i];
        }
        let (m, s) = jackknife_mean(&column);
        coherence.push(m);
        stderr.push(s);
        for (r, res) in results.iter().enumerate() {
            column[r] = res.sin[i];
        }
        let (m, s) = jackknife_mean(&column);
        sin_mean.push(m);
        sin_stderr.push(s);
    }
    let mean_spins = results.iter().map(|r| r.spins as f64).sum::<f64>() / n as f64;
    let below_noise_floor = match (coherence.last(), stderr.last()) {
        (Some(&c), Some(&s)) => c < 3.0 * s,
        _ => false,
    };
    Ok(Simulation {
        curve: CoherenceCurve::new(times, coherence, stderr)?,
        sin_mean,
        sin_stderr,
        radius,
        mean_spins,
        below_noise_floor,
    })
}

/// Full disorder average over `spec.n_realizations` realizations.
///
/// Realization r draws its geometry and its trajectories from counter-based
/// streams keyed by (master_seed, r), and the reduction is an in-order sum,
/// so the result does not depend on how the runner schedules work.
pub fn simulate_coherence<R: Runner>(spec: &EnsembleSpec, runner: &R) -> Result<Simulation> {
    validate(spec)?;
    let plan = plan(spec)?;
    let t_max = plan.max_steps as f64 * spec.dt;
    let mut radius = spec
        .geometry
        .radius_for(chi_bound(&spec.noise, &spec.sequence, t_max)?, spec.tail_tolerance)?;
    if let (None, NoiseModelSpec::Telegraph { tau_c }) = (spec.geometry.region_radius, spec.noise) {
        // a single flip of a spin with c·min(t, τ_c) ≳ 1 is not perturbative
        let s = t_max.min(tau_c);
        radius = radius.max(3.0 * spec.geometry.resonance_radius(s * s));
    }
    let results = runner.map(spec.n_realizations, |r| run_realization(spec, &plan, radius, r));
    let times = plan.steps.iter().map(|&m| m as f64 * spec.dt).collect();
    reduce(&results, times, radius)
}

/// Frozen ±1/2 bath under a Ramsey sequence: φ(t) = t·Σ_i c_i s_i, at the
/// exact requested times.
pub fn simulate_static_ramsey<R: Runner>(geometry: &GeometrySpec, times: &[f64], n_realizations: usize, seed: u64, runner: &R) -> Result<Simulation> {
    simulate_static_ramsey_with(geometry, times, n_realizations, seed, DEFAULT_TAIL_TOLERANCE, runner)
}

pub fn simulate_static_ramsey_with<R: Runner>(
    geometry: &GeometrySpec,
    times: &[f64],
    n_realizations: usize,
    seed: u64,
    tail_tolerance: f64,
    runner: &R,
) -> Result<Simulation> {
    geometry.validate()?;
    if n_realizations == 0 {
        return Err(Error::invalid("n_realizations", "must be at least 1"));
    }
    if times.is_empty() {
        return Err(Error::Empty("times"));
    }
    if times.iter().any(|&t| !(t > 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("times", "must be positive and strictly increasing"));
    }
    let t_max = times[times.len() - 1];
    let radius = geometry.radius_for(t_max * t_max, tail_tolerance)?;
    let results = runner.map(n_realizations, |r| {
        let mut geo_rng = rng::stream(seed, r as u64, Purpose::Geometry);
        let mut couplings = Vec::new();
        sample_couplings(&mut geo_rng, geometry, radius, &mut couplings);
        let mut rng = rng::stream(seed, r as u64, Purpose::Spins);
        let mut field = 0.0;
        for &c in &couplings {
            field += c * random_sign(&mut rng);
        }
        Realization {
            cos: times.iter().map(|&t| cos(field * t)).collect(),
            sin: times.iter().map(|&t| sin(field * t)).collect(),
            spins: couplings.len(),
        }
    });
    reduce(&results, times.to_vec(), radius)
}

/// Direct check of the positional average for a frozen phase variance χ.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OracleEstimate {
    /// −log⟨exp(−½Σ_i z_i²)⟩, z_i = J·χ^{1/2}/(2r_i^α), including the
    /// analytic far-field part.
    pub exponent: f64,
    pub stderr: f64,
    /// n·(C·J·χ^{1/2})^{D/α}.
    pub closed_form: f64,
    /// Far-field part computed by quadrature.
    pub tail: f64,
}

impl OracleEstimate {
    /// Fails when sampling noise exceeds `rel_tol` of the exponent.
    pub fn check_noise(&self, rel_tol: f64) -> Result<()> {
        if self.stderr > rel_tol * fabs(self.exponent) {
            return Err(Error::Tolerance {
                value: self.exponent,
                achieved: self.stderr / fabs(self.exponent),
                requested: rel_tol,
            });
        }
        Ok(())
    }
}

/// Monte Carlo estimate of the Gaussian positional average with g ≡ 1 and no
/// exclusion radius, against the closed form.
///
/// Spins are sampled inside the radius where z drops to 0.02; the exterior
/// contribution n·D·A_D∫_R^∞(1 − e^{−z²/2})r^{D−1}dr is integrated
/// numerically and added.
pub fn positional_average_oracle(dimension: u8, alpha: f64, j_chi_half: f64, density: f64, n_samples: usize, seed: u64) -> Result<OracleEstimate> {
    let c = positional_prefactor(dimension, alpha)?;
    require_positive("j_chi_half", j_chi_half)?;
    require_positive("density", density)?;
    if n_samples < 2 {
        return Err(Error::invalid("n_samples", "need at least 2 samples"));
    }
    let d = dimension as f64;
    let b = 0.5 * j_chi_half;
    let z_edge = 0.02;
    let radius = pow(b / z_edge, 1.0 / alpha);
    let area = d * unit_ball_volume(dimension);
    let rd = pow(radius, d);
    let integrand = |u: f64| {
        if u == 0.0 {
            return 0.0;
        }
        let z = b * pow(u, alpha) / pow(radius, alpha);
        -expm1(-0.5 * z * z) * rd * pow(u, -d - 1.0)
    };
    let opts = Options {
        rel_tol: 1e-10,
        abs_tol: 1e-300,
        max_intervals: 5000,
    };
    let tail = density * area * quad::integrate(integrand, 0.0, 1.0, opts)?.value;
    let mean_n = density * unit_ball_volume(dimension) * rd;
    let poisson = rand_distr::Poisson::new(mean_n).map_err(|_| Error::invalid("density", "Poisson mean out of range"))?;
    let ys: Vec<f64> = (0..n_samples)
        .map(|s| {
            let mut rng = rng::stream(seed, s as u64, Purpose::Oracle);
            let n: f64 = rand_distr::Distribution::sample(&poisson, &mut rng);
            let mut sum = 0.0;
            for _ in 0..n as usize {
                let u: f64 = rng.random();
                let r = radius * pow(u, 1.0 / d);
                let z = b / pow(r, alpha);
                sum += 0.5 * z * z;
            }
            exp(-sum)
        })
        .collect();
    let (m, se) = jackknife_mean(&ys);
    if !(m > 0.0) {
        return Err(Error::Unresolved("positional average underflowed; lower the density or chi".into()));
    }
    Ok(OracleEstimate {
        exponent: -log(m) + tail,
        stderr: se / m,
        closed_form: density * pow(c * j_chi_half, d / alpha),
        tail,
    })
}
