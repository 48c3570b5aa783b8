//! Desk-scale reproduction scenarios behind `spinbath reproduce`. The
//! acceptance suite drives the same functions.

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;
use spinbath_core::geometry::{positional_prefactor, GeometrySpec, J0_DIPOLAR};
use spinbath_core::inference::{classify_dimension, ClassifyOptions, ExperimentalDataset, FitOptions, Verdict};
use spinbath_core::math::logspace;
use spinbath_core::monte_carlo::{simulate_coherence, EnsembleSpec, Simulation};
use spinbath_core::noise::{DriveSpec, NoiseModelSpec};
use spinbath_core::profile::{coherence, fit_stretch, local_stretch, profile_curve, stretch_power, Amplitude, NoiseClass, ProfileParams, TimeRegime};
use spinbath_core::rng::{self, Purpose};
use spinbath_core::sequence::SequenceSpec;
use spinbath_core::{CoherenceCurve, Runner};

use crate::error::{CliError, CliResult};
use crate::files::{fmt_f64, write_curve, write_table};

pub const DEFAULT_SEED: u64 = 20_180_507;

/// Bath-spin areal density of the reference δ-doped layer (nm⁻²): one of
/// three hyperfine groups of a 0.011 nm⁻² P1 layer.
pub const S1_AREAL_DENSITY: f64 = 0.011 / 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    /// One-line report, `PASS name: detail`.
    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Density at which n^{α/D}·C·J_0 equals `rate` (μs⁻¹), so that C decays on
/// a time scale of order 1/rate in the frozen limit.
pub fn density_for_rate(dimension: u8, alpha: f64, rate: f64) -> CliResult<f64> {
    let c = positional_prefactor(dimension, alpha).map_err(|e| CliError::core("dimension", e))?;
    Ok((rate / (c * J0_DIPOLAR)).powf(dimension as f64 / alpha))
}

/// One stretch-power measurement.
#[derive(Debug, Clone, Serialize)]
pub struct StretchCell {
    pub name: String,
    pub dimension: u8,
    pub noise: NoiseModelSpec,
    pub sequence: SequenceSpec,
    pub regime: TimeRegime,
    pub expected: f64,
    pub tolerance: f64,
    /// Phase rate n^{α/D}·C·J_0 (μs⁻¹).
    pub rate: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub dt: f64,
    pub tail_tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellOutcome {
    pub cell: StretchCell,
    pub beta: f64,
    pub beta_err: f64,
    pub mean_spins: f64,
    pub radius: f64,
    #[serde(skip)]
    pub curve: CoherenceCurve,
}

impl CellOutcome {
    pub fn check(&self) -> Check {
        let dev = self.beta - self.cell.expected;
        Check::new(
            format!("table1 {}", self.cell.name),
            dev.abs() <= self.cell.tolerance,
            format!(
                "beta {:.4} ± {:.4}, expected {:.4} ± {}, {:.0} spins",
                self.beta, self.beta_err, self.cell.expected, self.cell.tolerance, self.mean_spins
            ),
        )
    }
}

const ALPHA: f64 = 3.0;
const EARLY_TOL: f64 = 0.1;
const LATE_TOL: f64 = 0.07;

/// Points per cell before snapping.
const CELL_POINTS: usize = 40;

#[allow(clippy::too_many_arguments)]
fn cell(
    dimension: u8,
    noise: NoiseModelSpec,
    sequence: SequenceSpec,
    regime: TimeRegime,
    rate: f64,
    (t_min, t_max): (f64, f64),
    dt: f64,
    tail_tolerance: f64,
) -> StretchCell {
    let class = match noise {
        NoiseModelSpec::Telegraph { .. } => NoiseClass::Telegraph,
        _ => NoiseClass::Gaussian,
    };
    let seq_name = match sequence {
        SequenceSpec::RamseyDeer => "deer",
        SequenceSpec::SpinEcho => "echo",
        SequenceSpec::Xy8 { .. } => "xy8",
    };
    let regime_name = match regime {
        TimeRegime::Early => "early",
        TimeRegime::Late => "late",
    };
    StretchCell {
        name: format!("{seq_name} {} {regime_name} D={dimension}", noise.kind_name()),
        dimension,
        noise,
        sequence,
        regime,
        expected: stretch_power(&sequence, class, regime, dimension, ALPHA),
        tolerance: if regime == TimeRegime::Early { EARLY_TOL } else { LATE_TOL },
        rate,
        t_min,
        t_max,
        dt,
        tail_tolerance,
    }
}

/// The stretch-power cells: early-time DEER and echo for both noise types in
/// D = 2 and 3 (τ_c far beyond the decay), late-time Gauss–Markov DEER in
/// D = 2 (τ_c far below it) and a driven-spin DEER in D = 3 with δω ≫ Ω.
pub fn table1_cells() -> Vec<StretchCell> {
    let mut cells = Vec::new();
    let deer = SequenceSpec::RamseyDeer;
    let echo = SequenceSpec::SpinEcho;
    for d in [2u8, 3] {
        for noise in [NoiseModelSpec::GaussMarkov { tau_c: 100.0 }, NoiseModelSpec::Telegraph { tau_c: 100.0 }] {
            cells.push(cell(d, noise, deer, TimeRegime::Early, 1.0, (0.05, 6.0), 0.01, 1e-3));
        }
        let echo_end = if d == 2 { 140.0 } else { 90.0 };
        for noise in [NoiseModelSpec::GaussMarkov { tau_c: 1000.0 }, NoiseModelSpec::Telegraph { tau_c: 1000.0 }] {
            cells.push(cell(d, noise, echo, TimeRegime::Early, 1.0, (2.0, echo_end), 0.1, 1e-3));
        }
    }
    cells.push(cell(
        2,
        NoiseModelSpec::GaussMarkov { tau_c: 0.02 },
        deer,
        TimeRegime::Late,
        1.0,
        (0.4, 200.0),
        0.002,
        1e-3,
    ));
    let rabi = 2.0 * PI * 5.0;
    let drive = DriveSpec {
        rabi,
        linewidth: 2.0 * PI * 20.0,
        sample_step: 0.1 / rabi,
    };
    let tau = drive.tau_c_estimate();
    // A driven spin carries its own full-amplitude noise, so the region is
    // sized at a looser tail tolerance to keep the bath near 400 spins.
    cells.push(cell(
        3,
        NoiseModelSpec::DrivenSpin(drive),
        deer,
        TimeRegime::Late,
        0.21 / tau,
        (10.0 * tau, 60.0 * tau),
        drive.sample_step,
        1e-2,
    ));
    cells
}

/// Log-spaced times snapped to the noise grid of `seq`, duplicates removed.
pub fn snapped_times(seq: &SequenceSpec, t_min: f64, t_max: f64, n: usize, dt: f64) -> Vec<f64> {
    let mut times: Vec<f64> = logspace(t_min, t_max, n)
        .into_iter()
        .map(|t| seq.snap_time((t / dt).round().max(1.0) * dt))
        .collect();
    times.dedup_by(|a, b| (*a - *b).abs() < 0.5 * dt);
    times
}

pub fn run_cell<R: Runner>(cell: &StretchCell, n_realizations: usize, seed: u64, runner: &R) -> CliResult<CellOutcome> {
    let density = density_for_rate(cell.dimension, ALPHA, cell.rate)?;
    let geometry = GeometrySpec::ideal(cell.dimension, ALPHA, density, J0_DIPOLAR);
    let times = snapped_times(&cell.sequence, cell.t_min, cell.t_max, CELL_POINTS, cell.dt);
    let mut spec = EnsembleSpec::new(geometry, cell.noise, cell.sequence, times, n_realizations, seed, cell.dt);
    spec.tail_tolerance = cell.tail_tolerance;
    let sim = simulate_coherence(&spec, runner).map_err(|e| CliError::core(&cell.name, e))?;
    let fit = fit_stretch(&sim.curve, 0.1, 0.9).map_err(|e| CliError::core(&cell.name, e))?;
    Ok(CellOutcome {
        cell: cell.clone(),
        beta: fit.slope,
        beta_err: fit.slope_err,
        mean_spins: sim.mean_spins,
        radius: sim.radius,
        curve: sim.curve,
    })
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// Runs every Table-1 cell; writes `table1.csv` and one curve per cell.
pub fn table1<R: Runner>(out_dir: &Path, n_realizations: usize, seed: u64, runner: &R) -> CliResult<Vec<Check>> {
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for cell in table1_cells() {
        let out = run_cell(&cell, n_realizations, seed, runner)?;
        write_curve(Some(&out_dir.join(format!("table1_{}.csv", file_stem(&cell.name)))), &out.curve)?;
        rows.push(vec![
            cell.name.clone(),
            fmt_f64(cell.expected),
            fmt_f64(out.beta),
            fmt_f64(out.beta_err),
            fmt_f64(cell.tolerance),
            fmt_f64(out.mean_spins),
        ]);
        checks.push(out.check());
    }
    write_table(
        Some(&out_dir.join("table1.csv")),
        &["cell", "beta_expected", "beta", "beta_err", "tolerance", "mean_spins"],
        rows,
    )?;
    Ok(checks)
}

/// Midpoint of the analytic D = 2, α = 3 DEER crossover: the time at which
/// the local stretch power β(t) falls through 1/2, in units of τ_c.
pub fn deer_crossover_midpoint() -> CliResult<f64> {
    let params = ProfileParams {
        dimension: 2,
        alpha: ALPHA,
        sequence: SequenceSpec::RamseyDeer,
        tau_c: Some(1.0),
        amplitude: Amplitude::Phenomenological { a: 0.5 },
    };
    let times = logspace(1e-3, 1e3, 601);
    let curve = profile_curve(&params, &times).map_err(|e| CliError::core("crossover profile", e))?;
    let s = local_stretch(&curve, 4).map_err(|e| CliError::core("crossover profile", e))?;
    let mid = 0.5;
    for i in 1..s.beta.len() {
        let (b0, b1) = (s.beta[i - 1], s.beta[i]);
        if b0 >= mid && b1 < mid {
            let f = (b0 - mid) / (b0 - b1);
            return Ok((s.times[i - 1].ln() + f * (s.times[i].ln() - s.times[i - 1].ln())).exp());
        }
    }
    Err(CliError::acceptance("local stretch power never crosses 1/2"))
}

/// Monte Carlo DEER and echo curves for one τ_c and where they coincide.
#[derive(Debug, Clone, Serialize)]
pub struct OverlapOutcome {
    pub tau_c: f64,
    /// Largest |C_DEER − C_echo| in units of the combined standard error over
    /// t ≥ 5τ_c.
    pub max_excess: f64,
    /// Time of that largest excess.
    pub worst_time: f64,
    /// Earliest time after which every point coincides within the combined
    /// standard error (None if the last point does not).
    pub overlap_onset: Option<f64>,
    #[serde(skip)]
    pub deer: CoherenceCurve,
    #[serde(skip)]
    pub echo: CoherenceCurve,
}

/// Times shared by DEER and echo (even noise-grid steps).
fn overlap_times(tau_c: f64, dt: f64) -> Vec<f64> {
    let mut times: Vec<f64> = logspace(0.05 * tau_c, 40.0 * tau_c, 48)
        .into_iter()
        .map(|t| 2.0 * (t / (2.0 * dt)).round().max(1.0) * dt)
        .collect();
    times.dedup_by(|a, b| (*a - *b).abs() < 0.5 * dt);
    times
}

/// Gauss–Markov DEER and echo in a D = 2 layer at the reference density.
pub fn overlap_study<R: Runner>(tau_c: f64, n_realizations: usize, seed: u64, runner: &R) -> CliResult<OverlapOutcome> {
    let dt = tau_c / 50.0;
    let geometry = GeometrySpec::ideal(2, ALPHA, S1_AREAL_DENSITY, J0_DIPOLAR);
    let times = overlap_times(tau_c, dt);
    let noise = NoiseModelSpec::GaussMarkov { tau_c };
    let run = |seq: SequenceSpec| -> CliResult<Simulation> {
        let spec = EnsembleSpec::new(geometry, noise, seq, times.clone(), n_realizations, seed, dt);
        simulate_coherence(&spec, runner).map_err(|e| CliError::core(format!("overlap τ_c = {tau_c}"), e))
    };
    let deer = run(SequenceSpec::RamseyDeer)?.curve;
    let echo = run(SequenceSpec::SpinEcho)?.curve;
    let excess: Vec<f64> = (0..deer.len())
        .map(|i| {
            let s = (deer.stderr[i].powi(2) + echo.stderr[i].powi(2)).sqrt();
            (deer.coherence[i] - echo.coherence[i]).abs() / s
        })
        .collect();
    let mut max_excess = 0.0;
    let mut worst_time = f64::NAN;
    for (&t, &x) in deer.times.iter().zip(&excess) {
        if t >= 5.0 * tau_c && x > max_excess {
            max_excess = x;
            worst_time = t;
        }
    }
    let mut onset = None;
    for i in (0..deer.len()).rev() {
        if excess[i] > 1.0 {
            break;
        }
        onset = Some(deer.times[i]);
    }
    Ok(OverlapOutcome {
        tau_c,
        max_excess,
        worst_time,
        overlap_onset: onset,
        deer,
        echo,
    })
}

/// Correlation times of the overlap scenario (μs), decreasing as the bath
/// drive gets stronger.
pub const OVERLAP_TAU_C: [f64; 3] = [2.0, 1.0, 0.5];

pub fn crossover_check() -> CliResult<Check> {
    let mid = deer_crossover_midpoint()?;
    Ok(Check::new(
        "crossover midpoint",
        (0.3..=3.0).contains(&mid),
        format!("DEER D=2 beta(t) = 1/2 at t = {mid:.4} tau_c, required within [0.3, 3] tau_c"),
    ))
}

pub fn overlap_check(o: &OverlapOutcome) -> Check {
    Check::new(
        format!("deer/echo overlap tau_c={}", o.tau_c),
        o.max_excess <= 1.0,
        format!(
            "max |C_deer - C_echo| = {:.2} combined stderr at t = {:.3} us (t >= 5 tau_c); overlap within 1 stderr from {}",
            o.max_excess,
            o.worst_time,
            o.overlap_onset
                .map_or("never".to_string(), |t| format!("t = {:.3} us = {:.1} tau_c", t, t / o.tau_c))
        ),
    )
}

/// Crossover midpoint plus DEER/echo overlap at several τ_c; writes
/// `overlap_tau<τ_c>.csv` with both curves and `overlap.csv` with a summary.
pub fn overlap<R: Runner>(out_dir: &Path, n_realizations: usize, seed: u64, runner: &R) -> CliResult<Vec<Check>> {
    let mut checks = vec![crossover_check()?];
    let mut summary = Vec::new();
    for tau_c in OVERLAP_TAU_C {
        let o = overlap_study(tau_c, n_realizations, seed, runner)?;
        let rows = (0..o.deer.len()).map(|i| {
            vec![
                fmt_f64(o.deer.times[i]),
                fmt_f64(o.deer.coherence[i]),
                fmt_f64(o.deer.stderr[i]),
                fmt_f64(o.echo.coherence[i]),
                fmt_f64(o.echo.stderr[i]),
            ]
        });
        write_table(
            Some(&out_dir.join(format!("overlap_tau{tau_c}.csv"))),
            &["t_us", "deer", "deer_stderr", "echo", "echo_stderr"],
            rows,
        )?;
        summary.push(vec![
            fmt_f64(tau_c),
            fmt_f64(o.max_excess),
            o.overlap_onset.map_or(String::new(), fmt_f64),
        ]);
        checks.push(overlap_check(&o));
    }
    write_table(
        Some(&out_dir.join("overlap.csv")),
        &["tau_c_us", "max_excess_stderr", "overlap_onset_us"],
        summary,
    )?;
    Ok(checks)
}

/// Noise level of the synthetic classifier families.
pub const CLASSIFIER_NOISE: f64 = 0.03;
/// Drive strengths per family, as τ_c relative to the weakest drive.
const FAMILY_TAU_RATIOS: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

/// One synthetic DEER family of true dimension `dimension`: four drive
/// strengths sharing an amplitude, with multiplicative Gaussian noise.
pub fn classifier_family(dimension: u8, index: u64, seed: u64) -> CliResult<Vec<ExperimentalDataset>> {
    use rand::Rng as _;
    let mut rng = rng::stream(seed, (u64::from(dimension) << 32) | index, Purpose::Synthetic);
    let a: f64 = rng.random_range(0.4..1.2);
    let tau0: f64 = rng.random_range(2.0..8.0);
    let mut out = Vec::new();
    for ratio in FAMILY_TAU_RATIOS {
        let params = ProfileParams {
            dimension,
            alpha: ALPHA,
            sequence: SequenceSpec::RamseyDeer,
            tau_c: Some(tau0 * ratio),
            amplitude: Amplitude::Phenomenological { a },
        };
        let err = |e| CliError::core("classifier family", e);
        // Sample until C ≈ 0.03, past which real data sit on the noise floor.
        let mut t_end = 1.0;
        while coherence(&params, t_end).map_err(err)? > 0.03 {
            t_end *= 1.1;
        }
        let times = logspace(0.05 * t_end, t_end, 40);
        let curve = profile_curve(&params, &times)
            .map_err(err)?
            .with_relative_noise(CLASSIFIER_NOISE, &mut rng);
        out.push(ExperimentalDataset::new(curve, SequenceSpec::RamseyDeer).with_cut(0.0));
    }
    Ok(out)
}

/// Verdicts on `per_dimension` families of each true D ∈ {2, 3}.
pub fn classifier_study(per_dimension: u64, seed: u64) -> CliResult<Vec<(u8, Verdict)>> {
    let opts = ClassifyOptions {
        fit: FitOptions {
            tau_grid: (0.05, 50.0),
            ..FitOptions::default()
        },
        ..ClassifyOptions::default()
    };
    let mut out = Vec::new();
    for d in [2u8, 3] {
        for i in 0..per_dimension {
            let family = classifier_family(d, i, seed)?;
            let report = classify_dimension(&family, &[2, 3], ALPHA, &opts).map_err(|e| CliError::core("classifier", e))?;
            out.push((d, report.verdict));
        }
    }
    Ok(out)
}

pub const CLASSIFIER_FAMILIES: u64 = 20;

pub fn classifier_check(verdicts: &[(u8, Verdict)]) -> Check {
    let correct = verdicts.iter().filter(|(d, v)| *v == Verdict::Dimension(*d)).count();
    let ambiguous = verdicts.iter().filter(|(_, v)| matches!(v, Verdict::Ambiguous(_))).count();
    Check::new(
        "classifier",
        correct == verdicts.len(),
        format!("{correct}/{} correct, {ambiguous} ambiguous", verdicts.len()),
    )
}

/// 20 + 20 synthetic families; writes `classifier.csv`.
pub fn classifier(out_dir: &Path, seed: u64) -> CliResult<Vec<Check>> {
    let verdicts = classifier_study(CLASSIFIER_FAMILIES, seed)?;
    let rows = verdicts.iter().enumerate().map(|(i, (d, v))| {
        let verdict = match v {
            Verdict::Dimension(w) => w.to_string(),
            Verdict::Ambiguous(why) => format!("\"ambiguous: {}\"", why.replace('"', "'")),
        };
        vec![i.to_string(), d.to_string(), verdict]
    });
    write_table(Some(&out_dir.join("classifier.csv")), &["family", "true_dimension", "verdict"], rows)?;
    Ok(vec![classifier_check(&verdicts)])
}
