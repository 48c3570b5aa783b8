use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use spinbath_core::geometry::J0_DIPOLAR;
use spinbath_core::inference::{
    build_static_family, classify_dimension, estimate_density, extract_tau_c, first_contrast, fit_profile, joint_fit, normalize_contrast,
    ClassifyOptions, DensityOptions, ExperimentalDataset, FitOptions, FitSpace, NormalizationPolicy,
};
use spinbath_core::monte_carlo::simulate_coherence;
use spinbath_core::noise::{sample_gauss_markov, sample_static, sample_telegraph, simulate_driven_spin, NoiseModelSpec};
use spinbath_core::profile::{local_stretch, profile_curve, Amplitude, ProfileParams};
use spinbath_core::sequence::{evaluate_chi, ChiMethod, Regime, SequenceSpec};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::files::{self, fmt_f64, read_curve, read_family, read_raw, write_curve, write_family, write_table};
use crate::report::{to_value, InputFile, Report};
use crate::runner::{Parallel, WORKERS_ENV};
use crate::scenarios;

#[derive(Debug, Parser)]
#[command(name = "spinbath", version, about = "Spin-bath decoherence simulator and coherence-curve inference")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    /// Overrides every configured or default seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo coherence curve from a JSON run config.
    Simulate(SimulateArgs),
    /// Phase variance χ(t) of a pulse sequence with exponential correlations.
    Chi(ChiArgs),
    /// Analytic coherence curve and optional local stretch powers.
    Profile(ProfileArgs),
    /// Stretched-exponential fit of a DEER or echo curve (joint with --echo).
    Fit(FitArgs),
    /// Compare candidate dimensions by reduced χ².
    ClassifyDim(ClassifyArgs),
    /// τ_c with normalization-uncertainty resampling.
    ExtractTauc(TauCArgs),
    /// Layer density from a static-bath Ramsey family.
    EstimateDensity(DensityArgs),
    /// Raw two-state readout to normalized coherence.
    Normalize(NormalizeArgs),
    /// Bundled desk-scale checks with a pass/fail summary.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SequenceArg {
    Deer,
    Echo,
    Xy8,
}

fn sequence_spec(seq: SequenceArg, tau_p: Option<f64>) -> CliResult<SequenceSpec> {
    let s = match seq {
        SequenceArg::Deer => SequenceSpec::RamseyDeer,
        SequenceArg::Echo => SequenceSpec::SpinEcho,
        SequenceArg::Xy8 => SequenceSpec::Xy8 {
            tau_p: tau_p.ok_or_else(|| CliError::validation("--tau-p-us", "required for xy8"))?,
        },
    };
    s.validate().map_err(|e| CliError::core("--sequence", e))?;
    Ok(s)
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Curve CSV (`t_us,coherence,stderr`).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// One noise trajectory of the configured model (`t_us,s_z`).
    #[arg(long)]
    pub dump_trajectories: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ChiMethodArg {
    Auto,
    ClosedForm,
    Quadrature,
    Spectral,
    AsymptoticShort,
    AsymptoticLong,
}

#[derive(Debug, Args)]
pub struct ChiArgs {
    #[arg(long, value_enum)]
    pub sequence: SequenceArg,
    #[arg(long)]
    pub tau_c_us: f64,
    #[arg(long)]
    pub tau_p_us: Option<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub times: Vec<f64>,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: ChiMethodArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(long)]
    pub dimension: u8,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_enum)]
    pub sequence: SequenceArg,
    #[arg(long)]
    pub tau_p_us: Option<f64>,
    /// Omit for a frozen bath.
    #[arg(long)]
    pub tau_c_us: Option<f64>,
    /// Phenomenological amplitude A (μs^{−D/α}).
    #[arg(long, conflicts_with = "density")]
    pub amplitude: Option<f64>,
    /// Spins per nm^D.
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long, default_value_t = J0_DIPOLAR)]
    pub coupling: f64,
    #[arg(long, default_value_t = 1.0)]
    pub g_bar: f64,
    #[arg(long, value_delimiter = ',')]
    pub times: Vec<f64>,
    #[arg(long)]
    pub t_min_us: Option<f64>,
    #[arg(long)]
    pub t_max_us: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Local stretch table (`t_us,beta,beta_err`).
    #[arg(long)]
    pub beta_out: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpaceArg {
    Linear,
    Neglog,
    Both,
}

impl SpaceArg {
    fn spaces(self) -> Vec<FitSpace> {
        match self {
            SpaceArg::Linear => vec![FitSpace::Linear],
            SpaceArg::Neglog => vec![FitSpace::NegLog],
            SpaceArg::Both => vec![FitSpace::Linear, FitSpace::NegLog],
        }
    }
}

#[derive(Debug, Args)]
pub struct FitOptionArgs {
    #[arg(long, default_value_t = spinbath_core::inference::DEFAULT_MIN_TIME_CUT)]
    pub min_time_cut_us: f64,
    #[arg(long, default_value_t = 0.1)]
    pub tau_min_us: f64,
    #[arg(long, default_value_t = 100.0)]
    pub tau_max_us: f64,
    #[arg(long, default_value_t = 8)]
    pub starts_per_decade: usize,
}

impl FitOptionArgs {
    fn options(&self) -> CliResult<FitOptions> {
        if !(self.tau_min_us > 0.0 && self.tau_max_us > self.tau_min_us) {
            return Err(CliError::validation("--tau-min-us/--tau-max-us", "need 0 < tau_min < tau_max"));
        }
        if self.starts_per_decade == 0 {
            return Err(CliError::validation("--starts-per-decade", "must be positive"));
        }
        Ok(FitOptions {
            tau_grid: (self.tau_min_us, self.tau_max_us),
            starts_per_decade: self.starts_per_decade,
            ..FitOptions::default()
        })
    }

    fn json(&self) -> serde_json::Value {
        json!({
            "min_time_cut_us": self.min_time_cut_us,
            "tau_grid_us": [self.tau_min_us, self.tau_max_us],
            "starts_per_decade": self.starts_per_decade,
        })
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Curve CSV of the main dataset.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "deer")]
    pub sequence: SequenceArg,
    #[arg(long)]
    pub tau_p_us: Option<f64>,
    /// Echo curve for a joint fit (the main dataset is then DEER).
    #[arg(long)]
    pub echo: Option<PathBuf>,
    #[arg(long)]
    pub dimension: u8,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "both")]
    pub space: SpaceArg,
    #[command(flatten)]
    pub fit: FitOptionArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// DEER curve CSVs (repeat for several drive strengths).
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    pub candidates: Vec<u8>,
    #[arg(long, default_value_t = ClassifyOptions::default().max_reduced_chi2)]
    pub max_reduced_chi2: f64,
    #[command(flatten)]
    pub fit: FitOptionArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    PlusMinus,
    EarlyTime,
}

#[derive(Debug, Args)]
pub struct TauCArgs {
    #[arg(long)]
    pub deer: PathBuf,
    #[arg(long)]
    pub echo: PathBuf,
    #[arg(long)]
    pub dimension: u8,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "plus-minus")]
    pub policy: PolicyArg,
    /// Half-width of the plus-minus policy.
    #[arg(long, default_value_t = 0.1)]
    pub width: f64,
    #[arg(long, default_value_t = 200)]
    pub resamples: usize,
    #[command(flatten)]
    pub fit: FitOptionArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Precomputed family (`ppm_nm,t_us,coherence,stderr`).
    #[arg(long, conflicts_with = "config")]
    pub family: Option<PathBuf>,
    /// Run config whose geometry (D = 2) and ensemble define the family.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "4,6,8,10,12,14,16,18,20")]
    pub densities_ppm_nm: Vec<f64>,
    #[arg(long)]
    pub family_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub min_time_us: f64,
    #[arg(long)]
    pub late_time_cut_us: Option<f64>,
    #[arg(long)]
    pub free_normalization: bool,
    /// Bath-free reference curve divided out before matching.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    /// Raw CSV (`t_us,s0,s1,sigma0,sigma1`).
    #[arg(long)]
    pub raw: PathBuf,
    /// Normalization value; defaults to the first raw contrast.
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long, default_value_t = 0.0, requires = "t0")]
    pub t0_sigma: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Table1,
    Overlap,
    Classifier,
    All,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub scenario: ScenarioArg,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Realizations per Monte Carlo cell.
    #[arg(long, default_value_t = 10_000)]
    pub realizations: usize,
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run(argv: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let start = Instant::now();
    let name = command_name(&cli.command);
    let outcome = execute(&cli);
    eprintln!("{name}: wall time {:.3} s", start.elapsed().as_secs_f64());
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate(_) => "simulate",
        Command::Chi(_) => "chi",
        Command::Profile(_) => "profile",
        Command::Fit(_) => "fit",
        Command::ClassifyDim(_) => "classify-dim",
        Command::ExtractTauc(_) => "extract-tauc",
        Command::EstimateDensity(_) => "estimate-density",
        Command::Normalize(_) => "normalize",
        Command::Reproduce(_) => "reproduce",
    }
}

fn runner(cli: &Cli) -> CliResult<Parallel> {
    let r = match cli.workers {
        Some(0) => return Err(CliError::validation("--workers", "must be at least 1")),
        Some(n) => Parallel::new(n),
        None => Parallel::from_env(),
    };
    r.map_err(|e| CliError::validation("--workers", e))
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a),
        Command::Chi(a) => chi(a),
        Command::Profile(a) => profile(a),
        Command::Fit(a) => fit(a),
        Command::ClassifyDim(a) => classify(a),
        Command::ExtractTauc(a) => tau_c(cli, a),
        Command::EstimateDensity(a) => density(cli, a),
        Command::Normalize(a) => normalize(a),
        Command::Reproduce(a) => reproduce(cli, a),
    }
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> CliResult<()> {
    let cfg = RunConfig::load(&a.config)?;
    let spec = cfg.ensemble(cli.seed)?;
    let origin = a.config.display().to_string();
    let sim = simulate_coherence(&spec, &runner(cli)?).map_err(|e| CliError::core(origin.clone(), e))?;
    write_curve(Some(&a.out), &sim.curve)?;
    if let Some(path) = &a.dump_trajectories {
        let duration = spec.times.last().copied().unwrap_or(0.0);
        let seed = spec.master_seed;
        let traj = match spec.noise {
            NoiseModelSpec::GaussMarkov { tau_c } => sample_gauss_markov(tau_c, spec.dt, duration, seed),
            NoiseModelSpec::Telegraph { tau_c } => sample_telegraph(tau_c, spec.dt, duration, seed),
            NoiseModelSpec::DrivenSpin(d) => simulate_driven_spin(&d, duration, seed),
            NoiseModelSpec::Static => sample_static(spec.dt, duration, seed),
        }
        .map_err(|e| CliError::core(origin.clone(), e))?;
        let rows = traj.times().zip(&traj.values).map(|(t, v)| vec![fmt_f64(t), fmt_f64(*v)]);
        write_table(Some(path), &files::TRAJECTORY_HEADER, rows)?;
    }
    if let Some(path) = &a.report {
        let mut cfg_used = cfg.clone();
        cfg_used.ensemble.master_seed = spec.master_seed;
        let results = json!({
            "radius_nm": sim.radius,
            "mean_spins": sim.mean_spins,
            "below_noise_floor": sim.below_noise_floor,
            "times_us": sim.curve.times,
            "coherence": sim.curve.coherence,
            "stderr": sim.curve.stderr,
            "sin_mean": sim.sin_mean,
            "sin_stderr": sim.sin_stderr,
        });
        Report::new(
            "simulate",
            vec![InputFile::hash(&a.config)?],
            Some(spec.master_seed),
            to_value(&cfg_used)?,
            results,
        )
        .write(Some(path))?;
    }
    Ok(())
}

fn chi(a: &ChiArgs) -> CliResult<()> {
    let seq = sequence_spec(a.sequence, a.tau_p_us)?;
    let method = match a.method {
        ChiMethodArg::Auto => match seq {
            SequenceSpec::Xy8 { .. } => ChiMethod::Quadrature,
            _ => ChiMethod::ClosedForm,
        },
        ChiMethodArg::ClosedForm => ChiMethod::ClosedForm,
        ChiMethodArg::Quadrature => ChiMethod::Quadrature,
        ChiMethodArg::Spectral => ChiMethod::Spectral,
        ChiMethodArg::AsymptoticShort => ChiMethod::Asymptotic(Regime::Short),
        ChiMethodArg::AsymptoticLong => ChiMethod::Asymptotic(Regime::Long),
    };
    let ev = evaluate_chi(&seq, &a.times, a.tau_c_us, method).map_err(|e| CliError::core("chi", e))?;
    let rows = ev
        .times
        .iter()
        .zip(&ev.chi)
        .map(|(t, c)| vec![fmt_f64(*t), fmt_f64(*c), method.name().to_string()]);
    write_table(a.out.as_deref(), &files::CHI_HEADER, rows)
}

fn profile(a: &ProfileArgs) -> CliResult<()> {
    let seq = sequence_spec(a.sequence, a.tau_p_us)?;
    let amplitude = match (a.amplitude, a.density) {
        (Some(v), None) => Amplitude::Phenomenological { a: v },
        (None, Some(n)) => Amplitude::Microscopic {
            density: n,
            coupling: a.coupling,
            g_bar: a.g_bar,
        },
        _ => return Err(CliError::validation("--amplitude/--density", "give exactly one")),
    };
    let params = ProfileParams {
        dimension: a.dimension,
        alpha: a.alpha,
        sequence: seq,
        tau_c: a.tau_c_us,
        amplitude,
    };
    let times = match (a.times.is_empty(), a.t_min_us, a.t_max_us) {
        (false, None, None) => a.times.clone(),
        (true, Some(lo), Some(hi)) if lo > 0.0 && hi > lo && a.points >= 2 => spinbath_core::math::logspace(lo, hi, a.points),
        _ => {
            return Err(CliError::validation(
                "--times",
                "give --times or a valid --t-min-us/--t-max-us/--points grid",
            ))
        }
    };
    let curve = profile_curve(&params, &times).map_err(|e| CliError::core("profile", e))?;
    let rows = (0..curve.len()).map(|i| vec![fmt_f64(curve.times[i]), fmt_f64(curve.coherence[i])]);
    write_table(a.out.as_deref(), &files::PROFILE_HEADER, rows)?;
    if let Some(path) = &a.beta_out {
        let s = local_stretch(&curve, a.window).map_err(|e| CliError::core("--beta-out", e))?;
        let rows = (0..s.times.len()).map(|i| vec![fmt_f64(s.times[i]), fmt_f64(s.beta[i]), fmt_f64(s.beta_err[i])]);
        write_table(Some(path), &files::BETA_HEADER, rows)?;
    }
    Ok(())
}

fn dataset(path: &Path, seq: SequenceSpec, cut: f64) -> CliResult<ExperimentalDataset> {
    Ok(ExperimentalDataset::new(read_curve(path)?, seq).with_cut(cut))
}

fn fit(a: &FitArgs) -> CliResult<()> {
    let opts = a.fit.options()?;
    let cut = a.fit.min_time_cut_us;
    let mut inputs = vec![InputFile::hash(&a.data)?];
    let mut results = Vec::new();
    match &a.echo {
        Some(echo_path) => {
            inputs.push(InputFile::hash(echo_path)?);
            let deer = dataset(&a.data, SequenceSpec::RamseyDeer, cut)?;
            let echo = dataset(echo_path, SequenceSpec::SpinEcho, cut)?;
            for space in a.space.spaces() {
                results.push(joint_fit(&deer, &echo, a.dimension, a.alpha, space, &opts).map_err(|e| CliError::core("fit", e))?);
            }
        }
        None => {
            let ds = dataset(&a.data, sequence_spec(a.sequence, a.tau_p_us)?, cut)?;
            for space in a.space.spaces() {
                results.push(fit_profile(&ds, a.dimension, a.alpha, space, &opts).map_err(|e| CliError::core("fit", e))?);
            }
        }
    }
    let params = json!({
        "mode": if a.echo.is_some() { "joint" } else { "single" },
        "sequence": format!("{:?}", a.sequence).to_lowercase(),
        "dimension": a.dimension,
        "alpha": a.alpha,
        "fit": a.fit.json(),
    });
    Report::new("fit", inputs, None, params, to_value(&results)?).write(a.out.as_deref())
}

fn classify(a: &ClassifyArgs) -> CliResult<()> {
    let opts = ClassifyOptions {
        fit: a.fit.options()?,
        max_reduced_chi2: a.max_reduced_chi2,
        ..ClassifyOptions::default()
    };
    let mut inputs = Vec::new();
    let mut data = Vec::new();
    for p in &a.data {
        inputs.push(InputFile::hash(p)?);
        data.push(dataset(p, SequenceSpec::RamseyDeer, a.fit.min_time_cut_us)?);
    }
    let report = classify_dimension(&data, &a.candidates, a.alpha, &opts).map_err(|e| CliError::core("classify-dim", e))?;
    let params = json!({
        "alpha": a.alpha,
        "candidates": a.candidates,
        "max_reduced_chi2": opts.max_reduced_chi2,
        "tie_tolerance": opts.tie_tolerance,
        "fit": a.fit.json(),
    });
    Report::new("classify-dim", inputs, None, params, to_value(&report)?).write(a.out.as_deref())
}

fn tau_c(cli: &Cli, a: &TauCArgs) -> CliResult<()> {
    let opts = a.fit.options()?;
    let deer = dataset(&a.deer, SequenceSpec::RamseyDeer, a.fit.min_time_cut_us)?;
    let echo = dataset(&a.echo, SequenceSpec::SpinEcho, a.fit.min_time_cut_us)?;
    let policy = match a.policy {
        PolicyArg::PlusMinus => NormalizationPolicy::PlusMinus(a.width),
        PolicyArg::EarlyTime => NormalizationPolicy::EarlyTimeInterpolation,
    };
    let seed = cli.seed.unwrap_or(0);
    let est = extract_tau_c(&deer, &echo, policy, a.resamples, seed, a.dimension, a.alpha, &opts, &runner(cli)?)
        .map_err(|e| CliError::core("extract-tauc", e))?;
    let params = json!({
        "dimension": a.dimension,
        "alpha": a.alpha,
        "resamples": a.resamples,
        "fit": a.fit.json(),
    });
    let inputs = vec![InputFile::hash(&a.deer)?, InputFile::hash(&a.echo)?];
    Report::new("extract-tauc", inputs, Some(seed), params, to_value(&est)?).write(a.out.as_deref())
}

fn density(cli: &Cli, a: &DensityArgs) -> CliResult<()> {
    let measured = read_curve(&a.data)?;
    let mut inputs = vec![InputFile::hash(&a.data)?];
    let mut seed = None;
    let mut fraction = None;
    let family = match (&a.family, &a.config) {
        (Some(path), None) => {
            inputs.push(InputFile::hash(path)?);
            read_family(path)?
        }
        (None, Some(path)) => {
            inputs.push(InputFile::hash(path)?);
            let cfg = RunConfig::load(path)?;
            let spec = cfg.ensemble(cli.seed)?;
            // densities on the command line replace the config's own
            let mut template = spec.geometry;
            template.density = 0.0;
            let f = cfg.geometry.addressed_fraction;
            seed = Some(spec.master_seed);
            fraction = Some(f);
            let fam = build_static_family(
                &template,
                &a.densities_ppm_nm,
                f,
                &spec.times,
                spec.n_realizations,
                spec.master_seed,
                &runner(cli)?,
            )
            .map_err(|e| CliError::core(path.display().to_string(), e))?;
            if let Some(out) = &a.family_out {
                write_family(Some(out), &fam)?;
            }
            fam
        }
        _ => return Err(CliError::validation("--family/--config", "give exactly one")),
    };
    let baseline = match &a.baseline {
        Some(p) => {
            inputs.push(InputFile::hash(p)?);
            Some(read_curve(p)?)
        }
        None => None,
    };
    let opts = DensityOptions {
        min_time: a.min_time_us,
        late_time_cut: a.late_time_cut_us,
        free_normalization: a.free_normalization,
        baseline,
    };
    let est = estimate_density(&measured, &family, &opts).map_err(|e| CliError::core("estimate-density", e))?;
    let params = json!({
        "densities_ppm_nm": family.iter().map(|m| m.ppm_nm).collect::<Vec<_>>(),
        "addressed_fraction": fraction,
        "min_time_us": a.min_time_us,
        "late_time_cut_us": a.late_time_cut_us,
        "free_normalization": a.free_normalization,
    });
    Report::new("estimate-density", inputs, seed, params, to_value(&est)?).write(a.out.as_deref())
}

fn normalize(a: &NormalizeArgs) -> CliResult<()> {
    let raw = read_raw(&a.raw)?;
    let (t0, sigma) = match a.t0 {
        Some(v) => (v, a.t0_sigma),
        None => first_contrast(&raw).map_err(|e| CliError::core(a.raw.display().to_string(), e))?,
    };
    let curve = normalize_contrast(&raw, t0, sigma).map_err(|e| CliError::core(a.raw.display().to_string(), e))?;
    write_curve(a.out.as_deref(), &curve)
}

fn reproduce(cli: &Cli, a: &ReproduceArgs) -> CliResult<()> {
    std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    let runner = runner(cli)?;
    let seed = cli.seed.unwrap_or(scenarios::DEFAULT_SEED);
    let mut checks = Vec::new();
    let all = a.scenario == ScenarioArg::All;
    if all || a.scenario == ScenarioArg::Table1 {
        checks.extend(scenarios::table1(&a.out_dir, a.realizations, seed, &runner)?);
    }
    if all || a.scenario == ScenarioArg::Overlap {
        checks.extend(scenarios::overlap(&a.out_dir, a.realizations, seed, &runner)?);
    }
    if all || a.scenario == ScenarioArg::Classifier {
        checks.extend(scenarios::classifier(&a.out_dir, seed)?);
    }
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    std::fs::write(
        a.out_dir.join("summary.json"),
        serde_json::to_string_pretty(&checks).expect("serializable") + "\n",
    )
    .map_err(|e| CliError::io(&a.out_dir, e))?;
    if failed > 0 {
        return Err(CliError::acceptance(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}
