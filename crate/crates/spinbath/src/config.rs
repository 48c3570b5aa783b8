//! Versioned JSON run configuration. Every physical field carries its unit
//! in the name, and unknown fields are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use spinbath_core::geometry::{AngularModel, GeometrySpec, DEFAULT_EXCLUSION_RADIUS, DEFAULT_TAIL_TOLERANCE, J0_DIPOLAR, PPM_PER_NM3};
use spinbath_core::inference::FitOptions;
use spinbath_core::math::logspace;
use spinbath_core::monte_carlo::EnsembleSpec;
use spinbath_core::noise::{DriveSpec, NoiseModelSpec};
use spinbath_core::sequence::SequenceSpec;

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub geometry: GeometryConfig,
    pub noise: NoiseConfig,
    pub sequence: SequenceConfig,
    pub ensemble: EnsembleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inference: Option<InferenceConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub dimension: u8,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_per_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_per_nm2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_per_nm3: Option<f64>,
    /// Bulk concentration, D = 3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_ppm: Option<f64>,
    /// Layer density n·w, D = 2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_ppm_nm: Option<f64>,
    /// Share of the spins that take part (e.g. one resonant group).
    #[serde(default = "one")]
    pub addressed_fraction: f64,
    #[serde(default)]
    pub slab_thickness_nm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_radius_nm: Option<f64>,
    /// J_z in rad·μs⁻¹·nm^α; defaults to the electron dipole constant.
    #[serde(default = "j0")]
    pub coupling_rad_per_us_nm_alpha: f64,
    #[serde(default)]
    pub angular: AngularConfig,
    #[serde(default = "exclusion")]
    pub exclusion_radius_nm: f64,
}

fn one() -> f64 {
    1.0
}
fn j0() -> f64 {
    J0_DIPOLAR
}
fn exclusion() -> f64 {
    DEFAULT_EXCLUSION_RADIUS
}
fn tail() -> f64 {
    DEFAULT_TAIL_TOLERANCE
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AngularConfig {
    #[default]
    Isotropic,
    SecularDipolar {
        axis: [f64; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    GaussMarkov {
        tau_c_us: f64,
    },
    Telegraph {
        tau_c_us: f64,
    },
    DrivenSpin {
        rabi_rad_per_us: f64,
        linewidth_rad_per_us: f64,
        sample_step_us: f64,
    },
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceConfig {
    Deer,
    Echo,
    Xy8 { tau_p_us: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub times: TimesConfig,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub dt_us: f64,
    #[serde(default = "tail")]
    pub tail_tolerance: f64,
    #[serde(default)]
    pub fixed_geometry: bool,
    #[serde(default = "yes")]
    pub aggregate_gaussian: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimesConfig {
    List(TimeList),
    Grid(TimeGrid),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeList {
    pub times_us: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start_us: f64,
    pub stop_us: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceConfig {
    #[serde(default = "tau_grid")]
    pub tau_grid_us: [f64; 2],
    #[serde(default = "starts")]
    pub starts_per_decade: usize,
    #[serde(default = "cut")]
    pub min_time_cut_us: f64,
}

fn tau_grid() -> [f64; 2] {
    [0.1, 100.0]
}
fn starts() -> usize {
    8
}
fn cut() -> f64 {
    spinbath_core::inference::DEFAULT_MIN_TIME_CUT
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            tau_grid_us: tau_grid(),
            starts_per_decade: starts(),
            min_time_cut_us: cut(),
        }
    }
}

impl InferenceConfig {
    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            tau_grid: (self.tau_grid_us[0], self.tau_grid_us[1]),
            starts_per_decade: self.starts_per_decade,
            ..FitOptions::default()
        }
    }
}

fn bad(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::validation(field.to_string(), msg)
}

impl TimesConfig {
    pub fn resolve(&self) -> CliResult<Vec<f64>> {
        match self {
            TimesConfig::List(TimeList { times_us }) => {
                if times_us.is_empty() {
                    return Err(bad("ensemble.times.times_us", "must not be empty"));
                }
                Ok(times_us.clone())
            }
            TimesConfig::Grid(g) => {
                if g.count < 2 || !(g.start_us > 0.0) || !(g.stop_us > g.start_us) {
                    return Err(bad("ensemble.times", "need count ≥ 2 and 0 < start_us < stop_us"));
                }
                Ok(match g.spacing {
                    Spacing::Log => logspace(g.start_us, g.stop_us, g.count),
                    Spacing::Linear => (0..g.count)
                        .map(|i| g.start_us + (g.stop_us - g.start_us) * i as f64 / (g.count - 1) as f64)
                        .collect(),
                })
            }
        }
    }
}

impl GeometryConfig {
    /// Density in spins per nm^D after the addressed fraction.
    pub fn density(&self) -> CliResult<f64> {
        let given: Vec<(&str, f64, u8, f64)> = [
            ("density_per_nm", self.density_per_nm, 1u8, 1.0),
            ("density_per_nm2", self.density_per_nm2, 2, 1.0),
            ("density_per_nm3", self.density_per_nm3, 3, 1.0),
            ("density_ppm", self.density_ppm, 3, PPM_PER_NM3),
            ("density_ppm_nm", self.density_ppm_nm, 2, PPM_PER_NM3),
        ]
        .into_iter()
        .filter_map(|(n, v, d, s)| v.map(|v| (n, v, d, s)))
        .collect();
        let [(name, value, dim, scale)] = given[..] else {
            return Err(bad("geometry", "give exactly one density field"));
        };
        if dim != self.dimension {
            return Err(bad(
                &format!("geometry.{name}"),
                format!("does not apply to dimension {}", self.dimension),
            ));
        }
        if !(value >= 0.0) {
            return Err(bad(&format!("geometry.{name}"), "must be non-negative"));
        }
        if !(self.addressed_fraction > 0.0 && self.addressed_fraction <= 1.0) {
            return Err(bad("geometry.addressed_fraction", "must be in (0, 1]"));
        }
        Ok(value * scale * self.addressed_fraction)
    }

    pub fn to_spec(&self) -> CliResult<GeometrySpec> {
        let spec = GeometrySpec {
            dimension: self.dimension,
            alpha: self.alpha,
            density: self.density()?,
            slab_thickness: self.slab_thickness_nm,
            region_radius: self.region_radius_nm,
            coupling: self.coupling_rad_per_us_nm_alpha,
            angular: match self.angular {
                AngularConfig::Isotropic => AngularModel::Isotropic,
                AngularConfig::SecularDipolar { axis } => AngularModel::SecularDipolar { axis },
            },
            exclusion_radius: self.exclusion_radius_nm,
        };
        spec.validate().map_err(|e| CliError::core("geometry", e))?;
        Ok(spec)
    }
}

impl NoiseConfig {
    pub fn to_spec(&self) -> CliResult<NoiseModelSpec> {
        let spec = match *self {
            NoiseConfig::GaussMarkov { tau_c_us } => NoiseModelSpec::GaussMarkov { tau_c: tau_c_us },
            NoiseConfig::Telegraph { tau_c_us } => NoiseModelSpec::Telegraph { tau_c: tau_c_us },
            NoiseConfig::DrivenSpin {
                rabi_rad_per_us,
                linewidth_rad_per_us,
                sample_step_us,
            } => NoiseModelSpec::DrivenSpin(DriveSpec {
                rabi: rabi_rad_per_us,
                linewidth: linewidth_rad_per_us,
                sample_step: sample_step_us,
            }),
            NoiseConfig::Static => NoiseModelSpec::Static,
        };
        spec.validate().map_err(|e| CliError::core("noise", e))?;
        Ok(spec)
    }
}

impl SequenceConfig {
    pub fn to_spec(&self) -> CliResult<SequenceSpec> {
        let spec = match *self {
            SequenceConfig::Deer => SequenceSpec::RamseyDeer,
            SequenceConfig::Echo => SequenceSpec::SpinEcho,
            SequenceConfig::Xy8 { tau_p_us } => SequenceSpec::Xy8 { tau_p: tau_p_us },
        };
        spec.validate().map_err(|e| CliError::core("sequence", e))?;
        Ok(spec)
    }
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::validation(origin.to_string(), e))?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::validation(
                format!("{origin}: version"),
                format!("unsupported config version {} (expected {CONFIG_VERSION})", cfg.version),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Validated engine input, with `seed` replacing the configured seed.
    pub fn ensemble(&self, seed: Option<u64>) -> CliResult<EnsembleSpec> {
        let e = &self.ensemble;
        let mut spec = EnsembleSpec::new(
            self.geometry.to_spec()?,
            self.noise.to_spec()?,
            self.sequence.to_spec()?,
            e.times.resolve()?,
            e.n_realizations,
            seed.unwrap_or(e.master_seed),
            e.dt_us,
        );
        spec.tail_tolerance = e.tail_tolerance;
        spec.fixed_geometry = e.fixed_geometry;
        spec.aggregate_gaussian = e.aggregate_gaussian;
        Ok(spec)
    }
}
