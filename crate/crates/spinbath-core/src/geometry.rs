//! Disordered bath geometry: Poisson-distributed spins around the probe and
//! their Ising couplings J_z·g_i/r_i^α.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::math::{cos, fabs, gamma, pow, sin, sqrt, unit_ball_volume};
use crate::quad::{self, Options};
use crate::rng::{self, Rng};

/// 1 ppm of the diamond carbon density, in nm⁻³.
pub const PPM_PER_NM3: f64 = 1.76e-4;

/// Magnetic dipole coupling between two electron spins, 2π × 52 MHz·nm³,
/// in rad·μs⁻¹·nm³.
pub const J0_DIPOLAR: f64 = 2.0 * PI * 52.0;

/// Default minimum probe–spin distance (nm).
pub const DEFAULT_EXCLUSION_RADIUS: f64 = 0.154;

/// Default bound on the neglected far-field share of −log C.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum AngularModel {
    Isotropic,
    /// g = 1 − 3cos²θ relative to the quantization axis.
    SecularDipolar {
        axis: [f64; 3],
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GeometrySpec {
    pub dimension: u8,
    pub alpha: f64,
    /// Spins per nm^D (per nm² for a slab).
    pub density: f64,
    /// Slab thickness w (nm); 0 for an ideal layer. Only for D = 2.
    pub slab_thickness: f64,
    /// Sampling radius (nm); `None` selects it from the tail tolerance.
    pub region_radius: Option<f64>,
    /// J_z (rad·μs⁻¹·nm^α).
    pub coupling: f64,
    pub angular: AngularModel,
    pub exclusion_radius: f64,
}

impl GeometrySpec {
    /// Ideal isotropic geometry with default exclusion radius.
    pub fn ideal(dimension: u8, alpha: f64, density: f64, coupling: f64) -> Self {
        Self {
            dimension,
            alpha,
            density,
            slab_thickness: 0.0,
            region_radius: None,
            coupling,
            angular: AngularModel::Isotropic,
            exclusion_radius: DEFAULT_EXCLUSION_RADIUS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::invalid("dimension", "must be 1, 2 or 3"));
        }
        require_positive("alpha", self.alpha)?;
        if self.dimension as f64 >= 2.0 * self.alpha {
            return Err(Error::Divergent {
                dimension: self.dimension,
                alpha: self.alpha,
            });
        }
        require_non_negative("density", self.density)?;
        require_non_negative("slab_thickness", self.slab_thickness)?;
        if self.slab_thickness > 0.0 && self.dimension != 2 {
            return Err(Error::invalid("slab_thickness", "a finite thickness needs dimension 2"));
        }
        if !self.coupling.is_finite() {
            return Err(Error::invalid("coupling", "must be finite"));
        }
        require_non_negative("exclusion_radius", self.exclusion_radius)?;
        if let Some(r) = self.region_radius {
            require_positive("region_radius", r)?;
            if r <= self.exclusion_radius {
                return Err(Error::invalid("region_radius", "must exceed the exclusion radius"));
            }
        }
        if let AngularModel::SecularDipolar { axis } = self.angular {
            let n = sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::invalid("axis", "must be a non-zero vector"));
            }
        }
        Ok(())
    }

    /// Region volume (area for D = 2 including slabs, length for D = 1).
    pub fn volume(&self, radius: f64) -> f64 {
        unit_ball_volume(self.dimension) * pow(radius, self.dimension as f64)
    }

    /// ⟨|g|^{D/α}⟩^{α/D} over the directions available in D dimensions
    /// (line along x, plane z = 0, or the full sphere).
    pub fn g_bar(&self) -> f64 {
        let axis = match self.angular {
            AngularModel::Isotropic => return 1.0,
            AngularModel::SecularDipolar { axis } => normalize(axis),
        };
        let p = self.dimension as f64 / self.alpha;
        let g = |dir: [f64; 3]| {
            let c = dir[0] * axis[0] + dir[1] * axis[1] + dir[2] * axis[2];
            pow(fabs(1.0 - 3.0 * c * c), p)
        };
        let opts = Options {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_intervals: 10_000,
        };
        let mean = match self.dimension {
            1 => g([1.0, 0.0, 0.0]),
            2 => {
                let r = quad::integrate(|phi| g([cos(phi), sin(phi), 0.0]), 0.0, 2.0 * PI, opts);
                r.map(|e| e.value / (2.0 * PI)).unwrap_or(f64::NAN)
            }
            _ => {
                // axially symmetric: average over u = cos θ relative to the axis
                let u0 = 1.0 / sqrt(3.0);
                let f = |u: f64| pow(fabs(1.0 - 3.0 * u * u), p);
                quad::integrate_pieces(f, &[0.0, u0, 1.0], opts).map(|e| e.value).unwrap_or(f64::NAN)
            }
        };
        pow(mean, self.alpha / self.dimension as f64)
    }

    /// Largest |g| of the angular model.
    pub fn g_max(&self) -> f64 {
        match self.angular {
            AngularModel::Isotropic => 1.0,
            AngularModel::SecularDipolar { .. } => 2.0,
        }
    }

    /// Radius beyond which the Gaussian far-field estimate of the neglected
    /// share of −log C at phase variance `chi_max` is below `tol`.
    ///
    /// Far spins contribute J²g²χ/(8r^{2α}) each, which integrates to
    /// n·D·A_D·J²g²χ·R^{D−2α}/(8(2α−D)); the total is n(C·ḡ·J·√χ)^{D/α}.
    pub fn radius_for(&self, chi_max: f64, tol: f64) -> Result<f64> {
        self.validate()?;
        require_positive("tail_tolerance", tol)?;
        let floor = (10.0 * self.exclusion_radius).max(4.0 * self.slab_thickness).max(1.0);
        if let Some(r) = self.region_radius {
            return Ok(r);
        }
        if !(chi_max > 0.0) || self.coupling == 0.0 {
            return Ok(floor);
        }
        let d = self.dimension as f64;
        let a = self.alpha;
        let c = positional_prefactor(self.dimension, a)?;
        let jg = fabs(self.coupling) * self.g_max();
        let coeff = d * unit_ball_volume(self.dimension) * jg * jg * chi_max / (8.0 * (2.0 * a - d));
        let total = pow(c * self.g_bar() * fabs(self.coupling) * sqrt(chi_max), d / a);
        let r = pow(coeff / (tol * total), 1.0 / (2.0 * a - d));
        // keep at least a few resonance radii
        Ok(r.max(3.0 * self.resonance_radius(chi_max)).max(floor))
    }

    /// Distance at which the strongest coupling gives a phase of order one
    /// at phase variance `chi`.
    pub fn resonance_radius(&self, chi: f64) -> f64 {
        pow(fabs(self.coupling) * self.g_max() * sqrt(chi.max(0.0)) / 2.0, 1.0 / self.alpha)
    }
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// C(D, α) = ½[−(D·A_D/α)·Γ(−D/2α)/2^{D/2α+1}]^{α/D}.
pub fn positional_prefactor(dimension: u8, alpha: f64) -> Result<f64> {
    let d = dimension as f64;
    if !(1..=3).contains(&dimension) {
        return Err(Error::invalid("dimension", "must be 1, 2 or 3"));
    }
    require_positive("alpha", alpha)?;
    if d >= 2.0 * alpha {
        return Err(Error::Divergent { dimension, alpha });
    }
    let s = d / (2.0 * alpha);
    let inner = -(d * unit_ball_volume(dimension) / alpha) * gamma(-s) / pow(2.0, s + 1.0);
    Ok(0.5 * pow(inner, alpha / d))
}

/// g = 1 for isotropic couplings, 1 − 3cos²θ for secular dipolar ones.
pub fn angular_factor(direction: [f64; 3], model: &AngularModel) -> f64 {
    match model {
        AngularModel::Isotropic => 1.0,
        AngularModel::SecularDipolar { axis } => {
            let a = normalize(*axis);
            let c = direction[0] * a[0] + direction[1] * a[1] + direction[2] * a[2];
            1.0 - 3.0 * c * c
        }
    }
}

/// One sampled bath around a probe at the origin.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BathConfiguration {
    /// Positions relative to the probe (nm).
    pub positions: Vec<[f64; 3]>,
    /// J_z·g_i/r_i^α (rad/μs).
    pub couplings: Vec<f64>,
    pub radius: f64,
}

impl BathConfiguration {
    pub fn count(&self) -> usize {
        self.positions.len()
    }
}

fn r_pow(r: f64, alpha: f64) -> f64 {
    if alpha == 3.0 {
        r * r * r
    } else if alpha == 2.0 {
        r * r
    } else {
        pow(r, alpha)
    }
}

/// Draws one position inside the region, honouring the exclusion radius.
/// `probe_z` shifts slab positions so they are relative to a probe that
/// sits at height `probe_z` inside the slab.
fn draw_position(rng: &mut Rng, spec: &GeometrySpec, radius: f64, probe_z: f64) -> [f64; 3] {
    let r0 = spec.exclusion_radius;
    match spec.dimension {
        1 => {
            let r = r0 + (radius - r0) * rng.random::<f64>();
            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            [s * r, 0.0, 0.0]
        }
        2 if spec.slab_thickness > 0.0 => loop {
            let rho = radius * sqrt(rng.random::<f64>());
            let phi = 2.0 * PI * rng.random::<f64>();
            let z = spec.slab_thickness * (rng.random::<f64>() - 0.5) - probe_z;
            let p = [rho * cos(phi), rho * sin(phi), z];
            if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] >= r0 * r0 {
                return p;
            }
        },
        2 => {
            let r = sqrt(r0 * r0 + (radius * radius - r0 * r0) * rng.random::<f64>());
            let phi = 2.0 * PI * rng.random::<f64>();
            [r * cos(phi), r * sin(phi), 0.0]
        }
        _ => {
            let (a3, b3) = (r0 * r0 * r0, radius * radius * radius);
            let r = libm::cbrt(a3 + (b3 - a3) * rng.random::<f64>());
            let u = 2.0 * rng.random::<f64>() - 1.0;
            let phi = 2.0 * PI * rng.random::<f64>();
            let s = sqrt((1.0 - u * u).max(0.0));
            [r * s * cos(phi), r * s * sin(phi), r * u]
        }
    }
}

fn coupling_of(p: &[f64; 3], spec: &GeometrySpec) -> f64 {
    let r = sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    let g = match spec.angular {
        AngularModel::Isotropic => 1.0,
        _ => angular_factor([p[0] / r, p[1] / r, p[2] / r], &spec.angular),
    };
    spec.coupling * g / r_pow(r, spec.alpha)
}

fn draw_count(rng: &mut Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let p = Poisson::new(mean).expect("positive finite Poisson mean");
    let n: f64 = p.sample(rng);
    n as usize
}

/// Samples positions and couplings with an explicit radius.
pub fn sample_with_radius(rng: &mut Rng, spec: &GeometrySpec, radius: f64, probe_at_origin: bool) -> BathConfiguration {
    let n = draw_count(rng, spec.density * spec.volume(radius));
    let probe_z = if !probe_at_origin && spec.slab_thickness > 0.0 {
        spec.slab_thickness * (rng.random::<f64>() - 0.5)
    } else {
        0.0
    };
    let positions: Vec<[f64; 3]> = (0..n).map(|_| draw_position(rng, spec, radius, probe_z)).collect();
    let couplings = positions.iter().map(|p| coupling_of(p, spec)).collect();
    BathConfiguration {
        positions,
        couplings,
        radius,
    }
}

/// Appends only the couplings of a fresh sample (no position storage).
pub(crate) fn sample_couplings(rng: &mut Rng, spec: &GeometrySpec, radius: f64, out: &mut Vec<f64>) {
    out.clear();
    let n = draw_count(rng, spec.density * spec.volume(radius));
    out.reserve(n);
    for _ in 0..n {
        let p = draw_position(rng, spec, radius, 0.0);
        out.push(coupling_of(&p, spec));
    }
}

/// Samples a bath with `spec.region_radius`, which must be set.
///
/// With `probe_at_origin = false` in a slab, the probe height is itself
/// drawn uniformly across the slab.
pub fn sample_positions(spec: &GeometrySpec, probe_at_origin: bool, seed: u64) -> Result<BathConfiguration> {
    spec.validate()?;
    let radius = spec
        .region_radius
        .ok_or_else(|| Error::invalid("region_radius", "required for direct sampling"))?;
    let mut rng = rng::from_seed(seed);
    Ok(sample_with_radius(&mut rng, spec, radius, probe_at_origin))
}

/// Recomputes couplings from positions.
pub fn coupling_strengths(config: &BathConfiguration, spec: &GeometrySpec) -> Result<Vec<f64>> {
    config
        .positions
        .iter()
        .map(|p| {
            let r = sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
            if r < spec.exclusion_radius * (1.0 - 1e-12) || r == 0.0 {
                Err(Error::OutOfRange {
                    name: "distance",
                    value: r,
                    reason: "spin inside the exclusion radius",
                })
            } else {
                Ok(coupling_of(p, spec))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefactor_values() {
        let c33 = positional_prefactor(3, 3.0).unwrap();
        assert!((c33 - 2.624_934_990_953_736_5).abs() < 1e-12);
        let c23 = positional_prefactor(2, 3.0).unwrap();
        assert!((c23 - 3.102_162_567_364_983).abs() < 1e-12);
        assert!(matches!(positional_prefactor(3, 1.5), Err(Error::Divergent { .. })));
    }

    #[test]
    fn angular_factors() {
        let m = AngularModel::SecularDipolar { axis: [0.0, 0.0, 1.0] };
        assert_eq!(angular_factor([0.0, 0.0, 1.0], &m), -2.0);
        let u = 1.0 / sqrt(3.0);
        let s = sqrt(1.0 - u * u);
        assert!(angular_factor([s, 0.0, u], &m).abs() < 1e-15);
        assert_eq!(angular_factor([0.6, 0.8, 0.0], &AngularModel::Isotropic), 1.0);
    }

    #[test]
    fn single_spin_coupling() {
        let spec = GeometrySpec::ideal(3, 3.0, 0.0, J0_DIPOLAR);
        let cfg = BathConfiguration {
            positions: alloc::vec![[1.0, 0.0, 0.0], [0.0, 10.0, 0.0]],
            couplings: Vec::new(),
            radius: 20.0,
        };
        let c = coupling_strengths(&cfg, &spec).unwrap();
        assert!((c[0] - 326.725_635_973_338_2).abs() < 1e-9);
        assert!((c[1] - 0.326_725_635_973_338_2).abs() < 1e-12);
        let spec2 = GeometrySpec {
            coupling: 2.0 * J0_DIPOLAR,
            ..spec
        };
        let c2 = coupling_strengths(&cfg, &spec2).unwrap();
        assert_eq!(c2[0], 2.0 * c[0]);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = GeometrySpec::ideal(3, 1.5, 0.01, 1.0);
        assert!(matches!(spec.validate(), Err(Error::Divergent { .. })));
        spec.alpha = 3.0;
        spec.region_radius = Some(0.1);
        assert!(spec.validate().is_err());
        spec.region_radius = Some(10.0);
        spec.slab_thickness = 2.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn exclusion_radius_respected() {
        let spec = GeometrySpec {
            region_radius: Some(3.0),
            exclusion_radius: 1.0,
            ..GeometrySpec::ideal(3, 3.0, 0.5, 1.0)
        };
        let cfg = sample_positions(&spec, true, 11).unwrap();
        assert!(cfg.count() > 10);
        assert!(coupling_strengths(&cfg, &spec).is_ok());
        for p in &cfg.positions {
            let r = sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
            assert!((1.0..=3.0).contains(&r));
        }
    }

    #[test]
    fn g_bar_isotropic_and_dipolar() {
        let mut spec = GeometrySpec::ideal(3, 3.0, 0.01, 1.0);
        assert_eq!(spec.g_bar(), 1.0);
        spec.angular = AngularModel::SecularDipolar { axis: [0.0, 0.0, 1.0] };
        // ⟨|1−3u²|⟩ over u ∈ [0,1] = 4/(3√3)
        assert!((spec.g_bar() - 4.0 / (3.0 * sqrt(3.0))).abs() < 1e-9);
        spec.dimension = 2;
        // in-plane directions are all perpendicular to z
        assert!((spec.g_bar() - 1.0).abs() < 1e-12);
    }
}
