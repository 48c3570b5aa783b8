use alloc::vec::Vec;

use crate::curve::CoherenceCurve;
use crate::error::{require_positive, Error, Result};
use crate::geometry::{GeometrySpec, PPM_PER_NM3};
use crate::math::{exp, interp, log, sqrt};
use crate::monte_carlo::simulate_static_ramsey;
use crate::runner::Runner;

/// One simulated reference curve of the density family.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FamilyMember {
    /// Total layer density n·w (ppm·nm).
    pub ppm_nm: f64,
    /// Areal density of the spins that enter the simulation (nm⁻²).
    pub areal_density: f64,
    pub curve: CoherenceCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOptions {
    /// Only points with t > min_time are compared.
    pub min_time: f64,
    /// Only points with t ≤ late_time_cut are compared.
    pub late_time_cut: Option<f64>,
    /// Fit a free overall scale k in C ≈ k·C_family.
    pub free_normalization: bool,
    /// Bath-free reference curve; the measured curve is divided by it.
    pub baseline: Option<CoherenceCurve>,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            min_time: 0.0,
            late_time_cut: None,
            free_normalization: false,
            baseline: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DensityEstimate {
    pub ppm_nm: f64,
    /// Total areal density n·w·ρ_ppm (nm⁻²), before any addressed fraction.
    pub areal_density_per_nm2: f64,
    pub lower_ppm_nm: f64,
    pub upper_ppm_nm: f64,
    /// Half-width of the Δχ² = 1 interval (ppm·nm).
    pub uncertainty: f64,
    pub chi2_min: f64,
    pub n_points: usize,
    pub scale: f64,
    pub late_time_cut: Option<f64>,
    /// The Δχ² = 1 interval reached the edge of the family.
    pub interval_clipped: bool,
}

/// Simulates the static-bath DEER family for layer densities `ppm_nm`, of
/// which a fraction `addressed_fraction` is resonant with the pump. All
/// members share one seed, so their noise is correlated and the
/// interpolation between them stays smooth.
#[allow(clippy::too_many_arguments)]
pub fn build_static_family<R: Runner>(
    template: &GeometrySpec,
    densities_ppm_nm: &[f64],
    addressed_fraction: f64,
    times: &[f64],
    n_realizations: usize,
    seed: u64,
    runner: &R,
) -> Result<Vec<FamilyMember>> {
    if template.dimension != 2 {
        return Err(Error::invalid("template", "density families are defined for two-dimensional layers"));
    }
    require_positive("addressed_fraction", addressed_fraction)?;
    if addressed_fraction > 1.0 {
        return Err(Error::invalid("addressed_fraction", "must not exceed 1"));
    }
    if densities_ppm_nm.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: densities_ppm_nm.len(),
        });
    }
    if densities_ppm_nm.windows(2).any(|w| w[1] <= w[0]) || densities_ppm_nm[0] <= 0.0 {
        return Err(Error::invalid("densities", "must be positive and strictly increasing"));
    }
    densities_ppm_nm
        .iter()
        .map(|&x| {
            let areal = x * PPM_PER_NM3 * addressed_fraction;
            let geo = GeometrySpec { density: areal, ..*template };
            let sim = simulate_static_ramsey(&geo, times, n_realizations, seed, runner)?;
            Ok(FamilyMember {
                ppm_nm: x,
                areal_density: areal,
                curve: sim.curve,
            })
        })
        .collect()
}

struct Problem {
    data: Vec<f64>,
    sigma2: Vec<f64>,
    /// member × point
    model: Vec<Vec<f64>>,
    model_var: Vec<Vec<f64>>,
    xs: Vec<f64>,
    free_scale: bool,
}

impl Problem {
    fn model_at(&self, x: f64, out: &mut Vec<f64>, var: &mut Vec<f64>) {
        let k = match self.xs.iter().position(|&m| m >= x) {
            Some(0) => 1,
            Some(k) => k,
            None => self.xs.len() - 1,
        };
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let w = (x - x0) / (x1 - x0);
        out.clear();
        var.clear();
        for i in 0..self.data.len() {
            let (a, b) = (self.model[k - 1][i], self.model[k][i]);
            // −log C is linear in density for a Poisson bath
            let v = if a > 0.0 && b > 0.0 {
                exp((1.0 - w) * log(a) + w * log(b))
            } else {
                (1.0 - w) * a + w * b
            };
            out.push(v);
            var.push((1.0 - w) * (1.0 - w) * self.model_var[k - 1][i] + w * w * self.model_var[k][i]);
        }
    }

    /// (χ², scale)
    fn chi2(&self, x: f64) -> (f64, f64) {
        let mut m = Vec::new();
        let mut v = Vec::new();
        self.model_at(x, &mut m, &mut v);
        let scale = if self.free_scale {
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..m.len() {
                let s2 = self.sigma2[i] + v[i];
                num += self.data[i] * m[i] / s2;
                den += m[i] * m[i] / s2;
            }
            if den > 0.0 {
                num / den
            } else {
                1.0
            }
        } else {
            1.0
        };
        let mut c2 = 0.0;
        for i in 0..m.len() {
            let r = self.data[i] - scale * m[i];
            c2 += r * r / (self.sigma2[i] + scale * scale * v[i]);
        }
        (c2, scale)
    }
}

/// Matches a measured DEER curve against a simulated density family by
/// minimizing χ² over a continuous density obtained by interpolating
/// between neighbouring members.
pub fn estimate_density(measured: &CoherenceCurve, family: &[FamilyMember], opts: &DensityOptions) -> Result<DensityEstimate> {
    if family.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: family.len(),
        });
    }
    if family.windows(2).any(|w| w[1].ppm_nm <= w[0].ppm_nm) {
        return Err(Error::invalid("family", "members must be ordered by increasing density"));
    }
    let mut curve = measured.window(opts.min_time, opts.late_time_cut);
    if let Some(base) = &opts.baseline {
        curve = divide_by_baseline(&curve, base)?;
    }
    let mut data = Vec::new();
    let mut sigma2 = Vec::new();
    let mut model = alloc::vec![Vec::new(); family.len()];
    let mut model_var = alloc::vec![Vec::new(); family.len()];
    for i in 0..curve.len() {
        let t = curve.times[i];
        let values: Option<Vec<(f64, f64)>> = family
            .iter()
            .map(|m| {
                Some((
                    interp(&m.curve.times, &m.curve.coherence, t)?,
                    interp(&m.curve.times, &m.curve.stderr, t)?,
                ))
            })
            .collect();
        let Some(values) = values else {
            return Err(Error::Extrapolation(alloc::format!(
                "measured time {t} lies outside the family's time grid"
            )));
        };
        data.push(curve.coherence[i]);
        sigma2.push(curve.stderr[i] * curve.stderr[i]);
        for (k, (c, s)) in values.into_iter().enumerate() {
            model[k].push(c);
            model_var[k].push(s * s);
        }
    }
    let n_params = 1 + opts.free_normalization as usize;
    if data.len() <= n_params {
        return Err(Error::TooFewPoints {
            needed: n_params + 1,
            got: data.len(),
        });
    }
    if sigma2.iter().zip(&model_var[0]).any(|(a, b)| !(a + b > 0.0)) {
        return Err(Error::invalid("measured", "every compared point needs a positive combined error"));
    }
    let p = Problem {
        data,
        sigma2,
        model,
        model_var,
        xs: family.iter().map(|m| m.ppm_nm).collect(),
        free_scale: opts.free_normalization,
    };
    let lo = p.xs[0];
    let hi = p.xs[p.xs.len() - 1];
    const SCAN: usize = 2000;
    let grid: Vec<f64> = (0..=SCAN).map(|i| lo + (hi - lo) * i as f64 / SCAN as f64).collect();
    let chis: Vec<f64> = grid.iter().map(|&x| p.chi2(x).0).collect();
    let best = (0..chis.len())
        .min_by(|&a, &b| chis[a].partial_cmp(&chis[b]).unwrap_or(core::cmp::Ordering::Equal))
        .ok_or(Error::Empty("scan"))?;
    if !chis[best].is_finite() {
        return Err(Error::NoConvergence {
            reason: "χ² is not finite over the family".into(),
            best: None,
        });
    }
    if best == 0 || best == SCAN {
        return Err(Error::Extrapolation(alloc::format!(
            "best match lies at the edge of the family ({} ppm·nm)",
            grid[best]
        )));
    }
    let x_best = golden_min(|x| p.chi2(x).0, grid[best - 1], grid[best + 1]);
    let (chi_min, scale) = p.chi2(x_best);
    let target = chi_min + 1.0;
    let f = |x: f64| p.chi2(x).0 - target;
    let (lower, lo_clipped) = crossing(&f, x_best, lo);
    let (upper, hi_clipped) = crossing(&f, x_best, hi);
    Ok(DensityEstimate {
        ppm_nm: x_best,
        areal_density_per_nm2: x_best * PPM_PER_NM3,
        lower_ppm_nm: lower,
        upper_ppm_nm: upper,
        uncertainty: 0.5 * (upper - lower),
        chi2_min: chi_min,
        n_points: p.data.len(),
        scale,
        late_time_cut: opts.late_time_cut,
        interval_clipped: lo_clipped || hi_clipped,
    })
}

fn divide_by_baseline(curve: &CoherenceCurve, base: &CoherenceCurve) -> Result<CoherenceCurve> {
    let mut c = Vec::with_capacity(curve.len());
    let mut e = Vec::with_capacity(curve.len());
    for i in 0..curve.len() {
        let t = curve.times[i];
        let (Some(b), Some(sb)) = (interp(&base.times, &base.coherence, t), interp(&base.times, &base.stderr, t)) else {
            return Err(Error::Extrapolation(alloc::format!("baseline does not cover t = {t}")));
        };
        if !(b > 0.0) {
            return Err(Error::invalid("baseline", "must be positive where it is used"));
        }
        let v = curve.coherence[i] / b;
        let rel_m = curve.stderr[i] / b;
        c.push(v);
        e.push(sqrt(rel_m * rel_m + v * v * (sb / b) * (sb / b)));
    }
    CoherenceCurve::new(curve.times.clone(), c, e)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (sqrt(5.0) - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (b - a).abs() < 1e-10 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Walks from `from` toward `edge` until f changes sign, then bisects.
fn crossing(f: &impl Fn(f64) -> f64, from: f64, edge: f64) -> (f64, bool) {
    const STEPS: usize = 400;
    let mut prev = from;
    for i in 1..=STEPS {
        let x = from + (edge - from) * i as f64 / STEPS as f64;
        if f(x) >= 0.0 {
            let (mut a, mut b) = (prev, x);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if f(m) >= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            return (0.5 * (a + b), false);
        }
        prev = x;
    }
    (edge, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_family(xs: &[f64], times: &[f64]) -> Vec<FamilyMember> {
        xs.iter()
            .map(|&x| FamilyMember {
                ppm_nm: x,
                areal_density: x * PPM_PER_NM3,
                curve: CoherenceCurve::exact(times.to_vec(), times.iter().map(|&t| exp(-0.01 * x * t)).collect()).unwrap(),
            })
            .collect()
    }

    fn times() -> Vec<f64> {
        (1..=40).map(|i| i as f64 * 0.5).collect()
    }

    #[test]
    fn recovers_density_between_members() {
        let ts = times();
        let fam = synthetic_family(&[4.0, 6.0, 8.0, 10.0, 12.0], &ts);
        let x_true = 7.3;
        let meas = CoherenceCurve::new(
            ts.clone(),
            ts.iter().map(|&t| exp(-0.01 * x_true * t)).collect(),
            alloc::vec![0.01; ts.len()],
        )
        .unwrap();
        let est = estimate_density(&meas, &fam, &DensityOptions::default()).unwrap();
        assert!((est.ppm_nm - x_true).abs() < 1e-4, "{}", est.ppm_nm);
        assert!(est.lower_ppm_nm < x_true && est.upper_ppm_nm > x_true);
        assert!(!est.interval_clipped);
    }

    #[test]
    fn free_scale_absorbs_normalization() {
        let ts = times();
        let fam = synthetic_family(&[4.0, 6.0, 8.0, 10.0, 12.0], &ts);
        let meas = CoherenceCurve::new(
            ts.clone(),
            ts.iter().map(|&t| 0.9 * exp(-0.09 * t)).collect(),
            alloc::vec![0.01; ts.len()],
        )
        .unwrap();
        let opts = DensityOptions {
            free_normalization: true,
            ..Default::default()
        };
        let est = estimate_density(&meas, &fam, &opts).unwrap();
        assert!((est.ppm_nm - 9.0).abs() < 1e-3);
        assert!((est.scale - 0.9).abs() < 1e-4);
    }

    #[test]
    fn edge_minimum_is_an_extrapolation() {
        let ts = times();
        let fam = synthetic_family(&[4.0, 6.0, 8.0], &ts);
        let meas = CoherenceCurve::new(ts.clone(), ts.iter().map(|&t| exp(-0.2 * t)).collect(), alloc::vec![0.01; ts.len()]).unwrap();
        assert!(matches!(
            estimate_density(&meas, &fam, &DensityOptions::default()),
            Err(Error::Extrapolation(_))
        ));
    }

    #[test]
    fn baseline_division() {
        let ts = times();
        let fam = synthetic_family(&[4.0, 6.0, 8.0, 10.0], &ts);
        let base = CoherenceCurve::exact(ts.clone(), ts.iter().map(|&t| exp(-0.02 * t)).collect()).unwrap();
        let meas = CoherenceCurve::new(
            ts.clone(),
            ts.iter().map(|&t| exp(-0.07 * t - 0.02 * t)).collect(),
            alloc::vec![0.005; ts.len()],
        )
        .unwrap();
        let opts = DensityOptions {
            baseline: Some(base),
            ..Default::default()
        };
        let est = estimate_density(&meas, &fam, &opts).unwrap();
        assert!((est.ppm_nm - 7.0).abs() < 1e-3);
    }
}
