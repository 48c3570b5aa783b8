use alloc::string::String;
use alloc::vec::Vec;

use super::fit::{fit_profile, FitOptions, FitSpace};
use super::ExperimentalDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    pub fit: FitOptions,
    /// A verdict also needs the winning fit to describe the data: its pooled
    /// reduced χ² must not exceed this in either space.
    pub max_reduced_chi2: f64,
    /// Relative χ² gap below which two candidates count as tied.
    pub tie_tolerance: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            max_reduced_chi2: 5.0,
            tie_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FitRow {
    pub dataset: usize,
    pub dimension: u8,
    pub space: FitSpace,
    pub chi2_reduced: f64,
    pub amplitude: f64,
    pub tau_c: f64,
    pub n_points: usize,
}

/// χ² summed over all datasets for one (D, space), per degree of freedom.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PooledRow {
    pub dimension: u8,
    pub space: FitSpace,
    pub chi2_reduced: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Verdict {
    Dimension(u8),
    Ambiguous(String),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DimensionalityReport {
    pub alpha: f64,
    pub candidates: Vec<u8>,
    pub table: Vec<FitRow>,
    pub pooled: Vec<PooledRow>,
    pub verdict: Verdict,
}

/// Fits every dataset under every candidate D in both spaces, pools χ² over
/// the datasets, and picks the D with the lowest pooled reduced χ² in both
/// spaces; anything less clear-cut is reported as ambiguous.
pub fn classify_dimension(datasets: &[ExperimentalDataset], candidates: &[u8], alpha: f64, opts: &ClassifyOptions) -> Result<DimensionalityReport> {
    if datasets.is_empty() {
        return Err(Error::Empty("datasets"));
    }
    if candidates.len() < 2 {
        return Err(Error::invalid("candidates", "need at least two dimensions to compare"));
    }
    let spaces = [FitSpace::Linear, FitSpace::NegLog];
    let mut table = Vec::new();
    for (i, ds) in datasets.iter().enumerate() {
        for &d in candidates {
            for space in spaces {
                let r = fit_profile(ds, d, alpha, space, &opts.fit)?;
                table.push(FitRow {
                    dataset: i,
                    dimension: d,
                    space,
                    chi2_reduced: r.chi2_reduced,
                    amplitude: r.amplitude,
                    tau_c: r.tau_c,
                    n_points: r.n_points,
                });
            }
        }
    }
    let mut pooled = Vec::new();
    for space in spaces {
        for &d in candidates {
            let rows = table.iter().filter(|r| r.dimension == d && r.space == space);
            let (chi2, dof) = rows.fold((0.0, 0usize), |(c, n), r| {
                (c + r.chi2_reduced * (r.n_points - 2) as f64, n + r.n_points - 2)
            });
            pooled.push(PooledRow {
                dimension: d,
                space,
                chi2_reduced: chi2 / dof as f64,
            });
        }
    }
    let verdict = decide(&pooled, &spaces, opts);
    Ok(DimensionalityReport {
        alpha,
        candidates: candidates.to_vec(),
        table,
        pooled,
        verdict,
    })
}

fn decide(pooled: &[PooledRow], spaces: &[FitSpace], opts: &ClassifyOptions) -> Verdict {
    let mut winner: Option<u8> = None;
    for &space in spaces {
        let mut rows: Vec<&PooledRow> = pooled.iter().filter(|r| r.space == space).collect();
        rows.sort_by(|a, b| a.chi2_reduced.partial_cmp(&b.chi2_reduced).unwrap_or(core::cmp::Ordering::Equal));
        let (best, second) = (rows[0], rows[1]);
        if !best.chi2_reduced.is_finite() {
            return Verdict::Ambiguous(alloc::format!("{} space: no finite fit", space.name()));
        }
        if second.chi2_reduced - best.chi2_reduced <= opts.tie_tolerance * best.chi2_reduced.max(f64::MIN_POSITIVE) {
            return Verdict::Ambiguous(alloc::format!("{} space: candidates tie", space.name()));
        }
        if best.chi2_reduced > opts.max_reduced_chi2 {
            return Verdict::Ambiguous(alloc::format!(
                "{} space: no candidate fits (best reduced chi2 {:.3})",
                space.name(),
                best.chi2_reduced
            ));
        }
        match winner {
            None => winner = Some(best.dimension),
            Some(w) if w != best.dimension => {
                return Verdict::Ambiguous(alloc::format!("{} space prefers D = {}, others D = {w}", space.name(), best.dimension));
            }
            _ => {}
        }
    }
    match winner {
        Some(d) => Verdict::Dimension(d),
        None => Verdict::Ambiguous("no fits".into()),
    }
}
