//! CSV file formats. Headers must match exactly; numbers are written in the
//! shortest decimal form that parses back to the same f64.

use std::io::Write;
use std::path::Path;

use spinbath_core::curve::CoherenceCurve;
use spinbath_core::inference::{FamilyMember, RawContrast};

use crate::error::{CliError, CliResult};

pub const CURVE_HEADER: [&str; 3] = ["t_us", "coherence", "stderr"];
pub const RAW_HEADER: [&str; 5] = ["t_us", "s0", "s1", "sigma0", "sigma1"];
pub const FAMILY_HEADER: [&str; 4] = ["ppm_nm", "t_us", "coherence", "stderr"];
pub const TRAJECTORY_HEADER: [&str; 2] = ["t_us", "s_z"];
pub const CHI_HEADER: [&str; 3] = ["t_us", "chi_us2", "method"];
pub const PROFILE_HEADER: [&str; 2] = ["t_us", "coherence"];
pub const BETA_HEADER: [&str; 3] = ["t_us", "beta", "beta_err"];

/// Shortest round-trip decimal text.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Parses a numeric table with the given header. Returns rows of numbers
/// together with the file line each row came from.
fn read_table<const N: usize>(path: &Path, header: [&str; N]) -> CliResult<Vec<(u64, [f64; N])>> {
    let name = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::validation(name.clone(), e))?;
    let found = rdr.headers().map_err(|e| CliError::validation(name.clone(), e))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(CliError::validation(
            format!("{name}:1"),
            format!(
                "header must be `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::validation(format!("{name}:{line}"), e)
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let mut row = [0.0; N];
        for (i, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| CliError::validation(format!("{name}:{line}"), format!("column `{}`: `{field}` is not a number", header[i])))?;
            if !v.is_finite() {
                return Err(CliError::validation(
                    format!("{name}:{line}"),
                    format!("column `{}` is not finite", header[i]),
                ));
            }
            row[i] = v;
        }
        rows.push((line, row));
    }
    Ok(rows)
}

fn check_times(name: &str, lines: &[u64], times: &[f64]) -> CliResult<()> {
    if times.is_empty() {
        return Err(CliError::validation(name.to_string(), "no data rows"));
    }
    for i in 0..times.len() {
        if times[i] < 0.0 {
            return Err(CliError::validation(format!("{name}:{}", lines[i]), "t_us must be non-negative"));
        }
        if i > 0 && times[i] <= times[i - 1] {
            return Err(CliError::validation(format!("{name}:{}", lines[i]), "t_us must be strictly increasing"));
        }
    }
    Ok(())
}

pub fn read_curve(path: &Path) -> CliResult<CoherenceCurve> {
    let name = path.display().to_string();
    let rows = read_table(path, CURVE_HEADER)?;
    let lines: Vec<u64> = rows.iter().map(|r| r.0).collect();
    let t: Vec<f64> = rows.iter().map(|r| r.1[0]).collect();
    check_times(&name, &lines, &t)?;
    for (line, r) in &rows {
        if r[2] < 0.0 {
            return Err(CliError::validation(format!("{name}:{line}"), "stderr must be non-negative"));
        }
    }
    CoherenceCurve::new(t, rows.iter().map(|r| r.1[1]).collect(), rows.iter().map(|r| r.1[2]).collect()).map_err(|e| CliError::core(name, e))
}

pub fn read_raw(path: &Path) -> CliResult<RawContrast> {
    let name = path.display().to_string();
    let rows = read_table(path, RAW_HEADER)?;
    let lines: Vec<u64> = rows.iter().map(|r| r.0).collect();
    let col = |k: usize| rows.iter().map(|r| r.1[k]).collect::<Vec<f64>>();
    check_times(&name, &lines, &col(0))?;
    for (line, r) in &rows {
        if r[3] < 0.0 || r[4] < 0.0 {
            return Err(CliError::validation(format!("{name}:{line}"), "sigmas must be non-negative"));
        }
    }
    Ok(RawContrast {
        times: col(0),
        s0: col(1),
        s1: col(2),
        sigma0: col(3),
        sigma1: col(4),
    })
}

/// Long-format family table: one block of rows per density, in increasing
/// density order.
pub fn read_family(path: &Path) -> CliResult<Vec<FamilyMember>> {
    let name = path.display().to_string();
    let rows = read_table(path, FAMILY_HEADER)?;
    let mut members: Vec<(f64, Vec<u64>, Vec<[f64; 3]>)> = Vec::new();
    for (line, r) in rows {
        match members.last_mut() {
            Some(m) if m.0 == r[0] => {
                m.1.push(line);
                m.2.push([r[1], r[2], r[3]]);
            }
            Some(m) if r[0] < m.0 => {
                return Err(CliError::validation(
                    format!("{name}:{line}"),
                    "ppm_nm blocks must be in increasing order",
                ));
            }
            _ => members.push((r[0], vec![line], vec![[r[1], r[2], r[3]]])),
        }
    }
    members
        .into_iter()
        .map(|(x, lines, pts)| {
            let t: Vec<f64> = pts.iter().map(|p| p[0]).collect();
            check_times(&name, &lines, &t)?;
            let curve = CoherenceCurve::new(t, pts.iter().map(|p| p[1]).collect(), pts.iter().map(|p| p[2]).collect())
                .map_err(|e| CliError::core(name.clone(), e))?;
            Ok(FamilyMember {
                ppm_nm: x,
                areal_density: f64::NAN,
                curve,
            })
        })
        .collect()
}

/// Writes a CSV table to `path`, or to stdout when `path` is `None`.
pub fn write_table(path: Option<&Path>, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::validation("stdout", e))
        }
    }
}

pub fn curve_rows(c: &CoherenceCurve) -> Vec<Vec<String>> {
    (0..c.len())
        .map(|i| vec![fmt_f64(c.times[i]), fmt_f64(c.coherence[i]), fmt_f64(c.stderr[i])])
        .collect()
}

pub fn write_curve(path: Option<&Path>, c: &CoherenceCurve) -> CliResult<()> {
    write_table(path, &CURVE_HEADER, curve_rows(c))
}

pub fn write_family(path: Option<&Path>, family: &[FamilyMember]) -> CliResult<()> {
    let rows = family.iter().flat_map(|m| {
        curve_rows(&m.curve).into_iter().map(move |mut r| {
            r.insert(0, fmt_f64(m.ppm_nm));
            r
        })
    });
    write_table(path, &FAMILY_HEADER, rows)
}

/// SHA-256 of a file's bytes, hex encoded.
pub fn sha256_file(path: &Path) -> CliResult<String> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
