//! Small statistics helpers.

use crate::math::sqrt;

/// In-order arithmetic mean.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut s = 0.0;
    for &x in xs {
        s += x;
    }
    s / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let mut s = 0.0;
    for &x in xs {
        s += (x - m) * (x - m);
    }
    sqrt(s / (n - 1) as f64)
}

/// Mean and its jackknife standard error from leave-one-out means.
pub fn jackknife_mean(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let m = mean(xs);
    if n < 2 {
        return (m, 0.0);
    }
    let total = m * n as f64;
    let nf = n as f64;
    let mut ss = 0.0;
    for &x in xs {
        let loo = (total - x) / (nf - 1.0);
        ss += (loo - m) * (loo - m);
    }
    (m, sqrt((nf - 1.0) / nf * ss))
}

/// Ordinary least-squares line y = a + b·x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_err: f64,
}

/// Fits a line; `weights` are inverse variances (None for unweighted, in
/// which case the slope error comes from the residual scatter).
pub fn fit_line(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        sw += w(i);
        sx += w(i) * x[i];
        sy += w(i) * y[i];
    }
    let (mx, my) = (sx / sw, sy / sw);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..n {
        sxx += w(i) * (x[i] - mx) * (x[i] - mx);
        sxy += w(i) * (x[i] - mx) * (y[i] - my);
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_err = match weights {
        Some(_) => sqrt(1.0 / sxx),
        None if n > 2 => {
            let mut rss = 0.0;
            for i in 0..n {
                let r = y[i] - intercept - slope * x[i];
                rss += r * r;
            }
            sqrt(rss / (n - 2) as f64 / sxx)
        }
        None => 0.0,
    };
    Some(LineFit { intercept, slope, slope_err })
}
