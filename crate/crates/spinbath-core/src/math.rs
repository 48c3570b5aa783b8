//! Scalar helpers on top of `libm`, so results do not depend on the
//! platform math library.

use core::f64::consts::PI;

pub use libm::{atan, cos, exp, expm1, fabs, floor, log, log10, log1p, pow, round, sin, sincos, sqrt, tan};

/// Euler gamma for any real argument that is not a non-positive integer.
///
/// Negative arguments go through the reflection formula
/// Γ(x) = π / (sin(πx) Γ(1−x)).
pub fn gamma(x: f64) -> f64 {
    if x > 0.0 {
        return libm::tgamma(x);
    }
    if x == floor(x) {
        return f64::NAN;
    }
    PI / (sin(PI * x) * libm::tgamma(1.0 - x))
}

/// Volume of the unit ball in `d` dimensions, π^{d/2}/Γ(d/2+1).
pub fn unit_ball_volume(d: u8) -> f64 {
    let h = d as f64 / 2.0;
    pow(PI, h) / libm::tgamma(h + 1.0)
}

/// Number of steps of size `dt` needed to reach `duration` (tolerating
/// rounding in `duration/dt`).
pub fn ceil_steps(duration: f64, dt: f64) -> usize {
    let r = duration / dt;
    let n = round(r);
    if fabs(r - n) <= 1e-9 * n.max(1.0) {
        n as usize
    } else {
        libm::ceil(r) as usize
    }
}

/// Integer power by repeated squaring.
pub fn powi(mut base: f64, mut n: i32) -> f64 {
    let invert = n < 0;
    if invert {
        n = -n;
    }
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    if invert {
        1.0 / acc
    } else {
        acc
    }
}

/// `n` log-spaced points from `a` to `b` inclusive.
pub fn logspace(a: f64, b: f64, n: usize) -> alloc::vec::Vec<f64> {
    match n {
        0 => alloc::vec::Vec::new(),
        1 => alloc::vec![a],
        _ => {
            let (la, lb) = (log(a), log(b));
            (0..n)
                .map(|i| {
                    if i == 0 {
                        a
                    } else if i == n - 1 {
                        b
                    } else {
                        exp(la + (lb - la) * i as f64 / (n - 1) as f64)
                    }
                })
                .collect()
        }
    }
}

/// Linear interpolation of `ys(xs)` at `x`; `xs` must be increasing and
/// `x` inside its range.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let n = xs.len();
    if n == 0 || x < xs[0] || x > xs[n - 1] {
        return None;
    }
    if n == 1 {
        return Some(ys[0]);
    }
    let j = match xs.iter().position(|&v| v >= x) {
        Some(0) => return Some(ys[0]),
        Some(j) => j,
        None => return Some(ys[n - 1]),
    };
    let w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    Some(ys[j - 1] + w * (ys[j] - ys[j - 1]))
}
