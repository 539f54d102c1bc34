//! Entire functions of `kappa = x^2` built from `sin x`, `cos x`.
//!
//! Every comparison quantity for constant curvature is a ratio of these. They
//! are analytic in `kappa` across zero, so writing them this way makes the
//! trigonometric (`kappa > 0`) and hyperbolic (`kappa < 0`) branches one
//! function. Below `SERIES_THRESHOLD` the Taylor series in `kappa` is used.

/// `|kappa|` below which the Taylor branch is taken.
pub const SERIES_THRESHOLD: f64 = 1.0;

const SERIES_TERMS: usize = 20;

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// Horner evaluation of `sum_j coeff(j) kappa^j`, `j < SERIES_TERMS`.
fn series(kappa: f64, coeff: impl Fn(usize) -> f64) -> f64 {
    (0..SERIES_TERMS).rev().fold(0.0, |acc, j| acc * kappa + coeff(j))
}

fn sign(j: usize) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `sin(x) / x`.
pub fn sinc(kappa: f64) -> f64 {
    if kappa.abs() < SERIES_THRESHOLD {
        series(kappa, |j| sign(j) / factorial(2 * j + 1))
    } else if kappa > 0.0 {
        let x = kappa.sqrt();
        x.sin() / x
    } else {
        let a = (-kappa).sqrt();
        a.sinh() / a
    }
}

/// `cos(x)`.
pub fn cos(kappa: f64) -> f64 {
    if kappa >= 0.0 {
        kappa.sqrt().cos()
    } else {
        (-kappa).sqrt().cosh()
    }
}

/// `(1 - cos x) / x^2`.
pub fn versine(kappa: f64) -> f64 {
    if kappa.abs() < SERIES_THRESHOLD {
        series(kappa, |j| sign(j) / factorial(2 * j + 2))
    } else if kappa > 0.0 {
        (1.0 - kappa.sqrt().cos()) / kappa
    } else {
        ((-kappa).sqrt().cosh() - 1.0) / (-kappa)
    }
}

/// `(x cos x - sin x) / x^3`; equals `-1/3` at zero.
pub fn cos_minus_sinc(kappa: f64) -> f64 {
    if kappa.abs() < SERIES_THRESHOLD {
        // coefficient of kappa^j is (-1)^{j+1} 2(j+1) / (2j+3)!
        series(kappa, |j| -sign(j) * 2.0 * (j as f64 + 1.0) / factorial(2 * j + 3))
    } else if kappa > 0.0 {
        let x = kappa.sqrt();
        (x * x.cos() - x.sin()) / (kappa * x)
    } else {
        let a = (-kappa).sqrt();
        -(a * a.cosh() - a.sinh()) / (-kappa * a)
    }
}

/// `(2 - 2 cos x - x sin x) / x^4`; equals `1/12` at zero and vanishes first
/// at `x = 2 pi`.
pub fn s_factor(kappa: f64) -> f64 {
    if kappa.abs() < SERIES_THRESHOLD {
        // coefficient of kappa^j is (-1)^j (2j+2) / (2j+4)!
        series(kappa, |j| sign(j) * (2.0 * j as f64 + 2.0) / factorial(2 * j + 4))
    } else if kappa > 0.0 {
        let x = kappa.sqrt();
        (2.0 - 2.0 * x.cos() - x * x.sin()) / (kappa * kappa)
    } else {
        let a = (-kappa).sqrt();
        (2.0 - 2.0 * a.cosh() + a * a.sinh()) / (kappa * kappa)
    }
}

/// `(x - sin x) / x^3`; equals `1/6` at zero.
pub fn sinc_defect(kappa: f64) -> f64 {
    if kappa.abs() < SERIES_THRESHOLD {
        series(kappa, |j| sign(j) / factorial(2 * j + 3))
    } else {
        (1.0 - sinc(kappa)) / kappa
    }
}

/// `x cot x = cos / sinc`.
pub fn x_cot_x(kappa: f64) -> f64 {
    cos(kappa) / sinc(kappa)
}
