//! Closed-form comparison functions for constant canonical curvature.
//!
//! All quantities are written through the entire functions of
//! [`crate::special`], so a single expression covers the trigonometric,
//! hyperbolic and flat cases.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special::{cos_minus_sinc, s_factor, sinc, x_cot_x};

/// Lower bounds `k1`, `k2` on the Tanaka-Webster curvature terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureBounds {
    pub k1: f64,
    pub k2: f64,
    pub n: usize,
}

impl CurvatureBounds {
    pub fn new(k1: f64, k2: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("n must be >= 1".into()));
        }
        if !k1.is_finite() || !k2.is_finite() {
            return Err(Error::InvalidInput("curvature bounds must be finite".into()));
        }
        Ok(Self { k1, k2, n })
    }
}

/// Effective curvatures of the two Riccati blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrakPair {
    pub frak1: f64,
    pub frak2: f64,
}

pub fn frak(r: f64, z: f64, bounds: &CurvatureBounds) -> FrakPair {
    FrakPair {
        frak1: z * z + bounds.k1 * r * r,
        frak2: 0.25 * z * z + bounds.k2 * r * r,
    }
}

/// The two conjugate-time bounds `2 pi / sqrt(z^2 + k1 r^2)` and
/// `2 pi / sqrt(z^2 + 4 k2 r^2)`; `+inf` where the radicand is not positive.
pub fn conjugate_bounds(r: f64, z: f64, bounds: &CurvatureBounds) -> (f64, f64) {
    let bound = |radicand: f64| {
        if radicand > 0.0 {
            2.0 * PI / radicand.sqrt()
        } else {
            f64::INFINITY
        }
    };
    (
        bound(z * z + bounds.k1 * r * r),
        bound(z * z + 4.0 * bounds.k2 * r * r),
    )
}

/// First conjugate time of the constant-curvature system with effective
/// curvatures `frak`. The `frak2` block only exists for `n >= 2`.
pub fn model_conjugate_time(frak: FrakPair, n: usize) -> f64 {
    let first = if frak.frak1 > 0.0 { 2.0 * PI / frak.frak1.sqrt() } else { f64::INFINITY };
    let second = if n >= 2 && frak.frak2 > 0.0 {
        PI / frak.frak2.sqrt()
    } else {
        f64::INFINITY
    };
    first.min(second)
}

/// `|det B(t)|` for constant curvature:
/// `t^{2n+3} sinc(frak2 t^2)^{2n-2} s_factor(frak1 t^2)`.
pub fn det_b_model(t: f64, frak: FrakPair, n: usize) -> f64 {
    let k1 = frak.frak1 * t * t;
    let k2 = frak.frak2 * t * t;
    (t.powi(2 * n as i32 + 3) * sinc(k2).powi(2 * n as i32 - 2) * s_factor(k1)).abs()
}

const POLE_EPS: f64 = 1e-12;

/// Lower bound on `tr(C2 S(t))`; attained by the constant-curvature model.
pub fn trace_bound(t: f64, frak: FrakPair, n: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("trace bound needs t > 0, got {t}")));
    }
    let k1 = frak.frak1 * t * t;
    let k2 = frak.frak2 * t * t;
    let s = s_factor(k1);
    if s.abs() < POLE_EPS {
        return Err(Error::Pole(format!("s(sqrt(frak1) t) = 0 at t = {t}")));
    }
    let mut total = cos_minus_sinc(k1) / (t * s) - 1.0 / t;
    if n >= 2 {
        let sn = sinc(k2);
        if sn.abs() < POLE_EPS {
            return Err(Error::Pole(format!("sin(sqrt(frak2) t) = 0 at t = {t}")));
        }
        total -= (2 * n - 2) as f64 * x_cot_x(k2) / t;
    }
    Ok(total)
}

/// Which closed form of the Laplacian comparison function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HForm {
    /// `h(r, z) = [-(x cos x - sin x) x / s(x) + (2n-2) y cot y] / r` with
    /// `x^2 = frak1(r, r z)`, `y^2 = frak2(r, r z)`; exact on the Heisenberg
    /// group.
    #[default]
    Sharp,
    /// `-trace_bound(1, frak(r, r z)) / r`: keeps the `1/t` contribution of the
    /// trailing slot, i.e. `Sharp + 1/r`.
    TraceBound,
    /// Coefficient `2n - 1` on the cotangent term and curvatures evaluated at
    /// `frak(r, z)` without the `r` factor on `z`.
    Displayed,
}

impl std::str::FromStr for HForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sharp" => Ok(Self::Sharp),
            "trace" | "trace-bound" => Ok(Self::TraceBound),
            "displayed" => Ok(Self::Displayed),
            other => Err(Error::InvalidInput(format!("unknown h form '{other}'"))),
        }
    }
}

/// Laplacian comparison function `h(r, z)` where `r = d` and `z = v0(d)`.
pub fn laplace_h(r: f64, z: f64, bounds: &CurvatureBounds, form: HForm) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("h needs r > 0, got {r}")));
    }
    let n = bounds.n;
    let (fp, cot_coeff) = match form {
        HForm::Sharp | HForm::TraceBound => (frak(r, r * z, bounds), (2 * n - 2) as f64),
        HForm::Displayed => (frak(r, z, bounds), (2 * n - 1) as f64),
    };
    let s = s_factor(fp.frak1);
    if s.abs() < POLE_EPS {
        return Err(Error::Pole(format!("h: s(sqrt(frak1)) = 0 at r = {r}, z = {z}")));
    }
    let mut total = -cos_minus_sinc(fp.frak1) / s;
    if cot_coeff > 0.0 {
        let sn = sinc(fp.frak2);
        if sn.abs() < POLE_EPS {
            return Err(Error::Pole(format!("h: sin(sqrt(frak2)) = 0 at r = {r}, z = {z}")));
        }
        total += cot_coeff * x_cot_x(fp.frak2);
    }
    if form == HForm::TraceBound {
        total += 1.0;
    }
    Ok(total / r)
}

/// Volume density `k(r, z) = r^2 |det B(1)|` for the constant-curvature system
/// with curvatures `frak(r, z)`.
pub fn volume_k(r: f64, z: f64, bounds: &CurvatureBounds) -> f64 {
    r * r * det_b_model(1.0, frak(r, z, bounds), bounds.n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(k1: f64, k2: f64, n: usize) -> CurvatureBounds {
        CurvatureBounds::new(k1, k2, n).unwrap()
    }

    #[test]
    fn frak_examples() {
        assert_eq!(frak(1.0, 0.0, &b(4.0, 1.0, 1)), FrakPair { frak1: 4.0, frak2: 1.0 });
        assert_eq!(frak(1.0, 2.0, &b(0.0, 0.0, 1)), FrakPair { frak1: 4.0, frak2: 1.0 });
        assert_eq!(frak(0.0, 2.0, &b(3.0, 7.0, 1)), FrakPair { frak1: 4.0, frak2: 1.0 });
    }

    #[test]
    fn conjugate_bound_examples() {
        let (a, c) = conjugate_bounds(1.0, 2.0, &b(0.0, 0.0, 1));
        assert!((a - PI).abs() < 1e-15 && (c - PI).abs() < 1e-15);
        let (a, c) = conjugate_bounds(1.0, 0.0, &b(4.0, 1.0, 1));
        assert!((a - PI).abs() < 1e-15 && (c - PI).abs() < 1e-15);
        assert_eq!(conjugate_bounds(1.0, 0.0, &b(-1.0, -1.0, 1)), (f64::INFINITY, f64::INFINITY));
    }

    #[test]
    fn trace_bound_flat_limit() {
        let v = trace_bound(1.0, FrakPair { frak1: 0.0, frak2: 0.0 }, 1).unwrap();
        assert!((v + 5.0).abs() < 1e-14);
        // n = 2 adds -(2n-2)/t
        let v = trace_bound(2.0, FrakPair { frak1: 0.0, frak2: 0.0 }, 2).unwrap();
        assert!((v + 3.5).abs() < 1e-14);
    }

    #[test]
    fn trace_bound_dominated_by_cot_branch_for_large_frak2() {
        let t = 0.3;
        let frak2: f64 = 100.0;
        let v = trace_bound(t, FrakPair { frak1: 1.0, frak2 }, 3).unwrap();
        let cot_part = -4.0 * frak2.sqrt() / (frak2.sqrt() * t).tan();
        // sqrt(frak2) t = 3 is just below pi, so cot is large and negative
        assert!(cot_part > 0.0 && v > 0.0);
        assert!((v - cot_part).abs() < 0.5 * cot_part);
    }

    #[test]
    fn trace_bound_reports_poles() {
        let t = 2.0 * PI;
        assert!(matches!(
            trace_bound(t, FrakPair { frak1: 1.0, frak2: 0.0 }, 1),
            Err(Error::Pole(_))
        ));
        assert!(trace_bound(0.0, FrakPair { frak1: 1.0, frak2: 0.0 }, 1).is_err());
    }

    #[test]
    fn h_limits_at_zero_z() {
        for r in [0.5, 1.0, 3.0] {
            for n in 1..=3 {
                let bb = b(0.0, 0.0, n);
                let sharp = laplace_h(r, 0.0, &bb, HForm::Sharp).unwrap();
                let trace = laplace_h(r, 0.0, &bb, HForm::TraceBound).unwrap();
                let displayed = laplace_h(r, 0.0, &bb, HForm::Displayed).unwrap();
                let nn = n as f64;
                assert!((sharp - (2.0 * nn + 2.0) / r).abs() < 1e-12);
                assert!((trace - (2.0 * nn + 3.0) / r).abs() < 1e-12);
                assert!((displayed - (2.0 * nn + 3.0) / r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn volume_k_examples() {
        let flat = volume_k(2.0, 0.0, &b(0.0, 0.0, 2));
        assert!((flat - 4.0 / 12.0).abs() < 1e-15);
        let x: f64 = 2.0;
        let hopf = volume_k(1.0, 0.0, &b(4.0, 1.0, 1));
        assert!((hopf - (2.0 - 2.0 * x.cos() - 2.0 * x.sin()) / 16.0).abs() < 1e-15);
    }

    #[test]
    fn volume_k_nonnegative_inside_conjugate_radius() {
        for n in 1..=3 {
            for (k1, k2) in [(0.0, 0.0), (4.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
                let bb = b(k1, k2, n);
                for i in 0..40 {
                    for j in 0..40 {
                        let r = 0.05 + 0.1 * i as f64;
                        let z = -8.0 + 0.4 * j as f64;
                        if model_conjugate_time(frak(r, z, &bb), n) > 1.0 {
                            assert!(volume_k(r, z, &bb) > 0.0);
                        }
                    }
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn volume_k_nonincreasing_in_curvature(
            n in 1usize..4,
            r in 0.05f64..2.0,
            z in -4.0f64..4.0,
            k1 in -2.0f64..4.0,
            k2 in -2.0f64..1.0,
            dk in 0.0f64..1.0,
        ) {
            let base = b(k1, k2, n);
            for more in [b(k1 + dk, k2, n), b(k1, k2 + dk, n)] {
                proptest::prop_assume!(model_conjugate_time(frak(r, z, &more), n) > 1.0);
                let (lo, hi) = (volume_k(r, z, &more), volume_k(r, z, &base));
                proptest::prop_assert!(lo <= hi * (1.0 + 1e-12), "{lo} > {hi}");
            }
        }

        #[test]
        fn continuous_where_frak_changes_sign(n in 1usize..4, k in 0.1f64..4.0, r in 0.2f64..2.0) {
            // frak1 = 0 at z = sqrt(k) r for volume_k and at z = sqrt(k) for h
            let bb = b(-k, 0.5, n);
            let rel = |a: f64, c: f64| (a - c).abs() / (1.0 + c.abs());
            let zv = k.sqrt() * r;
            let (vl, vr) = (volume_k(r, zv * (1.0 - 1e-12), &bb), volume_k(r, zv * (1.0 + 1e-12), &bb));
            proptest::prop_assert!((vl - vr).abs() <= 1e-9 * vr.abs(), "{vl} vs {vr}");
            let zh = k.sqrt();
            let hl = laplace_h(r, zh * (1.0 - 1e-12), &bb, HForm::Sharp).unwrap();
            let hr = laplace_h(r, zh * (1.0 + 1e-12), &bb, HForm::Sharp).unwrap();
            proptest::prop_assert!(rel(hl, hr) <= 1e-9, "{hl} vs {hr}");
        }
    }
}
