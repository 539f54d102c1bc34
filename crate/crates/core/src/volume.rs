//! Sub-Riemannian ball volumes on the model spaces and the Bishop comparison.
//!
//! For a unit covector `p = (dir, z)` the exponential map pushes
//! `dt dz dsigma` forward with density `|det B_p(t)| / t`, where `B_p` solves
//! the Jacobi system with the curvature along `p`. The integrand does not
//! depend on `dir`, so
//!
//! `vol(B_R) = |S^{2n-1}| * int_R dz int_0^{min(T(z), R)} |det B_z(t)| / t dt`.
//!
//! The same volume in cylindrical covector coordinates `(r, z)` is
//! `|S^{2n-1}| * int r^{2n-1} k(r, z) dr dz` with `k` from
//! [`comparison::volume_k`], which gives an independent route.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::comparison::{self, FrakPair};
use crate::error::{Error, Result};
use crate::geometry::{assemble_structural, constant_curvature_matrix};
use crate::models::{cut_time_for_z, ModelKind, ModelSpace};
use crate::ode::{self, Control, OdeOptions};
use crate::quadrature::{self, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolumeMethod {
    Quadrature,
    /// Stratified Monte Carlo over `(z, t)` with the closed-form density.
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeOptions {
    pub rel_tol: f64,
    pub ode_tol: f64,
    pub max_panels: usize,
    pub method: VolumeMethod,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-9, ode_tol: 1e-11, max_panels: 4000, method: VolumeMethod::Quadrature }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NodeCounts {
    pub outer_evaluations: usize,
    pub outer_panels: usize,
    pub ode_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeResult {
    pub radius: f64,
    pub value: f64,
    pub abs_error_estimate: f64,
    pub nodes: NodeCounts,
    pub model: ModelSpace,
}

/// Area of the unit sphere `S^{2n-1}`: `2 pi^n / (n-1)!`.
pub fn sphere_area(n: usize) -> f64 {
    let fact: f64 = (1..n).map(|k| k as f64).product();
    2.0 * PI.powi(n as i32) / fact
}

/// Largest `|z|` of a unit covector whose geodesic is still minimizing (or
/// conjugate-free) at time `tau`; `None` when no covector reaches `tau`.
pub fn z_reach(model: &ModelSpace, tau: f64) -> Option<f64> {
    let limit = 4.0 * PI * PI / (tau * tau);
    let mut radicand = limit - model.k1;
    if model.n >= 2 {
        radicand = radicand.min(limit - 4.0 * model.k2);
    }
    if radicand > 0.0 {
        Some(radicand.sqrt())
    } else {
        None
    }
}

fn validate(model: &ModelSpace, radius: f64, opts: &VolumeOptions) -> Result<()> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("radius must be positive and finite, got {radius}")));
    }
    if !(opts.rel_tol > 0.0 && opts.ode_tol > 0.0) {
        return Err(Error::InvalidInput("tolerances must be positive".into()));
    }
    if model.n == 0 {
        return Err(Error::InvalidInput("n must be >= 1".into()));
    }
    Ok(())
}

/// `int_0^tau |det B_z(t)| / t dt` from the Jacobi system augmented with the
/// running integral. Returns the value and the number of accepted steps.
fn radial_integral(model: &ModelSpace, z: f64, tau: f64, tol: f64) -> Result<(f64, usize)> {
    let n = model.n;
    let consts = assemble_structural(n)?;
    let d = consts.dim();
    let frak = comparison::frak(1.0, z, &model.bounds());
    let r = constant_curvature_matrix(n, frak.frak1, frak.frak2).assemble();
    let c1t = consts.c1.transpose();
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let a = DMatrix::from_column_slice(d, d, &y[..d * d]);
        let b = DMatrix::from_column_slice(d, d, &y[d * d..2 * d * d]);
        let da = -&a * &consts.c1 + &b * &r;
        let db = -&a * &consts.c2 + &b * &c1t;
        dy[..d * d].copy_from_slice(da.as_slice());
        dy[d * d..2 * d * d].copy_from_slice(db.as_slice());
        dy[2 * d * d] = if t > 0.0 { b.determinant() / t } else { 0.0 };
    };
    let mut y0 = vec![0.0; 2 * d * d + 1];
    for i in 0..d {
        y0[i + i * d] = 1.0;
    }
    let opts = OdeOptions {
        rtol: tol,
        atol: tol * 1e-8 * tau.powi(2 * n as i32 + 3),
        h_init: Some(tau * 1e-4),
        h_max: tau / 20.0,
        ..OdeOptions::default()
    };
    let out = ode::integrate(rhs, 0.0, &y0, tau, &opts, |_, _| Control::Continue)?;
    Ok((out.y[2 * d * d].abs(), out.accepted))
}

fn horizon(model: &ModelSpace, z: f64, radius: f64) -> f64 {
    cut_time_for_z(model, z).min(radius)
}

/// Ball volume `vol(B_R)` around any point of the model (homogeneous).
pub fn ball_volume(model: &ModelSpace, radius: f64, opts: &VolumeOptions) -> Result<VolumeResult> {
    validate(model, radius, opts)?;
    if let VolumeMethod::MonteCarlo { samples, seed } = opts.method {
        return monte_carlo(model, radius, samples, seed);
    }
    let steps = AtomicUsize::new(0);
    let inner = |z: f64| -> Result<f64> {
        let tau = horizon(model, z, radius);
        if !(tau > 0.0) {
            return Ok(0.0);
        }
        let (v, s) = radial_integral(model, z, tau, opts.ode_tol)?;
        steps.fetch_add(s, Ordering::Relaxed);
        Ok(v)
    };
    let z_star = z_reach(model, radius);
    let z0 = (4.0 * PI / radius).max(2.0 * z_star.unwrap_or(0.0)).max(1.0);
    let breaks: Vec<f64> = z_star.into_iter().collect();
    let q = QuadOptions { abs_tol: 0.0, rel_tol: opts.rel_tol, max_panels: opts.max_panels };

    let body = quadrature::integrate(&inner, 0.0, z0, &breaks, &q)?;
    // tail z in [z0, inf) mapped by z = z0 / u
    let tail = quadrature::integrate(
        |u: f64| Ok(inner(z0 / u)? * z0 / (u * u)),
        0.0,
        1.0,
        &[],
        &QuadOptions { abs_tol: opts.rel_tol * body.value.abs(), ..q },
    )?;
    let factor = 2.0 * sphere_area(model.n);
    Ok(VolumeResult {
        radius,
        value: factor * (body.value + tail.value),
        abs_error_estimate: factor * (body.abs_error + tail.abs_error),
        nodes: NodeCounts {
            outer_evaluations: body.evaluations + tail.evaluations,
            outer_panels: body.panels + tail.panels,
            ode_steps: steps.into_inner(),
        },
        model: *model,
    })
}

/// Ball volume by quadrature of `r^{2n-1} k(r, z)` over the covector region
/// `{(r, z) : r <= R, geodesic of (r, z) minimizing up to time 1}`.
pub fn ball_volume_from_k(model: &ModelSpace, radius: f64, opts: &VolumeOptions) -> Result<VolumeResult> {
    validate(model, radius, opts)?;
    let bounds = model.bounds();
    let n = model.n;
    let q = QuadOptions { abs_tol: 0.0, rel_tol: opts.rel_tol, max_panels: opts.max_panels };
    let inner_evals = AtomicUsize::new(0);
    let column = |r: f64| -> Result<f64> {
        let Some(zr) = z_reach(model, r) else { return Ok(0.0) };
        let zmax = r * zr;
        let res = quadrature::integrate(|z: f64| Ok(comparison::volume_k(r, z, &bounds)), 0.0, zmax, &[], &q)?;
        inner_evals.fetch_add(res.evaluations, Ordering::Relaxed);
        Ok(r.powi(2 * n as i32 - 1) * res.value)
    };
    // the reachable r range ends where z_reach vanishes
    let edge = match model.kind {
        ModelKind::Heisenberg => None,
        _ => {
            let mut radicand = 4.0 * PI * PI / model.k1.max(0.0);
            if n >= 2 && model.k2 > 0.0 {
                radicand = radicand.min(PI * PI / model.k2);
            }
            Some(radicand.sqrt())
        }
    };
    let breaks: Vec<f64> = edge.into_iter().filter(|&e| e.is_finite()).collect();
    let outer = quadrature::integrate(&column, 0.0, radius, &breaks, &q)?;
    let factor = 2.0 * sphere_area(n);
    Ok(VolumeResult {
        radius,
        value: factor * outer.value,
        abs_error_estimate: factor * outer.abs_error,
        nodes: NodeCounts {
            outer_evaluations: outer.evaluations + inner_evals.into_inner(),
            outer_panels: outer.panels,
            ode_steps: 0,
        },
        model: *model,
    })
}

fn monte_carlo(model: &ModelSpace, radius: f64, samples: usize, seed: u64) -> Result<VolumeResult> {
    if samples < 2 {
        return Err(Error::InvalidInput("Monte Carlo needs at least 2 samples".into()));
    }
    let z_star = z_reach(model, radius);
    let z0 = (4.0 * PI / radius).max(2.0 * z_star.unwrap_or(0.0)).max(1.0);
    let bounds = model.bounds();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let s = (i as f64 + rng.gen::<f64>()) / samples as f64;
            let (z, wz) = if s < 0.5 {
                (2.0 * s * z0, 2.0 * z0)
            } else {
                let u = 2.0 * (1.0 - s);
                (z0 / u, 2.0 * z0 / (u * u))
            };
            let tau = horizon(model, z, radius);
            if !(tau > 0.0 && tau.is_finite()) {
                return 0.0;
            }
            let t = tau * rng.gen::<f64>();
            if t == 0.0 {
                return 0.0;
            }
            let frak: FrakPair = comparison::frak(1.0, z, &bounds);
            wz * tau * comparison::det_b_model(t, frak, model.n) / t
        })
        .collect();
    let mean = values.iter().sum::<f64>() / samples as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    let factor = 2.0 * sphere_area(model.n);
    Ok(VolumeResult {
        radius,
        value: factor * mean,
        abs_error_estimate: factor * (var / samples as f64).sqrt(),
        nodes: NodeCounts { outer_evaluations: samples, outer_panels: 0, ode_steps: 0 },
        model: *model,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BishopRow {
    pub radius: f64,
    pub vol_model: f64,
    pub vol_reference: f64,
    pub ratio: f64,
    pub abs_error: f64,
}

/// Bishop comparison: `vol_model(B_R) <= vol_reference(B_R)` whenever the
/// model's curvature constants dominate the reference's. The model volume
/// comes from the Jacobi quadrature, the reference from `k(r, z)`.
pub fn bishop_check(
    model: &ModelSpace,
    reference: &ModelSpace,
    radii: &[f64],
    opts: &VolumeOptions,
) -> Result<Vec<BishopRow>> {
    if !matches!(reference.kind, ModelKind::Heisenberg | ModelKind::Hopf) {
        return Err(Error::InvalidInput("reference must be heisenberg or hopf".into()));
    }
    if model.n != reference.n {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: model n = {}, reference n = {}",
            model.n, reference.n
        )));
    }
    if model.k1 < reference.k1 || model.k2 < reference.k2 {
        return Err(Error::Hypothesis(format!(
            "curvature ({}, {}) does not dominate reference ({}, {})",
            model.k1, model.k2, reference.k1, reference.k2
        )));
    }
    radii
        .iter()
        .map(|&radius| {
            let m = ball_volume(model, radius, opts)?;
            let r = ball_volume_from_k(reference, radius, opts)?;
            Ok(BishopRow {
                radius,
                vol_model: m.value,
                vol_reference: r.value,
                ratio: m.value / r.value,
                abs_error: m.abs_error_estimate + r.abs_error_estimate,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::sinc;

    /// Exact Heisenberg ball volume from the boundary of the ball: points at
    /// distance `R` satisfy `rho = R sin(th)/th`, `zeta = R^2 (2 th - sin 2th) / (8 th^2)`.
    fn heisenberg_exact(n: usize, radius: f64) -> f64 {
        let rho = |th: f64| radius * sinc(th * th);
        let zeta = |th: f64| radius * radius * (2.0 * th - (2.0 * th).sin()) / (8.0 * th * th);
        let drho = |th: f64| {
            if th < 1e-4 {
                -radius * th / 3.0
            } else {
                radius * (th * th.cos() - th.sin()) / (th * th)
            }
        };
        let f = |th: f64| Ok(sphere_area(n) * rho(th).powi(2 * n as i32 - 1) * 2.0 * zeta(th) * (-drho(th)));
        quadrature::integrate(f, 0.0, PI, &[], &QuadOptions { abs_tol: 0.0, rel_tol: 1e-13, max_panels: 1000 })
            .unwrap()
            .value
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_area(2) - 2.0 * PI * PI).abs() < 1e-14);
        assert!((sphere_area(3) - PI.powi(3)).abs() < 1e-13);
    }

    #[test]
    fn heisenberg_matches_exact_ball() {
        for n in 1..=2 {
            let m = ModelSpace::heisenberg(n).unwrap();
            let v = ball_volume(&m, 1.0, &VolumeOptions::default()).unwrap();
            let exact = heisenberg_exact(n, 1.0);
            assert!((v.value / exact - 1.0).abs() < 1e-7, "n={n}: {} vs {exact}", v.value);
        }
    }

    #[test]
    fn heisenberg_dilation() {
        let m = ModelSpace::heisenberg(1).unwrap();
        let a = ball_volume(&m, 1.0, &VolumeOptions::default()).unwrap();
        let b = ball_volume(&m, 2.0, &VolumeOptions::default()).unwrap();
        assert!((b.value / a.value / 16.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn two_routes_agree() {
        for m in [ModelSpace::heisenberg(1).unwrap(), ModelSpace::hopf(1).unwrap(), ModelSpace::hopf(2).unwrap()] {
            for radius in [0.5, 2.0] {
                let a = ball_volume(&m, radius, &VolumeOptions::default()).unwrap();
                let b = ball_volume_from_k(&m, radius, &VolumeOptions::default()).unwrap();
                assert!((a.value / b.value - 1.0).abs() < 1e-6, "{m:?} R={radius}: {} vs {}", a.value, b.value);
            }
        }
    }

    #[test]
    fn hopf_total_volume() {
        // |v0| = 1 halves the round fibre: vol = pi^{n+1} / n!
        for (n, total) in [(1, PI * PI), (2, PI.powi(3) / 2.0)] {
            let m = ModelSpace::hopf(n).unwrap();
            let v = ball_volume(&m, 1.1 * PI, &VolumeOptions::default()).unwrap();
            assert!((v.value / total - 1.0).abs() < 1e-6, "n={n}: {}", v.value);
            assert!(v.value <= 2.0 * PI * PI);
        }
    }

    #[test]
    fn small_radius_universality() {
        let radius = 0.05;
        for n in 1..=2 {
            let h = ball_volume(&ModelSpace::heisenberg(n).unwrap(), radius, &VolumeOptions::default()).unwrap();
            let s = ball_volume(&ModelSpace::hopf(n).unwrap(), radius, &VolumeOptions::default()).unwrap();
            assert!(h.value > 0.0);
            assert!((s.value / h.value - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn tighter_tolerance_is_consistent() {
        let m = ModelSpace::hopf(1).unwrap();
        let coarse = ball_volume(&m, 1.0, &VolumeOptions { rel_tol: 1e-6, ode_tol: 1e-9, ..Default::default() }).unwrap();
        let fine = ball_volume(&m, 1.0, &VolumeOptions { rel_tol: 1e-10, ode_tol: 1e-12, ..Default::default() }).unwrap();
        assert!((coarse.value / fine.value - 1.0).abs() < 1e-3);
        assert!((coarse.value - fine.value).abs() <= 3.0 * coarse.abs_error_estimate + 1e-8 * fine.value);
    }

    #[test]
    fn monte_carlo_agrees_within_error() {
        let m = ModelSpace::hopf(1).unwrap();
        let q = ball_volume(&m, 1.5, &VolumeOptions::default()).unwrap();
        let mc = ball_volume(
            &m,
            1.5,
            &VolumeOptions { method: VolumeMethod::MonteCarlo { samples: 20_000, seed: 7 }, ..Default::default() },
        )
        .unwrap();
        assert!((mc.value - q.value).abs() < 5.0 * mc.abs_error_estimate, "{} vs {}", mc.value, q.value);
        let again = ball_volume(
            &m,
            1.5,
            &VolumeOptions { method: VolumeMethod::MonteCarlo { samples: 20_000, seed: 7 }, ..Default::default() },
        )
        .unwrap();
        assert_eq!(mc.value, again.value);
    }

    #[test]
    fn bishop_hopf_below_heisenberg() {
        let rows = bishop_check(
            &ModelSpace::hopf(1).unwrap(),
            &ModelSpace::heisenberg(1).unwrap(),
            &[0.5, 1.0, 2.0],
            &VolumeOptions::default(),
        )
        .unwrap();
        for row in rows {
            assert!(row.ratio <= 1.0, "{row:?}");
        }
    }

    #[test]
    fn bishop_rejects_weaker_curvature() {
        let r = bishop_check(
            &ModelSpace::heisenberg(1).unwrap(),
            &ModelSpace::hopf(1).unwrap(),
            &[1.0],
            &VolumeOptions::default(),
        );
        assert!(matches!(r, Err(Error::Hypothesis(_))));
        assert!(ball_volume(&ModelSpace::hopf(1).unwrap(), -1.0, &VolumeOptions::default()).is_err());
    }

    #[test]
    fn z_reach_examples() {
        let h = ModelSpace::heisenberg(1).unwrap();
        assert!((z_reach(&h, 1.0).unwrap() - 2.0 * PI).abs() < 1e-14);
        let s = ModelSpace::hopf(1).unwrap();
        assert!(z_reach(&s, PI).is_none());
        assert!((z_reach(&s, 1.0).unwrap() - (4.0 * PI * PI - 4.0).sqrt()).abs() < 1e-14);
    }
}
