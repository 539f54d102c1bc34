//! Closed-form geometry of the model spaces: the Heisenberg group, the
//! complex Hopf fibration `S^{2n+1} -> CP^n`, and synthetic constant
//! canonical curvature.
//!
//! Heisenberg points are stored as `(x_1, y_1, ..., x_n, y_n, z)`. Hopf points
//! are stored as the real and imaginary parts of the ambient `C^{n+1}` point,
//! interleaved: `(Re w_0, Im w_0, Re w_1, Im w_1, ...)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::comparison::{self, CurvatureBounds};
use crate::error::{Error, Result};
use crate::geometry::{constant_curvature_matrix, CanonicalCurvature, Covector};
use crate::ode::{self, Control, OdeOptions};
use crate::special::{sinc, sinc_defect, versine};

/// Tolerance on `|p^h| = 1` for unit covectors.
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Heisenberg,
    Hopf,
    ConstantCurvature,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Heisenberg => "heisenberg",
            ModelKind::Hopf => "hopf",
            ModelKind::ConstantCurvature => "constant",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpace {
    pub kind: ModelKind,
    pub n: usize,
    pub k1: f64,
    pub k2: f64,
}

impl ModelSpace {
    pub fn heisenberg(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Self { kind: ModelKind::Heisenberg, n, k1: 0.0, k2: 0.0 })
    }

    pub fn hopf(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Self { kind: ModelKind::Hopf, n, k1: 4.0, k2: 1.0 })
    }

    pub fn constant(n: usize, k1: f64, k2: f64) -> Result<Self> {
        check_n(n)?;
        if !k1.is_finite() || !k2.is_finite() {
            return Err(Error::InvalidInput("curvature constants must be finite".into()));
        }
        Ok(Self { kind: ModelKind::ConstantCurvature, n, k1, k2 })
    }

    pub fn bounds(&self) -> CurvatureBounds {
        CurvatureBounds { k1: self.k1, k2: self.k2, n: self.n }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidInput("complex dimension n must be >= 1".into()))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub p: Option<Covector>,
}

fn sample_times(duration: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::InvalidInput(format!("steps must be >= 2, got {steps}")));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::InvalidInput(format!("duration must be positive, got {duration}")));
    }
    Ok((0..steps)
        .map(|i| duration * i as f64 / (steps - 1) as f64)
        .collect())
}

/// Point at time `t` on the unit-speed Heisenberg geodesic from the origin.
pub fn heisenberg_point(p: &Covector, t: f64) -> Vec<f64> {
    let pz = p.z();
    let u = pz * t;
    let kappa = u * u;
    // (e^{iu} - 1) / (iu) = sin u / u + i (1 - cos u) / u
    let phase = Complex64::new(sinc(kappa), u * versine(kappa));
    let mut x = Vec::with_capacity(2 * p.n() + 1);
    let mut p2 = 0.0;
    for pj in p.complex_pairs() {
        let w = pj * phase * t;
        x.push(w.re);
        x.push(w.im);
        p2 += pj.norm_sqr();
    }
    // z(t) = |P|^2 (u - sin u) / (2 pz^2)
    x.push(0.5 * p2 * t * t * u * sinc_defect(kappa));
    x
}

pub fn heisenberg_geodesic(p: &Covector, duration: f64, steps: usize) -> Result<Vec<GeodesicSample>> {
    p.require_unit(UNIT_TOL)?;
    let times = sample_times(duration, steps)?;
    Ok(times
        .into_iter()
        .map(|t| {
            let rot = Complex64::from_polar(1.0, p.z() * t);
            let h = p
                .complex_pairs()
                .into_iter()
                .flat_map(|pj| {
                    let q = pj * rot;
                    [q.re, q.im]
                })
                .collect();
            GeodesicSample {
                t,
                x: heisenberg_point(p, t),
                p: Covector::new(h, p.z()).ok(),
            }
        })
        .collect())
}

/// Covector on the Hopf fibration in the ambient `C^{n+1}` encoding at the
/// base point `a = (1, 0, ..., 0)`: `v_0 = i z` carries the Reeb component and
/// `v_1..v_n` the horizontal part.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfCovector {
    v: Vec<Complex64>,
}

impl HopfCovector {
    pub fn new(v: Vec<Complex64>) -> Result<Self> {
        if v.len() < 2 {
            return Err(Error::InvalidInput("Hopf covector needs n + 1 >= 2 entries".into()));
        }
        if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("Hopf covector has non-finite entries".into()));
        }
        if v[0].re.abs() > UNIT_TOL {
            return Err(Error::Normalization {
                constraint: format!("Re(v_1) = 0 (got {})", v[0].re),
            });
        }
        let vh = v[1..].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if (vh - 1.0).abs() > UNIT_TOL {
            return Err(Error::Normalization {
                constraint: format!("|v^h| = 1 (got {vh:.17})"),
            });
        }
        Ok(Self { v })
    }

    pub fn from_covector(p: &Covector) -> Result<Self> {
        let mut v = vec![Complex64::new(0.0, p.z())];
        v.extend(p.complex_pairs());
        Self::new(v)
    }

    pub fn n(&self) -> usize {
        self.v.len() - 1
    }

    /// Reeb component `p(v0) = Im(v_1)`.
    pub fn z(&self) -> f64 {
        self.v[0].im
    }

    /// Angular frequency of the underlying great circle,
    /// `sqrt(|v^h|^2 + z^2 / 4)`.
    pub fn frequency(&self) -> f64 {
        (1.0 + 0.25 * self.z() * self.z()).sqrt()
    }

    pub fn horizontal(&self) -> &[Complex64] {
        &self.v[1..]
    }
}

/// Point at time `t` on the Hopf geodesic from `a = (1, 0, ..., 0)`:
/// `(a cos(lt) + u sin(lt) / l) e^{-i z t / 2}` with `u = v^h + i (z/2) a`.
pub fn hopf_point(v: &HopfCovector, t: f64) -> Vec<Complex64> {
    let l = v.frequency();
    let half_z = 0.5 * v.z();
    let c = (l * t).cos();
    let s_over_l = t * sinc(l * l * t * t);
    let phase = Complex64::from_polar(1.0, -half_z * t);
    let mut out = Vec::with_capacity(v.n() + 1);
    out.push((Complex64::new(c, 0.0) + Complex64::new(0.0, half_z) * s_over_l) * phase);
    for vh in v.horizontal() {
        out.push(vh * s_over_l * phase);
    }
    out
}

fn flatten(points: &[Complex64]) -> Vec<f64> {
    points.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn hopf_geodesic(p: &Covector, duration: f64, steps: usize) -> Result<Vec<GeodesicSample>> {
    p.require_unit(UNIT_TOL)?;
    let v = HopfCovector::from_covector(p)?;
    let times = sample_times(duration, steps)?;
    Ok(times
        .into_iter()
        .map(|t| GeodesicSample { t, x: flatten(&hopf_point(&v, t)), p: None })
        .collect())
}

/// Cut time of the unit covector `p` (`+inf` when the geodesic minimizes
/// forever). For constant curvature there is no cut locus; the first
/// conjugate time is returned instead.
pub fn cut_time(model: &ModelSpace, p: &Covector) -> Result<f64> {
    p.require_unit(UNIT_TOL)?;
    Ok(cut_time_for_z(model, p.z()))
}

/// [`cut_time`] as a function of the Reeb component of a unit covector.
pub fn cut_time_for_z(model: &ModelSpace, z: f64) -> f64 {
    match model.kind {
        ModelKind::Heisenberg => {
            if z == 0.0 {
                f64::INFINITY
            } else {
                2.0 * PI / z.abs()
            }
        }
        ModelKind::Hopf => 2.0 * PI / (z * z + 4.0).sqrt(),
        ModelKind::ConstantCurvature => {
            comparison::model_conjugate_time(comparison::frak(1.0, z, &model.bounds()), model.n)
        }
    }
}

/// Canonical curvature along the geodesic of `p`; constant in time for the
/// models.
pub fn curvature_along(model: &ModelSpace, p: &Covector) -> Result<CanonicalCurvature> {
    if p.n() != model.n {
        return Err(Error::InvalidInput(format!(
            "covector has n = {}, model has n = {}",
            p.n(),
            model.n
        )));
    }
    let r = p.r();
    if !(r > 0.0) {
        return Err(Error::InvalidInput("curvature needs |p^h| > 0".into()));
    }
    let f = comparison::frak(r, p.z(), &model.bounds());
    Ok(constant_curvature_matrix(model.n, f.frak1, f.frak2))
}

/// `(theta - sin theta cos theta) / (4 sin^2 theta)`: the ratio
/// `zeta / rho^2` reached by the Heisenberg geodesic with `theta = L p_z / 2`.
fn height_ratio(theta: f64) -> f64 {
    let s = theta.sin();
    // theta - sin(theta)cos(theta) = (x - sin x) / 2 with x = 2 theta
    let x = 2.0 * theta;
    let numer = 0.5 * x * x * x * sinc_defect(x * x);
    numer / (4.0 * s * s)
}

/// Sub-Riemannian distance from the origin of the Heisenberg group.
///
/// Inverts the closed-form geodesics: a point with `rho = |w|`,
/// `zeta = |z|` is reached at length `L = rho theta / sin theta`, where
/// `theta` in `[0, pi)` solves `zeta / rho^2 = height_ratio(theta)`.
pub fn heisenberg_distance(q: &[f64]) -> Result<f64> {
    if q.len() < 3 || q.len() % 2 == 0 {
        return Err(Error::InvalidInput(format!(
            "Heisenberg point must have length 2n + 1, got {}",
            q.len()
        )));
    }
    if q.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite point".into()));
    }
    let (w, z) = q.split_at(q.len() - 1);
    let rho = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let zeta = z[0].abs();
    if rho == 0.0 && zeta == 0.0 {
        return Err(Error::InvalidInput("distance to the origin itself requested".into()));
    }
    if zeta == 0.0 {
        return Ok(rho);
    }
    if rho == 0.0 {
        return Ok(2.0 * (PI * zeta).sqrt());
    }
    let target = zeta / (rho * rho);
    if !target.is_finite() {
        return Ok(2.0 * (PI * zeta).sqrt());
    }
    // height_ratio is increasing on (0, pi) from 0 to +inf.
    let mut lo = 0.0_f64;
    let mut hi = PI;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if height_ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    if !(theta > 0.0 && theta < PI) || (hi - lo) > 1e-12 {
        return Err(Error::NoConvergence(format!(
            "theta bracket [{lo}, {hi}] for rho = {rho}, zeta = {zeta}"
        )));
    }
    // theta / sin(theta) = 1 / sinc(theta^2)
    Ok(rho / sinc(theta * theta))
}

/// Numerical integration of the Heisenberg Hamiltonian system
/// `H = 1/2 sum (P_{X_i}^2 + P_{Y_i}^2)` from the origin, sampled at `times`.
pub fn heisenberg_hamiltonian_flow(p: &Covector, times: &[f64], tol: f64) -> Result<Vec<Vec<f64>>> {
    let n = p.n();
    // state: (x_1, y_1, ..., z, p_x1, p_y1, ..., p_z)
    let dim = 2 * (2 * n + 1);
    let mut y0 = vec![0.0; dim];
    for (i, hi) in p.h().iter().enumerate() {
        y0[2 * n + 1 + i] = *hi;
    }
    y0[dim - 1] = p.z();
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        let pz = y[dim - 1];
        let mut zdot = 0.0;
        for j in 0..n {
            let (x, yy) = (y[2 * j], y[2 * j + 1]);
            let (px, py) = (y[2 * n + 1 + 2 * j], y[2 * n + 2 + 2 * j]);
            let pxf = px - 0.5 * yy * pz;
            let pyf = py + 0.5 * x * pz;
            dy[2 * j] = pxf;
            dy[2 * j + 1] = pyf;
            zdot += -0.5 * yy * pxf + 0.5 * x * pyf;
            dy[2 * n + 1 + 2 * j] = -0.5 * pz * pyf;
            dy[2 * n + 2 + 2 * j] = 0.5 * pz * pxf;
        }
        dy[2 * n] = zdot;
        dy[dim - 1] = 0.0;
    };
    sample_flow(rhs, y0, times, tol, 2 * n + 1)
}

/// Numerical integration of the Hopf sub-Riemannian Hamiltonian in ambient
/// coordinates, `H = 1/2 (|x|^2 |p|^2 - <p, x>^2 - <p, ix>^2)`, from `a = (1, 0, ...)`
/// with initial momentum `v^h + (z/2) i a`.
pub fn hopf_hamiltonian_flow(p: &Covector, times: &[f64], tol: f64) -> Result<Vec<Vec<f64>>> {
    let v = HopfCovector::from_covector(p)?;
    let m = 2 * (v.n() + 1);
    let mut y0 = vec![0.0; 2 * m];
    y0[0] = 1.0;
    y0[m + 1] = 0.5 * v.z();
    for (j, c) in v.horizontal().iter().enumerate() {
        y0[m + 2 + 2 * j] = c.re;
        y0[m + 3 + 2 * j] = c.im;
    }
    // multiplication by i on interleaved (re, im) pairs
    let jmul = |u: &[f64], out: &mut [f64]| {
        for k in (0..u.len()).step_by(2) {
            out[k] = -u[k + 1];
            out[k + 1] = u[k];
        }
    };
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        let (x, pp) = y.split_at(m);
        let mut jx = vec![0.0; m];
        let mut jp = vec![0.0; m];
        jmul(x, &mut jx);
        jmul(pp, &mut jp);
        let px: f64 = pp.iter().zip(x).map(|(a, b)| a * b).sum();
        let pjx: f64 = pp.iter().zip(&jx).map(|(a, b)| a * b).sum();
        let xx: f64 = x.iter().map(|a| a * a).sum();
        let ppn: f64 = pp.iter().map(|a| a * a).sum();
        let (dx, dp) = dy.split_at_mut(m);
        for k in 0..m {
            dx[k] = xx * pp[k] - px * x[k] - pjx * jx[k];
            dp[k] = px * pp[k] - pjx * jp[k] - ppn * x[k];
        }
    };
    sample_flow(rhs, y0, times, tol, m)
}

fn sample_flow<F>(mut rhs: F, y0: Vec<f64>, times: &[f64], tol: f64, keep: usize) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let opts = OdeOptions::with_tol(tol);
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut y = y0;
    for &target in times {
        if target > t {
            let res = ode::integrate(&mut rhs, t, &y, target, &opts, |_, _| Control::Continue)?;
            y = res.y;
            t = target;
        }
        out.push(y[..keep].to_vec());
    }
    Ok(out)
}
