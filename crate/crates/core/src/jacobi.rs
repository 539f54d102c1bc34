//! Linear Jacobi system `A' = -A C1 + B R`, `B' = -A C2 + B C1^T` with
//! `A(0) = I`, `B(0) = 0`, the matrix Riccati equation
//! `S' = S C2 S - C1^T S - S C1 + R` for `S = B^{-1} A`, conjugate-time
//! detection, and the closed-form constant-curvature `S`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::comparison::FrakPair;
use crate::error::{Error, Result};
use crate::geometry::{assemble_structural, constant_curvature_matrix, CanonicalCurvature, StructuralConstants};
use crate::ode::{self, Control, OdeOptions};
use crate::special::{cos_minus_sinc, s_factor, sinc, versine, x_cot_x};

/// Curvature `R(t)` along a geodesic, as assembled `(2n+1) x (2n+1)` matrices.
#[derive(Clone)]
pub enum CurvatureProfile {
    Constant(DMatrix<f64>),
    Varying {
        n: usize,
        f: Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>,
    },
}

impl std::fmt::Debug for CurvatureProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            Self::Varying { n, .. } => f.debug_struct("Varying").field("n", n).finish_non_exhaustive(),
        }
    }
}

impl CurvatureProfile {
    pub fn constant(c: &CanonicalCurvature) -> Self {
        Self::Constant(c.assemble())
    }

    pub fn model(n: usize, frak: FrakPair) -> Self {
        Self::constant(&constant_curvature_matrix(n, frak.frak1, frak.frak2))
    }

    pub fn flat(n: usize) -> Self {
        Self::model(n, FrakPair { frak1: 0.0, frak2: 0.0 })
    }

    pub fn varying(n: usize, f: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self::Varying { n, f: Arc::new(f) }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Constant(m) => (m.nrows() - 1) / 2,
            Self::Varying { n, .. } => *n,
        }
    }

    pub fn at(&self, t: f64) -> DMatrix<f64> {
        match self {
            Self::Constant(m) => m.clone(),
            Self::Varying { f, .. } => f(t),
        }
    }

    fn validate(&self) -> Result<StructuralConstants> {
        let n = self.n();
        let consts = assemble_structural(n)?;
        let r = self.at(0.0);
        if r.nrows() != consts.dim() || r.ncols() != consts.dim() {
            return Err(Error::InvalidInput(format!(
                "curvature matrix is {}x{}, expected {d}x{d}",
                r.nrows(),
                r.ncols(),
                d = consts.dim()
            )));
        }
        Ok(consts)
    }
}

/// A conjugate time together with the interval that brackets it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateEvent {
    pub time: f64,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct JacobiSolution {
    pub n: usize,
    pub grid: Vec<f64>,
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
    pub det_b: Vec<f64>,
    pub conjugate: Option<ConjugateEvent>,
    profile: CurvatureProfile,
    opts: OdeOptions,
}

fn pack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let mut y = a.as_slice().to_vec();
    y.extend_from_slice(b.as_slice());
    y
}

fn unpack(y: &[f64], d: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let (a, b) = y.split_at(d * d);
    (DMatrix::from_column_slice(d, d, a), DMatrix::from_column_slice(d, d, b))
}

fn jacobi_rhs<'a>(
    profile: &'a CurvatureProfile,
    consts: &'a StructuralConstants,
) -> impl FnMut(f64, &[f64], &mut [f64]) + 'a {
    let d = consts.dim();
    let c1t = consts.c1.transpose();
    move |t, y, dy| {
        let (a, b) = unpack(y, d);
        let r = profile.at(t);
        let da = -&a * &consts.c1 + &b * r;
        let db = -&a * &consts.c2 + &b * &c1t;
        dy[..d * d].copy_from_slice(da.as_slice());
        dy[d * d..].copy_from_slice(db.as_slice());
    }
}

fn jacobi_options(horizon: f64, tol: f64) -> Result<OdeOptions> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    Ok(OdeOptions {
        rtol: tol,
        // B starts at zero and grows like t^3 in some entries; the absolute
        // floor must sit far below those scales.
        atol: tol * 1e-8,
        h_init: Some(horizon * 1e-6),
        h_max: horizon / 200.0,
        ..OdeOptions::default()
    })
}

/// Integrate the `(A, B)` system on `[0, horizon]`, sampling at every
/// accepted step, and locate the first conjugate time.
pub fn integrate_jacobi(profile: &CurvatureProfile, horizon: f64, tol: f64) -> Result<JacobiSolution> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidInput(format!("horizon must be positive and finite, got {horizon}")));
    }
    let consts = profile.validate()?;
    let d = consts.dim();
    let opts = jacobi_options(horizon, tol)?;
    let a0 = DMatrix::identity(d, d);
    let b0 = DMatrix::zeros(d, d);
    let mut grid = vec![0.0];
    let mut a_s = vec![a0.clone()];
    let mut b_s = vec![b0.clone()];
    let mut det_b = vec![0.0];
    ode::integrate(jacobi_rhs(profile, &consts), 0.0, &pack(&a0, &b0), horizon, &opts, |t, y| {
        let (a, b) = unpack(y, d);
        grid.push(t);
        det_b.push(b.determinant());
        a_s.push(a);
        b_s.push(b);
        Control::Continue
    })?;
    let mut sol = JacobiSolution {
        n: consts.n,
        grid,
        a: a_s,
        b: b_s,
        det_b,
        conjugate: None,
        profile: profile.clone(),
        opts,
    };
    sol.conjugate = first_conjugate_time(&sol)?;
    Ok(sol)
}

impl JacobiSolution {
    pub fn horizon(&self) -> f64 {
        *self.grid.last().expect("grid is never empty")
    }

    /// `(A(t), B(t))` at any `t` in `[0, horizon]`, re-integrated from the
    /// nearest stored sample.
    pub fn state_at(&self, t: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if !(t >= 0.0 && t <= self.horizon()) {
            return Err(Error::InvalidInput(format!(
                "t = {t} outside [0, {}]",
                self.horizon()
            )));
        }
        let i = self.grid.partition_point(|&s| s <= t) - 1;
        if self.grid[i] == t {
            return Ok((self.a[i].clone(), self.b[i].clone()));
        }
        let consts = assemble_structural(self.n)?;
        let d = consts.dim();
        let out = ode::integrate(
            jacobi_rhs(&self.profile, &consts),
            self.grid[i],
            &pack(&self.a[i], &self.b[i]),
            t,
            &self.opts,
            |_, _| Control::Continue,
        )?;
        Ok(unpack(&out.y, d))
    }

    pub fn det_b_at(&self, t: f64) -> Result<f64> {
        Ok(self.state_at(t)?.1.determinant())
    }
}

/// `sigma_min(B) / sigma_max(B)`, a scale-free measure of how singular `B` is.
fn singular_ratio(b: &DMatrix<f64>) -> f64 {
    let sv = b.clone().singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    sv.min() / max
}

const CONJ_REL_WIDTH: f64 = 1e-10;
/// Singular ratio below which a local minimum is a conjugate point.
const TOUCH_ZERO: f64 = 1e-7;
/// Singular ratio below which a local minimum is too close to call.
const TOUCH_AMBIGUOUS: f64 = 1e-4;

fn bisect_sign_change(sol: &JacobiSolution, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<ConjugateEvent> {
    let bracket = (lo, hi);
    while hi - lo > CONJ_REL_WIDTH * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = sol.det_b_at(mid)?;
        if f_mid == 0.0 {
            return Ok(ConjugateEvent { time: mid, bracket });
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(ConjugateEvent { time: 0.5 * (lo + hi), bracket })
}

/// Golden-section search for the minimum of the singular ratio on `[lo, hi]`.
fn minimize_ratio(sol: &JacobiSolution, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let ratio = |t: f64| -> Result<f64> { Ok(singular_ratio(&sol.state_at(t)?.1)) };
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = ratio(x1)?;
    let mut f2 = ratio(x2)?;
    while hi - lo > CONJ_REL_WIDTH * hi {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = ratio(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = ratio(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// First `t > 0` with `det B(t) = 0`.
///
/// Odd-order zeros are found from sign changes of `det B`; even-order zeros
/// (e.g. the `sin^{2n-2}` factor) from local minima of `sigma_min / sigma_max`.
pub fn first_conjugate_time(sol: &JacobiSolution) -> Result<Option<ConjugateEvent>> {
    let ratios: Vec<f64> = sol.b.iter().map(singular_ratio).collect();
    let len = sol.grid.len();
    for i in 2..len {
        let mut found: Option<ConjugateEvent> = None;
        let (d0, d1) = (sol.det_b[i - 1], sol.det_b[i]);
        if d1 == 0.0 {
            found = Some(ConjugateEvent { time: sol.grid[i], bracket: (sol.grid[i], sol.grid[i]) });
        } else if d0 * d1 < 0.0 {
            found = Some(bisect_sign_change(sol, sol.grid[i - 1], sol.grid[i], d0)?);
        }
        if ratios[i - 1] <= ratios[i - 2] && ratios[i - 1] <= ratios[i] && ratios[i - 1] < TOUCH_AMBIGUOUS * 1e3 {
            let (lo, hi) = (sol.grid[i - 2], sol.grid[i]);
            let (t_min, r_min) = minimize_ratio(sol, lo, hi)?;
            if r_min < TOUCH_ZERO {
                let ev = ConjugateEvent { time: t_min, bracket: (lo, hi) };
                found = Some(match found {
                    Some(f) if f.time <= ev.time => f,
                    _ => ev,
                });
            } else if r_min < TOUCH_AMBIGUOUS && found.is_none() {
                return Err(Error::Indeterminate {
                    t: t_min,
                    reason: format!("det B nearly vanishes (sigma ratio {r_min:.3e}) without a clear zero"),
                });
            }
        }
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

/// `S(t)` with its block split: `S1` is `2x2`, `S4` is `(2n-2)x(2n-2)`, `S6`
/// is the trailing scalar; `S2`, `S3`, `S5` are the off-diagonal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiState {
    pub t: f64,
    pub s: DMatrix<f64>,
}

impl RiccatiState {
    pub fn n(&self) -> usize {
        (self.s.nrows() - 1) / 2
    }

    fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> DMatrix<f64> {
        self.s.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned()
    }

    pub fn s1(&self) -> DMatrix<f64> {
        self.block(0..2, 0..2)
    }
    pub fn s2(&self) -> DMatrix<f64> {
        let m = 2 * self.n();
        self.block(0..2, 2..m)
    }
    pub fn s3(&self) -> DMatrix<f64> {
        let m = 2 * self.n();
        self.block(0..2, m..m + 1)
    }
    pub fn s4(&self) -> DMatrix<f64> {
        let m = 2 * self.n();
        self.block(2..m, 2..m)
    }
    pub fn s5(&self) -> DMatrix<f64> {
        let m = 2 * self.n();
        self.block(2..m, m..m + 1)
    }
    pub fn s6(&self) -> f64 {
        let m = 2 * self.n();
        self.s[(m, m)]
    }

    pub fn trace_c2(&self) -> f64 {
        self.s.diagonal().iter().skip(1).sum()
    }
}

#[derive(Debug, Clone)]
pub struct RiccatiTrajectory {
    /// Seeding time actually used after the Richardson check.
    pub t0: f64,
    pub states: Vec<RiccatiState>,
    /// Last valid time when `|S|` crossed the blow-up threshold before the
    /// horizon.
    pub blow_up: Option<f64>,
}

pub const BLOW_UP: f64 = 1e12;
const SEED_AGREEMENT: f64 = 1e-9;
const SEED_HALVINGS: usize = 4;

fn riccati_rhs<'a>(
    profile: &'a CurvatureProfile,
    consts: &'a StructuralConstants,
) -> impl FnMut(f64, &[f64], &mut [f64]) + 'a {
    let d = consts.dim();
    let c1t = consts.c1.transpose();
    move |t, y, dy| {
        let s = DMatrix::from_column_slice(d, d, y);
        let ds = &s * &consts.c2 * &s - &c1t * &s - &s * &consts.c1 + profile.at(t);
        dy.copy_from_slice(ds.as_slice());
    }
}

fn symmetrize(y: &mut [f64], d: usize) {
    for i in 0..d {
        for j in (i + 1)..d {
            let m = 0.5 * (y[i + j * d] + y[j + i * d]);
            y[i + j * d] = m;
            y[j + i * d] = m;
        }
    }
}

/// `S(t0) = U(t0)^{-1}` where `U = S^{-1}` solves the regular equation
/// `U' = -C2 + U C1^T + C1 U - U R U`, `U(0) = 0`.
fn seed(profile: &CurvatureProfile, consts: &StructuralConstants, t0: f64, tol: f64) -> Result<DMatrix<f64>> {
    let d = consts.dim();
    let c1t = consts.c1.transpose();
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let u = DMatrix::from_column_slice(d, d, y);
        let du = -&consts.c2 + &u * &c1t + &consts.c1 * &u - &u * profile.at(t) * &u;
        dy.copy_from_slice(du.as_slice());
    };
    let opts = OdeOptions { rtol: tol, atol: 1e-300, h_init: Some(t0 * 1e-3), ..OdeOptions::default() };
    let out = ode::integrate(rhs, 0.0, &vec![0.0; d * d], t0, &opts, |_, y| {
        symmetrize(y, d);
        Control::Continue
    })?;
    let u = DMatrix::from_column_slice(d, d, &out.y);
    let s = u.try_inverse().ok_or(Error::SingularSeed { t0 })?;
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularSeed { t0 });
    }
    Ok(s)
}

fn riccati_options(span: f64, t0: f64, tol: f64) -> OdeOptions {
    OdeOptions {
        rtol: tol,
        atol: tol * 1e-8,
        h_init: Some(t0 * 1e-2),
        h_max: span / 200.0,
        ..OdeOptions::default()
    }
}

fn max_norm(y: &[f64]) -> f64 {
    y.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Integrate the Riccati equation from the seeding time `t0` to `horizon`,
/// or until `|S|` exceeds the blow-up threshold.
pub fn integrate_riccati(profile: &CurvatureProfile, t0: f64, horizon: f64, tol: f64) -> Result<RiccatiTrajectory> {
    if !(t0 > 0.0 && t0 < horizon && horizon.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need 0 < t0 < horizon < inf, got t0 = {t0}, horizon = {horizon}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let consts = profile.validate()?;
    let d = consts.dim();

    // Richardson check on the seeding time: seeds at t0 and t0/2 must agree
    // once propagated to a common time.
    let mut t0 = t0;
    let mut s0 = seed(profile, &consts, t0, tol)?;
    for _ in 0..SEED_HALVINGS {
        let t_check = (4.0 * t0).min(horizon);
        let half = seed(profile, &consts, 0.5 * t0, tol)?;
        let opts = riccati_options(t_check, 0.5 * t0, tol);
        let from_half = ode::integrate(riccati_rhs(profile, &consts), 0.5 * t0, half.as_slice(), t_check, &opts, |_, y| {
            symmetrize(y, d);
            Control::Continue
        })?;
        let opts = riccati_options(t_check, t0, tol);
        let from_full = ode::integrate(riccati_rhs(profile, &consts), t0, s0.as_slice(), t_check, &opts, |_, y| {
            symmetrize(y, d);
            Control::Continue
        })?;
        let diff = from_half.y.iter().zip(&from_full.y).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if diff <= SEED_AGREEMENT * max_norm(&from_full.y) {
            break;
        }
        t0 *= 0.5;
        s0 = half;
    }

    let threshold = BLOW_UP.max(100.0 * max_norm(s0.as_slice()));
    let mut states = vec![RiccatiState { t: t0, s: s0.clone() }];
    let mut blow_up = None;
    let opts = riccati_options(horizon, t0, tol);
    let result = ode::integrate(riccati_rhs(profile, &consts), t0, s0.as_slice(), horizon, &opts, |t, y| {
        symmetrize(y, d);
        if !(max_norm(y) <= threshold) {
            blow_up = Some(states.last().map_or(t0, |s| s.t));
            return Control::Stop;
        }
        states.push(RiccatiState { t, s: DMatrix::from_column_slice(d, d, y) });
        Control::Continue
    });
    match result {
        Ok(_) => {}
        // Steps collapsing in front of a pole are the same event.
        Err(Error::StepUnderflow { .. }) | Err(Error::StepBudget { .. }) if !states.is_empty() => {
            blow_up = Some(states.last().map_or(t0, |s| s.t));
        }
        Err(e) => return Err(e),
    }
    Ok(RiccatiTrajectory { t0, states, blow_up })
}

/// Closed-form `S(t)` for constant curvature `diag(0, frak1, frak2 I, 0)`.
pub fn oracle_s(n: usize, frak1: f64, frak2: f64, t: f64) -> Result<RiccatiState> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be >= 1".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("oracle needs t > 0, got {t}")));
    }
    let k1 = frak1 * t * t;
    let k2 = frak2 * t * t;
    let phi = s_factor(k1);
    if phi.abs() < 1e-14 {
        return Err(Error::Pole(format!("s(sqrt(frak1) t) = 0 at t = {t}")));
    }
    let d = 2 * n + 1;
    let mut s = DMatrix::zeros(d, d);
    s[(0, 0)] = -sinc(k1) / (t * t * t * phi);
    s[(0, 1)] = versine(k1) / (t * t * phi);
    s[(1, 0)] = s[(0, 1)];
    s[(1, 1)] = cos_minus_sinc(k1) / (t * phi);
    if n >= 2 {
        if sinc(k2).abs() < 1e-14 {
            return Err(Error::Pole(format!("sin(sqrt(frak2) t) = 0 at t = {t}")));
        }
        let v = -x_cot_x(k2) / t;
        for i in 2..2 * n {
            s[(i, i)] = v;
        }
    }
    s[(d - 1, d - 1)] = -1.0 / t;
    Ok(RiccatiState { t, s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparison::{det_b_model, model_conjugate_time, trace_bound};
    use std::f64::consts::PI;

    fn model(n: usize, k1: f64, k2: f64) -> CurvatureProfile {
        CurvatureProfile::model(n, FrakPair { frak1: k1, frak2: k2 })
    }

    #[test]
    fn initial_conditions_are_exact() {
        let sol = integrate_jacobi(&model(2, 1.0, 1.0), 1.0, 1e-10).unwrap();
        assert_eq!(sol.grid[0], 0.0);
        assert_eq!(sol.a[0], DMatrix::identity(5, 5));
        assert_eq!(sol.b[0], DMatrix::zeros(5, 5));
    }

    #[test]
    fn flat_det_b_leading_term() {
        let sol = integrate_jacobi(&CurvatureProfile::flat(1), 0.02, 1e-12).unwrap();
        let t: f64 = 0.01;
        let det = sol.det_b_at(t).unwrap().abs();
        let expected = t.powi(5) / 12.0;
        assert!((det / expected - 1.0).abs() < 0.01, "{det} vs {expected}");
    }

    #[test]
    fn b_small_time_series() {
        for n in 1..=3 {
            let sol = integrate_jacobi(&model(n, 4.0, 1.0), 0.002, 1e-12).unwrap();
            let t = 1e-3;
            let (_, b) = sol.state_at(t).unwrap();
            let c = assemble_structural(n).unwrap();
            let series = -&c.c2 * t + (&c.c1 - c.c1.transpose()) * (0.5 * t * t);
            assert!((b - series).amax() < 1e-9);
        }
    }

    #[test]
    fn det_b_matches_closed_form() {
        for n in 1..=3 {
            for (k1, k2) in [(4.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (0.0, 0.0)] {
                let frak = FrakPair { frak1: k1, frak2: k2 };
                let sol = integrate_jacobi(&CurvatureProfile::model(n, frak), 2.5, 1e-11).unwrap();
                for &t in &[0.5, 1.0, 1.7, 2.5] {
                    let num = sol.det_b_at(t).unwrap().abs();
                    let exact = det_b_model(t, frak, n);
                    if exact > 1e-8 {
                        assert!((num / exact - 1.0).abs() < 1e-6, "n={n} ({k1},{k2}) t={t}: {num} vs {exact}");
                    }
                }
            }
        }
    }

    #[test]
    fn conjugate_time_touching_zero() {
        for n in 2..=3 {
            let sol = integrate_jacobi(&model(n, 1.0, 1.0), 7.0, 1e-11).unwrap();
            let ev = sol.conjugate.expect("conjugate point");
            assert!((ev.time - PI).abs() < 1e-8 * PI, "n={n}: {}", ev.time);
            assert!(ev.bracket.0 <= ev.time && ev.time <= ev.bracket.1);
        }
        // n = 1 has no sin block: the zero of s at 2 pi comes first
        let sol = integrate_jacobi(&model(1, 1.0, 1.0), 7.0, 1e-11).unwrap();
        assert!((sol.conjugate.unwrap().time - 2.0 * PI).abs() < 1e-8 * 2.0 * PI);
    }

    #[test]
    fn conjugate_time_sign_change() {
        // Heisenberg r = 1, z = 2
        for n in 1..=3 {
            let sol = integrate_jacobi(&model(n, 4.0, 1.0), 4.0, 1e-11).unwrap();
            let t = sol.conjugate.unwrap().time;
            assert!((t - PI).abs() < 1e-8 * PI, "n={n}: {t}");
        }
    }

    #[test]
    fn no_conjugate_time_when_flat_or_negative() {
        assert!(integrate_jacobi(&CurvatureProfile::flat(2), 20.0, 1e-10).unwrap().conjugate.is_none());
        assert!(integrate_jacobi(&model(2, -1.0, -1.0), 10.0, 1e-10).unwrap().conjugate.is_none());
    }

    #[test]
    fn monotone_comparison() {
        let pairs = [((4.0, 1.0), (1.0, 1.0)), ((9.0, 4.0), (4.0, 1.0)), ((2.0, 0.5), (1.0, -1.0))];
        for n in 1..=2 {
            for ((a1, a2), (b1, b2)) in pairs {
                let ta = integrate_jacobi(&model(n, a1, a2), 12.0, 1e-10).unwrap().conjugate.map(|e| e.time);
                let tb = integrate_jacobi(&model(n, b1, b2), 12.0, 1e-10).unwrap().conjugate.map(|e| e.time);
                let ta = ta.unwrap_or(f64::INFINITY);
                let tb = tb.unwrap_or(f64::INFINITY);
                assert!(ta <= tb * (1.0 + 1e-9), "n={n}: {ta} > {tb}");
            }
        }
    }

    #[test]
    fn riccati_flat_trailing_slot() {
        let traj = integrate_riccati(&CurvatureProfile::flat(1), 1e-3, 2.0, 1e-12).unwrap();
        assert!(traj.blow_up.is_none());
        for st in &traj.states {
            assert!((st.s6() + 1.0 / st.t).abs() < 1e-9 * (1.0 / st.t));
        }
    }

    #[test]
    fn riccati_leading_behavior() {
        let traj = integrate_riccati(&CurvatureProfile::flat(2), 1e-3, 0.05, 1e-12).unwrap();
        let st = traj.states.iter().min_by(|a, b| (a.t - 1e-2).abs().total_cmp(&(b.t - 1e-2).abs())).unwrap();
        let t = st.t;
        let lead = [[-12.0 / t.powi(3), 6.0 / (t * t)], [6.0 / (t * t), -4.0 / t]];
        let s1 = st.s1();
        for i in 0..2 {
            for j in 0..2 {
                assert!((s1[(i, j)] / lead[i][j] - 1.0).abs() < 0.05);
            }
        }
    }

    #[test]
    fn riccati_matches_oracle() {
        for (k1, k2) in [(4.0, 1.0), (-1.0, -1.0)] {
            let n = 2;
            let frak = FrakPair { frak1: k1 + 1.0, frak2: k2 + 0.25 };
            let end = (0.9 * model_conjugate_time(frak, n)).min(5.0);
            let traj = integrate_riccati(&CurvatureProfile::model(n, frak), 1e-3, end, 1e-13).unwrap();
            for st in traj.states.iter().filter(|s| s.t >= 0.1) {
                let o = oracle_s(n, frak.frak1, frak.frak2, st.t).unwrap();
                let err = (&st.s - &o.s).amax();
                assert!(err < 1e-8, "t={} err={err}", st.t);
            }
        }
    }

    #[test]
    fn riccati_reports_blow_up() {
        let traj = integrate_riccati(&model(2, 1.0, 1.0), 1e-3, 4.0, 1e-10).unwrap();
        let last = traj.blow_up.expect("blow-up before pi");
        assert!(last < PI && last > 3.0);
    }

    #[test]
    fn riccati_rejects_bad_input() {
        assert!(integrate_riccati(&CurvatureProfile::flat(1), 0.0, 1.0, 1e-10).is_err());
        assert!(integrate_riccati(&CurvatureProfile::flat(1), 2.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn oracle_examples() {
        let o = oracle_s(1, 0.0, 0.0, 2.0).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[-1.5, 1.5, 0.0, 1.5, -2.0, 0.0, 0.0, 0.0, -0.5]);
        assert!((o.s - expected).amax() < 1e-14);

        let t = PI / 2.0;
        let o = oracle_s(1, 4.0, 0.0, t).unwrap();
        let s1 = o.s1();
        assert!(s1[(0, 0)].abs() < 1e-14);
        assert!((s1[(0, 1)] - 8.0 / 4.0).abs() < 1e-14);
        assert!((s1[(1, 1)] - 2.0 * (-PI) / 4.0).abs() < 1e-14);

        assert!(matches!(oracle_s(2, 1.0, 1.0, PI), Err(Error::Pole(_))));
        assert!(matches!(oracle_s(1, 1.0, 0.0, 2.0 * PI), Err(Error::Pole(_))));
    }

    #[test]
    fn oracle_block_partition() {
        let o = oracle_s(3, 1.0, 0.5, 0.7).unwrap();
        assert_eq!(o.s1().shape(), (2, 2));
        assert_eq!(o.s2().shape(), (2, 4));
        assert_eq!(o.s3().shape(), (2, 1));
        assert_eq!(o.s4().shape(), (4, 4));
        assert_eq!(o.s5().shape(), (4, 1));
        assert!((o.s6() + 1.0 / 0.7).abs() < 1e-15);
        let total = o.s1().len() + 2 * o.s2().len() + 2 * o.s3().len() + o.s4().len() + 2 * o.s5().len() + 1;
        assert_eq!(total, 49);
    }

    #[test]
    fn oracle_satisfies_riccati() {
        let consts = assemble_structural(2).unwrap();
        for (k1, k2) in [(4.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (0.0, 0.0), (2.5, 0.3)] {
            let r = constant_curvature_matrix(2, k1, k2).assemble();
            for &t in &[0.3, 0.8, 1.2] {
                let h = 1e-5;
                let sp = oracle_s(2, k1, k2, t + h).unwrap().s;
                let sm = oracle_s(2, k1, k2, t - h).unwrap().s;
                let s = oracle_s(2, k1, k2, t).unwrap().s;
                let ds = (sp - sm) / (2.0 * h);
                let rhs = &s * &consts.c2 * &s - consts.c1.transpose() * &s - &s * &consts.c1 + &r;
                let scale = 1.0 + rhs.amax();
                assert!((ds - rhs).amax() / scale < 1e-8, "({k1},{k2}) t={t}");
            }
        }
    }

    #[test]
    fn oracle_trace_is_trace_bound() {
        for n in 1..=3 {
            for &(k1, k2, t) in &[(4.0, 1.0, 0.9), (-2.0, -1.0, 1.3), (0.0, 0.0, 2.0), (1.0, -0.5, 0.4)] {
                let frak = FrakPair { frak1: k1, frak2: k2 };
                let o = oracle_s(n, k1, k2, t).unwrap();
                let tb = trace_bound(t, frak, n).unwrap();
                assert!((o.trace_c2() - tb).abs() < 1e-12 * (1.0 + tb.abs()));
            }
        }
    }

    #[test]
    fn log_det_derivative_is_minus_trace() {
        let frak = FrakPair { frak1: 5.0, frak2: 1.25 };
        let n = 2;
        let sol = integrate_jacobi(&CurvatureProfile::model(n, frak), 2.0, 1e-12).unwrap();
        let traj = integrate_riccati(&CurvatureProfile::model(n, frak), 1e-3, 2.0, 1e-12).unwrap();
        for st in traj.states.iter().filter(|s| s.t > 0.2 && s.t < 1.9).step_by(20) {
            let h = 1e-5 * st.t;
            let lp = sol.det_b_at(st.t + h).unwrap().abs().ln();
            let lm = sol.det_b_at(st.t - h).unwrap().abs().ln();
            let dlog = (lp - lm) / (2.0 * h);
            assert!((dlog + st.trace_c2()).abs() < 1e-7 * (1.0 + dlog.abs()), "t={}", st.t);
        }
    }
}
