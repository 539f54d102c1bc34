//! Finite-difference sub-Laplacian on the Heisenberg group and the Laplacian
//! comparison sweep for the distance from the origin.
//!
//! The horizontal frame is `X_i = d_{x_i} - 1/2 y_i d_z`,
//! `Y_i = d_{y_i} + 1/2 x_i d_z`. Both fields have affine flows, so second
//! differences are taken along exact integral curves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::comparison::{laplace_h, CurvatureBounds, HForm};
use crate::error::{Error, Result};
use crate::models::heisenberg_distance;

/// Relative finite-difference step, as a fraction of `d(x)`.
pub const REL_STEP: f64 = 1e-3;
/// Radius of the excluded cylinder around the cut locus (the `z`-axis).
pub const CUT_EXCLUSION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianSample {
    pub x: Vec<f64>,
    pub d: f64,
    pub v0d: f64,
    pub lap_h: f64,
    pub bound: f64,
    pub margin: f64,
    /// `|grad_H d|`, which should equal 1.
    pub grad_norm: f64,
}

fn check_point(x: &[f64]) -> Result<usize> {
    if x.len() < 3 || x.len() % 2 == 0 {
        return Err(Error::InvalidInput(format!(
            "Heisenberg point must have length 2n + 1, got {}",
            x.len()
        )));
    }
    Ok(x.len() / 2)
}

/// `exp(s X_i)(x)` when `along_y` is false, `exp(s Y_i)(x)` otherwise.
pub fn flow(x: &[f64], i: usize, along_y: bool, s: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    let zi = x.len() - 1;
    if along_y {
        out[2 * i + 1] += s;
        out[zi] += 0.5 * x[2 * i] * s;
    } else {
        out[2 * i] += s;
        out[zi] -= 0.5 * x[2 * i + 1] * s;
    }
    out
}

fn second_difference<F>(f: &F, x: &[f64], fx: f64, i: usize, along_y: bool, s: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let plus = f(&flow(x, i, along_y, s))?;
    let minus = f(&flow(x, i, along_y, -s))?;
    Ok((plus - 2.0 * fx + minus) / (s * s))
}

fn first_difference<F>(f: &F, x: &[f64], i: usize, along_y: bool, s: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let plus = f(&flow(x, i, along_y, s))?;
    let minus = f(&flow(x, i, along_y, -s))?;
    Ok((plus - minus) / (2.0 * s))
}

fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// `sum_i X_i X_i f + Y_i Y_i f` at `x`, Richardson-extrapolated from the
/// steps `step` and `step / 2`.
pub fn sub_laplacian_fd<F>(f: F, x: &[f64], step: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = check_point(x)?;
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {step}")));
    }
    let fx = f(x)?;
    let mut total = 0.0;
    for i in 0..n {
        for along_y in [false, true] {
            let coarse = second_difference(&f, x, fx, i, along_y, step)?;
            let fine = second_difference(&f, x, fx, i, along_y, 0.5 * step)?;
            total += richardson(coarse, fine);
        }
    }
    Ok(total)
}

/// Horizontal gradient components `(X_1 f, Y_1 f, ..., X_n f, Y_n f)`.
pub fn horizontal_gradient<F>(f: F, x: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = check_point(x)?;
    let mut g = Vec::with_capacity(2 * n);
    for i in 0..n {
        for along_y in [false, true] {
            let coarse = first_difference(&f, x, i, along_y, step)?;
            let fine = first_difference(&f, x, i, along_y, 0.5 * step)?;
            g.push(richardson(coarse, fine));
        }
    }
    Ok(g)
}

/// Derivative along the Reeb field `v0 = d_z`.
pub fn reeb_derivative<F>(f: F, x: &[f64], step: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    check_point(x)?;
    let d1 = |s: f64| -> Result<f64> {
        let mut p = x.to_vec();
        let mut m = x.to_vec();
        *p.last_mut().expect("nonempty") += s;
        *m.last_mut().expect("nonempty") -= s;
        Ok((f(&p)? - f(&m)?) / (2.0 * s))
    };
    Ok(richardson(d1(step)?, d1(0.5 * step)?))
}

/// Evaluate `d`, `v0(d)`, `Delta_H d` and the comparison bound at `x`.
pub fn laplacian_sample(x: &[f64], form: HForm) -> Result<LaplacianSample> {
    let n = check_point(x)?;
    let d = heisenberg_distance(x)?;
    let step = REL_STEP * d;
    let lap_h = sub_laplacian_fd(heisenberg_distance, x, step)?;
    let v0d = reeb_derivative(heisenberg_distance, x, step)?;
    let grad = horizontal_gradient(heisenberg_distance, x, step)?;
    let bounds = CurvatureBounds::new(0.0, 0.0, n)?;
    let bound = laplace_h(d, v0d, &bounds, form)?;
    Ok(LaplacianSample {
        x: x.to_vec(),
        d,
        v0d,
        lap_h,
        bound,
        margin: bound - lap_h,
        grad_norm: grad.iter().map(|g| g * g).sum::<f64>().sqrt(),
    })
}

/// Sampling region: `w` uniform in `[-half_width, half_width]^{2n}`, `z`
/// uniform in `[-z_half, z_half]`, rejecting `|w| < CUT_EXCLUSION`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingBox {
    pub half_width: f64,
    pub z_half: f64,
}

impl Default for SamplingBox {
    fn default() -> Self {
        Self { half_width: 2.0, z_half: 2.0 }
    }
}

/// Sample `i` of the stream seeded by `seed`; depends only on `(seed, i)`.
pub fn sample_point(n: usize, seed: u64, i: u64, region: &SamplingBox) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    loop {
        let mut x: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-region.half_width..=region.half_width)).collect();
        let rho = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rho < CUT_EXCLUSION {
            continue;
        }
        x.push(rng.gen_range(-region.z_half..=region.z_half));
        return x;
    }
}

/// Laplacian comparison sweep on the Heisenberg group of dimension `2n + 1`.
pub fn verify_laplacian_comparison(
    n: usize,
    samples: usize,
    seed: u64,
    region: &SamplingBox,
    form: HForm,
) -> Result<Vec<LaplacianSample>> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be >= 1".into()));
    }
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let x = sample_point(n, seed, i, region);
            laplacian_sample(&x, form).map_err(|e| Error::NoConvergence(format!("sample {i} at {x:?}: {e}")))
        })
        .collect()
}
