//! Globally adaptive Gauss-Kronrod (7, 15) quadrature.
//!
//! Node evaluations inside one panel run in parallel; panel results are kept
//! in a fixed order and summed pairwise, so the value does not depend on the
//! number of worker threads.

use rayon::prelude::*;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];

// Gauss weights for the odd-indexed Kronrod nodes (and the centre).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-8, max_panels: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F>(f: &F, a: f64, b: f64) -> Result<Panel>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abscissae: Vec<f64> = (0..15)
        .map(|i| {
            if i < 7 {
                centre - half * XGK[i]
            } else if i == 7 {
                centre
            } else {
                centre + half * XGK[14 - i]
            }
        })
        .collect();
    let values: Vec<f64> = abscissae.par_iter().map(|&x| f(x)).collect::<Result<_>>()?;

    let mut kronrod = WGK[7] * values[7];
    let mut gauss = WG[3] * values[7];
    for j in 0..7 {
        let pair = values[j] + values[14 - j];
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Ok(Panel { a, b, value, error })
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        len => {
            let (l, r) = xs.split_at(len / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// Integrate `f` over `[a, b]` with initial breakpoints `breaks` (interior
/// points where the integrand is known to have a kink).
pub fn integrate<F>(f: F, a: f64, b: f64, breaks: &[f64], opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(b > a) {
        return Ok(QuadResult { value: 0.0, abs_error: 0.0, evaluations: 0, panels: 0 });
    }
    let mut edges = vec![a];
    let mut interior: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    interior.sort_by(f64::total_cmp);
    edges.extend(interior);
    edges.push(b);

    let mut panels = Vec::new();
    for w in edges.windows(2) {
        if w[1] > w[0] {
            panels.push(gk15(&f, w[0], w[1])?);
        }
    }
    let mut evaluations = 15 * panels.len();

    loop {
        let values: Vec<f64> = panels.iter().map(|p| p.value).collect();
        let errors: Vec<f64> = panels.iter().map(|p| p.error).collect();
        let value = pairwise_sum(&values);
        let error = pairwise_sum(&errors);
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            return Ok(QuadResult { value, abs_error: error, evaluations, panels: panels.len() });
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::Quadrature { estimate: value, error });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one panel");
        let p = panels[worst];
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            return Err(Error::Quadrature { estimate: value, error });
        }
        let left = gk15(&f, p.a, mid)?;
        let right = gk15(&f, mid, p.b)?;
        evaluations += 30;
        panels[worst] = left;
        panels.insert(worst + 1, right);
    }
}
