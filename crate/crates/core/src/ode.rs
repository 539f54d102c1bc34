//! Explicit adaptive Runge-Kutta integrator, Dormand-Prince 5(4).
//!
//! States are flat `f64` slices; matrices are packed row-major by the callers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `None` picks one from the horizon.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }
}

/// What the step observer wants the integrator to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone)]
pub struct OdeOutcome {
    pub t: f64,
    pub y: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    /// `true` when the observer requested an early stop.
    pub stopped: bool,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th order weights minus embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `y' = f(t, y)` from `t0` to `t1 > t0`.
///
/// `observer` runs after every accepted step with mutable access to the state
/// (used for symmetrization) and may stop the integration.
pub fn integrate<F, O>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<OdeOutcome>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &mut [f64]) -> Control,
{
    if !(t1 > t0) {
        return Err(Error::InvalidInput(format!(
            "integration interval must be increasing: [{t0}, {t1}]"
        )));
    }
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let span = t1 - t0;
    let mut h = opts.h_init.unwrap_or(span * 1e-3).min(opts.h_max).min(span);

    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    rhs(t, &y, &mut k[0]);

    let mut accepted = 0;
    let mut rejected = 0;
    let mut last_ratio: f64 = 1e-4;

    while t < t1 {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::StepBudget { t, steps: opts.max_steps });
        }
        let mut last = false;
        if t + h >= t1 || t + 1.01 * h >= t1 {
            h = t1 - t;
            last = true;
        }
        if h <= f64::EPSILON * t.abs().max(1e-300) * 4.0 || h < 1e-300 {
            return Err(Error::StepUnderflow { t, h });
        }

        let (k0, rest) = k.split_at_mut(1);
        let k0 = &k0[0];
        stage(&mut tmp, &y, h, &[(A21, k0)]);
        rhs(t + C2 * h, &tmp, &mut rest[0]);
        stage(&mut tmp, &y, h, &[(A31, k0), (A32, &rest[0])]);
        rhs(t + C3 * h, &tmp, &mut rest[1]);
        stage(&mut tmp, &y, h, &[(A41, k0), (A42, &rest[0]), (A43, &rest[1])]);
        rhs(t + C4 * h, &tmp, &mut rest[2]);
        stage(
            &mut tmp,
            &y,
            h,
            &[(A51, k0), (A52, &rest[0]), (A53, &rest[1]), (A54, &rest[2])],
        );
        rhs(t + C5 * h, &tmp, &mut rest[3]);
        stage(
            &mut tmp,
            &y,
            h,
            &[(A61, k0), (A62, &rest[0]), (A63, &rest[1]), (A64, &rest[2]), (A65, &rest[3])],
        );
        rhs(t + h, &tmp, &mut rest[4]);
        stage(
            &mut y_new,
            &y,
            h,
            &[(A71, k0), (A73, &rest[1]), (A74, &rest[2]), (A75, &rest[3]), (A76, &rest[4])],
        );
        rhs(t + h, &y_new, &mut rest[5]);

        let mut err_sq = 0.0;
        for i in 0..dim {
            let e = h
                * (E1 * k0[i]
                    + E3 * rest[1][i]
                    + E4 * rest[2][i]
                    + E5 * rest[3][i]
                    + E6 * rest[4][i]
                    + E7 * rest[5][i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / dim.max(1) as f64).sqrt();
        if !err.is_finite() {
            rejected += 1;
            h *= 0.1;
            continue;
        }

        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            accepted += 1;
            let control = observer(t, &mut y);
            if control == Control::Stop {
                return Ok(OdeOutcome { t, y, accepted, rejected, stopped: true });
            }
            // FSAL: the last stage is the derivative at the new point unless
            // the observer modified the state.
            rhs(t, &y, &mut k[0]);
            // PI step control.
            let err_c = err.max(1e-10);
            let fac = 0.9 * err_c.powf(-0.7 / 5.0) * last_ratio.powf(0.4 / 5.0);
            last_ratio = err_c;
            h = (h * fac.clamp(0.2, 10.0)).min(opts.h_max);
        } else {
            rejected += 1;
            h *= (0.9 * err.powf(-1.0 / 5.0)).max(0.2);
        }
    }
    Ok(OdeOutcome { t, y, accepted, rejected, stopped: false })
}

fn stage(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &Vec<f64>)]) {
    for i in 0..out.len() {
        let mut acc = 0.0;
        for (a, kv) in terms {
            acc += a * kv[i];
        }
        out[i] = y[i] + h * acc;
    }
}
