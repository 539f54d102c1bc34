use std::f64::consts::PI;

use rayon::prelude::*;

use sasakian_core::comparison::{self, CurvatureBounds, HForm};
use sasakian_core::distance_field::{verify_laplacian_comparison, SamplingBox, CUT_EXCLUSION};
use sasakian_core::geometry::Covector;
use sasakian_core::jacobi::{integrate_jacobi, CurvatureProfile};
use sasakian_core::models::{self, ModelKind, ModelSpace};
use sasakian_core::verify::{self, Suite};
use sasakian_core::volume::{ball_volume, bishop_check, VolumeMethod, VolumeOptions};

use crate::config::{fmt_float, Config};
use crate::error::CliError;
use crate::output::{Cell, Table};

/// Relative agreement required between numeric and closed-form conjugate times.
const CONJUGATE_TOL: f64 = 1e-8;
/// Allowed excess of a Bishop ratio over 1.
const BISHOP_TOL: f64 = 1e-3;

/// Table plus the failures that should turn the exit code to 1.
pub struct Outcome {
    pub table: Table,
    pub failures: Vec<String>,
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn unit_covector(cfg: &mut Config, n: usize) -> Result<Covector, CliError> {
    let dir = cfg.list_or("dir", &{
        let mut e = vec![0.0; 2 * n];
        e[0] = 1.0;
        e
    })?;
    if dir.len() != 2 * n {
        return Err(CliError::Usage(format!("--dir needs 2n = {} components, got {}", 2 * n, dir.len())));
    }
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(CliError::Usage("--dir must be nonzero".into()));
    }
    let z = cfg.f64_required("z")?;
    Ok(Covector::new(dir.iter().map(|x| x / norm).collect(), z)?)
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn geodesic(cfg: &mut Config) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let p = unit_covector(cfg, model.n)?;
    let duration = cfg.positive_f64_or("T", 2.0 * PI)?;
    let steps: usize = cfg.int_or("steps", 100)?;
    let tol = cfg.positive_f64_or("tol", 1e-12)?;
    let n = model.n;

    let (samples, mut names) = match model.kind {
        ModelKind::Heisenberg => {
            let mut names = vec!["t".to_string()];
            for j in 1..=n {
                names.push(format!("x{j}"));
                names.push(format!("y{j}"));
            }
            names.push("z".into());
            (models::heisenberg_geodesic(&p, duration, steps)?, names)
        }
        ModelKind::Hopf => {
            let mut names = vec!["t".to_string()];
            for j in 1..=n + 1 {
                names.push(format!("re{j}"));
                names.push(format!("im{j}"));
            }
            names.push("norm".into());
            (models::hopf_geodesic(&p, duration, steps)?, names)
        }
        ModelKind::ConstantCurvature => {
            return Err(CliError::Usage("geodesic needs --model heisenberg or hopf".into()));
        }
    };
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let numeric = match model.kind {
        ModelKind::Hopf => models::hopf_hamiltonian_flow(&p, &times, tol)?,
        _ => models::heisenberg_hamiltonian_flow(&p, &times, tol)?,
    };
    names.push("hamiltonian_dev".into());

    let mut table = Table::new(names);
    for (s, q) in samples.iter().zip(&numeric) {
        let mut row: Vec<Cell> = vec![s.t.into()];
        row.extend(s.x.iter().map(|&v| Cell::Float(v)));
        if model.kind == ModelKind::Hopf {
            row.push(s.x.iter().map(|v| v * v).sum::<f64>().sqrt().into());
        }
        row.push(sup_dist(&s.x, q).into());
        table.push(row);
    }
    Ok(Outcome { table, failures: Vec::new() })
}

pub fn conjugate(cfg: &mut Config) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let zs = cfg.list_or("z", &[0.0])?;
    let horizon = cfg.f64_opt("T")?;
    if horizon.is_some_and(|t| t <= 0.0) {
        return Err(CliError::Usage("--T must be positive".into()));
    }
    let tol = cfg.positive_f64_or("tol", 1e-11)?;
    let bounds = model.bounds();
    let r = 1.0;

    let rows = zs
        .par_iter()
        .map(|&z| -> Result<(Vec<Cell>, Option<String>), CliError> {
            let frak = comparison::frak(r, z, &bounds);
            let (b1, b2) = comparison::conjugate_bounds(r, z, &bounds);
            let min_bound = comparison::model_conjugate_time(frak, model.n);
            let end = horizon.unwrap_or(if min_bound.is_finite() { 1.5 * min_bound } else { 20.0 });
            let sol = integrate_jacobi(&CurvatureProfile::model(model.n, frak), end, tol)?;
            let numeric = sol.conjugate.map(|ev| ev.time);
            let status = match numeric {
                Some(t) if min_bound.is_finite() && (t - min_bound).abs() <= CONJUGATE_TOL * min_bound => "equal",
                None if min_bound > end => "none_within_horizon",
                _ => "mismatch",
            };
            let failure = (status == "mismatch")
                .then(|| format!("z = {z}: numeric {numeric:?} vs bound {}", fmt_float(min_bound)));
            let finite = |b: f64| if b.is_finite() { Cell::Float(b) } else { Cell::Missing };
            let row = vec![
                r.into(),
                z.into(),
                numeric.into(),
                finite(b1),
                finite(b2),
                finite(min_bound),
                end.into(),
                status.into(),
            ];
            Ok((row, failure))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(columns(&[
        "r",
        "z",
        "t_conj_numeric",
        "bound1",
        "bound2",
        "min_bound",
        "horizon",
        "status",
    ]));
    let mut failures = Vec::new();
    for (row, failure) in rows {
        table.push(row);
        failures.extend(failure);
    }
    Ok(Outcome { table, failures })
}

fn reference_model(name: &str, n: usize) -> Result<ModelSpace, CliError> {
    match name {
        "heisenberg" => Ok(ModelSpace::heisenberg(n)?),
        "hopf" => Ok(ModelSpace::hopf(n)?),
        other => Err(CliError::Usage(format!("unknown --reference '{other}' (expected heisenberg or hopf)"))),
    }
}

pub fn volume(cfg: &mut Config) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let radii = cfg.list_or("R", &[1.0])?;
    if radii.iter().any(|&r| r <= 0.0) {
        return Err(CliError::Usage("--R entries must be positive".into()));
    }
    let mut opts = VolumeOptions { rel_tol: cfg.positive_f64_or("tol", 1e-9)?, ..VolumeOptions::default() };
    match cfg.string_or("method", "quadrature").as_str() {
        "quadrature" => {}
        "montecarlo" => {
            let samples: usize = cfg.int_or("samples", 100_000)?;
            let seed: u64 = cfg.int_or("seed", 0)?;
            if samples < 2 {
                return Err(CliError::Usage("--samples must be at least 2".into()));
            }
            opts.method = VolumeMethod::MonteCarlo { samples, seed };
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown --method '{other}' (expected quadrature or montecarlo)"
            )))
        }
    }

    if let Some(reference) = cfg.string_opt("reference") {
        let reference = reference_model(&reference, model.n)?;
        let rows = bishop_check(&model, &reference, &radii, &opts)?;
        let mut table = Table::new(columns(&["R", "vol_model", "vol_reference", "ratio", "abs_error", "status"]));
        let mut failures = Vec::new();
        for row in rows {
            let ok = row.ratio <= 1.0 + BISHOP_TOL;
            if !ok {
                failures.push(format!("R = {}: ratio {}", row.radius, fmt_float(row.ratio)));
            }
            table.push(vec![
                row.radius.into(),
                row.vol_model.into(),
                row.vol_reference.into(),
                row.ratio.into(),
                row.abs_error.into(),
                (if ok { "ok" } else { "violated" }).into(),
            ]);
        }
        return Ok(Outcome { table, failures });
    }

    let results = radii
        .par_iter()
        .map(|&r| ball_volume(&model, r, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(columns(&[
        "R",
        "volume",
        "abs_error",
        "outer_evaluations",
        "outer_panels",
        "ode_steps",
    ]));
    for v in results {
        table.push(vec![
            v.radius.into(),
            v.value.into(),
            v.abs_error_estimate.into(),
            v.nodes.outer_evaluations.into(),
            v.nodes.outer_panels.into(),
            v.nodes.ode_steps.into(),
        ]);
    }
    Ok(Outcome { table, failures: Vec::new() })
}

pub fn laplacian(cfg: &mut Config) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    if model.kind != ModelKind::Heisenberg {
        return Err(CliError::Usage("laplacian is only available for --model heisenberg".into()));
    }
    let n = model.n;
    let samples: usize = cfg.int_or("samples", 200)?;
    let seed: u64 = cfg.int_or("seed", 42)?;
    let form: HForm = cfg.string_or("h-form", "sharp").parse()?;
    let tol = cfg.positive_f64_or("tol", 1e-4)?;
    let region = SamplingBox::default();
    cfg.record("box_half_width", fmt_float(region.half_width));
    cfg.record("box_z_half", fmt_float(region.z_half));
    cfg.record("cut_exclusion", fmt_float(CUT_EXCLUSION));

    let sweep = verify_laplacian_comparison(n, samples, seed, &region, form)?;
    let bounds = CurvatureBounds::new(0.0, 0.0, n)?;

    let mut names = vec!["i".to_string()];
    for j in 1..=n {
        names.push(format!("x{j}"));
        names.push(format!("y{j}"));
    }
    names.extend(
        ["z", "d", "v0d", "lap_h", "h", "margin", "h_sharp", "h_trace", "h_displayed", "grad_norm"]
            .map(String::from),
    );
    let mut table = Table::new(names);
    let mut failures = Vec::new();
    for (i, s) in sweep.iter().enumerate() {
        if s.margin < -tol {
            failures.push(format!("sample {i}: margin {}", fmt_float(s.margin)));
        }
        let alt = |f: HForm| Cell::from(comparison::laplace_h(s.d, s.v0d, &bounds, f).ok());
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(s.x.iter().map(|&v| Cell::Float(v)));
        row.extend([
            s.d.into(),
            s.v0d.into(),
            s.lap_h.into(),
            s.bound.into(),
            s.margin.into(),
            alt(HForm::Sharp),
            alt(HForm::TraceBound),
            alt(HForm::Displayed),
            s.grad_norm.into(),
        ]);
        table.push(row);
    }
    Ok(Outcome { table, failures })
}

pub fn verify(cfg: &mut Config) -> Result<Outcome, CliError> {
    let suite: Suite = cfg.string_or("suite", "all").parse()?;
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    let mut table = Table::new(columns(&[
        "criterion",
        "suite",
        "title",
        "check",
        "passed",
        "value",
        "tolerance",
        "detail",
    ]));
    let mut failures = Vec::new();
    for s in suites {
        match verify::run(s) {
            Ok(report) => {
                for c in &report.checks {
                    if !c.passed {
                        failures.push(format!("criterion {} [{}]: {}", report.id, s, c.name));
                    }
                    table.push(vec![
                        Cell::Int(report.id as u64),
                        s.name().into(),
                        report.title.into(),
                        c.name.as_str().into(),
                        c.passed.into(),
                        c.value.into(),
                        c.tolerance.into(),
                        c.detail.as_str().into(),
                    ]);
                }
            }
            Err(e) => {
                failures.push(format!("[{s}]: {e}"));
                table.push(vec![
                    Cell::Missing,
                    s.name().into(),
                    Cell::Missing,
                    "error".into(),
                    false.into(),
                    Cell::Missing,
                    Cell::Missing,
                    e.to_string().into(),
                ]);
            }
        }
    }
    Ok(Outcome { table, failures })
}
