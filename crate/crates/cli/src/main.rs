//! `sasakian`: reproducible runs of the comparison-geometry verifications.

mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;
use error::CliError;
use output::Format;

#[derive(Parser, Debug)]
#[command(name = "sasakian", version, about = "Comparison geometry on Sasakian model spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a closed-form geodesic from the base point.
    #[command(after_help = "CSV columns:
  heisenberg: t, x1, y1, ..., xn, yn, z, hamiltonian_dev
  hopf:       t, re1, im1, ..., re(n+1), im(n+1), norm, hamiltonian_dev
hamiltonian_dev is the sup-norm distance to direct Hamiltonian integration at tolerance --tol.
--z is required; --dir defaults to (1, 0, ..., 0) and is normalized.")]
    Geodesic(Flags),
    /// First conjugate time of the model Jacobi system against the bounds.
    #[command(after_help = "CSV columns: r, z, t_conj_numeric, bound1, bound2, min_bound, horizon, status
bound1 = 2 pi / sqrt(z^2 + k1 r^2), bound2 = 2 pi / sqrt(z^2 + 4 k2 r^2), r = 1.
status is equal, none_within_horizon or mismatch; any mismatch exits 1. --z takes a list.")]
    Conjugate(Flags),
    /// Volume of sub-Riemannian balls, optionally against a reference model.
    #[command(after_help = "CSV columns:
  without --reference: R, volume, abs_error, outer_evaluations, outer_panels, ode_steps
  with --reference:    R, vol_model, vol_reference, ratio, abs_error, status
A ratio above 1 + 1e-3 exits 1. --R takes a list; --method quadrature|montecarlo.")]
    Volume(Flags),
    /// Sub-Laplacian of the Heisenberg distance against the comparison function.
    #[command(after_help = "CSV columns: i, x1, y1, ..., z, d, v0d, lap_h, h, margin, h_sharp, h_trace, h_displayed, grad_norm
h is the form selected by --h-form (sharp, trace, displayed); margin = h - lap_h.
A margin below -tol (default 1e-4) exits 1.")]
    Laplacian(Flags),
    /// Run the acceptance suite.
    #[command(after_help = "CSV columns: criterion, suite, title, check, passed, value, tolerance, detail
--suite is one of all, riccati, detb, conjugate, geodesic, cut, bishop, laplacian, crosscheck.
Any failing check exits 1.")]
    Verify(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// heisenberg, hopf or constant
    #[arg(long)]
    model: Option<String>,
    /// Complex dimension; the manifold has dimension 2n + 1
    #[arg(long)]
    n: Option<String>,
    /// Curvature bound k1 (constant model)
    #[arg(long, allow_hyphen_values = true)]
    k1: Option<String>,
    /// Curvature bound k2 (constant model)
    #[arg(long, allow_hyphen_values = true)]
    k2: Option<String>,
    /// Horizontal direction, 2n comma-separated values
    #[arg(long, allow_hyphen_values = true)]
    dir: Option<String>,
    /// Reeb component of the covector
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    /// Ball radii, comma-separated
    #[arg(long = "R", allow_hyphen_values = true)]
    radii: Option<String>,
    /// Duration or horizon
    #[arg(long = "T", allow_hyphen_values = true)]
    duration: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<String>,
    /// Flat key=value file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reference model for volume comparison: heisenberg or hopf
    #[arg(long)]
    reference: Option<String>,
    /// Laplacian comparison form: sharp, trace or displayed
    #[arg(long = "h-form")]
    h_form: Option<String>,
    /// Acceptance suite for verify
    #[arg(long)]
    suite: Option<String>,
    /// Volume method: quadrature or montecarlo
    #[arg(long)]
    method: Option<String>,
}

impl Flags {
    fn into_config(self) -> Result<Config, CliError> {
        let pairs = vec![
            ("model", self.model),
            ("n", self.n),
            ("k1", self.k1),
            ("k2", self.k2),
            ("dir", self.dir),
            ("z", self.z),
            ("R", self.radii),
            ("T", self.duration),
            ("steps", self.steps),
            ("samples", self.samples),
            ("seed", self.seed),
            ("tol", self.tol),
            ("format", self.format),
            ("out", self.out),
            ("reference", self.reference),
            ("h-form", self.h_form),
            ("suite", self.suite),
            ("method", self.method),
        ];
        Config::load(pairs, self.config.as_deref())
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("SASAKI_THREADS") {
        let threads: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| CliError::Usage(format!("SASAKI_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (name, flags, cmd): (&str, Flags, fn(&mut Config) -> Result<commands::Outcome, CliError>) = match cli.command {
        Command::Geodesic(f) => ("geodesic", f, commands::geodesic),
        Command::Conjugate(f) => ("conjugate", f, commands::conjugate),
        Command::Volume(f) => ("volume", f, commands::volume),
        Command::Laplacian(f) => ("laplacian", f, commands::laplacian),
        Command::Verify(f) => ("verify", f, commands::verify),
    };
    let mut cfg = flags.into_config()?;
    let format: Format = cfg.string_or("format", "csv").parse()?;
    let out = cfg.string_opt("out");
    let outcome = cmd(&mut cfg)?;
    let text = output::render(format, name, cfg.resolved(), &outcome.table);
    match out {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| CliError::Usage(format!("cannot write --out {path}: {e}")))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Numerical(format!("cannot write output: {e}")))?;
        }
    }
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "{} failing check(s): {}",
            outcome.failures.len(),
            outcome.failures.join("; ")
        )))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::Usage(first).to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
