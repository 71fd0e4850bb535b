use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use anisym::harness::{self, exit_code, ScenarioConfig};
use anisym::radial::{smallest_eigenvalue_with, DriftSign};
use anisym::rearrange::{decreasing_rearrangement, MassProfile};
use anisym::{lambda_constant, GridFunction};

#[derive(Parser)]
#[command(name = "anisym", version, about = "Anisotropic Dirichlet problems and their symmetrized radial comparisons")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Scenario config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory or file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    tol_elliptic: Option<f64>,
    #[arg(long, global = true)]
    tol_radial: Option<f64>,
    /// Comparison margin η.
    #[arg(long, global = true)]
    margin: Option<f64>,
    /// Seed for random presets.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the constant Λ for the given α and p.
    Lambda {
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        exponents: Vec<f64>,
    },
    /// Decreasing rearrangement of a CSV grid field, written as a profile CSV.
    Rearrange { field: PathBuf },
    /// One stationary solve compared with the radial problem.
    Elliptic {
        /// Built-in scenario used when no --config is given.
        #[arg(long, default_value = "model-p2")]
        preset: String,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    /// Full anisotropic and symmetrized run with the comparison report.
    Parabolic {
        #[arg(long, default_value = "model-p2")]
        preset: String,
    },
    /// Smallest Dirichlet eigenvalue of the ball.
    Eigen {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Use the drift sign exactly as printed in the source formula.
        #[arg(long)]
        printed: bool,
    },
    /// Compare two trajectory directories (u: grid fields, v: profiles or fields).
    Compare {
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        v: PathBuf,
    },
}

fn load_config(global: &Global, preset: &str) -> anisym::Result<(ScenarioConfig, PathBuf)> {
    let (mut config, base) = match &global.config {
        Some(path) => (
            ScenarioConfig::load(path)?,
            path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
        ),
        None => (ScenarioConfig::preset(preset)?, PathBuf::from(".")),
    };
    if let Some(t) = global.tol_elliptic {
        config.tolerances.elliptic = t;
    }
    if let Some(t) = global.tol_radial {
        config.tolerances.radial = t;
    }
    if let Some(m) = global.margin {
        config.tolerances.margin = Some(m);
    }
    if let Some(s) = global.seed {
        config.seed = s;
    }
    Ok((config, base))
}

fn step_files(dir: &Path) -> anisym::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("step_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// A `v` step is either a profile CSV (`s,…`) or a grid field.
fn load_v_step(path: &Path) -> anisym::Result<anisym::RadialProfile> {
    let head = std::fs::read_to_string(path)?;
    if head.starts_with("s,") {
        anisym::RadialProfile::load_csv(path)
    } else {
        Ok(anisym::rearrange::radial_rearrangement(&GridFunction::load_csv(path)?))
    }
}

fn compare(global: &Global, u_dir: &Path, v_dir: &Path) -> anisym::Result<bool> {
    let times = anisym::parabolic::read_ledger_times(u_dir)?;
    let u_steps = step_files(u_dir)?
        .iter()
        .map(|p| GridFunction::load_csv(p).map(|g| decreasing_rearrangement(&g)))
        .collect::<anisym::Result<Vec<_>>>()?;
    let v_steps = step_files(v_dir)?
        .iter()
        .map(|p| load_v_step(p))
        .collect::<anisym::Result<Vec<_>>>()?;
    let eta = match global.margin {
        Some(m) => m,
        None => {
            let first = GridFunction::load_csv(&u_dir.join(anisym::parabolic::step_file_name(0)))?;
            let h = first.hx().max(first.hy());
            let delta = times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            10.0 * (h + delta + anisym::elliptic::DEFAULT_EPSILON.sqrt())
        }
    };
    let dominance = harness::verify_concentration_dominance(&u_steps, &v_steps, &times, eta)?;
    let report = harness::ComparisonReport::new("compare", dominance);
    match &global.out {
        Some(dir) => report.write(dir)?,
        None => print!("{}", report.to_json()?),
    }
    eprintln!(
        "max D_m = {:e} (margin {:e}): {}",
        report.dominance.max_gap,
        eta,
        if report.passed { "pass" } else { "FAIL" }
    );
    Ok(report.passed)
}

fn run(cli: Cli) -> anisym::Result<bool> {
    let global = &cli.global;
    match &cli.command {
        Command::Lambda { alphas, exponents } => {
            let value = lambda_constant(alphas, exponents, alphas.len())?;
            println!("{value:.17e}");
            Ok(true)
        }
        Command::Rearrange { field } => {
            let prof = decreasing_rearrangement(&GridFunction::load_csv(field)?);
            match &global.out {
                Some(path) => prof.save_csv(path)?,
                None => {
                    let stdout = std::io::stdout();
                    prof.write_csv(stdout.lock())?;
                }
            }
            Ok(true)
        }
        Command::Elliptic { preset, lambda } => {
            let (config, base) = load_config(global, preset)?;
            let cmp = harness::run_elliptic(&config, *lambda, &base, global.out.as_deref())?;
            println!(
                "D = {:e} at s = {} (margin {:e}), {} Newton iterations, total mass w* {} z* {}: {}",
                cmp.gap,
                cmp.at,
                cmp.margin,
                cmp.solve.iterations,
                decreasing_rearrangement(&cmp.solution).concentration_at(config.domain.measure()),
                cmp.radial_solution.concentration_at(config.domain.measure()),
                if cmp.passed { "pass" } else { "FAIL" }
            );
            Ok(cmp.passed)
        }
        Command::Parabolic { preset } => {
            let (config, base) = load_config(global, preset)?;
            let outcome = harness::run_scenario(&config, &base, global.out.as_deref())?;
            let r = &outcome.report;
            if global.out.is_none() {
                print!("{}", r.to_json()?);
            }
            eprintln!(
                "{}: max D_m = {:e} (margin {:e}), lorentz {:?}, decay {:?}: {}",
                r.name,
                r.dominance.max_gap,
                r.dominance.margin,
                r.checks.lorentz,
                r.checks.decay,
                if r.passed { "pass" } else { "FAIL" }
            );
            Ok(r.passed)
        }
        Command::Eigen { radius, dim, printed } => {
            let drift = if *printed { DriftSign::Printed } else { DriftSign::Standard };
            println!("{:.12}", smallest_eigenvalue_with(*radius, *dim, 1e-12, drift)?);
            Ok(true)
        }
        Command::Compare { u, v } => compare(global, u, v),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(true) => exit_code::PASS,
        Ok(false) => exit_code::VERIFICATION_FAILURE,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            harness::error_exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
