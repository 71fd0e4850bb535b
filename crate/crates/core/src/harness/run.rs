use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::aniso::AnisotropicCoefficients;
use crate::elliptic::{solve_elliptic, EllipticProblem, SolveReport};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::harness::config::ScenarioConfig;
use crate::harness::report::{
    decay_report_for_domain, lorentz_dominance_report, verify_concentration_dominance, ComparisonReport,
    DominatingSummary,
};
use crate::parabolic::{
    advance_anisotropic, advance_symmetrized, energy_monitor, write_symmetrized, write_trajectory,
    ParabolicScenario, SymmetrizedScenario, SymmetrizedTrajectory, TrajectoryRecord,
};
use crate::radial::{
    max_concentration_gap, radial_elliptic_solve_from, RadialEllipticProblem, RadialProfile, RadialSolveReport,
};
use crate::rearrange::{decreasing_rearrangement, profile_to_radial, DecreasingProfile, MassProfile};

/// Absolute tolerance for the load-time dominance check of replacement data.
const DOMINANCE_LOAD_TOL: f64 = 1e-12;

pub struct RunOutcome {
    pub report: ComparisonReport,
    pub trajectory: TrajectoryRecord,
    pub symmetrized: SymmetrizedTrajectory,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.report.passed
    }
}

fn load_dominating(path: &Path, base: &Path, field: &str, measure: f64) -> Result<DecreasingProfile> {
    let prof = DecreasingProfile::load_csv(&base.join(path)).map_err(|e| Error::config(field, e.to_string()))?;
    if (prof.measure() - measure).abs() > 1e-9 * measure {
        return Err(Error::config(
            field,
            format!("profile measure {} differs from |Ω| = {measure}", prof.measure()),
        ));
    }
    Ok(prof)
}

fn require_dominates(small: &DecreasingProfile, big: &DecreasingProfile, field: &str, what: &str) -> Result<()> {
    let (gap, at) = max_concentration_gap(small, big);
    let scale = small.concentration_at(small.measure()).abs().max(1.0);
    if gap > DOMINANCE_LOAD_TOL * scale {
        return Err(Error::config(
            field,
            format!("profile does not dominate {what}: concentration gap {gap:e} at s = {at}"),
        ));
    }
    Ok(())
}

/// Runs a scenario end to end. Relative paths in the config resolve
/// against `base`; artifacts are written to `out` when given.
pub fn run_scenario(config: &ScenarioConfig, base: &Path, out: Option<&Path>) -> Result<RunOutcome> {
    let coeffs = config.validate()?;
    let time_grid = config.time_grid()?;
    let u0 = config.build_field(&config.u0, "u0", base)?;
    let source = config.build_source(base)?;
    let measure = config.domain.measure();

    let dom = &config.dominating;
    let source_dom = dom
        .source_profile
        .as_ref()
        .map(|p| load_dominating(p, base, "dominating.source_profile", measure))
        .transpose()?;
    let initial_dom = dom
        .initial_profile
        .as_ref()
        .map(|p| load_dominating(p, base, "dominating.initial_profile", measure))
        .transpose()?;
    let u0_star = decreasing_rearrangement(&u0);
    if let Some(big) = &initial_dom {
        require_dominates(&u0_star, big, "dominating.initial_profile", "the rearranged initial datum")?;
    }

    let scenario = ParabolicScenario {
        coeffs: coeffs.clone(),
        u0: u0.clone(),
        source,
        time_grid: time_grid.clone(),
        options: config.step_options(),
    };
    let trajectory = advance_anisotropic(&scenario)?;

    let data: Vec<DecreasingProfile> = match &source_dom {
        Some(big) => {
            for (m, f) in trajectory.sources.iter().enumerate() {
                let fm = decreasing_rearrangement(f);
                require_dominates(
                    &fm,
                    big,
                    "dominating.source_profile",
                    &format!("the rearranged source of step {}", m + 1),
                )?;
            }
            vec![big.clone(); trajectory.sources.len()]
        }
        None => trajectory.sources.iter().map(decreasing_rearrangement).collect(),
    };
    let v0 = profile_to_radial(initial_dom.as_ref().unwrap_or(&u0_star));
    let symmetrized = advance_symmetrized(&SymmetrizedScenario {
        time_grid: time_grid.clone(),
        v0,
        data,
        settings: config.radial_settings(&coeffs),
    })?;

    let report = build_report(config, &coeffs, &trajectory, &symmetrized, source_dom.is_some(), initial_dom.is_some())?;
    if let Some(dir) = out {
        report.write(dir)?;
        write_trajectory(&trajectory, &dir.join("steps").join("u"))?;
        write_symmetrized(&symmetrized, &dir.join("steps").join("v"))?;
    }
    Ok(RunOutcome {
        report,
        trajectory,
        symmetrized,
    })
}

fn build_report(
    config: &ScenarioConfig,
    coeffs: &AnisotropicCoefficients,
    traj: &TrajectoryRecord,
    sym: &SymmetrizedTrajectory,
    source_dom: bool,
    initial_dom: bool,
) -> Result<ComparisonReport> {
    let eta = config.margin();
    let times = traj.time_grid.nodes();
    let u_steps: Vec<DecreasingProfile> = traj.fields.iter().map(decreasing_rearrangement).collect();
    let dominance = verify_concentration_dominance(&u_steps, &sym.profiles, times, eta)?;
    let lorentz = lorentz_dominance_report(&u_steps, &sym.profiles, times, &config.report.lorentz, eta)?;
    let decay = if config.report.decay {
        Some(decay_report_for_domain(traj, coeffs, config.report.decay_slack)?)
    } else {
        None
    };
    let mut report = ComparisonReport::new(config.name.clone(), dominance)
        .with_lorentz(lorentz, !config.report.lorentz.is_empty())
        .with_decay(decay);
    report.lambda_const = coeffs.lambda_const();
    report.pbar = coeffs.pbar();
    report.seed = config.seed;
    report.energy = Some(energy_monitor(traj, coeffs));
    if source_dom || initial_dom {
        report.dominating = Some(DominatingSummary {
            source: source_dom,
            initial: initial_dom,
            implies_rearranged_run_passes: report.checks.dominance,
        });
    }
    report.config = Some(config.clone());
    Ok(report)
}

/// Loads a JSON config and runs it; relative paths resolve against the
/// config's directory.
pub fn run_scenario_file(path: &Path, out: Option<&Path>) -> Result<RunOutcome> {
    let config = ScenarioConfig::load(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    run_scenario(&config, &base, out)
}

/// One stationary anisotropic solve compared with its symmetrized radial
/// counterpart.
#[derive(Debug, Clone, Serialize)]
pub struct EllipticComparison {
    pub lambda0: f64,
    pub lambda_const: f64,
    pub pbar: f64,
    pub solve: SolveReport,
    pub radial: RadialSolveReport,
    /// `max_s [∫₀^s w* − ∫₀^s z]`.
    pub gap: f64,
    pub at: f64,
    pub margin: f64,
    pub passed: bool,
    #[serde(skip)]
    pub solution: GridFunction,
    #[serde(skip)]
    pub radial_solution: RadialProfile,
}

/// Solves `−div a(∇w) + λ w = g` with `g` the config source at `t = 0`,
/// the symmetrized radial problem with `g*`, and compares concentrations.
/// The margin is the config margin, or `10 (h + ε^{1/2})` by default.
pub fn run_elliptic(config: &ScenarioConfig, lambda0: f64, base: &Path, out: Option<&Path>) -> Result<EllipticComparison> {
    let coeffs = config.validate()?;
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(Error::config("lambda", "must be positive"));
    }
    let g = config.build_source(base)?.sample(0.0)?;
    let prob = EllipticProblem::new(coeffs.clone(), lambda0, g.clone())?.with_epsilon(config.tolerances.epsilon);
    let (w, solve) = solve_elliptic(&prob, config.tolerances.elliptic, config.tolerances.max_iter)?;
    let settings = config.radial_settings(&coeffs);
    let rprob = RadialEllipticProblem {
        lambda_const: coeffs.lambda_const(),
        pbar: coeffs.pbar(),
        lambda0,
        dim: 2,
        domain_measure: config.domain.measure(),
        rhs_profile: decreasing_rearrangement(&g),
        carry: None,
    };
    let (z, radial) = radial_elliptic_solve_from(&rprob, &settings, None)?;
    let (gap, at) = max_concentration_gap(&decreasing_rearrangement(&w), &z);
    let margin = config.tolerances.margin.unwrap_or_else(|| {
        let h = config.domain.hx().max(config.domain.hy());
        10.0 * (h + config.tolerances.epsilon.sqrt())
    });
    let cmp = EllipticComparison {
        lambda0,
        lambda_const: coeffs.lambda_const(),
        pbar: coeffs.pbar(),
        solve,
        radial,
        gap,
        at,
        margin,
        passed: gap <= margin,
        solution: w,
        radial_solution: z,
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let mut json = serde_json::to_string_pretty(&cmp)?;
        json.push('\n');
        std::fs::write(dir.join("elliptic.json"), json)?;
        cmp.solution.save_csv(&dir.join("solution.csv"))?;
        cmp.radial_solution.save_csv(&dir.join("radial.csv"))?;
    }
    Ok(cmp)
}
