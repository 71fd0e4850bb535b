//! Rothe time discretization.
//!
//! Step `m` (1 ≤ m ≤ M) with `τ_m = t_m − t_{m−1}` solves the elliptic
//! problem with `λ = 1/τ_m` and data `f^m + u^{m−1}/τ_m`, where `f^m` is the
//! mean of `f` over `[t_{m−1}, t_m]`. The symmetrized trajectory uses the same
//! grid with data `(f^m)* + v^{m−1}/τ_m` in the mass coordinate.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::aniso::AnisotropicCoefficients;
use crate::elliptic::{solve_elliptic_from, EllipticProblem, DEFAULT_EPSILON, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::radial::{radial_parabolic_step, RadialProfile, RadialSettings};
use crate::rearrange::{DecreasingProfile, MassProfile};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) || steps == 0 {
            return Err(Error::invalid(format!(
                "uniform time grid needs T > 0 and M >= 1, got T={t_final}, M={steps}"
            )));
        }
        let nodes = (0..=steps)
            .map(|m| if m == steps { t_final } else { t_final * m as f64 / steps as f64 })
            .collect();
        Ok(Self { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return Err(Error::invalid("time grid must start at 0 and contain at least two nodes"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("time nodes must increase strictly"));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of steps `M`.
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn final_time(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// `τ_m = t_m − t_{m−1}` for `1 ≤ m ≤ M`.
    pub fn tau(&self, m: usize) -> f64 {
        self.nodes[m] - self.nodes[m - 1]
    }

    /// Largest step `δ(M)`.
    pub fn delta(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// A time-dependent source sampled on the scenario grid.
pub trait SourceField: Send + Sync {
    fn sample(&self, t: f64) -> Result<GridFunction>;

    /// True when the source vanishes identically.
    fn is_zero(&self) -> bool {
        false
    }
}

/// Time-independent source.
#[derive(Debug, Clone)]
pub struct ConstantSource(pub GridFunction);

impl SourceField for ConstantSource {
    fn sample(&self, _t: f64) -> Result<GridFunction> {
        Ok(self.0.clone())
    }

    fn is_zero(&self) -> bool {
        self.0.values().iter().all(|v| *v == 0.0)
    }
}

type SpaceTimeFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;

/// `f(x, y, t)` sampled at cell centres of `[0, lx] × [0, ly]`.
pub struct AnalyticSource {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    f: Box<SpaceTimeFn>,
}

impl AnalyticSource {
    pub fn new(
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            nx,
            ny,
            lx,
            ly,
            f: Box::new(f),
        }
    }
}

impl SourceField for AnalyticSource {
    fn sample(&self, t: f64) -> Result<GridFunction> {
        GridFunction::from_fn(self.nx, self.ny, self.lx, self.ly, |x, y| (self.f)(x, y, t))
    }
}

/// Fields given at increasing times; field `k` holds on `[t_k, t_{k+1})` and
/// the last one from its time onwards.
#[derive(Debug, Clone)]
pub struct FieldStack {
    times: Vec<f64>,
    fields: Vec<GridFunction>,
}

impl FieldStack {
    pub fn new(times: Vec<f64>, fields: Vec<GridFunction>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::invalid("field stack needs one time per field"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("field stack times must increase"));
        }
        if fields.iter().any(|f| !f.same_grid(&fields[0])) {
            return Err(Error::GridMismatch("field stack mixes grids".into()));
        }
        Ok(Self { times, fields })
    }
}

impl SourceField for FieldStack {
    fn sample(&self, t: f64) -> Result<GridFunction> {
        let k = self.times.partition_point(|s| *s <= t).saturating_sub(1);
        Ok(self.fields[k].clone())
    }

    fn is_zero(&self) -> bool {
        self.fields.iter().all(|f| f.values().iter().all(|v| *v == 0.0))
    }
}

/// Cellwise mean of the source over `[t_lo, t_hi]` by the composite midpoint
/// rule with `quad_points` subintervals.
pub fn source_time_average(
    source: &dyn SourceField,
    t_lo: f64,
    t_hi: f64,
    quad_points: usize,
) -> Result<GridFunction> {
    if !(t_hi > t_lo) || quad_points == 0 {
        return Err(Error::invalid(format!(
            "time average needs t_lo < t_hi and at least one point, got [{t_lo}, {t_hi}], {quad_points}"
        )));
    }
    let width = (t_hi - t_lo) / quad_points as f64;
    let mut acc: Option<Vec<f64>> = None;
    let mut template = None;
    for q in 0..quad_points {
        let field = source.sample(t_lo + (q as f64 + 0.5) * width)?;
        match acc.as_mut() {
            None => acc = Some(field.values().to_vec()),
            Some(a) => {
                field.check_same_grid(template.as_ref().unwrap())?;
                a.iter_mut().zip(field.values()).for_each(|(x, y)| *x += y);
            }
        }
        if template.is_none() {
            template = Some(field);
        }
    }
    let sum = acc.unwrap();
    template
        .unwrap()
        .with_values(sum.into_iter().map(|v| v / quad_points as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub epsilon: f64,
    pub quad_points: usize,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            epsilon: DEFAULT_EPSILON,
            quad_points: 4,
        }
    }
}

pub struct ParabolicScenario {
    pub coeffs: AnisotropicCoefficients,
    pub u0: GridFunction,
    pub source: Box<dyn SourceField>,
    pub time_grid: TimeGrid,
    pub options: StepOptions,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepLedger {
    pub m: usize,
    pub t: f64,
    /// `‖u^m‖₂²`.
    pub l2_sq: f64,
    /// `Σ_faces |D_i u^m|^{p_i} |cell|` per axis.
    pub grad_energies: Vec<f64>,
    /// `‖u^m‖² − ‖u^{m−1}‖² + ‖u^m − u^{m−1}‖²` (zero at `m = 0`).
    pub dissipation: f64,
    pub iterations: usize,
}

/// Anisotropic trajectory `u^0, …, u^M` with the averaged sources `f^1, …, f^M`.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub time_grid: TimeGrid,
    pub fields: Vec<GridFunction>,
    pub sources: Vec<GridFunction>,
    pub ledger: Vec<StepLedger>,
}

fn ledger_entry(
    m: usize,
    t: f64,
    u: &GridFunction,
    prev: Option<&GridFunction>,
    exponents: &[f64],
    iterations: usize,
) -> Result<StepLedger> {
    let l2_sq = u.l2_norm_sq();
    let grad_energies = exponents
        .iter()
        .enumerate()
        .map(|(axis, p)| u.gradient_power_sum(axis, *p))
        .collect();
    let dissipation = match prev {
        Some(p) => l2_sq - p.l2_norm_sq() + u.add_scaled(p, -1.0)?.l2_norm_sq(),
        None => 0.0,
    };
    Ok(StepLedger {
        m,
        t,
        l2_sq,
        grad_energies,
        dissipation,
        iterations,
    })
}

pub fn advance_anisotropic(scenario: &ParabolicScenario) -> Result<TrajectoryRecord> {
    let grid = &scenario.time_grid;
    let opts = scenario.options;
    let exps = scenario.coeffs.exponents().to_vec();
    let mut fields = vec![scenario.u0.clone()];
    let mut sources = Vec::with_capacity(grid.steps());
    let mut ledger = vec![ledger_entry(0, 0.0, &scenario.u0, None, &exps, 0)?];
    for m in 1..=grid.steps() {
        let tau = grid.tau(m);
        let f_m = source_time_average(scenario.source.as_ref(), grid.nodes()[m - 1], grid.nodes()[m], opts.quad_points)
            .map_err(|e| Error::at_step(m, e))?;
        let prev = &fields[m - 1];
        let rhs = f_m.add_scaled(prev, 1.0 / tau).map_err(|e| Error::at_step(m, e))?;
        let prob = EllipticProblem::new(scenario.coeffs.clone(), 1.0 / tau, rhs)
            .map_err(|e| Error::at_step(m, e))?
            .with_epsilon(opts.epsilon);
        let (u, report) =
            solve_elliptic_from(&prob, Some(prev), opts.tol, opts.max_iter).map_err(|e| Error::at_step(m, e))?;
        ledger.push(ledger_entry(m, grid.nodes()[m], &u, Some(prev), &exps, report.iterations)?);
        fields.push(u);
        sources.push(f_m);
    }
    Ok(TrajectoryRecord {
        time_grid: grid.clone(),
        fields,
        sources,
        ledger,
    })
}

/// Symmetrized scenario: initial profile, per-step data profiles
/// (`(f^m)*` or a dominating replacement) and the radial settings.
#[derive(Debug, Clone)]
pub struct SymmetrizedScenario {
    pub time_grid: TimeGrid,
    pub v0: RadialProfile,
    pub data: Vec<DecreasingProfile>,
    pub settings: RadialSettings,
}

#[derive(Debug, Clone)]
pub struct SymmetrizedTrajectory {
    pub time_grid: TimeGrid,
    pub profiles: Vec<RadialProfile>,
}

impl SymmetrizedTrajectory {
    pub fn l2_norms(&self) -> Vec<f64> {
        self.profiles.iter().map(|p| p.integral_of_square().sqrt()).collect()
    }
}

pub fn advance_symmetrized(scenario: &SymmetrizedScenario) -> Result<SymmetrizedTrajectory> {
    let grid = &scenario.time_grid;
    if scenario.data.len() != grid.steps() {
        return Err(Error::invalid(format!(
            "symmetrized scenario has {} data profiles for {} steps",
            scenario.data.len(),
            grid.steps()
        )));
    }
    let measure = scenario.settings.measure;
    if (scenario.v0.measure() - measure).abs() > 1e-9 * measure {
        return Err(Error::GridMismatch("initial profile measure differs from |Ω|".into()));
    }
    let mut profiles = vec![scenario.v0.clone()];
    for m in 1..=grid.steps() {
        let v = radial_parabolic_step(&profiles[m - 1], grid.tau(m), &scenario.data[m - 1], &scenario.settings)
            .map_err(|e| Error::at_step(m, e))?;
        profiles.push(v);
    }
    Ok(SymmetrizedTrajectory {
        time_grid: grid.clone(),
        profiles,
    })
}

/// A priori bound ingredients for a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyMonitor {
    /// `sup_m ‖u^m‖₂²`.
    pub sup_l2_sq: f64,
    /// `Σ_i α_i Σ_m τ_m Σ_faces |D_i u^m|^{p_i} |cell|`.
    pub weighted_gradient_total: f64,
    /// Per-step `‖u^m‖² − ‖u^{m−1}‖² + ‖u^m − u^{m−1}‖²`, `m ≥ 1`.
    pub dissipation: Vec<f64>,
    /// Largest increase `‖u^m‖₂ − ‖u^{m−1}‖₂` over the run.
    pub max_l2_increase: f64,
    /// `sup + weighted total`, finite for any completed run.
    pub total: f64,
}

pub fn energy_monitor(traj: &TrajectoryRecord, coeffs: &AnisotropicCoefficients) -> EnergyMonitor {
    let grid = &traj.time_grid;
    let sup_l2_sq = traj.ledger.iter().map(|l| l.l2_sq).fold(0.0, f64::max);
    let mut weighted_gradient_total = 0.0;
    for l in traj.ledger.iter().skip(1) {
        let tau = grid.tau(l.m);
        for (alpha, e) in coeffs.alphas().iter().zip(&l.grad_energies) {
            weighted_gradient_total += alpha * tau * e;
        }
    }
    let dissipation = traj.ledger.iter().skip(1).map(|l| l.dissipation).collect();
    let max_l2_increase = traj
        .ledger
        .windows(2)
        .map(|w| w[1].l2_sq.sqrt() - w[0].l2_sq.sqrt())
        .fold(f64::NEG_INFINITY, f64::max);
    EnergyMonitor {
        sup_l2_sq,
        weighted_gradient_total,
        dissipation,
        max_l2_increase,
        total: sup_l2_sq + weighted_gradient_total,
    }
}

/// Writes `ledger.csv` and `step_XXXX.csv` for each field into `dir`.
pub fn write_trajectory(traj: &TrajectoryRecord, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut wtr = csv::Writer::from_path(dir.join("ledger.csv"))?;
    let axes = traj.ledger.first().map_or(0, |l| l.grad_energies.len());
    let mut header = vec!["m".to_string(), "t_m".to_string(), "l2".to_string()];
    header.extend((0..axes).map(|i| format!("grad_energy_{i}")));
    header.push("dissipation".into());
    wtr.write_record(&header)?;
    for l in &traj.ledger {
        let mut row = vec![l.m.to_string(), l.t.to_string(), l.l2_sq.sqrt().to_string()];
        row.extend(l.grad_energies.iter().map(|e| e.to_string()));
        row.push(l.dissipation.to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    for (m, u) in traj.fields.iter().enumerate() {
        u.save_csv(&dir.join(step_file_name(m)))?;
    }
    Ok(())
}

/// Writes `ledger.csv` (m, t_m, l2) and per-step profile CSVs.
pub fn write_symmetrized(traj: &SymmetrizedTrajectory, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut wtr = csv::Writer::from_path(dir.join("ledger.csv"))?;
    wtr.write_record(["m", "t_m", "l2"])?;
    for (m, (t, l2)) in traj.time_grid.nodes().iter().zip(traj.l2_norms()).enumerate() {
        wtr.write_record([m.to_string(), t.to_string(), l2.to_string()])?;
    }
    wtr.flush()?;
    for (m, v) in traj.profiles.iter().enumerate() {
        v.save_csv(&dir.join(step_file_name(m)))?;
    }
    Ok(())
}

pub fn step_file_name(m: usize) -> String {
    format!("step_{m:04}.csv")
}

/// Reads the `t_m` column of a trajectory `ledger.csv`.
pub fn read_ledger_times(dir: &Path) -> Result<Vec<f64>> {
    let path = dir.join("ledger.csv");
    let mut rdr = csv::Reader::from_path(&path)?;
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h == "t_m")
        .ok_or_else(|| Error::Parse {
            path: path.clone(),
            message: "missing t_m column".into(),
        })?;
    rdr.records()
        .map(|r| {
            let r = r?;
            r[col].parse::<f64>().map_err(|e| Error::Parse {
                path: path.clone(),
                message: e.to_string(),
            })
        })
        .collect()
}
