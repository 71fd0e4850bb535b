use std::path::Path;

use serde::Serialize;

use crate::aniso::AnisotropicCoefficients;
use crate::error::{Error, Result};
use crate::harness::config::{Exponent, LorentzPair, ScenarioConfig};
use crate::parabolic::{EnergyMonitor, TrajectoryRecord};
use crate::radial::{ball_radius, max_concentration_gap, smallest_dirichlet_eigenvalue, RadialProfile};
use crate::rearrange::{DecreasingProfile, MassProfile};

/// `D_m` for one time step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceRow {
    pub m: usize,
    pub t: f64,
    /// Signed `max_s [∫₀^s u* − ∫₀^s v*]`.
    pub gap: f64,
    /// Mass coordinate where the maximum is attained.
    pub at: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub margin: f64,
    pub rows: Vec<DominanceRow>,
    pub max_gap: f64,
    pub passed: bool,
}

impl DominanceReport {
    pub fn gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.gap).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LorentzRow {
    pub m: usize,
    pub t: f64,
    pub p: Exponent,
    pub q: Exponent,
    pub u_norm: f64,
    pub v_norm: f64,
    /// `u_norm − v_norm`.
    pub difference: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub m: usize,
    pub t: f64,
    pub l2: f64,
    /// `e^{−λ t}‖u0‖₂`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayTable {
    pub radius: f64,
    pub eigenvalue: f64,
    pub slack: f64,
    pub rows: Vec<DecayRow>,
    /// `‖u^m‖₂ ≤ ‖u^{m−1}‖₂` at every step.
    pub monotone: bool,
    pub passed: bool,
}

fn check_times(times: &[f64], u: usize, v: usize) -> Result<()> {
    if u != v || u != times.len() {
        return Err(Error::GridMismatch(format!(
            "time grids differ: {u} u-steps, {v} v-steps, {} times",
            times.len()
        )));
    }
    Ok(())
}

/// `D_m = max_s [∫₀^s (u^m)* − ∫₀^s v^m]` over the union of breakpoints;
/// pass iff `D_m ≤ eta` at every step.
pub fn verify_concentration_dominance(
    u_steps: &[DecreasingProfile],
    v_steps: &[RadialProfile],
    times: &[f64],
    eta: f64,
) -> Result<DominanceReport> {
    check_times(times, u_steps.len(), v_steps.len())?;
    if !(eta >= 0.0) {
        return Err(Error::invalid(format!("margin must be nonnegative, got {eta}")));
    }
    let mut rows = Vec::with_capacity(times.len());
    for (m, ((u, v), t)) in u_steps.iter().zip(v_steps).zip(times).enumerate() {
        if (u.measure() - v.measure()).abs() > 1e-9 * u.measure() {
            return Err(Error::GridMismatch(format!("step {m}: profiles live on different measures")));
        }
        let (gap, at) = max_concentration_gap(u, v);
        rows.push(DominanceRow {
            m,
            t: *t,
            gap,
            at,
            pass: gap <= eta,
        });
    }
    let max_gap = rows.iter().map(|r| r.gap).fold(f64::NEG_INFINITY, f64::max);
    let passed = rows.iter().all(|r| r.pass);
    Ok(DominanceReport {
        margin: eta,
        rows,
        max_gap,
        passed,
    })
}

/// Both Lorentz norms per step and pair; a row passes when
/// `‖u‖ ≤ ‖v‖ + eta`.
pub fn lorentz_dominance_report(
    u_steps: &[DecreasingProfile],
    v_steps: &[RadialProfile],
    times: &[f64],
    pairs: &[LorentzPair],
    eta: f64,
) -> Result<Vec<LorentzRow>> {
    check_times(times, u_steps.len(), v_steps.len())?;
    let mut rows = Vec::with_capacity(times.len() * pairs.len());
    for (m, ((u, v), t)) in u_steps.iter().zip(v_steps).zip(times).enumerate() {
        for pair in pairs {
            let u_norm = u.lorentz_norm(pair.p.0, pair.q.0)?;
            let v_norm = v.lorentz_norm(pair.p.0, pair.q.0)?;
            rows.push(LorentzRow {
                m,
                t: *t,
                p: pair.p,
                q: pair.q,
                u_norm,
                v_norm,
                difference: u_norm - v_norm,
                pass: u_norm <= v_norm + eta,
            });
        }
    }
    Ok(rows)
}

/// Compares `‖u^m‖₂` with `e^{−λ t_m}‖u^0‖₂`, `λ` the first Dirichlet
/// eigenvalue of the ball of radius `radius`; rows pass within a relative
/// `slack`.
pub fn decay_report(
    traj: &TrajectoryRecord,
    coeffs: &AnisotropicCoefficients,
    radius: f64,
    dim: usize,
    slack: f64,
) -> Result<DecayTable> {
    if (coeffs.pbar() - 2.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "decay check needs harmonic mean 2, got {}",
            coeffs.pbar()
        )));
    }
    if traj.sources.iter().any(|f| f.max_abs() != 0.0) {
        return Err(Error::invalid("decay check needs a zero source"));
    }
    let eigenvalue = smallest_dirichlet_eigenvalue(radius, dim, 1e-12)?;
    let l2: Vec<f64> = traj.ledger.iter().map(|l| l.l2_sq.sqrt()).collect();
    let l2_0 = l2.first().copied().unwrap_or(0.0);
    let rows: Vec<DecayRow> = traj
        .ledger
        .iter()
        .zip(&l2)
        .map(|(l, &n)| {
            let bound = (-eigenvalue * l.t).exp() * l2_0;
            DecayRow {
                m: l.m,
                t: l.t,
                l2: n,
                bound,
                pass: n <= (1.0 + slack) * bound,
            }
        })
        .collect();
    let monotone = l2.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let passed = monotone && rows.iter().all(|r| r.pass);
    Ok(DecayTable {
        radius,
        eigenvalue,
        slack,
        rows,
        monotone,
        passed,
    })
}

/// Convenience wrapper using the ball with the measure of the domain.
pub fn decay_report_for_domain(
    traj: &TrajectoryRecord,
    coeffs: &AnisotropicCoefficients,
    slack: f64,
) -> Result<DecayTable> {
    let measure = traj.fields.first().map_or(0.0, |u| u.domain_measure());
    decay_report(traj, coeffs, ball_radius(measure, 2), 2, slack)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checks {
    pub dominance: bool,
    pub lorentz: Option<bool>,
    pub decay: Option<bool>,
}

/// Which symmetrized data were replaced by dominating profiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominatingSummary {
    pub source: bool,
    pub initial: bool,
    /// The run used dominating data and passed, so the run with the
    /// rearranged data themselves must pass as well.
    pub implies_rearranged_run_passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub package: &'static str,
    pub version: &'static str,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// Persisted verification output; contains no wall-clock data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub name: String,
    pub passed: bool,
    pub checks: Checks,
    pub lambda_const: f64,
    pub pbar: f64,
    pub seed: u64,
    pub dominance: DominanceReport,
    pub lorentz: Vec<LorentzRow>,
    pub decay: Option<DecayTable>,
    pub dominating: Option<DominatingSummary>,
    pub energy: Option<EnergyMonitor>,
    pub config: Option<ScenarioConfig>,
    pub environment: Environment,
}

impl ComparisonReport {
    pub fn new(name: impl Into<String>, dominance: DominanceReport) -> Self {
        let passed = dominance.passed;
        Self {
            name: name.into(),
            passed,
            checks: Checks {
                dominance: dominance.passed,
                lorentz: None,
                decay: None,
            },
            lambda_const: f64::NAN,
            pbar: f64::NAN,
            seed: 0,
            dominance,
            lorentz: Vec::new(),
            decay: None,
            dominating: None,
            energy: None,
            config: None,
            environment: Environment::default(),
        }
    }

    pub fn with_lorentz(mut self, rows: Vec<LorentzRow>, enabled: bool) -> Self {
        if enabled {
            self.checks.lorentz = Some(rows.iter().all(|r| r.pass));
        }
        self.lorentz = rows;
        self.refresh();
        self
    }

    pub fn with_decay(mut self, table: Option<DecayTable>) -> Self {
        self.checks.decay = table.as_ref().map(|t| t.passed);
        self.decay = table;
        self.refresh();
        self
    }

    fn refresh(&mut self) {
        self.passed =
            self.checks.dominance && self.checks.lorentz.unwrap_or(true) && self.checks.decay.unwrap_or(true);
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `report.json`, `dominance.csv` and, when present,
    /// `lorentz.csv` and `decay.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        let mut w = csv::Writer::from_path(dir.join("dominance.csv"))?;
        w.write_record(["m", "t_m", "D_m", "s_at", "pass"])?;
        for r in &self.dominance.rows {
            w.write_record([
                r.m.to_string(),
                r.t.to_string(),
                r.gap.to_string(),
                r.at.to_string(),
                r.pass.to_string(),
            ])?;
        }
        w.flush()?;
        if !self.lorentz.is_empty() {
            let mut w = csv::Writer::from_path(dir.join("lorentz.csv"))?;
            w.write_record(["m", "t_m", "p", "q", "u_norm", "v_norm", "difference", "pass"])?;
            for r in &self.lorentz {
                w.write_record([
                    r.m.to_string(),
                    r.t.to_string(),
                    r.p.to_string(),
                    r.q.to_string(),
                    r.u_norm.to_string(),
                    r.v_norm.to_string(),
                    r.difference.to_string(),
                    r.pass.to_string(),
                ])?;
            }
            w.flush()?;
        }
        if let Some(table) = &self.decay {
            let mut w = csv::Writer::from_path(dir.join("decay.csv"))?;
            w.write_record(["m", "t_m", "l2", "bound", "pass"])?;
            for r in &table.rows {
                w.write_record([
                    r.m.to_string(),
                    r.t.to_string(),
                    r.l2.to_string(),
                    r.bound.to_string(),
                    r.pass.to_string(),
                ])?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridFunction;
    use crate::rearrange::{decreasing_rearrangement, profile_to_radial};

    fn field(seed: u64) -> GridFunction {
        GridFunction::from_fn(6, 5, 1.0, 1.0, |x, y| ((seed as f64 + 3.0 * x) * (1.0 + y)).sin()).unwrap()
    }

    #[test]
    fn identical_steps_give_zero_gap() {
        let u: Vec<_> = (0..3).map(|k| decreasing_rearrangement(&field(k))).collect();
        let v: Vec<_> = u.iter().map(profile_to_radial).collect();
        let r = verify_concentration_dominance(&u, &v, &[0.0, 0.5, 1.0], 0.0).unwrap();
        assert!(r.passed);
        assert!(r.rows.iter().all(|row| row.gap.abs() < 1e-14));
    }

    #[test]
    fn zero_u_gap_is_nonpositive() {
        let z = GridFunction::zeros(6, 5, 1.0 / 6.0, 0.2).unwrap();
        let u = vec![decreasing_rearrangement(&z)];
        let v = vec![profile_to_radial(&decreasing_rearrangement(&field(1)))];
        let r = verify_concentration_dominance(&u, &v, &[0.0], 0.0).unwrap();
        assert!(r.passed && r.max_gap <= 0.0);
    }

    #[test]
    fn mismatched_steps_rejected() {
        let u = vec![decreasing_rearrangement(&field(0))];
        let v: Vec<RadialProfile> = vec![];
        assert!(verify_concentration_dominance(&u, &v, &[0.0], 0.1).is_err());
    }

    #[test]
    fn swapped_inputs_fail() {
        let small = decreasing_rearrangement(&field(2).map(|x| 0.5 * x).unwrap());
        let big = decreasing_rearrangement(&field(2));
        let r = verify_concentration_dominance(&[big], &[profile_to_radial(&small)], &[0.0], 1e-6).unwrap();
        assert!(!r.passed && r.max_gap > 0.0);
    }

    #[test]
    fn lorentz_equal_inputs() {
        let u = vec![decreasing_rearrangement(&field(4))];
        let v = vec![profile_to_radial(&u[0])];
        let rows = lorentz_dominance_report(&u, &v, &[0.0], &[LorentzPair::new(2.0, f64::INFINITY)], 0.0).unwrap();
        assert!((rows[0].difference).abs() < 1e-12);
        assert!(lorentz_dominance_report(&u, &v, &[0.0], &[LorentzPair::new(0.5, 1.0)], 0.0).is_err());
    }
}
