//! Symmetrized problems in the mass coordinate `s = ω_N |x|^N`.
//!
//! For radially decreasing data the symmetrized elliptic problem
//! `−div(Λ|∇z|^{p̄−2}∇z) + λz = g★` on the ball `Ω★` reduces to the fixed
//! point
//!
//! ```text
//! z*(s) = C ∫_s^{|Ω|} σ^{-p̄′/N′} [𝒢(σ) − Z(σ)]_+^{1/(p̄−1)} dσ,
//! C = (N ω_N^{1/N})^{-p̄′} Λ^{-1/(p̄−1)},  𝒢 = ∫_0 g*,  Z = λ ∫_0 z*,
//! ```
//!
//! which is solved by damped Picard iteration on a nodal grid in `s`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aniso::{conjugate_exponent, unit_ball_measure};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_gl16, power_integral};
use crate::rearrange::{merge_knots, read_two_columns, DecreasingProfile, MassProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `values[k]` holds on `[s_k, s_{k+1})`; `values[K]` is the value at `|Ω|`.
    Step,
    /// Continuous, linear between nodes.
    Linear,
}

/// Nonincreasing profile `z*(s)` sampled on `0 = s_0 < … < s_K = |Ω|`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    s_grid: Vec<f64>,
    values: Vec<f64>,
    kind: ProfileKind,
    cumulative: Vec<f64>,
}

impl RadialProfile {
    /// Piecewise-linear profile; values must be nonnegative and nonincreasing.
    pub fn new(s_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::validated(s_grid, values, ProfileKind::Linear)
    }

    pub fn validated(s_grid: Vec<f64>, values: Vec<f64>, kind: ProfileKind) -> Result<Self> {
        if s_grid.len() < 2 || s_grid.len() != values.len() {
            return Err(Error::invalid(format!(
                "radial profile needs matching grid and values of length >= 2, got {} and {}",
                s_grid.len(),
                values.len()
            )));
        }
        if s_grid[0] != 0.0 || s_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("s-grid must start at 0 and increase strictly"));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("radial profile values must be finite and nonnegative"));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("radial profile values must be nonincreasing"));
        }
        Ok(Self::from_parts(s_grid, values, kind))
    }

    pub(crate) fn from_parts(s_grid: Vec<f64>, values: Vec<f64>, kind: ProfileKind) -> Self {
        let mut cumulative = Vec::with_capacity(s_grid.len());
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..s_grid.len() - 1 {
            let h = s_grid[k + 1] - s_grid[k];
            acc += match kind {
                ProfileKind::Step => values[k] * h,
                ProfileKind::Linear => 0.5 * (values[k] + values[k + 1]) * h,
            };
            cumulative.push(acc);
        }
        Self {
            s_grid,
            values,
            kind,
            cumulative,
        }
    }

    pub fn zeros(s_grid: Vec<f64>) -> Self {
        let n = s_grid.len();
        Self::from_parts(s_grid, vec![0.0; n], ProfileKind::Linear)
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_parts(
            self.s_grid.clone(),
            self.values.iter().map(|v| v * c).collect(),
            self.kind,
        )
    }

    fn interval(&self, s: f64) -> usize {
        let k = self.s_grid.partition_point(|x| *x <= s);
        k.saturating_sub(1).min(self.s_grid.len() - 2)
    }

    /// Step-kind profiles convert exactly; linear ones are refused.
    pub fn to_decreasing_profile(&self) -> Result<DecreasingProfile> {
        match self.kind {
            ProfileKind::Step => DecreasingProfile::new(
                self.s_grid.clone(),
                self.values[..self.values.len() - 1].to_vec(),
            ),
            ProfileKind::Linear => Err(Error::invalid(
                "a piecewise-linear profile has no exact step representation",
            )),
        }
    }

    /// Resample onto another grid by evaluating the profile at its nodes.
    pub fn resample_linear(&self, s_grid: &[f64]) -> RadialProfile {
        let values = s_grid.iter().map(|s| self.value_at(*s)).collect();
        RadialProfile::from_parts(s_grid.to_vec(), values, ProfileKind::Linear)
    }

    /// `∫ z*²`.
    pub fn integral_of_square(&self) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.s_grid.len() - 1 {
            let h = self.s_grid[k + 1] - self.s_grid[k];
            let (a, b) = (self.values[k], self.values[k + 1]);
            acc += match self.kind {
                ProfileKind::Step => a * a * h,
                ProfileKind::Linear => (a * a + a * b + b * b) * h / 3.0,
            };
        }
        acc
    }

    pub fn lorentz_norm(&self, p: f64, q: f64) -> Result<f64> {
        match self.kind {
            ProfileKind::Step => self.to_decreasing_profile()?.lorentz_norm(p, q),
            ProfileKind::Linear => lorentz_norm_linear(self, p, q),
        }
    }

    /// Header `s,value` for linear profiles, `s,level` for step profiles.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let second = match self.kind {
            ProfileKind::Step => "level",
            ProfileKind::Linear => "value",
        };
        wtr.write_record(["s", second])?;
        for (s, v) in self.s_grid.iter().zip(&self.values) {
            wtr.write_record([s.to_string(), v.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(BufWriter::new(File::create(path)?))
    }

    pub fn read_csv<R: Read>(r: R, source: &Path) -> Result<Self> {
        let (header, rows) = read_two_columns(r, source)?;
        let kind = match header.1.as_str() {
            "value" => ProfileKind::Linear,
            "level" => ProfileKind::Step,
            other => {
                return Err(Error::Parse {
                    path: source.to_path_buf(),
                    message: format!("unknown profile column `{other}`"),
                })
            }
        };
        let (s, v) = rows.into_iter().unzip();
        Self::validated(s, v, kind)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(File::open(path)?, path)
    }
}

impl MassProfile for RadialProfile {
    fn measure(&self) -> f64 {
        *self.s_grid.last().unwrap()
    }

    fn value_at(&self, s: f64) -> f64 {
        if s < 0.0 || s > self.measure() {
            return 0.0;
        }
        let k = self.interval(s);
        match self.kind {
            ProfileKind::Step => {
                if s >= self.measure() {
                    self.values[self.values.len() - 1]
                } else {
                    self.values[k]
                }
            }
            ProfileKind::Linear => {
                let (a, b) = (self.s_grid[k], self.s_grid[k + 1]);
                let t = (s - a) / (b - a);
                self.values[k] + t * (self.values[k + 1] - self.values[k])
            }
        }
    }

    fn concentration_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.measure());
        let k = self.interval(s);
        let a = self.s_grid[k];
        let d = s - a;
        match self.kind {
            ProfileKind::Step => self.cumulative[k] + self.values[k] * d,
            ProfileKind::Linear => {
                let slope = (self.values[k + 1] - self.values[k]) / (self.s_grid[k + 1] - a);
                self.cumulative[k] + self.values[k] * d + 0.5 * slope * d * d
            }
        }
    }

    fn knots(&self) -> &[f64] {
        &self.s_grid
    }
}

fn lorentz_norm_linear(prof: &RadialProfile, p: f64, q: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) || !(q >= 1.0) {
        return Err(Error::invalid(format!("invalid Lorentz exponents ({p}, {q})")));
    }
    let s = &prof.s_grid;
    let v = &prof.values;
    if q.is_infinite() {
        // f(σ) = σ^{1/p−1} C(σ), C quadratic on each interval
        let f = |x: f64| {
            if x <= 0.0 {
                if p == 1.0 {
                    v[0]
                } else {
                    0.0
                }
            } else {
                x.powf(1.0 / p - 1.0) * prof.concentration_at(x)
            }
        };
        let mut best = f(0.0);
        for k in 0..s.len() - 1 {
            best = best.max(f(s[k + 1]));
            // C(σ) = c0 + c1 σ + c2 σ² on this interval
            let h = s[k + 1] - s[k];
            let slope = (v[k + 1] - v[k]) / h;
            let c2 = 0.5 * slope;
            let c1 = v[k] - slope * s[k];
            let c0 = prof.cumulative[k] - v[k] * s[k] + 0.5 * slope * s[k] * s[k];
            let (a2, a1, a0) = (c2 * (1.0 / p + 1.0), c1 / p, (1.0 / p - 1.0) * c0);
            let mut roots = Vec::with_capacity(2);
            if a2.abs() > 0.0 {
                let disc = a1 * a1 - 4.0 * a2 * a0;
                if disc >= 0.0 {
                    let r = disc.sqrt();
                    roots.push((-a1 + r) / (2.0 * a2));
                    roots.push((-a1 - r) / (2.0 * a2));
                }
            } else if a1.abs() > 0.0 {
                roots.push(-a0 / a1);
            }
            for r in roots {
                if r > s[k] && r < s[k + 1] {
                    best = best.max(f(r));
                }
            }
        }
        return Ok(best);
    }

    let integrand = |x: f64| {
        let c = prof.concentration_at(x);
        (x.powf(1.0 / p) * c / x).powf(q) / x
    };
    // first interval: σ = s_1 u^{p/q} turns the σ^{q/p−1} endpoint behaviour
    // into a bounded integrand
    let s1 = s[1];
    let k = p / q;
    let mut total = integrate_gl16(0.0, 1.0, |u| {
        if u <= 0.0 {
            return 0.0;
        }
        let x = s1 * u.powf(k);
        k * s1.powf(q / p) * (prof.concentration_at(x) / x).powf(q)
    });
    for w in s[1..].windows(2) {
        total += integrate_gl16(w[0], w[1], integrand);
    }
    Ok(total.powf(1.0 / q))
}

/// Node layout for the mass coordinate: `uniform` equal intervals on
/// `[0, |Ω|]`, with the first interval split logarithmically by `log_nodes`
/// extra nodes spanning one decade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassGridSpec {
    pub uniform: usize,
    pub log_nodes: usize,
}

impl Default for MassGridSpec {
    fn default() -> Self {
        Self {
            uniform: 1000,
            log_nodes: 10,
        }
    }
}

pub fn mass_grid(measure: f64, spec: MassGridSpec) -> Result<Vec<f64>> {
    if spec.uniform < 1 || !(measure > 0.0) {
        return Err(Error::invalid("mass grid needs a positive measure and at least one interval"));
    }
    let width = measure / spec.uniform as f64;
    let mut nodes = vec![0.0];
    for j in (1..=spec.log_nodes).rev() {
        nodes.push(width * 10f64.powf(-(j as f64) / spec.log_nodes as f64));
    }
    for k in 1..spec.uniform {
        nodes.push(k as f64 * width);
    }
    nodes.push(measure);
    Ok(nodes)
}

/// Constants of the symmetrized operator and the discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSettings {
    pub lambda_const: f64,
    pub pbar: f64,
    pub dim: usize,
    pub measure: f64,
    pub grid: MassGridSpec,
    pub tol: f64,
    pub max_iter: usize,
}

impl RadialSettings {
    pub fn new(lambda_const: f64, pbar: f64, dim: usize, measure: f64) -> Self {
        Self {
            lambda_const,
            pbar,
            dim,
            measure,
            grid: MassGridSpec::default(),
            tol: 1e-10,
            max_iter: 200_000,
        }
    }
}

/// Right-hand side `g*` plus an optional nonincreasing profile carried from
/// a previous time step, scaled by `carry_scale`.
#[derive(Debug, Clone)]
pub struct RadialEllipticProblem {
    pub lambda_const: f64,
    pub pbar: f64,
    pub lambda0: f64,
    pub dim: usize,
    pub domain_measure: f64,
    pub rhs_profile: DecreasingProfile,
    pub carry: Option<(f64, RadialProfile)>,
}

impl RadialEllipticProblem {
    fn validate(&self) -> Result<()> {
        if !(self.pbar > 1.0) {
            return Err(Error::invalid(format!("p̄ must exceed 1, got {}", self.pbar)));
        }
        if !(self.lambda_const > 0.0) {
            return Err(Error::invalid("Λ must be positive"));
        }
        if !(self.lambda0 >= 0.0) {
            return Err(Error::invalid("zero-order coefficient must be nonnegative"));
        }
        if self.dim < 2 {
            return Err(Error::invalid("dimension must be at least 2"));
        }
        let m = self.domain_measure;
        if (self.rhs_profile.measure() - m).abs() > 1e-9 * m {
            return Err(Error::GridMismatch(format!(
                "rhs profile measure {} differs from |Ω| = {m}",
                self.rhs_profile.measure()
            )));
        }
        if let Some((c, prof)) = &self.carry {
            if !(*c >= 0.0) || (prof.measure() - m).abs() > 1e-9 * m {
                return Err(Error::GridMismatch("carried profile does not match |Ω|".into()));
            }
        }
        Ok(())
    }

    /// `𝒢(s) = ∫_0^s` of the data.
    fn data_concentration(&self, s: f64) -> f64 {
        let mut g = self.rhs_profile.concentration_at(s);
        if let Some((c, prof)) = &self.carry {
            g += c * prof.concentration_at(s);
        }
        g
    }

    fn data_at_zero(&self) -> f64 {
        let mut g = self.rhs_profile.value_at(0.0);
        if let Some((c, prof)) = &self.carry {
            g += c * prof.value_at(0.0);
        }
        g
    }
}

/// Iteration record of a radial solve.
#[derive(Debug, Clone, Serialize)]
pub struct RadialSolveReport {
    pub iterations: usize,
    pub residual: f64,
    /// Part of the residual that rounding in the bracket can account for.
    /// Nonzero in practice only for p̄ > 2 where a flat core forms; the
    /// solve stops at `tol + rounding_floor`.
    pub rounding_floor: f64,
    /// Final Picard damping; 0 when Newton finished the solve.
    pub damping: f64,
    pub method: SolveMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Picard,
    Newton,
}

struct FixedPointMap<'a> {
    prob: &'a RadialEllipticProblem,
    nodes: &'a [f64],
    data: Vec<f64>,
    data0: f64,
    scale: f64,
    power: f64,
    // ∫ σ^e and ∫ σ^{e+1} over each interval
    m0: Vec<f64>,
    m1: Vec<f64>,
}

impl<'a> FixedPointMap<'a> {
    fn new(prob: &'a RadialEllipticProblem, nodes: &'a [f64]) -> Self {
        let n = prob.dim as f64;
        let pbar_conj = conjugate_exponent(prob.pbar);
        let scale = (n * unit_ball_measure(prob.dim).powf(1.0 / n)).powf(-pbar_conj)
            * prob.lambda_const.powf(-1.0 / (prob.pbar - 1.0));
        // σ^{−p̄′/N′} · σ^{1/(p̄−1)} = σ^{p̄′/N − 1}
        let exponent = pbar_conj / n - 1.0;
        let data = nodes.iter().map(|s| prob.data_concentration(*s)).collect();
        let mut m0 = Vec::with_capacity(nodes.len() - 1);
        let mut m1 = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            m0.push(power_integral(w[0], w[1], exponent));
            m1.push(power_integral(w[0], w[1], exponent + 1.0));
        }
        Self {
            prob,
            nodes,
            data,
            data0: prob.data_at_zero(),
            scale,
            power: 1.0 / (prob.pbar - 1.0),
            m0,
            m1,
        }
    }

    /// Writes `T(z)` into `out`; returns whether the bracket was positive anywhere.
    fn apply(&self, z: &[f64], out: &mut [f64]) -> bool {
        let nodes = self.nodes;
        let lambda = self.prob.lambda0;
        let k_last = nodes.len() - 1;
        // bracket / σ, raised to 1/(p̄−1)
        let mut q = vec![0.0; nodes.len()];
        let mut z_int = 0.0;
        let mut any_positive = false;
        q[0] = (self.data0 - lambda * z[0]).max(0.0).powf(self.power);
        for k in 1..=k_last {
            z_int += 0.5 * (z[k - 1] + z[k]) * (nodes[k] - nodes[k - 1]);
            let bracket = self.data[k] - lambda * z_int;
            if bracket > 0.0 {
                any_positive = true;
                q[k] = (bracket / nodes[k]).powf(self.power);
            }
        }
        out[k_last] = 0.0;
        let mut acc = 0.0;
        for k in (0..k_last).rev() {
            let (a, b) = (nodes[k], nodes[k + 1]);
            let h = b - a;
            // linear interpolation of q times σ^e, integrated exactly
            let slope = (q[k + 1] - q[k]) / h;
            acc += (q[k] - slope * a) * self.m0[k] + slope * self.m1[k];
            out[k] = self.scale * acc;
        }
        any_positive
    }

    /// Sup over the nodes of the change in `T(z)` when each bracket moves by
    /// its own rounding error. On a flat core the bracket is exactly zero and
    /// `q` has unbounded slope there, so for p̄ > 2 this can exceed any fixed
    /// tolerance.
    fn rounding_floor(&self, z: &[f64]) -> f64 {
        let nodes = self.nodes;
        let lambda = self.prob.lambda0;
        let k_last = nodes.len() - 1;
        let noise = |g: f64, lz: f64, denom: f64| {
            let b = (g - lz).max(0.0);
            let delta = 4.0 * f64::EPSILON * (g.abs() + lz.abs());
            ((b + delta) / denom).powf(self.power) - (b / denom).powf(self.power)
        };
        let mut dq = vec![0.0; nodes.len()];
        dq[0] = noise(self.data0, lambda * z[0], 1.0);
        let mut z_int = 0.0;
        for k in 1..=k_last {
            z_int += 0.5 * (z[k - 1] + z[k]) * (nodes[k] - nodes[k - 1]);
            dq[k] = noise(self.data[k], lambda * z_int, nodes[k]);
        }
        let mut acc = 0.0;
        for k in (0..k_last).rev() {
            let (a, b) = (nodes[k], nodes[k + 1]);
            let slope = (dq[k + 1] - dq[k]) / (b - a);
            acc += (dq[k] - slope * a) * self.m0[k] + slope * self.m1[k];
        }
        // the noise is nonnegative, so the sum from the origin is the sup
        self.scale * acc
    }
}

/// Solves the symmetrized elliptic problem on the default-configured grid,
/// starting from zero.
pub fn radial_elliptic_solve(prob: &RadialEllipticProblem, settings: &RadialSettings) -> Result<RadialProfile> {
    radial_elliptic_solve_from(prob, settings, None).map(|(z, _)| z)
}

/// As [`radial_elliptic_solve`], optionally warm-started from `initial`.
///
/// Damped Picard iteration first; if it stalls, Newton's method on the same
/// discrete equations takes over from the best Picard iterate.
pub fn radial_elliptic_solve_from(
    prob: &RadialEllipticProblem,
    settings: &RadialSettings,
    initial: Option<&RadialProfile>,
) -> Result<(RadialProfile, RadialSolveReport)> {
    prob.validate()?;
    if !(settings.tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {}", settings.tol)));
    }
    let nodes = mass_grid(prob.domain_measure, settings.grid)?;
    let map = FixedPointMap::new(prob, &nodes);
    let n = nodes.len();
    let z0: Vec<f64> = match initial {
        Some(init) => nodes.iter().map(|s| init.value_at(*s)).collect(),
        None => vec![0.0; n],
    };

    let (mut z, report) = match picard(&map, z0, settings) {
        Ok(done) => done,
        Err((best, picard_iters)) => {
            let (z, newton_iters, residual, rounding_floor) = newton(&map, best, settings)?;
            (
                z,
                RadialSolveReport {
                    iterations: picard_iters + newton_iters,
                    residual,
                    rounding_floor,
                    damping: 0.0,
                    method: SolveMethod::Newton,
                },
            )
        }
    };
    if report.residual > settings.tol + report.rounding_floor {
        return Err(Error::NoConvergence {
            solver: "radial fixed point",
            iterations: report.iterations,
            residual: report.residual,
        });
    }
    let mut tz = vec![0.0; n];
    if !map.apply(&z, &mut tz) && map.data[n - 1] > 0.0 {
        return Err(Error::Internal(
            "fixed point with nonpositive bracket everywhere despite nonzero data".into(),
        ));
    }
    // the fixed point is nonincreasing by construction; clamp rounding noise
    for k in (0..n - 1).rev() {
        if z[k] < z[k + 1] {
            z[k] = z[k + 1];
        }
    }
    z[n - 1] = 0.0;
    Ok((RadialProfile::from_parts(nodes, z, ProfileKind::Linear), report))
}

/// Damped Picard iteration. A step that fails to lower the residual is
/// rejected and retried with half the damping; accepted steps let the
/// damping recover. On failure returns the best iterate and the count.
fn picard(
    map: &FixedPointMap,
    mut z: Vec<f64>,
    settings: &RadialSettings,
) -> std::result::Result<(Vec<f64>, RadialSolveReport), (Vec<f64>, usize)> {
    let n = z.len();
    let mut tz = vec![0.0; n];
    let mut theta: f64 = 1.0;
    let mut z_prev = z.clone();
    let mut tz_prev = vec![0.0; n];
    let mut prev_residual = f64::INFINITY;
    let mut iterations = 0;
    loop {
        map.apply(&z, &mut tz);
        let residual = sup_diff(&z, &tz);
        let rounding_floor = map.rounding_floor(&z);
        if residual <= settings.tol + rounding_floor {
            return Ok((
                z,
                RadialSolveReport {
                    iterations,
                    residual,
                    rounding_floor,
                    damping: theta,
                    method: SolveMethod::Picard,
                },
            ));
        }
        if iterations >= settings.max_iter {
            return Err((z_prev, iterations));
        }
        if residual >= prev_residual {
            theta *= 0.5;
            if theta < 1e-6 {
                return Err((z_prev, iterations));
            }
            z.copy_from_slice(&z_prev);
            tz.copy_from_slice(&tz_prev);
        } else {
            z_prev.copy_from_slice(&z);
            tz_prev.copy_from_slice(&tz);
            prev_residual = residual;
            if iterations > 0 {
                theta = (1.5 * theta).min(1.0);
            }
        }
        for (zk, tk) in z.iter_mut().zip(&tz) {
            *zk += theta * (tk - *zk);
        }
        iterations += 1;
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

const NEWTON_MAX_ITER: usize = 100;

/// Newton's method on the discrete fixed-point equations written in the
/// unknowns `x = (z_0, Z_1, …, Z_K)`, `Z` the trapezoid integral of `z`.
/// With `y_k = 2(Z_{k+1} − Z_k)/h_k = z_k + z_{k+1}` and `Δ_k = z_k − z_{k+1}`
/// given by the product quadrature, the equations
///
/// ```text
/// 2 z_0 − y_0 − Δ_0 = 0,   y_k − y_{k+1} − Δ_k − Δ_{k+1} = 0,   y_{K−1} − Δ_{K−1} = 0
/// ```
///
/// are tridiagonal in `x`. Returns `(z, iterations, residual, rounding_floor)`.
fn newton(map: &FixedPointMap, z_init: Vec<f64>, settings: &RadialSettings) -> Result<(Vec<f64>, usize, f64, f64)> {
    let n = z_init.len();
    let kk = n - 1;
    let nodes = map.nodes;
    let h: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
    let w: Vec<f64> = (0..kk).map(|k| (map.m1[k] - nodes[k] * map.m0[k]) / h[k]).collect();
    let alpha: Vec<f64> = (0..kk).map(|k| map.scale * (map.m0[k] - w[k])).collect();
    let beta: Vec<f64> = (0..kk).map(|k| map.scale * w[k]).collect();
    let lambda = map.prob.lambda0;
    let pw = map.power;

    // q_k and dq_k/dx_k
    let q_of = |k: usize, xk: f64| -> (f64, f64) {
        let (b, denom) = if k == 0 {
            (map.data0 - lambda * xk, 1.0)
        } else {
            (map.data[k] - lambda * xk, nodes[k])
        };
        if b <= 0.0 {
            return (0.0, 0.0);
        }
        let q = (b / denom).powf(pw);
        (q, -lambda * pw * q / b)
    };

    let mut x = vec![0.0; n];
    x[0] = z_init[0];
    let mut acc = 0.0;
    for k in 1..n {
        acc += 0.5 * (z_init[k - 1] + z_init[k]) * h[k - 1];
        x[k] = acc;
    }

    let residual = |x: &[f64], out: &mut [f64], jac: Option<&mut [[f64; 3]]>| {
        let qd: Vec<(f64, f64)> = (0..n).map(|k| q_of(k, x[k])).collect();
        let big_z = |k: usize| if k == 0 { 0.0 } else { x[k] };
        let y: Vec<f64> = (0..kk).map(|k| 2.0 * (x[k + 1] - big_z(k)) / h[k]).collect();
        let delta: Vec<f64> = (0..kk).map(|k| alpha[k] * qd[k].0 + beta[k] * qd[k + 1].0).collect();
        out[0] = 2.0 * x[0] - y[0] - delta[0];
        for k in 0..kk.saturating_sub(1) {
            out[k + 1] = y[k] - y[k + 1] - delta[k] - delta[k + 1];
        }
        out[kk] = y[kk - 1] - delta[kk - 1];
        if let Some(jac) = jac {
            // jac[r] = [∂/∂x_{r−1}, ∂/∂x_r, ∂/∂x_{r+1}]
            for row in jac.iter_mut() {
                *row = [0.0; 3];
            }
            // dy_k/dx_{k+1} = 2/h_k, dy_k/dx_k = −2/h_k for k ≥ 1
            let dy_lo = |k: usize| if k == 0 { 0.0 } else { -2.0 / h[k] };
            jac[0][1] = 2.0 - alpha[0] * qd[0].1;
            jac[0][2] = -2.0 / h[0] - beta[0] * qd[1].1;
            for k in 0..kk.saturating_sub(1) {
                let r = k + 1;
                jac[r][0] = dy_lo(k) - alpha[k] * qd[k].1;
                jac[r][1] = 2.0 / h[k] + 2.0 / h[k + 1] - (beta[k] + alpha[k + 1]) * qd[k + 1].1;
                jac[r][2] = -2.0 / h[k + 1] - beta[k + 1] * qd[k + 2].1;
            }
            jac[kk][0] = dy_lo(kk - 1) - alpha[kk - 1] * qd[kk - 1].1;
            jac[kk][1] = 2.0 / h[kk - 1] - beta[kk - 1] * qd[kk].1;
        }
    };

    let to_z = |x: &[f64]| -> Vec<f64> {
        let mut z = vec![0.0; n];
        z[0] = x[0];
        for k in 1..n {
            z[k] = 2.0 * (x[k] - if k == 1 { 0.0 } else { x[k - 1] }) / h[k - 1] - z[k - 1];
        }
        z
    };
    let fixed_point_residual = |x: &[f64]| {
        let z = to_z(x);
        let mut tz = vec![0.0; n];
        map.apply(&z, &mut tz);
        let floor = map.rounding_floor(&z);
        (sup_diff(&z, &tz), floor, z)
    };

    let mut r = vec![0.0; n];
    let mut jac = vec![[0.0; 3]; n];
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; n];
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let (mut fp, mut floor, mut z) = fixed_point_residual(&x);
    let mut iterations = 0;
    while iterations < NEWTON_MAX_ITER && fp > settings.tol + floor {
        residual(&x, &mut r, Some(&mut jac));
        let r_norm = norm(&r);
        let mut dx: Vec<f64> = r.iter().map(|v| -v).collect();
        if !solve_tridiagonal(&mut jac, &mut dx) {
            break;
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            for i in 0..n {
                trial[i] = x[i] + step * dx[i];
            }
            residual(&trial, &mut r_trial, None);
            if norm(&r_trial) < (1.0 - 1e-4 * step) * r_norm {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        x.copy_from_slice(&trial);
        (fp, floor, z) = fixed_point_residual(&x);
        iterations += 1;
    }
    if fp <= settings.tol + floor {
        return Ok((z, iterations, fp, floor));
    }
    Err(Error::NoConvergence {
        solver: "radial fixed point (Newton)",
        iterations,
        residual: fp,
    })
}

/// Gaussian elimination with partial pivoting on a tridiagonal matrix
/// stored as rows `[sub, diag, super]`; solves in place. Returns false when
/// singular.
fn solve_tridiagonal(rows: &mut [[f64; 3]], b: &mut [f64]) -> bool {
    let n = b.len();
    // upper factor: diagonal, first and second super-diagonals
    let mut d: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let mut u1: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    let mut u2 = vec![0.0; n];
    let mut sub: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    for k in 0..n - 1 {
        let i = k + 1;
        if sub[i].abs() > d[k].abs() {
            // swap rows k and i
            std::mem::swap(&mut d[k], &mut sub[i]);
            std::mem::swap(&mut u1[k], &mut d[i]);
            let next = if i + 1 < n { u1[i] } else { 0.0 };
            u2[k] = next;
            if i + 1 < n {
                u1[i] = 0.0;
            }
            b.swap(k, i);
            // row i now holds the old row k: [sub[i] (was d[k]), d[i] (was u1[k]), u1[i] = 0]
            let m = sub[i] / d[k];
            d[i] -= m * u1[k];
            if i + 1 < n {
                u1[i] -= m * u2[k];
            }
            b[i] -= m * b[k];
        } else {
            if d[k] == 0.0 {
                return false;
            }
            let m = sub[i] / d[k];
            d[i] -= m * u1[k];
            b[i] -= m * b[k];
        }
    }
    if d[n - 1] == 0.0 || !d.iter().all(|v| v.is_finite()) {
        return false;
    }
    for k in (0..n).rev() {
        let mut v = b[k];
        if k + 1 < n {
            v -= u1[k] * b[k + 1];
        }
        if k + 2 < n {
            v -= u2[k] * b[k + 2];
        }
        b[k] = v / d[k];
    }
    b.iter().all(|v| v.is_finite())
}

/// One implicit step of the symmetrized parabolic problem: solve with
/// `λ = 1/τ` and data `f* + prev/τ`. The sum dominates `(f + u_prev/τ)*` in
/// the concentration sense whenever `prev` dominates `u_prev*`.
pub fn radial_parabolic_step(
    prev: &RadialProfile,
    tau: f64,
    rhs_profile: &DecreasingProfile,
    settings: &RadialSettings,
) -> Result<RadialProfile> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("time step must be positive, got {tau}")));
    }
    let prob = RadialEllipticProblem {
        lambda_const: settings.lambda_const,
        pbar: settings.pbar,
        lambda0: 1.0 / tau,
        dim: settings.dim,
        domain_measure: settings.measure,
        rhs_profile: rhs_profile.clone(),
        carry: Some((1.0 / tau, prev.clone())),
    };
    let warm = prev.resample_linear(&mass_grid(settings.measure, settings.grid)?);
    radial_elliptic_solve_from(&prob, settings, Some(&warm)).map(|(z, _)| z)
}

/// Sign of the first-order term in the radial eigenvalue problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DriftSign {
    /// `−χ″ − (N−1)/r χ′ = λχ`, the radial Dirichlet Laplacian.
    #[default]
    Standard,
    /// `−χ″ + (N−1)/r χ′ = λχ`, kept for comparison only.
    Printed,
}

const SHOOT_STEPS: usize = 4000;
const SHOOT_START: f64 = 1e-6;

/// `χ(1)` for the unit-radius problem with `χ(0) = 1`, `χ′(0) = 0`.
fn shoot(mu: f64, dim: usize, drift: DriftSign) -> Result<f64> {
    let n1 = dim as f64 - 1.0;
    let sign = match drift {
        DriftSign::Standard => -1.0,
        DriftSign::Printed => 1.0,
    };
    // regular series χ = 1 + a r², from 2a(1 − sign·(N−1)) = −μ
    let denom = 2.0 * (1.0 - sign * n1);
    if denom == 0.0 {
        return Err(Error::invalid(format!(
            "no regular solution at the origin for dimension {dim} with this drift sign"
        )));
    }
    let a = -mu / denom;
    let r0 = SHOOT_START;
    let mut y = [1.0 + a * r0 * r0, 2.0 * a * r0];
    let rhs = |r: f64, y: [f64; 2]| -> [f64; 2] { [y[1], sign * n1 / r * y[1] - mu * y[0]] };
    let h = (1.0 - r0) / SHOOT_STEPS as f64;
    let mut r = r0;
    for _ in 0..SHOOT_STEPS {
        let k1 = rhs(r, y);
        let k2 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r += h;
    }
    Ok(y[0])
}

/// Smallest `λ` with `−χ″ − (N−1)/r χ′ = λχ` on `(0, R)`, `χ′(0) = χ(R) = 0`.
pub fn smallest_dirichlet_eigenvalue(radius: f64, dim: usize, tol: f64) -> Result<f64> {
    smallest_eigenvalue_with(radius, dim, tol, DriftSign::Standard)
}

/// Shooting on the unit ball followed by the exact rescaling `λ(R) = λ(1)/R²`.
pub fn smallest_eigenvalue_with(radius: f64, dim: usize, tol: f64, drift: DriftSign) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    if dim < 2 {
        return Err(Error::invalid("dimension must be at least 2"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    // bracket the first sign change of χ(1; μ)
    let step = 0.5;
    let mut lo = 0.0;
    let mut f_lo = shoot(lo, dim, drift)?;
    let mut hi = step;
    let mut f_hi = shoot(hi, dim, drift)?;
    while f_lo.signum() == f_hi.signum() {
        lo = hi;
        f_lo = f_hi;
        hi += step;
        if hi > 1e4 {
            return Err(Error::NoConvergence {
                solver: "eigenvalue bracket",
                iterations: (hi / step) as usize,
                residual: f_hi.abs(),
            });
        }
        f_hi = shoot(hi, dim, drift)?;
    }
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        let f_mid = shoot(mid, dim, drift)?;
        iterations += 1;
        if f_mid.abs() <= tol || hi - lo <= 4.0 * f64::EPSILON * hi {
            if f_mid.abs() > tol {
                return Err(Error::NoConvergence {
                    solver: "eigenvalue bisection",
                    iterations,
                    residual: f_mid.abs(),
                });
            }
            return Ok(mid / (radius * radius));
        }
        if iterations > 200 {
            return Err(Error::NoConvergence {
                solver: "eigenvalue bisection",
                iterations,
                residual: f_mid.abs(),
            });
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
}

/// Radius of the ball with measure `measure` in dimension `dim`.
pub fn ball_radius(measure: f64, dim: usize) -> f64 {
    (measure / unit_ball_measure(dim)).powf(1.0 / dim as f64)
}

/// Concentration comparison over the union of both knot sets:
/// `max_s [∫_0^s a − ∫_0^s b]`.
pub fn max_concentration_gap(a: &impl MassProfile, b: &impl MassProfile) -> (f64, f64) {
    let knots = merge_knots(a.knots(), b.knots());
    let mut best = (f64::NEG_INFINITY, 0.0);
    for s in knots {
        let d = a.concentration_at(s) - b.concentration_at(s);
        if d > best.0 {
            best = (d, s);
        }
    }
    best
}
