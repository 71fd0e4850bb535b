//! Distribution functions, decreasing rearrangements and the functionals
//! built on them (concentration, maximal mean, Lorentz norms).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::aniso::{unit_ball_measure, AnisotropicCoefficients};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::quadrature::{integrate_gl16, power_integral};
use crate::radial::{ProfileKind, RadialProfile};

/// A nonincreasing, nonnegative function of the mass variable `s ∈ [0, |Ω|]`.
pub trait MassProfile {
    /// Total measure `|Ω|`.
    fn measure(&self) -> f64;

    /// Right-continuous value at `s`; zero beyond the measure.
    fn value_at(&self, s: f64) -> f64;

    /// `∫_0^s` of the profile, with `s` clamped to `[0, |Ω|]`.
    fn concentration_at(&self, s: f64) -> f64;

    /// Points where the profile changes formula.
    fn knots(&self) -> &[f64];
}

/// Step function `u*` with `levels[k]` on `[breakpoints[k], breakpoints[k+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecreasingProfile {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DecreasingProfile {
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() || breakpoints.len() != levels.len() + 1 {
            return Err(Error::invalid(format!(
                "profile needs K >= 1 levels and K + 1 breakpoints, got {} and {}",
                levels.len(),
                breakpoints.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::invalid("first breakpoint must be 0"));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) || !breakpoints.iter().all(|s| s.is_finite()) {
            return Err(Error::invalid("breakpoints must be finite and strictly increasing"));
        }
        if levels.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::invalid("levels must be finite and nonnegative"));
        }
        if levels.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("levels must be nonincreasing"));
        }
        Ok(Self::from_parts(breakpoints, levels))
    }

    fn from_parts(breakpoints: Vec<f64>, levels: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(breakpoints.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for (k, l) in levels.iter().enumerate() {
            acc += l * (breakpoints[k + 1] - breakpoints[k]);
            cumulative.push(acc);
        }
        Self {
            breakpoints,
            levels,
            cumulative,
        }
    }

    /// Constant `c` on `[0, measure]`.
    pub fn constant(measure: f64, c: f64) -> Result<Self> {
        Self::new(vec![0.0, measure], vec![c])
    }

    /// Profile from values already sorted in decreasing order, one cell of
    /// measure `cell` each. Runs of equal values are merged into one step.
    fn from_sorted_cells(sorted: &[f64], cell: f64) -> Self {
        let mut breakpoints = vec![0.0];
        let mut levels: Vec<f64> = Vec::new();
        for (k, v) in sorted.iter().enumerate() {
            match levels.last() {
                Some(last) if *last == *v => {
                    *breakpoints.last_mut().unwrap() = (k + 1) as f64 * cell;
                }
                _ => {
                    levels.push(*v);
                    breakpoints.push((k + 1) as f64 * cell);
                }
            }
        }
        Self::from_parts(breakpoints, levels)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn num_steps(&self) -> usize {
        self.levels.len()
    }

    fn step_index(&self, s: f64) -> usize {
        // k with breakpoints[k] <= s < breakpoints[k+1]
        let k = self.breakpoints.partition_point(|b| *b <= s);
        k.saturating_sub(1).min(self.levels.len() - 1)
    }

    pub fn concentration(&self, s: f64) -> Result<f64> {
        concentration(self, s)
    }

    pub fn maximal_mean(&self, s: f64) -> Result<f64> {
        maximal_mean(self, s)
    }

    pub fn lorentz_norm(&self, p: f64, q: f64) -> Result<f64> {
        lorentz_norm(self, p, q)
    }

    /// `∫ u*²`.
    pub fn integral_of_square(&self) -> f64 {
        self.levels
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(l, w)| l * l * (w[1] - w[0]))
            .sum()
    }

    /// Pointwise sum with another profile of equal measure; the result is a
    /// step function on the union of breakpoints.
    pub fn sum(&self, other: &DecreasingProfile) -> Result<DecreasingProfile> {
        if (self.measure() - other.measure()).abs() > 1e-12 * self.measure() {
            return Err(Error::GridMismatch(format!(
                "profile measures differ: {} vs {}",
                self.measure(),
                other.measure()
            )));
        }
        let knots = merge_knots(&self.breakpoints, &other.breakpoints);
        let levels = knots
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                self.value_at(mid) + other.value_at(mid)
            })
            .collect();
        DecreasingProfile::new(knots, levels)
    }

    /// Two-column CSV `s,level`: row `k` holds breakpoint `s_k` and the level
    /// on `[s_k, s_{k+1})`; the final row holds `|Ω|` and level 0.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["s", "level"])?;
        for (s, l) in self.breakpoints.iter().zip(&self.levels) {
            wtr.write_record([s.to_string(), l.to_string()])?;
        }
        wtr.write_record([self.measure().to_string(), "0".to_string()])?;
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(BufWriter::new(File::create(path)?))
    }

    pub fn read_csv<R: Read>(r: R, source: &Path) -> Result<Self> {
        let (header, rows) = read_two_columns(r, source)?;
        if header.1 != "level" && header.1 != "value" {
            return Err(Error::Parse {
                path: source.to_path_buf(),
                message: format!("expected columns s,level, got {},{}", header.0, header.1),
            });
        }
        if rows.len() < 2 {
            return Err(Error::Parse {
                path: source.to_path_buf(),
                message: "profile needs at least two rows".into(),
            });
        }
        let breakpoints = rows.iter().map(|r| r.0).collect();
        let levels = rows[..rows.len() - 1].iter().map(|r| r.1).collect();
        DecreasingProfile::new(breakpoints, levels)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(File::open(path)?, path)
    }
}

impl MassProfile for DecreasingProfile {
    fn measure(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    fn value_at(&self, s: f64) -> f64 {
        if s >= self.measure() || s < 0.0 {
            0.0
        } else {
            self.levels[self.step_index(s)]
        }
    }

    fn concentration_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.measure());
        if s >= self.measure() {
            return *self.cumulative.last().unwrap();
        }
        let k = self.step_index(s);
        self.cumulative[k] + self.levels[k] * (s - self.breakpoints[k])
    }

    fn knots(&self) -> &[f64] {
        &self.breakpoints
    }
}

pub(crate) fn read_two_columns<R: Read>(
    r: R,
    source: &Path,
) -> Result<((String, String), Vec<(f64, f64)>)> {
    let parse_err = |message: String| Error::Parse {
        path: source.to_path_buf(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let h = rdr.headers()?.clone();
    if h.len() != 2 {
        return Err(parse_err(format!("expected two columns, got {}", h.len())));
    }
    let header = (h[0].to_string(), h[1].to_string());
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let a = rec[0].parse::<f64>().map_err(|e| parse_err(format!("row {k}: {e}")))?;
        let b = rec[1].parse::<f64>().map_err(|e| parse_err(format!("row {k}: {e}")))?;
        rows.push((a, b));
    }
    Ok((header, rows))
}

/// Sorted union of two knot lists, with coincident knots merged.
pub(crate) fn merge_knots(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().chain(b).copied().collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * y.abs().max(1.0));
    out
}

/// `|{ |f| > t }|`.
pub fn distribution_function(f: &GridFunction, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("level t must be nonnegative, got {t}")));
    }
    let count = f.values().iter().filter(|v| v.abs() > t).count();
    Ok(count as f64 * f.cell_measure())
}

/// `|f|` sorted in decreasing order; ties keep cell order.
pub fn sorted_magnitudes(f: &GridFunction) -> Vec<f64> {
    let mut mags: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    // stable sort: equal values keep their cell-index order
    mags.sort_by(|a, b| b.total_cmp(a));
    mags
}

pub fn decreasing_rearrangement(f: &GridFunction) -> DecreasingProfile {
    DecreasingProfile::from_sorted_cells(&sorted_magnitudes(f), f.cell_measure())
}

pub fn concentration(p: &impl MassProfile, s: f64) -> Result<f64> {
    let m = p.measure();
    if !(s >= 0.0 && s <= m) {
        return Err(Error::invalid(format!("s = {s} outside [0, {m}]")));
    }
    Ok(p.concentration_at(s))
}

/// `u**(s) = (1/s) ∫_0^s u*`.
pub fn maximal_mean(p: &impl MassProfile, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::invalid(format!("maximal mean needs s > 0, got {s}")));
    }
    Ok(concentration(p, s)? / s)
}

fn check_lorentz_exponents(p: f64, q: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("Lorentz exponent p must lie in [1, inf), got {p}")));
    }
    if !(q >= 1.0) {
        return Err(Error::invalid(format!("Lorentz exponent q must lie in [1, inf], got {q}")));
    }
    Ok(())
}

/// Lorentz norm `‖h‖_{p,q}` built from `s^{1/p} h**(s)` with weight `ds/s`;
/// `q = ∞` gives the supremum.
///
/// On every step the concentration is affine, `a + L s`, so the integrand is
/// `s^{q/p - q - 1} (a + L s)^q`. Integer `q` is integrated in closed form by
/// binomial expansion; other `q` use 16-point Gauss–Legendre per step.
pub fn lorentz_norm(prof: &DecreasingProfile, p: f64, q: f64) -> Result<f64> {
    check_lorentz_exponents(p, q)?;
    let bp = &prof.breakpoints;
    let lv = &prof.levels;
    if q.is_infinite() {
        let f = |s: f64, a: f64, l: f64| s.powf(1.0 / p - 1.0) * (a + l * s);
        let mut best: f64 = if p == 1.0 { lv[0] } else { 0.0 };
        for k in 0..lv.len() {
            let a = prof.cumulative[k] - lv[k] * bp[k];
            let (lo, hi) = (bp[k], bp[k + 1]);
            if lo > 0.0 {
                best = best.max(f(lo, a, lv[k]));
            }
            best = best.max(f(hi, a, lv[k]));
            if lv[k] > 0.0 && p > 1.0 {
                let crit = (p - 1.0) * a / lv[k];
                if crit > lo && crit < hi {
                    best = best.max(f(crit, a, lv[k]));
                }
            }
        }
        return Ok(best);
    }

    let beta = q / p - q - 1.0;
    // first step: concentration is L_0 s
    let mut total = lv[0].powf(q) * bp[1].powf(q / p) * p / q;
    let integer_q = q.fract() == 0.0 && q <= 64.0;
    for k in 1..lv.len() {
        let a = prof.cumulative[k] - lv[k] * bp[k];
        let l = lv[k];
        let (lo, hi) = (bp[k], bp[k + 1]);
        if integer_q {
            let n = q as u32;
            let mut binom = 1.0;
            for j in 0..=n {
                let term = if j == 0 { a.powi(n as i32) } else { a.powi((n - j) as i32) * l.powi(j as i32) };
                if term != 0.0 {
                    total += binom * term * power_integral(lo, hi, beta + j as f64);
                }
                binom = binom * (n - j) as f64 / (j + 1) as f64;
            }
        } else {
            total += integrate_gl16(lo, hi, |s| s.powf(beta) * (a + l * s).powf(q));
        }
    }
    Ok(total.powf(1.0 / q))
}

/// `∫ a*·b*` for two step profiles, merged exactly over their breakpoints.
pub fn integral_of_product(a: &DecreasingProfile, b: &DecreasingProfile) -> f64 {
    let knots = merge_knots(&a.breakpoints, &b.breakpoints);
    let end = a.measure().min(b.measure());
    knots
        .windows(2)
        .filter(|w| w[0] < end)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            a.value_at(mid) * b.value_at(mid) * (w[1].min(end) - w[0])
        })
        .sum()
}

/// `u★` as a profile of the mass coordinate `s = ω_N |x|^N` on the ball of
/// measure `|Ω|`. The result is a step profile whose nodal values are the
/// right-continuous levels, closing with `u*(|Ω|) = 0`.
pub fn radial_rearrangement(f: &GridFunction) -> RadialProfile {
    profile_to_radial(&decreasing_rearrangement(f))
}

pub fn profile_to_radial(p: &DecreasingProfile) -> RadialProfile {
    let mut values = p.levels.clone();
    values.push(0.0);
    RadialProfile::from_parts(p.breakpoints.clone(), values, ProfileKind::Step)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumRearrangementReport {
    /// `max_r [∫_0^r (f+g)* − ∫_0^r (f* + g*)]`; nonpositive up to rounding.
    pub max_violation: f64,
    /// Where the maximum is attained.
    pub at: f64,
}

/// Checks `∫_0^r (f+g)* ≤ ∫_0^r f* + g*` at every multiple of the cell measure.
pub fn sum_rearrangement_check(f: &GridFunction, g: &GridFunction) -> Result<SumRearrangementReport> {
    f.check_same_grid(g)?;
    let sum = f.add_scaled(g, 1.0)?;
    let (sf, sg, ss) = (sorted_magnitudes(f), sorted_magnitudes(g), sorted_magnitudes(&sum));
    let cell = f.cell_measure();
    let (mut lhs, mut rhs) = (0.0, 0.0);
    let mut report = SumRearrangementReport {
        max_violation: 0.0,
        at: 0.0,
    };
    for k in 0..ss.len() {
        lhs += ss[k];
        rhs += sf[k] + sg[k];
        let v = (lhs - rhs) * cell;
        if v > report.max_violation {
            report.max_violation = v;
            report.at = (k + 1) as f64 * cell;
        }
    }
    Ok(report)
}

/// `Σ f g · cell − ∫ f* g*`; nonpositive by the Hardy–Littlewood inequality.
pub fn hardy_littlewood_gap(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.check_same_grid(g)?;
    let direct: f64 = f.values().iter().zip(g.values()).map(|(a, b)| a * b).sum::<f64>() * f.cell_measure();
    let rearranged = integral_of_product(&decreasing_rearrangement(f), &decreasing_rearrangement(g));
    Ok(direct - rearranged)
}

/// `∫_{Ω★} |∇u★|^p̄ dx` computed in the mass coordinate.
///
/// With `s = ω_N |x|^N`, `|∇u★| = |u*'(s)| · N ω_N^{1/N} s^{1/N'}`. The step
/// profile is smoothed by averaging over `windows` equal windows; slopes
/// between window centres carry the exact integral of the weight
/// `s^{p̄/N'}` over each interval, and the two half-windows at the ends reuse
/// the nearest slope.
pub fn symmetrized_gradient_energy(
    prof: &DecreasingProfile,
    dim: usize,
    pbar: f64,
    windows: usize,
) -> Result<f64> {
    if windows < 2 {
        return Err(Error::invalid("need at least two averaging windows"));
    }
    let n = dim as f64;
    let measure = prof.measure();
    let width = measure / windows as f64;
    let means: Vec<f64> = (0..windows)
        .map(|j| {
            let lo = j as f64 * width;
            let hi = if j + 1 == windows { measure } else { (j + 1) as f64 * width };
            (prof.concentration_at(hi) - prof.concentration_at(lo)) / (hi - lo)
        })
        .collect();
    let coarea = n * unit_ball_measure(dim).powf(1.0 / n);
    let weight_exp = pbar * (1.0 - 1.0 / n);
    let slopes: Vec<f64> = means.windows(2).map(|w| (w[1] - w[0]) / width).collect();
    let mut energy = 0.0;
    for (j, slope) in slopes.iter().enumerate() {
        let lo = (j as f64 + 0.5) * width;
        let hi = (j as f64 + 1.5) * width;
        energy += slope.abs().powf(pbar) * power_integral(lo, hi, weight_exp);
    }
    energy += slopes[0].abs().powf(pbar) * power_integral(0.0, 0.5 * width, weight_exp);
    energy += slopes[slopes.len() - 1].abs().powf(pbar)
        * power_integral(measure - 0.5 * width, measure, weight_exp);
    Ok(coarea.powf(pbar) * energy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolyaSzegoReport {
    /// `Σ α_i Σ_faces |D_i u|^{p_i} · cell`.
    pub anisotropic_energy: f64,
    /// `Λ ∫ |∇u★|^p̄`.
    pub symmetrized_energy: f64,
    /// `max(0, symmetrized − anisotropic) / anisotropic`.
    pub relative_violation: f64,
}

/// Discrete check of `Λ ∫|∇u★|^p̄ ≤ Σ α_i ∫|∂_i u|^{p_i}` for a field that
/// vanishes outside its grid. Forward differences use zero extension.
pub fn polya_szego_check(f: &GridFunction, coeffs: &AnisotropicCoefficients) -> Result<PolyaSzegoReport> {
    if coeffs.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: coeffs.dim(),
        });
    }
    let anisotropic_energy: f64 = (0..2)
        .map(|axis| coeffs.alphas()[axis] * f.gradient_power_sum(axis, coeffs.exponents()[axis]))
        .sum();
    let windows = (f.len() as f64).sqrt().round().max(2.0) as usize;
    let symmetrized_energy = coeffs.lambda_const()
        * symmetrized_gradient_energy(&decreasing_rearrangement(f), 2, coeffs.pbar(), windows)?;
    let relative_violation = if anisotropic_energy > 0.0 {
        ((symmetrized_energy - anisotropic_energy) / anisotropic_energy).max(0.0)
    } else {
        0.0
    };
    Ok(PolyaSzegoReport {
        anisotropic_energy,
        symmetrized_energy,
        relative_violation,
    })
}
