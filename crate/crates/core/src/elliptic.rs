//! The model anisotropic elliptic problem with zero-order term,
//! `−Σ_i (α_i |∂_i w|^{p_i−2} ∂_i w)_{x_i} + λ w = g` with zero Dirichlet
//! data, solved as the minimizer of its discrete convex energy.
//!
//! Unknowns are cell-centred; the Dirichlet condition enters through zero
//! ghost cells, so every cell has two faces per axis. For `p_i < 2` the
//! integrand `|d|^{p_i}` is replaced by `(d² + ε²)^{p_i/2} − ε^{p_i}`, which
//! keeps the Hessian bounded and the energy consistent with the flux.

use serde::Serialize;

use crate::aniso::AnisotropicCoefficients;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::linalg::BandedSpd;

pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 500;

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EllipticProblem {
    pub coeffs: AnisotropicCoefficients,
    pub lambda0: f64,
    pub rhs: GridFunction,
    pub epsilon: f64,
}

impl EllipticProblem {
    pub fn new(coeffs: AnisotropicCoefficients, lambda0: f64, rhs: GridFunction) -> Result<Self> {
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(Error::invalid(format!("zero-order coefficient must be positive, got {lambda0}")));
        }
        Self::relaxed(coeffs, lambda0, rhs)
    }

    /// Allows `λ = 0`; the energy is then only strictly convex when every
    /// exponent is at most 2.
    pub fn relaxed(coeffs: AnisotropicCoefficients, lambda0: f64, rhs: GridFunction) -> Result<Self> {
        if coeffs.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: coeffs.dim(),
            });
        }
        if !(lambda0 >= 0.0) {
            return Err(Error::invalid(format!("zero-order coefficient must be nonnegative, got {lambda0}")));
        }
        Ok(Self {
            coeffs,
            lambda0,
            rhs,
            epsilon: DEFAULT_EPSILON,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    fn spacing(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.rhs.hx()
        } else {
            self.rhs.hy()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_energy: f64,
    pub residual_norm: f64,
    pub converged: bool,
    /// Energy before each iteration and after the last one.
    pub energies: Vec<f64>,
}

/// Integrand, flux and curvature of one face term `(α/p) ψ_p(d)`.
#[derive(Debug, Clone, Copy)]
struct FaceLaw {
    alpha: f64,
    p: f64,
    eps: f64,
    regularized: bool,
}

impl FaceLaw {
    fn new(alpha: f64, p: f64, eps: f64) -> Self {
        Self {
            alpha,
            p,
            eps,
            regularized: p < 2.0 && eps > 0.0,
        }
    }

    #[inline]
    fn energy(&self, d: f64) -> f64 {
        let (a, p) = (self.alpha, self.p);
        if self.regularized {
            a / p * ((d * d + self.eps * self.eps).powf(0.5 * p) - self.eps.powf(p))
        } else if p == 2.0 {
            0.5 * a * d * d
        } else {
            a / p * d.abs().powf(p)
        }
    }

    #[inline]
    fn flux(&self, d: f64) -> f64 {
        let (a, p) = (self.alpha, self.p);
        if self.regularized {
            a * (d * d + self.eps * self.eps).powf(0.5 * (p - 2.0)) * d
        } else if p == 2.0 {
            a * d
        } else {
            a * d.abs().powf(p - 2.0) * d
        }
    }

    #[inline]
    fn curvature(&self, d: f64) -> f64 {
        let (a, p) = (self.alpha, self.p);
        if self.regularized {
            let e2 = self.eps * self.eps;
            a * (d * d + e2).powf(0.5 * (p - 4.0)) * ((p - 1.0) * d * d + e2)
        } else if p == 2.0 {
            a
        } else {
            a * (p - 1.0) * d.abs().powf(p - 2.0)
        }
    }
}

/// Visits every face along `axis` as `(left cell, right cell)`, `None`
/// standing for the zero ghost outside the grid.
fn for_each_face(nx: usize, ny: usize, axis: usize, mut f: impl FnMut(Option<usize>, Option<usize>)) {
    if axis == 0 {
        for j in 0..ny {
            for i in 0..=nx {
                let left = (i > 0).then(|| j * nx + i - 1);
                let right = (i < nx).then(|| j * nx + i);
                f(left, right);
            }
        }
    } else {
        for j in 0..=ny {
            for i in 0..nx {
                let left = (j > 0).then(|| (j - 1) * nx + i);
                let right = (j < ny).then(|| j * nx + i);
                f(left, right);
            }
        }
    }
}

fn laws(prob: &EllipticProblem) -> [FaceLaw; 2] {
    let c = &prob.coeffs;
    [
        FaceLaw::new(c.alphas()[0], c.exponents()[0], prob.epsilon),
        FaceLaw::new(c.alphas()[1], c.exponents()[1], prob.epsilon),
    ]
}

fn energy_of(values: &[f64], prob: &EllipticProblem) -> f64 {
    let (nx, ny) = (prob.rhs.nx(), prob.rhs.ny());
    let cm = prob.rhs.cell_measure();
    let at = |k: Option<usize>| k.map_or(0.0, |k| values[k]);
    let mut total = 0.0;
    for (axis, law) in laws(prob).iter().enumerate() {
        let h = prob.spacing(axis);
        let mut sum = 0.0;
        for_each_face(nx, ny, axis, |l, r| {
            sum += law.energy((at(r) - at(l)) / h);
        });
        total += sum;
    }
    let mut zero_order = 0.0;
    let mut load = 0.0;
    for (u, g) in values.iter().zip(prob.rhs.values()) {
        zero_order += u * u;
        load += g * u;
    }
    (total + 0.5 * prob.lambda0 * zero_order - load) * cm
}

/// `J(U) = Σ_i (α_i/p_i) Σ_faces |D_i U|^{p_i} |cell| + (λ/2) Σ U² |cell| − Σ g U |cell|`.
pub fn discrete_energy(u: &GridFunction, prob: &EllipticProblem) -> Result<f64> {
    u.check_same_grid(&prob.rhs)?;
    Ok(energy_of(u.values(), prob))
}

/// Discrete residual `∂J/∂U_k / |cell|`, the cellwise form of the equation.
fn residual_of(values: &[f64], prob: &EllipticProblem, out: &mut [f64]) {
    let (nx, ny) = (prob.rhs.nx(), prob.rhs.ny());
    let at = |k: Option<usize>| k.map_or(0.0, |k| values[k]);
    for (k, r) in out.iter_mut().enumerate() {
        *r = prob.lambda0 * values[k] - prob.rhs.values()[k];
    }
    for (axis, law) in laws(prob).iter().enumerate() {
        let h = prob.spacing(axis);
        for_each_face(nx, ny, axis, |l, r| {
            let q = law.flux((at(r) - at(l)) / h) / h;
            if let Some(r) = r {
                out[r] += q;
            }
            if let Some(l) = l {
                out[l] -= q;
            }
        });
    }
}

pub fn energy_residual(u: &GridFunction, prob: &EllipticProblem) -> Result<GridFunction> {
    u.check_same_grid(&prob.rhs)?;
    let mut out = vec![0.0; u.len()];
    residual_of(u.values(), prob, &mut out);
    u.with_values(out)
}

/// `(Σ r_k² |cell|)^{1/2}`.
fn residual_norm(r: &[f64], cm: f64) -> f64 {
    (r.iter().map(|v| v * v).sum::<f64>() * cm).sqrt()
}

fn assemble_hessian(values: &[f64], prob: &EllipticProblem, h_mat: &mut BandedSpd) {
    let (nx, ny) = (prob.rhs.nx(), prob.rhs.ny());
    let at = |k: Option<usize>| k.map_or(0.0, |k| values[k]);
    h_mat.fill_zero();
    for k in 0..values.len() {
        h_mat.add(k, k, prob.lambda0);
    }
    for (axis, law) in laws(prob).iter().enumerate() {
        let h = prob.spacing(axis);
        for_each_face(nx, ny, axis, |l, r| {
            let c = law.curvature((at(r) - at(l)) / h) / (h * h);
            if let Some(r) = r {
                h_mat.add(r, r, c);
            }
            if let Some(l) = l {
                h_mat.add(l, l, c);
            }
            if let (Some(l), Some(r)) = (l, r) {
                h_mat.add(r, l, -c);
            }
        });
    }
}

pub fn solve_elliptic(prob: &EllipticProblem, tol: f64, max_iter: usize) -> Result<(GridFunction, SolveReport)> {
    solve_elliptic_from(prob, None, tol, max_iter)
}

/// Damped Newton with Armijo backtracking on the discrete energy; steepest
/// descent replaces the Newton direction whenever the Hessian factorization
/// fails or the direction is not a descent direction.
///
/// When an exponent below 2 is regularized with a small `ε`, the curvature
/// `~ε^{p−2}` at flat spots slows Newton to a crawl. The solve then walks `ε`
/// down from `CONTINUATION_START` by factors of 100, warm-starting each
/// stage; only the last stage, at the requested `ε`, has to meet `tol`.
pub fn solve_elliptic_from(
    prob: &EllipticProblem,
    initial: Option<&GridFunction>,
    tol: f64,
    max_iter: usize,
) -> Result<(GridFunction, SolveReport)> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let rhs = &prob.rhs;
    let mut u = match initial {
        Some(u0) => {
            u0.check_same_grid(rhs)?;
            u0.values().to_vec()
        }
        None => vec![0.0; rhs.len()],
    };
    let stages = continuation_stages(prob);
    let mut used = 0;
    for (k, eps) in stages.iter().enumerate() {
        if k + 1 == stages.len() {
            let stage = Stage::run(prob, u, tol, max_iter - used);
            let iterations = used + stage.iterations;
            return match stage.failure {
                None => Ok((
                    rhs.with_values(stage.u)?,
                    SolveReport {
                        iterations,
                        final_energy: stage.energy,
                        residual_norm: stage.residual,
                        converged: true,
                        energies: stage.energies,
                    },
                )),
                Some(solver) => Err(Error::NoConvergence {
                    solver,
                    iterations,
                    residual: stage.residual,
                }),
            };
        }
        let relaxed = prob.clone().with_epsilon(*eps);
        let stage = Stage::run(&relaxed, u, tol.max(CONTINUATION_TOL), (max_iter - used) / 2);
        used += stage.iterations;
        u = stage.u;
    }
    unreachable!("the last stage returns")
}

const CONTINUATION_START: f64 = 1e-2;
const CONTINUATION_TOL: f64 = 1e-8;

fn continuation_stages(prob: &EllipticProblem) -> Vec<f64> {
    let mut stages = Vec::new();
    if laws(prob).iter().any(|l| l.regularized) {
        let mut eps = CONTINUATION_START;
        while eps > 100.0 * prob.epsilon {
            stages.push(eps);
            eps *= 1e-2;
        }
    }
    stages.push(prob.epsilon);
    stages
}

/// One Newton minimization at fixed `ε`.
struct Stage {
    u: Vec<f64>,
    iterations: usize,
    energy: f64,
    residual: f64,
    energies: Vec<f64>,
    /// Which part gave up, if the tolerance was not met.
    failure: Option<&'static str>,
}

impl Stage {
    fn run(prob: &EllipticProblem, mut u: Vec<f64>, tol: f64, max_iter: usize) -> Stage {
        let rhs = &prob.rhs;
        let n = rhs.len();
        let cm = rhs.cell_measure();
        let mut r = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut dir = vec![0.0; n];
        let mut hess = BandedSpd::zeros(n, rhs.nx());
        let mut energy = energy_of(&u, prob);
        let mut energies = vec![energy];
        let mut iterations = 0;

        loop {
            residual_of(&u, prob, &mut r);
            let res = residual_norm(&r, cm);
            let finish = |u, energies, failure| Stage {
                u,
                iterations,
                energy,
                residual: res,
                energies,
                failure,
            };
            if res <= tol {
                return finish(u, energies, None);
            }
            if iterations >= max_iter {
                return finish(u, energies, Some("elliptic Newton"));
            }

            assemble_hessian(&u, prob, &mut hess);
            let newton = hess.clone().cholesky().map(|chol| {
                dir.iter_mut().zip(&r).for_each(|(d, rk)| *d = -rk);
                chol.solve_in_place(&mut dir);
            });
            let mut slope: f64 = dir.iter().zip(&r).map(|(d, rk)| d * rk).sum::<f64>() * cm;
            if newton.is_none() || !(slope < 0.0) {
                dir.iter_mut().zip(&r).for_each(|(d, rk)| *d = -rk);
                slope = -res * res;
            }

            // rounding floor for energy comparisons
            let noise = 64.0 * f64::EPSILON * energy_scale(&u, prob);
            let mut t = 1.0;
            let accepted = loop {
                for k in 0..n {
                    trial[k] = u[k] + t * dir[k];
                }
                let e = energy_of(&trial, prob);
                if e <= energy + ARMIJO_C * t * slope || (e <= energy + noise && -slope * t <= noise) {
                    break Some(e);
                }
                t *= 0.5;
                if t < MIN_STEP {
                    break None;
                }
            };
            match accepted {
                Some(e) => {
                    std::mem::swap(&mut u, &mut trial);
                    energy = e;
                    energies.push(e);
                }
                None => return finish(u, energies, Some("elliptic line search")),
            }
            iterations += 1;
        }
    }
}

/// Sum of absolute energy contributions, the magnitude rounding acts on.
fn energy_scale(values: &[f64], prob: &EllipticProblem) -> f64 {
    let cm = prob.rhs.cell_measure();
    let load: f64 = values.iter().zip(prob.rhs.values()).map(|(u, g)| (u * g).abs()).sum();
    let sq: f64 = values.iter().map(|u| u * u).sum();
    (load + 0.5 * prob.lambda0 * sq) * cm + energy_of(values, prob).abs()
}
