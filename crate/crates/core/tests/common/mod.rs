#![allow(dead_code)]

use anisym::GridFunction;
use nalgebra::{DMatrix, DVector};

/// Dense matrix of `Σ_i α_i D_iᵀ D_i + λ I` with zero ghost cells, the
/// Euler–Lagrange operator of the quadratic energy.
pub fn dense_operator(nx: usize, ny: usize, hx: f64, hy: f64, alphas: [f64; 2], lambda: f64) -> DMatrix<f64> {
    let n = nx * ny;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let idx = |i: usize, j: usize| j * nx + i;
    for j in 0..ny {
        for i in 0..nx {
            let k = idx(i, j);
            a[(k, k)] += lambda + 2.0 * alphas[0] / (hx * hx) + 2.0 * alphas[1] / (hy * hy);
            if i > 0 {
                a[(k, idx(i - 1, j))] -= alphas[0] / (hx * hx);
            }
            if i + 1 < nx {
                a[(k, idx(i + 1, j))] -= alphas[0] / (hx * hx);
            }
            if j > 0 {
                a[(k, idx(i, j - 1))] -= alphas[1] / (hy * hy);
            }
            if j + 1 < ny {
                a[(k, idx(i, j + 1))] -= alphas[1] / (hy * hy);
            }
        }
    }
    a
}

pub fn dense_solve(a: &DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    let b = DVector::from_column_slice(rhs);
    a.clone().lu().solve(&b).expect("nonsingular").as_slice().to_vec()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Deterministic pseudo-random field in `[-1, 1]` (linear congruential, not
/// the library generator).
pub fn lcg_field(nx: usize, ny: usize, lx: f64, ly: f64, seed: u64) -> GridFunction {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let values = (0..nx * ny)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect();
    GridFunction::new(nx, ny, lx / nx as f64, ly / ny as f64, values).unwrap()
}

/// Solves `−z″ − z′/r + λ z = g(r)` on `(0, R)`, `z′(0) = 0`, `z(R) = 0`,
/// by second-order finite volumes on `n` uniform cells; returns `(r_i, z_i)`
/// at the cell centres.
pub fn radial_fd(radius: f64, n: usize, lambda: f64, g: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
    let h = radius / n as f64;
    let r: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    // (1/r)(r z′)′ over the annulus [r − h/2, r + h/2]
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let (rl, rr) = (r[i] - 0.5 * h, r[i] + 0.5 * h);
        let vol = r[i] * h;
        let wl = rl / h;
        let wr = rr / h;
        diag[i] = lambda * vol + wl + wr;
        if i > 0 {
            lower[i] = -wl;
        } else {
            diag[i] -= wl;
        }
        if i + 1 < n {
            upper[i] = -wr;
        } else {
            // z(R) = 0 half a cell beyond the last centre
            diag[i] += wr;
        }
        rhs[i] = g(r[i]) * vol;
    }
    (r, thomas(&lower, &diag, &upper, &rhs))
}

pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// `J_0` by its power series.
pub fn bessel_j0(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let q = -0.25 * x * x;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// First positive zero of `J_0` by bisection on `[2, 3]`.
pub fn first_j0_zero() -> f64 {
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bessel_j0(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
