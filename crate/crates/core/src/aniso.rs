//! Anisotropic structure data: exponents, weights, their harmonic mean, the
//! power-sum Young function and its radial symmetrization constant.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gamma function.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Measure of the unit ball in dimension `dim`.
pub fn unit_ball_measure(dim: usize) -> f64 {
    let n = dim as f64;
    PI.powf(n / 2.0) / gamma(1.0 + n / 2.0)
}

/// Hölder conjugate `p / (p - 1)`; infinite for `p = 1`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// Harmonic mean `N / Σ 1/p_i` of the exponents.
pub fn harmonic_mean(exponents: &[f64]) -> Result<f64> {
    if exponents.is_empty() {
        return Err(Error::invalid("harmonic mean of an empty exponent list"));
    }
    if let Some(p) = exponents.iter().find(|p| !(**p >= 1.0) || !p.is_finite()) {
        return Err(Error::invalid(format!("exponent {p} is not a finite real >= 1")));
    }
    let inv_sum: f64 = exponents.iter().map(|p| 1.0 / p).sum();
    Ok(exponents.len() as f64 / inv_sum)
}

/// Symmetrization constant Λ such that `Λ|ξ|^p̄` is the radial symmetrization
/// of `Σ α_i |ξ_i|^{p_i}`.
///
/// Exponents equal to 1 use the limit conventions `(p′)^{1/p′} → 1` and
/// `Γ(1 + 1/p′) → 1`.
pub fn lambda_constant(alphas: &[f64], exponents: &[f64], dim: usize) -> Result<f64> {
    check_lengths(alphas, exponents, dim)?;
    let pbar = harmonic_mean(exponents)?;
    if pbar <= 1.0 {
        return Err(Error::invalid(format!(
            "harmonic mean {pbar} must exceed 1 for the symmetrization constant"
        )));
    }
    let n = dim as f64;
    let pbar_conj = conjugate_exponent(pbar);

    let mut product = 1.0;
    for &p in exponents {
        if p > 1.0 {
            let pc = conjugate_exponent(p);
            product *= p.powf(1.0 / p) * pc.powf(1.0 / pc) * gamma(1.0 + 1.0 / pc);
        }
    }
    let prefactor = 2f64.powf(pbar) * (pbar - 1.0).powf(pbar - 1.0) / pbar.powf(pbar);
    let bracket = product / (unit_ball_measure(dim) * gamma(1.0 + n / pbar_conj));
    let weights: f64 = alphas
        .iter()
        .zip(exponents)
        .map(|(a, p)| a.powf(1.0 / p))
        .product();
    Ok(prefactor * bracket.powf(pbar / n) * weights.powf(pbar / n))
}

fn check_lengths(alphas: &[f64], exponents: &[f64], dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::invalid(format!("dimension must be at least 2, got {dim}")));
    }
    if alphas.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: alphas.len(),
        });
    }
    if exponents.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: exponents.len(),
        });
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
        return Err(Error::invalid(format!("weight {a} is not a finite positive real")));
    }
    Ok(())
}

/// Weights and exponents of the model operator, with the derived quantities
/// fixed at construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnisotropicCoefficients {
    alphas: Vec<f64>,
    exponents: Vec<f64>,
    dim: usize,
    pbar: f64,
    pbar_conj: f64,
    lambda_const: f64,
}

impl AnisotropicCoefficients {
    pub fn new(alphas: Vec<f64>, exponents: Vec<f64>) -> Result<Self> {
        let dim = exponents.len();
        check_lengths(&alphas, &exponents, dim)?;
        let pbar = harmonic_mean(&exponents)?;
        if pbar <= 1.0 {
            return Err(Error::invalid(format!(
                "harmonic mean of exponents is {pbar}, must exceed 1"
            )));
        }
        let lambda_const = lambda_constant(&alphas, &exponents, dim)?;
        Ok(Self {
            alphas,
            exponents,
            dim,
            pbar,
            pbar_conj: conjugate_exponent(pbar),
            lambda_const,
        })
    }

    /// Equal weights `alpha` and exponents `p` in every direction.
    pub fn isotropic(dim: usize, alpha: f64, p: f64) -> Result<Self> {
        Self::new(vec![alpha; dim], vec![p; dim])
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pbar(&self) -> f64 {
        self.pbar
    }

    pub fn pbar_conj(&self) -> f64 {
        self.pbar_conj
    }

    pub fn lambda_const(&self) -> f64 {
        self.lambda_const
    }
}

/// Raw weights/exponents as they appear in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSpec {
    pub alphas: Vec<f64>,
    pub exponents: Vec<f64>,
}

impl TryFrom<CoefficientSpec> for AnisotropicCoefficients {
    type Error = Error;

    fn try_from(spec: CoefficientSpec) -> Result<Self> {
        AnisotropicCoefficients::new(spec.alphas, spec.exponents)
    }
}

impl From<&AnisotropicCoefficients> for CoefficientSpec {
    fn from(c: &AnisotropicCoefficients) -> Self {
        CoefficientSpec {
            alphas: c.alphas.clone(),
            exponents: c.exponents.clone(),
        }
    }
}

/// The Young function `Φ(ξ) = Σ α_i |ξ_i|^{p_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct YoungFunctionPhi {
    pub coeffs: AnisotropicCoefficients,
}

impl YoungFunctionPhi {
    pub fn new(coeffs: AnisotropicCoefficients) -> Self {
        Self { coeffs }
    }

    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        phi_eval(xi, self)
    }

    /// Radial symmetrization `Λ r^p̄`.
    pub fn symmetrized(&self, r: f64) -> f64 {
        self.coeffs.lambda_const * r.abs().powf(self.coeffs.pbar)
    }
}

pub fn phi_eval(xi: &[f64], phi: &YoungFunctionPhi) -> Result<f64> {
    let c = &phi.coeffs;
    if xi.len() != c.dim {
        return Err(Error::DimensionMismatch {
            expected: c.dim,
            got: xi.len(),
        });
    }
    Ok(xi
        .iter()
        .zip(c.alphas.iter().zip(&c.exponents))
        .map(|(x, (a, p))| a * x.abs().powf(*p))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn gamma_half_integers_and_integers() {
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(1.5), PI.sqrt() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(1.0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(5.0), 24.0, max_relative = 1e-13);
        // Γ(4/3), Γ(5/3) from a 30-digit evaluation
        assert_relative_eq!(gamma(4.0 / 3.0), 0.892_979_511_569_249_2, max_relative = 1e-13);
        assert_relative_eq!(gamma(5.0 / 3.0), 0.902_745_292_950_933_6, max_relative = 1e-13);
    }

    #[test]
    fn unit_ball() {
        assert_relative_eq!(unit_ball_measure(2), PI, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_measure(3), 4.0 * PI / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn harmonic_mean_examples() {
        assert_eq!(harmonic_mean(&[2.0, 2.0]).unwrap(), 2.0);
        assert_relative_eq!(harmonic_mean(&[1.5, 3.0]).unwrap(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(harmonic_mean(&[4.0, 4.0, 4.0]).unwrap(), 4.0, max_relative = 1e-15);
    }

    #[test]
    fn harmonic_mean_rejects_bad_input() {
        assert!(harmonic_mean(&[]).is_err());
        assert!(harmonic_mean(&[0.5, 2.0]).is_err());
        assert!(harmonic_mean(&[f64::NAN, 2.0]).is_err());
    }

    #[test]
    fn coefficients_reject_pbar_at_most_one() {
        let err = AnisotropicCoefficients::new(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap_err();
        assert!(err.to_string().contains("harmonic mean"));
        assert!(AnisotropicCoefficients::new(vec![1.0], vec![2.0]).is_err());
        assert!(AnisotropicCoefficients::new(vec![1.0, -1.0], vec![2.0, 2.0]).is_err());
        assert!(AnisotropicCoefficients::new(vec![1.0], vec![2.0, 2.0]).is_err());
    }

    // Reference values below come from a 30-digit evaluation of the closed
    // formula, independent of this implementation.
    #[test]
    fn lambda_constant_reference_values() {
        assert_relative_eq!(
            lambda_constant(&[1.0, 1.0], &[2.0, 2.0], 2).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            lambda_constant(&[1.0, 1.0], &[1.5, 3.0], 2).unwrap(),
            0.916_486_424_665_735_1,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            lambda_constant(&[2.0, 3.0, 0.5], &[2.0, 3.0, 4.0], 3).unwrap(),
            1.193_046_672_315_777_9,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            lambda_constant(&[1.0, 1.0], &[4.0, 4.0], 2).unwrap(),
            0.654_527_763_919_509_7,
            max_relative = 1e-12
        );
        // p_1 = 1 with the limit convention
        assert_relative_eq!(
            lambda_constant(&[1.0, 1.0], &[1.0, 3.0], 2).unwrap(),
            0.743_629_561_190_983_0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn lambda_constant_weight_examples() {
        for c in [0.1, 1.0, 3.5, 40.0] {
            assert_relative_eq!(
                lambda_constant(&[c, c], &[2.0, 2.0], 2).unwrap(),
                c,
                max_relative = 1e-12
            );
        }
        assert_relative_eq!(
            lambda_constant(&[1.0, 4.0], &[2.0, 2.0], 2).unwrap(),
            2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn lambda_constant_rejects_pbar_one() {
        assert!(lambda_constant(&[1.0, 1.0], &[1.0, 1.0], 2).is_err());
        assert!(lambda_constant(&[1.0, 1.0], &[2.0, 2.0], 3).is_err());
    }

    #[test]
    fn phi_examples() {
        let phi = YoungFunctionPhi::new(AnisotropicCoefficients::isotropic(2, 1.0, 2.0).unwrap());
        assert_eq!(phi.eval(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(phi.eval(&[1.0, 1.0]).unwrap(), 2.0);
        let phi = YoungFunctionPhi::new(
            AnisotropicCoefficients::new(vec![1.0, 2.0], vec![2.0, 3.0]).unwrap(),
        );
        assert_relative_eq!(phi.eval(&[1.0, 2.0]).unwrap(), 17.0, max_relative = 1e-15);
        assert!(matches!(
            phi.eval(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    fn coefficient_set() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..5).prop_flat_map(|n| {
            (
                prop::collection::vec(0.1f64..10.0, n),
                prop::collection::vec(1.2f64..6.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn harmonic_mean_between_min_and_max(ps in prop::collection::vec(1.0f64..20.0, 1..8)) {
            let m = harmonic_mean(&ps).unwrap();
            let lo = ps.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ps.iter().cloned().fold(0.0, f64::max);
            prop_assert!(m >= lo * (1.0 - 1e-14) && m <= hi * (1.0 + 1e-14));
            let mut rev = ps.clone();
            rev.reverse();
            prop_assert!((harmonic_mean(&rev).unwrap() - m).abs() <= 1e-13 * m);
        }

        #[test]
        fn lambda_invariant_under_pair_permutation((a, p) in coefficient_set(), shift in 0usize..4) {
            let n = a.len();
            let base = lambda_constant(&a, &p, n).unwrap();
            let mut a2 = a.clone();
            let mut p2 = p.clone();
            a2.rotate_left(shift % n);
            p2.rotate_left(shift % n);
            let rotated = lambda_constant(&a2, &p2, n).unwrap();
            prop_assert!((rotated - base).abs() <= 1e-12 * base);
        }

        #[test]
        fn lambda_scales_linearly_for_equal_exponents(
            p in 1.2f64..6.0, c in 0.01f64..100.0, a in prop::collection::vec(0.1f64..10.0, 2..5)
        ) {
            let n = a.len();
            let ps = vec![p; n];
            let base = lambda_constant(&a, &ps, n).unwrap();
            let scaled: Vec<f64> = a.iter().map(|x| x * c).collect();
            let got = lambda_constant(&scaled, &ps, n).unwrap();
            prop_assert!((got - c * base).abs() <= 1e-12 * c * base);
        }

        #[test]
        fn phi_midpoint_convex_along_axes(
            x in -5.0f64..5.0, y in -5.0f64..5.0, other in -3.0f64..3.0, axis in 0usize..2,
            p1 in 1.0f64..4.0, p2 in 1.0f64..4.0
        ) {
            let phi = YoungFunctionPhi::new(
                AnisotropicCoefficients::new(vec![1.3, 0.7], vec![p1.max(1.5), p2]).unwrap(),
            );
            let point = |t: f64| if axis == 0 { [t, other] } else { [other, t] };
            let mid = phi.eval(&point(0.5 * (x + y))).unwrap();
            let avg = 0.5 * (phi.eval(&point(x)).unwrap() + phi.eval(&point(y)).unwrap());
            prop_assert!(mid <= avg * (1.0 + 1e-12) + 1e-12);
            prop_assert_eq!(phi.eval(&point(x)).unwrap(), phi.eval(&point(-x)).unwrap());
        }
    }
}
