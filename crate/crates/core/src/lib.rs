//! Comparison results for anisotropic parabolic Dirichlet problems, checked
//! numerically.
//!
//! The crate time-steps `u_t − Σ_i (α_i |∂_i u|^{p_i−2} ∂_i u)_{x_i} = f` on a
//! rectangle with implicit Euler (each step a convex minimization), solves the
//! radially symmetrized counterpart in the mass coordinate, and verifies that
//! the rearranged solution is dominated by the symmetrized one.

pub mod aniso;
pub mod elliptic;
pub mod error;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod parabolic;
pub mod quadrature;
pub mod radial;
pub mod rearrange;

pub use aniso::{harmonic_mean, lambda_constant, phi_eval, AnisotropicCoefficients, YoungFunctionPhi};
pub use error::{Error, Result};
pub use grid::GridFunction;
pub use radial::{RadialProfile, RadialSettings};
pub use rearrange::{DecreasingProfile, MassProfile};
