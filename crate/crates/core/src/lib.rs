//! Compiled high-order Magnus expansions for single-control Hamiltonians
//! `H(t) = A + d(t) B`.
//!
//! The expensive part of the Magnus expansion — nested time integrals of
//! commutator chains — is done once per control model and stored as a sparse
//! tensor of real coefficients over a basis of the dynamical Lie algebra
//! generated by `{A, B}`. After that one-time compilation, the truncated
//! expansion `M(t, d⃗) = Σ_μ a_μ(t, d⃗) L_μ` is a plain polynomial in the
//! evolution time and the control-polynomial coefficients, cheap enough to
//! sit inside an optimizer loop.
//!
//! The crate is organized around that pipeline:
//!
//! * [`operator`] — dense Hermitian operators and the small amount of linear
//!   algebra everything else shares.
//! * [`lie`] — Gram–Schmidt generation of the dynamical Lie algebra and its
//!   structure constants.
//! * [`trees`] — the binary trees indexing nested integrals of commutators,
//!   their rational weights, and exact integration of monomials over a tree.
//! * [`coeffs`] — assembly of the sparse coefficient tensors `S` and `T`.
//! * [`artifact`] — binary persistence of a compiled tensor + basis.
//! * [`eval`] — polynomial evaluation of the expansion, propagators,
//!   truncation-error estimates, convergence checks.
//! * [`grad`] — analytic derivatives of the expansion and of the propagator.
//! * [`spline`] — Hermite-spline pulse parametrization and its Jacobian.
//! * [`models`] — the Ising and Rydberg-blockade control models, gates, and
//!   reference states.
//! * [`verify`] — independent oracles (quadrature, high-order Runge–Kutta)
//!   and error-scaling scans.
//! * [`optim`] — box-constrained quasi-Newton pulse optimization with
//!   truncation-error-triggered spline refinement.

pub mod artifact;
pub mod coeffs;
pub mod eigen;
pub mod error;
pub mod eval;
pub mod grad;
pub mod lie;
pub mod models;
pub mod operator;
pub mod optim;
pub mod quad;
pub mod rng;
pub mod spline;
pub mod trees;
pub mod verify;

pub use error::{MagnusError, Result};
pub use operator::HermitianOperator;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex vector (states).
pub type CVec = nalgebra::DVector<C64>;
/// Dense real vector (Lie-basis coefficients, controls).
pub type RVec = nalgebra::DVector<f64>;
/// Dense real matrix.
pub type RMat = nalgebra::DMatrix<f64>;
