//! Monic symmetric determinantal representations of multivariate real
//! polynomials.
//!
//! A degree-d polynomial `f` with `f(0) = 1` is *determinantal* when
//! `f(x) = det(I + x1 A1 + ... + xn An)` for real symmetric `d x d` matrices
//! `Ai`; such representations characterize feasible sets of semidefinite
//! programs. This crate computes them at size d:
//!
//! - [`gmd`]: generalized mixed discriminants, which give every coefficient
//!   of the determinant expansion of a linear matrix polynomial — both a
//!   fast exact oracle ([`gmd::expand_det`]) and, over a symbolic ring, the
//!   polynomial systems a candidate representation must satisfy.
//! - [`linalg`]: the numeric substrate — Sturm-certified real roots, a
//!   cyclic Jacobi eigensolver, rank-revealing linear solves.
//! - [`bivariate`]: the two-variable pipeline (eigenvalues from axis
//!   restrictions, diagonal from a linear system, off-diagonals from a
//!   closed form for cubics or verified Newton multistart otherwise).
//! - [`equivalence`]: signature-conjugation orbits, canonical forms, and
//!   class counting.
//! - [`multivariate`]: stitching bivariate slices into n-variable tuples by
//!   linear extension or compatibility filtering, with full re-verification.
//! - [`cli`]: the `detrep` command-line interface.
//!
//! Solvers never return an unverified answer: every representation is
//! re-expanded and compared against the input coefficient-by-coefficient, so
//! search failures surface as explicit `BudgetExhausted` or
//! `CompatibilityExhausted` statuses, distinct from the certified
//! impossibility statuses.

#![allow(clippy::needless_range_loop)] // indexed loops read better for dense matrices

pub mod bivariate;
pub mod cli;
pub mod equivalence;
pub mod gmd;
pub mod linalg;
pub mod multivariate;
pub mod poly;

pub use bivariate::{solve_bivariate, Msdr, SolveConfig, SolveReport, SolveStatus};
pub use gmd::{expand_det, expand_det_lmp};
pub use linalg::{DiagonalMatrix, SymmetricMatrix};
pub use multivariate::solve_multivariate;
pub use poly::{parse_expression, Polynomial, UnivariatePolynomial};
