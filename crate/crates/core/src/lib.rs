//! Recursion operators between regular Poisson structures.
//!
//! Two Poisson bivectors `w`, `w'` of the same constant rank admit a type-(1,1)
//! tensor `R` with `w'♯ = R∘w♯ = w♯∘R*` exactly when their characteristic
//! distributions (the images of the sharp maps) coincide. This crate decides
//! that condition on a set of sample points of a coordinate chart and, when it
//! holds, builds `R` and `R*` pointwise:
//!
//! 1. restrict both bivectors to an orthonormal basis `B` of the common
//!    characteristic subspace, `M = BᵀWB`, `M' = BᵀW'B`;
//! 2. invert the leaf part, `R_F = M'·M⁻¹`, `R*_F = M⁻¹·M'`;
//! 3. extend by the identity on the Euclidean-orthogonal complement,
//!    `R = B·R_F·Bᵀ + (I − BBᵀ)`.
//!
//! The complement is one choice of splitting; `R` depends on it, `R_F` does
//! not. Coordinate functions are given as expression strings and
//! differentiated exactly with forward-mode dual numbers, which feeds the
//! Jacobi (Schouten) residual and the Nijenhuis torsion.
//!
//! The crate is `no_std` and only needs `alloc`.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dual;
pub mod expr;
pub mod fields;
pub mod linalg;
pub mod recursion;
pub mod rng;

pub use dual::Dual;
pub use expr::{Chart, ChartError, DomainError, ParseError, ScalarExpr};
pub use fields::{BivectorField, FieldError, TensorField11, Torsion};
pub use linalg::{Matrix, SingularMatrix, Subspace};
pub use recursion::{BuildError, ExistenceReport, LeafData, PointCheck, RecursionPointResult, Tolerances, Verdict};
pub use rng::SplitMix64;
