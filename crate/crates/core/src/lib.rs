//! Algebraic curvature models of arbitrary signature.
//!
//! The crate provides:
//!
//! * [`linalg`] — inner product spaces of signature `(p, q)`, nondegenerate
//!   subspaces, complements, real generalized eigenspace decompositions, and
//!   seeded Grassmannian sampling;
//! * [`model`] — algebraic curvature tensors and the Jacobi-type operators
//!   built from them (Jacobi, polarized Jacobi, higher-order Jacobi, Ricci);
//! * [`commuting`] — checks for the commuting-Jacobi property
//!   `J(pi) J(pi^perp) = J(pi^perp) J(pi)` and the associated block
//!   decomposition into Einstein / pseudo-Einstein pieces;
//! * [`expr`] — a small closed-form expression language with exact first and
//!   second derivatives via second-order forward mode;
//! * [`geometry`] — numerical Riemannian geometry of coordinate charts:
//!   Christoffel symbols, the curvature model at a point, geodesics, scalar
//!   curvature blowup fitting, and two built-in metric families.

pub mod commuting;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod linalg;
pub mod model;

pub use error::{Error, Result};
