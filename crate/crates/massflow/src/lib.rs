//! Numerical toolkit for mass inequalities on asymptotically flat 3-manifolds.
//!
//! The crate evaluates, at desk scale:
//!
//! * pointwise tensor calculus (curvature, Hessians, mean curvature) on
//!   coordinate charts of ℝ³ and the half-space ℝ³₊ ([`geometry`]),
//! * one-parameter conformal families `g_λ = f^{4λ} g` with their curvature
//!   and mean-curvature transformation laws ([`conformal`]),
//! * ADM and half-space masses by sphere quadrature with Richardson
//!   extrapolation in the radius ([`mass`]),
//! * the exterior boundary/asymptotic value problem for metric-harmonic
//!   functions asymptotic to a linear coordinate ([`harmonic`]),
//! * both sides of the mass inequalities driven by those harmonic functions
//!   ([`inequality`]),
//! * the static charged-dilaton suite: the Gibbons solution, its field
//!   equations, derived conformal factors and their vanishing masses
//!   ([`staticfields`]).
//!
//! Metrics and conformal factors are strategies behind the [`geometry::MetricField`]
//! and [`fields::ScalarField`] traits, registered by name in [`registry::Registry`]
//! and selected at runtime (CLI or config file).

pub mod conformal;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod harmonic;
pub mod inequality;
pub mod jet;
pub mod linalg;
pub mod mass;
pub mod quadrature;
pub mod registry;
pub mod staticfields;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
