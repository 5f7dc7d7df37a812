//! Finite-difference solvers for possibly degenerate second-order parabolic
//! and elliptic equations on periodic lattices.
//!
//! The library is organized around a small difference calculus ([`grid`]),
//! monotone stencil operators ([`stencil`], [`operator`]), a method-of-lines
//! parabolic solver ([`parabolic`]), a contraction fixed-point elliptic
//! solver ([`elliptic`]), Richardson extrapolation over dyadically nested
//! meshes ([`richardson`]), and machinery for measuring the mesh-size
//! expansion of discrete solutions ([`expansion`]). The [`study`] and
//! [`acceptance`] modules drive convergence studies and the verification
//! suite behind the `degenfd` binary.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

pub mod acceptance;
pub mod coeff;
pub mod config;
pub mod elliptic;
pub mod error;
pub mod expansion;
pub mod expr;
pub mod grid;
pub mod linalg;
pub mod operator;
pub mod parabolic;
pub mod presets;
pub mod richardson;
pub mod stencil;
pub mod study;

pub use error::Error;

/// Scalar type the numerical core is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + Debug + Display + Send + Sync + std::iter::Sum + 'static
{
    /// Shorthand for lossless-enough conversion of small integer and
    /// rational constants.
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    fn from_usize_c(v: usize) -> Self {
        Self::from_usize(v).expect("count representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type GridSpec64 = grid::GridSpec<f64>;
pub type GridFunction64 = grid::GridFunction<f64>;
pub type Stencil64 = stencil::Stencil<f64>;
pub type CoefficientField64 = coeff::CoefficientField<f64>;
pub type ParabolicProblem64 = parabolic::ParabolicProblem<f64>;
pub type EllipticProblem64 = elliptic::EllipticProblem<f64>;
pub type ExtrapolationPlan64 = richardson::ExtrapolationPlan<f64>;
