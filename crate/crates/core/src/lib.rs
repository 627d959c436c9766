//! Arithmetic on symmetric cones, the Matsumoto-Yor transform, Wishart and
//! generalized inverse Gaussian laws on cones, and executable checks of the
//! identities that tie them together.

pub mod cli;
pub mod distributions;
pub mod error;
pub mod jordan_algebra;
pub mod my_transform;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod verification;

pub use error::{ConeError, Result};
pub use jordan_algebra::{Algebra, AlgebraKind, Element, LinearOperator, SpectralDecomposition};
