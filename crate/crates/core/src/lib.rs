//! Exact and numeric tools for bounding how well PPT measurements can
//! discriminate small sets of orthogonal maximally entangled states.
//!
//! - [`operator`], [`psd`], [`linalg`]: dense Hermitian operators over exact
//!   rationals or floats, partial transpose and trace, PSD checks.
//! - [`states`]: Bell states and the recursive Bell-product ensembles.
//! - [`certificates`]: closed-form dual solutions and their exact verifier.
//! - [`sdp`]: first-order solver for the PPT discrimination program.
//! - [`catalysis`]: exact simulation of catalysed LOCC discrimination.
//! - [`io`]: JSON interchange formats.

pub mod catalysis;
pub mod certificates;
pub mod error;
pub mod factorization;
pub mod io;
pub mod linalg;
pub mod operator;
pub mod psd;
pub mod scalar;
pub mod sdp;
pub mod states;

pub use error::{Error, Result};
pub use factorization::{Factor, Factorization, Party};
pub use operator::{ExactOperator, FloatOperator, Operator, PartySelector};
pub use scalar::{ExactComplex, Mode, Scalar};
