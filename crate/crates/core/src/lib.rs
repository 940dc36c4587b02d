//! Hua-type beta integrals over flag spaces of unitriangular matrices.
//!
//! The crate covers the scalar fields R, C and H, corner-Gram statistics
//! `s_pq` of unitriangular matrices, closed-form Gamma products for the
//! integrals, exact samplers for the projective family of measures, and
//! Monte Carlo estimators used to check the closed forms.

pub mod closed_form;
pub mod error;
pub mod flag;
pub mod gamma;
pub mod importance;
pub mod matrix;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod stats;
pub mod tolerance;

pub use closed_form::{ColumnExponents, ExponentSet, NuSet};
pub use error::{Error, Result};
pub use flag::{QuadCoeffs, UnitriangularMatrix};
pub use importance::{MCEstimate, ProposalRule};
pub use matrix::MatrixK;
pub use sampler::{EntryExponents, FlagSample, MeasureSpec, SeedInfo};
pub use scalar::{FieldTag, Scalar};
pub use tolerance::Tolerances;
