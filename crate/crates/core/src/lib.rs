//! Spectral bounds for `r`-wise intersecting families under biased product measures.
//!
//! The crate builds symmetric signed product measures on `(2^[n])^r`, reads off
//! the spectra of their adjacency and link operators, and turns them into
//! Hoffman-type bounds on the measure of independent sets. An exhaustive
//! enumerator over monotone families provides independent ground truth at small `n`.

pub mod bounds;
pub mod error;
pub mod family;
pub mod fourier;
pub mod identities;
pub mod measure;
pub mod oracle;
pub mod report;
pub mod scalar;
pub mod spectral;
pub mod stability;

pub use bounds::{theorem_dispatch, BoundReport};
pub use error::{Error, Result};
pub use family::{BiasVector, NamedFamily, SetMask, SubsetFamily};
pub use fourier::FourierExpansion;
pub use identities::IdentityReport;
pub use measure::{AdjacencyOperator, BaseTensor, Construction, LimitMeasure, ProductMeasure};
pub use oracle::{CrossResult, OracleResult};
pub use report::{run, run_verify, RunConfig, VerifySuiteResult};
pub use scalar::{Rational, Scalar};
pub use stability::{StabilityConfig, StabilityReport};
