//! Exact-arithmetic workbench for the genus theory of abelian p-extensions
//! of Q: block rings of the p-adic group ring, finite-group cohomology with
//! finite coefficients, conductor-ordered enumeration of extensions, explicit
//! Selmer and dual-Selmer groups of μ_p, and the character-sum laboratory.

pub mod abelian;
pub mod blocks;
pub mod charsum;
pub mod cohomology;
pub mod cyclo;
pub mod ext;
pub mod linalg;
pub mod scan;
pub mod selmer;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid group: {0}")]
    BadGroup(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("trivial idempotent excluded")]
    TrivialIdempotent,
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("cohomology bound exceeded: {0}")]
    BoundExceeded(String),
    #[error("stabilization failure: {0}")]
    Stabilization(String),
    #[error("ratio defined for ramified v only")]
    UnramifiedPlace,
    #[error("identity check failed: {0}")]
    IdentityFailure(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;
