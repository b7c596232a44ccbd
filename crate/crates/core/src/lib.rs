//! Exact computational algebra for quadratic 2-type invariants of 4-manifolds
//! whose fundamental group is a free product of cyclic groups, `Z`, and `Z x Z/2`.
//!
//! The crate is organized bottom-up:
//!
//! * [`groupring`]: groups as free products of elementary factors, word normal
//!   forms, orientation characters, and exact group-ring arithmetic with
//!   twisted involutions.
//! * [`zmat`]: exact integer linear algebra (Smith normal form, kernels,
//!   homology of integer complexes).
//! * [`resolutions`]: standard free resolutions, Fox calculus, and twisted
//!   group homology.
//! * [`lattices`]: group lattices with enumerated bases, augmentation ideals,
//!   induction, and isomorphism fingerprints over `Z[Z/2]`.
//! * [`gamma`]: Whitehead's quadratic functor on lattices, coinvariants, the
//!   Baues splitting, and the theta/psi comparison maps.
//! * [`forms`]: Hermitian forms, the hyperbolic form on the augmentation
//!   ideal, the B map from Gamma-coinvariants to Hermitian forms, and the
//!   evaluation pairing.
//! * [`manifolds`]: chain-complex models of 4-manifolds (built-ins `E` and
//!   `F`), pi_2 extraction, k-invariants, stable pi_2 classes, and the Euler
//!   characteristic bookkeeping.
//! * [`classify`]: the homeomorphism decision procedure for declared
//!   infinite-dihedral manifests, plus imported L-theory constants and
//!   s-cobordism bounds.
//! * [`formats`]: the text file formats (groups, complexes, manifests) and
//!   the structured report format used by the CLI.

pub mod book;
pub mod classify;
pub mod formats;
pub mod forms;
pub mod gamma;
pub mod groupring;
pub mod lattices;
pub mod manifolds;
pub mod resolutions;
pub mod zmat;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Two values built over different group specifications were combined.
    #[error("mismatched group specifications: {0} vs {1}")]
    GroupMismatch(String, String),
    /// Text input failed to parse; positions are 1-based.
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    /// An operation was asked of a factor kind it does not support.
    #[error("unsupported factor: {0}")]
    UnsupportedFactor(String),
    /// A degree index fell outside the chain complex or resolution.
    #[error("degree {0} out of range")]
    DegreeOutOfRange(usize),
    /// The character fails the admissibility requirement.
    #[error("inadmissible character: {0}")]
    Inadmissible(String),
    /// A manifest violated its consistency relations.
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    /// The requested computation is outside the supported family.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// An internal consistency check failed; indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
