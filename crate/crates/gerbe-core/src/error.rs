//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GerbeError {
    #[error("simplex {0:?} has more than 4 vertices")]
    SimplexTooLarge(Vec<usize>),
    #[error("vertex {0} does not lie in any edge")]
    DanglingVertex(usize),
    #[error("{0:?} is not a simplex of the complex")]
    NotASimplex(Vec<usize>),
    #[error("cochain region does not match the requested operation")]
    RegionMismatch,
    #[error("edge {0:?} lies outside the cochain's region")]
    EdgeOutsideRegion(Vec<usize>),
    #[error("input is not a cocycle: residual {0} on {1:?}")]
    NotACocycle(f64, Vec<usize>),
    #[error("sign 1-cochain is not a cocycle on triangle {0:?}")]
    InvalidSignCocycle(Vec<usize>),
    #[error("holonomy class requires a flat connection (curvature {0} on {1:?})")]
    HolonomyClassUndefined(f64, Vec<usize>),
    #[error("connection is not flat: curvature {0} on {1:?}")]
    NotFlat(f64, Vec<usize>),
    #[error("transition constant varies over the triple star of {0:?} (spread {1})")]
    NonConstantS(Vec<usize>, f64),
    #[error("holonomy class is nontrivial ({0} component obstructs)")]
    NonTrivialHolonomy(&'static str),
    #[error("holonomy 2-form does not vanish: {0} on {1:?}")]
    NonZeroB(f64, Vec<usize>),
    #[error("object data violates its gluing condition: {0}")]
    InvalidObject(String),
    #[error("gerbe metric violates the norm-1 condition: {0}")]
    InvalidMetric(String),
    #[error("invalid input data: {0}")]
    InvalidData(String),
    #[error("objects belong to different gerbes")]
    MixedGerbes,
    #[error("vertex map sends simplex {0:?} outside the codomain")]
    InvalidMap(Vec<usize>),
    #[error("fiber elements live over different loops or presentations")]
    LoopMismatch,
    #[error("loop edge {0:?} is not covered by the object's subcomplex")]
    LoopNotCovered(Vec<usize>),
    #[error("consecutive cylinder ends do not match")]
    EndsMismatch,
    #[error("no flat object exists on the cylinder (internal invariant violated)")]
    NoFlatObject,
    #[error("surface has no boundary circles")]
    ClosedDomain,
    #[error("domain is not a prism over a surface: {0}")]
    NotAPrism(String),
    #[error("domain surface is not orientable or orientation data is inconsistent")]
    UnorientedDomain,
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("cross-reference error: {0}")]
    ReferenceError(String),
}

pub type Result<T> = std::result::Result<T, GerbeError>;
