use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("face list is empty")]
    EmptyDomain,
    #[error("({k},{s}) is not a face coordinate (k+s must be even)")]
    ParityViolation { k: i32, s: i32 },
    #[error("faces do not form a connected set")]
    DisconnectedFaces,
    #[error("face set has holes")]
    NotSimplyConnected,
    #[error("domain too coarse: {faces} faces")]
    TooCoarse { faces: usize },
    #[error("could not route edge-disjoint defect paths: {0}")]
    PathCollisionUnresolvable(String),
    #[error("defect path leaves the domain: {0}")]
    PathOutsideDomain(String),
    #[error("conjugated Kac-Ward matrix has imaginary residue {0:e}")]
    NonRealResidue(f64),
    #[error("singular matrix: pivot {pivot:e} at step {step}")]
    SingularMatrix { step: usize, pivot: f64 },
    #[error("face ({0},{1}) is not an inner face")]
    FaceOutsideDomain(i32, i32),
    #[error("vertex ({0},{1}) is not a vertex of the domain")]
    VertexOutsideDomain(i32, i32),
    #[error("edge is not an edge of the domain: {0}")]
    EdgeOutsideDomain(String),
    #[error("edge is on the boundary: {0}")]
    BoundaryEdge(String),
    #[error("invalid insertion: {0}")]
    InvalidInsertion(String),
    #[error("enumeration too large: {edges} edges (cap {cap})")]
    TooLarge { edges: usize, cap: usize },
    #[error("quadrature under-resolved: doubling the grid moved alpha by {shift:e}")]
    QuadratureUnderResolved { shift: f64 },
    #[error("initial data inconsistent: telescoping residual {residual:e}")]
    InconsistentInitialData { residual: f64 },
    #[error("window too large: row {s} decays below representable range")]
    WindowTooLarge { s: i32 },
    #[error("coincident points")]
    CoincidentPoints,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
