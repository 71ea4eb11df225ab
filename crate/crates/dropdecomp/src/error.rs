use thiserror::Error;

/// Failures raised by the library.
///
/// Variants split into two families: engineering failures (malformed input,
/// resource limits) and mathematical failures (a hypothesis does not hold or
/// an obstruction was detected). [`Error::is_mathematical`] tells them apart.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("class mismatch: {0}")]
    ClassMismatch(String),
    #[error("block structure: {0}")]
    BlockStructure(String),
    #[error("malformed representation: {0}")]
    Malformed(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("mesh incompatibility: {0}")]
    MeshIncompatible(String),
    #[error("branch ambiguity: {0}")]
    BranchAmbiguity(String),
    #[error("spectral gap violated: {0}")]
    GapViolation(String),
    #[error("points are not connected: {0}")]
    Disconnected(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("invalid puncture: {0}")]
    InvalidPuncture(String),
    #[error("continuity: {0}")]
    Continuity(String),
    #[error("partition hypothesis: {0}")]
    PartitionHypothesis(String),
    #[error("endpoint incompatibility: {0}")]
    EndpointIncompatibility(String),
    #[error("undersampled loop: {0}")]
    Undersampling(String),
    #[error("obstruction: {0}")]
    Obstruction(String),
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),
    #[error("puncture search failed: {0}")]
    PunctureSearch(String),
    #[error("cluster collision: {0}")]
    ClusterCollision(String),
    #[error("rank: {0}")]
    Rank(String),
    #[error("structure: {0}")]
    Structure(String),
    #[error("generator: {0}")]
    Generator(String),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("unknown operation: {0}")]
    UnknownOperation(String),
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// True for failures that describe the mathematics of the input rather
    /// than a defect in how it was supplied.
    pub fn is_mathematical(&self) -> bool {
        matches!(
            self,
            Error::BranchAmbiguity(_)
                | Error::GapViolation(_)
                | Error::Continuity(_)
                | Error::PartitionHypothesis(_)
                | Error::EndpointIncompatibility(_)
                | Error::Obstruction(_)
                | Error::Hypothesis(_)
                | Error::PunctureSearch(_)
                | Error::ClusterCollision(_)
                | Error::Rank(_)
                | Error::Undersampling(_)
                | Error::Disconnected(_)
        )
    }
}

/// Process exit status for a failed run: `2` for mathematical failures, `3`
/// for an unknown operation, `4` for a missing file and `1` otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::UnknownOperation(_) => 3,
        Error::NotFound(_) => 4,
        e if e.is_mathematical() => 2,
        _ => 1,
    }
}

pub type Result<T> = std::result::Result<T, Error>;
