use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("self-intersection: {0}")]
    SelfIntersection(String),
    #[error("bad orientation: {0}")]
    BadOrientation(String),
    #[error("degenerate edge: {0}")]
    DegenerateEdge(String),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("direction is not a unit vector (|d| = {0})")]
    NonUnitDirection(f64),
    #[error("start point is outside the surface: {0}")]
    StartOutsideSurface(String),
    #[error("core trajectory is not periodic")]
    CoreNotPeriodic,
    #[error("epsilon must be positive, got {0}")]
    EpsNonPositive(f64),
    #[error("cores do not intersect")]
    NoIntersection,
    #[error("mesh failure: {0}")]
    MeshFailure(String),
    #[error("eigensolver did not converge: {0}")]
    SolverNoConvergence(String),
    #[error("resonant frequency with nonzero kernel projection ({0:e})")]
    ResonanceSingular(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Solver failures are distinguished from input validation failures by the CLI.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::MeshFailure(_) | Error::SolverNoConvergence(_) | Error::ResonanceSingular(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
