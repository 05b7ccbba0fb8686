use thiserror::Error;

/// Every fallible operation in the crate reports through this type.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate direction")]
    DegenerateDirection,
    #[error("point off boundary: gauge residual {0:.3e}")]
    OffBoundary(f64),
    #[error("not strictly convex: curvature {0:.3e}")]
    NotStrictlyConvex(f64),
    #[error("parallel body degenerate: t = {t} <= -1/kappa = {limit}")]
    ParallelDegenerate { t: f64, limit: f64 },
    #[error("containment violated: {0}")]
    Containment(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("degenerate skeleton")]
    DegenerateSkeleton,
    #[error("unreachable")]
    Unreachable,
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("not generic: {0}")]
    NotGeneric(String),
    #[error("not an immersion: min |X'| = {0:.3e}")]
    NotImmersion(f64),
    #[error("ill-conditioned system (condition estimate {0:.3e})")]
    IllConditioned(f64),
    #[error("overlapping compacta (gap {0:.3e})")]
    Overlap(f64),
    #[error("verification failed [{tag}]: {detail}")]
    Verification { tag: String, detail: String },
    #[error("stage {stage}: {source}")]
    Stage { stage: String, source: Box<Error> },
    #[error("continuation lost the curve: {0}")]
    Continuation(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn verification(tag: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Verification { tag: tag.into(), detail: detail.into() }
    }

    pub fn staged(self, stage: &str) -> Self {
        Error::Stage { stage: stage.to_string(), source: Box::new(self) }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
