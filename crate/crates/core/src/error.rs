use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("truncation error: n_max {required} would exceed the cap of {cap}")]
    Truncation { required: usize, cap: usize },

    /// A precondition on a state (normalization, shape) was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate fit: only {usable} usable amplitude(s), need at least 2")]
    DegenerateFit { usable: usize },

    /// The geometric series behind a closed-form density diverges.
    #[error("closed form diverges: effective lambda' = {lambda_prime} is not below 1")]
    Divergent { lambda_prime: f64 },

    #[error("projection undefined: outcome density {density:e} is vanishing")]
    ProjectionUndefined { density: f64 },

    #[error("sampling grid too narrow: captured mass {mass} < 1 - 1e-6")]
    GridTooNarrow { mass: f64 },

    /// An error raised inside a named pipeline stage.
    #[error("{stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit status for the CLI: 2 invalid arguments, 3 numeric-domain error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Config(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 2,
            _ => 3,
        }
    }
}

pub(crate) trait InStage<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> InStage<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
