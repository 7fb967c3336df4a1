use warpflow::error::Error as CoreError;

pub type Result<T> = std::result::Result<T, CliError>;

/// Process exit codes.
pub mod exit {
    /// Every check passed.
    pub const OK: i32 = 0;
    /// A residual or observed order missed its tolerance.
    pub const TOLERANCE: i32 = 1;
    /// The configuration is malformed or describes an invalid model.
    pub const CONFIG: i32 = 2;
    /// The computation failed: a singular metric, a stencil leaving the
    /// domain, a non-finite value, or output that could not be written.
    pub const NUMERICAL: i32 = 3;
    /// The flow reached a singularity; the last good state is written out.
    pub const SINGULARITY: i32 = 4;
    /// The time step violates the stability bound or the solution blew up.
    pub const UNSTABLE: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot write output")]
    Io(#[from] std::io::Error),
    #[error("cannot write csv")]
    Csv(#[from] csv::Error),
    #[error("cannot write json")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Core(e) => match e {
                CoreError::InvalidSpec(_)
                | CoreError::InvalidCoefficients(_)
                | CoreError::MissingVelocities
                | CoreError::InsufficientSnapshots { .. }
                | CoreError::NotEinsteinFiber
                | CoreError::Expr(_)
                | CoreError::UnknownCatalog(_) => exit::CONFIG,
                CoreError::SingularityReached { .. } => exit::SINGULARITY,
                CoreError::UnstableStep { .. } => exit::UNSTABLE,
                CoreError::SingularMetric { .. }
                | CoreError::OutOfDomain { .. }
                | CoreError::NonFinite(_) => exit::NUMERICAL,
            },
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => exit::NUMERICAL,
        }
    }
}
