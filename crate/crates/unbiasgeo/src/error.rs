use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: coordinate {index} = {value} not in ({lo}, {hi})")]
    Domain {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("metric not positive definite (smallest eigenvalue {0:.3e})")]
    MetricNotPd(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(
        "integrand not constant on the level set t = {t}: relative spread {spread:.3e} > {tol:.3e}"
    )]
    NotLevelConstant { t: f64, spread: f64, tol: f64 },
    #[error("log-prior value {0} is positive; not a denormalization")]
    NotADenormalization(f64),
    #[error("optimizer diverged to the domain boundary (coordinate {index})")]
    Boundary { index: usize },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("geodesic left the parameter domain at radius {exit_radius}")]
    TruncatedPath { exit_radius: f64 },
    #[error("boundary-value solver failed after {starts} starts: {detail}")]
    Shooting { starts: usize, detail: String },
    #[error("experiment invalid: {0}")]
    Experiment(String),
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: config errors exit 2, numeric errors 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::UnknownModel(_)
            | Error::InvalidParams(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
