use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid window: start {start} must be < end {end}")]
    InvalidWindow { start: f64, end: f64 },

    #[error("invalid interval: [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("mainshock {requested} requested but {available} mainshocks available")]
    MainshockOutOfRange { requested: usize, available: usize },

    #[error("insufficient data: need at least {needed} events, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate magnitudes: every magnitude equals the cutoff")]
    DegenerateMagnitudes,

    #[error("degenerate likelihood: zero intensity at t = {time}")]
    DegenerateLikelihood { time: f64 },

    #[error("empty partition: parent time {parent} is not before end {end}")]
    EmptyPartition { parent: f64, end: f64 },

    #[error("linearization failed for component {component}: log value {value}")]
    Linearization { component: String, value: f64 },

    #[error("approximate likelihood overflowed")]
    Overflow,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("Hessian not negative definite at the mode; indefinite directions {directions:?}")]
    IndefiniteHessian { directions: Vec<usize> },

    #[error("supercritical branching ratio {ratio:.4}; set allow_supercritical to override")]
    Supercritical { ratio: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
