//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("invalid parameter for {generator}: {detail}")]
    InvalidParameter { generator: String, detail: String },
    #[error("cannot parse vertex token `{0}`")]
    BadToken(String),
    #[error("vertex `{0}` is outside the window")]
    OutsideWindow(String),
    #[error("empty vertex set passed to {0}")]
    EmptySet(&'static str),
    #[error("unknown automorphism `{0}`")]
    UnknownAutomorphism(String),
    #[error("automorphism `{id}` is not defined on vertex `{vertex}`")]
    AutomorphismUndefined { id: String, vertex: String },
    #[error("automorphism `{0}` is declared elliptic; a non-elliptic one is required")]
    EllipticNotAllowed(String),
    #[error("automorphism `{0}` is declared non-elliptic; an elliptic one is required")]
    NonEllipticNotAllowed(String),
    #[error("ray has no infinite extension inside the window (stuck after {0} vertices)")]
    NoInfiniteExtension(usize),
    #[error("double-ray extraction failed: {0}")]
    ExtractionFailed(String),
    #[error("ray is not materialized in the window: {0}")]
    RayNotMaterialized(String),
    #[error("fat-ray certificate missing or failed for K={k}: witness n={witness}")]
    FatCertificateFailed { k: u32, witness: u32 },
    #[error("premise violated: {0}")]
    PremiseViolated(String),
    #[error("model is invalid: clause `{clause}`: {detail}")]
    InvalidModel { clause: String, detail: String },
    #[error("model verdict indeterminate: vertex `{0}` outside window")]
    IndeterminateModel(String),
    #[error("operation requires a half-grid portion pattern, got {0}")]
    WrongPattern(String),
    #[error("submodel level {k} exceeds pattern extent {extent}")]
    LevelExceedsPattern { k: u32, extent: u32 },
    #[error("unknown pattern element `{0}`")]
    UnknownElement(String),
    #[error("schedule must be nondecreasing, got {0:?}")]
    ScheduleNotMonotone(Vec<u32>),
    #[error("family separation too small: measured {measured} < {required} (= 2K-1 for K = {k}); the 2K-1 bound is tight")]
    SeparationTooSmall { measured: u32, required: u32, k: u32 },
    #[error("spacing infeasible within the rays' window extent: {0}")]
    SpacingInfeasible(String),
    #[error("graded fatness missing on input model: strip at level {level} reaches only {measured:?}, needs {required}")]
    GradedFatnessMissing { level: u32, measured: Option<u32>, required: u32 },
    #[error("[{stage}] {message} (hint: {hint})")]
    PipelineStage { stage: &'static str, message: String, hint: String },
    #[error("enlarge window: {0}")]
    EnlargeWindow(String),
    #[error("more connectors needed: {0}")]
    MoreConnectors(String),
    #[error("certificate schema error: {0}")]
    Schema(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wrap an error with the pipeline stage it happened in plus a retry hint.
    pub fn in_stage(self, stage: &'static str, hint: &str) -> Error {
        Error::PipelineStage { stage, message: self.to_string(), hint: hint.to_string() }
    }
}
