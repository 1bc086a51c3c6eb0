use serde::Serialize;
use thiserror::Error;

/// A single broken invariant found while validating an instance.
///
/// Indices are 1-based to match outcome and effort numbering; effort 0 is the
/// implicit reject level and never appears here.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoOutcomes,
    NonPositiveValue { outcome: usize, value: f64 },
    ValuesNotIncreasing { outcome: usize },
    NonPositiveMinWage { w0: f64 },
    BadUtility { reason: String },
    NoEfforts,
    NegativeCost { effort: usize, cost: f64 },
    DistLength { effort: usize, expected: usize, got: usize },
    NegativeProbability { effort: usize, outcome: usize, p: f64 },
    NotNormalized { effort: usize, sum: f64 },
    Fosd { higher: usize, lower: usize, outcome: usize },
    NonPositiveWage { outcome: usize, wage: f64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {}", serde_json::to_string(.0).unwrap_or_default())]
    Invalid(Vec<Violation>),
    #[error("effort index {effort} out of range 0..={n}")]
    EffortOutOfRange { effort: usize, n: usize },
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("test sequence must be nondecreasing")]
    NonMonotoneSequence,
    #[error("eta = {eta} outside (0, {max})")]
    EtaOutOfRange { eta: f64, max: f64 },
    #[error("contract is not in the learnable class: {0}")]
    NotLearnable(String),
    #[error("arm set is empty")]
    EmptyArmSet,
    #[error("arm {arm} produced mean reward {mean} outside [{lo}, {hi}]")]
    RewardOutOfRange { arm: usize, mean: f64, lo: f64, hi: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("precondition refused: {0}")]
    Precondition(String),
    #[error("instance hash mismatch: report {report}, instance {instance}")]
    HashMismatch { report: String, instance: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
