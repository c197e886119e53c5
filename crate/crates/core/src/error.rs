use thiserror::Error;

use crate::timeseries::YearMonth;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    MalformedRow { line: usize, message: String },
    #[error("missing or invalid header, expected `month,value`")]
    MissingHeader,
    #[error("duplicate month {0}")]
    DuplicateMonth(YearMonth),
    #[error("gap in series: month {0} is missing")]
    MonthGap(YearMonth),
    #[error("value at {month} must be finite and positive, got {value}")]
    InvalidValue { month: YearMonth, value: f64 },
    #[error("series needs at least {needed} months, got {got}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("degenerate normalization range: all values equal {0}")]
    DegenerateRange(f64),
    #[error("invalid normalization range [{min}, {max}]")]
    InvalidRange { min: f64, max: f64 },
    #[error("normalized value {value} of sample {sample} lies outside [0, 1]")]
    WindowOutOfRange { sample: usize, value: f64 },
    #[error("split boundary {boundary} is outside ({first}, {last}]")]
    BoundaryOutOfRange { boundary: YearMonth, first: YearMonth, last: YearMonth },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("objective returned {value} for particle {particle}{}", sub_step.map(|n| format!(" at sub-step {n}")).unwrap_or_default())]
    NonFiniteFitness { particle: usize, sub_step: Option<usize>, value: f64 },
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },
    #[error("true value must be positive, got {0}")]
    NonPositiveTruth(f64),
    #[error("history must end at {expected} with at least {needed} months")]
    InsufficientHistory { expected: YearMonth, needed: usize },
    #[error("prediction for {month} is {value}")]
    NonFinitePrediction { month: YearMonth, value: f64 },
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("model file: {0}")]
    ModelFormat(String),
}

impl Error {
    /// Numeric failures (divergence, non-finite fitness) as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteFitness { .. } | Error::Divergence { .. } | Error::NonFinitePrediction { .. }
        )
    }
}
