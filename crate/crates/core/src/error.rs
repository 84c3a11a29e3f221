use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("input has no data rows")]
    EmptyFile,
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("{rejected} of {total} rows rejected, above the allowed fraction {max_fraction}")]
    TooManyRejects {
        rejected: usize,
        total: usize,
        max_fraction: f64,
    },
    #[error("{n_dates} usable days cannot be split into {k} folds")]
    TooFewDays { n_dates: usize, k: usize },
    #[error("fold plan rejected: {0}")]
    InvalidFoldPlan(String),
    #[error("fold {fold}: test date {date} also appears in training data")]
    FoldLeak { fold: usize, date: NaiveDate },

    #[error("relative humidity {0} is outside [0, 100]")]
    Domain(f64),
    #[error("no night observations{}", .0.map(|d| format!(" preceding {d}")).unwrap_or_default())]
    EmptyNight(Option<NaiveDate>),

    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("feature row has {got} values, model expects {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("actual has {actual} values, predicted has {predicted}")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("training diverged at epoch {epoch}: loss {loss} (best so far {best})")]
    NonFiniteLoss { epoch: usize, loss: f64, best: f64 },

    #[error("date {0} not present in the feature table")]
    UnknownDate(NaiveDate),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
