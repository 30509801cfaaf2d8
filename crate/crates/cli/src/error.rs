use std::path::{Path, PathBuf};

use crowdwrite_core::embedding::EmbeddingError;
use thiserror::Error;

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_PROVIDER: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing input file `{}`", .0.display())]
    MissingInput(PathBuf),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("`{}`: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] crowdwrite_core::Error),
    #[error("partial output: {0}")]
    Partial(String),
    #[error("i/o error on `{}`: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn parse(path: &Path, message: impl ToString) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(crowdwrite_core::Error::Embedding(EmbeddingError::Provider { .. })) => EXIT_PROVIDER,
            CliError::Partial(_) => EXIT_PARTIAL,
            CliError::Io { .. } => 1,
            _ => EXIT_VALIDATION,
        }
    }
}

macro_rules! via_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}

via_core!(
    crowdwrite_core::corpus::CorpusError,
    crowdwrite_core::embedding::EmbeddingError,
    crowdwrite_core::clustering::ClusteringError,
    crowdwrite_core::diversity::DiversityError,
    crowdwrite_core::brainwrite::BrainwriteError,
    crowdwrite_core::sentiment::SentimentError,
    crowdwrite_core::survey::SurveyError
);
