use thiserror::Error;

/// Errors shared across the library.
///
/// `Config`, `Dimension` and `FingerprintMismatch` indicate bad inputs;
/// everything else is a runtime failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("training of '{target}' diverged at epoch {epoch} (learning rate {learning_rate})")]
    TrainingDiverged {
        target: String,
        epoch: usize,
        learning_rate: f64,
    },

    #[error("meta-model fingerprint {meta} does not match the network model fingerprint {model}")]
    FingerprintMismatch { meta: String, model: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by invalid user input rather than a failure
    /// while running (used by the CLI to pick exit codes).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Dimension(_) | Error::FingerprintMismatch { .. } | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
