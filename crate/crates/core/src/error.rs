//! Crate-level error type; numeric kernels carry their own [`NumError`].

use crate::data::Diagnostic;
use crate::numkit::NumError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Num(#[from] NumError),

    /// A group split left fewer than two recipients on one side.
    #[error("{group} group under the {attribute} split has {count} recipient(s); need at least 2")]
    EmptyGroup {
        attribute: String,
        group: String,
        count: usize,
    },

    /// Every recipient posterior underflowed; the sufficiency score is undefined.
    #[error("class-conditional likelihoods underflowed for every recipient")]
    DegeneratePosterior,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite {quantity} at epoch {epoch}")]
    NonFinite { quantity: String, epoch: usize },

    #[error("invalid synthesis spec: {0}")]
    Spec(String),

    #[error("{path}: {detail}")]
    Parse { path: String, detail: String },

    /// Error-severity findings from tuple validation, with their indices.
    #[error("{path}: {}", format_diagnostics(.diagnostics))]
    Validation {
        path: String,
        diagnostics: Vec<Diagnostic>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    let lines: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
    format!("{} validation error(s)\n  {}", lines.len(), lines.join("\n  "))
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
