use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors surfaced by the engine. Variant names are part of the external
/// contract: the CLI prints them verbatim and the HTTP API uses them as the
/// `error` field of error bodies.
#[derive(Debug, Error)]
pub enum Error {
    #[error("EmptyLabel: label is empty after normalization")]
    EmptyLabel,
    #[error("UnknownEntity: {0}")]
    UnknownEntity(String),
    #[error("UnknownPredicate: {0}")]
    UnknownPredicate(String),
    #[error("ConfidenceOutOfRange: {0}")]
    ConfidenceOutOfRange(f64),
    #[error("FileNotFound: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("EmptyFile: {} has no valid lines", .0.display())]
    EmptyFile(PathBuf),
    #[error("ParseError: line {line}: {reason}")]
    ParseError { line: usize, reason: String },
    #[error("EmptyPhrase")]
    EmptyPhrase,
    #[error("EmptyMention")]
    EmptyMention,
    #[error("NoPositives: {0}")]
    NoPositives(String),
    #[error("Disconnected: pattern edges do not form a connected graph")]
    Disconnected,
    #[error("TooLarge: pattern has {edges} edges, limit is {limit}")]
    TooLarge { edges: usize, limit: usize },
    #[error("TooFewDocs: need at least 2 non-empty documents, got {0}")]
    TooFewDocs(usize),
    #[error("EmptyVocabulary")]
    EmptyVocabulary,
    #[error("DimensionMismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("NoPathFound: {0}")]
    NoPathFound(String),
    #[error("InvalidConfig: {key}: {reason}")]
    InvalidConfig { key: String, reason: String },
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
    #[error("Pipeline: line {line}: {source}")]
    Pipeline {
        line: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("Io: {0}")]
    Io(#[from] std::io::Error),
    #[error("Format: {0}")]
    Format(String),
}

impl Error {
    /// Stable variant name, used by the CLI and the HTTP error body.
    pub fn name(&self) -> &'static str {
        match self {
            Error::EmptyLabel => "EmptyLabel",
            Error::UnknownEntity(_) => "UnknownEntity",
            Error::UnknownPredicate(_) => "UnknownPredicate",
            Error::ConfidenceOutOfRange(_) => "ConfidenceOutOfRange",
            Error::FileNotFound(_) => "FileNotFound",
            Error::EmptyFile(_) => "EmptyFile",
            Error::ParseError { .. } => "ParseError",
            Error::EmptyPhrase => "EmptyPhrase",
            Error::EmptyMention => "EmptyMention",
            Error::NoPositives(_) => "NoPositives",
            Error::Disconnected => "Disconnected",
            Error::TooLarge { .. } => "TooLarge",
            Error::TooFewDocs(_) => "TooFewDocs",
            Error::EmptyVocabulary => "EmptyVocabulary",
            Error::DimensionMismatch(..) => "DimensionMismatch",
            Error::NoPathFound(_) => "NoPathFound",
            Error::InvalidConfig { .. } => "InvalidConfig",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Pipeline { source, .. } => source.name(),
            Error::Io(_) => "Io",
            Error::Format(_) => "Format",
        }
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::ParseError {
            line,
            reason: reason.into(),
        }
    }
}

/// Opens a file, mapping a missing path onto [`Error::FileNotFound`].
pub(crate) fn open_file(path: &std::path::Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}
