use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("git log parse error in record {record} at byte {offset}: {message}")]
    Parse {
        record: usize,
        offset: usize,
        message: String,
    },

    #[error("need at least {needed} annotations, got {got}")]
    InsufficientAnnotations { needed: usize, got: usize },

    #[error("annotator {0} rated the same sentence twice with different labels")]
    ConflictingAnnotation(String),

    #[error("degenerate agreement: every rating falls in a single category")]
    DegenerateAgreement,

    #[error("corpus produced an empty vocabulary")]
    EmptyVocabulary,

    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("duplicate node {0}")]
    DuplicateNode(String),

    #[error("no labels for sentence {index} of commit {hash}")]
    IncompleteLabels { hash: String, index: usize },

    #[error("query syntax error at line {line}, column {column}: {message}")]
    QuerySyntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported query feature `{0}`")]
    UnsupportedFeature(String),

    #[error("not found: {0}")]
    Lookup(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::InsufficientAnnotations { .. } => "insufficient-annotations",
            Error::ConflictingAnnotation(_) => "conflicting-annotation",
            Error::DegenerateAgreement => "degenerate-agreement",
            Error::EmptyVocabulary => "empty-vocabulary",
            Error::DegenerateData(_) => "degenerate-data",
            Error::Parameter(_) => "parameter",
            Error::Shape { .. } => "shape",
            Error::DuplicateNode(_) => "duplicate-node",
            Error::IncompleteLabels { .. } => "incomplete-labels",
            Error::QuerySyntax { .. } => "query-syntax",
            Error::UnsupportedFeature(_) => "unsupported-feature",
            Error::Lookup(_) => "lookup",
            Error::Invalid(_) => "invalid",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
