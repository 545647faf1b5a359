use thiserror::Error;

/// Every failure the library can report.
///
/// Variant names double as the machine-readable error category printed by
/// the CLI (see [`Error::category`]).
#[derive(Debug, Error)]
pub enum Error {
    // taxonomy
    #[error("duplicate topic id `{0}`")]
    DuplicateId(String),
    #[error("topic id is empty")]
    EmptyId,
    #[error("topic id `{0}` uses a reserved form")]
    ReservedId(String),
    #[error("cycle detected involving `{0}`")]
    CycleDetected(String),
    #[error("taxonomy has multiple roots: {0:?}")]
    MultipleRoots(Vec<String>),
    #[error("taxonomy has no nodes")]
    NoRoot,
    #[error("node `{id}` names unknown parent `{parent}`")]
    DanglingParent { id: String, parent: String },
    #[error("pivot level {pivot} outside 1..={height}")]
    PivotOutOfRange { pivot: usize, height: usize },
    #[error("topic `{0}` already has an Other child")]
    AlreadyExtended(String),
    #[error("topic `{0}` has no children to extend")]
    NoChildren(String),
    #[error("topic `{0}` lies above the extension stop level")]
    AboveStopLevel(String),
    #[error("level {level} outside 0..={height}")]
    LevelOutOfRange { level: usize, height: usize },
    #[error("unknown topic `{0}`")]
    UnknownTopic(String),

    // corpus io
    #[error("bad magic bytes, expected `HSD1`")]
    BadMagic,
    #[error("truncated input: {0}")]
    Truncated(String),
    #[error("dimension mismatch{context}: expected {expected}, found {found}")]
    DimMismatch {
        context: String,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value for document `{0}`")]
    NonFiniteValue(String),
    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),
    #[error("unknown document `{0}`")]
    UnknownDoc(String),
    #[error("topics without seed documents: {0:?}")]
    MissingSeedsForTopic(Vec<String>),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    // geometry
    #[error("empty input")]
    EmptyInput,
    #[error("weights sum to zero")]
    ZeroTotalWeight,
    #[error("need at least 3 points, got {0}")]
    NotEnoughTopics(usize),
    #[error("no candidate points")]
    NoCandidates,
    #[error("oracle supports at most 3 dimensions, got {0}")]
    DimTooHigh(usize),

    // representation / assignment / engine
    #[error("child representation coincides with its parent `{0}`")]
    CoincidentChild(String),
    #[error("topic `{0}` has no representation")]
    NoRepresentation(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("spheres do not overlap")]
    NoOverlap,
    #[error("no topics at the pivot level")]
    NoPivotTopics,

    // metrics
    #[error("prediction and gold id sets differ: {0}")]
    IdSetMismatch(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn category(&self) -> &'static str {
        match self {
            Error::DuplicateId(_) => "DuplicateId",
            Error::EmptyId => "EmptyId",
            Error::ReservedId(_) => "ReservedId",
            Error::CycleDetected(_) => "CycleDetected",
            Error::MultipleRoots(_) => "MultipleRoots",
            Error::NoRoot => "NoRoot",
            Error::DanglingParent { .. } => "DanglingParent",
            Error::PivotOutOfRange { .. } => "PivotOutOfRange",
            Error::AlreadyExtended(_) => "AlreadyExtended",
            Error::NoChildren(_) => "NoChildren",
            Error::AboveStopLevel(_) => "AboveStopLevel",
            Error::LevelOutOfRange { .. } => "LevelOutOfRange",
            Error::UnknownTopic(_) => "UnknownTopic",
            Error::BadMagic => "BadMagic",
            Error::Truncated(_) => "Truncated",
            Error::DimMismatch { .. } => "DimMismatch",
            Error::NonFiniteValue(_) => "NonFiniteValue",
            Error::DuplicateDocId(_) => "DuplicateDocId",
            Error::UnknownDoc(_) => "UnknownDoc",
            Error::MissingSeedsForTopic(_) => "MissingSeedsForTopic",
            Error::MalformedLine { .. } => "MalformedLine",
            Error::EmptyInput => "EmptyInput",
            Error::ZeroTotalWeight => "ZeroTotalWeight",
            Error::NotEnoughTopics(_) => "NotEnoughTopics",
            Error::NoCandidates => "NoCandidates",
            Error::DimTooHigh(_) => "DimTooHigh",
            Error::CoincidentChild(_) => "CoincidentChild",
            Error::NoRepresentation(_) => "NoRepresentation",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::NoOverlap => "NoOverlap",
            Error::NoPivotTopics => "NoPivotTopics",
            Error::IdSetMismatch(_) => "IdSetMismatch",
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::Json(_) => "Json",
            Error::Io(_) => "Io",
        }
    }

    pub(crate) fn dim_mismatch(context: impl Into<String>, expected: usize, found: usize) -> Self {
        let context = context.into();
        Error::DimMismatch {
            context: if context.is_empty() {
                context
            } else {
                format!(" ({context})")
            },
            expected,
            found,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
