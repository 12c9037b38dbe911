use thiserror::Error;

/// Errors raised by the library. Verification failures are not errors: they
/// are reported through [`crate::check::CheckReport`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },

    #[error("invalid parameter `{param}` for `{name}`: {reason}")]
    InvalidParam {
        name: String,
        param: String,
        reason: String,
    },

    #[error("cannot parse reference `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {limit} ({detail})")]
    Resource { limit: &'static str, detail: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("tree has no word of length {depth}")]
    EmptyLevel { depth: usize },

    #[error("branch prefix `{prefix}` is not in tree `{tree}`")]
    InconsistentBranch { tree: String, prefix: String },

    #[error("join spill at stage {stage}: {detail}")]
    SpillOverflow { stage: u32, detail: String },

    #[error("lead undefined at stage {stage}, join {join}: {reason}")]
    LeadUndefined { stage: u32, join: u8, reason: String },

    #[error("lead {lead} at stage {stage} is not a base-4 word over {{0,1}} of length {digits}")]
    LeadNotEncoding { stage: u32, lead: String, digits: u32 },

    #[error("digit {digit} differs between stages {stage} and {next}")]
    StabilityViolation { stage: u32, next: u32, digit: u32 },

    #[error("internal invariant broken: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &str, param: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name: name.to_string(),
            param: param.to_string(),
            reason: reason.into(),
        }
    }
}
