use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error in field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("zero vector infeasible in block {block}")]
    ZeroInfeasible { block: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("block index {0} out of range")]
    BadBlock(usize),

    #[error("enumeration cap {cap} exceeded{}", block.map(|b| format!(" in block {b}")).unwrap_or_default())]
    CapExceeded { block: Option<usize>, cap: usize },

    #[error("graph of block {block} contains a cycle")]
    Cycle { block: usize },

    #[error("problem is infeasible")]
    Infeasible,

    #[error("oracle failure in block {block}: {source}")]
    Oracle {
        block: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("candidate is not a member of block {block}")]
    NotMember { block: usize },

    #[error("trace export failed: {0}")]
    Export(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_block(self, block: usize) -> Self {
        match self {
            Error::CapExceeded { cap, .. } => Error::CapExceeded {
                block: Some(block),
                cap,
            },
            e @ Error::Oracle { .. } => e,
            other => Error::Oracle {
                block,
                source: Box::new(other),
            },
        }
    }
}
