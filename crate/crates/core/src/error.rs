use thiserror::Error;

/// Everything that can go wrong in this crate.
///
/// Protocol aborts are not errors: they are ordinary session outcomes and
/// live in [`crate::protocol::Outcome`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus {0} is not a supported prime (2..=251)")]
    InvalidModulus(u32),
    #[error("digit {digit} is out of range for modulus {d}")]
    DigitOutOfRange { digit: u32, d: u8 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u8, u8),
    #[error("generator rows are linearly dependent")]
    DependentRows,
    #[error("{what} needs {needed} elements, above the enumeration cap {cap}")]
    CapExceeded {
        what: &'static str,
        needed: f64,
        cap: u64,
    },
    #[error("code is not self-orthogonal: rows {0} and {1} have nonzero dot product")]
    NotSelfOrthogonal(usize, usize),
    #[error("binary CSS rule violated: {0}")]
    D2RuleViolation(&'static str),
    #[error("no balanced code found after {tries} tries")]
    NotFound { tries: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("channel is not trace preserving (max deviation {0:e})")]
    NotTracePreserving(f64),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}
