//! Error type shared by every module in the crate.

use std::fmt;
use std::io;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in this crate.
///
/// Shape and activity violations are reported with enough context to name
/// the offending operands; numerical failures carry the index at which the
/// computation broke down.
#[derive(Debug)]
pub enum Error {
    /// Operand shapes do not conform for the named operation.
    DimensionMismatch { op: &'static str, detail: String },
    /// A square matrix was required.
    NotSquare { rows: usize, cols: usize },
    /// Pivot magnitude fell below the pivot floor while factoring.
    Singular { col: usize },
    /// A NaN or infinity showed up where a finite value is required.
    NonFinite { context: String },
    /// A zero-sized value was handed to an operation that needs data.
    EmptyValue,
    /// A sum-of-sandwich-products call received no terms.
    EmptyTerms,
    /// An argument that must be passive was active, or vice versa.
    ActivityViolation { op: &'static str, detail: &'static str },
    /// A handle from a different tape was used.
    ForeignHandle,
    /// A handle index that the tape or store does not know about.
    UnknownHandle,
    /// Reverse sweeps must be seeded on an active handle.
    PassiveSeed,
    /// Passive variables carry no adjoint buffer.
    PassiveAdjoint,
    /// Verification was asked for a check it does not define.
    UnknownCheck { name: String },
    /// A caller-supplied argument is out of range or inconsistent.
    InvalidArgument { what: String },
    /// Text-format parsing failed; `line` is 1-based.
    Parse { line: usize, msg: String },
    Io(io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimensionMismatch { op, detail } => {
                write!(f, "dimension mismatch in {op}: {detail}")
            }
            Self::NotSquare { rows, cols } => {
                write!(f, "expected a square matrix, got {rows}x{cols}")
            }
            Self::Singular { col } => {
                write!(f, "matrix is singular (pivot below threshold at column {col})")
            }
            Self::NonFinite { context } => write!(f, "non-finite value in {context}"),
            Self::EmptyValue => write!(f, "empty value"),
            Self::EmptyTerms => write!(f, "empty term list"),
            Self::ActivityViolation { op, detail } => write!(f, "{op}: {detail}"),
            Self::ForeignHandle => write!(f, "foreign handle: handle belongs to another tape"),
            Self::UnknownHandle => write!(f, "unknown handle"),
            Self::PassiveSeed => write!(f, "reverse sweep seeded on a passive handle"),
            Self::PassiveAdjoint => write!(f, "passive variable has no adjoint"),
            Self::UnknownCheck { name } => write!(f, "unknown check: {name}"),
            Self::InvalidArgument { what } => write!(f, "invalid argument: {what}"),
            Self::Parse { line, msg } => write!(f, "parse error at line {line}: {msg}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Self::DimensionMismatch { op, detail: detail.into() }
    }
}
