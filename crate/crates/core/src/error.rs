use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::syntax::Diagnostic;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    /// A variable with no binding was read.
    NonGround(String),
    Type(String),
    Overflow,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::NonGround(v) => write!(f, "variable {v} is not bound"),
            EvalError::Type(msg) => write!(f, "type error: {msg}"),
            EvalError::Overflow => f.write_str("integer overflow"),
        }
    }
}

impl core::error::Error for EvalError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl core::error::Error for ParseError {}

/// Everything that can go wrong turning text into a checked program or store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    Parse(ParseError),
    Scope(Vec<Diagnostic>),
    Eval(EvalError),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse(e) => write!(f, "parse error at {e}"),
            Error::Scope(ds) => {
                f.write_str("ill-formed program:")?;
                for d in ds {
                    write!(f, "\n  {d}")?;
                }
                Ok(())
            }
            Error::Eval(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for Error {}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Parse(e)
    }
}

impl From<EvalError> for Error {
    fn from(e: EvalError) -> Self {
        Error::Eval(e)
    }
}
