//! Multiset rewriting with comprehension patterns.
//!
//! A program is a list of committed-choice rules whose heads may contain
//! comprehension patterns `{atom | guard}#{binders in Domain}`. A comprehension
//! head matches the largest multiset of store constraints it subsumes and binds
//! `Domain` to the multiset of collected binder values; a comprehension in a
//! rule body unfolds into one constraint per domain element.
//!
//! The crate provides two executable semantics over the same programs:
//!
//! * [`abstract_engine`]: the relational rewriting semantics, one rule
//!   application per step, used as the reference.
//! * [`op_engine`]: a goal-stack machine with occurrence-indexed active
//!   constraints, lazy storage of monotone constraints and saturated
//!   propagation rules.
//!
//! [`monotonicity`] decides which body constraints can be stored lazily, and
//! [`harness`] maps machine states back to abstract stores so every machine
//! step can be checked against the reference.
//!
//! The crate is `no_std` and needs only `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod abstract_engine;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod harness;
pub mod matcher;
pub mod monotonicity;
pub mod op_engine;
pub mod parser;
pub mod store;
pub mod syntax;
pub mod term;

pub use error::{Error, EvalError, ParseError};
pub use store::{LabeledStore, Store};
pub use syntax::{Atom, Comprehension, Diagnostic, DiagnosticKind, Pattern, Program, Rule};
pub use term::{Guard, Name, Subst, Term};

/// Parses, checks and normalizes a program.
pub fn load_program(text: &str) -> Result<Program, Error> {
    let p = parser::parse_program(text)?;
    p.normalized().map_err(Error::Scope)
}
