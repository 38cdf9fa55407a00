//! Compiler toolchain and deterministic runtime for a statechart-based
//! IoT modeling language with declarative data-analytics blocks.
//!
//! Pipeline: [`parser`] text → AST ([`model`]) → [`merge`] import/overlay
//! flattening → [`validate`] rule catalog → [`compile`] deployment bundle →
//! [`sim`] deterministic execution, with [`templates`] for source-tree
//! emission and [`corpus`] providing the example scenarios and synthetic
//! dataset generators.

pub mod cli;
pub mod compile;
pub mod corpus;
pub mod merge;
pub mod model;
pub mod parser;
pub mod sim;
pub mod templates;
pub mod validate;

pub use model::Model;
pub use parser::{parse, pretty_print, ParseDiagnostic};
