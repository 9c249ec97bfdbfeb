//! Override-assignment (OA) semantic merge conflict detection.
//!
//! The analyzed program is a merged version of two branches whose statements
//! carry LEFT/RIGHT/BASE provenance. OA reports a conflict when writes by the
//! two developers reach the same state element with no base write between
//! them. Three configurations are provided: class-hierarchy call graph with
//! name/type comparisons (`nopa`), points-to call graph with allocation-site
//! comparisons (`pa`), and points-to with a fall back to the conservative
//! rules whenever points-to information is missing (`hybrid`).

pub mod callgraph;
pub mod cli;
pub mod error;
pub mod eval;
pub mod frontend;
pub mod mir;
pub mod oa;
pub mod pointsto;
pub mod report;

pub use error::{Error, Result};
