//! Design of binary `+-1` sequence sets with low integrated sidelobe level.
//!
//! The crate provides exact periodic correlation kernels ([`correlation`]),
//! baseline code generators ([`codegen`]), an exact solver for descent
//! subproblems built on a mixed-integer quadratic model ([`miqp`]) and the
//! block coordinate descent driver ([`bcd`]).

pub mod bcd;
pub mod codegen;
pub mod correlation;
pub mod error;
pub mod miqp;
pub mod report;
pub mod sequence;

pub use correlation::{cross_correlation, CorrelationState, CorrelationTable, ObjectiveValue};
pub use error::{Error, Result};
pub use sequence::{Coord, Flip, IndexSubset, SequenceSet};
