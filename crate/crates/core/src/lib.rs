//! Solver for string constraints mixing word equations, regular membership
//! and linear length arithmetic, by unfolding inductive string predicates
//! into a cyclic proof tree.

pub mod arith;
pub mod ast;
pub mod classify;
pub mod cli;
pub mod engine;
pub mod frontend;
pub mod gen;
pub mod oracle;
pub mod reduce;
pub mod regex;

/// Integer type used for constants and models throughout the solver.
pub type Int = i128;
