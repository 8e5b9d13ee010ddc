//! Distance-based Euclidean geometry theories: syntax, defined atoms,
//! translations between languages, finite-model checking and reduction to
//! real-closed-field arithmetic.

pub mod corpus;
pub mod defs;
pub mod logic;
pub mod models;
pub mod rcf;
pub mod syntax;
pub mod xlate;
