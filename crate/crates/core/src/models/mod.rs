//! Numeric models and sampling-based checking.

pub mod check;
pub mod eval;
pub mod geom;
pub mod hyper;
pub mod sample;
pub mod script;
pub mod witnesses;

pub use eval::{eval_qf, eval_term, holds, Assignment, AtomTrace, EvalCtx, EvalError};
pub use geom::{ModelKind, PointValue};
pub use check::{check, CheckConfig, CheckError, CheckReport, Status};
pub use witnesses::{builtin_witnesses, Recipes, ScriptSet};
