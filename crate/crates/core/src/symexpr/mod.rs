//! Exact symbolic expressions: canonical trees over rationals, a text parser
//! and printer, partial differentiation, substitution and numeric evaluation.

mod atom;
mod calculus;
mod expr;
mod parse;
mod print;

pub use atom::{AtomId, CoordNames, Role, MAX_LEVEL};
pub use calculus::{differentiate, eval_numeric, substitute, substitute_one, Assignment, EvalError};
pub use expr::{q, Expr, Node, Q};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use print::Printer;

/// Canonical form of `e`. Idempotent and value preserving.
pub fn simplify(e: &Expr) -> Expr {
    e.simplify()
}
