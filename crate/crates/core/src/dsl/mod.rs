//! A small expression language over indexed tensors.
//!
//! ```text
//! a = rand(1,1,2); b = rand(1,1,2); c = rand(1,1,2)
//! x = a(i)*b(i)*c(~i)          # ternary inner product
//! z(i,~j) = y(~j,i)            # permute and copy
//! assert isequal(x, b(i)*(a(~i)*c(~i)))
//! ```
//!
//! Index names are interned per [`Environment`]; `~` before an index name
//! selects its false variant.

pub mod ast;
mod eval;
mod lexer;
pub mod parser;

use std::fmt;

pub use ast::{BinOp, Expr, Stmt, StmtKind, Sub, UnOp};
pub use eval::{evaluate, execute, run, Environment, Value};
pub use parser::{parse, parse_expr};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DslErrorKind {
    Syntax,
    UnknownName,
    Engine,
    Assertion,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DslError {
    pub kind: DslErrorKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl DslError {
    pub(crate) fn syntax(line: usize, col: usize, message: String) -> Self {
        DslError {
            kind: DslErrorKind::Syntax,
            line,
            col,
            message,
        }
    }
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            DslErrorKind::Syntax => "syntax error",
            DslErrorKind::UnknownName => "unknown name",
            DslErrorKind::Engine => "error",
            DslErrorKind::Assertion => "assertion failed",
        };
        write!(f, "{}:{}: {what}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for DslError {}
