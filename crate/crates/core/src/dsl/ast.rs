use std::fmt;

use crate::ewise::BinaryOp;

/// One subscript inside `name(...)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Sub {
    Index { name: String, complement: bool },
    /// 1-based position.
    Pos(usize),
    /// Inclusive 1-based range `a:b`.
    Range(usize, usize),
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    /// `*`
    Product,
    /// `\`
    LeftDivide,
    /// `/`
    RightDivide,
    Ewise(BinaryOp),
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Product => "*",
            BinOp::LeftDivide => "\\",
            BinOp::RightDivide => "/",
            BinOp::Ewise(op) => op.symbol(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Plus,
    Not,
    /// Postfix `'`.
    CTranspose,
    /// Postfix `.'`.
    Transpose,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Imag(f64),
    /// Tensor reference, optionally subscripted.
    Ref { name: String, subs: Option<Vec<Sub>> },
    Call { name: String, args: Vec<Expr> },
    Unary { op: UnOp, expr: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    /// Bracket concatenation, one inner vector per row.
    Matrix(Vec<Vec<Expr>>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Expr(Expr),
    /// `name = expr` or `name(subs) = expr`.
    Assign { name: String, subs: Option<Vec<Sub>>, value: Expr },
    Assert(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub line: usize,
    pub col: usize,
}

fn write_subs(f: &mut fmt::Formatter<'_>, subs: &[Sub]) -> fmt::Result {
    write!(f, "(")?;
    for (k, s) in subs.iter().enumerate() {
        if k > 0 {
            write!(f, ",")?;
        }
        match s {
            Sub::Index { name, complement } => {
                write!(f, "{}{name}", if *complement { "~" } else { "" })?
            }
            Sub::Pos(p) => write!(f, "{p}")?,
            Sub::Range(a, b) => write!(f, "{a}:{b}")?,
            Sub::All => write!(f, ":")?,
        }
    }
    write!(f, ")")
}

fn write_number(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    if x.is_finite() {
        write!(f, "{x:?}")
    } else {
        // Literals are never negative or NaN; only overflow reaches here.
        write!(f, "1e999")
    }
}

/// Fully parenthesized, so printing and reparsing is the identity.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write_number(f, *x),
            Expr::Imag(x) => {
                write_number(f, *x)?;
                write!(f, "i")
            }
            Expr::Ref { name, subs } => {
                write!(f, "{name}")?;
                match subs {
                    Some(s) => write_subs(f, s),
                    None => Ok(()),
                }
            }
            Expr::Call { name, args } => {
                write!(f, "{name}(")?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Expr::Unary { op, expr } => match op {
                UnOp::Neg => write!(f, "(-{expr})"),
                UnOp::Plus => write!(f, "(+{expr})"),
                UnOp::Not => write!(f, "(~{expr})"),
                UnOp::CTranspose => write!(f, "({expr}')"),
                UnOp::Transpose => write!(f, "({expr}.')"),
            },
            Expr::Binary { op, lhs, rhs } => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Expr::Matrix(rows) => {
                write!(f, "[")?;
                for (r, row) in rows.iter().enumerate() {
                    if r > 0 {
                        write!(f, "; ")?;
                    }
                    for (k, e) in row.iter().enumerate() {
                        if k > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{e}")?;
                    }
                }
                write!(f, "]")
            }
        }
    }
}

impl fmt::Display for StmtKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StmtKind::Expr(e) => write!(f, "{e}"),
            StmtKind::Assert(e) => write!(f, "assert {e}"),
            StmtKind::Assign { name, subs, value } => {
                write!(f, "{name}")?;
                if let Some(s) = subs {
                    write_subs(f, s)?;
                }
                write!(f, " = {value}")
            }
        }
    }
}
