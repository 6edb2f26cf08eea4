use super::ast::{BinOp, Expr, Stmt, StmtKind, Sub, UnOp};
use super::lexer::{lex, Tok, Token};
use super::DslError;
use crate::ewise::BinaryOp;

/// Names parsed as function calls rather than tensor references.
pub const FUNCTIONS: [&str; 19] = [
    "rand", "ones", "zeros", "eye", "abs", "log", "exp", "sqrt", "conj", "real", "imag", "round",
    "step", "trace", "diag", "cat", "isequal", "sum", "all",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

pub fn parse(src: &str) -> Result<Vec<Stmt>, DslError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let mut out = Vec::new();
    loop {
        while p.peek() == &Tok::End {
            p.pos += 1;
        }
        if p.peek() == &Tok::Eof {
            return Ok(out);
        }
        out.push(p.statement()?);
        match p.peek() {
            Tok::End | Tok::Eof => {}
            _ => return Err(p.error("expected end of statement")),
        }
    }
}

/// Parse a single expression.
pub fn parse_expr(src: &str) -> Result<Expr, DslError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let e = p.expr()?;
    while p.peek() == &Tok::End {
        p.pos += 1;
    }
    if p.peek() != &Tok::Eof {
        return Err(p.error("unexpected input after expression"));
    }
    Ok(e)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn error(&self, msg: &str) -> DslError {
        let t = &self.toks[self.pos];
        let found = match &t.tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(x) | Tok::Imag(x) => format!("`{x}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::End => "end of statement".into(),
            Tok::Eof => "end of input".into(),
        };
        DslError::syntax(t.line, t.col, format!("{msg}, found {found}"))
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(s) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), DslError> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{sym}`")))
        }
    }

    fn statement(&mut self) -> Result<Stmt, DslError> {
        let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
        let kind = if matches!(self.peek(), Tok::Ident(s) if s == "assert")
            && !matches!(self.peek_at(1), Tok::Sym("=") | Tok::End | Tok::Eof)
        {
            self.pos += 1;
            StmtKind::Assert(self.expr()?)
        } else {
            let e = self.expr()?;
            if self.eat("=") {
                match e {
                    Expr::Ref { name, subs } => StmtKind::Assign {
                        name,
                        subs,
                        value: self.expr()?,
                    },
                    _ => {
                        return Err(DslError::syntax(line, col, "invalid assignment target".into()))
                    }
                }
            } else {
                StmtKind::Expr(e)
            }
        };
        Ok(Stmt { kind, line, col })
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        self.binary_level(0)
    }

    fn binary_level(&mut self, level: usize) -> Result<Expr, DslError> {
        const LEVELS: [&[(&str, BinOp)]; 5] = [
            &[("|", BinOp::Ewise(BinaryOp::Or))],
            &[("&", BinOp::Ewise(BinaryOp::And))],
            &[
                ("==", BinOp::Ewise(BinaryOp::Eq)),
                ("~=", BinOp::Ewise(BinaryOp::Ne)),
                ("<=", BinOp::Ewise(BinaryOp::Le)),
                (">=", BinOp::Ewise(BinaryOp::Ge)),
                ("<", BinOp::Ewise(BinaryOp::Lt)),
                (">", BinOp::Ewise(BinaryOp::Gt)),
            ],
            &[("+", BinOp::Ewise(BinaryOp::Add)), ("-", BinOp::Ewise(BinaryOp::Sub))],
            &[
                ("*", BinOp::Product),
                ("\\", BinOp::LeftDivide),
                ("/", BinOp::RightDivide),
                (".*", BinOp::Ewise(BinaryOp::Mul)),
                ("./", BinOp::Ewise(BinaryOp::Div)),
                (".\\", BinOp::Ewise(BinaryOp::LeftDiv)),
            ],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary_level(level + 1)?;
        'outer: loop {
            for (sym, op) in LEVELS[level] {
                if self.eat(sym) {
                    let rhs = self.binary_level(level + 1)?;
                    lhs = Expr::Binary {
                        op: *op,
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                    };
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn prefix(&mut self) -> Option<UnOp> {
        for (sym, op) in [("-", UnOp::Neg), ("+", UnOp::Plus), ("~", UnOp::Not)] {
            if self.eat(sym) {
                return Some(op);
            }
        }
        None
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        match self.prefix() {
            Some(op) => Ok(Expr::Unary {
                op,
                expr: Box::new(self.unary()?),
            }),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, DslError> {
        let mut base = self.postfix()?;
        loop {
            if self.eat(".^") {
                let exp = self.power_operand()?;
                base = Expr::Binary {
                    op: BinOp::Ewise(BinaryOp::Pow),
                    lhs: Box::new(base),
                    rhs: Box::new(exp),
                };
            } else if matches!(self.peek(), Tok::Sym("^")) {
                return Err(self.error("matrix power is not supported; use `.^`"));
            } else {
                return Ok(base);
            }
        }
    }

    fn power_operand(&mut self) -> Result<Expr, DslError> {
        match self.prefix() {
            Some(op) => Ok(Expr::Unary {
                op,
                expr: Box::new(self.power_operand()?),
            }),
            None => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Expr, DslError> {
        let mut e = self.primary()?;
        loop {
            let op = if self.eat("'") {
                UnOp::CTranspose
            } else if self.eat(".'") {
                UnOp::Transpose
            } else {
                return Ok(e);
            };
            e = Expr::Unary { op, expr: Box::new(e) };
        }
    }

    fn primary(&mut self) -> Result<Expr, DslError> {
        match self.peek().clone() {
            Tok::Num(x) => {
                self.pos += 1;
                Ok(Expr::Num(x))
            }
            Tok::Imag(x) => {
                self.pos += 1;
                Ok(Expr::Imag(x))
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if !self.eat("(") {
                    return Ok(Expr::Ref { name, subs: None });
                }
                if FUNCTIONS.contains(&name.as_str()) {
                    let mut args = Vec::new();
                    if !self.eat(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(")") {
                                break;
                            }
                            self.expect(",")?;
                        }
                    }
                    Ok(Expr::Call { name, args })
                } else {
                    let mut subs = Vec::new();
                    if !self.eat(")") {
                        loop {
                            subs.push(self.subscript()?);
                            if self.eat(")") {
                                break;
                            }
                            self.expect(",")?;
                        }
                    }
                    Ok(Expr::Ref { name, subs: Some(subs) })
                }
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Sym("[") => {
                self.pos += 1;
                self.matrix()
            }
            _ => Err(self.error("expected an operand")),
        }
    }

    fn matrix(&mut self) -> Result<Expr, DslError> {
        let mut rows: Vec<Vec<Expr>> = Vec::new();
        let mut row: Vec<Expr> = Vec::new();
        loop {
            if self.eat("]") {
                if !row.is_empty() {
                    rows.push(row);
                }
                return Ok(Expr::Matrix(rows));
            }
            if self.eat(";") {
                if !row.is_empty() {
                    rows.push(std::mem::take(&mut row));
                }
                continue;
            }
            row.push(self.expr()?);
            if !matches!(self.peek(), Tok::Sym("]") | Tok::Sym(";")) {
                self.expect(",")?;
            }
        }
    }

    fn subscript(&mut self) -> Result<Sub, DslError> {
        let mut complement = false;
        while self.eat("~") {
            complement = !complement;
        }
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.pos += 1;
                Ok(Sub::Index { name, complement })
            }
            _ if complement => Err(self.error("expected an index name after `~`")),
            Tok::Sym(":") => {
                self.pos += 1;
                Ok(Sub::All)
            }
            Tok::Num(x) => {
                let a = self.position(x)?;
                if self.eat(":") {
                    match self.peek().clone() {
                        Tok::Num(y) => Ok(Sub::Range(a, self.position(y)?)),
                        _ => Err(self.error("expected a range end")),
                    }
                } else {
                    Ok(Sub::Pos(a))
                }
            }
            _ => Err(self.error("expected a subscript")),
        }
    }

    fn position(&mut self, x: f64) -> Result<usize, DslError> {
        if x.fract() != 0.0 || x < 0.0 {
            return Err(self.error("numeric subscripts must be nonnegative integers"));
        }
        self.pos += 1;
        Ok(x as usize)
    }
}
