use std::collections::BTreeMap;

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::ast::{BinOp, Expr, Stmt, StmtKind, Sub, UnOp};
use super::{parse, DslError, DslErrorKind};
use crate::array::{ElementKind, Entries};
use crate::error::RtError;
use crate::ewise::{equal_all, ewise_binary, ewise_unary, UnaryOp};
use crate::index::IndexHandle;
use crate::lattice::{product, solve_left, solve_right};
use crate::pagewise::{
    concat, page_cat, page_ctranspose, page_diag, page_trace, page_transpose, CatAxis, CatWhere,
};
use crate::tensor::{Operand, Subscript, Subscripted, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Tensor(Tensor),
    Logical(bool),
}

impl Value {
    pub fn into_tensor(self) -> Tensor {
        match self {
            Value::Tensor(t) => t,
            Value::Logical(b) => {
                Tensor::matrix(Entries::boolean(ArrayD::from_elem(IxDyn(&[1, 1]), b)))
                    .expect("1x1 matrix")
            }
        }
    }

    /// True when every entry is nonzero.
    pub fn truth(&self) -> bool {
        match self {
            Value::Logical(b) => *b,
            Value::Tensor(t) => t.entries().values().iter().all(|z| *z != Complex64::new(0.0, 0.0)),
        }
    }
}

/// Named tensors, interned index names and the random stream.
pub struct Environment {
    tensors: BTreeMap<String, Tensor>,
    indices: BTreeMap<String, IndexHandle>,
    rng: ChaCha8Rng,
}

impl Environment {
    pub fn new(seed: u64) -> Self {
        Environment {
            tensors: BTreeMap::new(),
            indices: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn define(&mut self, name: &str, t: Tensor) {
        self.tensors.insert(name.to_string(), t);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    /// The true-variant handle for an index name, created on first use.
    pub fn index(&mut self, name: &str) -> IndexHandle {
        *self
            .indices
            .entry(name.to_string())
            .or_insert_with(IndexHandle::fresh)
    }

    /// Display name of a handle: its interned name, with `~` for the false
    /// variant; unnamed handles print by identity.
    pub fn label(&self, h: IndexHandle) -> String {
        let base = self
            .indices
            .iter()
            .find(|(_, v)| v.same_id(h))
            .map(|(k, _)| k.clone())
            .unwrap_or_else(|| format!("#{}", h.id()));
        if h.variant() {
            base
        } else {
            format!("~{base}")
        }
    }

    /// One-line description: degree, dims, indices and leading entries.
    pub fn summary(&self, v: &Value) -> String {
        match v {
            Value::Logical(b) => format!("logical {b}"),
            Value::Tensor(t) => {
                let dims: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
                let idx: Vec<String> = t.indices().iter().map(|h| self.label(*h)).collect();
                let vals = t.entries().values();
                let shown: Vec<String> = vals
                    .iter()
                    .take(6)
                    .map(|z| format_entry(*z, t.entries().kind()))
                    .collect();
                let more = if vals.len() > 6 { ", ..." } else { "" };
                format!(
                    "degree {} dims [{}] indices [{}] entries [{}{more}]",
                    t.degree(),
                    dims.join(" "),
                    idx.join(" "),
                    shown.join(", ")
                )
            }
        }
    }

    /// `{value, dims, indices}` record.
    pub fn to_json(&self, v: &Value) -> serde_json::Value {
        match v {
            Value::Logical(b) => json!({"value": b, "dims": [1, 1], "indices": []}),
            Value::Tensor(t) => {
                let values: Vec<serde_json::Value> = match t.entries() {
                    Entries::Complex(a) => a.iter().map(|z| json!([z.re, z.im])).collect(),
                    Entries::Bool(a) => a.iter().map(|b| json!(b)).collect(),
                    Entries::Real(a) => a.iter().map(|x| json!(x)).collect(),
                };
                let idx: Vec<String> = t.indices().iter().map(|h| self.label(*h)).collect();
                json!({"value": values, "dims": t.shape(), "indices": idx})
            }
        }
    }
}

fn format_entry(z: Complex64, kind: ElementKind) -> String {
    match kind {
        ElementKind::Bool => (z.re != 0.0).to_string(),
        ElementKind::Real => format!("{}", z.re),
        ElementKind::Complex => format!("{}{:+}i", z.re, z.im),
    }
}

type EvalResult<T> = std::result::Result<T, (DslErrorKind, String)>;

fn engine<T>(r: crate::error::Result<T>) -> EvalResult<T> {
    r.map_err(|e: RtError| (DslErrorKind::Engine, e.to_string()))
}

fn fail<T>(msg: impl Into<String>) -> EvalResult<T> {
    Err((DslErrorKind::Engine, msg.into()))
}

/// Evaluate one expression.
pub fn evaluate(e: &Expr, env: &mut Environment) -> Result<Value, DslError> {
    eval(e, env).map_err(|(kind, message)| DslError { kind, line: 1, col: 1, message })
}

/// Execute one statement, returning its value (the assigned tensor for
/// assignments).
pub fn execute(s: &Stmt, env: &mut Environment) -> Result<Value, DslError> {
    let at = |(kind, message): (DslErrorKind, String)| DslError {
        kind,
        line: s.line,
        col: s.col,
        message,
    };
    match &s.kind {
        StmtKind::Expr(e) => {
            let v = eval(e, env).map_err(at)?;
            if let Value::Tensor(t) = &v {
                env.define("ans", t.clone());
            }
            Ok(v)
        }
        StmtKind::Assign { name, subs, value } => {
            let rhs = eval(value, env).map_err(at)?.into_tensor();
            let stored = match subs {
                None => rhs,
                Some(subs) => {
                    let mut handles = Vec::with_capacity(subs.len());
                    for s in subs {
                        match s {
                            Sub::Index { name, complement } => {
                                let h = env.index(name);
                                handles.push(if *complement { !h } else { h });
                            }
                            _ => {
                                return Err(at((
                                    DslErrorKind::Engine,
                                    "numeric subscripts cannot be assigned to".into(),
                                )))
                            }
                        }
                    }
                    Tensor::assign(&handles, Operand::Tensor(&rhs))
                        .map_err(|e| at((DslErrorKind::Engine, e.to_string())))?
                }
            };
            env.define(name, stored.clone());
            Ok(Value::Tensor(stored))
        }
        StmtKind::Assert(e) => {
            let v = eval(e, env).map_err(at)?;
            if v.truth() {
                Ok(v)
            } else {
                Err(at((DslErrorKind::Assertion, e.to_string())))
            }
        }
    }
}

/// Parse and run `src`, reporting each statement through `report`. Stops at
/// the first error.
pub fn run(src: &str, env: &mut Environment, report: &mut dyn FnMut(&str)) -> Result<(), DslError> {
    for stmt in parse(src)? {
        let v = execute(&stmt, env)?;
        let line = match &stmt.kind {
            StmtKind::Assign { name, .. } => format!("{name} = {}", env.summary(&v)),
            StmtKind::Expr(_) => format!("ans = {}", env.summary(&v)),
            StmtKind::Assert(e) => format!("assert {e}: ok"),
        };
        report(&line);
    }
    Ok(())
}

fn eval(e: &Expr, env: &mut Environment) -> EvalResult<Value> {
    match e {
        Expr::Num(x) => Ok(Value::Tensor(Tensor::scalar(*x))),
        Expr::Imag(x) => Ok(Value::Tensor(Tensor::complex_scalar(Complex64::new(0.0, *x)))),
        Expr::Ref { name, subs } => {
            let Some(t) = env.get(name).cloned() else {
                return Err((DslErrorKind::UnknownName, format!("`{name}` is not defined")));
            };
            let Some(subs) = subs else {
                if t.degree() > 0 {
                    return fail(format!(
                        "`{name}` has degree {} and needs index subscripts",
                        t.degree()
                    ));
                }
                return Ok(Value::Tensor(t));
            };
            let resolved: Vec<Subscript> = subs
                .iter()
                .map(|s| match s {
                    Sub::Index { name, complement } => {
                        let h = env.index(name);
                        Subscript::Index(if *complement { !h } else { h })
                    }
                    Sub::Pos(p) => Subscript::Pos(*p),
                    Sub::Range(a, b) => Subscript::Range(*a, *b),
                    Sub::All => Subscript::All,
                })
                .collect();
            match engine(t.subscript(&resolved))? {
                Subscripted::Tensor(t) => Ok(Value::Tensor(t)),
                Subscripted::Array(a) => Ok(Value::Tensor(Tensor::from_array(a).0)),
            }
        }
        Expr::Unary { op, expr } => {
            let v = eval(expr, env)?;
            if let (UnOp::Not, Value::Logical(b)) = (op, &v) {
                return Ok(Value::Logical(!b));
            }
            let t = v.into_tensor();
            Ok(Value::Tensor(match op {
                UnOp::Plus => t,
                UnOp::Neg => engine(ewise_unary(UnaryOp::Neg, &t))?,
                UnOp::Not => {
                    let b = match t.entries() {
                        Entries::Bool(_) => t,
                        e => {
                            let mask = engine(e.to_bool())?;
                            engine(Tensor::with_indices(Entries::Bool(mask), t.indices()))?
                        }
                    };
                    engine(ewise_unary(UnaryOp::Not, &b))?
                }
                UnOp::CTranspose => page_ctranspose(&t),
                UnOp::Transpose => page_transpose(&t),
            }))
        }
        Expr::Binary { op, lhs, rhs } => {
            let a = eval(lhs, env)?.into_tensor();
            let b = eval(rhs, env)?.into_tensor();
            let out = match op {
                BinOp::Product => product(&a, &b),
                BinOp::LeftDivide => solve_left(&a, &b),
                BinOp::RightDivide => solve_right(&a, &b),
                BinOp::Ewise(op) => ewise_binary(*op, Operand::Tensor(&a), Operand::Tensor(&b)),
            };
            Ok(Value::Tensor(engine(out)?))
        }
        Expr::Matrix(rows) => {
            if rows.is_empty() {
                return Ok(Value::Tensor(engine(Tensor::matrix(Entries::zeros(&[0, 0])))?));
            }
            let mut joined_rows = Vec::with_capacity(rows.len());
            for row in rows {
                let parts: Vec<Tensor> = row
                    .iter()
                    .map(|x| eval(x, env).map(Value::into_tensor))
                    .collect::<EvalResult<_>>()?;
                joined_rows.push(join(CatWhere::Cols, &parts)?);
            }
            Ok(Value::Tensor(join(CatWhere::Rows, &joined_rows)?))
        }
        Expr::Call { name, args } => call(name, args, env),
    }
}

fn join(at: CatWhere, parts: &[Tensor]) -> EvalResult<Tensor> {
    if parts.len() == 1 {
        return Ok(parts[0].clone());
    }
    let ops: Vec<Operand<'_>> = parts.iter().map(Operand::Tensor).collect();
    engine(concat(at, &ops))
}

fn count(v: Value, what: &str) -> EvalResult<usize> {
    let t = v.into_tensor();
    match t.value() {
        Some(z) if t.numel() == 1 && z.im == 0.0 && z.re >= 0.0 && z.re.fract() == 0.0 => {
            Ok(z.re as usize)
        }
        _ => fail(format!("{what} must be a nonnegative integer scalar")),
    }
}

fn index_arg(e: &Expr, env: &mut Environment) -> Option<IndexHandle> {
    match e {
        Expr::Ref { name, subs: None } if env.get(name).is_none() => Some(env.index(name)),
        Expr::Unary { op: UnOp::Not, expr } => index_arg(expr, env).map(|h| !h),
        _ => None,
    }
}

fn call(name: &str, args: &[Expr], env: &mut Environment) -> EvalResult<Value> {
    let arity = |lo: usize, hi: usize| -> EvalResult<()> {
        if args.len() < lo || args.len() > hi {
            fail(format!("`{name}` takes {lo} to {hi} arguments, got {}", args.len()))
        } else {
            Ok(())
        }
    };
    let unary = |op: UnaryOp, env: &mut Environment| -> EvalResult<Value> {
        let t = eval(&args[0], env)?.into_tensor();
        Ok(Value::Tensor(engine(ewise_unary(op, &t))?))
    };
    match name {
        "rand" | "ones" | "zeros" | "eye" => {
            let mut dims = Vec::with_capacity(args.len());
            for a in args {
                let v = eval(a, env)?;
                dims.push(count(v, "a dimension")?);
            }
            match dims.len() {
                0 => dims = vec![1, 1],
                1 => dims.push(dims[0]),
                _ => {}
            }
            let shape = IxDyn(&dims);
            let entries = match name {
                "rand" => ArrayD::from_shape_simple_fn(shape, || env.rng.random::<f64>()),
                "ones" => ArrayD::ones(shape),
                "zeros" => ArrayD::zeros(shape),
                _ => {
                    if dims.len() != 2 {
                        return fail("`eye` makes matrices only");
                    }
                    ArrayD::from_shape_fn(shape, |ix| if ix[0] == ix[1] { 1.0 } else { 0.0 })
                }
            };
            Ok(Value::Tensor(Tensor::from_array(Entries::real(entries)).0))
        }
        "abs" | "log" | "exp" | "sqrt" | "conj" | "real" | "imag" | "step" => {
            arity(1, 1)?;
            let op = match name {
                "abs" => UnaryOp::Abs,
                "log" => UnaryOp::Log,
                "exp" => UnaryOp::Exp,
                "sqrt" => UnaryOp::Sqrt,
                "conj" => UnaryOp::Conj,
                "real" => UnaryOp::Real,
                "imag" => UnaryOp::Imag,
                _ => UnaryOp::Step,
            };
            unary(op, env)
        }
        "round" => {
            arity(1, 2)?;
            let digits = if args.len() == 2 {
                let t = eval(&args[1], env)?.into_tensor();
                match t.value() {
                    Some(z) if t.numel() == 1 && z.re.fract() == 0.0 => z.re as i32,
                    _ => return fail("`round` precision must be an integer"),
                }
            } else {
                0
            };
            unary(UnaryOp::Round(digits), env)
        }
        "trace" => {
            arity(1, 1)?;
            let t = eval(&args[0], env)?.into_tensor();
            Ok(Value::Tensor(engine(page_trace(&t))?))
        }
        "diag" => {
            arity(1, 1)?;
            let t = eval(&args[0], env)?.into_tensor();
            Ok(Value::Tensor(page_diag(&t)))
        }
        "cat" => {
            if args.len() < 2 {
                return fail("`cat` needs a dimension and at least one operand");
            }
            let at = match index_arg(&args[0], env) {
                Some(h) => Some(CatWhere::Index(h)),
                None => None,
            };
            let parts: Vec<Tensor> = args[1..]
                .iter()
                .map(|x| eval(x, env).map(Value::into_tensor))
                .collect::<EvalResult<_>>()?;
            let at = match at {
                Some(at) => at,
                None => match count(eval(&args[0], env)?, "a `cat` dimension")? {
                    1 => CatWhere::Rows,
                    2 => CatWhere::Cols,
                    0 => return fail("`cat` dimensions start at 1"),
                    d => {
                        let arrays: Vec<Entries> =
                            parts.iter().map(|t| t.entries().clone()).collect();
                        let e = engine(page_cat(CatAxis::Dim(d - 1), &arrays))?;
                        return Ok(Value::Tensor(Tensor::from_array(e).0));
                    }
                },
            };
            let ops: Vec<Operand<'_>> = parts.iter().map(Operand::Tensor).collect();
            Ok(Value::Tensor(engine(concat(at, &ops))?))
        }
        "isequal" => {
            if args.is_empty() {
                return fail("`isequal` needs operands");
            }
            let parts: Vec<Tensor> = args
                .iter()
                .map(|x| eval(x, env).map(Value::into_tensor))
                .collect::<EvalResult<_>>()?;
            let ops: Vec<Operand<'_>> = parts.iter().map(Operand::Tensor).collect();
            Ok(Value::Logical(equal_all(&ops)))
        }
        "sum" => {
            if args.is_empty() {
                return fail("`sum` needs an operand");
            }
            let t = eval(&args[0], env)?.into_tensor();
            let over: Vec<IndexHandle> = if args.len() == 1 {
                t.indices().to_vec()
            } else {
                let mut v = Vec::new();
                for a in &args[1..] {
                    match index_arg(a, env) {
                        Some(h) => v.push(h),
                        None => return fail("`sum` takes index names after the operand"),
                    }
                }
                v
            };
            Ok(Value::Tensor(t.sum(&over)))
        }
        "all" => {
            arity(1, 1)?;
            Ok(Value::Logical(eval(&args[0], env)?.truth()))
        }
        _ => Err((DslErrorKind::UnknownName, format!("unknown function `{name}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env_abc() -> Environment {
        let mut env = Environment::new(0);
        for (name, v) in [("a", [1.0, 2.0]), ("b", [3.0, 4.0]), ("c", [5.0, 6.0])] {
            let e = Entries::from_shape_vec(&[1, 1, 2], v.to_vec()).unwrap();
            env.define(name, Tensor::from_array(e).0);
        }
        env
    }

    fn value(src: &str, env: &mut Environment) -> Value {
        let stmts = parse(src).unwrap();
        let mut last = None;
        for s in &stmts {
            last = Some(execute(s, env).unwrap());
        }
        last.unwrap()
    }

    fn scalar(v: Value) -> f64 {
        v.into_tensor().value().unwrap().re
    }

    #[test]
    fn ternary_products() {
        let mut env = env_abc();
        assert_eq!(scalar(value("a(i)*b(i)*c(~i)", &mut env)), 63.0);
        assert_eq!(scalar(value("b(i)*(a(~i)*c(~i))", &mut env)), 63.0);
        let y = value("a(i)*b(i)*c(i)", &mut env).into_tensor();
        let vals: Vec<f64> = y.entries().values().iter().map(|z| z.re).collect();
        assert_eq!(vals, vec![15.0, 48.0]);
    }

    #[test]
    fn assignment_permutes() {
        let mut env = Environment::new(1);
        value("y = rand(1,1,2,3)", &mut env);
        let z = value("z(i,~j) = y(~j,i)", &mut env).into_tensor();
        let i = env.index("i");
        let j = env.index("j");
        assert_eq!(z.indices(), &[i, !j]);
        let y = env.get("y").unwrap().clone();
        for p in 0..3 {
            for q in 0..2 {
                assert_eq!(z.entries().get(&[0, 0, p, q]), y.entries().get(&[0, 0, q, p]));
            }
        }
    }

    #[test]
    fn errors_carry_statement_location() {
        let mut env = Environment::new(0);
        let err = run("x = 1\n  y = nope + 1", &mut env, &mut |_| {}).unwrap_err();
        assert_eq!(err.kind, DslErrorKind::UnknownName);
        assert_eq!((err.line, err.col), (2, 3));
        let err = run("assert 1 == 2", &mut env, &mut |_| {}).unwrap_err();
        assert_eq!(err.kind, DslErrorKind::Assertion);
    }

    #[test]
    fn report_lines() {
        let mut env = env_abc();
        let mut lines = Vec::new();
        run("x = a(i)*b(i)*c(~i)\nassert x == 63", &mut env, &mut |l| lines.push(l.to_string()))
            .unwrap();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("x = degree 0 dims [1 1]"));
        let mut none = Vec::new();
        run("", &mut env, &mut |l| none.push(l.to_string())).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn seeded_rand_is_reproducible() {
        let a = value("rand(2,3)", &mut Environment::new(9));
        let b = value("rand(2,3)", &mut Environment::new(9));
        assert_eq!(a, b);
        let c = value("rand(2,3)", &mut Environment::new(10));
        assert_ne!(a, c);
    }
}
