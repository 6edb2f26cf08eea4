//! N-ary alignment and entrywise operations with implicit outer expansion.
//!
//! Operands are aligned on the union of their index identities, in order of
//! first appearance. An identity missing from an operand becomes a size-one
//! axis, so any entrywise kernel broadcasts across it; this is the implicit
//! outer product with a unit tensor. Identities seen with both variants are
//! summed after the kernel runs.

use ndarray::{ArrayD, IxDyn, Zip};
use num_complex::Complex64;

use crate::array::{arithmetic_kind, effective_ndim, ElementKind, Entries};
use crate::error::{Result, RtError};
use crate::index::{position_of, IndexHandle};
use crate::tensor::{Operand, Tensor};

/// Operands permuted onto a common index sequence.
#[derive(Clone, Debug)]
pub struct Alignment {
    /// Entries per operand, each with `2 + union.len()` axes.
    pub arrays: Vec<Entries>,
    /// Union of identities; the leftmost variant of each is kept.
    pub union: Vec<IndexHandle>,
    /// Identities that appeared with both variants.
    pub contract: Vec<IndexHandle>,
    /// For each operand and union slot, the operand's own tensor axis.
    pub axis_maps: Vec<Vec<Option<usize>>>,
}

pub fn alignn(operands: &[Operand<'_>]) -> Result<Alignment> {
    align_except(operands, None)
}

/// Alignment that tolerates a size difference on the `except` identity (the
/// concatenation axis).
pub(crate) fn align_except(
    operands: &[Operand<'_>],
    except: Option<IndexHandle>,
) -> Result<Alignment> {
    let mut union: Vec<IndexHandle> = Vec::new();
    let mut contract: Vec<IndexHandle> = Vec::new();
    for op in operands {
        match op {
            Operand::Tensor(t) => {
                for h in t.indices() {
                    match position_of(&union, *h) {
                        None => union.push(*h),
                        Some(p) => {
                            if union[p].variant() != h.variant()
                                && position_of(&contract, *h).is_none()
                            {
                                contract.push(union[p]);
                            }
                        }
                    }
                }
            }
            Operand::Plain(e) => {
                if effective_ndim(e.shape()) != 2 {
                    return Err(RtError::OperandKind(
                        "a plain operand must be a 2D array".into(),
                    ));
                }
            }
        }
    }
    let n = union.len();
    let mut sizes: Vec<Option<usize>> = vec![None; n];
    let mut arrays = Vec::with_capacity(operands.len());
    let mut axis_maps = Vec::with_capacity(operands.len());
    for op in operands {
        let (entries, indices): (&Entries, &[IndexHandle]) = match op {
            Operand::Tensor(t) => (t.entries(), t.indices()),
            Operand::Plain(e) => (*e, &[]),
        };
        let own = indices.len();
        let widened = entries.clone().with_ndim(2 + n.max(own));
        let mut perm = vec![0, 1];
        let mut map = Vec::with_capacity(n);
        let mut next_extra = 2 + own;
        for (slot, u) in union.iter().enumerate() {
            match position_of(indices, *u) {
                Some(p) => {
                    let d = entries.shape()[2 + p];
                    let skip = except.is_some_and(|e| e.same_id(*u));
                    if !skip {
                        match sizes[slot] {
                            Some(s) if s != d && s != 1 && d != 1 => {
                                return Err(RtError::DimMismatch(format!(
                                    "index {u} has sizes {s} and {d}"
                                )))
                            }
                            Some(s) if s != 1 => {}
                            _ => sizes[slot] = Some(d),
                        }
                    }
                    perm.push(2 + p);
                    map.push(Some(p));
                }
                None => {
                    perm.push(next_extra);
                    next_extra += 1;
                    map.push(None);
                }
            }
        }
        arrays.push(widened.permuted(&perm));
        axis_maps.push(map);
    }
    Ok(Alignment {
        arrays,
        union,
        contract,
        axis_maps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    /// `.*`
    Mul,
    /// `./`
    Div,
    /// `.\`
    LeftDiv,
    /// `.^`
    Pow,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => ".*",
            BinaryOp::Div => "./",
            BinaryOp::LeftDiv => ".\\",
            BinaryOp::Pow => ".^",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "~=",
            BinaryOp::Lt => "<",
            BinaryOp::Gt => ">",
            BinaryOp::Le => "<=",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnaryOp {
    Neg,
    Conj,
    Not,
    Abs,
    Log,
    Exp,
    Sqrt,
    Real,
    Imag,
    /// Round to the given number of decimal digits.
    Round(i32),
    /// 1 where the entry is strictly positive, else 0.
    Step,
}

/// Common broadcast shape; sizes must agree or be one.
pub fn broadcast_shape<'a>(shapes: impl IntoIterator<Item = &'a [usize]>) -> Result<Vec<usize>> {
    let mut out: Vec<usize> = Vec::new();
    for s in shapes {
        if out.is_empty() {
            out = s.to_vec();
            continue;
        }
        if s.len() != out.len() {
            return Err(RtError::DimMismatch(format!(
                "cannot broadcast {s:?} against {out:?}"
            )));
        }
        for (o, &d) in out.iter_mut().zip(s) {
            if *o == 1 {
                *o = d;
            } else if d != 1 && d != *o {
                return Err(RtError::DimMismatch(format!(
                    "cannot broadcast {s:?} against {:?}",
                    out
                )));
            }
        }
    }
    Ok(out)
}

fn zip_map<A, B, C>(a: &ArrayD<A>, b: &ArrayD<B>, shape: &[usize], f: impl Fn(&A, &B) -> C) -> ArrayD<C> {
    let av = a.broadcast(IxDyn(shape)).expect("broadcastable");
    let bv = b.broadcast(IxDyn(shape)).expect("broadcastable");
    Zip::from(&av).and(&bv).map_collect(|x, y| f(x, y))
}

/// Entrywise kernel on two arrays of equal rank with size-one broadcasting.
pub fn apply_binary(op: BinaryOp, a: &Entries, b: &Entries) -> Result<Entries> {
    let shape = broadcast_shape([a.shape(), b.shape()])?;
    use BinaryOp::*;
    let out = match op {
        Add | Sub | Mul | Div | LeftDiv | Pow => {
            match arithmetic_kind([a.kind(), b.kind()]) {
                ElementKind::Complex => {
                    let (x, y) = (a.to_complex(), b.to_complex());
                    Entries::Complex(zip_map(&x, &y, &shape, |&p, &q| match op {
                        Add => p + q,
                        Sub => p - q,
                        Mul => p * q,
                        Div => p / q,
                        LeftDiv => q / p,
                        Pow => complex_pow(p, q),
                        _ => unreachable!(),
                    }))
                }
                _ => {
                    let (x, y) = (a.to_real()?, b.to_real()?);
                    Entries::Real(zip_map(&x, &y, &shape, |&p, &q| match op {
                        Add => p + q,
                        Sub => p - q,
                        Mul => p * q,
                        Div => p / q,
                        LeftDiv => q / p,
                        Pow => p.powf(q),
                        _ => unreachable!(),
                    }))
                }
            }
        }
        Eq | Ne => {
            if a.kind() == ElementKind::Complex || b.kind() == ElementKind::Complex {
                let (x, y) = (a.to_complex(), b.to_complex());
                Entries::Bool(zip_map(&x, &y, &shape, |p, q| (p == q) == (op == Eq)))
            } else {
                let (x, y) = (a.to_real()?, b.to_real()?);
                Entries::Bool(zip_map(&x, &y, &shape, |p, q| {
                    if op == Eq {
                        p == q
                    } else {
                        p != q
                    }
                }))
            }
        }
        Lt | Gt | Le | Ge => {
            if a.kind() == ElementKind::Complex || b.kind() == ElementKind::Complex {
                return Err(RtError::ElementKind(format!(
                    "`{}` is undefined for complex entries",
                    op.symbol()
                )));
            }
            let (x, y) = (a.to_real()?, b.to_real()?);
            Entries::Bool(zip_map(&x, &y, &shape, |&p, &q| match op {
                Lt => p < q,
                Gt => p > q,
                Le => p <= q,
                Ge => p >= q,
                _ => unreachable!(),
            }))
        }
        And | Or => {
            let (x, y) = (a.to_bool()?, b.to_bool()?);
            Entries::Bool(zip_map(&x, &y, &shape, |&p, &q| {
                if op == And {
                    p && q
                } else {
                    p || q
                }
            }))
        }
    };
    Ok(out.page_major())
}

fn complex_pow(p: Complex64, q: Complex64) -> Complex64 {
    if q.im == 0.0 && q.re.fract() == 0.0 && q.re.abs() <= i32::MAX as f64 {
        p.powi(q.re as i32)
    } else {
        p.powc(q)
    }
}

/// Entrywise binary operation between two operands: align, apply the kernel
/// with broadcasting, then sum over identities that appeared in both variants.
pub fn ewise_binary(op: BinaryOp, a: Operand<'_>, b: Operand<'_>) -> Result<Tensor> {
    let al = alignn(&[a, b])?;
    let entries = apply_binary(op, &al.arrays[0], &al.arrays[1])?;
    let raw = Tensor::from_parts(entries, al.union.clone());
    Ok(raw.sum(&al.contract))
}

pub fn apply_unary(op: UnaryOp, e: &Entries) -> Result<Entries> {
    use UnaryOp::*;
    let out = match (op, e) {
        (Not, Entries::Bool(a)) => Entries::Bool(a.mapv(|b| !b)),
        (Not, _) => {
            return Err(RtError::ElementKind(
                "logical NOT needs boolean entries".into(),
            ))
        }
        (Conj, Entries::Complex(a)) => Entries::Complex(a.mapv(|z| z.conj())),
        (Conj | Real, Entries::Real(_)) => e.clone(),
        (Conj | Real, Entries::Bool(_)) => Entries::Real(e.to_real()?),
        (Real, Entries::Complex(a)) => Entries::Real(a.mapv(|z| z.re)),
        (Imag, Entries::Complex(a)) => Entries::Real(a.mapv(|z| z.im)),
        (Imag, _) => Entries::Real(ArrayD::zeros(IxDyn(e.shape()))),
        (Neg, Entries::Complex(a)) => Entries::Complex(a.mapv(|z| -z)),
        (Abs, Entries::Complex(a)) => Entries::Real(a.mapv(|z| z.norm())),
        (Log, Entries::Complex(a)) => Entries::Complex(a.mapv(|z| z.ln())),
        (Exp, Entries::Complex(a)) => Entries::Complex(a.mapv(|z| z.exp())),
        (Sqrt, Entries::Complex(a)) => Entries::Complex(a.mapv(|z| z.sqrt())),
        (Round(p), Entries::Complex(a)) => {
            Entries::Complex(a.mapv(|z| Complex64::new(round_to(z.re, p), round_to(z.im, p))))
        }
        (Step, Entries::Complex(_)) => {
            return Err(RtError::ElementKind(
                "step is undefined for complex entries".into(),
            ))
        }
        (op, _) => {
            let a = e.to_real()?;
            match op {
                Neg => Entries::Real(a.mapv(|x| -x)),
                Abs => Entries::Real(a.mapv(f64::abs)),
                Log => Entries::Real(a.mapv(f64::ln)),
                Exp => Entries::Real(a.mapv(f64::exp)),
                Sqrt => Entries::Real(a.mapv(f64::sqrt)),
                Round(p) => Entries::Real(a.mapv(|x| round_to(x, p))),
                Step => Entries::Bool(a.mapv(|x| x > 0.0)),
                _ => unreachable!(),
            }
        }
    };
    Ok(out.page_major())
}

fn round_to(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits);
    (x * scale).round() / scale
}

/// Entrywise unary function; indices are unchanged.
pub fn ewise_unary(op: UnaryOp, t: &Tensor) -> Result<Tensor> {
    Ok(Tensor::from_parts(apply_unary(op, t.entries())?, t.indices().to_vec()))
}

/// True when the aligned operands have identical shapes and entries and no
/// identity appears with conflicting variants. NaN never equals NaN.
pub fn equal_all(operands: &[Operand<'_>]) -> bool {
    let Ok(al) = alignn(operands) else {
        return false;
    };
    if !al.contract.is_empty() {
        return false;
    }
    let Some(first) = al.arrays.first() else {
        return true;
    };
    al.arrays.iter().skip(1).all(|other| {
        if other.shape() != first.shape() {
            return false;
        }
        match apply_binary(BinaryOp::Eq, first, other) {
            Ok(Entries::Bool(eq)) => eq.iter().all(|&b| b),
            _ => false,
        }
    })
}

impl Tensor {
    pub fn ewise(&self, op: BinaryOp, other: &Tensor) -> Result<Tensor> {
        ewise_binary(op, Operand::Tensor(self), Operand::Tensor(other))
    }

    pub fn map_unary(&self, op: UnaryOp) -> Result<Tensor> {
        ewise_unary(op, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_t(v: &[f64], i: IndexHandle) -> Tensor {
        Tensor::with_indices(Entries::from_shape_vec(&[1, 1, v.len()], v.to_vec()).unwrap(), &[i]).unwrap()
    }

    fn reals(t: &Tensor) -> Vec<f64> {
        t.entries().values().iter().map(|z| z.re).collect()
    }

    #[test]
    fn alignn_shapes() {
        let (i, j) = (IndexHandle::fresh(), IndexHandle::fresh());
        let c = vec_t(&[1., 2.], j);
        let x = vec_t(&[10., 20., 30.], i);
        let al = alignn(&[(&c).into(), (&x).into()]).unwrap();
        assert_eq!(al.union, vec![j, i]);
        assert_eq!(al.arrays[0].shape(), &[1, 1, 2, 1]);
        assert_eq!(al.arrays[1].shape(), &[1, 1, 1, 3]);
        assert!(al.contract.is_empty());
    }

    #[test]
    fn alignn_contract_set_and_leftmost_variant() {
        let k = IndexHandle::fresh();
        let x = vec_t(&[1., 2.], k);
        let y = vec_t(&[3., 4.], !k);
        let al = alignn(&[(&x).into(), (&y).into()]).unwrap();
        assert_eq!(al.union, vec![k]);
        assert_eq!(al.contract, vec![k]);
        let al = alignn(&[(&y).into(), (&x).into()]).unwrap();
        assert_eq!(al.union, vec![!k]);
    }

    #[test]
    fn alignn_rejects_nd_plain_and_size_conflicts() {
        let k = IndexHandle::fresh();
        let x = vec_t(&[1., 2.], k);
        let y = vec_t(&[1., 2., 3.], k);
        assert!(matches!(alignn(&[(&x).into(), (&y).into()]), Err(RtError::DimMismatch(_))));
        let plain = Entries::zeros(&[2, 2, 2]);
        assert!(matches!(
            alignn(&[(&x).into(), Operand::Plain(&plain)]),
            Err(RtError::OperandKind(_))
        ));
    }

    #[test]
    fn outer_addition_table() {
        let (i, j) = (IndexHandle::fresh(), IndexHandle::fresh());
        let c = vec_t(&[1., 2.], j);
        let x = vec_t(&[10., 20., 30.], i);
        let y = c.ewise(BinaryOp::Add, &x).unwrap();
        assert_eq!(y.indices(), &[j, i]);
        assert_eq!(y.tensor_dims(), &[2, 3]);
        assert_eq!(reals(&y), vec![11., 21., 31., 12., 22., 32.]);
    }

    #[test]
    fn mixed_variants_contract_after_kernel() {
        let k = IndexHandle::fresh();
        let x = vec_t(&[1., 2., 3.], k);
        let y = vec_t(&[4., 5., 6.], !k);
        assert_eq!(x.ewise(BinaryOp::Mul, &y).unwrap().value().unwrap().re, 32.0);
        // Addition also sums afterwards.
        assert_eq!(x.ewise(BinaryOp::Add, &y).unwrap().value().unwrap().re, 21.0);
    }

    #[test]
    fn relations_are_boolean() {
        let k = IndexHandle::fresh();
        let x = vec_t(&[1., f64::NAN, 3.], k);
        let y = vec_t(&[2., 2., 2.], k);
        let r = x.ewise(BinaryOp::Lt, &y).unwrap();
        assert_eq!(r.entries().kind(), ElementKind::Bool);
        assert_eq!(reals(&r), vec![1., 0., 0.]);
        let z = Tensor::complex_scalar(Complex64::new(0.0, 1.0));
        assert!(matches!(z.ewise(BinaryOp::Lt, &z), Err(RtError::ElementKind(_))));
        assert_eq!(z.ewise(BinaryOp::Eq, &z).unwrap().value().unwrap().re, 1.0);
    }

    #[test]
    fn division_by_zero_is_ieee() {
        let a = Tensor::scalar(1.0);
        let b = Tensor::scalar(0.0);
        assert!(a.ewise(BinaryOp::Div, &b).unwrap().value().unwrap().re.is_infinite());
        assert!(b.ewise(BinaryOp::Div, &b).unwrap().value().unwrap().re.is_nan());
    }

    #[test]
    fn unary_functions() {
        let k = IndexHandle::fresh();
        let x = vec_t(&[-1.0, 0.0, 2.0], k);
        assert_eq!(x.map_unary(UnaryOp::Conj).unwrap(), x);
        let s = x.map_unary(UnaryOp::Neg).unwrap().map_unary(UnaryOp::Step).unwrap();
        assert_eq!(reals(&s), vec![1., 0., 0.]);
        let r = Tensor::scalar(3.14159).map_unary(UnaryOp::Round(2)).unwrap();
        assert_eq!(r.value().unwrap().re, 3.14);
        assert!(matches!(x.map_unary(UnaryOp::Not), Err(RtError::ElementKind(_))));
        assert_eq!(x.indices(), x.map_unary(UnaryOp::Abs).unwrap().indices());
    }

    #[test]
    fn equal_all_variant_rule() {
        let (i, j, k) = (IndexHandle::fresh(), IndexHandle::fresh(), IndexHandle::fresh());
        let x = vec_t(&[1., 2.], k);
        assert!(equal_all(&[(&x).into(), (&x).into()]));
        let xf = x.complement_indices();
        assert!(!equal_all(&[(&x).into(), (&xf).into()]));
        let a = Tensor::with_indices(
            Entries::from_shape_vec(&[1, 1, 2, 3], (0..6).map(f64::from).collect()).unwrap(),
            &[i, j],
        )
        .unwrap();
        let round_trip = a.permute(&[j, i]).unwrap().permute(&[i, j]).unwrap();
        assert!(equal_all(&[(&a).into(), (&round_trip).into()]));
        // Aligned comparison ignores index order.
        assert!(equal_all(&[(&a).into(), (&a.permute(&[j, i]).unwrap()).into()]));
        let nan = Tensor::scalar(f64::NAN);
        assert!(!equal_all(&[(&nan).into(), (&nan).into()]));
    }
}
