//! Binary products and divisions through lattices.
//!
//! Matched indices are classified per operand pair: complementary variants
//! give an inner product, equal variants an entrywise (page) pairing, and
//! unmatched indices an outer product. Each operand is permuted and reshaped
//! into a `pages x rows x cols` lattice so the whole operation becomes one
//! batched matrix multiply or solve.

use ndarray::{ArrayD, ArrayView3, ArrayViewD, CowArray, Ix3, IxDyn};
use num_complex::Complex64;

use crate::array::{arithmetic_kind, ElementKind, Entries};
use crate::error::{Result, RtError};
use crate::index::{position_of, IndexHandle};
use crate::linalg::{pagemtimes, pagesolve, Scalar};
use crate::tensor::Tensor;

/// Classification of the indices of two operands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan2 {
    /// Matched with complementary variants (left operand's variant).
    pub inner: Vec<IndexHandle>,
    /// Matched with equal variants.
    pub pages: Vec<IndexHandle>,
    pub left_outer: Vec<IndexHandle>,
    pub right_outer: Vec<IndexHandle>,
}

impl Plan2 {
    /// Classify by identity and variant only.
    pub fn classify(a: &[IndexHandle], b: &[IndexHandle]) -> Plan2 {
        let mut plan = Plan2 {
            inner: Vec::new(),
            pages: Vec::new(),
            left_outer: Vec::new(),
            right_outer: Vec::new(),
        };
        for &h in a {
            match position_of(b, h) {
                Some(p) if b[p].variant() == h.variant() => plan.pages.push(h),
                Some(_) => plan.inner.push(h),
                None => plan.left_outer.push(h),
            }
        }
        plan.right_outer = b
            .iter()
            .copied()
            .filter(|h| position_of(a, *h).is_none())
            .collect();
        plan
    }

    /// Indices of a product result: left outer, right outer, then pages.
    pub fn result_indices(&self) -> Vec<IndexHandle> {
        let mut v = self.left_outer.clone();
        v.extend(&self.right_outer);
        v.extend(&self.pages);
        v
    }
}

/// Classify the indices of `a` and `b` and check matched sizes.
pub fn align2(a: &Tensor, b: &Tensor) -> Result<Plan2> {
    let plan = Plan2::classify(a.indices(), b.indices());
    for &h in plan.inner.iter().chain(&plan.pages) {
        let (da, db) = (a.dim_of(h), b.dim_of(h));
        if da != db {
            return Err(RtError::DimMismatch(format!(
                "index {h} has size {da} on the left and {db} on the right"
            )));
        }
    }
    Ok(plan)
}

/// What a lattice axis becomes in the result.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Rows,
    Cols,
    Index(IndexHandle),
    /// Size-one axis with no place in the result.
    Unit,
}

type Group = Vec<(usize, Slot)>;

/// One lattice: source axes for pages, rows and cols.
#[derive(Clone, Debug)]
struct Layout {
    pages: Vec<usize>,
    rows: Group,
    cols: Group,
}

impl Layout {
    fn perm(&self) -> Vec<usize> {
        self.pages
            .iter()
            .copied()
            .chain(self.rows.iter().map(|g| g.0))
            .chain(self.cols.iter().map(|g| g.0))
            .collect()
    }

    fn dims(&self, shape: &[usize]) -> (usize, usize, usize) {
        let p = self.pages.iter().map(|&k| shape[k]).product();
        let r = self.rows.iter().map(|g| shape[g.0]).product();
        let c = self.cols.iter().map(|g| shape[g.0]).product();
        (p, r, c)
    }
}

fn axis(t: &Tensor, h: IndexHandle) -> usize {
    2 + position_of(t.indices(), h).expect("index belongs to operand")
}

fn group(t: &Tensor, lead: &[(usize, Slot)], ids: &[IndexHandle]) -> Group {
    let mut g = lead.to_vec();
    g.extend(ids.iter().map(|&h| (axis(t, h), Slot::Index(h))));
    g
}

/// Permute-and-reshape into a `(pages, rows, cols)` lattice, borrowing when
/// the permuted axes are already contiguous.
fn lattice<'a, T: Clone>(a: ArrayViewD<'a, T>, lay: &Layout) -> CowArray<'a, T, Ix3> {
    let dims = lay.dims(a.shape());
    let v = a.permuted_axes(lay.perm());
    if v.is_standard_layout() {
        CowArray::from(v.into_shape_with_order(dims).expect("contiguous"))
    } else {
        CowArray::from(
            v.as_standard_layout()
                .into_owned()
                .into_shape_with_order(dims)
                .expect("contiguous"),
        )
    }
}

#[derive(Clone, Copy)]
enum Kernel {
    Multiply,
    Solve,
}

struct Job {
    a: Layout,
    b: Layout,
    page_ids: Vec<IndexHandle>,
    /// Result rows and cols groups, sized from the given operand.
    out_rows: (Group, bool),
    out_cols: (Group, bool),
    indices: Vec<IndexHandle>,
    kernel: Kernel,
}

trait Element: Scalar {
    fn cow(e: &Entries) -> CowArray<'_, Self, IxDyn>;
}

impl Element for f64 {
    fn cow(e: &Entries) -> CowArray<'_, f64, IxDyn> {
        match e {
            Entries::Real(a) => CowArray::from(a.view()),
            other => CowArray::from(other.to_real().expect("real operand")),
        }
    }
}

impl Element for Complex64 {
    fn cow(e: &Entries) -> CowArray<'_, Complex64, IxDyn> {
        match e {
            Entries::Complex(a) => CowArray::from(a.view()),
            other => CowArray::from(other.to_complex()),
        }
    }
}

fn execute(a: &Tensor, b: &Tensor, job: Job) -> Result<Tensor> {
    let kind = arithmetic_kind([a.entries().kind(), b.entries().kind()]);
    let entries = if kind == ElementKind::Complex {
        Complex64::wrap(run::<Complex64>(a, b, &job)?)
    } else {
        f64::wrap(run::<f64>(a, b, &job)?)
    };
    Ok(Tensor::from_parts(entries, job.indices))
}

fn run<T: Element>(a: &Tensor, b: &Tensor, job: &Job) -> Result<ArrayD<T>> {
    let (ea, eb) = (T::cow(a.entries()), T::cow(b.entries()));
    let la = lattice(ea.view(), &job.a);
    let lb = lattice(eb.view(), &job.b);
    let c = match job.kernel {
        Kernel::Multiply => pagemtimes(la.view(), lb.view())?,
        Kernel::Solve => pagesolve(la.view(), lb.view())?,
    };
    Ok(unlattice(c, a, b, job))
}

/// Reshape a result lattice back into tensor entries with logical axes
/// `[rows, cols, indices...]`.
fn unlattice<T: Clone>(c: ndarray::Array3<T>, a: &Tensor, b: &Tensor, job: &Job) -> ArrayD<T> {
    let mut slots: Vec<Slot> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    for &h in &job.page_ids {
        slots.push(Slot::Index(h));
        sizes.push(a.dim_of(h));
    }
    for (g, from_a) in [&job.out_rows, &job.out_cols] {
        let src = if *from_a { a } else { b };
        for &(ax, slot) in g {
            if slot != Slot::Unit {
                slots.push(slot);
                sizes.push(src.shape()[ax]);
            }
        }
    }
    let shaped = c
        .into_shape_with_order(IxDyn(&sizes))
        .expect("lattice sizes agree");
    let target = [Slot::Rows, Slot::Cols]
        .into_iter()
        .chain(job.indices.iter().map(|&h| Slot::Index(h)));
    let perm: Vec<usize> = target
        .map(|s| slots.iter().position(|x| *x == s).expect("slot present"))
        .collect();
    shaped.permuted_axes(perm)
}

fn page_axes(t: &Tensor, ids: &[IndexHandle]) -> Vec<usize> {
    ids.iter().map(|&h| axis(t, h)).collect()
}

/// Product of two tensors: inner products over complementary pairs,
/// entrywise products over equal pairs, outer products otherwise, combined
/// with the ordinary matrix product of rows and columns.
pub fn product(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    use Slot::*;
    let plan = align2(a, b)?;
    let a_scalar = a.rows() == 1 && a.cols() == 1;
    let b_scalar = b.rows() == 1 && b.cols() == 1;
    let (a_lead_r, a_lead_c, b_lead_r, b_lead_c): (Group, Group, Group, Group) =
        if a_scalar && !b_scalar {
            (vec![(0, Unit), (1, Unit)], vec![], vec![], vec![(0, Rows), (1, Cols)])
        } else if b_scalar && !a_scalar {
            (vec![(0, Rows), (1, Cols)], vec![], vec![], vec![(0, Unit), (1, Unit)])
        } else {
            if a.cols() != b.rows() {
                return Err(RtError::DimMismatch(format!(
                    "inner matrix dimensions disagree: {}x{} times {}x{}",
                    a.rows(),
                    a.cols(),
                    b.rows(),
                    b.cols()
                )));
            }
            (vec![(0, Rows)], vec![(1, Unit)], vec![(0, Unit)], vec![(1, Cols)])
        };
    let a_rows = group(a, &a_lead_r, &plan.left_outer);
    let b_cols = group(b, &b_lead_c, &plan.right_outer);
    let job = Job {
        a: Layout {
            pages: page_axes(a, &plan.pages),
            rows: a_rows.clone(),
            cols: group(a, &a_lead_c, &plan.inner),
        },
        b: Layout {
            pages: page_axes(b, &plan.pages),
            rows: group(b, &b_lead_r, &plan.inner),
            cols: b_cols.clone(),
        },
        page_ids: plan.pages.clone(),
        out_rows: (a_rows, true),
        out_cols: (b_cols, false),
        indices: plan.result_indices(),
        kernel: Kernel::Multiply,
    };
    execute(a, b, job)
}

/// Left division `a \ b`: the tensor `u` with `a * u` reproducing `b`.
///
/// Every index of `a` is complemented before classification, so an index
/// carried by both operands with the same variant is a system row, and an
/// index of `a` left over becomes a complemented index of the result. Page
/// pairing therefore needs complementary variants in the written operands.
pub fn solve_left(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    use Slot::*;
    let ac = a.complement_indices();
    let plan = align2(&ac, b)?;
    let a_scalar = a.rows() == 1 && a.cols() == 1;
    let (a_lead_c, b_lead_r, b_lead_c): (Group, Group, Group) = if a_scalar {
        (vec![(1, Unit)], vec![], vec![(0, Rows), (1, Cols)])
    } else {
        if a.rows() != b.rows() {
            return Err(RtError::DimMismatch(format!(
                "left division needs equal row counts, got {} and {}",
                a.rows(),
                b.rows()
            )));
        }
        (vec![(1, Rows)], vec![(0, Unit)], vec![(1, Cols)])
    };
    let a_cols = group(&ac, &a_lead_c, &plan.left_outer);
    let b_cols = group(b, &b_lead_c, &plan.right_outer);
    let job = Job {
        a: Layout {
            pages: page_axes(&ac, &plan.pages),
            rows: group(&ac, &[(0, Unit)], &plan.inner),
            cols: a_cols.clone(),
        },
        b: Layout {
            pages: page_axes(b, &plan.pages),
            rows: group(b, &b_lead_r, &plan.inner),
            cols: b_cols.clone(),
        },
        page_ids: plan.pages.clone(),
        out_rows: (a_cols, true),
        out_cols: (b_cols, false),
        indices: plan.result_indices(),
        kernel: Kernel::Solve,
    };
    execute(&ac, b, job)
}

/// Right division `b / a`: the tensor `x` with `x * a` reproducing `b`.
/// Solved page by page as the transposed left division.
pub fn solve_right(b: &Tensor, a: &Tensor) -> Result<Tensor> {
    use Slot::*;
    let ac = a.complement_indices();
    let plan = align2(b, &ac)?;
    let a_scalar = a.rows() == 1 && a.cols() == 1;
    let (a_lead_c, b_lead_r, b_lead_c): (Group, Group, Group) = if a_scalar {
        (vec![(0, Unit)], vec![], vec![(0, Rows), (1, Cols)])
    } else {
        if a.cols() != b.cols() {
            return Err(RtError::DimMismatch(format!(
                "right division needs equal column counts, got {} and {}",
                b.cols(),
                a.cols()
            )));
        }
        (vec![(0, Cols)], vec![(1, Unit)], vec![(0, Rows)])
    };
    // Transposed system: rows of the lattices run over columns and inner ids.
    let at_cols = group(&ac, &a_lead_c, &plan.right_outer);
    let bt_cols = group(b, &b_lead_c, &plan.left_outer);
    let job = Job {
        a: Layout {
            pages: page_axes(&ac, &plan.pages),
            rows: group(&ac, &[(1, Unit)], &plan.inner),
            cols: at_cols.clone(),
        },
        b: Layout {
            pages: page_axes(b, &plan.pages),
            rows: group(b, &b_lead_r, &plan.inner),
            cols: bt_cols.clone(),
        },
        page_ids: plan.pages.clone(),
        out_rows: (at_cols, true),
        out_cols: (bt_cols, false),
        indices: plan.result_indices(),
        kernel: Kernel::Solve,
    };
    execute(&ac, b, job)
}

/// Entries reshaped into a `(rows, cols, pages)` lattice for one side of a
/// product plan: the left operand keeps outer ids with its rows and inner
/// ids with its columns; the right operand the other way round.
pub fn to_lattice(t: &Tensor, plan: &Plan2, left: bool) -> Entries {
    use Slot::*;
    let lay = if left {
        Layout {
            pages: page_axes(t, &plan.pages),
            rows: group(t, &[(0, Rows)], &plan.left_outer),
            cols: group(t, &[(1, Cols)], &plan.inner),
        }
    } else {
        Layout {
            pages: page_axes(t, &plan.pages),
            rows: group(t, &[(0, Rows)], &plan.inner),
            cols: group(t, &[(1, Cols)], &plan.right_outer),
        }
    };
    fn go<T: Element>(t: &Tensor, lay: &Layout) -> ArrayD<T> {
        let e = T::cow(t.entries());
        lattice(e.view(), lay)
            .permuted_axes([1, 2, 0])
            .to_owned()
            .into_dyn()
    }
    let e = if t.entries().kind() == ElementKind::Complex {
        Entries::Complex(go::<Complex64>(t, &lay))
    } else {
        Entries::Real(go::<f64>(t, &lay))
    };
    e.page_major()
}

/// Inverse of [`to_lattice`] given the tensor the lattice was made from.
pub fn from_lattice(l: &Entries, like: &Tensor, plan: &Plan2, left: bool) -> Result<Tensor> {
    let (row_ids, col_ids) = if left {
        (&plan.left_outer, &plan.inner)
    } else {
        (&plan.inner, &plan.right_outer)
    };
    let mut order: Vec<IndexHandle> = Vec::new();
    let mut shape = vec![like.rows()];
    for &h in row_ids {
        order.push(h);
        shape.push(like.dim_of(h));
    }
    shape.push(like.cols());
    for &h in col_ids {
        order.push(h);
        shape.push(like.dim_of(h));
    }
    for &h in &plan.pages {
        order.push(h);
        shape.push(like.dim_of(h));
    }
    let nr = row_ids.len();
    // Physical order is [pages, rows, row ids, cols, col ids].
    let np = plan.pages.len();
    let mut phys = shape[shape.len() - np..].to_vec();
    phys.extend_from_slice(&shape[..shape.len() - np]);
    let rows_pos = np;
    let cols_pos = np + 1 + nr;
    let mut perm = vec![rows_pos, cols_pos];
    let mut order_pos = Vec::new();
    for k in 0..nr {
        order_pos.push(np + 1 + k);
    }
    for k in 0..col_ids.len() {
        order_pos.push(cols_pos + 1 + k);
    }
    order_pos.extend(0..np);
    let wanted: Vec<IndexHandle> = like.indices().to_vec();
    for h in &wanted {
        let k = order.iter().position(|x| x.same_id(*h)).ok_or_else(|| {
            RtError::UnknownIndex(format!("{h} is not covered by the plan"))
        })?;
        perm.push(order_pos[k]);
    }
    macro_rules! back {
        ($a:expr) => {{
            let v: ArrayView3<'_, _> = $a
                .view()
                .into_dimensionality::<Ix3>()
                .map_err(|e| RtError::DimMismatch(e.to_string()))?;
            let std = v.permuted_axes([2, 0, 1]).as_standard_layout().into_owned();
            std.into_shape_with_order(IxDyn(&phys))
                .map_err(|e| RtError::DimMismatch(e.to_string()))?
                .permuted_axes(perm.clone())
        }};
    }
    let entries = match l {
        Entries::Real(a) => Entries::Real(back!(a)),
        Entries::Complex(a) => Entries::Complex(back!(a)),
        Entries::Bool(a) => Entries::Bool(back!(a)),
    };
    Ok(Tensor::from_parts(entries, wanted))
}

impl Tensor {
    /// `self * other`.
    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        product(self, other)
    }

    /// `self \ other`.
    pub fn left_div(&self, other: &Tensor) -> Result<Tensor> {
        solve_left(self, other)
    }

    /// `self / other`.
    pub fn right_div(&self, other: &Tensor) -> Result<Tensor> {
        solve_right(self, other)
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
    fn classification() {
        let [i, r, t] = [IndexHandle::fresh(), IndexHandle::fresh(), IndexHandle::fresh()];
        let p = Plan2::classify(&[i, !r], &[r, t, i]);
        assert_eq!(p.inner, vec![!r]);
        assert_eq!(p.pages, vec![i]);
        assert!(p.left_outer.is_empty());
        assert_eq!(p.right_outer, vec![t]);
        let j = IndexHandle::fresh();
        let p = Plan2::classify(&[i], &[j]);
        assert_eq!((p.left_outer.clone(), p.right_outer.clone()), (vec![i], vec![j]));
        let p = Plan2::classify(&[i], &[i]);
        assert_eq!(p.pages, vec![i]);
        assert!(p.inner.is_empty());
    }

    #[test]
    fn ternary_inner_product() {
        let i = IndexHandle::fresh();
        let a = vec_t(&[1., 2.], i);
        let b = vec_t(&[3., 4.], i);
        let c = vec_t(&[5., 6.], !i);
        let x = a.mul(&b).unwrap().mul(&c).unwrap();
        assert_eq!(x.degree(), 0);
        assert_eq!(x.value().unwrap().re, 63.0);
    }

    #[test]
    fn outer_product_table() {
        let (i, j) = (IndexHandle::fresh(), IndexHandle::fresh());
        let z = vec_t(&[1., 2.], i).mul(&vec_t(&[3., 4., 5.], j)).unwrap();
        assert_eq!(z.indices(), &[i, j]);
        assert_eq!(reals(&z), vec![3., 4., 5., 6., 8., 10.]);
    }

    #[test]
    fn pagewise_matrix_product() {
        let k = IndexHandle::fresh();
        let a = Entries::from_shape_vec(&[2, 3, 4], (0..24).map(f64::from).collect()).unwrap();
        let b = Entries::from_shape_vec(&[3, 2, 4], (0..24).map(|x| (x % 5) as f64).collect()).unwrap();
        let ta = Tensor::with_indices(a.clone(), &[k]).unwrap();
        let tb = Tensor::with_indices(b.clone(), &[k]).unwrap();
        let c = ta.mul(&tb).unwrap();
        assert_eq!(c.shape(), &[2, 2, 4]);
        for p in 0..4 {
            for r in 0..2 {
                for s in 0..2 {
                    let want: f64 = (0..3)
                        .map(|q| a.get(&[r, q, p]).unwrap().re * b.get(&[q, s, p]).unwrap().re)
                        .sum();
                    assert_eq!(c.entries().get(&[r, s, p]).unwrap().re, want);
                }
            }
        }
    }

    #[test]
    fn diagonal_system() {
        let (l, lp) = (IndexHandle::fresh(), IndexHandle::fresh());
        let a = Tensor::with_indices(
            Entries::from_shape_vec(&[1, 1, 2, 2], vec![2., 0., 0., 4.]).unwrap(),
            &[l, lp],
        )
        .unwrap();
        let b = vec_t(&[6., 8.], lp);
        let u = a.left_div(&b).unwrap();
        assert_eq!(u.indices(), &[!l]);
        assert_eq!(reals(&u), vec![3., 2.]);
        let back = a.mul(&u).unwrap();
        assert!(crate::ewise::equal_all(&[(&back).into(), (&b).into()]));
    }

    #[test]
    fn right_division_reconstructs() {
        let (i, l, lp) = (IndexHandle::fresh(), IndexHandle::fresh(), IndexHandle::fresh());
        let a = Tensor::with_indices(
            Entries::from_shape_vec(&[1, 1, 3, 3], vec![4., 1., 0., 1., 3., 1., 0., 1., 2.]).unwrap(),
            &[l, lp],
        )
        .unwrap();
        let b = Tensor::with_indices(
            Entries::from_shape_vec(&[1, 1, 2, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap(),
            &[i, lp],
        )
        .unwrap();
        let x = b.right_div(&a).unwrap();
        assert_eq!(x.indices(), &[i, !l]);
        let back = x.mul(&a).unwrap().permute(&[i, lp]).unwrap();
        let err = back
            .entries()
            .values()
            .iter()
            .zip(b.entries().values())
            .fold(0.0f64, |m, (p, q)| m.max((p - q).norm()));
        assert!(err < 1e-12);
    }

    #[test]
    fn matrix_division_pages() {
        let k = IndexHandle::fresh();
        let a = Entries::from_shape_vec(&[2, 2, 2], vec![2., 1., 1., 3., 1., 1., 0., 2.])
            .unwrap();
        let c = Entries::from_shape_vec(&[2, 1, 2], vec![1., 2., 3., 4.]).unwrap();
        let ta = Tensor::with_indices(a, &[!k]).unwrap();
        let tc = Tensor::with_indices(c.clone(), &[k]).unwrap();
        let x = ta.left_div(&tc).unwrap();
        assert_eq!(x.indices(), &[k]);
        let back = ta.complement_indices().mul(&x).unwrap();
        for (p, q) in back.entries().values().iter().zip(tc.entries().values()) {
            assert!((p - q).norm() < 1e-14);
        }
    }

    #[test]
    fn lattice_round_trip() {
        let [i, j, k, m] = [0; 4].map(|_| IndexHandle::fresh());
        let a = Tensor::with_indices(
            Entries::from_shape_vec(&[2, 3, 2, 3, 4], (0..144).map(f64::from).collect()).unwrap(),
            &[i, !j, k],
        )
        .unwrap();
        let b = Tensor::with_indices(Entries::from_shape_vec(&[3, 1, 3, 4, 5], (0..180).map(f64::from).collect()).unwrap(), &[j, k, m]).unwrap();
        let plan = align2(&a, &b).unwrap();
        let l = to_lattice(&a, &plan, true);
        assert_eq!(l.shape(), &[4, 9, 4]);
        assert_eq!(from_lattice(&l, &a, &plan, true).unwrap(), a);
        let l = to_lattice(&b, &plan, false);
        assert_eq!(l.shape(), &[9, 5, 4]);
        assert_eq!(from_lattice(&l, &b, &plan, false).unwrap(), b);
    }

    #[test]
    fn conformance_and_size_errors() {
        let a = Tensor::matrix(Entries::zeros(&[2, 3])).unwrap();
        assert!(matches!(a.mul(&a), Err(RtError::DimMismatch(_))));
        let k = IndexHandle::fresh();
        assert!(matches!(
            vec_t(&[1., 2.], k).mul(&vec_t(&[1., 2., 3.], !k)),
            Err(RtError::DimMismatch(_))
        ));
        let s = Tensor::matrix(Entries::zeros(&[2, 2])).unwrap();
        assert_eq!(s.left_div(&Tensor::matrix(Entries::ones(&[2, 1])).unwrap()), Err(RtError::SingularPage { page: 0 }));
    }
}
