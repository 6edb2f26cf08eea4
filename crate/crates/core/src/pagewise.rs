//! Kernels that act on every rows x cols page: transposes, trace, diagonal,
//! and concatenation along rows, columns or a tensor index.

use ndarray::{concatenate, ArrayD, Axis, Dimension, IxDyn};
use num_complex::Complex64;

use crate::array::{common_kind, map_entries, ElementKind, Entries};
use crate::error::{Result, RtError};
use crate::ewise::align_except;
use crate::index::{position_of, IndexHandle};
use crate::tensor::{Operand, Tensor};

fn swap_pages(e: &Entries) -> Entries {
    let n = e.ndim();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.swap(0, 1);
    e.permuted(&perm)
}

/// Swap rows and columns of every page and complement every index.
pub fn page_transpose(t: &Tensor) -> Tensor {
    Tensor::from_parts(swap_pages(t.entries()), crate::index::complement_all(t.indices()))
}

/// Conjugate transpose: [`page_transpose`] plus conjugated entries.
pub fn page_ctranspose(t: &Tensor) -> Tensor {
    let swapped = swap_pages(t.entries());
    let entries = match swapped {
        Entries::Complex(a) => Entries::Complex(a.mapv(|z| z.conj())),
        other => other,
    };
    Tensor::from_parts(entries, crate::index::complement_all(t.indices()))
}

/// Trace of every page, giving 1x1 pages.
pub fn page_trace(t: &Tensor) -> Result<Tensor> {
    if t.rows() != t.cols() {
        return Err(RtError::DimMismatch(format!(
            "trace needs square pages, got {}x{}",
            t.rows(),
            t.cols()
        )));
    }
    let d = page_diag(t);
    let entries = match d.entries() {
        Entries::Complex(a) => Entries::Complex(a.sum_axis(Axis(0)).insert_axis(Axis(0))),
        other => Entries::Real(other.to_real()?.sum_axis(Axis(0)).insert_axis(Axis(0))),
    };
    Ok(Tensor::from_parts(entries, t.indices().to_vec()))
}

/// Main diagonal of every page as a column.
pub fn page_diag(t: &Tensor) -> Tensor {
    let n = t.rows().min(t.cols());
    let entries = map_entries!(t.entries(), a => {
        let mut shape = a.shape().to_vec();
        shape[0] = n;
        shape[1] = 1;
        ArrayD::from_shape_fn(IxDyn(&shape), |ix| {
            let mut src = ix.slice().to_vec();
            src[1] = src[0];
            a[IxDyn(&src)].clone()
        })
    });
    Tensor::from_parts(entries, t.indices().to_vec())
}

/// Array axis to concatenate along; `Dim` counts from zero, so `Dim(2)` is
/// the first axis after rows and columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatAxis {
    Rows,
    Cols,
    Dim(usize),
}

impl CatAxis {
    fn axis(self) -> usize {
        match self {
            CatAxis::Rows => 0,
            CatAxis::Cols => 1,
            CatAxis::Dim(d) => d,
        }
    }
}

/// Concatenate arrays along `axis`. Size-one axes in the third or higher
/// position are replicated to match the other operands; rows and columns
/// off the concatenation axis must agree exactly.
pub fn page_cat(axis: CatAxis, arrays: &[Entries]) -> Result<Entries> {
    let Some(first) = arrays.first() else {
        return Err(RtError::OperandKind("nothing to concatenate".into()));
    };
    let cat = axis.axis();
    let ndim = arrays.iter().map(|a| a.ndim()).max().unwrap_or(2).max(cat + 1);
    let padded: Vec<Entries> = arrays.iter().map(|a| a.clone().with_ndim(ndim)).collect();
    let mut target = first.clone().with_ndim(ndim).shape().to_vec();
    for a in &padded[1..] {
        for (d, (&s, t)) in a.shape().iter().zip(target.iter_mut()).enumerate() {
            if d == cat || s == *t {
                continue;
            }
            if d >= 2 && (s == 1 || *t == 1) {
                *t = (*t).max(s);
            } else {
                return Err(RtError::DimMismatch(format!(
                    "cannot concatenate along axis {cat}: axis {d} has sizes {t} and {s}"
                )));
            }
        }
    }
    let kind = common_kind(padded.iter().map(|a| a.kind()));
    let mut parts = Vec::with_capacity(padded.len());
    for a in &padded {
        let mut shape = target.clone();
        shape[cat] = a.shape()[cat];
        parts.push(map_entries!(a.promote(kind)?, x => {
            x.broadcast(IxDyn(&shape)).expect("checked above").to_owned()
        }));
    }
    macro_rules! join {
        ($variant:ident) => {{
            let views: Vec<_> = parts
                .iter()
                .map(|p| match p {
                    Entries::$variant(x) => x.view(),
                    _ => unreachable!(),
                })
                .collect();
            Entries::$variant(concatenate(Axis(cat), &views).expect("shapes agree"))
        }};
    }
    let out = match kind {
        ElementKind::Real => join!(Real),
        ElementKind::Complex => join!(Complex),
        ElementKind::Bool => join!(Bool),
    };
    Ok(out.page_major())
}

/// Where an N-ary [`concat`] joins its operands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatWhere {
    Rows,
    Cols,
    Index(IndexHandle),
}

/// Concatenate tensors after aligning them on the union of their indices.
/// Missing indices are filled by replication (an implied outer product with
/// ones). Along an index, the result size is the sum of operand sizes.
pub fn concat(at: CatWhere, operands: &[Operand<'_>]) -> Result<Tensor> {
    let except = match at {
        CatWhere::Index(h) => {
            for op in operands {
                let has = matches!(op, Operand::Tensor(t) if position_of(t.indices(), h).is_some());
                if !has {
                    return Err(RtError::UnknownIndex(format!(
                        "concatenation index {h} is missing from an operand"
                    )));
                }
            }
            Some(h)
        }
        _ => None,
    };
    let al = align_except(operands, except)?;
    let axis = match at {
        CatWhere::Rows => CatAxis::Rows,
        CatWhere::Cols => CatAxis::Cols,
        CatWhere::Index(h) => CatAxis::Dim(2 + position_of(&al.union, h).expect("in union")),
    };
    let joined = page_cat(axis, &al.arrays)?;
    let contract: Vec<IndexHandle> = al
        .contract
        .iter()
        .copied()
        .filter(|c| !except.is_some_and(|h| h.same_id(*c)))
        .collect();
    Ok(Tensor::from_parts(joined, al.union).sum(&contract))
}

/// Squared Euclidean norm of all entries.
pub fn norm_sq(t: &Tensor) -> f64 {
    t.entries().values().iter().map(Complex64::norm_sqr).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reals(e: &Entries) -> Vec<f64> {
        e.values().iter().map(|z| z.re).collect()
    }

    #[test]
    fn transpose_is_an_involution() {
        let k = IndexHandle::fresh();
        let t = Tensor::with_indices(
            Entries::from_shape_vec(&[2, 3, 2], (0..12).map(f64::from).collect()).unwrap(),
            &[!k],
        )
        .unwrap();
        let tt = page_transpose(&t);
        assert_eq!(tt.indices(), &[k]);
        assert_eq!(tt.shape(), &[3, 2, 2]);
        assert_eq!(tt.entries().get(&[2, 1, 1]), t.entries().get(&[1, 2, 1]));
        assert_eq!(page_transpose(&tt), t);
        assert_eq!(page_ctranspose(&t), tt);
    }

    #[test]
    fn ctranspose_conjugates() {
        let z = Complex64::new(1.0, 2.0);
        let t = Tensor::complex_scalar(z);
        assert_eq!(page_ctranspose(&t).value().unwrap(), z.conj());
        let back = page_ctranspose(&page_ctranspose(&t));
        assert_eq!(back, t);
    }

    #[test]
    fn trace_and_diag() {
        let k = IndexHandle::fresh();
        let mut data = vec![0.0; 3 * 3 * 2];
        for p in 0..2 {
            for i in 0..3 {
                data[i * 3 * 2 + i * 2 + p] = (p * 3 + i + 1) as f64;
            }
        }
        let t = Tensor::with_indices(Entries::from_shape_vec(&[3, 3, 2], data).unwrap(), &[k]).unwrap();
        let tr = page_trace(&t).unwrap();
        assert_eq!(tr.shape(), &[1, 1, 2]);
        assert_eq!(reals(tr.entries()), vec![6.0, 15.0]);
        let d = page_diag(&t);
        assert_eq!(d.shape(), &[3, 1, 2]);
        assert_eq!(reals(d.entries()), vec![1., 4., 2., 5., 3., 6.]);
        let wide = Tensor::matrix(Entries::zeros(&[2, 3])).unwrap();
        assert!(page_trace(&wide).is_err());
        assert_eq!(page_diag(&wide).shape(), &[2, 1]);
    }

    #[test]
    fn page_cat_replicates_singletons() {
        let a = Entries::ones(&[2, 2, 1]);
        let b = Entries::zeros(&[2, 2, 3]);
        assert_eq!(page_cat(CatAxis::Dim(2), &[a.clone(), b.clone()]).unwrap().shape(), &[2, 2, 4]);
        assert_eq!(page_cat(CatAxis::Cols, &[a.clone(), b.clone()]).unwrap().shape(), &[2, 4, 3]);
        let c = Entries::zeros(&[3, 2]);
        assert!(matches!(page_cat(CatAxis::Cols, &[a, c]), Err(RtError::DimMismatch(_))));
    }

    #[test]
    fn cols_cat_with_ones_column() {
        let c = Entries::from_shape_vec(&[3, 1], vec![-1., 2., -3.]).unwrap();
        let m = page_cat(CatAxis::Cols, &[Entries::ones(&[3, 1]), c]).unwrap();
        assert_eq!(reals(&m), vec![1., -1., 1., 2., 1., -3.]);
    }

    #[test]
    fn concat_along_index() {
        let (i, j, k) = (IndexHandle::fresh(), IndexHandle::fresh(), IndexHandle::fresh());
        let a = Tensor::with_indices(Entries::from_shape_vec(&[1, 1, 2, 3], (1..=6).map(f64::from).collect()).unwrap(), &[i, j]).unwrap();
        let b = Tensor::with_indices(Entries::from_shape_vec(&[1, 1, 3, 2], (7..=12).map(f64::from).collect()).unwrap(), &[j, k]).unwrap();
        let c = concat(CatWhere::Index(j), &[(&a).into(), (&b).into()]).unwrap();
        assert_eq!(c.indices(), &[i, j, k]);
        assert_eq!(c.tensor_dims(), &[2, 6, 2]);
        for ii in 0..2 {
            for jj in 0..6 {
                for kk in 0..2 {
                    let want = if jj < 3 {
                        a.entries().get(&[0, 0, ii, jj]).unwrap()
                    } else {
                        b.entries().get(&[0, 0, jj - 3, kk]).unwrap()
                    };
                    assert_eq!(c.entries().get(&[0, 0, ii, jj, kk]).unwrap(), want);
                }
            }
        }
        assert_eq!(concat(CatWhere::Index(j), &[(&a).into()]).unwrap(), a);
        assert!(matches!(
            concat(CatWhere::Index(k), &[(&a).into(), (&b).into()]),
            Err(RtError::UnknownIndex(_))
        ));
    }
}
