//! Indexed tensors: construction, subscripting, permutation, contraction and
//! the attraction/contraction normalization pass.

use ndarray::{ArrayD, Axis, IxDyn};
use num_complex::Complex64;
use std::fmt;

use crate::array::{effective_ndim, map_entries, page_major, with_entries, Entries};
use crate::error::{Result, RtError};
use crate::index::{position_of, IndexHandle};

/// A dense value whose axes beyond rows and columns are bound to indices.
///
/// Entries always carry exactly `2 + degree` axes; indices that address
/// virtual trailing dimensions are backed by size-one axes.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    entries: Entries,
    indices: Vec<IndexHandle>,
}

/// Either operand form accepted by the N-ary and entrywise operations: an
/// indexed tensor, or a plain matrix with no indices.
#[derive(Clone, Copy, Debug)]
pub enum Operand<'a> {
    Tensor(&'a Tensor),
    Plain(&'a Entries),
}

impl<'a> From<&'a Tensor> for Operand<'a> {
    fn from(t: &'a Tensor) -> Self {
        Operand::Tensor(t)
    }
}

/// One subscript of a `t(...)` reference. Numeric positions are 1-based.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Subscript {
    Index(IndexHandle),
    Pos(usize),
    /// Inclusive 1-based range.
    Range(usize, usize),
    All,
}

/// Result of subscripting: index subscripts give a tensor, numeric ones give
/// plain entries.
#[derive(Clone, Debug, PartialEq)]
pub enum Subscripted {
    Tensor(Tensor),
    Array(Entries),
}

impl Tensor {
    /// Wrap entries, creating one fresh true-variant index per tensor axis.
    pub fn from_array(entries: Entries) -> (Tensor, Vec<IndexHandle>) {
        let n = effective_ndim(entries.shape());
        let idx = IndexHandle::fresh_many(n - 2);
        let entries = entries.with_ndim(n).page_major();
        (
            Tensor {
                entries,
                indices: idx.clone(),
            },
            idx,
        )
    }

    /// Degree-zero tensor (a plain matrix).
    pub fn matrix(entries: Entries) -> Result<Tensor> {
        Tensor::with_indices(entries, &[])
    }

    pub fn scalar(x: f64) -> Tensor {
        Tensor {
            entries: Entries::real(ArrayD::from_elem(IxDyn(&[1, 1]), x)),
            indices: Vec::new(),
        }
    }

    pub fn complex_scalar(z: Complex64) -> Tensor {
        Tensor {
            entries: Entries::complex(ArrayD::from_elem(IxDyn(&[1, 1]), z)),
            indices: Vec::new(),
        }
    }

    /// Bind `idx` to the entries' tensor axes. Extra indices address trailing
    /// singleton dimensions. Repeated identities are simplified.
    pub fn with_indices(entries: Entries, idx: &[IndexHandle]) -> Result<Tensor> {
        let needed = effective_ndim(entries.shape()) - 2;
        if idx.len() < needed {
            return Err(RtError::IndexArity {
                needed,
                got: idx.len(),
            });
        }
        let entries = entries.with_ndim(2 + idx.len()).page_major();
        let raw = Tensor {
            entries,
            indices: idx.to_vec(),
        };
        raw.simplify()
    }

    /// Construct without simplifying; `idx` must have unique ids and match
    /// the entries' tensor axes exactly.
    pub(crate) fn from_parts(entries: Entries, indices: Vec<IndexHandle>) -> Tensor {
        debug_assert_eq!(entries.ndim(), indices.len() + 2);
        Tensor {
            entries: entries.page_major(),
            indices,
        }
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn into_entries(self) -> Entries {
        self.entries
    }

    pub fn indices(&self) -> &[IndexHandle] {
        &self.indices
    }

    pub fn degree(&self) -> usize {
        self.indices.len()
    }

    pub fn rows(&self) -> usize {
        self.entries.shape()[0]
    }

    pub fn cols(&self) -> usize {
        self.entries.shape()[1]
    }

    /// Sizes of the tensor axes, aligned with `indices()`.
    pub fn tensor_dims(&self) -> &[usize] {
        &self.entries.shape()[2..]
    }

    pub fn shape(&self) -> &[usize] {
        self.entries.shape()
    }

    pub fn numel(&self) -> usize {
        self.entries.len()
    }

    /// Rows and columns are both one.
    pub fn is_scalar(&self) -> bool {
        self.rows() == 1 && self.cols() == 1
    }

    /// Size of the axis bound to `h`'s identity, or 1 for unknown identities.
    pub fn dim_of(&self, h: IndexHandle) -> usize {
        position_of(&self.indices, h)
            .map(|p| self.tensor_dims()[p])
            .unwrap_or(1)
    }

    /// The single value of a one-element tensor.
    pub fn value(&self) -> Option<Complex64> {
        if self.numel() == 1 {
            self.entries.get(&vec![0; self.entries.ndim()])
        } else {
            None
        }
    }

    /// Redefine the indices with `subs`, then attract and contract repeats.
    pub fn reindex(&self, subs: &[IndexHandle]) -> Result<Tensor> {
        Tensor::with_indices(self.entries.clone(), subs)
    }

    /// Subscript with all-index or all-numeric subscripts.
    pub fn subscript(&self, subs: &[Subscript]) -> Result<Subscripted> {
        let n_index = subs
            .iter()
            .filter(|s| matches!(s, Subscript::Index(_)))
            .count();
        if n_index == subs.len() {
            let idx: Vec<IndexHandle> = subs
                .iter()
                .map(|s| match s {
                    Subscript::Index(h) => *h,
                    _ => unreachable!(),
                })
                .collect();
            Ok(Subscripted::Tensor(self.reindex(&idx)?))
        } else if n_index == 0 {
            Ok(Subscripted::Array(self.slice(subs)?))
        } else {
            Err(RtError::SubscriptKind)
        }
    }

    /// Numeric subscripting of the entries (rows, cols, then tensor axes).
    /// Fewer subscripts than axes address the remaining axes linearly,
    /// first axis fastest.
    pub fn slice(&self, subs: &[Subscript]) -> Result<Entries> {
        slice_entries(&self.entries, subs)
    }

    /// Overwrite semantics of `dst(subs) = src`: `src` permuted so its index
    /// order follows `subs`.
    pub fn assign(subs: &[IndexHandle], src: Operand<'_>) -> Result<Tensor> {
        let src = match src {
            Operand::Tensor(t) => t,
            Operand::Plain(_) => return Err(RtError::AssignKind),
        };
        for h in subs {
            if position_of(&src.indices, *h).is_none() {
                return Err(RtError::UnknownIndex(format!(
                    "{h} is not an index of the right-hand side"
                )));
            }
        }
        src.permute(subs)
    }

    /// Reorder entries so the index list becomes `new_idx`. Every old index
    /// must be kept with its variant; new identities add singleton axes.
    pub fn permute(&self, new_idx: &[IndexHandle]) -> Result<Tensor> {
        for (k, h) in new_idx.iter().enumerate() {
            if new_idx[..k].iter().any(|x| x.same_id(*h)) {
                return Err(RtError::DimMismatch(format!(
                    "index {h} repeated in permutation"
                )));
            }
        }
        for old in &self.indices {
            match position_of(new_idx, *old) {
                None => {
                    return Err(RtError::UnknownIndex(format!(
                        "permutation drops index {old}"
                    )))
                }
                Some(p) if new_idx[p].variant() != old.variant() => {
                    return Err(RtError::VariantMismatch(format!(
                        "permutation changes the variant of {old}"
                    )))
                }
                _ => {}
            }
        }
        let d = self.degree();
        let extra = new_idx.len() - d;
        let widened = self.entries.clone().with_ndim(2 + d + extra);
        let mut next_extra = 2 + d;
        let mut perm = vec![0, 1];
        for h in new_idx {
            match position_of(&self.indices, *h) {
                Some(p) => perm.push(2 + p),
                None => {
                    perm.push(next_extra);
                    next_extra += 1;
                }
            }
        }
        Ok(Tensor {
            entries: widened.permuted(&perm),
            indices: new_idx.to_vec(),
        })
    }

    /// Sum along the axes of `over`, irrespective of variants. Identities the
    /// tensor does not carry address singleton axes and are ignored.
    pub fn sum(&self, over: &[IndexHandle]) -> Tensor {
        let mut axes: Vec<usize> = over
            .iter()
            .filter_map(|h| position_of(&self.indices, *h))
            .collect();
        axes.sort_unstable();
        axes.dedup();
        if axes.is_empty() {
            return self.clone();
        }
        let mut entries = match &self.entries {
            Entries::Bool(_) => Entries::Real(self.entries.to_real().unwrap()),
            e => e.clone(),
        };
        for &ax in axes.iter().rev() {
            entries = match entries {
                Entries::Real(a) => Entries::Real(a.sum_axis(Axis(2 + ax))),
                Entries::Complex(a) => Entries::Complex(a.sum_axis(Axis(2 + ax))),
                Entries::Bool(_) => unreachable!(),
            };
        }
        let indices = self
            .indices
            .iter()
            .enumerate()
            .filter(|(k, _)| axes.binary_search(k).is_err())
            .map(|(_, h)| *h)
            .collect();
        Tensor::from_parts(entries, indices)
    }

    /// Attract every group of same-identity indices (generalized diagonal
    /// selection), then contract the groups that mix variants.
    pub fn simplify(self) -> Result<Tensor> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut group_of = Vec::with_capacity(self.degree());
        for (k, h) in self.indices.iter().enumerate() {
            match groups
                .iter()
                .position(|g| self.indices[g[0]].same_id(*h))
            {
                Some(g) => {
                    groups[g].push(k);
                    group_of.push(g);
                }
                None => {
                    group_of.push(groups.len());
                    groups.push(vec![k]);
                }
            }
        }
        if groups.len() == self.degree() {
            return Ok(self);
        }
        let dims = self.tensor_dims().to_vec();
        let mut group_sizes = Vec::with_capacity(groups.len());
        let mut new_indices = Vec::with_capacity(groups.len());
        let mut contract = Vec::new();
        for g in &groups {
            let size = dims[g[0]];
            if g.iter().any(|&k| dims[k] != size) {
                return Err(RtError::DimMismatch(format!(
                    "repeated index {} spans axes of different sizes",
                    self.indices[g[0]]
                )));
            }
            group_sizes.push(size);
            let first = self.indices[g[0]];
            let mixed = g.iter().any(|&k| self.indices[k].variant() != first.variant());
            if mixed {
                contract.push(first);
            }
            new_indices.push(first);
        }
        let entries = map_entries!(&self.entries, a => attract(a, &group_of, &group_sizes));
        let attracted = Tensor::from_parts(entries, new_indices);
        Ok(attracted.sum(&contract))
    }

    /// Complement the variant of every index.
    pub fn complement_indices(&self) -> Tensor {
        Tensor {
            entries: self.entries.clone(),
            indices: self.indices.iter().map(|h| h.complement()).collect(),
        }
    }
}

/// Gather `out[r, c, g0, g1, ...] = a[r, c, g(k0), g(k1), ...]`, where each
/// tensor axis `k` reads the coordinate of its group `group_of[k]`.
fn attract<T: Clone>(a: &ArrayD<T>, group_of: &[usize], group_sizes: &[usize]) -> ArrayD<T> {
    let std = a.as_standard_layout();
    let data = std.as_slice().expect("standard layout");
    let shape = a.shape();
    let n = shape.len();
    let mut strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    let mut out_shape = vec![shape[0], shape[1]];
    out_shape.extend_from_slice(group_sizes);
    let mut out_strides = vec![strides[0], strides[1]];
    out_strides.extend(std::iter::repeat_n(0, group_sizes.len()));
    for (k, &g) in group_of.iter().enumerate() {
        out_strides[2 + g] += strides[2 + k];
    }
    let total: usize = out_shape.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut counter = vec![0usize; out_shape.len()];
    let mut offset = 0usize;
    for _ in 0..total {
        out.push(data[offset].clone());
        for ax in (0..out_shape.len()).rev() {
            counter[ax] += 1;
            offset += out_strides[ax];
            if counter[ax] < out_shape[ax] {
                break;
            }
            offset -= out_strides[ax] * out_shape[ax];
            counter[ax] = 0;
        }
    }
    page_major(ArrayD::from_shape_vec(IxDyn(&out_shape), out).expect("shape"))
}

fn slice_entries(e: &Entries, subs: &[Subscript]) -> Result<Entries> {
    if subs.is_empty() {
        return Ok(e.clone());
    }
    let shape = e.shape().to_vec();
    let nd = shape.len();
    let ns = subs.len();
    // Collapse trailing axes into one linear axis, first axis fastest.
    let (view_shape, merged) = if ns < nd {
        let mut s = shape[..ns - 1].to_vec();
        s.push(shape[ns - 1..].iter().product());
        (s, true)
    } else {
        let mut s = shape.clone();
        s.extend(std::iter::repeat_n(1, ns - nd));
        (s, false)
    };
    let mut picks: Vec<Vec<usize>> = Vec::with_capacity(ns);
    for (k, s) in subs.iter().enumerate() {
        let size = view_shape[k];
        let sel = match *s {
            Subscript::All => (0..size).collect(),
            Subscript::Pos(p) => {
                if p == 0 || p > size {
                    return Err(RtError::Bounds(format!(
                        "position {p} outside 1..={size} on axis {}",
                        k + 1
                    )));
                }
                vec![p - 1]
            }
            Subscript::Range(a, b) => {
                if a == 0 || b > size || a > b + 1 {
                    return Err(RtError::Bounds(format!(
                        "range {a}:{b} outside 1..={size} on axis {}",
                        k + 1
                    )));
                }
                (a - 1..b).collect()
            }
            Subscript::Index(_) => return Err(RtError::SubscriptKind),
        };
        picks.push(sel);
    }
    let out_shape: Vec<usize> = picks.iter().map(|p| p.len()).collect();
    let tail = &shape[ns.min(nd) - 1..];
    let locate = |ix: &[usize]| -> Vec<usize> {
        let mut full: Vec<usize> = Vec::with_capacity(nd);
        if merged {
            full.extend_from_slice(&ix[..ns - 1]);
            let mut lin = ix[ns - 1];
            for &d in tail {
                full.push(lin % d);
                lin /= d;
            }
        } else {
            full.extend_from_slice(&ix[..nd]);
        }
        full
    };
    let out = with_entries!(e, a => {
        let r = ArrayD::from_shape_fn(IxDyn(&out_shape), |ix| {
            let src: Vec<usize> = (0..ns).map(|k| picks[k][ix[k]]).collect();
            a[IxDyn(&locate(&src))].clone()
        });
        let n = effective_ndim(r.shape());
        Entries::from(crate::array::with_ndim(r, n))
    });
    Ok(out.page_major())
}

impl From<ArrayD<f64>> for Entries {
    fn from(a: ArrayD<f64>) -> Self {
        Entries::real(a)
    }
}

impl From<ArrayD<Complex64>> for Entries {
    fn from(a: ArrayD<Complex64>) -> Self {
        Entries::complex(a)
    }
}

impl From<ArrayD<bool>> for Entries {
    fn from(a: ArrayD<bool>) -> Self {
        Entries::boolean(a)
    }
}

impl fmt::Display for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.shape().iter().map(|d| d.to_string()).collect();
        let idx: Vec<String> = self.indices.iter().map(|h| h.to_string()).collect();
        write!(
            f,
            "degree {} [{}] indices [{}] {:?}",
            self.degree(),
            dims.join("x"),
            idx.join(","),
            self.entries.kind()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::IndexHandle;

    fn vec_tensor(v: &[f64], i: IndexHandle) -> Tensor {
        let e = Entries::from_shape_vec(&[1, 1, v.len()], v.to_vec()).unwrap();
        Tensor::with_indices(e, &[i]).unwrap()
    }

    fn outer3(a: &[f64], b: &[f64], c: &[f64]) -> Entries {
        let mut data = Vec::new();
        for x in a {
            for y in b {
                for z in c {
                    data.push(x * y * z);
                }
            }
        }
        Entries::from_shape_vec(&[1, 1, a.len(), b.len(), c.len()], data).unwrap()
    }

    #[test]
    fn from_array_degrees() {
        let (t, idx) = Tensor::from_array(Entries::zeros(&[100, 100, 10]));
        assert_eq!(t.degree(), 1);
        assert_eq!(idx.len(), 1);
        assert!(idx[0].variant());
        let (t, idx) = Tensor::from_array(Entries::zeros(&[4, 4]));
        assert_eq!(t.degree(), 0);
        assert!(idx.is_empty());
        let (t, _) = Tensor::from_array(Entries::zeros(&[2, 2, 3, 5]));
        assert_eq!(t.degree(), 2);
    }

    #[test]
    fn with_indices_arity() {
        let k = IndexHandle::fresh();
        let t = Tensor::with_indices(Entries::zeros(&[3, 1, 5]), &[k]).unwrap();
        assert_eq!(t.tensor_dims(), &[5]);
        let t = Tensor::with_indices(Entries::zeros(&[3, 3]), &[k]).unwrap();
        assert_eq!(t.degree(), 1);
        assert_eq!(t.tensor_dims(), &[1]);
        assert_eq!(
            Tensor::with_indices(Entries::zeros(&[2, 2, 3]), &[]),
            Err(RtError::IndexArity { needed: 1, got: 0 })
        );
    }

    #[test]
    fn reindex_contracts_and_attracts() {
        let i = IndexHandle::fresh();
        let (z, _) = Tensor::from_array(outer3(&[1., 2.], &[3., 4.], &[5., 6.]));
        let x = z.reindex(&[i, i, !i]).unwrap();
        assert_eq!(x.degree(), 0);
        assert_eq!(x.value().unwrap().re, 63.0);
        let y = z.reindex(&[i, i, i]).unwrap();
        assert_eq!(y.indices(), &[i]);
        assert_eq!(y.entries().values().iter().map(|c| c.re).collect::<Vec<_>>(), vec![15.0, 48.0]);
        let y = z.reindex(&[!i, !i, !i]).unwrap();
        assert_eq!(y.indices(), &[!i]);
    }

    #[test]
    fn reindex_relabels_distinct_ids() {
        let (t, _) = Tensor::from_array(Entries::from_shape_vec(&[1, 1, 2, 3], (0..6).map(f64::from).collect()).unwrap());
        let (i, j) = (IndexHandle::fresh(), IndexHandle::fresh());
        let r = t.reindex(&[i, j]).unwrap();
        assert_eq!(r.entries(), t.entries());
        assert_eq!(r.indices(), &[i, j]);
    }

    #[test]
    fn reindex_size_mismatch() {
        let (t, _) = Tensor::from_array(Entries::zeros(&[1, 1, 2, 3]));
        let i = IndexHandle::fresh();
        assert!(matches!(t.reindex(&[i, i]), Err(RtError::DimMismatch(_))));
    }

    #[test]
    fn slicing() {
        let data: Vec<f64> = (1..=4).map(f64::from).collect();
        let (t, _) = Tensor::from_array(Entries::from_shape_vec(&[1, 1, 4], data).unwrap());
        let s = t.slice(&[Subscript::Pos(1), Subscript::Pos(1), Subscript::Pos(1)]).unwrap();
        assert_eq!(s.values()[0].re, 1.0);
        let data: Vec<f64> = (0..12).map(f64::from).collect();
        let (t, _) = Tensor::from_array(Entries::from_shape_vec(&[2, 2, 3], data).unwrap());
        let page = t.slice(&[Subscript::All, Subscript::All, Subscript::Pos(2)]).unwrap();
        assert_eq!(page.shape(), &[2, 2]);
        assert_eq!(page.values().iter().map(|c| c.re).collect::<Vec<_>>(), vec![1.0, 4.0, 7.0, 10.0]);
        assert!(matches!(t.slice(&[Subscript::Pos(0)]), Err(RtError::Bounds(_))));
        // Linear indexing runs down the columns first.
        let lin = t.slice(&[Subscript::Pos(2)]).unwrap();
        assert_eq!(lin.values()[0].re, 6.0);
    }

    #[test]
    fn mixed_subscripts_rejected() {
        let (t, _) = Tensor::from_array(Entries::zeros(&[1, 1, 2]));
        let i = IndexHandle::fresh();
        assert_eq!(
            t.subscript(&[Subscript::Index(i), Subscript::Pos(1)]),
            Err(RtError::SubscriptKind)
        );
    }

    #[test]
    fn permute_rules() {
        let (i, j, k) = (IndexHandle::fresh(), IndexHandle::fresh(), IndexHandle::fresh());
        let data: Vec<f64> = (0..6).map(f64::from).collect();
        let t = Tensor::with_indices(Entries::from_shape_vec(&[1, 1, 2, 3], data).unwrap(), &[i, j]).unwrap();
        let p = t.permute(&[j, i]).unwrap();
        assert_eq!(p.tensor_dims(), &[3, 2]);
        assert_eq!(p.entries().get(&[0, 0, 2, 1]).unwrap().re, 5.0);
        let back = p.permute(&[i, j]).unwrap();
        assert_eq!(back, t);
        assert!(matches!(t.permute(&[i]), Err(RtError::UnknownIndex(_))));
        assert!(matches!(t.permute(&[!i, j]), Err(RtError::VariantMismatch(_))));
        let v = vec_tensor(&[1., 2.], i);
        let w = v.permute(&[i, !k]).unwrap();
        assert_eq!(w.degree(), 2);
        assert_eq!(w.tensor_dims(), &[2, 1]);
        assert_eq!(w.indices()[1], !k);
    }

    #[test]
    fn sum_over_indices() {
        let i = IndexHandle::fresh();
        let y = vec_tensor(&[15., 48.], i);
        assert_eq!(y.sum(&[!i]).value().unwrap().re, 63.0);
        assert_eq!(y.sum(&[]), y);
        assert_eq!(y.sum(&[IndexHandle::fresh()]), y);
    }

    #[test]
    fn assign_permutes_source() {
        let (i, j) = (IndexHandle::fresh(), IndexHandle::fresh());
        let data: Vec<f64> = (0..6).map(f64::from).collect();
        let y = Tensor::with_indices(Entries::from_shape_vec(&[1, 1, 2, 3], data).unwrap(), &[!j, i]).unwrap();
        let z = Tensor::assign(&[i, !j], Operand::Tensor(&y)).unwrap();
        assert_eq!(z.indices(), &[i, !j]);
        for a in 0..2 {
            for b in 0..3 {
                assert_eq!(z.entries().get(&[0, 0, b, a]), y.entries().get(&[0, 0, a, b]));
            }
        }
        let same = Tensor::assign(y.indices(), Operand::Tensor(&y)).unwrap();
        assert_eq!(same, y);
        assert!(matches!(Tensor::assign(&[i], Operand::Tensor(&y)), Err(RtError::UnknownIndex(_))));
        let plain = Entries::zeros(&[2, 2]);
        assert_eq!(Tensor::assign(&[i], Operand::Plain(&plain)), Err(RtError::AssignKind));
    }
}
