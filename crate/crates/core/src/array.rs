//! Dense entry storage shared by every tensor.
//!
//! Logical axis order is always `[rows, cols, t0, t1, ...]`. Physically the
//! data is kept page-major: the tensor axes vary slowest and every
//! `rows x cols` page is a contiguous row-major block. Operations that build
//! new entries go through [`page_major`] to restore that layout.

use ndarray::{ArrayD, ArrayView3, Axis, IxDyn};
use num_complex::Complex64;

use crate::error::{Result, RtError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ElementKind {
    Bool,
    Real,
    Complex,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Entries {
    Real(ArrayD<f64>),
    Complex(ArrayD<Complex64>),
    Bool(ArrayD<bool>),
}

/// Apply the same generic expression to whichever element kind is stored.
macro_rules! map_entries {
    ($e:expr, $a:ident => $body:expr) => {
        match $e {
            $crate::array::Entries::Real($a) => $crate::array::Entries::Real($body),
            $crate::array::Entries::Complex($a) => $crate::array::Entries::Complex($body),
            $crate::array::Entries::Bool($a) => $crate::array::Entries::Bool($body),
        }
    };
}
pub(crate) use map_entries;

macro_rules! with_entries {
    ($e:expr, $a:ident => $body:expr) => {
        match $e {
            $crate::array::Entries::Real($a) => $body,
            $crate::array::Entries::Complex($a) => $body,
            $crate::array::Entries::Bool($a) => $body,
        }
    };
}
pub(crate) use with_entries;

/// Rearrange `a` so that its tensor axes are physically outermost and each
/// page is a contiguous row-major matrix. Logical axis order is unchanged.
pub fn page_major<T: Clone>(a: ArrayD<T>) -> ArrayD<T> {
    let n = a.ndim();
    assert!(n >= 2, "entries need at least rows and cols");
    let to_phys: Vec<usize> = (2..n).chain([0, 1]).collect();
    let view = a.view().permuted_axes(to_phys.clone());
    if view.is_standard_layout() {
        return a;
    }
    let owned = view.as_standard_layout().into_owned();
    owned.permuted_axes(inverse_perm(&to_phys))
}

/// True when `a` already satisfies the page-major layout.
pub fn is_page_major<T>(a: &ArrayD<T>) -> bool {
    let n = a.ndim();
    let to_phys: Vec<usize> = (2..n).chain([0, 1]).collect();
    a.view().permuted_axes(to_phys).is_standard_layout()
}

pub(crate) fn inverse_perm(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &k) in p.iter().enumerate() {
        inv[k] = i;
    }
    inv
}

/// Pages of a page-major array as a `(pages, rows, cols)` view.
pub fn pages_view<T>(a: &ArrayD<T>) -> ArrayView3<'_, T> {
    let n = a.ndim();
    let (r, c) = (a.shape()[0], a.shape()[1]);
    let p: usize = a.shape()[2..].iter().product();
    let to_phys: Vec<usize> = (2..n).chain([0, 1]).collect();
    a.view()
        .permuted_axes(to_phys)
        .into_shape_with_order((p, r, c))
        .expect("entries are page-major")
}

/// Strip trailing singleton axes beyond the first two.
pub fn effective_ndim(shape: &[usize]) -> usize {
    let mut n = shape.len();
    while n > 2 && shape[n - 1] == 1 {
        n -= 1;
    }
    n.max(2)
}

/// Reshape to exactly `ndim` axes by dropping or appending trailing singletons.
pub(crate) fn with_ndim<T: Clone>(mut a: ArrayD<T>, ndim: usize) -> ArrayD<T> {
    while a.ndim() < ndim {
        let n = a.ndim();
        a.insert_axis_inplace(Axis(n));
    }
    while a.ndim() > ndim {
        let n = a.ndim();
        debug_assert_eq!(a.shape()[n - 1], 1);
        a.index_axis_inplace(Axis(n - 1), 0);
    }
    a
}

/// Promote arrays with fewer than two axes to matrices (scalars to 1x1,
/// vectors to columns).
pub(crate) fn at_least_2d<T: Clone>(mut a: ArrayD<T>) -> ArrayD<T> {
    while a.ndim() < 2 {
        let n = a.ndim();
        a.insert_axis_inplace(Axis(n));
    }
    a
}

impl Entries {
    pub fn kind(&self) -> ElementKind {
        match self {
            Entries::Real(_) => ElementKind::Real,
            Entries::Complex(_) => ElementKind::Complex,
            Entries::Bool(_) => ElementKind::Bool,
        }
    }

    pub fn shape(&self) -> &[usize] {
        with_entries!(self, a => a.shape())
    }

    pub fn ndim(&self) -> usize {
        self.shape().len()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn real(a: ArrayD<f64>) -> Self {
        Entries::Real(page_major(at_least_2d(a)))
    }

    pub fn complex(a: ArrayD<Complex64>) -> Self {
        Entries::Complex(page_major(at_least_2d(a)))
    }

    pub fn boolean(a: ArrayD<bool>) -> Self {
        Entries::Bool(page_major(at_least_2d(a)))
    }

    /// Real entries from a flat buffer given in logical row-major order.
    pub fn from_shape_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let a = ArrayD::from_shape_vec(IxDyn(shape), data)
            .map_err(|e| RtError::DimMismatch(e.to_string()))?;
        Ok(Entries::real(a))
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Entries::real(ArrayD::zeros(IxDyn(shape)))
    }

    pub fn ones(shape: &[usize]) -> Self {
        Entries::real(ArrayD::ones(IxDyn(shape)))
    }

    pub(crate) fn page_major(self) -> Self {
        map_entries!(self, a => page_major(a))
    }

    /// Numeric view as reals; complex entries are rejected.
    pub fn to_real(&self) -> Result<ArrayD<f64>> {
        match self {
            Entries::Real(a) => Ok(a.clone()),
            Entries::Bool(a) => Ok(a.mapv(|b| if b { 1.0 } else { 0.0 })),
            Entries::Complex(_) => Err(RtError::ElementKind(
                "expected real entries, found complex".into(),
            )),
        }
    }

    pub fn to_complex(&self) -> ArrayD<Complex64> {
        match self {
            Entries::Real(a) => a.mapv(|x| Complex64::new(x, 0.0)),
            Entries::Bool(a) => a.mapv(|b| Complex64::new(if b { 1.0 } else { 0.0 }, 0.0)),
            Entries::Complex(a) => a.clone(),
        }
    }

    /// Logical view; real entries are true where nonzero.
    pub fn to_bool(&self) -> Result<ArrayD<bool>> {
        match self {
            Entries::Bool(a) => Ok(a.clone()),
            Entries::Real(a) => Ok(a.mapv(|x| x != 0.0)),
            Entries::Complex(_) => Err(RtError::ElementKind(
                "logical operation on complex entries".into(),
            )),
        }
    }

    /// Convert to `kind`, promoting bool -> real -> complex.
    pub fn promote(&self, kind: ElementKind) -> Result<Entries> {
        Ok(match kind {
            ElementKind::Bool => Entries::Bool(self.to_bool()?),
            ElementKind::Real => Entries::Real(self.to_real()?),
            ElementKind::Complex => Entries::Complex(self.to_complex()),
        })
    }

    /// Entry at a logical multi-index (0-based).
    pub fn get(&self, ix: &[usize]) -> Option<Complex64> {
        match self {
            Entries::Real(a) => a.get(IxDyn(ix)).map(|&x| Complex64::new(x, 0.0)),
            Entries::Complex(a) => a.get(IxDyn(ix)).copied(),
            Entries::Bool(a) => a
                .get(IxDyn(ix))
                .map(|&b| Complex64::new(if b { 1.0 } else { 0.0 }, 0.0)),
        }
    }

    /// All entries as complex numbers in logical row-major order.
    pub fn values(&self) -> Vec<Complex64> {
        self.to_complex().iter().copied().collect()
    }

    /// Largest imaginary magnitude; zero for non-complex kinds.
    pub fn max_imag(&self) -> f64 {
        match self {
            Entries::Complex(a) => a.iter().fold(0.0, |m, z| m.max(z.im.abs())),
            _ => 0.0,
        }
    }

    /// Drop to real entries when every imaginary part is exactly zero.
    pub fn demote_if_real(self) -> Entries {
        match self {
            Entries::Complex(a) if a.iter().all(|z| z.im == 0.0) => {
                Entries::Real(a.mapv(|z| z.re))
            }
            other => other,
        }
    }

    pub(crate) fn permuted(&self, perm: &[usize]) -> Entries {
        map_entries!(self, a => page_major(a.clone().permuted_axes(perm.to_vec())))
    }

    pub(crate) fn with_ndim(self, ndim: usize) -> Entries {
        map_entries!(self, a => with_ndim(a, ndim))
    }
}

pub(crate) fn common_kind(kinds: impl IntoIterator<Item = ElementKind>) -> ElementKind {
    kinds.into_iter().max().unwrap_or(ElementKind::Real)
}

/// Kind used for arithmetic: booleans count as reals.
pub(crate) fn arithmetic_kind(kinds: impl IntoIterator<Item = ElementKind>) -> ElementKind {
    common_kind(kinds).max(ElementKind::Real)
}
