//! Dense per-page kernels: batched matrix multiply, LU and Householder QR
//! solves. Pages are the outermost axis of an `Array3`.

use std::fmt::Debug;
use std::ops::Neg;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, Array3, ArrayD, ArrayView2, ArrayView3, Axis, LinalgScalar, Zip};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::array::Entries;
use crate::error::{Result, RtError};

/// Element types the lattice kernels run on.
pub trait Scalar: LinalgScalar + Send + Sync + Debug + PartialEq + Neg<Output = Self> {
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
    fn from_real(x: f64) -> Self;
    fn wrap(a: ArrayD<Self>) -> Entries;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn conj(self) -> Self {
        self
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn wrap(a: ArrayD<Self>) -> Entries {
        Entries::Real(a)
    }
}

impl Scalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn wrap(a: ArrayD<Self>) -> Entries {
        Entries::Complex(a)
    }
}

/// Below this many multiply-adds a batch runs on the calling thread.
const PARALLEL_WORK: usize = 1 << 15;

/// `c[p] = a[p] * b[p]` for every page `p`.
pub fn pagemtimes<T: Scalar>(a: ArrayView3<'_, T>, b: ArrayView3<'_, T>) -> Result<Array3<T>> {
    let (p, m, k) = a.dim();
    let (pb, kb, n) = b.dim();
    if p != pb || k != kb {
        return Err(RtError::DimMismatch(format!(
            "cannot multiply pages {:?} by {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let mut c = Array3::<T>::zeros((p, m, n));
    let job = |mut c: ndarray::ArrayViewMut2<'_, T>, a: ArrayView2<'_, T>, b: ArrayView2<'_, T>| {
        general_mat_mul(T::one(), &a, &b, T::zero(), &mut c)
    };
    let zip = Zip::from(c.outer_iter_mut())
        .and(a.outer_iter())
        .and(b.outer_iter());
    if p > 1 && p * m * n * k >= PARALLEL_WORK {
        zip.par_for_each(job);
    } else {
        zip.for_each(job);
    }
    Ok(c)
}

/// Solve `a[p] x[p] = b[p]` per page. Square pages use LU with partial
/// pivoting, tall pages a least-squares QR. A rank-deficient page fails with
/// its 0-based page number.
pub fn pagesolve<T: Scalar>(a: ArrayView3<'_, T>, b: ArrayView3<'_, T>) -> Result<Array3<T>> {
    let (p, m, n) = a.dim();
    let (pb, mb, k) = b.dim();
    if p != pb || m != mb {
        return Err(RtError::DimMismatch(format!(
            "cannot divide pages {:?} by {:?}",
            b.dim(),
            a.dim()
        )));
    }
    if m < n {
        return Err(RtError::DimMismatch(format!(
            "underdetermined {m}x{n} denominator pages"
        )));
    }
    let solve_one = |q: usize| -> Option<Array2<T>> {
        let (ap, bp) = (a.index_axis(Axis(0), q), b.index_axis(Axis(0), q));
        if m == n {
            lu_solve(ap, bp)
        } else {
            qr_solve(ap, bp)
        }
    };
    let pages: Vec<Option<Array2<T>>> = if p > 1 && p * n * n * (m + k) >= PARALLEL_WORK {
        (0..p).into_par_iter().map(solve_one).collect()
    } else {
        (0..p).map(solve_one).collect()
    };
    let mut x = Array3::<T>::zeros((p, n, k));
    for (q, page) in pages.into_iter().enumerate() {
        match page {
            Some(sol) => x.index_axis_mut(Axis(0), q).assign(&sol),
            None => return Err(RtError::SingularPage { page: q }),
        }
    }
    Ok(x)
}

fn max_modulus<T: Scalar>(a: &ArrayView2<'_, T>) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.modulus()))
}

fn lu_solve<T: Scalar>(a: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> Option<Array2<T>> {
    let n = a.nrows();
    let k = b.ncols();
    let tol = n as f64 * f64::EPSILON * max_modulus(&a);
    let mut lu = a.to_owned();
    let mut x = b.to_owned();
    for c in 0..n {
        let (piv, size) = (c..n)
            .map(|r| (r, lu[[r, c]].modulus()))
            .fold((c, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(size > tol) {
            return None;
        }
        if piv != c {
            for j in 0..n {
                lu.swap([piv, j], [c, j]);
            }
            for j in 0..k {
                x.swap([piv, j], [c, j]);
            }
        }
        let d = lu[[c, c]];
        for r in c + 1..n {
            let f = lu[[r, c]] / d;
            if f == T::zero() {
                continue;
            }
            for j in c + 1..n {
                lu[[r, j]] = lu[[r, j]] - f * lu[[c, j]];
            }
            for j in 0..k {
                x[[r, j]] = x[[r, j]] - f * x[[c, j]];
            }
        }
    }
    back_substitute(&lu, &mut x, n);
    Some(x)
}

/// Solve the leading `n x n` upper triangle of `r` against the first `n`
/// rows of `x`, in place, and truncate `x` to `n` rows.
fn back_substitute<T: Scalar>(r: &Array2<T>, x: &mut Array2<T>, n: usize) {
    let k = x.ncols();
    for row in (0..n).rev() {
        for j in 0..k {
            let mut s = x[[row, j]];
            for c in row + 1..n {
                s = s - r[[row, c]] * x[[c, j]];
            }
            x[[row, j]] = s / r[[row, row]];
        }
    }
    if x.nrows() > n {
        *x = x.slice(ndarray::s![..n, ..]).to_owned();
    }
}

fn qr_solve<T: Scalar>(a: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> Option<Array2<T>> {
    let (m, n) = a.dim();
    let k = b.ncols();
    let tol = m as f64 * f64::EPSILON * max_modulus(&a);
    let mut r = a.to_owned();
    let mut y = b.to_owned();
    let mut v = vec![T::zero(); m];
    for c in 0..n {
        let norm = (c..m).map(|i| r[[i, c]].modulus().powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let x0 = r[[c, c]];
        let phase = if x0.modulus() == 0.0 {
            T::one()
        } else {
            x0 * T::from_real(1.0 / x0.modulus())
        };
        let alpha = -(phase * T::from_real(norm));
        v[c] = x0 - alpha;
        for i in c + 1..m {
            v[i] = r[[i, c]];
        }
        let vv: f64 = (c..m).map(|i| v[i].modulus().powi(2)).sum();
        if vv == 0.0 {
            continue;
        }
        let f = T::from_real(2.0 / vv);
        for j in c..n {
            let s = (c..m).fold(T::zero(), |s, i| s + v[i].conj() * r[[i, j]]) * f;
            for i in c..m {
                r[[i, j]] = r[[i, j]] - v[i] * s;
            }
        }
        for j in 0..k {
            let s = (c..m).fold(T::zero(), |s, i| s + v[i].conj() * y[[i, j]]) * f;
            for i in c..m {
                y[[i, j]] = y[[i, j]] - v[i] * s;
            }
        }
    }
    if (0..n).any(|i| !(r[[i, i]].modulus() > tol)) {
        return None;
    }
    back_substitute(&r, &mut y, n);
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array3};

    #[test]
    fn pagemtimes_matches_loops() {
        let a = Array3::from_shape_fn((3, 2, 4), |(p, i, j)| (p * 7 + i * 3 + j) as f64);
        let b = Array3::from_shape_fn((3, 4, 5), |(p, i, j)| (p + 2 * i) as f64 - j as f64);
        let c = pagemtimes(a.view(), b.view()).unwrap();
        for p in 0..3 {
            for i in 0..2 {
                for j in 0..5 {
                    let s: f64 = (0..4).map(|k| a[[p, i, k]] * b[[p, k, j]]).sum();
                    assert_eq!(c[[p, i, j]], s);
                }
            }
        }
        assert!(pagemtimes(a.view(), a.view()).is_err());
    }

    #[test]
    fn lu_solves_with_pivoting() {
        let a = array![[[0.0, 2.0], [4.0, 1.0]]];
        let b = array![[[4.0], [9.0]]];
        let x = pagesolve(a.view(), b.view()).unwrap();
        assert!((x[[0, 0, 0]] - 1.75).abs() < 1e-15);
        assert!((x[[0, 1, 0]] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_page_is_reported() {
        let a = array![[[1.0, 0.0], [0.0, 1.0]], [[1.0, 2.0], [2.0, 4.0]]];
        let b = Array3::<f64>::ones((2, 2, 1));
        assert_eq!(
            pagesolve(a.view(), b.view()),
            Err(RtError::SingularPage { page: 1 })
        );
    }

    #[test]
    fn qr_least_squares_fits_a_line() {
        // y = 1 + 2t sampled exactly, plus a symmetric perturbation.
        let t = [0.0, 1.0, 2.0, 3.0];
        let a = Array3::from_shape_fn((1, 4, 2), |(_, i, j)| if j == 0 { 1.0 } else { t[i] });
        let y = [1.1, 2.9, 5.1, 6.9];
        let b = Array3::from_shape_fn((1, 4, 1), |(_, i, _)| y[i]);
        let x = pagesolve(a.view(), b.view()).unwrap();
        // Normal equations by hand.
        let n = 4.0;
        let st: f64 = t.iter().sum();
        let stt: f64 = t.iter().map(|v| v * v).sum();
        let sy: f64 = y.iter().sum();
        let sty: f64 = t.iter().zip(&y).map(|(p, q)| p * q).sum();
        let det = n * stt - st * st;
        let c0 = (stt * sy - st * sty) / det;
        let c1 = (n * sty - st * sy) / det;
        assert!((x[[0, 0, 0]] - c0).abs() < 1e-12);
        assert!((x[[0, 1, 0]] - c1).abs() < 1e-12);
    }

    #[test]
    fn complex_solves() {
        let j = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let a = array![[[one, j], [j, 2.0 * one]]];
        let xs = array![[[one + j], [2.0 * one]]];
        let b = pagemtimes(a.view(), xs.view()).unwrap();
        let x = pagesolve(a.view(), b.view()).unwrap();
        assert!((&x - &xs).iter().all(|z| z.norm() < 1e-14));
        let tall = array![[[one, j], [j, 2.0 * one], [one, -j]]];
        let b = pagemtimes(tall.view(), xs.view()).unwrap();
        let x = pagesolve(tall.view(), b.view()).unwrap();
        assert!((&x - &xs).iter().all(|z| z.norm() < 1e-13));
    }
}
