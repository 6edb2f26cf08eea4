//! 2D transforms over `M x N` images and `P x M x N` page stacks.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::{Array2, Array3, ArrayView2, Axis, Zip};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

fn plan(len: usize, dir: FftDirection) -> Plan {
    static PLANS: OnceLock<Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)>> =
        OnceLock::new();
    let cell = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cell.lock().unwrap_or_else(|e| e.into_inner());
    let (planner, cache) = &mut *guard;
    let key = (len, dir == FftDirection::Forward);
    cache
        .entry(key)
        .or_insert_with(|| planner.plan_fft(len, dir))
        .clone()
}

/// Unnormalized transform of every row of a standard-layout matrix.
fn rows_in_place(x: &mut Array2<Complex64>, dir: FftDirection) {
    let n = x.ncols();
    if n == 0 || x.nrows() == 0 {
        return;
    }
    let p = plan(n, dir);
    let buf = x.as_slice_mut().expect("standard layout");
    p.process(buf);
}

fn transform(x: ArrayView2<'_, Complex64>, dir: FftDirection) -> Array2<Complex64> {
    // Rows, then columns through a transposed copy.
    let mut a = x.as_standard_layout().into_owned();
    rows_in_place(&mut a, dir);
    let mut t = a.t().as_standard_layout().into_owned();
    rows_in_place(&mut t, dir);
    t.t().as_standard_layout().into_owned()
}

pub fn fft2(x: ArrayView2<'_, Complex64>) -> Array2<Complex64> {
    transform(x, FftDirection::Forward)
}

pub fn ifft2(y: ArrayView2<'_, Complex64>) -> Array2<Complex64> {
    let scale = 1.0 / (y.len().max(1) as f64);
    let mut x = transform(y, FftDirection::Inverse);
    x.mapv_inplace(|z| z * scale);
    x
}

pub fn fft2_real(x: ArrayView2<'_, f64>) -> Array2<Complex64> {
    let mut a = x.mapv(|v| Complex64::new(v, 0.0));
    rows_in_place(&mut a, FftDirection::Forward);
    let mut t = a.t().as_standard_layout().into_owned();
    rows_in_place(&mut t, FftDirection::Forward);
    t.t().as_standard_layout().into_owned()
}

/// Real part of the inverse transform.
pub fn ifft2_real(y: ArrayView2<'_, Complex64>) -> Array2<f64> {
    let scale = 1.0 / (y.len().max(1) as f64);
    transform(y, FftDirection::Inverse).mapv(|z| z.re * scale)
}

fn pages(x: &Array3<Complex64>, f: fn(ArrayView2<'_, Complex64>) -> Array2<Complex64>) -> Array3<Complex64> {
    let mut out = Array3::zeros(x.raw_dim());
    Zip::from(out.axis_iter_mut(Axis(0)))
        .and(x.axis_iter(Axis(0)))
        .par_for_each(|mut o, page| o.assign(&f(page)));
    out
}

/// `fft2` of every page of a `P x M x N` stack.
pub fn fft2_pages(x: &Array3<Complex64>) -> Array3<Complex64> {
    pages(x, fft2)
}

pub fn ifft2_pages(y: &Array3<Complex64>) -> Array3<Complex64> {
    pages(y, ifft2)
}

/// The `M x M` DFT matrix `exp(-2 pi j K / M)` with `K = k k^T mod M`.
pub fn dft_operator(m: usize) -> Array2<Complex64> {
    Array2::from_shape_fn((m, m), |(r, c)| {
        // Reduce in integers first so large sizes keep full phase accuracy.
        let k = ((r as u128 * c as u128) % m as u128) as f64;
        Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k / m as f64)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: &Array2<Complex64>, b: &Array2<Complex64>, tol: f64) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn operator_two_and_unitarity() {
        let u = dft_operator(2);
        let want = [1.0, 1.0, 1.0, -1.0];
        for (z, w) in u.iter().zip(want) {
            assert!((z - Complex64::new(w, 0.0)).norm() < 1e-15);
        }
        for m in [3usize, 8] {
            let u = dft_operator(m);
            let g = u.t().mapv(|z| z.conj()).dot(&u) / Complex64::new(m as f64, 0.0);
            assert!(approx(&g, &Array2::eye(m), 1e-12));
        }
    }

    #[test]
    fn impulse_and_round_trip() {
        let mut x = Array2::<Complex64>::zeros((5, 7));
        x[[0, 0]] = Complex64::new(1.0, 0.0);
        assert!(approx(&fft2(x.view()), &Array2::ones((5, 7)), 1e-14));
        let y = Array2::from_shape_fn((6, 5), |(r, c)| Complex64::new(r as f64 - c as f64, (r * c) as f64));
        assert!(approx(&ifft2(fft2(y.view()).view()), &y, 1e-12));
    }

    #[test]
    fn pages_match_single() {
        let x = Array3::from_shape_fn((3, 4, 6), |(p, r, c)| Complex64::new((p + r * c) as f64, p as f64));
        let y = fft2_pages(&x);
        for p in 0..3 {
            let single = fft2(x.index_axis(Axis(0), p));
            assert!(approx(&y.index_axis(Axis(0), p).to_owned(), &single, 1e-12));
        }
        assert!(approx(&ifft2_pages(&y).index_axis(Axis(0), 1).to_owned(), &x.index_axis(Axis(0), 1).to_owned(), 1e-12));
    }
}
