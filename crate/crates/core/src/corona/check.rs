//! Finite-difference checks of the gradient and Hessian-multiply.

use ndarray::{Array2, Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{hess_mult, sse};
use super::scene::{apply_phase, make_aberration, mirror};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub worst: f64,
    pub tol: f64,
    pub cases: usize,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.cases > 0 && self.worst <= self.tol
    }
}

/// An `m x n` instance: a bright square in a blocked frame, aberrated.
pub fn small_instance(m: usize, n: usize, seed: u64) -> (Array2<f64>, Array2<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wb = Array2::from_shape_fn((m, n), |(r, c)| r < m / 4 || r >= m - m / 4 || c < n / 4 || c >= n - n / 4);
    let gt = wb.mapv(|b| if b { 0.0 } else { rng.random_range(0.2..1.0) });
    (apply_phase(&gt, &make_aberration(m, n, seed ^ 0x5eed)), wb)
}

/// Random direction obeying the phase symmetry.
pub fn symmetric_direction(m: usize, n: usize, rng: &mut impl Rng) -> Array2<f64> {
    let mut d = Array2::zeros((m, n));
    for r in 0..m {
        for c in 0..n {
            let (pr, pc) = mirror(r, c, m, n);
            if (pr, pc) > (r, c) {
                let v: f64 = rng.random_range(-1.0..1.0);
                d[[r, c]] = v;
                d[[pr, pc]] = -v;
            }
        }
    }
    d
}

fn deviant(xt: &Array2<f64>, wb: &Array2<bool>) -> Array2<bool> {
    ndarray::Zip::from(wb).and(xt).map_collect(|&b, &x| b || x < 0.0)
}

/// True when the deviant-pixel set is the same at `phi - eps d` and
/// `phi + eps d` as at `phi`.
fn smooth_along(phi: &Array2<f64>, d: &Array2<f64>, eps: f64, xa: &Array2<f64>, wb: &Array2<bool>) -> Result<bool> {
    let at = |s: f64| -> Result<Array2<bool>> {
        let p = phi + &(d * s);
        Ok(deviant(&sse(&p, xa, wb, false)?.corrected, wb))
    };
    let mid = at(0.0)?;
    Ok(at(eps)? == mid && at(-eps)? == mid)
}

/// Central differences of the SSE along `directions` random directions.
pub fn gradient_check(seed: u64, directions: usize) -> Result<CheckResult> {
    let (m, n, eps) = (8, 8, 1e-5);
    let (xa, wb) = small_instance(m, n, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let phi = symmetric_direction(m, n, &mut rng) * 0.3;
    let g = sse(&phi, &xa, &wb, true)?.gradient.expect("requested");
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for _ in 0..directions * 10 {
        if cases == directions {
            break;
        }
        let d = symmetric_direction(m, n, &mut rng);
        if !smooth_along(&phi, &d, eps, &xa, &wb)? {
            continue;
        }
        let plus = sse(&(&phi + &(&d * eps)), &xa, &wb, false)?.e;
        let minus = sse(&(&phi - &(&d * eps)), &xa, &wb, false)?.e;
        let fd = (plus - minus) / (2.0 * eps);
        let exact = (&g * &d).sum();
        worst = worst.max((fd - exact).abs() / exact.abs().max(1e-300));
        cases += 1;
    }
    Ok(CheckResult { name: "gradient", worst, tol: 1e-6, cases })
}

/// Hessian-multiply against central differences of the gradient, `pages`
/// directions at once.
pub fn hmf_check(seed: u64, pages: usize) -> Result<CheckResult> {
    let (m, n, eps) = (8, 8, 1e-5);
    let (xa, wb) = small_instance(m, n, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let phi = symmetric_direction(m, n, &mut rng) * 0.3;
    let xt = sse(&phi, &xa, &wb, false)?.corrected;
    let mut dirs = Vec::new();
    for _ in 0..pages * 10 {
        if dirs.len() == pages {
            break;
        }
        let d = symmetric_direction(m, n, &mut rng);
        if smooth_along(&phi, &d, eps, &xa, &wb)? {
            dirs.push(d);
        }
    }
    let mut dphi = Array3::zeros((dirs.len(), m, n));
    for (k, d) in dirs.iter().enumerate() {
        dphi.index_axis_mut(Axis(0), k).assign(d);
    }
    let f = hess_mult(&xt, &dphi, &wb)?;
    let mut worst: f64 = 0.0;
    for (k, d) in dirs.iter().enumerate() {
        let gp = sse(&(&phi + &(d * eps)), &xa, &wb, true)?.gradient.expect("requested");
        let gm = sse(&(&phi - &(d * eps)), &xa, &wb, true)?.gradient.expect("requested");
        let fd = (gp - gm) / (2.0 * eps);
        let col = f.column(k);
        let scale = col.fold(0.0f64, |a, v| a.max(v.abs()));
        let err = fd.iter().zip(col.iter()).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        worst = worst.max(err / scale.max(1e-300));
    }
    Ok(CheckResult { name: "hmf", worst, tol: 1e-5, cases: dirs.len() })
}

/// Relative deviation of `F(a d1 + b d2)` from `a F(d1) + b F(d2)`.
pub fn hmf_linearity(seed: u64) -> Result<CheckResult> {
    let (m, n) = (8, 8);
    let (xa, wb) = small_instance(m, n, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
    let xt = sse(&Array2::zeros((m, n)), &xa, &wb, false)?.corrected;
    let (d1, d2) = (symmetric_direction(m, n, &mut rng), symmetric_direction(m, n, &mut rng));
    let (a, b) = (1.7, -0.6);
    let mut dphi = Array3::zeros((3, m, n));
    dphi.index_axis_mut(Axis(0), 0).assign(&d1);
    dphi.index_axis_mut(Axis(0), 1).assign(&d2);
    dphi.index_axis_mut(Axis(0), 2).assign(&(&d1 * a + &d2 * b));
    let f = hess_mult(&xt, &dphi, &wb)?;
    let combo = &f.column(0) * a + &f.column(1) * b;
    let scale = combo.fold(0.0f64, |acc, v| acc.max(v.abs()));
    let err = combo.iter().zip(f.column(2).iter()).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
    Ok(CheckResult { name: "hmf_linearity", worst: err / scale.max(1e-300), tol: 1e-12, cases: 1 })
}
