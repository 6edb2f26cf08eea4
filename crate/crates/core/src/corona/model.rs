//! Sum of squared deviant pixels as a function of a pupil-plane phase, with
//! its gradient and Hessian-vector products.

use ndarray::{Array2, Array3, ArrayView2, Axis, Zip};
use num_complex::Complex64;

use super::fft::{fft2_real, ifft2_real};
use crate::error::{Result, RtError};

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Debug)]
pub struct Sse {
    pub e: f64,
    pub gradient: Option<Array2<f64>>,
    pub corrected: Array2<f64>,
}

fn check(what: &str, got: (usize, usize), want: (usize, usize)) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(RtError::DimMismatch(format!(
            "{what} is {}x{}, expected {}x{}",
            got.0, got.1, want.0, want.1
        )))
    }
}

/// Background pixels plus negative foreground pixels.
fn deviant(wb: &Array2<bool>, xt: &Array2<f64>) -> Array2<bool> {
    Zip::from(wb).and(xt).map_collect(|&b, &x| b || x < 0.0)
}

fn masked(w: &Array2<bool>, x: ArrayView2<'_, f64>) -> Array2<f64> {
    Zip::from(w).and(x).map_collect(|&w, &x| if w { x } else { 0.0 })
}

/// Aberrated image in the pupil plane, cached across evaluations.
pub struct Model {
    ya: Array2<Complex64>,
    wb: Array2<bool>,
}

impl Model {
    pub fn new(xa: &Array2<f64>, wb: &Array2<bool>) -> Result<Self> {
        check("mask", wb.dim(), xa.dim())?;
        Ok(Model { ya: fft2_real(xa.view()), wb: wb.clone() })
    }

    pub fn dim(&self) -> (usize, usize) {
        self.ya.dim()
    }

    pub fn mask(&self) -> &Array2<bool> {
        &self.wb
    }

    pub fn evaluate(&self, phi: &Array2<f64>, want_gradient: bool) -> Result<Sse> {
        check("phase", phi.dim(), self.dim())?;
        let yt = Zip::from(&self.ya).and(phi).map_collect(|&y, &p| y * Complex64::from_polar(1.0, p));
        let xt = ifft2_real(yt.view());
        let w = deviant(&self.wb, &xt);
        let xe = masked(&w, xt.view());
        let gradient = want_gradient.then(|| {
            let ye = fft2_real(xe.view());
            let scale = 2.0 / xt.len() as f64;
            Zip::from(&yt).and(&ye).map_collect(|&t, &e| scale * (t.conj() * e).im)
        });
        let e = xe.iter().map(|v| v * v).sum();
        Ok(Sse { e, gradient, corrected: xt })
    }
}

/// SSE of the image `xa` corrected by `phi`, with the gradient on request.
pub fn sse(phi: &Array2<f64>, xa: &Array2<f64>, wb: &Array2<bool>, want_gradient: bool) -> Result<Sse> {
    check("phase", phi.dim(), xa.dim())?;
    Model::new(xa, wb)?.evaluate(phi, want_gradient)
}

/// Hessian of the SSE at the phase that produced corrected image `xt`.
pub struct Hessian {
    yt: Array2<Complex64>,
    ye: Array2<Complex64>,
    w: Array2<bool>,
}

impl Hessian {
    pub fn at(xt: &Array2<f64>, wb: &Array2<bool>) -> Result<Self> {
        check("mask", wb.dim(), xt.dim())?;
        let w = deviant(wb, xt);
        let ye = fft2_real(masked(&w, xt.view()).view());
        Ok(Hessian { yt: fft2_real(xt.view()), ye, w })
    }

    fn page(&self, dphi: ArrayView2<'_, f64>) -> Array2<f64> {
        let dyt = Zip::from(&self.yt).and(dphi).map_collect(|&y, &d| J * y * d);
        let dxt = ifft2_real(dyt.view());
        let dye = fft2_real(masked(&self.w, dxt.view()).view());
        let scale = 2.0 / dxt.len() as f64;
        let mut f = Array2::zeros(dxt.raw_dim());
        Zip::from(&mut f)
            .and(&dyt)
            .and(&self.ye)
            .and(&self.yt)
            .and(&dye)
            .for_each(|f, &dyt, &ye, &yt, &dye| {
                *f = scale * ((dyt.conj() * ye).im + (yt.conj() * dye).im);
            });
        f
    }

    /// Products with each `M x N` page of `dphi`, one output page each.
    pub fn apply(&self, dphi: &Array3<f64>) -> Result<Array3<f64>> {
        let (_, m, n) = dphi.dim();
        check("phase step page", (m, n), self.yt.dim())?;
        let mut out = Array3::zeros(dphi.raw_dim());
        Zip::from(out.axis_iter_mut(Axis(0)))
            .and(dphi.axis_iter(Axis(0)))
            .par_for_each(|mut o, d| o.assign(&self.page(d)));
        Ok(out)
    }

    pub fn apply_one(&self, dphi: &Array2<f64>) -> Result<Array2<f64>> {
        check("phase step", dphi.dim(), self.yt.dim())?;
        Ok(self.page(dphi.view()))
    }
}

/// Hessian-multiply: column `k` of the `MN x P` result is the Hessian times
/// the row-major vectorization of page `k` of `dphi`.
pub fn hess_mult(xt: &Array2<f64>, dphi: &Array3<f64>, wb: &Array2<bool>) -> Result<Array2<f64>> {
    let f = Hessian::at(xt, wb)?.apply(dphi)?;
    let (p, m, n) = f.dim();
    Ok(f.into_shape_with_order((p, m * n)).expect("contiguous").reversed_axes().as_standard_layout().into_owned())
}
