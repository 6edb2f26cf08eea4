use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fft::{fft2_real, ifft2_real};
use crate::error::{Result, RtError};

/// A filled disc added to the ground truth. `row` and `col` are offsets
/// from the image center.
#[derive(Clone, Debug, PartialEq)]
pub struct Planet {
    pub row: f64,
    pub col: f64,
    pub radius: f64,
    pub value: f64,
}

/// Annulus radii and planets of a synthetic scene.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneConfig {
    pub r_in: f64,
    pub r_out: f64,
    pub planets: Vec<Planet>,
}

impl SceneConfig {
    /// Annulus `0.25..0.35` of the short side, with two planets on opposite
    /// sides of its middle radius. A narrow annulus leaves more blocked
    /// pixels than free phases, which keeps small instances well posed.
    pub fn default_for(m: usize, n: usize) -> Self {
        let s = m.min(n) as f64;
        let (r_in, r_out) = (0.25 * s, 0.35 * s);
        let mid = 0.5 * (r_in + r_out);
        let radius = (0.03 * s).max(1.5);
        let (dr, dc) = (mid * (PI / 6.0).sin(), mid * (PI / 6.0).cos());
        let planet = |row, col| Planet { row, col, radius, value: 0.2 };
        SceneConfig { r_in, r_out, planets: vec![planet(-dr, dc), planet(dr, -dc)] }
    }
}

fn center(m: usize, n: usize) -> (f64, f64) {
    ((m / 2) as f64, (n / 2) as f64)
}

fn radius_map(m: usize, n: usize) -> Array2<f64> {
    let (cr, cc) = center(m, n);
    Array2::from_shape_fn((m, n), |(r, c)| (r as f64 - cr).hypot(c as f64 - cc))
}

/// Normalized diffraction pattern of a circular aperture, peak 1 at the
/// center pixel `(M/2, N/2)`.
pub fn make_source(m: usize, n: usize) -> Array2<f64> {
    let a = (m.min(n) as f64 / 16.0).max(2.0);
    let wrap = |k: usize, len: usize| if k <= len / 2 { k as f64 } else { k as f64 - len as f64 };
    let aperture = Array2::from_shape_fn((m, n), |(r, c)| {
        if wrap(r, m).hypot(wrap(c, n)) <= a {
            1.0
        } else {
            0.0
        }
    });
    let spectrum = fft2_real(aperture.view());
    let (cr, cc) = (m / 2, n / 2);
    let mut s = Array2::from_shape_fn((m, n), |(r, c)| {
        spectrum[[(r + m - cr) % m, (c + n - cc) % n]].norm_sqr()
    });
    let peak = s.fold(0.0f64, |acc, &v| acc.max(v));
    s.mapv_inplace(|v| v / peak);
    s
}

/// Ground truth `sqrt(source)` outside the occulted regions plus planets,
/// and the occultation mask (true inside `r_in` and outside `r_out`).
pub fn make_ground_truth(source: &Array2<f64>, cfg: &SceneConfig) -> Result<(Array2<f64>, Array2<bool>)> {
    let (m, n) = source.dim();
    let half = m.min(n) as f64 / 2.0;
    if !(cfg.r_in > 0.0 && cfg.r_in < cfg.r_out && cfg.r_out <= half) {
        return Err(RtError::Spec(format!(
            "annulus needs 0 < r_in < r_out <= {half}, got {} and {}",
            cfg.r_in, cfg.r_out
        )));
    }
    let radius = radius_map(m, n);
    let wb = radius.mapv(|r| r < cfg.r_in || r > cfg.r_out);
    let (cr, cc) = center(m, n);
    for (k, p) in cfg.planets.iter().enumerate() {
        let d = p.row.hypot(p.col);
        if p.radius <= 0.0 || d - p.radius < cfg.r_in || d + p.radius > cfg.r_out {
            return Err(RtError::Spec(format!("planet {k} is not inside the annulus")));
        }
        for (j, q) in cfg.planets[..k].iter().enumerate() {
            if (p.row - q.row).hypot(p.col - q.col) < p.radius + q.radius {
                return Err(RtError::Spec(format!("planets {j} and {k} overlap")));
            }
        }
    }
    let mut gt = Array2::zeros((m, n));
    Zip::indexed(&mut gt).and(source).and(&wb).for_each(|(r, c), g, &s, &blocked| {
        if blocked {
            return;
        }
        *g = s.max(0.0).sqrt();
        for p in &cfg.planets {
            if (r as f64 - cr - p.row).hypot(c as f64 - cc - p.col) <= p.radius {
                *g += p.value;
            }
        }
    });
    Ok((gt, wb))
}

/// Position paired with `(r, c)` under the real-image symmetry.
pub fn mirror(r: usize, c: usize, m: usize, n: usize) -> (usize, usize) {
    ((m - r) % m, (n - c) % n)
}

/// Random phase, uniform on `(-pi, pi)`, with `phi[mirror(p)] == -phi[p]`
/// and zero on self-paired entries.
pub fn make_aberration(m: usize, n: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phi = Array2::zeros((m, n));
    for r in 0..m {
        for c in 0..n {
            let (pr, pc) = mirror(r, c, m, n);
            if (pr, pc) > (r, c) {
                let v: f64 = rng.random_range(-PI..PI);
                phi[[r, c]] = v;
                phi[[pr, pc]] = -v;
            }
        }
    }
    phi
}

/// Image seen through phase `phi`: `real(ifft2(fft2(x) .* exp(j phi)))`.
pub fn apply_phase(x: &Array2<f64>, phi: &Array2<f64>) -> Array2<f64> {
    let mut y = fft2_real(x.view());
    Zip::from(&mut y).and(phi).for_each(|z, &p| *z *= Complex64::from_polar(1.0, p));
    ifft2_real(y.view())
}

/// A complete synthetic instance.
pub struct Scene {
    pub source: Array2<f64>,
    pub ground_truth: Array2<f64>,
    pub mask: Array2<bool>,
    pub aberration: Array2<f64>,
    pub aberrated: Array2<f64>,
}

pub fn synthesize(m: usize, n: usize, seed: u64) -> Result<Scene> {
    if m < 16 || n < 16 {
        return Err(RtError::Spec(format!("scenes need at least 16x16 pixels, got {m}x{n}")));
    }
    let source = make_source(m, n);
    let (ground_truth, mask) = make_ground_truth(&source, &SceneConfig::default_for(m, n))?;
    let aberration = make_aberration(m, n, seed);
    let aberrated = apply_phase(&ground_truth, &aberration);
    Ok(Scene { source, ground_truth, mask, aberration, aberrated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corona::fft::fft2;

    #[test]
    fn aberration_is_antisymmetric() {
        for (m, n) in [(8, 8), (7, 10), (5, 5)] {
            let phi = make_aberration(m, n, 3);
            for r in 0..m {
                for c in 0..n {
                    let (pr, pc) = mirror(r, c, m, n);
                    assert_eq!(phi[[r, c]] + phi[[pr, pc]], 0.0);
                }
            }
            assert_eq!(phi[[0, 0]], 0.0);
            assert!(phi.iter().all(|p| p.abs() < PI));
        }
    }

    #[test]
    fn symmetric_phase_keeps_images_real() {
        let x = Array2::from_shape_fn((9, 12), |(r, c)| ((r * 7 + c * 3) % 5) as f64);
        let phi = make_aberration(9, 12, 11);
        let mut y = fft2(x.mapv(|v| Complex64::new(v, 0.0)).view());
        Zip::from(&mut y).and(&phi).for_each(|z, &p| *z *= Complex64::from_polar(1.0, p));
        let back = crate::corona::fft::ifft2(y.view());
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(back.iter().all(|z| z.im.abs() <= 1e-10 * norm));
    }

    #[test]
    fn source_and_truth() {
        let s = make_source(64, 64);
        assert_eq!(s[[32, 32]], 1.0);
        assert!(s.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let cfg = SceneConfig::default_for(64, 64);
        let (gt, wb) = make_ground_truth(&s, &cfg).unwrap();
        assert!(Zip::from(&gt).and(&wb).all(|&g, &b| !b || g == 0.0));
        assert!(gt.iter().all(|&g| g >= 0.0));
        let mut bad = cfg.clone();
        bad.planets[0].row = 0.0;
        bad.planets[0].col = 1.0;
        assert!(matches!(make_ground_truth(&s, &bad), Err(RtError::Spec(_))));
        let mut twin = cfg.clone();
        twin.planets[1] = twin.planets[0].clone();
        assert!(matches!(make_ground_truth(&s, &twin), Err(RtError::Spec(_))));
    }
}
