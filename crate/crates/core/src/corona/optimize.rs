//! Trust-region Newton-CG (Steihaug) over the phase.

use std::time::Instant;

use ndarray::{Array2, Zip};

use super::memory;
use super::model::{Hessian, Model};
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct OptOptions {
    pub max_iter: usize,
    /// Stop once the largest gradient entry is at most this.
    pub grad_tol: f64,
    pub max_cg: usize,
    pub initial_radius: f64,
    pub max_radius: f64,
    /// Radius below which the region is considered collapsed.
    pub min_radius: f64,
}

impl Default for OptOptions {
    fn default() -> Self {
        OptOptions {
            max_iter: 200,
            grad_tol: 1e-12,
            max_cg: 50,
            initial_radius: 1.0,
            max_radius: 1e4,
            min_radius: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    GradientTol,
    MaxIter,
    RadiusCollapse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub sse: f64,
    pub grad_inf: f64,
    pub radius: f64,
    pub cg_iters: usize,
    pub step_norm: f64,
    /// The CG step stopped on the trust-region boundary.
    pub boundary: bool,
    pub rho: f64,
    pub accepted: bool,
    pub secs: f64,
}

#[derive(Clone, Debug)]
pub struct OptReport {
    pub iterations: usize,
    /// SSE at the start and after each accepted step.
    pub sse: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub records: Vec<IterRecord>,
    pub hmf_pages: usize,
    pub peak_bytes: usize,
    pub secs: f64,
    pub stop: StopReason,
    pub phi: Array2<f64>,
    pub corrected: Array2<f64>,
}

fn dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, &x, &y| acc + x * y)
}

fn inf_norm(a: &Array2<f64>) -> f64 {
    a.fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Largest `tau >= 0` with `|z + tau d| = radius`.
fn to_boundary(z: &Array2<f64>, d: &Array2<f64>, radius: f64) -> f64 {
    let (a, b, c) = (dot(d, d), 2.0 * dot(z, d), dot(z, z) - radius * radius);
    (-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a)
}

struct Step {
    p: Array2<f64>,
    /// Hessian times `p`.
    hp: Array2<f64>,
    boundary: bool,
    iters: usize,
}

fn steihaug(g: &Array2<f64>, h: &Hessian, radius: f64, max_cg: usize) -> Result<Step> {
    let gnorm = dot(g, g).sqrt();
    let tol = gnorm.sqrt().min(0.5) * gnorm;
    let mut z = Array2::zeros(g.raw_dim());
    let mut hz = Array2::zeros(g.raw_dim());
    let mut r = g.clone();
    let mut d = g.mapv(|v| -v);
    let mut rr = dot(&r, &r);
    for k in 0..max_cg {
        let hd = h.apply_one(&d)?;
        let dhd = dot(&d, &hd);
        let alpha = rr / dhd;
        if dhd <= 0.0 || dot(&z, &z) + 2.0 * alpha * dot(&z, &d) + alpha * alpha * dot(&d, &d) >= radius * radius {
            let tau = to_boundary(&z, &d, radius);
            z.scaled_add(tau, &d);
            hz.scaled_add(tau, &hd);
            return Ok(Step { p: z, hp: hz, boundary: true, iters: k + 1 });
        }
        z.scaled_add(alpha, &d);
        hz.scaled_add(alpha, &hd);
        r.scaled_add(alpha, &hd);
        let rr_next = dot(&r, &r);
        if rr_next.sqrt() < tol {
            return Ok(Step { p: z, hp: hz, boundary: false, iters: k + 1 });
        }
        d *= rr_next / rr;
        d -= &r;
        rr = rr_next;
    }
    Ok(Step { p: z, hp: hz, boundary: false, iters: max_cg })
}

/// Minimize the SSE of `xa` under mask `wb`, starting from a zero phase.
pub fn optimize(xa: &Array2<f64>, wb: &Array2<bool>, opts: &OptOptions) -> Result<OptReport> {
    let (report, bytes) = memory::measure(|| run(xa, wb, opts));
    let mut report = report?;
    report.peak_bytes = bytes;
    Ok(report)
}

fn run(xa: &Array2<f64>, wb: &Array2<bool>, opts: &OptOptions) -> Result<OptReport> {
    let start = Instant::now();
    let model = Model::new(xa, wb)?;
    let mut phi = Array2::zeros(xa.raw_dim());
    let mut cur = model.evaluate(&phi, true)?;
    let mut radius = opts.initial_radius;
    let mut report = OptReport {
        iterations: 0,
        sse: vec![cur.e],
        grad_norms: Vec::new(),
        records: Vec::new(),
        hmf_pages: 0,
        peak_bytes: 0,
        secs: 0.0,
        stop: StopReason::MaxIter,
        phi: Array2::zeros(xa.raw_dim()),
        corrected: Array2::zeros(xa.raw_dim()),
    };
    loop {
        let g = cur.gradient.take().expect("gradient requested");
        let g_inf = inf_norm(&g);
        report.grad_norms.push(g_inf);
        if g_inf <= opts.grad_tol {
            report.stop = StopReason::GradientTol;
            break;
        }
        if report.iterations >= opts.max_iter {
            report.stop = StopReason::MaxIter;
            break;
        }
        if radius < opts.min_radius {
            report.stop = StopReason::RadiusCollapse;
            break;
        }
        report.iterations += 1;
        let h = Hessian::at(&cur.corrected, model.mask())?;
        let step = steihaug(&g, &h, radius, opts.max_cg)?;
        report.hmf_pages += step.iters;
        let predicted = -(dot(&g, &step.p) + 0.5 * dot(&step.p, &step.hp));
        let trial_phi = &phi + &step.p;
        let trial = model.evaluate(&trial_phi, true)?;
        let actual = cur.e - trial.e;
        let rho = if predicted > 0.0 { actual / predicted } else { f64::NEG_INFINITY };
        let accepted = actual > 0.0;
        if rho < 0.25 {
            radius *= 0.25;
        } else if rho > 0.75 && step.boundary {
            radius = (2.0 * radius).min(opts.max_radius);
        }
        report.records.push(IterRecord {
            iter: report.iterations,
            sse: if accepted { trial.e } else { cur.e },
            grad_inf: g_inf,
            radius,
            cg_iters: step.iters,
            step_norm: dot(&step.p, &step.p).sqrt(),
            boundary: step.boundary,
            rho,
            accepted,
            secs: start.elapsed().as_secs_f64(),
        });
        if accepted {
            phi = trial_phi;
            cur = trial;
            report.sse.push(cur.e);
        } else {
            cur.gradient = Some(g);
            report.grad_norms.pop();
        }
    }
    report.secs = start.elapsed().as_secs_f64();
    report.phi = phi;
    report.corrected = cur.corrected;
    Ok(report)
}
