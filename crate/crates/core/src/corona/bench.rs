use std::io;
use std::path::Path;
use std::time::Instant;

use ndarray::{Array2, Array3};

use super::memory;
use super::model::{hess_mult, sse};
use super::scene::{make_aberration, synthesize};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub m: usize,
    pub n: usize,
    /// `sse`, `sse_grad` or `hmf2`.
    pub op: &'static str,
    /// Mean wall time per call.
    pub secs: f64,
    /// Peak bytes allocated by one call; zero without the counting allocator.
    pub bytes: usize,
}

fn time<T>(reps: usize, mut f: impl FnMut() -> T) -> (f64, usize) {
    f();
    let (_, bytes) = memory::measure(&mut f);
    let start = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(f());
    }
    (start.elapsed().as_secs_f64() / reps as f64, bytes)
}

/// Time the SSE alone, the SSE with its gradient, and a two-page
/// Hessian-multiply at each size.
pub fn benchmark(sizes: &[(usize, usize)], reps: usize, seed: u64) -> Result<Vec<BenchRow>> {
    let reps = reps.max(1);
    let mut rows = Vec::with_capacity(3 * sizes.len());
    for &(m, n) in sizes {
        let scene = synthesize(m, n, seed)?;
        let (xa, wb) = (&scene.aberrated, &scene.mask);
        let phi = Array2::zeros((m, n));
        let xt = sse(&phi, xa, wb, false)?.corrected;
        let mut dphi = Array3::zeros((2, m, n));
        for p in 0..2 {
            dphi.index_axis_mut(ndarray::Axis(0), p).assign(&make_aberration(m, n, seed + 1 + p as u64));
        }
        let (s, b) = time(reps, || sse(&phi, xa, wb, false));
        rows.push(BenchRow { m, n, op: "sse", secs: s, bytes: b });
        let (s, b) = time(reps, || sse(&phi, xa, wb, true));
        rows.push(BenchRow { m, n, op: "sse_grad", secs: s, bytes: b });
        let (s, b) = time(reps, || hess_mult(&xt, &dphi, wb));
        rows.push(BenchRow { m, n, op: "hmf2", secs: s, bytes: b });
    }
    Ok(rows)
}

pub fn write_bench_csv(path: &Path, rows: &[BenchRow]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["M", "N", "op", "secs", "bytes"])?;
    for r in rows {
        w.write_record([r.m.to_string(), r.n.to_string(), r.op.to_string(), format!("{:e}", r.secs), r.bytes.to_string()])?;
    }
    w.flush()
}
