use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rtensor::corona::io::{read_matrix_csv, read_pgm, write_mask_pgm, write_matrix_csv, write_pgm};
use rtensor::corona::{bench, check, memory, optimize, synthesize, OptOptions};

#[global_allocator]
static ALLOC: memory::CountingAlloc = memory::CountingAlloc;

#[derive(Parser)]
#[command(name = "rt-corona", about = "Coronagraph phase-aberration correction demo")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic source, ground truth, mask and aberrated image.
    Synth {
        #[arg(long, default_value_t = 401)]
        size: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Square pixel values in written images, for display.
        #[arg(long)]
        square: bool,
    },
    /// Correct the aberrated image in a `synth` directory.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-12)]
        grad_tol: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        square: bool,
    },
    /// Time SSE, gradient and Hessian-multiply at several sizes.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-difference checks of the gradient and Hessian-multiply.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

type Res = Result<(), Box<dyn std::error::Error>>;

fn synth(size: usize, seed: u64, out: &Path, square: bool) -> Res {
    let scene = synthesize(size, size, seed)?;
    fs::create_dir_all(out)?;
    write_pgm(&out.join("source.pgm"), &scene.source, square)?;
    write_pgm(&out.join("ground_truth.pgm"), &scene.ground_truth, square)?;
    write_mask_pgm(&out.join("mask.pgm"), &scene.mask)?;
    write_pgm(&out.join("aberrated.pgm"), &scene.aberrated, square)?;
    // The PGM clamps negative pixels; the solver reads this instead.
    write_matrix_csv(&out.join("aberrated.csv"), &scene.aberrated)?;
    println!("wrote {size}x{size} scene to {}", out.display());
    Ok(())
}

fn solve(input: &Path, opts: &OptOptions, out: &Path, square: bool) -> Res {
    let csv = input.join("aberrated.csv");
    let xa = if csv.exists() { read_matrix_csv(&csv)? } else { read_pgm(&input.join("aberrated.pgm"))? };
    let wb = read_pgm(&input.join("mask.pgm"))?.mapv(|v| v > 0.5);
    let report = optimize(&xa, &wb, opts)?;
    fs::create_dir_all(out)?;
    write_pgm(&out.join("corrected.pgm"), &report.corrected, square)?;
    write_matrix_csv(&out.join("phase.csv"), &report.phi)?;
    let mut w = csv::Writer::from_path(out.join("report.csv"))?;
    w.write_record(["iter", "sse", "grad_inf", "radius", "cg_iters", "step_norm", "boundary", "rho", "accepted", "secs"])?;
    for r in &report.records {
        w.write_record([
            r.iter.to_string(),
            format!("{:e}", r.sse),
            format!("{:e}", r.grad_inf),
            format!("{:e}", r.radius),
            r.cg_iters.to_string(),
            format!("{:e}", r.step_norm),
            r.boundary.to_string(),
            format!("{:e}", r.rho),
            r.accepted.to_string(),
            format!("{:.6}", r.secs),
        ])?;
    }
    w.flush()?;
    let first = report.sse.first().copied().unwrap_or(0.0);
    let last = report.sse.last().copied().unwrap_or(0.0);
    println!(
        "{} iterations ({:?}), SSE {first:e} -> {last:e}, {} Hessian pages, {:.3} s, peak {} bytes",
        report.iterations, report.stop, report.hmf_pages, report.secs, report.peak_bytes
    );
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Box<dyn std::error::Error>> {
    match cli.cmd {
        Cmd::Synth { size, seed, out, square } => synth(size, seed, &out, square)?,
        Cmd::Solve { input, max_iter, grad_tol, out, square } => {
            let opts = OptOptions { max_iter, grad_tol, ..OptOptions::default() };
            solve(&input, &opts, &out, square)?
        }
        Cmd::Bench { sizes, reps, seed, out } => {
            let sizes: Vec<(usize, usize)> = sizes.iter().map(|&s| (s, s)).collect();
            let rows = bench::benchmark(&sizes, reps, seed)?;
            bench::write_bench_csv(&out, &rows)?;
            for r in &rows {
                println!("{}x{} {:8} {:.3e} s {} bytes", r.m, r.n, r.op, r.secs, r.bytes);
            }
        }
        Cmd::Check { seed } => {
            let results = [
                check::gradient_check(seed, 20)?,
                check::hmf_check(seed, 3)?,
                check::hmf_linearity(seed)?,
            ];
            let mut ok = true;
            for r in &results {
                let verdict = if r.passed() { "PASS" } else { "FAIL" };
                println!("{verdict} {}: worst {:.3e} (tol {:.0e}, {} cases)", r.name, r.worst, r.tol, r.cases);
                ok &= r.passed();
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("rt-corona: {e}");
            ExitCode::FAILURE
        }
    }
}
