//! 16-bit binary PGM images and numeric CSV matrices.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::Array2;

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

/// Write `round(clamp(x, 0, 1) * 65535)` as big-endian P5. With `square`
/// each pixel is squared first, for display.
pub fn write_pgm(path: &Path, x: &Array2<f64>, square: bool) -> io::Result<()> {
    let (m, n) = x.dim();
    let mut out = Vec::with_capacity(20 + 2 * m * n);
    write!(out, "P5\n{n} {m}\n65535\n")?;
    for &v in x.iter() {
        let v = if square { v * v } else { v };
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    fs::write(path, out)
}

pub fn write_mask_pgm(path: &Path, w: &Array2<bool>) -> io::Result<()> {
    write_pgm(path, &w.mapv(|b| if b { 1.0 } else { 0.0 }), false)
}

fn header_token<R: BufRead>(r: &mut R) -> io::Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            break;
        }
        let c = byte[0] as char;
        if c == '#' {
            let mut skip = String::new();
            r.read_line(&mut skip)?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(c);
    }
    Ok(tok)
}

/// Read a P5 image, scaled to `[0, 1]`.
pub fn read_pgm(path: &Path) -> io::Result<Array2<f64>> {
    let mut r = BufReader::new(fs::File::open(path)?);
    if header_token(&mut r)? != "P5" {
        return Err(invalid("not a binary PGM"));
    }
    let mut num = |what: &str| -> io::Result<usize> {
        header_token(&mut r)?.parse().map_err(|_| invalid(format!("bad PGM {what}")))
    };
    let (n, m, max) = (num("width")?, num("height")?, num("maxval")?);
    if max == 0 || max > 65535 {
        return Err(invalid("bad PGM maxval"));
    }
    let wide = max > 255;
    let mut raw = vec![0u8; m * n * if wide { 2 } else { 1 }];
    r.read_exact(&mut raw)?;
    let vals: Vec<f64> = if wide {
        raw.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / max as f64).collect()
    } else {
        raw.iter().map(|&b| b as f64 / max as f64).collect()
    };
    Array2::from_shape_vec((m, n), vals).map_err(|e| invalid(e.to_string()))
}

pub fn write_matrix_csv(path: &Path, x: &Array2<f64>) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in x.rows() {
        w.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()
}

pub fn read_matrix_csv(path: &Path) -> io::Result<Array2<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut vals = Vec::new();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec?;
        for f in rec.iter() {
            vals.push(f.trim().parse::<f64>().map_err(|_| invalid(format!("bad number `{f}`")))?);
        }
        rows += 1;
    }
    let cols = if rows == 0 { 0 } else { vals.len() / rows };
    Array2::from_shape_vec((rows, cols), vals).map_err(|_| invalid("ragged CSV matrix"))
}
