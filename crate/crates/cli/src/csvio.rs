//! RESULT and sweep CSV files.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so reading
//! a file back gives bit-identical values.

use std::io::{BufRead, Write};

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use qsd_core::algebra::ComplexMatrix;
use qsd_core::{DensityMatrix4, SimulationResult};

use crate::config::format_real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Upper-triangle index pairs in column order.
pub fn upper_pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..4).flat_map(|i| (i..4).map(move |j| (i, j)))
}

pub fn result_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for (i, j) in upper_pairs() {
        h.push(format!("rho_re_{i}_{j}"));
        h.push(format!("rho_im_{i}_{j}"));
    }
    h.extend(["trace_raw", "concurrence", "concurrence_stderr", "min_eig"].map(String::from));
    h
}

/// `# key = value` provenance lines.
pub fn provenance_lines(r: &SimulationResult) -> Vec<(String, String)> {
    let p = &r.provenance;
    vec![
        ("generator".into(), format!("cascade-qsd {VERSION}")),
        ("parameter_hash".into(), p.parameter_hash.clone()),
        ("method".into(), p.method.name().into()),
        ("seed".into(), p.seed.to_string()),
        ("n_traj".into(), p.n_traj.to_string()),
        ("eom_variant".into(), p.eom_variant.name().into()),
    ]
}

pub fn write_result<W: Write>(mut out: W, r: &SimulationResult) -> Result<()> {
    for (k, v) in provenance_lines(r) {
        writeln!(out, "# {k} = {v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(result_header())?;
    for k in 0..r.len() {
        let mut row = Vec::with_capacity(25);
        row.push(format_real(r.times[k]));
        for (i, j) in upper_pairs() {
            let z = r.rho[k].get(i, j);
            row.push(format_real(z.re));
            row.push(format_real(z.im));
        }
        row.push(format_real(r.rho_raw_trace[k]));
        row.push(format_real(r.concurrence[k]));
        row.push(format_real(r.concurrence_stderr[k]));
        row.push(format_real(r.min_eig[k]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Contents of a RESULT CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub provenance: Vec<(String, String)>,
    pub times: Vec<f64>,
    pub rho: Vec<DensityMatrix4>,
    pub trace_raw: Vec<f64>,
    pub concurrence: Vec<f64>,
    pub concurrence_stderr: Vec<f64>,
    pub min_eig: Vec<f64>,
}

pub fn read_result<R: BufRead>(mut input: R) -> Result<ResultTable> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let provenance = text
        .lines()
        .filter_map(|l| l.strip_prefix('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    let col = |name: &str| header.iter().position(|h| h == name).with_context(|| format!("missing column `{name}`"));
    let t_col = col("t")?;
    let pair_cols: Vec<(usize, usize, usize, usize)> = upper_pairs()
        .map(|(i, j)| Ok((i, j, col(&format!("rho_re_{i}_{j}"))?, col(&format!("rho_im_{i}_{j}"))?)))
        .collect::<Result<_>>()?;
    let (tr_col, c_col, e_col, m_col) = (col("trace_raw")?, col("concurrence")?, col("concurrence_stderr")?, col("min_eig")?);

    let mut table = ResultTable {
        provenance,
        times: vec![],
        rho: vec![],
        trace_raw: vec![],
        concurrence: vec![],
        concurrence_stderr: vec![],
        min_eig: vec![],
    };
    for (n, rec) in rd.records().enumerate() {
        let rec = rec?;
        let num = |c: usize| -> Result<f64> {
            let s = rec.get(c).unwrap_or("");
            s.parse().with_context(|| format!("data row {}: `{s}` in column `{}` is not a number", n + 1, header[c]))
        };
        table.times.push(num(t_col)?);
        let mut m = ComplexMatrix::zeros(4, 4);
        for &(i, j, re, im) in &pair_cols {
            let z = Complex64::new(num(re)?, num(im)?);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        table.rho.push(DensityMatrix4::new(m).with_context(|| format!("data row {}", n + 1))?);
        table.trace_raw.push(num(tr_col)?);
        table.concurrence.push(num(c_col)?);
        table.concurrence_stderr.push(num(e_col)?);
        table.min_eig.push(num(m_col)?);
    }
    if table.times.is_empty() {
        bail!("no data rows");
    }
    Ok(table)
}

pub const SWEEP_HEADER: [&str; 5] = ["sweep_value", "t", "concurrence", "concurrence_stderr", "trace_raw"];

/// Long-format sweep file: rows ordered by sweep value, then time.
pub fn write_sweep<W: Write>(mut out: W, header: &[(String, String)], points: &[(f64, &SimulationResult)]) -> Result<()> {
    for (k, v) in header {
        writeln!(out, "# {k} = {v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for (value, r) in points {
        for k in 0..r.len() {
            w.write_record([
                format_real(*value),
                format_real(r.times[k]),
                format_real(r.concurrence[k]),
                format_real(r.concurrence_stderr[k]),
                format_real(r.rho_raw_trace[k]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rows of a sweep file as `(sweep_value, t, concurrence, concurrence_stderr, trace_raw)`.
pub fn read_sweep<R: BufRead>(input: R) -> Result<Vec<[f64; 5]>> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    if header != SWEEP_HEADER {
        bail!("unexpected sweep header {header:?}");
    }
    rd.records()
        .map(|rec| {
            let rec = rec?;
            let mut row = [0.0; 5];
            for (k, v) in row.iter_mut().enumerate() {
                *v = rec.get(k).unwrap_or("").parse().context("non-numeric sweep field")?;
            }
            Ok(row)
        })
        .collect()
}
