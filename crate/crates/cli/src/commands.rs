//! Subcommand implementations. Each returns the process exit code.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qsd_core::{trace_distance, SimulationResult};
use rayon::prelude::*;

use crate::config::{dump_config, parameter_hash, parse_config, RunConfig};
use crate::csvio::{read_result, write_result, write_sweep, VERSION};
use crate::engine::{noise_check, simulate, thread_pool};

pub const EXIT_OK: i32 = 0;
/// The command ran but a check failed (threshold, noise flags, failed sweep points).
pub const EXIT_CHECK_FAILED: i32 = 1;

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

fn report_warnings(r: &SimulationResult) {
    for w in &r.warnings {
        eprintln!("warning: {}", w.message);
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

pub fn run(config: &Path, output: Option<PathBuf>, cache: Option<&Path>) -> Result<i32> {
    let c = load_config(config)?;
    let pool = thread_pool()?;
    let r = pool.install(|| simulate(&c.params, c.method, cache))?;
    report_warnings(&r);
    let path = output.or(c.output_path);
    let mut out = open_output(path.as_deref())?;
    write_result(&mut out, &r)?;
    out.flush()?;
    Ok(EXIT_OK)
}

pub fn sweep(config: &Path, output: Option<PathBuf>, cache: Option<&Path>) -> Result<i32> {
    let c = load_config(config)?;
    let Some(sw) = &c.sweep else {
        bail!("{} has no sweep block (sweep.parameter, sweep.values)", config.display());
    };
    let path = output.or(c.output_path.clone()).context("sweep needs an output path (output.path or --output)")?;
    let pool = thread_pool()?;
    let outcomes: Vec<Result<SimulationResult>> = pool.install(|| {
        sw.values.par_iter().map(|&v| simulate(&sw.parameter.apply(&c.params, v), c.method, cache)).collect()
    });

    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (&v, outcome) in sw.values.iter().zip(&outcomes) {
        match outcome {
            Ok(r) => {
                report_warnings(r);
                ok.push((v, r));
            }
            Err(e) => failures.push(format!("{} = {v:?}: {e:#}", sw.parameter.name())),
        }
    }
    ok.sort_by(|a, b| a.0.total_cmp(&b.0));
    let header = vec![
        ("generator".to_string(), format!("cascade-qsd {VERSION}")),
        ("parameter_hash".to_string(), parameter_hash(&c.params, c.method)),
        ("method".to_string(), c.method.name().to_string()),
        ("seed".to_string(), c.params.seed.to_string()),
        ("n_traj".to_string(), c.params.n_traj.to_string()),
        ("eom_variant".to_string(), c.params.eom_variant.name().to_string()),
        ("sweep_parameter".to_string(), sw.parameter.name().to_string()),
    ];
    let mut out = open_output(Some(&path))?;
    write_sweep(&mut out, &header, &ok)?;
    out.flush()?;

    let log = failure_log_path(&path);
    if failures.is_empty() {
        if log.exists() {
            std::fs::remove_file(&log)?;
        }
        return Ok(EXIT_OK);
    }
    let mut f = File::create(&log)?;
    for line in &failures {
        writeln!(f, "{line}")?;
        eprintln!("sweep point failed: {line}");
    }
    eprintln!("{} of {} sweep points failed; see {}", failures.len(), sw.values.len(), log.display());
    Ok(EXIT_CHECK_FAILED)
}

/// Sidecar log of failed sweep points next to the output file.
pub fn failure_log_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".failed.log");
    PathBuf::from(s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub max_trace_distance: f64,
    pub mean_trace_distance: f64,
    pub max_concurrence_diff: f64,
    /// Time of the largest trace distance.
    pub worst_time: f64,
}

pub fn compare_files(a: &Path, b: &Path) -> Result<Comparison> {
    let ta = read_result(BufReader::new(File::open(a).with_context(|| format!("opening {}", a.display()))?)).with_context(|| format!("reading {}", a.display()))?;
    let tb = read_result(BufReader::new(File::open(b).with_context(|| format!("opening {}", b.display()))?)).with_context(|| format!("reading {}", b.display()))?;
    if ta.times.len() != tb.times.len() {
        bail!("time grids differ: {} rows vs {} rows", ta.times.len(), tb.times.len());
    }
    for (k, (x, y)) in ta.times.iter().zip(&tb.times).enumerate() {
        if (x - y).abs() > 1e-9 * x.abs().max(1.0) {
            bail!("time grids differ at row {}: t = {x} vs t = {y}", k + 1);
        }
    }
    let mut cmp = Comparison { max_trace_distance: 0.0, mean_trace_distance: 0.0, max_concurrence_diff: 0.0, worst_time: ta.times[0] };
    for k in 0..ta.times.len() {
        let d = trace_distance(&ta.rho[k], &tb.rho[k])?;
        if d > cmp.max_trace_distance {
            cmp.max_trace_distance = d;
            cmp.worst_time = ta.times[k];
        }
        cmp.mean_trace_distance += d;
        cmp.max_concurrence_diff = cmp.max_concurrence_diff.max((ta.concurrence[k] - tb.concurrence[k]).abs());
    }
    cmp.mean_trace_distance /= ta.times.len() as f64;
    Ok(cmp)
}

pub fn compare(a: &Path, b: &Path, threshold: f64) -> Result<i32> {
    let c = compare_files(a, b)?;
    println!("max_trace_distance = {:?}", c.max_trace_distance);
    println!("mean_trace_distance = {:?}", c.mean_trace_distance);
    println!("max_concurrence_diff = {:?}", c.max_concurrence_diff);
    println!("worst_t = {:?}", c.worst_time);
    let pass = c.max_trace_distance <= threshold;
    println!("{} (threshold {threshold:?})", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

pub fn noise(config: &Path, paths: usize) -> Result<i32> {
    let c = load_config(config)?;
    let pool = thread_pool()?;
    let report = pool.install(|| noise_check(&c.params, paths))?;
    println!("paths = {}", report.n_paths);
    for ch in &report.checks {
        println!(
            "{:<14} max|dev| = {:.3e}  max z = {:.2}  1/sqrt(N) = {:.3e}  {}",
            ch.name,
            ch.max_abs_deviation,
            ch.max_sigmas,
            ch.scale,
            if ch.flagged { "FLAGGED" } else { "ok" }
        );
    }
    Ok(if report.any_flagged() { EXIT_CHECK_FAILED } else { EXIT_OK })
}

pub fn dump(config: &Path) -> Result<i32> {
    print!("{}", dump_config(&load_config(config)?));
    Ok(EXIT_OK)
}
