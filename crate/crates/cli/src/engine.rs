//! Method dispatch and the parallel ensemble driver.

use std::path::Path;

use anyhow::{Context, Result};
use qsd_core::coeffs::{solve_coefficients, CoefficientFields};
use qsd_core::noise::{validate_noise, NoiseReport, NoiseSampler};
use qsd_core::trajectory::{EnsembleAccumulator, EnsembleContext, Method};
use qsd_core::{closed_system, pseudomode_lindblad, quadrature_ensemble, NoiseRealization, ParameterSet, SimulationResult};
use rayon::prelude::*;

use crate::config::{coefficient_key, parameter_hash};
use crate::fieldcache;

pub const THREADS_ENV: &str = "CASCADE_QSD_THREADS";

/// Worker pool honouring `CASCADE_QSD_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}=`{v}` is not a positive integer"))?;
        anyhow::ensure!(n > 0, "{THREADS_ENV} must be at least 1");
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

/// Monte-Carlo ensemble on the current rayon pool.
///
/// Chunks are computed in parallel waves and folded in chunk order, so the
/// result does not depend on the number of workers.
pub fn run_ensemble_parallel(p: &ParameterSet, fields: &CoefficientFields) -> Result<SimulationResult> {
    let ctx = EnsembleContext::new(p, fields)?;
    let wave = 4 * rayon::current_num_threads().max(1);
    let mut total = EnsembleAccumulator::new(fields.grid().len());
    let n = ctx.n_chunks();
    let mut start = 0;
    while start < n {
        let end = (start + wave).min(n);
        let chunks: Vec<EnsembleAccumulator> = (start..end).into_par_iter().map(|c| ctx.run_chunk(c)).collect();
        for c in &chunks {
            total.merge(c);
        }
        start = end;
    }
    Ok(ctx.reduce([total], fields.warnings())?)
}

pub fn solve_fields(p: &ParameterSet, cache: Option<&Path>) -> Result<CoefficientFields> {
    let grid = p.grid()?;
    let Some(dir) = cache else {
        return Ok(solve_coefficients(p, &grid)?);
    };
    let key = coefficient_key(p);
    if let Some(f) = fieldcache::load(dir, &key)? {
        return Ok(f);
    }
    let f = solve_coefficients(p, &grid)?;
    fieldcache::store(dir, &key, &f)?;
    Ok(f)
}

/// Runs `method` and stamps the provenance hash.
pub fn simulate(p: &ParameterSet, method: Method, cache: Option<&Path>) -> Result<SimulationResult> {
    let grid = p.grid()?;
    let mut r = match method {
        Method::Qsd => run_ensemble_parallel(p, &solve_fields(p, cache)?)?,
        Method::Oracle => pseudomode_lindblad(p, &grid)?,
        Method::Closed => closed_system(p, &grid)?,
        Method::Quadrature => quadrature_ensemble(p, &grid)?,
    };
    r.provenance.parameter_hash = parameter_hash(p, method);
    Ok(r)
}

/// Samples `n_paths` realisations (trajectory indices `0..n_paths`) and checks their moments.
pub fn noise_check(p: &ParameterSet, n_paths: usize) -> Result<NoiseReport> {
    let grid = p.grid()?;
    let sampler = NoiseSampler::new(p, grid)?;
    let paths: Vec<NoiseRealization> = (0..n_paths as u64).into_par_iter().map(|k| sampler.realization(p.seed, k)).collect();
    Ok(validate_noise(&paths, p, &grid)?)
}
