//! Linear QSD trajectories and their ensemble average.
//!
//! `∂_t ψ = [-iH_s + L z*_t - (L† + i y*_t) Ō_z(t) - i z*_t Ō_y(t)] ψ`, RK4 on
//! the grid with the generator at half steps built from linearly
//! interpolated noise and Ō coefficients. `H_s` is diagonal, so the stepping
//! is done in its interaction picture (`ψ = e^{-iH_s t} φ`) and the free
//! rotation is exact.
//!
//! Ensembles are reduced in a fixed order: trajectories are grouped into
//! chunks of [`CHUNK`] consecutive indices, each chunk is summed from zero in
//! index order, and chunk sums are folded in chunk order. A parallel driver
//! that keeps this order reproduces the sequential result bit for bit.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

// libm-backed float methods; redundant when std is linked (tests).
#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::{C64, I, ZERO};
use crate::coeffs::{solve_coefficients, trapezoid_weight, CoefficientFields, Panel};
use crate::error::{TrajectoryError, Warning};
use crate::model::{build_operators, initial_state, EomVariant, ParameterSet, SystemState};
use crate::noise::{NoiseRealization, NoiseSampler, TimeGrid};
use crate::observables::{concurrence_clamped, DensityMatrix4, ENSEMBLE_EIG_FLOOR};
use crate::quadrature::gauss_hermite;

/// `‖ψ‖` above which a trajectory is flagged as blown up.
pub const BLOWUP_NORM: f64 = 1e6;
pub const N_BATCHES: usize = 10;
/// Trajectories per reduction chunk.
pub const CHUNK: usize = 64;
/// Gauss–Hermite nodes per axis for [`quadrature_ensemble`].
pub const DEFAULT_QUADRATURE_NODES: usize = 20;

type M4 = [[C64; 4]; 4];

fn to_m4(m: &crate::algebra::ComplexMatrix) -> M4 {
    core::array::from_fn(|i| core::array::from_fn(|j| m[(i, j)]))
}

#[inline]
fn matvec(m: &M4, v: &SystemState) -> SystemState {
    core::array::from_fn(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2] + m[i][3] * v[3])
}

/// Ō coefficients over `O1..O5` for `(z, y)`.
type ObarPair = ([C64; 5], [C64; 5]);

/// Everything a trajectory needs that does not depend on the noise.
#[derive(Clone, Debug)]
pub struct Propagator<'a> {
    fields: &'a CoefficientFields,
    grid: TimeGrid,
    /// Diagonal of `H_s`.
    energies: [f64; 4],
    l: M4,
    basis: [M4; 5],
    ld_basis: [M4; 5],
    /// `Σ_l w_l N5(t_i,s_l) e_l` and the M5 analogue, with `z*_l = e_l·conj(z0)`.
    z_proj: Vec<(C64, C64)>,
    has_bath: bool,
}

/// Trajectory output: states at every grid node, or a blow-up flag.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryOutcome {
    pub states: Vec<SystemState>,
    /// Set when `‖ψ‖` exceeded [`BLOWUP_NORM`]; `states` then stops there.
    pub flagged: bool,
}

impl<'a> Propagator<'a> {
    pub fn new(p: &ParameterSet, fields: &'a CoefficientFields) -> Self {
        let ops = build_operators(p);
        let grid = *fields.grid();
        let basis: [M4; 5] = core::array::from_fn(|j| to_m4(&ops.basis[j]));
        let ld_basis: [M4; 5] = core::array::from_fn(|j| to_m4(&(&ops.l_dag * &ops.basis[j])));
        let energies = core::array::from_fn(|k| ops.h_s[(k, k)].re);
        let e: Vec<C64> = (0..grid.len()).map(|l| C64::new(0.0, -p.g) * C64::new(0.0, p.omega_c * grid.t(l)).exp()).collect();
        let z_proj = (0..grid.len())
            .map(|i| {
                let (n5, m5) = (fields.bar_row(Panel::N5, i), fields.bar_row(Panel::M5, i));
                let mut a = ZERO;
                let mut b = ZERO;
                for l in 0..=i {
                    let w = trapezoid_weight(i, l, grid.dt);
                    a += n5[l] * e[l] * w;
                    b += m5[l] * e[l] * w;
                }
                (a, b)
            })
            .collect();
        Self { fields, grid, energies, l: to_m4(&ops.l), basis, ld_basis, z_proj, has_bath: p.bath_strength != 0.0 }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn obar(&self, noise: &NoiseRealization, i: usize) -> ObarPair {
        let n = self.fields.big_n(i);
        let m = self.fields.big_m(i);
        let zc = noise.z0.conj();
        let (pz, qz) = self.z_proj[i];
        let mut z5 = pz * zc;
        let mut y5 = qz * zc;
        if self.has_bath {
            let (n6, m6) = (self.fields.bar_row(Panel::N6, i), self.fields.bar_row(Panel::M6, i));
            for l in 0..=i {
                let wy = noise.y_star[l] * trapezoid_weight(i, l, self.grid.dt);
                z5 += n6[l] * wy;
                y5 += m6[l] * wy;
            }
        }
        ([n[0], n[1], n[2], n[3], I * z5], [m[0], m[1], m[2], m[3], I * y5])
    }

    /// Interaction-picture generator `e^{iH_s t} (G + iH_s) e^{-iH_s t}` at time `t`.
    #[allow(clippy::needless_range_loop)]
    fn generator(&self, t: f64, oz: &[C64; 5], oy: &[C64; 5], z: C64, y: C64) -> M4 {
        let mut g = [[ZERO; 4]; 4];
        for (r, row) in g.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.l[r][c] * z;
            }
        }
        for j in 0..5 {
            let a = -oz[j];
            let b = -I * (y * oz[j] + z * oy[j]);
            for r in 0..4 {
                for c in 0..4 {
                    g[r][c] += self.ld_basis[j][r][c] * a + self.basis[j][r][c] * b;
                }
            }
        }
        for r in 0..4 {
            for c in 0..4 {
                if g[r][c] != ZERO {
                    g[r][c] *= C64::new(0.0, (self.energies[r] - self.energies[c]) * t).exp();
                }
            }
        }
        g
    }

    fn to_lab(&self, phi: &SystemState, t: f64) -> SystemState {
        core::array::from_fn(|k| phi[k] * C64::new(0.0, -self.energies[k] * t).exp())
    }

    /// RK4 over the whole grid.
    pub fn propagate(&self, psi0: &SystemState, noise: &NoiseRealization) -> Result<TrajectoryOutcome, TrajectoryError> {
        let n = self.grid.len();
        if noise.z_star.len() != n || noise.y_star.len() != n {
            return Err(crate::error::CoeffError::GridMismatch.into());
        }
        let h = self.grid.dt;
        let mut states = Vec::with_capacity(n);
        let mut psi = *psi0;
        states.push(psi);
        let t_of = |i: usize| self.grid.t(i);
        let mut cur = self.obar(noise, 0);
        for i in 0..n - 1 {
            let next = self.obar(noise, i + 1);
            let mid = (
                core::array::from_fn(|j| (cur.0[j] + next.0[j]) * 0.5),
                core::array::from_fn(|j| (cur.1[j] + next.1[j]) * 0.5),
            );
            let g0 = self.generator(t_of(i), &cur.0, &cur.1, noise.z_star[i], noise.y_star[i]);
            let gm = self.generator(
                t_of(i) + 0.5 * h,
                &mid.0,
                &mid.1,
                (noise.z_star[i] + noise.z_star[i + 1]) * 0.5,
                (noise.y_star[i] + noise.y_star[i + 1]) * 0.5,
            );
            let g1 = self.generator(t_of(i + 1), &next.0, &next.1, noise.z_star[i + 1], noise.y_star[i + 1]);
            let axpy = |a: &SystemState, b: &SystemState, s: f64| -> SystemState { core::array::from_fn(|k| a[k] + b[k] * s) };
            let k1 = matvec(&g0, &psi);
            let k2 = matvec(&gm, &axpy(&psi, &k1, 0.5 * h));
            let k3 = matvec(&gm, &axpy(&psi, &k2, 0.5 * h));
            let k4 = matvec(&g1, &axpy(&psi, &k3, h));
            psi = core::array::from_fn(|k| psi[k] + (k1[k] + (k2[k] + k3[k]) * 2.0 + k4[k]) * (h / 6.0));
            let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(TrajectoryError::NonFinite { t: self.grid.t(i + 1) });
            }
            states.push(self.to_lab(&psi, t_of(i + 1)));
            if norm > BLOWUP_NORM {
                return Ok(TrajectoryOutcome { states, flagged: true });
            }
            cur = next;
        }
        Ok(TrajectoryOutcome { states, flagged: false })
    }
}

/// One trajectory, building the noise-independent parts on the fly.
pub fn propagate(
    psi0: &SystemState,
    fields: &CoefficientFields,
    noise: &NoiseRealization,
    p: &ParameterSet,
) -> Result<TrajectoryOutcome, TrajectoryError> {
    Propagator::new(p, fields).propagate(psi0, noise)
}

/// Upper-triangle-free 4×4 sum stored row-major.
type Sum16 = [C64; 16];

/// Running sums of `|ψ⟩⟨ψ|` per output time, split into [`N_BATCHES`] batches.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleAccumulator {
    n_times: usize,
    /// `batch_sums[b * n_times + t]`
    batch_sums: Vec<Sum16>,
    batch_weights: [f64; N_BATCHES],
    batch_counts: [usize; N_BATCHES],
    flagged: usize,
}

impl EnsembleAccumulator {
    pub fn new(n_times: usize) -> Self {
        Self {
            n_times,
            batch_sums: vec![[ZERO; 16]; N_BATCHES * n_times],
            batch_weights: [0.0; N_BATCHES],
            batch_counts: [0; N_BATCHES],
            flagged: 0,
        }
    }

    /// Adds `w·|ψ_t⟩⟨ψ_t|` for every `t` into batch `k mod N_BATCHES`.
    pub fn absorb(&mut self, k: usize, states: &[SystemState], w: f64) {
        let b = k % N_BATCHES;
        for (t, psi) in states.iter().enumerate().take(self.n_times) {
            let acc = &mut self.batch_sums[b * self.n_times + t];
            for r in 0..4 {
                let a = psi[r] * w;
                for c in 0..4 {
                    acc[r * 4 + c] += a * psi[c].conj();
                }
            }
        }
        self.batch_weights[b] += w;
        self.batch_counts[b] += 1;
    }

    pub fn flag(&mut self) {
        self.flagged += 1;
    }

    /// Adds another accumulator's sums into this one.
    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.n_times, other.n_times, "accumulators on different grids");
        for (a, b) in self.batch_sums.iter_mut().zip(&other.batch_sums) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
        for b in 0..N_BATCHES {
            self.batch_weights[b] += other.batch_weights[b];
            self.batch_counts[b] += other.batch_counts[b];
        }
        self.flagged += other.flagged;
    }

    pub fn count(&self) -> usize {
        self.batch_counts.iter().sum()
    }

    pub fn flagged(&self) -> usize {
        self.flagged
    }

    pub fn batch_counts(&self) -> [usize; N_BATCHES] {
        self.batch_counts
    }

    fn batch_matrix(&self, b: usize, t: usize) -> Sum16 {
        self.batch_sums[b * self.n_times + t]
    }

    /// `Σ_b sum_b(t)`, summed in batch order.
    pub fn sum_rho(&self, t: usize) -> Sum16 {
        let mut s = [ZERO; 16];
        for b in 0..N_BATCHES {
            for (x, y) in s.iter_mut().zip(self.batch_matrix(b, t)) {
                *x += y;
            }
        }
        s
    }

    /// Averages, normalises and derives the reported scalars.
    pub fn finish(&self, times: Vec<f64>, provenance: Provenance, stderr: bool) -> Result<SimulationResult, TrajectoryError> {
        let total: f64 = self.batch_weights.iter().sum();
        if self.count() == 0 {
            return Err(if self.flagged > 0 { TrajectoryError::AllFlagged { count: self.flagged } } else { TrajectoryError::Empty });
        }
        let mut result = SimulationResult::with_capacity(provenance, self.n_times);
        let mut warned = false;
        for (t, &time) in times.iter().enumerate().take(self.n_times) {
            let raw = to_density(&self.sum_rho(t), 1.0 / total)?;
            let rho = raw.normalized();
            let c = concurrence_clamped(&rho)?;
            let min_eig = rho.min_eigenvalue()?;
            if min_eig < -ENSEMBLE_EIG_FLOOR && !warned {
                warned = true;
                result.warnings.push(Warning {
                    message: alloc::format!(
                        "ensemble estimate has eigenvalue {min_eig:.3e} at t = {time} (below -{ENSEMBLE_EIG_FLOOR}); concurrence reported for the clamped state"
                    ),
                });
            }
            let (c_err, tr_err) = if stderr { self.batch_errors(t)? } else { (0.0, 0.0) };
            result.push(time, rho, raw.trace(), c, c_err, tr_err, min_eig);
        }
        if self.flagged > 0 {
            result.warnings.push(Warning {
                message: alloc::format!("{} of {} trajectories flagged (norm above {BLOWUP_NORM:e} or non-finite) and excluded", self.flagged, self.flagged + self.count()),
            });
        }
        Ok(result)
    }

    /// Standard errors of concurrence and raw trace from the batch spread.
    fn batch_errors(&self, t: usize) -> Result<(f64, f64), TrajectoryError> {
        let mut cs = Vec::with_capacity(N_BATCHES);
        let mut trs = Vec::with_capacity(N_BATCHES);
        for b in 0..N_BATCHES {
            if self.batch_weights[b] == 0.0 {
                continue;
            }
            let raw = to_density(&self.batch_matrix(b, t), 1.0 / self.batch_weights[b])?;
            trs.push(raw.trace());
            cs.push(concurrence_clamped(&raw.normalized())?);
        }
        Ok((std_error(&cs), std_error(&trs)))
    }
}

fn std_error(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

fn to_density(s: &Sum16, scale: f64) -> Result<DensityMatrix4, TrajectoryError> {
    let m = crate::algebra::ComplexMatrix::from_vec(4, 4, s.iter().map(|z| z * scale).collect());
    Ok(DensityMatrix4::from_hermitian_part(&m)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Qsd,
    Oracle,
    Closed,
    Quadrature,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Qsd, Method::Oracle, Method::Closed, Method::Quadrature];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Qsd => "qsd",
            Method::Oracle => "oracle",
            Method::Closed => "closed",
            Method::Quadrature => "quadrature",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub method: Method,
    /// Filled in by callers that hash the full configuration.
    pub parameter_hash: String,
    pub seed: u64,
    pub n_traj: usize,
    pub eom_variant: EomVariant,
}

impl Provenance {
    pub fn new(method: Method, p: &ParameterSet) -> Self {
        Self { method, parameter_hash: String::new(), seed: p.seed, n_traj: p.n_traj, eom_variant: p.eom_variant }
    }
}

/// Reduced two-qubit dynamics on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationResult {
    pub times: Vec<f64>,
    /// Trace-normalised.
    pub rho: Vec<DensityMatrix4>,
    pub rho_raw_trace: Vec<f64>,
    pub concurrence: Vec<f64>,
    pub concurrence_stderr: Vec<f64>,
    /// Batch standard error of `rho_raw_trace` (ensemble methods).
    pub trace_stderr: Vec<f64>,
    /// Smallest eigenvalue of the normalised state.
    pub min_eig: Vec<f64>,
    pub provenance: Provenance,
    pub warnings: Vec<Warning>,
}

impl SimulationResult {
    pub fn with_capacity(provenance: Provenance, n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            rho: Vec::with_capacity(n),
            rho_raw_trace: Vec::with_capacity(n),
            concurrence: Vec::with_capacity(n),
            concurrence_stderr: Vec::with_capacity(n),
            trace_stderr: Vec::with_capacity(n),
            min_eig: Vec::with_capacity(n),
            provenance,
            warnings: Vec::new(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(&mut self, t: f64, rho: DensityMatrix4, raw_trace: f64, c: f64, c_err: f64, tr_err: f64, min_eig: f64) {
        self.times.push(t);
        self.rho.push(rho);
        self.rho_raw_trace.push(raw_trace);
        self.concurrence.push(c);
        self.concurrence_stderr.push(c_err);
        self.trace_stderr.push(tr_err);
        self.min_eig.push(min_eig);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Builds a result from exactly normalised states (oracles).
    pub fn from_states(times: Vec<f64>, states: Vec<DensityMatrix4>, provenance: Provenance) -> Result<Self, crate::error::AlgebraError> {
        let mut r = Self::with_capacity(provenance, times.len());
        for (t, rho) in times.into_iter().zip(states) {
            let tr = rho.trace();
            let c = concurrence_clamped(&rho)?;
            let e = rho.min_eigenvalue()?;
            r.push(t, rho, tr, c, 0.0, 0.0, e);
        }
        Ok(r)
    }
}

/// Shared read-only state of a QSD ensemble. Chunks can run in any order or
/// concurrently; [`EnsembleContext::reduce`] folds them in chunk order.
pub struct EnsembleContext<'a> {
    p: &'a ParameterSet,
    propagator: Propagator<'a>,
    sampler: NoiseSampler,
    psi0: SystemState,
}

impl<'a> EnsembleContext<'a> {
    pub fn new(p: &'a ParameterSet, fields: &'a CoefficientFields) -> Result<Self, TrajectoryError> {
        if p.n_traj == 0 {
            return Err(TrajectoryError::Empty);
        }
        let grid = *fields.grid();
        Ok(Self { p, propagator: Propagator::new(p, fields), sampler: NoiseSampler::new(p, grid)?, psi0: initial_state(p)? })
    }

    pub fn n_chunks(&self) -> usize {
        self.p.n_traj.div_ceil(CHUNK)
    }

    /// Trajectories `c·CHUNK ..` summed from zero in index order.
    pub fn run_chunk(&self, c: usize) -> EnsembleAccumulator {
        let mut acc = EnsembleAccumulator::new(self.propagator.grid().len());
        let end = ((c + 1) * CHUNK).min(self.p.n_traj);
        for k in c * CHUNK..end {
            let noise = self.sampler.realization(self.p.seed, k as u64);
            match self.propagator.propagate(&self.psi0, &noise) {
                Ok(out) if !out.flagged => acc.absorb(k, &out.states, 1.0),
                _ => acc.flag(),
            }
        }
        acc
    }

    /// Folds chunk accumulators (in chunk order) and finishes the result.
    pub fn reduce(&self, chunks: impl IntoIterator<Item = EnsembleAccumulator>, warnings: &[Warning]) -> Result<SimulationResult, TrajectoryError> {
        let mut total = EnsembleAccumulator::new(self.propagator.grid().len());
        for c in chunks {
            total.merge(&c);
        }
        let mut r = total.finish(self.propagator.grid().times(), Provenance::new(Method::Qsd, self.p), true)?;
        r.warnings.splice(0..0, warnings.iter().cloned());
        Ok(r)
    }
}

/// Monte-Carlo ensemble over both noises, single-threaded.
pub fn run_ensemble(p: &ParameterSet, grid: &TimeGrid) -> Result<SimulationResult, TrajectoryError> {
    let fields = solve_coefficients(p, grid)?;
    run_ensemble_with(p, &fields)
}

pub fn run_ensemble_with(p: &ParameterSet, fields: &CoefficientFields) -> Result<SimulationResult, TrajectoryError> {
    let ctx = EnsembleContext::new(p, fields)?;
    ctx.reduce((0..ctx.n_chunks()).map(|c| ctx.run_chunk(c)), fields.warnings())
}

/// Deterministic average over `z0` by tensor Gauss–Hermite quadrature (requires `Γ = 0`).
pub fn quadrature_ensemble(p: &ParameterSet, grid: &TimeGrid) -> Result<SimulationResult, TrajectoryError> {
    quadrature_ensemble_nodes(p, grid, DEFAULT_QUADRATURE_NODES)
}

pub fn quadrature_ensemble_nodes(p: &ParameterSet, grid: &TimeGrid, nodes: usize) -> Result<SimulationResult, TrajectoryError> {
    if p.bath_strength != 0.0 {
        return Err(TrajectoryError::QuadratureNeedsNoBath { gamma_strength: p.bath_strength });
    }
    let fields = solve_coefficients(p, grid)?;
    let prop = Propagator::new(p, &fields);
    let psi0 = initial_state(p)?;
    let (x, w) = gauss_hermite(nodes)?;
    let mut acc = EnsembleAccumulator::new(grid.len());
    for (a, wa) in x.iter().zip(&w) {
        for (b, wb) in x.iter().zip(&w) {
            let z0 = C64::new(*a, *b);
            let noise = NoiseRealization { z_star: crate::noise::z_path(z0, grid, p), y_star: vec![ZERO; grid.len()], z0 };
            let out = prop.propagate(&psi0, &noise)?;
            if out.flagged {
                acc.flag();
            } else {
                acc.absorb(0, &out.states, wa * wb / core::f64::consts::PI);
            }
        }
    }
    if acc.flagged() > 0 {
        return Err(TrajectoryError::AllFlagged { count: acc.flagged() });
    }
    let mut r = acc.finish(grid.times(), Provenance::new(Method::Quadrature, p), false)?;
    r.warnings.splice(0..0, fields.warnings().iter().cloned());
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InitialState;

    fn short(p: ParameterSet) -> (ParameterSet, TimeGrid) {
        let p = ParameterSet { t_max: 1.0, dt: 0.02, ..p };
        let g = p.grid().unwrap();
        (p, g)
    }

    #[test]
    fn decoupled_qubits_only_rotate() {
        let (p, grid) = short(ParameterSet { g: 0.0, initial_state: InitialState::BellPhiPlus, ..ParameterSet::default() });
        let fields = solve_coefficients(&p, &grid).unwrap();
        let psi0 = initial_state(&p).unwrap();
        let noise = NoiseSampler::new(&p, grid).unwrap().realization(3, 0);
        let out = propagate(&psi0, &fields, &noise, &p).unwrap();
        for (k, psi) in out.states.iter().enumerate() {
            let t = grid.t(k);
            // |ee⟩ picks up e^{-iω_s t}, |gg⟩ e^{+iω_s t}
            let ee = psi0[0] * C64::new(0.0, -p.omega_s * t).exp();
            let gg = psi0[3] * C64::new(0.0, p.omega_s * t).exp();
            assert!((psi[0] - ee).norm() < 1e-8 && (psi[3] - gg).norm() < 1e-8, "t={t}");
            assert!((psi[0].norm() - psi0[0].norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn accumulator_counts_and_hermiticity() {
        let mut acc = EnsembleAccumulator::new(1);
        let psi = [C64::new(0.3, 0.1), C64::new(-0.2, 0.4), ZERO, C64::new(0.5, -0.5)];
        for k in 0..23 {
            acc.absorb(k, &[psi], 1.0);
        }
        assert_eq!(acc.count(), 23);
        assert_eq!(acc.batch_counts().iter().sum::<usize>(), 23);
        let s = acc.sum_rho(0);
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(s[r * 4 + c], s[c * 4 + r].conj());
            }
        }
    }

    #[test]
    fn chunked_reduction_is_order_fixed() {
        let (p, grid) = short(ParameterSet { n_traj: 150, ..ParameterSet::default() });
        let fields = solve_coefficients(&p, &grid).unwrap();
        let ctx = EnsembleContext::new(&p, &fields).unwrap();
        let chunks: Vec<_> = (0..ctx.n_chunks()).rev().map(|c| ctx.run_chunk(c)).collect();
        let from_reversed = ctx.reduce(chunks.into_iter().rev(), fields.warnings()).unwrap();
        assert_eq!(from_reversed, run_ensemble_with(&p, &fields).unwrap());
    }

    #[test]
    fn quadrature_rejects_bath() {
        let (p, grid) = short(ParameterSet::default());
        assert!(matches!(quadrature_ensemble(&p, &grid), Err(TrajectoryError::QuadratureNeedsNoBath { .. })));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::from_name(m.name()), Some(m));
        }
    }
}
