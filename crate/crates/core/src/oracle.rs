//! Reference solutions that do not go through the O-operator hierarchy.
//!
//! * Pseudomode master equation: the cavity couples to one damped bosonic
//!   mode `c` (frequency 0, coupling `λ = g√(Γγ/2)`, decay rate `2γ`), whose
//!   vacuum correlation `λ² e^{-γ|t-s|}` equals the cavity's bath correlation
//!   `g²β(t,s)`. Exact for this zero-temperature, excitation-conserving model.
//! * Closed qubits⊗cavity evolution for `Γ = 0`, by exact exponential.
//!
//! Hilbert space order is qubits ⊗ cavity ⊗ pseudomode.

use alloc::vec;
use alloc::vec::Vec;

// libm-backed float methods; redundant when std is linked (tests).
#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::{herm_eig, kron, unitary_evolution, ComplexMatrix, C64, I, ONE, ZERO};
use crate::error::OracleError;
use crate::model::{build_operators, initial_state, max_excitations, ParameterSet, EXCITATIONS};
use crate::noise::TimeGrid;
use crate::observables::DensityMatrix4;
use crate::trajectory::{Method, Provenance, SimulationResult};

/// Internal RK4 steps per grid step.
pub const ORACLE_SUBSTEPS: usize = 4;
/// Population allowed above the initial excitation number.
pub const LEAKAGE_TOL: f64 = 1e-8;

fn annihilation(cutoff: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(cutoff + 1, cutoff + 1);
    for n in 1..=cutoff {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

fn number(cutoff: usize) -> ComplexMatrix {
    ComplexMatrix::from_real_diag(&(0..=cutoff).map(|n| n as f64).collect::<Vec<_>>())
}

/// Row-compressed sparse matrix for the few fixed operators of the master equation.
#[derive(Clone, Debug)]
struct Sparse {
    n: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl Sparse {
    fn from_dense(m: &ComplexMatrix) -> Self {
        let mut entries = Vec::new();
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                if m[(r, c)] != ZERO {
                    entries.push((r, c, m[(r, c)]));
                }
            }
        }
        Self { n: m.rows(), entries }
    }

    /// `out += s·(self · x)`
    fn mul_left_into(&self, x: &[C64], s: C64, out: &mut [C64]) {
        let n = self.n;
        for &(r, k, v) in &self.entries {
            let f = v * s;
            let (dst, src) = (&mut out[r * n..(r + 1) * n], &x[k * n..(k + 1) * n]);
            for (d, a) in dst.iter_mut().zip(src) {
                *d += f * a;
            }
        }
    }

    /// `out += s·(x · self†)`
    fn mul_right_adjoint_into(&self, x: &[C64], s: C64, out: &mut [C64]) {
        let n = self.n;
        for &(c, k, v) in &self.entries {
            let f = v.conj() * s;
            for r in 0..n {
                out[r * n + c] += x[r * n + k] * f;
            }
        }
    }
}

/// Excitation number of each basis state of qubits ⊗ cavity ⊗ pseudomode.
fn excitation_numbers(nc: usize, np: usize) -> Vec<usize> {
    let mut v = Vec::with_capacity(4 * (nc + 1) * (np + 1));
    for q in EXCITATIONS {
        for a in 0..=nc {
            for c in 0..=np {
                v.push(q + a + c);
            }
        }
    }
    v
}

/// `Tr_env` of a matrix on qubits ⊗ env with `env_dim` environment states.
pub fn partial_trace_env(rho: &[C64], env_dim: usize) -> ComplexMatrix {
    let n = 4 * env_dim;
    let mut out = ComplexMatrix::zeros(4, 4);
    for q1 in 0..4 {
        for q2 in 0..4 {
            let mut s = ZERO;
            for e in 0..env_dim {
                s += rho[(q1 * env_dim + e) * n + q2 * env_dim + e];
            }
            out[(q1, q2)] = s;
        }
    }
    out
}

/// Full record of a pseudomode run, for diagnostics beyond the reduced state.
#[derive(Clone, Debug)]
pub struct PseudomodeTrace {
    pub reduced: Vec<ComplexMatrix>,
    /// Trace of the full density matrix.
    pub full_trace: Vec<f64>,
    /// `⟨n_A + n_B + a†a + c†c⟩`.
    pub excitations: Vec<f64>,
    /// Population of states with more excitations than the initial state.
    pub leakage: Vec<f64>,
    pub final_state: ComplexMatrix,
    pub cutoffs: (usize, usize),
}

/// Integrates the pseudomode master equation with `substeps` RK4 steps per grid step.
pub fn pseudomode_evolve(p: &ParameterSet, grid: &TimeGrid, substeps: usize) -> Result<PseudomodeTrace, OracleError> {
    p.validate()?;
    let psi0 = initial_state(p)?;
    let n0 = max_excitations(&psi0);
    let nc = p.fock_cutoff_cavity.max(n0);
    let np = p.fock_cutoff_pseudomode.max(n0);
    let (dc, dp) = (nc + 1, np + 1);
    let env = dc * dp;
    let dim = 4 * env;

    let ops = build_operators(p);
    let i4 = ComplexMatrix::identity(4);
    let ic = ComplexMatrix::identity(dc);
    let ip = ComplexMatrix::identity(dp);
    let a = kron(&kron(&i4, &annihilation(nc)), &ip);
    let c = kron(&kron(&i4, &ic), &annihilation(np));
    let l = kron(&kron(&ops.l, &ic), &ip);
    let a_dag = a.adjoint();
    let c_dag = c.adjoint();
    let lambda = p.g * (0.5 * p.bath_strength * p.bath_rate).sqrt();
    let rate = 2.0 * p.bath_rate;

    let mut h = kron(&kron(&ops.h_s, &ic), &ip);
    h.add_scaled(C64::new(p.omega_c, 0.0), &kron(&kron(&i4, &number(nc)), &ip));
    h.add_scaled(C64::new(p.g, 0.0), &(&(&l * &a_dag) + &(&l.adjoint() * &a)));
    h.add_scaled(C64::new(lambda, 0.0), &(&(&a * &c_dag) + &(&a_dag * &c)));
    let mut h_eff = h;
    h_eff.add_scaled(C64::new(0.0, -0.5 * rate), &(&c_dag * &c));
    let h_eff = Sparse::from_dense(&h_eff);
    let c_sp = Sparse::from_dense(&c);

    // dρ = Y + Y† + rate·cρc†,  Y = -i H_eff ρ
    let mut y = vec![ZERO; dim * dim];
    let mut x = vec![ZERO; dim * dim];
    let mut rhs = |rho: &[C64], out: &mut [C64]| {
        y.iter_mut().for_each(|v| *v = ZERO);
        h_eff.mul_left_into(rho, -I, &mut y);
        for r in 0..dim {
            for s in 0..dim {
                out[r * dim + s] = y[r * dim + s] + y[s * dim + r].conj();
            }
        }
        if rate != 0.0 {
            x.iter_mut().for_each(|v| *v = ZERO);
            c_sp.mul_left_into(rho, ONE, &mut x);
            c_sp.mul_right_adjoint_into(&x, C64::new(rate, 0.0), out);
        }
    };

    let mut full0 = vec![ZERO; dim];
    for q in 0..4 {
        full0[q * env] = psi0[q];
    }
    let mut rho = vec![ZERO; dim * dim];
    for r in 0..dim {
        for s in 0..dim {
            rho[r * dim + s] = full0[r] * full0[s].conj();
        }
    }

    let exc = excitation_numbers(nc, np);
    let mut trace = PseudomodeTrace {
        reduced: Vec::with_capacity(grid.len()),
        full_trace: Vec::with_capacity(grid.len()),
        excitations: Vec::with_capacity(grid.len()),
        leakage: Vec::with_capacity(grid.len()),
        final_state: ComplexMatrix::zeros(0, 0),
        cutoffs: (nc, np),
    };
    let record = |rho: &[C64], trace: &mut PseudomodeTrace| -> Result<(), OracleError> {
        let mut tr = 0.0;
        let mut ex = 0.0;
        let mut leak = 0.0;
        for (k, &e) in exc.iter().enumerate() {
            let pop = rho[k * dim + k].re;
            tr += pop;
            ex += pop * e as f64;
            if e > n0 {
                leak += pop;
            }
        }
        if leak > LEAKAGE_TOL {
            return Err(OracleError::CutoffLeakage { leakage: leak });
        }
        trace.reduced.push(partial_trace_env(rho, env));
        trace.full_trace.push(tr);
        trace.excitations.push(ex);
        trace.leakage.push(leak);
        Ok(())
    };
    record(&rho, &mut trace)?;

    let h = grid.dt / substeps as f64;
    let mut k1 = vec![ZERO; dim * dim];
    let mut k2 = vec![ZERO; dim * dim];
    let mut k3 = vec![ZERO; dim * dim];
    let mut k4 = vec![ZERO; dim * dim];
    let mut tmp = vec![ZERO; dim * dim];
    for _ in 0..grid.n_steps {
        for _ in 0..substeps {
            rhs(&rho, &mut k1);
            for ((t, r), k) in tmp.iter_mut().zip(&rho).zip(&k1) {
                *t = r + k * (0.5 * h);
            }
            rhs(&tmp, &mut k2);
            for ((t, r), k) in tmp.iter_mut().zip(&rho).zip(&k2) {
                *t = r + k * (0.5 * h);
            }
            rhs(&tmp, &mut k3);
            for ((t, r), k) in tmp.iter_mut().zip(&rho).zip(&k3) {
                *t = r + k * h;
            }
            rhs(&tmp, &mut k4);
            for (i, r) in rho.iter_mut().enumerate() {
                *r += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        record(&rho, &mut trace)?;
    }
    trace.final_state = ComplexMatrix::from_vec(dim, dim, rho);
    Ok(trace)
}

/// Reduced two-qubit dynamics from the pseudomode master equation.
pub fn pseudomode_lindblad(p: &ParameterSet, grid: &TimeGrid) -> Result<SimulationResult, OracleError> {
    pseudomode_lindblad_substeps(p, grid, ORACLE_SUBSTEPS)
}

pub fn pseudomode_lindblad_substeps(p: &ParameterSet, grid: &TimeGrid, substeps: usize) -> Result<SimulationResult, OracleError> {
    let tr = pseudomode_evolve(p, grid, substeps)?;
    let states = tr.reduced.iter().map(DensityMatrix4::from_hermitian_part).collect::<Result<Vec<_>, _>>()?;
    Ok(SimulationResult::from_states(grid.times(), states, Provenance::new(Method::Oracle, p))?)
}

/// Pure-state record of a closed-system run.
#[derive(Clone, Debug)]
pub struct ClosedTrace {
    pub reduced: Vec<ComplexMatrix>,
    /// `⟨H⟩` at each grid time.
    pub energy: Vec<f64>,
}

pub fn closed_evolve(p: &ParameterSet, grid: &TimeGrid) -> Result<ClosedTrace, OracleError> {
    p.validate()?;
    if p.bath_strength != 0.0 {
        return Err(OracleError::NeedsNoBath { gamma_strength: p.bath_strength });
    }
    let psi0 = initial_state(p)?;
    let nc = p.fock_cutoff_cavity.max(max_excitations(&psi0));
    let dc = nc + 1;
    let dim = 4 * dc;
    let ops = build_operators(p);
    let ic = ComplexMatrix::identity(dc);
    let a = kron(&ComplexMatrix::identity(4), &annihilation(nc));
    let l = kron(&ops.l, &ic);
    let mut h = kron(&ops.h_s, &ic);
    h.add_scaled(C64::new(p.omega_c, 0.0), &kron(&ComplexMatrix::identity(4), &number(nc)));
    h.add_scaled(C64::new(p.g, 0.0), &(&(&l * &a.adjoint()) + &(&l.adjoint() * &a)));
    let eig = herm_eig(&h.hermitian_part())?;

    let mut full0 = vec![ZERO; dim];
    for q in 0..4 {
        full0[q * dc] = psi0[q];
    }
    let mut out = ClosedTrace { reduced: Vec::with_capacity(grid.len()), energy: Vec::with_capacity(grid.len()) };
    for k in 0..grid.len() {
        let u = unitary_evolution(&eig, grid.t(k));
        let psi = u.mul_vec(&full0);
        let hpsi = h.mul_vec(&psi);
        out.energy.push(psi.iter().zip(&hpsi).map(|(a, b)| a.conj() * b).sum::<C64>().re);
        let mut rho = vec![ZERO; dim * dim];
        for r in 0..dim {
            for s in 0..dim {
                rho[r * dim + s] = psi[r] * psi[s].conj();
            }
        }
        out.reduced.push(partial_trace_env(&rho, dc));
    }
    Ok(out)
}

/// Reduced two-qubit dynamics of the closed qubits⊗cavity system (`Γ = 0`).
pub fn closed_system(p: &ParameterSet, grid: &TimeGrid) -> Result<SimulationResult, OracleError> {
    let tr = closed_evolve(p, grid)?;
    let states = tr.reduced.iter().map(DensityMatrix4::from_hermitian_part).collect::<Result<Vec<_>, _>>()?;
    Ok(SimulationResult::from_states(grid.times(), states, Provenance::new(Method::Closed, p))?)
}
