//! Two-qubit state diagnostics.

// libm-backed float methods; redundant when std is linked (tests).
#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::{herm_eig, outer, spectral_map, sqrt_psd, ComplexMatrix, C64};
use crate::error::AlgebraError;
use crate::model::SystemState;

/// A validated 4×4 Hermitian matrix in the `|ee⟩,|eg⟩,|ge⟩,|gg⟩` basis.
///
/// Trace and positivity are not enforced: an unnormalised Monte-Carlo
/// average is still a valid value of this type.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix4 {
    m: ComplexMatrix,
}

impl DensityMatrix4 {
    pub fn new(m: ComplexMatrix) -> Result<Self, AlgebraError> {
        if m.rows() != 4 || m.cols() != 4 {
            return Err(AlgebraError::DimensionMismatch { left: (m.rows(), m.cols()), right: (4, 4) });
        }
        m.check_hermitian()?;
        Ok(Self { m })
    }

    /// Hermitian part of `m`, for averages carrying rounding-level asymmetry.
    pub fn from_hermitian_part(m: &ComplexMatrix) -> Result<Self, AlgebraError> {
        Self::new(m.hermitian_part())
    }

    pub fn from_pure(psi: &SystemState) -> Self {
        Self { m: outer(psi, psi).hermitian_part() }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    /// Divides by the trace.
    pub fn normalized(&self) -> Self {
        Self { m: self.m.scale_real(1.0 / self.trace()) }
    }

    pub fn min_eigenvalue(&self) -> Result<f64, AlgebraError> {
        Ok(herm_eig(&self.m)?.values[0])
    }
}

fn sigma_y_sigma_y() -> ComplexMatrix {
    // σ_y ⊗ σ_y is real: anti-diagonal [-1, 1, 1, -1].
    let mut m = ComplexMatrix::zeros(4, 4);
    m[(0, 3)] = C64::new(-1.0, 0.0);
    m[(1, 2)] = C64::new(1.0, 0.0);
    m[(2, 1)] = C64::new(1.0, 0.0);
    m[(3, 0)] = C64::new(-1.0, 0.0);
    m
}

/// Most negative eigenvalue (relative to the trace) accepted from a Monte-Carlo estimate.
pub const ENSEMBLE_EIG_FLOOR: f64 = 0.02;

/// Sets negative eigenvalues to zero and renormalises. `floor`: most negative
/// eigenvalue, relative to the trace, that is accepted.
fn clamp_state(rho: &DensityMatrix4, floor: f64) -> Result<ComplexMatrix, AlgebraError> {
    let eig = herm_eig(rho.matrix())?;
    if eig.values[0] < -floor * rho.trace().abs() {
        return Err(AlgebraError::NotPsd { eigenvalue: eig.values[0] });
    }
    let clamped = spectral_map(&eig, |l| l.max(0.0));
    let tr = clamped.trace().re;
    Ok(clamped.scale_real(1.0 / tr).hermitian_part())
}

fn wootters(r: &ComplexMatrix) -> Result<f64, AlgebraError> {
    let yy = sigma_y_sigma_y();
    let tilde = &(&yy * &r.conj()) * &yy;
    let s = sqrt_psd(r)?;
    let prod = &(&s * &tilde) * &s;
    let eig = herm_eig(&prod.hermitian_part())?;
    let mut lam: [f64; 4] = core::array::from_fn(|k| eig.values[k].max(0.0).sqrt());
    lam.sort_by(|a, b| b.total_cmp(a));
    Ok((lam[0] - lam[1] - lam[2] - lam[3]).max(0.0))
}

/// Wootters concurrence, via the eigenvalues of `√ρ ρ̃ √ρ`.
///
/// Negative eigenvalues down to `-ENSEMBLE_EIG_FLOOR·tr ρ` are clamped to zero
/// and the state renormalised; anything more negative is an error.
pub fn concurrence(rho: &DensityMatrix4) -> Result<f64, AlgebraError> {
    wootters(&clamp_state(rho, ENSEMBLE_EIG_FLOOR)?)
}

/// Concurrence of the nearest clamped state, whatever the negativity.
/// For small ensembles, whose averages can be far from positive.
pub fn concurrence_clamped(rho: &DensityMatrix4) -> Result<f64, AlgebraError> {
    wootters(&clamp_state(rho, f64::INFINITY)?)
}

/// `½ Σ |eig(a - b)|`.
pub fn trace_distance(a: &DensityMatrix4, b: &DensityMatrix4) -> Result<f64, AlgebraError> {
    let d = (a.matrix() - b.matrix()).hermitian_part();
    Ok(0.5 * herm_eig(&d)?.values.iter().map(|v| v.abs()).sum::<f64>())
}

/// Populations and l1 coherence of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateScalars {
    pub populations: [f64; 4],
    pub coherence_l1: f64,
}

pub fn state_scalars(rho: &DensityMatrix4) -> StateScalars {
    let mut coherence_l1 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                coherence_l1 += rho.get(i, j).norm();
            }
        }
    }
    StateScalars { populations: core::array::from_fn(|i| rho.get(i, i).re), coherence_l1 }
}

/// `⟨φ|ρ|φ⟩` for a pure target `φ`.
pub fn fidelity_to(rho: &DensityMatrix4, target: &SystemState) -> f64 {
    let v = rho.matrix().mul_vec(target);
    target.iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<C64>().re
}
