//! Physical model: two qubits A and B, one cavity mode, one leaky bath.
//!
//! Two-qubit basis order is fixed everywhere as
//! `0 = |ee⟩, 1 = |eg⟩, 2 = |ge⟩, 3 = |gg⟩`, first letter qubit A.
//! The excited state `|e⟩` is the upper level of `σ_z` (eigenvalue +1).

// libm-backed float methods; redundant when std is linked (tests).
#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::{kron, ComplexMatrix, C64, ONE, ZERO};
use crate::error::ModelError;
use crate::noise::TimeGrid;

/// Two-qubit amplitudes in the global basis order.
pub type SystemState = [C64; 4];

pub const EE: usize = 0;
pub const EG: usize = 1;
pub const GE: usize = 2;
pub const GG: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialState {
    /// `(|eg⟩ + |ge⟩)/√2`
    BellPsiPlus,
    /// `(|ee⟩ + |gg⟩)/√2`
    BellPhiPlus,
    KetEE,
    KetGG,
    Custom(SystemState),
}

impl InitialState {
    pub fn name(&self) -> &'static str {
        match self {
            InitialState::BellPsiPlus => "bell_psi_plus",
            InitialState::BellPhiPlus => "bell_phi_plus",
            InitialState::KetEE => "ket_ee",
            InitialState::KetGG => "ket_gg",
            InitialState::Custom(_) => "custom",
        }
    }
}

/// Which transcription of the coefficient evolution equations to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EomVariant {
    /// Verbatim, including the `iω/2` rotation of the `O3`, `O4` coefficients.
    AsPrinted,
    /// Free rotation `iω_B`, `iω_A` for the `O3`, `O4` coefficients.
    Symmetrized,
    /// `Symmetrized` plus the commutator terms in the `s' = t` boundary values
    /// of `n6` and `m5` that follow from the consistency equations.
    Corrected,
}

impl EomVariant {
    pub const ALL: [EomVariant; 3] = [EomVariant::AsPrinted, EomVariant::Symmetrized, EomVariant::Corrected];

    pub fn name(&self) -> &'static str {
        match self {
            EomVariant::AsPrinted => "as_printed",
            EomVariant::Symmetrized => "symmetrized",
            EomVariant::Corrected => "corrected",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }
}

/// Every physical and numerical knob of one simulation.
///
/// Frequencies are in units of the cavity frequency, times in its inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet {
    pub omega_s: f64,
    pub omega_a: f64,
    pub omega_b: f64,
    pub omega_c: f64,
    /// Qubit–cavity coupling, real and non-negative.
    pub g: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Strength Γ of the Ornstein–Uhlenbeck bath kernel.
    pub bath_strength: f64,
    /// Inverse memory time γ of the bath kernel.
    pub bath_rate: f64,
    pub t_max: f64,
    pub dt: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub initial_state: InitialState,
    pub eom_variant: EomVariant,
    pub fock_cutoff_cavity: usize,
    pub fock_cutoff_pseudomode: usize,
}

impl Default for ParameterSet {
    /// Resonance-detuned Bell-state setup: ω_s = 2, ω_c = 1, g = 1,
    /// κ₁ = κ₂ = 1, Γ = 1, γ = 5, t ∈ [0, 5] with dt = 0.01.
    fn default() -> Self {
        Self {
            omega_s: 2.0,
            omega_a: 2.0,
            omega_b: 2.0,
            omega_c: 1.0,
            g: 1.0,
            kappa1: 1.0,
            kappa2: 1.0,
            bath_strength: 1.0,
            bath_rate: 5.0,
            t_max: 5.0,
            dt: 0.01,
            n_traj: 10_000,
            seed: 0,
            initial_state: InitialState::BellPsiPlus,
            eom_variant: EomVariant::AsPrinted,
            fock_cutoff_cavity: 2,
            fock_cutoff_pseudomode: 2,
        }
    }
}

impl ParameterSet {
    /// Sets `omega_s` and the per-qubit frequencies together.
    pub fn with_qubit_frequency(mut self, omega_s: f64) -> Self {
        self.omega_s = omega_s;
        self.omega_a = omega_s;
        self.omega_b = omega_s;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |name, value, reason| Err(ModelError::InvalidParameter { name, value, reason });
        for (name, v) in [
            ("omega_s", self.omega_s),
            ("omega_a", self.omega_a),
            ("omega_b", self.omega_b),
            ("omega_c", self.omega_c),
            ("g", self.g),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("Gamma", self.bath_strength),
            ("gamma", self.bath_rate),
            ("t_max", self.t_max),
            ("dt", self.dt),
        ] {
            if !v.is_finite() {
                return bad(name, v, "must be finite");
            }
        }
        if self.dt <= 0.0 {
            return bad("dt", self.dt, "must be > 0");
        }
        if self.t_max < self.dt {
            return bad("t_max", self.t_max, "must be >= dt");
        }
        if self.n_traj < 1 {
            return bad("n_traj", self.n_traj as f64, "must be >= 1");
        }
        if self.g < 0.0 {
            return bad("g", self.g, "must be >= 0");
        }
        if self.bath_strength < 0.0 {
            return bad("Gamma", self.bath_strength, "must be >= 0");
        }
        if self.bath_rate < 0.0 || (self.bath_strength > 0.0 && self.bath_rate <= 0.0) {
            return bad("gamma", self.bath_rate, "must be > 0 when Gamma > 0");
        }
        let n = (self.t_max / self.dt).round();
        if (n * self.dt - self.t_max).abs() > 1e-9 * self.t_max.max(1.0) {
            return bad("dt", self.dt, "t_max must be an integer multiple of dt");
        }
        if let InitialState::Custom(amps) = self.initial_state {
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(ModelError::NotNormalized { norm });
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid, ModelError> {
        self.validate()?;
        Ok(TimeGrid::new(self.dt, (self.t_max / self.dt).round() as usize))
    }
}

fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::from_rows([[ZERO, ZERO], [ONE, ZERO]])
}

fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_real_diag(&[1.0, -1.0])
}

/// Operator basis of the O-operator expansion plus `L`, `L†`, `H_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSet {
    /// `σ₋ᴬ, σ₋ᴮ, σ_zᴬσ₋ᴮ, σ₋ᴬσ_zᴮ, σ₋ᴬσ₋ᴮ`
    pub basis: [ComplexMatrix; 5],
    pub l: ComplexMatrix,
    pub l_dag: ComplexMatrix,
    pub h_s: ComplexMatrix,
}

pub fn build_operators(p: &ParameterSet) -> OperatorSet {
    let sm = sigma_minus();
    let sz = sigma_z();
    let id = ComplexMatrix::identity(2);
    let o1 = kron(&sm, &id);
    let o2 = kron(&id, &sm);
    let o3 = kron(&sz, &sm);
    let o4 = kron(&sm, &sz);
    let o5 = &o1 * &o2;
    let mut l = o1.scale_real(p.kappa1);
    l.add_scaled(C64::new(p.kappa2, 0.0), &o2);
    let l_dag = l.adjoint();
    let mut h_s = kron(&sz, &id).scale_real(p.omega_a / 2.0);
    h_s.add_scaled(C64::new(p.omega_b / 2.0, 0.0), &kron(&id, &sz));
    OperatorSet { basis: [o1, o2, o3, o4, o5], l, l_dag, h_s }
}

pub fn initial_state(p: &ParameterSet) -> Result<SystemState, ModelError> {
    let h = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    let state = match p.initial_state {
        InitialState::BellPsiPlus => [ZERO, h, h, ZERO],
        InitialState::BellPhiPlus => [h, ZERO, ZERO, h],
        InitialState::KetEE => [ONE, ZERO, ZERO, ZERO],
        InitialState::KetGG => [ZERO, ZERO, ZERO, ONE],
        InitialState::Custom(a) => {
            let norm = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(ModelError::NotNormalized { norm });
            }
            a
        }
    };
    Ok(state)
}

/// Number of excited qubits per basis index.
pub const EXCITATIONS: [usize; 4] = [2, 1, 1, 0];

/// Largest excitation number carried by a state with non-zero amplitude.
pub fn max_excitations(psi: &SystemState) -> usize {
    psi.iter().zip(EXCITATIONS).filter(|(a, _)| a.norm_sqr() > 0.0).map(|(_, e)| e).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(i: usize) -> [C64; 4] {
        let mut v = [ZERO; 4];
        v[i] = ONE;
        v
    }

    fn apply(m: &ComplexMatrix, i: usize) -> alloc::vec::Vec<C64> {
        m.mul_vec(&unit(i))
    }

    #[test]
    fn lowering_operator_action() {
        let ops = build_operators(&ParameterSet::default());
        assert_eq!(apply(&ops.l, EE), alloc::vec![ZERO, ONE, ONE, ZERO]);
        assert_eq!(apply(&ops.l, EG), unit(GG).to_vec());
        assert_eq!(apply(&ops.l, GE), unit(GG).to_vec());
        assert_eq!(apply(&ops.l, GG), alloc::vec![ZERO; 4]);
    }

    #[test]
    fn o3_signs() {
        let ops = build_operators(&ParameterSet::default());
        assert_eq!(apply(&ops.basis[2], EE), unit(EG).to_vec());
        assert_eq!(apply(&ops.basis[2], GE), alloc::vec![ZERO, ZERO, ZERO, -ONE]);
    }

    #[test]
    fn free_hamiltonian_diagonal() {
        let p = ParameterSet::default().with_qubit_frequency(2.0);
        let ops = build_operators(&p);
        assert_eq!(ops.h_s, ComplexMatrix::from_real_diag(&[2.0, 0.0, 0.0, -2.0]));
    }

    #[test]
    fn structural_identities() {
        let p = ParameterSet { kappa1: 0.7, kappa2: -1.3, ..ParameterSet::default() };
        let ops = build_operators(&p);
        assert_eq!(ops.basis[4], &ops.basis[0] * &ops.basis[1]);
        let mut l = ops.basis[0].scale_real(0.7);
        l.add_scaled(C64::new(-1.3, 0.0), &ops.basis[1]);
        assert_eq!(ops.l, l);
        assert!(ops.h_s.check_hermitian().is_ok());
        let number = &(&ops.basis[0].adjoint() * &ops.basis[0]) + &(&ops.basis[1].adjoint() * &ops.basis[1]);
        assert_eq!(ops.h_s.commutator(&number).max_abs(), 0.0);
        assert_eq!(build_operators(&p), ops);
    }

    #[test]
    fn named_initial_states() {
        let mut p = ParameterSet::default();
        let psi = initial_state(&p).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(psi, [ZERO, C64::new(h, 0.0), C64::new(h, 0.0), ZERO]);
        p.initial_state = InitialState::KetEE;
        let ee = initial_state(&p).unwrap();
        assert_eq!(ee, unit(EE));
        p.initial_state = InitialState::Custom(unit(EE));
        assert_eq!(initial_state(&p).unwrap(), ee);
        p.initial_state = InitialState::Custom([ONE, ONE, ZERO, ZERO]);
        assert!(matches!(initial_state(&p), Err(ModelError::NotNormalized { .. })));
    }

    #[test]
    fn validation() {
        let ok = ParameterSet::default();
        assert!(ok.validate().is_ok());
        assert!(ParameterSet { dt: 0.0, ..ok.clone() }.validate().is_err());
        assert!(ParameterSet { g: -1.0, ..ok.clone() }.validate().is_err());
        assert!(ParameterSet { bath_rate: 0.0, ..ok.clone() }.validate().is_err());
        assert!(ParameterSet { bath_strength: 0.0, bath_rate: 0.0, ..ok.clone() }.validate().is_ok());
        assert!(ParameterSet { n_traj: 0, ..ok.clone() }.validate().is_err());
        assert!(ParameterSet { dt: 0.03, ..ok }.validate().is_err());
    }
}
