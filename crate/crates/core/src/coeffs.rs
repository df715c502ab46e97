//! Coefficient hierarchy of the two O-operators.
//!
//! The operators are expanded over `O1..O5` (see [`crate::model`]):
//!
//! ```text
//! O_z(t,s) = Σ_j n_j(t,s) O_j + i ∫ ds' [ n5(t,s,s') z*_{s'} + n6(t,s,s') y*_{s'} ] O5
//! O_y(t,s) = Σ_j m_j(t,s) O_j + i ∫ ds' [ m5(t,s,s') z*_{s'} + m6(t,s,s') y*_{s'} ] O5
//! ```
//!
//! and the kernel-integrated quantities are
//!
//! ```text
//! N_j(t)     = ∫_0^t ds α(t,s) n_j(t,s)         M_j(t)     = ∫_0^t ds β(t,s) m_j(t,s)
//! N_5/6(t,s') = ∫_0^t ds α(t,s) n_5/6(t,s,s')   M_5/6(t,s') = ∫_0^t ds β(t,s) m_5/6(t,s,s')
//! ```
//!
//! `N5`..`M6` are the bare integrals (no leading factor of `i`); with that
//! convention the evolution equations, the `s = t` initial values and the
//! `s' = t` boundary values are mutually consistent, and
//! `Ō_z = Σ_j N_j O_j + i ∫ ds' (N5 z*_{s'} + N6 y*_{s'}) O5`.
//!
//! Inside the evolution equations of the two-index fields, `N5`, `N6` are
//! evaluated at `s' = s`; in those of the panels they carry `(t, s')` while the
//! two-index factors carry `(t, s)`.
//!
//! Time marching is Heun predictor–corrector in the frame rotating with the
//! free term (`iω_j` for the two-index fields, `i(ω_A+ω_B)` for the panels),
//! with trapezoid quadrature throughout. At each new time the `s = t` row and
//! the `s' = t` column are set from the initial and boundary values. Because
//! the trapezoid endpoint of `N_j` contains `n_j(t,t) = κ_j - iM_j(t)` and that
//! of `M_j` contains `m_j(t,t) = -iN_j(t)`, each `(N, M)` pair is obtained from
//! a 2×2 linear solve.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::{ComplexMatrix, C64, I, ZERO};
use crate::error::{CoeffError, FieldKind, Warning};
use crate::model::{EomVariant, OperatorSet, ParameterSet};
use crate::noise::{alpha, beta, NoiseRealization, TimeGrid};

/// Per-step change above which the grid is reported as too coarse.
pub const COARSE_STEP_CHANGE: f64 = 0.5;

type Quad = [C64; 4];

#[inline]
fn tri(i: usize, k: usize) -> usize {
    i * (i + 1) / 2 + k
}

/// Trapezoid weight of node `k` on `[0, t_i]`.
#[inline]
pub fn trapezoid_weight(i: usize, k: usize, dt: f64) -> f64 {
    if i == 0 {
        0.0
    } else if k == 0 || k == i {
        0.5 * dt
    } else {
        dt
    }
}

/// Solved coefficient fields on a grid.
///
/// Two-index fields and all kernel integrals are kept for every grid time.
/// The three-index panels are kept only at the final time.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientFields {
    grid: TimeGrid,
    variant: EomVariant,
    kappa: [f64; 2],
    big_n: Vec<Quad>,
    big_m: Vec<Quad>,
    n_two: Vec<Quad>,
    m_two: Vec<Quad>,
    n5_int: Vec<C64>,
    n6_int: Vec<C64>,
    m5_int: Vec<C64>,
    m6_int: Vec<C64>,
    final_panels: [Vec<C64>; 4],
    warnings: Vec<Warning>,
}

/// Which panel of the final-time snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Panel {
    N5 = 0,
    N6 = 1,
    M5 = 2,
    M6 = 3,
}

impl CoefficientFields {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn variant(&self) -> EomVariant {
        self.variant
    }

    /// Index of the last solved time.
    pub fn last_index(&self) -> usize {
        self.grid.n_steps
    }

    /// `N_j(t_i)`, `j = 1..4` stored at `[j-1]`.
    pub fn big_n(&self, i: usize) -> Quad {
        self.big_n[i]
    }

    pub fn big_m(&self, i: usize) -> Quad {
        self.big_m[i]
    }

    /// `n_j(t_i, s_k)` for `k <= i`.
    pub fn n(&self, i: usize, k: usize) -> Quad {
        self.n_two[tri(i, k)]
    }

    pub fn m(&self, i: usize, k: usize) -> Quad {
        self.m_two[tri(i, k)]
    }

    /// `N5(t_i, s'_l)`.
    pub fn n5_bar(&self, i: usize, l: usize) -> C64 {
        self.n5_int[tri(i, l)]
    }

    pub fn n6_bar(&self, i: usize, l: usize) -> C64 {
        self.n6_int[tri(i, l)]
    }

    pub fn m5_bar(&self, i: usize, l: usize) -> C64 {
        self.m5_int[tri(i, l)]
    }

    pub fn m6_bar(&self, i: usize, l: usize) -> C64 {
        self.m6_int[tri(i, l)]
    }

    /// Row `i` of an integrated panel (`l = 0..=i`).
    pub fn bar_row(&self, panel: Panel, i: usize) -> &[C64] {
        let v = match panel {
            Panel::N5 => &self.n5_int,
            Panel::N6 => &self.n6_int,
            Panel::M5 => &self.m5_int,
            Panel::M6 => &self.m6_int,
        };
        &v[tri(i, 0)..tri(i, 0) + i + 1]
    }

    /// Panel value at the final time `t_N`: `panel(t_N, s_k, s'_l)`.
    pub fn final_panel(&self, panel: Panel, k: usize, l: usize) -> C64 {
        let cap = self.grid.len();
        self.final_panels[panel as usize][k * cap + l]
    }

    pub fn kappa(&self) -> [f64; 2] {
        self.kappa
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    pub fn is_finite(&self) -> bool {
        let f = |z: &C64| z.re.is_finite() && z.im.is_finite();
        self.big_n.iter().chain(&self.big_m).all(|q| q.iter().all(f))
            && self.n5_int.iter().chain(&self.n6_int).chain(&self.m5_int).chain(&self.m6_int).all(f)
    }

    /// Flat little-endian-serialisable view used by the field cache.
    pub fn raw_parts(&self) -> RawFields<'_> {
        RawFields {
            grid: self.grid,
            variant: self.variant,
            kappa: self.kappa,
            big_n: &self.big_n,
            big_m: &self.big_m,
            n_two: &self.n_two,
            m_two: &self.m_two,
            integrals: [&self.n5_int, &self.n6_int, &self.m5_int, &self.m6_int],
            final_panels: [&self.final_panels[0], &self.final_panels[1], &self.final_panels[2], &self.final_panels[3]],
        }
    }

    /// Inverse of [`raw_parts`](Self::raw_parts). Returns `None` on inconsistent lengths.
    #[allow(clippy::too_many_arguments)]
    pub fn from_raw_parts(
        grid: TimeGrid,
        variant: EomVariant,
        kappa: [f64; 2],
        big_n: Vec<Quad>,
        big_m: Vec<Quad>,
        n_two: Vec<Quad>,
        m_two: Vec<Quad>,
        integrals: [Vec<C64>; 4],
        final_panels: [Vec<C64>; 4],
    ) -> Option<Self> {
        let len = grid.len();
        let t = len * (len + 1) / 2;
        let ok = big_n.len() == len
            && big_m.len() == len
            && n_two.len() == t
            && m_two.len() == t
            && integrals.iter().all(|v| v.len() == t)
            && final_panels.iter().all(|v| v.len() == len * len);
        if !ok {
            return None;
        }
        let [n5_int, n6_int, m5_int, m6_int] = integrals;
        Some(Self { grid, variant, kappa, big_n, big_m, n_two, m_two, n5_int, n6_int, m5_int, m6_int, final_panels, warnings: Vec::new() })
    }
}

/// Borrowed view of all stored arrays.
pub struct RawFields<'a> {
    pub grid: TimeGrid,
    pub variant: EomVariant,
    pub kappa: [f64; 2],
    pub big_n: &'a [Quad],
    pub big_m: &'a [Quad],
    pub n_two: &'a [Quad],
    pub m_two: &'a [Quad],
    pub integrals: [&'a [C64]; 4],
    pub final_panels: [&'a [C64]; 4],
}

/// Quadratic part of `∂_t x_j` contributed by `-[L† Σ N_k O_k, Σ x_k O_k]`.
#[inline]
fn quadratic(k1: f64, k2: f64, n: &Quad, x: &Quad) -> Quad {
    let [n1, n2, n3, n4] = *n;
    let [x1, x2, x3, x4] = *x;
    [
        (n1 * x1 + n4 * x4) * k1 + (-n1 * x3 + n3 * x1 + n3 * x4 + n4 * x3) * k2,
        (-n2 * x4 + n3 * x4 + n4 * x2 + n4 * x3) * k1 + (n2 * x2 + n3 * x3) * k2,
        (-n2 * x1 + n3 * x1 + n4 * x2 + n4 * x3) * k1 + (n2 * x3 + n3 * x2) * k2,
        (n1 * x4 + n4 * x1) * k1 + (-n1 * x2 + n3 * x1 + n3 * x4 + n4 * x2) * k2,
    ]
}

/// Coefficient `c` in `[Σ a_j O_j, Σ x_j O_j] = c·O5` (j = 1..4).
#[inline]
fn commutator_o5(a: &Quad, x: &Quad) -> C64 {
    (a[0] * x[2] + a[1] * x[3] - a[2] * x[0] - a[3] * x[1]) * 2.0
}

/// Kernel integrals at one time.
struct Integrals {
    big_n: Quad,
    big_m: Quad,
    p5: Vec<C64>,
    p6: Vec<C64>,
    q5: Vec<C64>,
    q6: Vec<C64>,
}

struct Solver<'a> {
    p: &'a ParameterSet,
    grid: TimeGrid,
    variant: EomVariant,
    cap: usize,
    kappa: Quad,
    omega: [f64; 4],
    omega_pair: f64,
    /// `L† O5 = Σ_j c_j O_j`
    ld_o5: [f64; 4],
    nf: Vec<Quad>,
    mf: Vec<Quad>,
    panels: [Vec<C64>; 4],
    partial: [Vec<C64>; 4],
    partial_nf: Vec<Quad>,
    partial_mf: Vec<Quad>,
    a_w: Vec<C64>,
    b_w: Vec<C64>,
}

impl<'a> Solver<'a> {
    fn new(p: &'a ParameterSet, grid: TimeGrid) -> Self {
        let cap = grid.len();
        let (k1, k2) = (p.kappa1, p.kappa2);
        let omega = match p.eom_variant {
            EomVariant::AsPrinted => [p.omega_a, p.omega_b, 0.5 * p.omega_b, 0.5 * p.omega_a],
            _ => [p.omega_a, p.omega_b, p.omega_b, p.omega_a],
        };
        let zeros = || vec![ZERO; cap * cap];
        Self {
            p,
            grid,
            variant: p.eom_variant,
            cap,
            kappa: [C64::new(k1, 0.0), C64::new(k2, 0.0), ZERO, ZERO],
            omega,
            omega_pair: p.omega_a + p.omega_b,
            ld_o5: [0.5 * k2, 0.5 * k1, 0.5 * k1, 0.5 * k2],
            nf: vec![[ZERO; 4]; cap],
            mf: vec![[ZERO; 4]; cap],
            panels: [zeros(), zeros(), zeros(), zeros()],
            partial: [zeros(), zeros(), zeros(), zeros()],
            partial_nf: vec![[ZERO; 4]; cap],
            partial_mf: vec![[ZERO; 4]; cap],
            a_w: vec![ZERO; cap],
            b_w: vec![ZERO; cap],
        }
    }

    /// Sets the `s = t_i` row and `s' = t_i` column and returns all integrals at `t_i`.
    fn fill(&mut self, i: usize) -> Integrals {
        let dt = self.grid.dt;
        let ti = self.grid.t(i);
        for k in 0..=i {
            let w = trapezoid_weight(i, k, dt);
            let sk = self.grid.t(k);
            self.a_w[k] = alpha(ti, sk, self.p) * w;
            self.b_w[k] = beta(ti, sk, self.p) * w;
        }
        let (aw, bw) = (self.a_w[i], self.b_w[i]);
        let denom = C64::new(1.0, 0.0) + aw * bw;

        let mut big_n = [ZERO; 4];
        let mut big_m = [ZERO; 4];
        for j in 0..4 {
            let mut a = ZERO;
            let mut b = ZERO;
            for k in 0..i {
                a += self.a_w[k] * self.nf[k][j];
                b += self.b_w[k] * self.mf[k][j];
            }
            big_n[j] = (a + aw * self.kappa[j] - I * aw * b) / denom;
            big_m[j] = b - I * bw * big_n[j];
        }
        for j in 0..4 {
            self.nf[i][j] = self.kappa[j] - I * big_m[j];
            self.mf[i][j] = -I * big_n[j];
        }

        let mut p5 = vec![ZERO; i + 1];
        let mut p6 = vec![ZERO; i + 1];
        let mut q5 = vec![ZERO; i + 1];
        let mut q6 = vec![ZERO; i + 1];
        for l in 0..i {
            self.column_integrals(i, l, denom, &mut p5, &mut p6, &mut q5, &mut q6);
        }
        let (k1, k2) = (self.kappa[0], self.kappa[1]);
        let cap = self.cap;
        for k in 0..i {
            let x = self.nf[k];
            let y = self.mf[k];
            let idx = k * cap + i;
            self.panels[Panel::N5 as usize][idx] = -I * 2.0 * (k1 * x[2] + k2 * x[3]) - commutator_o5(&big_m, &x) - I * q5[k];
            self.panels[Panel::M6 as usize][idx] = -commutator_o5(&big_n, &y) - I * p6[k];
            match self.variant {
                EomVariant::Corrected => {
                    self.panels[Panel::N6 as usize][idx] = -commutator_o5(&big_n, &x) - I * p5[k];
                    self.panels[Panel::M5 as usize][idx] =
                        -I * 2.0 * (k1 * y[2] + k2 * y[3]) - commutator_o5(&big_m, &y) - I * q6[k];
                }
                EomVariant::AsPrinted | EomVariant::Symmetrized => {
                    self.panels[Panel::N6 as usize][idx] = -I * p5[k];
                    self.panels[Panel::M5 as usize][idx] = -I * 2.0 * (k1 * y[2] + k2 * y[3]) - I * q6[k];
                }
            }
        }
        self.column_integrals(i, i, denom, &mut p5, &mut p6, &mut q5, &mut q6);
        Integrals { big_n, big_m, p5, p6, q5, q6 }
    }

    #[allow(clippy::too_many_arguments)]
    fn column_integrals(
        &mut self,
        i: usize,
        l: usize,
        denom: C64,
        p5: &mut [C64],
        p6: &mut [C64],
        q5: &mut [C64],
        q6: &mut [C64],
    ) {
        let cap = self.cap;
        let (aw, bw) = (self.a_w[i], self.b_w[i]);
        let [n5, n6, m5, m6] = &self.panels;
        let (mut a5, mut a6, mut b5, mut b6) = (ZERO, ZERO, ZERO, ZERO);
        for k in 0..i {
            let idx = k * cap + l;
            a5 += self.a_w[k] * n5[idx];
            a6 += self.a_w[k] * n6[idx];
            b5 += self.b_w[k] * m5[idx];
            b6 += self.b_w[k] * m6[idx];
        }
        let n5b = (a5 - I * aw * b5) / denom;
        let n6b = (a6 - I * aw * b6) / denom;
        let m5b = b5 - I * bw * n5b;
        let m6b = b6 - I * bw * n6b;
        let idx = i * cap + l;
        self.panels[Panel::N5 as usize][idx] = -I * m5b;
        self.panels[Panel::N6 as usize][idx] = -I * m6b;
        self.panels[Panel::M5 as usize][idx] = -I * n5b;
        self.panels[Panel::M6 as usize][idx] = -I * n6b;
        p5[l] = n5b;
        p6[l] = n6b;
        q5[l] = m5b;
        q6[l] = m6b;
    }

    /// One Heun stage over nodes `0..=i`.
    ///
    /// Stage 0 (predictor): stores `E·(y + dt/2·f)` in the partial buffers and sets
    /// `y ← E·(y + dt·f)`. Stage 1 (corrector): `y ← partial + dt/2·f`.
    fn stage(&mut self, i: usize, ints: &Integrals, corrector: bool) {
        let dt = self.grid.dt;
        let (k1, k2) = (self.p.kappa1, self.p.kappa2);
        let n = &ints.big_n;
        let rot: [C64; 4] = core::array::from_fn(|j| C64::new(0.0, self.omega[j] * dt).exp());
        let rot_pair = C64::new(0.0, self.omega_pair * dt).exp();
        let diag = (n[0] + n[3]) * k1 + (n[1] + n[2]) * k2;

        let en: Vec<C64> = (0..=i).map(|k| (self.nf[k][0] - self.nf[k][3]) * k1 + (self.nf[k][1] - self.nf[k][2]) * k2).collect();
        let em: Vec<C64> = (0..=i).map(|k| (self.mf[k][0] - self.mf[k][3]) * k1 + (self.mf[k][1] - self.mf[k][2]) * k2).collect();

        for k in 0..=i {
            let qn = quadratic(k1, k2, n, &self.nf[k]);
            let qm = quadratic(k1, k2, n, &self.mf[k]);
            for j in 0..4 {
                let fn_ = qn[j] - I * ints.p5[k] * self.ld_o5[j];
                let fm = qm[j] - I * ints.p6[k] * self.ld_o5[j];
                if corrector {
                    self.nf[k][j] = self.partial_nf[k][j] + fn_ * (0.5 * dt);
                    self.mf[k][j] = self.partial_mf[k][j] + fm * (0.5 * dt);
                } else {
                    let (y, x) = (self.nf[k][j], self.mf[k][j]);
                    self.partial_nf[k][j] = rot[j] * (y + fn_ * (0.5 * dt));
                    self.partial_mf[k][j] = rot[j] * (x + fm * (0.5 * dt));
                    self.nf[k][j] = rot[j] * (y + fn_ * dt);
                    self.mf[k][j] = rot[j] * (x + fm * dt);
                }
            }
        }

        let cap = self.cap;
        let sources = [(&en, &ints.p5), (&en, &ints.p6), (&em, &ints.p5), (&em, &ints.p6)];
        for (panel, (two, bar)) in sources.iter().enumerate() {
            let field = &mut self.panels[panel];
            let partial = &mut self.partial[panel];
            for k in 0..=i {
                let row = k * cap;
                let e = two[k];
                for l in 0..=i {
                    let y = field[row + l];
                    let f = diag * y + e * bar[l];
                    if corrector {
                        field[row + l] = partial[row + l] + f * (0.5 * dt);
                    } else {
                        partial[row + l] = rot_pair * (y + f * (0.5 * dt));
                        field[row + l] = rot_pair * (y + f * dt);
                    }
                }
            }
        }
    }

    fn check_finite(&self, i: usize) -> Result<(), CoeffError> {
        let t = self.grid.t(i);
        let finite = |z: &C64| z.re.is_finite() && z.im.is_finite();
        for k in 0..=i {
            for j in 0..4 {
                if !finite(&self.nf[k][j]) {
                    return Err(CoeffError::NonFinite { field: FieldKind::N(j + 1), t, s: self.grid.t(k), s_prime: None });
                }
                if !finite(&self.mf[k][j]) {
                    return Err(CoeffError::NonFinite { field: FieldKind::M(j + 1), t, s: self.grid.t(k), s_prime: None });
                }
            }
        }
        for (pi, kind) in [FieldKind::N(5), FieldKind::N(6), FieldKind::M(5), FieldKind::M(6)].into_iter().enumerate() {
            for k in 0..=i {
                for l in 0..=i {
                    if !finite(&self.panels[pi][k * self.cap + l]) {
                        return Err(CoeffError::NonFinite { field: kind, t, s: self.grid.t(k), s_prime: Some(self.grid.t(l)) });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Integrates the coefficient hierarchy over `grid`.
pub fn solve_coefficients(p: &ParameterSet, grid: &TimeGrid) -> Result<CoefficientFields, CoeffError> {
    p.validate()?;
    let grid = *grid;
    let len = grid.len();
    let t_len = len * (len + 1) / 2;
    let mut s = Solver::new(p, grid);

    let mut big_n = Vec::with_capacity(len);
    let mut big_m = Vec::with_capacity(len);
    let mut n_two = Vec::with_capacity(t_len);
    let mut m_two = Vec::with_capacity(t_len);
    let mut ints_store: [Vec<C64>; 4] = core::array::from_fn(|_| Vec::with_capacity(t_len));
    let mut warnings = Vec::new();
    let mut worst_change = 0.0f64;

    let mut store = |i: usize, s: &Solver, ints: &Integrals| {
        big_n.push(ints.big_n);
        big_m.push(ints.big_m);
        n_two.extend_from_slice(&s.nf[..=i]);
        m_two.extend_from_slice(&s.mf[..=i]);
        for (dst, src) in ints_store.iter_mut().zip([&ints.p5, &ints.p6, &ints.q5, &ints.q6]) {
            dst.extend_from_slice(src);
        }
    };

    let mut ints = s.fill(0);
    store(0, &s, &ints);
    for i in 0..grid.n_steps {
        let before_n = ints.big_n;
        let before_m = ints.big_m;
        s.stage(i, &ints, false);
        let predicted = s.fill(i + 1);
        s.stage(i, &predicted, true);
        ints = s.fill(i + 1);
        s.check_finite(i + 1)?;
        let change = (0..4)
            .map(|j| (ints.big_n[j] - before_n[j]).norm().max((ints.big_m[j] - before_m[j]).norm()))
            .fold(0.0, f64::max);
        if change > COARSE_STEP_CHANGE && change > worst_change {
            worst_change = change;
        }
        store(i + 1, &s, &ints);
    }
    if worst_change > 0.0 {
        let suggested = grid.dt * COARSE_STEP_CHANGE / worst_change;
        warnings.push(Warning {
            message: format!(
                "grid too coarse: integrated coefficients changed by {worst_change:.3} in one step (dt = {}); suggested dt <= {suggested:.3e}",
                grid.dt
            ),
        });
    }

    let [n5_int, n6_int, m5_int, m6_int] = ints_store;
    Ok(CoefficientFields {
        grid,
        variant: p.eom_variant,
        kappa: [p.kappa1, p.kappa2],
        big_n,
        big_m,
        n_two,
        m_two,
        n5_int,
        n6_int,
        m5_int,
        m6_int,
        final_panels: s.panels,
        warnings,
    })
}

/// `Ō = Σ_{j≤4} c_j O_j + c_5 O5` as its five coefficients.
pub type ObarCoeffs = [C64; 5];

/// O5 quadratures `∫ ds' (A(t_i,s') z*_{s'} + B(t_i,s') y*_{s'})` by trapezoid.
fn o5_quadrature(a: &[C64], b: &[C64], noise: &NoiseRealization, i: usize, dt: f64) -> C64 {
    (0..=i).map(|l| (a[l] * noise.z_star[l] + b[l] * noise.y_star[l]) * trapezoid_weight(i, l, dt)).sum()
}

/// Coefficients of `(Ō_z(t_i), Ō_y(t_i))` for one noise realisation.
pub fn obar_coefficients(fields: &CoefficientFields, noise: &NoiseRealization, i: usize) -> Result<(ObarCoeffs, ObarCoeffs), CoeffError> {
    if i > fields.last_index() {
        return Err(CoeffError::OutOfRange { index: i, last: fields.last_index() });
    }
    if noise.z_star.len() != fields.grid.len() || noise.y_star.len() != fields.grid.len() {
        return Err(CoeffError::GridMismatch);
    }
    let dt = fields.grid.dt;
    let n = fields.big_n(i);
    let m = fields.big_m(i);
    let z5 = I * o5_quadrature(fields.bar_row(Panel::N5, i), fields.bar_row(Panel::N6, i), noise, i, dt);
    let y5 = I * o5_quadrature(fields.bar_row(Panel::M5, i), fields.bar_row(Panel::M6, i), noise, i, dt);
    Ok(([n[0], n[1], n[2], n[3], z5], [m[0], m[1], m[2], m[3], y5]))
}

pub fn coeffs_to_matrix(c: &ObarCoeffs, ops: &OperatorSet) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(4, 4);
    for (cj, oj) in c.iter().zip(&ops.basis) {
        out.add_scaled(*cj, oj);
    }
    out
}

/// `(Ō_z(t_i), Ō_y(t_i))` as 4×4 matrices.
pub fn assemble_obar(
    fields: &CoefficientFields,
    noise: &NoiseRealization,
    i: usize,
    ops: &OperatorSet,
) -> Result<(ComplexMatrix, ComplexMatrix), CoeffError> {
    let (z, y) = obar_coefficients(fields, noise, i)?;
    Ok((coeffs_to_matrix(&z, ops), coeffs_to_matrix(&y, ops)))
}
