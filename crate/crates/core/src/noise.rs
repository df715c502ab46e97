//! Correlation kernels and samplers for the cavity noise `z*_t` and the bath
//! noise `y*_t`.
//!
//! Conventions: a complex standard normal `ξ` has `E[ξ] = 0`, `E[|ξ|²] = 1`,
//! `E[ξ²] = 0`. The sampled sequences are the conjugated processes `z*_t`,
//! `y*_t`; their statistics are `E[z_t z*_s] = α(t,s)` and
//! `E[y_t y*_s] = β(t,s)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

// libm-backed float methods; redundant when std is linked (tests).
#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::{C64, ZERO};
use crate::error::NoiseError;
use crate::model::ParameterSet;

/// Uniform grid `t_k = k·dt`, `k = 0..=n_steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self { dt, n_steps }
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.n_steps)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.t(k)).collect()
    }
}

/// Cavity correlation `α(t,s) = g² e^{-iω_c (t-s)}`.
pub fn alpha(t: f64, s: f64, p: &ParameterSet) -> C64 {
    C64::new(0.0, -p.omega_c * (t - s)).exp() * (p.g * p.g)
}

/// Bath correlation `β(t,s) = (Γγ/2) e^{-γ|t-s|}`.
pub fn beta(t: f64, s: f64, p: &ParameterSet) -> C64 {
    if p.bath_strength == 0.0 {
        return ZERO;
    }
    C64::new(0.5 * p.bath_strength * p.bath_rate * (-p.bath_rate * (t - s).abs()).exp(), 0.0)
}

/// One sampled pair of discretised noise paths.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseRealization {
    /// `z*_t` on the grid.
    pub z_star: Vec<C64>,
    /// `y*_t` on the grid.
    pub y_star: Vec<C64>,
    /// The single complex Gaussian behind `z_star`.
    pub z0: C64,
}

impl NoiseRealization {
    /// Noise-free member (`z0 = 0`, `y ≡ 0`).
    pub fn zero(grid: &TimeGrid) -> Self {
        Self { z_star: vec![ZERO; grid.len()], y_star: vec![ZERO; grid.len()], z0: ZERO }
    }
}

/// Which of the two noises an RNG stream feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseTag {
    Z = 0,
    Y = 1,
}

/// Independent stream for trajectory `k`: a pure function of `(seed, k, tag)`.
pub fn trajectory_rng(seed: u64, k: u64, tag: NoiseTag) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * k + tag as u64);
    rng
}

pub fn complex_normal<R: RngCore + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// `z*_t = -i g conj(z0) e^{iω_c t}` on the grid.
pub fn z_path(z0: C64, grid: &TimeGrid, p: &ParameterSet) -> Vec<C64> {
    let amp = C64::new(0.0, -p.g) * z0.conj();
    (0..grid.len()).map(|k| amp * C64::new(0.0, p.omega_c * grid.t(k)).exp()).collect()
}

/// Samples `(z0, z*_t)`.
pub fn sample_z<R: RngCore + ?Sized>(rng: &mut R, grid: &TimeGrid, p: &ParameterSet) -> (C64, Vec<C64>) {
    let z0 = complex_normal(rng);
    (z0, z_path(z0, grid, p))
}

/// Lower-triangular Cholesky factor of a real symmetric PSD matrix, packed by rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Cholesky {
    n: usize,
    packed: Vec<f64>,
}

impl Cholesky {
    /// Factors the `n×n` matrix given by `entry(i, j)` (only `j <= i` is read).
    pub fn factor(n: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self, NoiseError> {
        let mut packed = vec![0.0; n * (n + 1) / 2];
        let idx = |i: usize, j: usize| i * (i + 1) / 2 + j;
        for i in 0..n {
            for j in 0..=i {
                let mut sum = entry(i, j);
                let (ri, rj) = (idx(i, 0), idx(j, 0));
                for k in 0..j {
                    sum -= packed[ri + k] * packed[rj + k];
                }
                if i == j {
                    if sum <= 0.0 || sum.is_nan() {
                        return Err(NoiseError::Cholesky { pivot: i, value: sum });
                    }
                    packed[ri + i] = sum.sqrt();
                } else {
                    packed[ri + j] = sum / packed[rj + j];
                }
            }
        }
        Ok(Self { n, packed })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.packed[i * (i + 1) / 2 + j]
        }
    }

    /// `Λ·x` for complex `x`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| {
                let row = &self.packed[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
                row.iter().zip(x).map(|(l, v)| v * *l).sum()
            })
            .collect()
    }
}

/// Grid-bound sampler for both noises. The bath covariance is factored once.
#[derive(Clone, Debug)]
pub struct NoiseSampler {
    grid: TimeGrid,
    params: ParameterSet,
    factor: Option<Cholesky>,
}

impl NoiseSampler {
    pub fn new(p: &ParameterSet, grid: TimeGrid) -> Result<Self, NoiseError> {
        let factor = if p.bath_strength == 0.0 {
            None
        } else {
            Some(Cholesky::factor(grid.len(), |i, j| beta(grid.t(i), grid.t(j), p).re)?)
        };
        Ok(Self { grid, params: p.clone(), factor })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn cholesky(&self) -> Option<&Cholesky> {
        self.factor.as_ref()
    }

    pub fn sample_z<R: RngCore + ?Sized>(&self, rng: &mut R) -> (C64, Vec<C64>) {
        sample_z(rng, &self.grid, &self.params)
    }

    /// `y*_k = conj((Λ·ξ)_k)` with `ξ` complex standard normal.
    pub fn sample_y<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<C64> {
        match &self.factor {
            None => vec![ZERO; self.grid.len()],
            Some(ch) => {
                let xi: Vec<C64> = (0..self.grid.len()).map(|_| complex_normal(rng)).collect();
                ch.apply(&xi).into_iter().map(|v| v.conj()).collect()
            }
        }
    }

    /// Noise for trajectory `k` of an ensemble seeded with `seed`.
    pub fn realization(&self, seed: u64, k: u64) -> NoiseRealization {
        let (z0, z_star) = self.sample_z(&mut trajectory_rng(seed, k, NoiseTag::Z));
        let y_star = self.sample_y(&mut trajectory_rng(seed, k, NoiseTag::Y));
        NoiseRealization { z_star, y_star, z0 }
    }
}

/// Convenience wrapper building a one-off sampler.
pub fn sample_y<R: RngCore + ?Sized>(rng: &mut R, grid: &TimeGrid, p: &ParameterSet) -> Result<Vec<C64>, NoiseError> {
    Ok(NoiseSampler::new(p, *grid)?.sample_y(rng))
}

/// Flag threshold in standard errors.
pub const NOISE_FLAG_SIGMAS: f64 = 6.0;
pub const MIN_VALIDATION_PATHS: usize = 100;
/// At most this many grid points enter the pairwise moment checks.
pub const VALIDATION_POINTS: usize = 48;

#[derive(Clone, Debug, PartialEq)]
pub struct MomentCheck {
    pub name: &'static str,
    /// Largest `|empirical - expected|` over the checked times or pairs.
    pub max_abs_deviation: f64,
    /// Largest deviation in units of the estimator's standard error.
    pub max_sigmas: f64,
    /// `1/√N`.
    pub scale: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseReport {
    pub n_paths: usize,
    pub checks: Vec<MomentCheck>,
}

impl NoiseReport {
    pub fn any_flagged(&self) -> bool {
        self.checks.iter().any(|c| c.flagged)
    }
}

/// Compares empirical first and second moments against `(0, α, β)` and all
/// pseudo-covariances against zero.
///
/// A deviation is flagged when it exceeds six standard errors of its own
/// estimator (the standard error is estimated from the same samples, so the
/// check is scale-free in `g` and `Γγ`).
pub fn validate_noise(paths: &[NoiseRealization], p: &ParameterSet, grid: &TimeGrid) -> Result<NoiseReport, NoiseError> {
    if paths.len() < MIN_VALIDATION_PATHS {
        return Err(NoiseError::TooFewPaths { required: MIN_VALIDATION_PATHS, got: paths.len() });
    }
    for path in paths {
        for len in [path.z_star.len(), path.y_star.len()] {
            if len != grid.len() {
                return Err(NoiseError::LengthMismatch { expected: grid.len(), got: len });
            }
        }
    }
    let n = paths.len();
    let stride = grid.len().div_ceil(VALIDATION_POINTS).max(1);
    let idx: Vec<usize> = (0..grid.len()).step_by(stride).collect();

    // z_t = conj(z*_t)
    let z = |path: &NoiseRealization, k: usize| path.z_star[k].conj();
    let y = |path: &NoiseRealization, k: usize| path.y_star[k].conj();

    let mut checks = Vec::new();
    let mut push = |name, stat: Stat| {
        checks.push(MomentCheck {
            name,
            max_abs_deviation: stat.max_dev,
            max_sigmas: stat.max_sigmas,
            scale: 1.0 / (n as f64).sqrt(),
            flagged: stat.max_sigmas > NOISE_FLAG_SIGMAS,
        })
    };

    let mut mz = Stat::default();
    let mut my = Stat::default();
    for &k in &idx {
        mz.absorb(paths.iter().map(|q| z(q, k)), ZERO);
        my.absorb(paths.iter().map(|q| y(q, k)), ZERO);
    }
    push("mean_z", mz);
    push("mean_y", my);

    let mut cz = Stat::default();
    let mut cy = Stat::default();
    let mut pz = Stat::default();
    let mut py = Stat::default();
    let mut xzy = Stat::default();
    for &k in &idx {
        for &l in &idx {
            let (tk, tl) = (grid.t(k), grid.t(l));
            cz.absorb(paths.iter().map(|q| z(q, k) * z(q, l).conj()), alpha(tk, tl, p));
            cy.absorb(paths.iter().map(|q| y(q, k) * y(q, l).conj()), beta(tk, tl, p));
            pz.absorb(paths.iter().map(|q| z(q, k) * z(q, l)), ZERO);
            py.absorb(paths.iter().map(|q| y(q, k) * y(q, l)), ZERO);
            xzy.absorb(paths.iter().map(|q| z(q, k) * y(q, l).conj()), ZERO);
        }
    }
    push("cov_z_alpha", cz);
    push("cov_y_beta", cy);
    push("pseudo_cov_z", pz);
    push("pseudo_cov_y", py);
    push("cross_cov_zy", xzy);
    Ok(NoiseReport { n_paths: n, checks })
}

#[derive(Default)]
struct Stat {
    max_dev: f64,
    max_sigmas: f64,
}

impl Stat {
    fn absorb(&mut self, samples: impl Iterator<Item = C64> + Clone, expected: C64) {
        let mut count = 0usize;
        let mut sum = ZERO;
        for s in samples.clone() {
            sum += s;
            count += 1;
        }
        let mean = sum / count as f64;
        let var = samples.map(|s| (s - mean).norm_sqr()).sum::<f64>() / (count.max(2) - 1) as f64;
        let dev = (mean - expected).norm();
        let se = (var / count as f64).sqrt();
        self.max_dev = self.max_dev.max(dev);
        let sig = if se > 0.0 {
            dev / se
        } else if dev > 1e-12 * (1.0 + expected.norm()) {
            f64::INFINITY
        } else {
            0.0
        };
        self.max_sigmas = self.max_sigmas.max(sig);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn params() -> ParameterSet {
        ParameterSet::default()
    }

    #[test]
    fn alpha_values() {
        let p = params();
        assert_eq!(alpha(0.3, 0.3, &p), C64::new(1.0, 0.0));
        assert!((alpha(PI, 0.0, &p) - C64::new(-1.0, 0.0)).norm() < 1e-15);
        let (t, s) = (1.7, 0.4);
        assert!((alpha(t, s, &p) - alpha(s, t, &p).conj()).norm() < 1e-15);
    }

    #[test]
    fn beta_values() {
        let mut p = params();
        p.bath_rate = 5.0;
        assert_eq!(beta(1.0, 1.0, &p), C64::new(2.5, 0.0));
        p.bath_rate = 0.5;
        assert!((beta(0.0, 2.0, &p).re - 0.25 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((beta(0.0, 2.0, &p).re - 0.091_970).abs() < 1e-6);
        p.bath_strength = 0.0;
        assert_eq!(beta(0.0, 2.0, &p), ZERO);
    }

    #[test]
    fn zero_coupling_and_zero_bath_give_zero_paths() {
        let grid = TimeGrid::new(0.1, 10);
        let p = ParameterSet { g: 0.0, bath_strength: 0.0, ..params() };
        let mut rng = trajectory_rng(1, 0, NoiseTag::Z);
        assert!(sample_z(&mut rng, &grid, &p).1.iter().all(|z| *z == ZERO));
        assert!(sample_y(&mut rng, &grid, &p).unwrap().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn z_path_matches_definition() {
        let grid = TimeGrid::new(0.25, 8);
        let p = ParameterSet { g: 0.7, ..params() };
        let (z0, path) = sample_z(&mut trajectory_rng(3, 1, NoiseTag::Z), &grid, &p);
        for (k, v) in path.iter().enumerate() {
            let expect = C64::new(0.0, -0.7) * z0.conj() * C64::new(0.0, grid.t(k)).exp();
            assert_eq!(*v, expect);
        }
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let grid = TimeGrid::new(0.1, 20);
        let s = NoiseSampler::new(&params(), grid).unwrap();
        assert_eq!(s.realization(9, 4), s.realization(9, 4));
        assert_ne!(s.realization(9, 4), s.realization(9, 5));
        assert_ne!(s.realization(9, 4).y_star, s.realization(10, 4).y_star);
    }

    #[test]
    fn two_point_cholesky_closed_form() {
        let dt = 0.1;
        let grid = TimeGrid::new(dt, 1);
        let p = ParameterSet { bath_strength: 1.0, bath_rate: 1.0, ..params() };
        let s = NoiseSampler::new(&p, grid).unwrap();
        let ch = s.cholesky().unwrap();
        assert!((ch.get(0, 0) - 0.5f64.sqrt()).abs() < 1e-15);
        let c01 = 0.5 * (-dt).exp();
        assert!((ch.get(1, 0) * ch.get(0, 0) - c01).abs() < 1e-15);
        assert!((ch.get(1, 0).powi(2) + ch.get(1, 1).powi(2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let err = Cholesky::factor(2, |i, j| if i == j { 1.0 } else { 2.0 }).unwrap_err();
        assert!(matches!(err, NoiseError::Cholesky { pivot: 1, .. }));
    }

    #[test]
    fn validation_needs_enough_paths() {
        let grid = TimeGrid::new(0.1, 4);
        let one = [NoiseRealization::zero(&grid)];
        assert!(matches!(validate_noise(&one, &params(), &grid), Err(NoiseError::TooFewPaths { .. })));
    }
}
