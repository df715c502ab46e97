//! Gauss–Hermite rules for the weight `e^{-x²}` (Golub–Welsch).

use alloc::vec::Vec;

// libm-backed float methods; redundant when std is linked (tests).
#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::{herm_eig, ComplexMatrix, C64, MAX_EIG_DIM};
use crate::error::AlgebraError;

/// Nodes (ascending) and weights of the `n`-point rule for `∫ f(x) e^{-x²} dx`.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>), AlgebraError> {
    if n > MAX_EIG_DIM {
        return Err(AlgebraError::TooLarge { dim: n, max: MAX_EIG_DIM });
    }
    let mut jacobi = ComplexMatrix::zeros(n, n);
    for k in 1..n {
        let b = C64::new((k as f64 / 2.0).sqrt(), 0.0);
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = herm_eig(&jacobi)?;
    let sqrt_pi = core::f64::consts::PI.sqrt();
    let weights = (0..n).map(|k| sqrt_pi * eig.vectors[(0, k)].norm_sqr()).collect();
    Ok((eig.values, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_even_moments() {
        // ∫ x^{2m} e^{-x²} = Γ(m + ½): √π, √π/2, 3√π/4, 15√π/8
        let (x, w) = gauss_hermite(10).unwrap();
        let sp = core::f64::consts::PI.sqrt();
        for (m, exact) in [(0, sp), (1, sp / 2.0), (2, 0.75 * sp), (3, 15.0 / 8.0 * sp)] {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(2 * m)).sum();
            assert!((q - exact).abs() < 1e-12, "moment {m}: {q} vs {exact}");
        }
        let odd: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(3)).sum();
        assert!(odd.abs() < 1e-12);
    }

    #[test]
    fn two_point_rule() {
        let (x, w) = gauss_hermite(2).unwrap();
        assert!((x[1] - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((w[0] - core::f64::consts::PI.sqrt() / 2.0).abs() < 1e-14);
    }
}
