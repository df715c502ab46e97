use proptest::prelude::*;
use qsd_core::algebra::{herm_eig, kron, sqrt_psd, ComplexMatrix, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn square(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n)
        .prop_map(move |v| ComplexMatrix::from_vec(n, n, v.into_iter().map(|(a, b)| c(a, b)).collect()))
}

fn integer_square(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-4i32..5, -4i32..5), n * n)
        .prop_map(move |v| ComplexMatrix::from_vec(n, n, v.into_iter().map(|(a, b)| c(a as f64, b as f64)).collect()))
}

fn hermitian(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    square(n).prop_map(|m| m.hermitian_part())
}

fn mul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b
}

fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Real roots of λ³ + a λ² + b λ + c with three real roots (trigonometric form).
fn cubic_roots(a: f64, b: f64, c: f64) -> [f64; 3] {
    let q = (a * a - 3.0 * b) / 9.0;
    let r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    if q <= 1e-300 {
        return [-a / 3.0; 3];
    }
    let theta = (r / q.powf(1.5)).clamp(-1.0, 1.0).acos();
    let s = -2.0 * q.sqrt();
    let mut out = [0, 1, 2].map(|k| s * ((theta + 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos() - a / 3.0);
    out.sort_by(f64::total_cmp);
    out
}

fn det3(m: &ComplexMatrix) -> C64 {
    let e = |i, j| m[(i, j)];
    e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
        + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
}

proptest! {
    #[test]
    fn eig_residuals_and_unitarity(a in hermitian(6)) {
        let e = herm_eig(&a).unwrap();
        let scale = a.max_abs().max(1e-300);
        for w in e.values.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        for k in 0..6 {
            let v: Vec<C64> = (0..6).map(|i| e.vectors[(i, k)]).collect();
            let av = a.mul_vec(&v);
            let res: f64 = av.iter().zip(&v).map(|(x, y)| (x - y * e.values[k]).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(res <= 1e-10 * a.frobenius_norm().max(scale), "residual {res}");
        }
        let gram = mul(&e.vectors.adjoint(), &e.vectors);
        prop_assert!(max_diff(&gram, &ComplexMatrix::identity(6)) < 1e-10);
        let tr: f64 = e.values.iter().sum();
        prop_assert!((tr - a.trace().re).abs() <= 1e-10 * 6.0 * scale);
    }

    #[test]
    fn eig_matches_characteristic_polynomial(a in hermitian(3)) {
        let tr = a.trace().re;
        let minors = (0..3).map(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            (a[(j, j)] * a[(k, k)] - a[(j, k)] * a[(k, j)]).re
        }).sum::<f64>();
        let det = det3(&a).re;
        let roots = cubic_roots(-tr, minors, -det);
        let e = herm_eig(&a).unwrap();
        for (x, y) in e.values.iter().zip(roots) {
            prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn sqrt_squares_back(m in square(3)) {
        let a = mul(&m, &m.adjoint()).hermitian_part();
        let b = sqrt_psd(&a).unwrap();
        prop_assert!(b.check_hermitian().is_ok());
        prop_assert!(herm_eig(&b).unwrap().values[0] >= -1e-10);
        prop_assert!(max_diff(&mul(&b, &b), &a) <= 1e-9);
        // sqrt of a square returns the PSD root
        let bb = sqrt_psd(&mul(&b, &b).hermitian_part()).unwrap();
        prop_assert!(max_diff(&bb, &b) <= 1e-8);
    }

    #[test]
    fn kron_mixed_product(a in square(2), b in square(2), c2 in square(2), d in square(2)) {
        let lhs = mul(&kron(&a, &b), &kron(&c2, &d));
        let rhs = kron(&mul(&a, &c2), &mul(&b, &d));
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn kron_associative(a in integer_square(2), b in integer_square(2), c2 in integer_square(2)) {
        let l = kron(&kron(&a, &b), &c2);
        let r = kron(&a, &kron(&b, &c2));
        prop_assert_eq!(l.as_slice(), r.as_slice());
    }
}
