mod common;

use common::{gaussian, jacobi_eigen, normal_quantile, rng};
use deltasketch::linalg::{t_cdf, t_pdf, t_quantile, thin_svd, Matrix};
use proptest::prelude::*;

#[test]
fn svd_of_identity_and_diagonal() {
    let s = thin_svd(&Matrix::identity(3)).unwrap();
    assert_eq!(s.d, vec![1.0, 1.0, 1.0]);
    for i in 0..3 {
        for j in 0..3 {
            let e = f64::from(u8::from(i == j));
            assert!((s.u[(i, j)].abs() - e).abs() < 1e-14);
            assert!((s.v[(i, j)].abs() - e).abs() < 1e-14);
        }
    }
    let s = thin_svd(&Matrix::from_diag(&[1.0, 3.0, 2.0])).unwrap();
    for (a, b) in s.d.iter().zip([3.0, 2.0, 1.0]) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn singular_values_match_jacobi_eigensolve_of_gram() {
    let a = gaussian(6, 4, &mut rng(11));
    let (evals, _) = jacobi_eigen(&a.tr_matmul(&a));
    let s = thin_svd(&a).unwrap();
    assert_eq!(s.d.len(), 4);
    for (d, e) in s.d.iter().zip(&evals) {
        assert!((d - e.max(0.0).sqrt()).abs() < 1e-9, "{d} vs {}", e.sqrt());
    }
}

#[test]
fn reconstruction_and_orthonormality_on_random_shapes() {
    let mut r = rng(3);
    for &(rows, cols) in &[
        (1, 1),
        (1, 7),
        (7, 1),
        (20, 5),
        (5, 20),
        (64, 64),
        (100, 2000),
        (2000, 100),
    ] {
        let a = gaussian(rows, cols, &mut r);
        let s = thin_svd(&a).unwrap();
        let rel = s.reconstruct().sub(&a).frobenius_norm() / a.frobenius_norm();
        assert!(rel <= 1e-10, "{rows}x{cols}: {rel}");
        let kk = rows.min(cols);
        let vtv = s.v.tr_matmul(&s.v);
        let utu = s.u.tr_matmul(&s.u);
        let eye = Matrix::identity(kk);
        assert!(vtv.sub(&eye).max_abs() < 1e-10, "{rows}x{cols} V");
        assert!(utu.sub(&eye).max_abs() < 1e-10, "{rows}x{cols} U");
        assert!(s.d.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn rank_deficient_input_has_clamped_zeros() {
    let mut r = rng(5);
    let a = gaussian(30, 3, &mut r).matmul_tr(&gaussian(12, 3, &mut r));
    let s = thin_svd(&a).unwrap();
    assert_eq!(s.d.iter().filter(|&&d| d > 0.0).count(), 3);
    assert!(s.d[3..].iter().all(|&d| d == 0.0));
    assert!(s.reconstruct().sub(&a).frobenius_norm() / a.frobenius_norm() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transpose_has_the_same_spectrum(rows in 1usize..24, cols in 1usize..24, seed in any::<u64>()) {
        let a = gaussian(rows, cols, &mut rng(seed));
        let s = thin_svd(&a).unwrap();
        let st = thin_svd(&a.transpose()).unwrap();
        prop_assert_eq!(s.d.len(), st.d.len());
        for (x, y) in s.d.iter().zip(&st.d) {
            prop_assert!((x - y).abs() <= 1e-10 * s.d[0].max(1.0));
        }
    }
}

#[test]
fn t_quantile_closed_forms() {
    for nu in [0.5, 1.0, 3.7, 1e3] {
        assert_eq!(t_quantile(0.5, nu).unwrap(), 0.0);
    }
    for p in [0.6, 0.9, 0.975, 0.999] {
        let cauchy = (std::f64::consts::PI * (p - 0.5)).tan();
        assert!((t_quantile(p, 1.0).unwrap() - cauchy).abs() < 1e-9 * cauchy.max(1.0));
    }
    assert!((t_quantile(0.975, 1.0).unwrap() - 12.706_204_736_174_7).abs() < 1e-8);
    // two degrees of freedom: x = (2p − 1)·sqrt(2 / (1 − (2p − 1)²))
    for p in [0.7, 0.95, 0.995] {
        let a: f64 = 2.0 * p - 1.0;
        let want = a * (2.0 / (1.0 - a * a)).sqrt();
        assert!((t_quantile(p, 2.0).unwrap() - want).abs() < 1e-9 * want);
    }
}

#[test]
fn t_quantile_large_nu_is_normal() {
    let z = normal_quantile(0.975);
    assert!((z - 1.959_964).abs() < 1e-5);
    assert!((t_quantile(0.975, 1e9).unwrap() - z).abs() < 1e-4);
}

#[test]
fn t_quantile_monotone_in_p_and_nu() {
    let nus = [0.3, 1.0, 2.5, 7.0, 30.0, 151.3, 1e4];
    for &nu in &nus {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..200 {
            let q = t_quantile(i as f64 / 200.0, nu).unwrap();
            assert!(q > prev, "nu={nu} i={i}");
            prev = q;
        }
    }
    for p in [0.9, 0.975, 0.995] {
        let qs: Vec<f64> = nus.iter().map(|&nu| t_quantile(p, nu).unwrap()).collect();
        assert!(qs.windows(2).all(|w| w[0] > w[1]), "p={p}: {qs:?}");
    }
}

#[test]
fn t_quantile_inverts_integrated_density() {
    // Simpson integration of the density from 0 to the quantile recovers p − 1/2.
    for &nu in &[1.0, 3.0, 12.5, 80.0] {
        for &p in &[0.6, 0.8, 0.95, 0.975] {
            let q = t_quantile(p, nu).unwrap();
            let n = 4000;
            let h = q / n as f64;
            let mut s = t_pdf(0.0, nu) + t_pdf(q, nu);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * t_pdf(i as f64 * h, nu);
            }
            let area = s * h / 3.0;
            assert!((area - (p - 0.5)).abs() < 1e-6, "nu={nu} p={p}: {area}");
            assert!((t_cdf(q, nu) - p).abs() < 1e-10);
        }
    }
}

#[test]
fn t_quantile_domain_errors() {
    assert!(t_quantile(0.0, 3.0).is_err());
    assert!(t_quantile(1.0, 3.0).is_err());
    assert!(t_quantile(0.5, 0.0).is_err());
    assert!(t_quantile(0.5, f64::NAN).is_err());
}
