use std::f64::consts::PI;

use planar_ising::opuc::*;
use planar_ising::Error;

/// `ζ'(−1) = 1/12 − ln A` with `ln A` from the Euler–Maclaurin expansion of
/// the hyperfactorial `ln H(n) = Σ k ln k`.
fn zeta_prime_oracle() -> f64 {
    let n = 20.0f64;
    let lh: f64 = (1..=20).map(|k| k as f64 * (k as f64).ln()).sum();
    let main = (n * n / 2.0 + n / 2.0 + 1.0 / 12.0) * n.ln() - n * n / 4.0;
    let tail = 1.0 / (720.0 * n.powi(2)) - 1.0 / (5040.0 * n.powi(4)) + 1.0 / (10080.0 * n.powi(6));
    1.0 / 12.0 - (lh - main - tail)
}

#[test]
fn zeta_constant_and_amplitudes() {
    let z = zeta_prime_minus_one();
    assert!((z - zeta_prime_oracle()).abs() < 1e-12, "{z} vs {}", zeta_prime_oracle());
    assert!((z + 0.165_421_143_700_450_93).abs() < 1e-15);
    let amp = critical_amplitude();
    assert!((amp - 2f64.powf(1.0 / 3.0) * (3.0 * zeta_prime_oracle()).exp()).abs() < 1e-12);
    assert!((c_sigma() * c_sigma() - amp).abs() < 1e-15);
}

#[test]
fn critical_diagonal_values() {
    assert!((diagonal_critical(1) - 2.0 / PI).abs() < 1e-14);
    assert!((diagonal_critical(2) - 16.0 / (3.0 * PI * PI)).abs() < 1e-14);
    // D_3 = (2/π)³ (3/4)^{-2} (15/16)^{-1}
    let d3 = (2.0 / PI).powi(3) / (0.75f64.powi(2) * (15.0 / 16.0));
    assert!((diagonal_critical(3) - d3).abs() < 1e-14);
    // log-space stays finite far out
    let big = diagonal_critical_ln(10_000);
    assert!(big.is_finite() && big < 0.0);
    let mut prev = 1.0;
    for n in 1..50 {
        let d = diagonal_critical(n);
        assert!(d < prev);
        prev = d;
    }
}

#[test]
fn legendre_recurrence() {
    assert!(legendre_recurrence_check(1) <= 1e-15);
    assert!(legendre_recurrence_check(10) <= 1e-13);
    for n in 1..=30 {
        assert!(legendre_recurrence_check(n) <= 1e-12, "n = {n}");
    }
}

#[test]
fn opuc_structure() {
    let s = compute_opuc(0.6, 24).unwrap();
    assert_eq!(s.phi[0], vec![1.0]);
    assert!((s.eval_star(0, 0.3) - 1.0).abs() < 1e-15);
    assert!(s.orthogonality_residual < 1e-9);
    assert!(s.norm_product_residual() < 1e-9);
    assert!(s.szego_residual() < 1e-9);
    for n in 1..=24 {
        assert!((s.beta[n] / s.beta[n - 1] - (1.0 - s.alpha[n - 1].powi(2))).abs() < 1e-9);
        assert!(s.alpha[n].abs() < 1.0);
    }
    // β_0 is the mean of the weight; compare with a plain Riemann sum
    let nodes = 4096;
    let mean: f64 = (0..nodes).map(|j| weight(0.6, 2.0 * PI * j as f64 / nodes as f64)).sum::<f64>() / nodes as f64;
    assert!((s.beta[0] - mean).abs() < 1e-12);
    let direct = moments_direct(0.6, 5, 4096);
    for (a, b) in direct.iter().zip(&s.moments) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn opuc_argument_errors() {
    assert!(compute_opuc(1.0, 4).is_err());
    assert!(compute_opuc(0.0, 4).is_err());
    assert!(compute_opuc(0.5, 65).is_err());
    assert!(diagonal_subcritical(0.6, 0).is_err());
}

#[test]
fn subcritical_sequence() {
    let q = 0.6;
    let seq = diagonal_subcritical(q, 40).unwrap();
    for (n, r) in seq.telescoping_residual.iter().enumerate().take(20) {
        assert!(*r <= 1e-8, "n = {n}: {r}");
    }
    let limit = (1.0 - q.powi(4)).powf(0.25);
    assert!((limit - 0.96590).abs() < 1e-5);
    assert!((seq.d(40) - limit).abs() <= 1e-3);
    assert!(seq.dstar(40).abs() <= 1e-3);
    // D_n decreases to its positive limit and D_n* to zero, both geometrically
    assert!((seq.d(12) - limit).abs() < 1e-12 && seq.dstar(30).abs() < 1e-14);
    for n in 1..40 {
        assert!(seq.d(n + 1) <= seq.d(n) + 1e-15 && seq.d(n + 1) > limit - 1e-14);
        assert!(seq.dstar(n + 1).abs() <= seq.dstar(n).abs() + 1e-17);
    }
    let beta0 = compute_opuc(q, 1).unwrap().beta[0];
    assert!((seq.d(1) + q * q * seq.dstar(1) - beta0).abs() < 1e-12);
}

#[test]
fn forward_recursion_reproduces_backward() {
    let q = 0.6;
    let back = diagonal_subcritical(q, 12).unwrap();
    let fwd = diagonal_subcritical_from(q, 12, back.d(1), back.dstar(1)).unwrap();
    for n in 1..=12 {
        assert!((fwd.d(n) - back.d(n)).abs() < 1e-8);
    }
    assert!(fwd.telescoping_residual.iter().all(|&r| r < 1e-8));
    assert!(matches!(
        diagonal_subcritical_from(q, 12, back.d(1) + 0.01, back.dstar(1)),
        Err(Error::InconsistentInitialData { .. })
    ));
}

#[test]
fn q_polynomial_endpoints() {
    let q = 0.6;
    let seq = diagonal_subcritical(q, 6).unwrap();
    let p = q_polynomial(5, q).unwrap();
    assert!((p[0] - seq.d(5)).abs() < 1e-10);
    assert!((p[5] - seq.dstar(5)).abs() < 1e-10);
    // critical route is palindromic: D_n = D_n*
    let c = q_polynomial(4, 1.0).unwrap();
    for k in 0..=4 {
        assert!((c[k] - c[4 - k]).abs() < 1e-14);
    }
    assert!((c[0] - diagonal_critical(4)).abs() < 1e-14);
    let coeffs = theta01_coefficients(6, q).unwrap();
    for &v in &coeffs[1..6] {
        assert!(v.abs() < 1e-8, "{coeffs:?}");
    }
}

fn check_theta(n: usize, q: f64, d: f64, dstar: f64, dnext: f64) {
    let w = 2 * n as i32 + 4;
    let th = theta_full_plane(n, q, (-w, w + 2 * n as i32), 4).unwrap();
    assert!(th.max_imag < 1e-9);
    assert!((th.get(0, 0) - d).abs() < 1e-8, "{} vs {d}", th.get(0, 0));
    assert!((th.get(2 * n as i32, 0) - dstar).abs() < 1e-8);
    for k in (-w..0).chain(2 * n as i32 + 1..=w).filter(|k| k % 2 == 0) {
        assert!(th.get(k, 0).abs() < 1e-8, "Θ({k},0) = {}", th.get(k, 0));
    }
    assert!((th.get(3, 1) - th.get(3, -1)).abs() == 0.0);
    assert!((th.laplacian(0, 0) - dnext / (1.0 + q * q)).abs() < 1e-8);
    for s in 1..4 {
        for k in -w + 1..w {
            if (k + s) % 2 == 0 {
                assert!(th.laplacian(k, s).abs() < 1e-8, "Δ at ({k},{s}) = {}", th.laplacian(k, s));
            }
        }
    }
}

#[test]
fn theta_observable_critical() {
    let n = 3;
    let d = diagonal_critical(n);
    check_theta(n, 1.0, d, d, diagonal_critical(n + 1));
}

#[test]
fn theta_observable_subcritical() {
    let q = 0.6;
    let seq = diagonal_subcritical(q, 5).unwrap();
    check_theta(3, q, seq.d(3), seq.dstar(3), seq.d(4));
    assert!(matches!(theta_full_plane(2, q, (-4, 4), 100_000), Err(Error::WindowTooLarge { .. })));
}
