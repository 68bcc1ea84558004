//! One pass/fail line per acceptance criterion; the test fails if any does.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use planar_ising::continuum::*;
use planar_ising::correlators::{source_regularity, three_term_residual, Solver};
use planar_ising::kacward::{KacWardAssembly, ModelParams};
use planar_ising::lattice::{centered_square, rectangle_domain, GridCoord};
use planar_ising::opuc::*;
use planar_ising::pfaffian::complex_log_det;
use planar_ising::verify::{run_suite, SuiteConfig};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// `ζ'(−1)` from the Euler–Maclaurin expansion of `ln ∏ k^k`.
fn zeta_prime_oracle() -> f64 {
    let n = 20.0f64;
    let lh: f64 = (1..=20).map(|k| k as f64 * (k as f64).ln()).sum();
    let main = (n * n / 2.0 + n / 2.0 + 1.0 / 12.0) * n.ln() - n * n / 4.0;
    let tail = 1.0 / (720.0 * n.powi(2)) - 1.0 / (5040.0 * n.powi(4)) + 1.0 / (10080.0 * n.powi(6));
    1.0 / 12.0 - (lh - main - tail)
}

fn c1_oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let cfg = SuiteConfig::default();
    let rep = run_suite(&cfg).unwrap();
    let secs = t.elapsed().as_secs_f64();
    outcome(
        rep.passed && rep.domains >= 50 && secs <= 120.0,
        format!(
            "{} domains, {} checks, max error {:.2e} (tol 1e-11), {secs:.1}s",
            rep.domains,
            rep.checks.len(),
            rep.max_error
        ),
    )
}

fn c2_kac_ward_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for side in [2, 4, 8, 16] {
        let d = rectangle_domain(side, side).unwrap();
        let asm = KacWardAssembly::assemble(&d, &ModelParams::homogeneous(PI / 3.0).unwrap()).unwrap();
        let pf = asm.pfaffian().unwrap();
        let (phase, log_det) = complex_log_det(d.num_oriented(), asm.id_minus_t()).unwrap();
        let log_pf2 = 2.0 * (pf.log_abs + asm.log_prefactor());
        // relative error of Pf² against det, including the phase of det
        let rel = (Complex64::from_polar(1.0, 0.0) - phase * (log_det - log_pf2).exp()).norm();
        worst = worst.max(rel);
    }
    outcome(worst <= 1e-9, format!("max relative error {worst:.2e} up to 16x16 faces (tol 1e-9)"))
}

fn c3_three_term() -> Outcome {
    let d = rectangle_domain(8, 8).unwrap();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for theta in [PI / 6.0, PI / 4.0, PI / 3.0] {
        let s = Solver::new(&d, &ModelParams::homogeneous(theta).unwrap()).unwrap();
        for e in (0..d.edges().len()).filter(|&e| !d.edges()[e].is_boundary()) {
            worst = worst.max(three_term_residual(&s, e).unwrap().abs());
            count += 1;
        }
    }
    outcome(worst <= 1e-10, format!("{count} edge checks, max residual {worst:.2e} (tol 1e-10)"))
}

fn c4_regularity() -> Outcome {
    let d = rectangle_domain(8, 8).unwrap();
    let g = GridCoord::new;
    let sources = [(g(7, 8), g(8, 7)), (g(3, 2), g(4, 3)), (g(12, 5), g(11, 4))];
    let (mut sh, mut harm): (f64, f64) = (0.0, 0.0);
    for theta in [PI / 4.0, 0.3, 1.1] {
        let s = Solver::new(&d, &ModelParams::homogeneous(theta).unwrap()).unwrap();
        for &(t, h) in &sources {
            let a = d.oriented_id(t, h).unwrap();
            let r = source_regularity(&s, a).unwrap();
            sh = sh.max(r.s_holomorphicity);
            harm = harm.max(r.harmonicity);
        }
    }
    outcome(
        sh <= 1e-10 && harm <= 1e-10,
        format!("s-holomorphicity {sh:.2e}, massive harmonicity {harm:.2e} (tol 1e-10)"),
    )
}

fn c5_diagonal_formula() -> Outcome {
    let e1 = (diagonal_critical(1) - 2.0 / PI).abs();
    let e2 = (diagonal_critical(2) - 16.0 / (3.0 * PI * PI)).abs();
    let leg = (1..=30).map(legendre_recurrence_check).fold(0.0, f64::max);
    let z = zeta_prime_oracle();
    let scaled = diagonal_critical(200) * 400f64.powf(0.25);
    let literal = 2f64.powf(1.0 / 3.0) * (-3.0 * z).exp();
    let dev = (scaled / literal - 1.0).abs();
    let flipped = (scaled / (2f64.powf(1.0 / 3.0) * (3.0 * z).exp()) - 1.0).abs();
    outcome(
        e1 <= 1e-14 && e2 <= 1e-14 && leg <= 1e-12 && dev <= 5e-3,
        format!(
            "D1 err {e1:.1e}, D2 err {e2:.1e}, Legendre {leg:.1e}; D200(400)^(1/4) = {scaled:.6} vs 2^(1/3)e^(-3z) = {literal:.6} \
             (off by {:.1}%, tol 0.5%); against 2^(1/3)e^(+3z) off by {:.3}%",
            100.0 * dev,
            100.0 * flipped
        ),
    )
}

fn c6_infinite_volume() -> Outcome {
    let t = Instant::now();
    let target = 2.0 / PI;
    let g = GridCoord::new;
    let mut devs = Vec::new();
    for l in [8, 16, 24, 32] {
        let d = centered_square(l).unwrap();
        let v = Solver::new(&d, &ModelParams::critical())
            .unwrap()
            .spin_correlator(&[g(0, 0), g(2, 0)])
            .unwrap()
            .value;
        devs.push((l, v, (v / target - 1.0).abs()));
    }
    let monotone = devs.windows(2).all(|w| w[1].2 < w[0].2);
    let last = devs.last().unwrap().2;
    let table: Vec<String> = devs.iter().map(|(l, v, e)| format!("L={l}: {v:.6} ({:.2}%)", 100.0 * e)).collect();
    outcome(
        monotone && last <= 0.01 && t.elapsed().as_secs_f64() <= 300.0,
        format!("{}; monotone {monotone} (tol 1% at L=32)", table.join(", ")),
    )
}

fn c7_szego() -> Outcome {
    let q = 0.6;
    let seq = diagonal_subcritical(q, 40).unwrap();
    let tel = seq.telescoping_residual.iter().take(20).fold(0.0, |m: f64, &r| m.max(r));
    let limit = (1.0 - q.powi(4)).powf(0.25);
    let dev = (seq.d(40) - limit).abs();
    let ds = seq.dstar(40).abs();
    outcome(
        tel <= 1e-8 && dev <= 1e-3 && ds <= 1e-3,
        format!("telescoping {tel:.1e}, |D40 - {limit:.5}| = {dev:.1e}, |D40*| = {ds:.1e}"),
    )
}

fn c8_theta() -> Outcome {
    let mut worst: f64 = 0.0;
    for q in [1.0, 0.6] {
        let seq = if q < 1.0 { Some(diagonal_subcritical(q, 6).unwrap()) } else { None };
        let dn = |n: usize| seq.as_ref().map_or(diagonal_critical(n), |s| s.d(n));
        let dsn = |n: usize| seq.as_ref().map_or(diagonal_critical(n), |s| s.dstar(n));
        for n in 1..=5usize {
            let w = 2 * n as i32 + 4;
            let th = theta_full_plane(n, q, (-w, w + 2 * n as i32), 2).unwrap();
            worst = worst.max((th.get(0, 0) - dn(n)).abs());
            worst = worst.max((th.get(2 * n as i32, 0) - dsn(n)).abs());
            for k in (-w..0).chain(2 * n as i32 + 1..=w + 2 * n as i32).filter(|k| k % 2 == 0) {
                worst = worst.max(th.get(k, 0).abs());
            }
            worst = worst.max((th.laplacian(0, 0) - dn(n + 1) / (1.0 + q * q)).abs());
        }
    }
    outcome(worst <= 1e-7, format!("max boundary/defect error {worst:.1e} for n <= 5 (tol 1e-7)"))
}

fn c9_harness() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for q in [Quantity::Fermion, Quantity::Energy, Quantity::SpinRatio, Quantity::Spin2] {
        let rep = convergence_harness(&HarnessConfig::new(q)).unwrap();
        let devs: Vec<String> = rep.rows.iter().map(|r| format!("{:.3}", r.deviation())).collect();
        ok &= rep.passed;
        parts.push(format!(
            "{} [{}] monotone {} final {:.3} {}",
            q.name(),
            devs.join(" "),
            rep.monotone,
            rep.rows.last().unwrap().deviation(),
            if rep.passed { "ok" } else { "fail" }
        ));
    }
    outcome(ok, parts.join("; "))
}

fn c10_continuum() -> Outcome {
    let d = ContinuumDomain::unit_disk();
    let other = d.clone().with_automorphism(Automorphism::new(2.0, 1.0, 0.5, 1.5).unwrap());
    let pts = [Complex64::new(-0.3, 0.1), Complex64::new(0.2, 0.4), Complex64::new(0.5, -0.5)];
    let mut inv: f64 = 0.0;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs();
    inv = inv.max(rel(spins_domain(&d, &pts).unwrap(), spins_domain(&other, &pts).unwrap()));
    inv = inv.max(rel(energy_one_point(&d, pts[0]), energy_one_point(&other, pts[0])));
    let f1 = fermion_domain(&d, pts[0], pts[1], FermionVariant::F).unwrap();
    let f2 = fermion_domain(&other, pts[0], pts[1], FermionVariant::F).unwrap();
    inv = inv.max((f1 - f2).norm() / f1.norm());

    let centre = Complex64::new(0.1, -0.2);
    let slope = ope_spin_slope(&d, centre, 1e-4, 0.7).unwrap();
    let slope_dev = (slope / (0.5 * energy_one_point(&d, centre)) - 1.0).abs();
    let psi_dev = ope_fermion_deviation(&d, centre, 1e-3, 1.1).unwrap().norm();

    let mut weights: f64 = 0.0;
    for field in [Field::Spin, Field::Energy, Field::Psi] {
        let (hp, hm) =
            covariance_exponents(field, &d, pts[0], pts[1], Complex64::new(0.5, -0.2), Complex64::from_polar(1.7, 0.6)).unwrap();
        let (wp, wm) = field.weights();
        weights = weights.max((hp - wp).abs()).max((hm - wm).abs());
    }
    outcome(
        inv <= 1e-12 && slope_dev <= 0.05 && psi_dev <= 0.05 && weights <= 1e-10,
        format!(
            "automorphism {inv:.1e}, spin OPE slope {:.2}%, fermion OPE {psi_dev:.1e}, weights {weights:.1e}",
            100.0 * slope_dev
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence", c1_oracle_equivalence),
        ("Kac-Ward identity", c2_kac_ward_identity),
        ("three-term identity", c3_three_term),
        ("s-holomorphicity and massive harmonicity", c4_regularity),
        ("diagonal formula", c5_diagonal_formula),
        ("infinite-volume approach", c6_infinite_volume),
        ("subcritical Szego pipeline", c7_szego),
        ("full-plane Theta reconstruction", c8_theta),
        ("convergence harness", c9_harness),
        ("continuum self-consistency", c10_continuum),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        println!(
            "criterion {:>2} {:<42} {}  {} [{:.1}s]",
            i + 1,
            name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        if !o.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
