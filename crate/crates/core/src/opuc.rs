//! Full-plane diagonal correlations `D_n = E[σ_(0,0) σ_(2n,0)]`.
//!
//! At criticality `D_n` has a closed product form tied to Legendre
//! polynomials. Below criticality the sequence is obtained from orthogonal
//! polynomials on the unit circle for the weight
//! `w(e^{it}) = (1+q²)(1 − (m cos t/2)²)^{1/2}`, `m = 2/(q + 1/q)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Glaisher–Kinkelin constant.
pub const GLAISHER: f64 = 1.282_427_129_100_622_6;

/// `ζ'(−1) = 1/12 − ln A`.
pub fn zeta_prime_minus_one() -> f64 {
    1.0 / 12.0 - GLAISHER.ln()
}

/// `lim D_n (2n)^{1/4} = 2^{1/3} e^{3ζ'(−1)} ≈ 0.76704` at criticality.
pub fn critical_amplitude() -> f64 {
    2f64.powf(1.0 / 3.0) * (3.0 * zeta_prime_minus_one()).exp()
}

/// Lattice spin normalization `C_σ = 2^{1/6} e^{(3/2)ζ'(−1)}`, so that
/// `C_σ²` equals [`critical_amplitude`].
pub fn c_sigma() -> f64 {
    2f64.powf(1.0 / 6.0) * (1.5 * zeta_prime_minus_one()).exp()
}

/// `ln D_n` at criticality: `n ln(2/π) + Σ_{l<n} (l−n) ln(1 − 1/(4l²))`.
pub fn diagonal_critical_ln(n: usize) -> f64 {
    let nf = n as f64;
    let mut s = nf * (2.0 / PI).ln();
    for l in 1..n {
        let lf = l as f64;
        s += (lf - nf) * (-1.0 / (4.0 * lf * lf)).ln_1p();
    }
    s
}

/// `D_n` at criticality.
pub fn diagonal_critical(n: usize) -> f64 {
    diagonal_critical_ln(n).exp()
}

/// Relative residual of `π 2^{−2n} D_{n+1}/D_n = ((2n−1)!!/n!)^{−2} · 2/(2n+1)`.
pub fn legendre_recurrence_check(n: usize) -> f64 {
    let nf = n as f64;
    let lhs = PI.ln() - 2.0 * nf * 2f64.ln() + diagonal_critical_ln(n + 1) - diagonal_critical_ln(n);
    // ln((2n-1)!!/n!) = Σ_{j=1}^{n} ln((2j-1)/j)
    let ratio: f64 = (1..=n).map(|j| ((2 * j - 1) as f64 / j as f64).ln()).sum();
    let rhs = -2.0 * ratio + (2.0 / (2.0 * nf + 1.0)).ln();
    (lhs - rhs).exp_m1().abs()
}

/// `m = sin 2θ = 2/(q + 1/q)`.
pub fn mass(q: f64) -> f64 {
    2.0 / (q + 1.0 / q)
}

/// The weight `w(e^{it})`.
pub fn weight(q: f64, t: f64) -> f64 {
    let y = mass(q) * (t / 2.0).cos();
    (1.0 + q * q) * (1.0 - y * y).max(0.0).sqrt()
}

/// Monic orthogonal polynomials for [`weight`] with their recurrence data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OpucState {
    pub q: f64,
    /// Quadrature nodes used for the moments.
    pub nodes: usize,
    /// `c_k = (1/2π) ∫ w e^{−ikt} dt`, real.
    pub moments: Vec<f64>,
    /// `Φ_n` as coefficient vectors, constant term first.
    pub phi: Vec<Vec<f64>>,
    /// Verblunsky coefficients `α_n = −Φ_{n+1}(0)`.
    pub alpha: Vec<f64>,
    /// `β_n = ‖Φ_n‖²`.
    pub beta: Vec<f64>,
    /// Largest `|⟨Φ_n, z^k⟩| / β_n` over `k < n`.
    pub orthogonality_residual: f64,
}

fn moments(q: f64, n: usize, nodes: usize) -> Vec<f64> {
    let h = 2.0 * PI / nodes as f64;
    let w: Vec<f64> = (0..nodes).map(|j| weight(q, j as f64 * h)).collect();
    (0..=n)
        .map(|k| {
            let s: f64 = w
                .iter()
                .enumerate()
                .map(|(j, &wj)| wj * (((k * j) % nodes) as f64 * h).cos())
                .sum();
            s / nodes as f64
        })
        .collect()
}

fn moments_fast(q: f64, n: usize, nodes: usize) -> Vec<f64> {
    let h = 2.0 * PI / nodes as f64;
    let mut buf: Vec<Complex64> = (0..nodes).map(|j| Complex64::new(weight(q, j as f64 * h), 0.0)).collect();
    FftPlanner::new().plan_fft_forward(nodes).process(&mut buf);
    buf[..=n].iter().map(|c| c.re / nodes as f64).collect()
}

fn inner(c: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (j, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (k, &y) in b.iter().enumerate() {
            s += x * y * c[j.abs_diff(k)];
        }
    }
    s
}

fn gram_schmidt(c: &[f64], n_max: usize) -> (Vec<Vec<f64>>, Vec<f64>, f64) {
    let mut phi: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
    let mut beta = Vec::with_capacity(n_max + 1);
    let mut resid: f64 = 0.0;
    for n in 0..=n_max {
        let mut p = vec![0.0; n + 1];
        p[n] = 1.0;
        for _ in 0..2 {
            for (j, pj) in phi.iter().enumerate() {
                let r = inner(c, &p, pj) / beta[j];
                for (a, &b) in p.iter_mut().zip(pj) {
                    *a -= r * b;
                }
            }
        }
        let b = inner(c, &p, &p);
        for k in 0..n {
            let mut e = vec![0.0; k + 1];
            e[k] = 1.0;
            resid = resid.max((inner(c, &p, &e) / b).abs());
        }
        phi.push(p);
        beta.push(b);
    }
    (phi, beta, resid)
}

fn opuc_with_nodes(q: f64, n_max: usize, nodes: usize) -> OpucState {
    let c = moments_fast(q, n_max + 1, nodes);
    let (phi, beta, resid) = gram_schmidt(&c, n_max + 1);
    let alpha = (0..=n_max).map(|n| -phi[n + 1][0]).collect();
    OpucState {
        q,
        nodes,
        moments: c,
        phi: phi[..=n_max].to_vec(),
        alpha,
        beta: beta[..=n_max].to_vec(),
        orthogonality_residual: resid,
    }
}

/// Default quadrature size.
pub const QUADRATURE_NODES: usize = 1 << 16;

/// Orthogonal polynomials up to degree `n_max` (α up to `α_{n_max}`), with a
/// node-doubling check on the Verblunsky coefficients.
pub fn compute_opuc(q: f64, n_max: usize) -> Result<OpucState> {
    compute_opuc_internal(q, n_max, 64)
}

fn compute_opuc_internal(q: f64, n_max: usize, cap: usize) -> Result<OpucState> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!("q = {q} outside (0, 1)")));
    }
    if n_max > cap {
        return Err(Error::InvalidArgument(format!("n_max = {n_max} above {cap}")));
    }
    let a = opuc_with_nodes(q, n_max, QUADRATURE_NODES);
    let b = opuc_with_nodes(q, n_max, 2 * QUADRATURE_NODES);
    let shift = a
        .alpha
        .iter()
        .zip(&b.alpha)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if shift > 1e-8 {
        return Err(Error::QuadratureUnderResolved { shift });
    }
    Ok(a)
}

impl OpucState {
    /// `Φ_n(z)` for real `z`.
    pub fn eval(&self, n: usize, z: f64) -> f64 {
        self.phi[n].iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    /// `Φ_n*(z) = z^n Φ_n(1/z)`.
    pub fn eval_star(&self, n: usize, z: f64) -> f64 {
        self.phi[n].iter().fold(0.0, |acc, &c| acc * z + c)
    }

    /// Largest `|β_n/β_{n−1} − (1 − α_{n−1}²)|`.
    pub fn norm_product_residual(&self) -> f64 {
        (1..self.beta.len())
            .map(|n| (self.beta[n] / self.beta[n - 1] - (1.0 - self.alpha[n - 1].powi(2))).abs())
            .fold(0.0, f64::max)
    }

    /// Largest coefficient mismatch in the Szegő recurrence
    /// `Φ_{n+1}(z) = zΦ_n(z) − α_n Φ_n*(z)`.
    pub fn szego_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 0..self.phi.len() - 1 {
            let p = &self.phi[n];
            for k in 0..=n + 1 {
                let shifted = if k >= 1 { p[k - 1] } else { 0.0 };
                let star = if k <= n { p[n - k] } else { 0.0 };
                worst = worst.max((self.phi[n + 1][k] - (shifted - self.alpha[n] * star)).abs());
            }
        }
        worst
    }
}

/// `D_n`, `D_n*` for `n = 1..=n_max` (index 0 holds `n = 1`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagonalSequence {
    pub q: f64,
    pub d: Vec<f64>,
    pub dstar: Vec<f64>,
    /// Relative residual of
    /// `D_{n+1}Φ_n*(q²) + q²D*_{n+1}Φ_n(q²) = β_n···β_0`, for `n = 0..n_max−1`.
    pub telescoping_residual: Vec<f64>,
}

impl DiagonalSequence {
    pub fn d(&self, n: usize) -> f64 {
        self.d[n - 1]
    }

    pub fn dstar(&self, n: usize) -> f64 {
        self.dstar[n - 1]
    }
}

/// One step `(D_n, D_n*) -> (D_{n+1}, D*_{n+1})`.
fn forward(state: &OpucState, n: usize, d: f64, ds: f64) -> (f64, f64) {
    let q2 = state.q * state.q;
    let a = state.alpha[n - 1];
    let den = 1.0 - a * a;
    let cs = (d + a * ds) / den;
    let c = (ds + a * d) / den;
    (cs * state.beta[n], c * state.beta[n] / q2)
}

/// One step `(D_{n+1}, D*_{n+1}) -> (D_n, D_n*)`.
fn backward(state: &OpucState, n: usize, d: f64, ds: f64) -> (f64, f64) {
    let q2 = state.q * state.q;
    let cs = d / state.beta[n];
    let c = q2 * ds / state.beta[n];
    let a = state.alpha[n - 1];
    (cs - a * c, c - a * cs)
}

fn telescoping(state: &OpucState, d: &[f64], ds: &[f64]) -> Vec<f64> {
    let q2 = state.q * state.q;
    let mut prod = 1.0;
    (0..d.len())
        .map(|n| {
            prod *= state.beta[n];
            let lhs = d[n] * state.eval_star(n, q2) + q2 * ds[n] * state.eval(n, q2);
            (lhs / prod - 1.0).abs()
        })
        .collect()
}

/// Initial data `(D_1, D_1*)`: the decaying solution of the backward
/// recurrence, scaled so that `D_1 + q²D_1* = β_0`.
pub fn initial_data(q: f64) -> Result<(f64, f64)> {
    let s = subcritical_backward(q, 1)?;
    Ok((s.d[0], s.dstar[0]))
}

fn start_index(q: f64, n_max: usize) -> usize {
    let extra = ((1e-16f64).ln() / (2.0 * q.ln())).ceil().max(0.0) as usize;
    n_max + extra + 8
}

fn subcritical_backward(q: f64, n_max: usize) -> Result<DiagonalSequence> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!("q = {q} outside (0, 1)")));
    }
    let top = start_index(q, n_max);
    let state = compute_opuc_internal(q, top, usize::MAX)?;
    let (mut d, mut ds) = (1.0, 0.0);
    let mut dv = vec![0.0; top];
    let mut dsv = vec![0.0; top];
    dv[top - 1] = d;
    dsv[top - 1] = ds;
    for n in (1..top).rev() {
        (d, ds) = backward(&state, n, d, ds);
        dv[n - 1] = d;
        dsv[n - 1] = ds;
    }
    let scale = state.beta[0] / (dv[0] + q * q * dsv[0]);
    for v in dv.iter_mut().chain(dsv.iter_mut()) {
        *v *= scale;
    }
    dv.truncate(n_max + 1);
    dsv.truncate(n_max + 1);
    // telescoping for n = 0..n_max-1 uses D_{n+1}
    let tel = telescoping(&state, &dv[..n_max], &dsv[..n_max]);
    dv.truncate(n_max);
    dsv.truncate(n_max);
    Ok(DiagonalSequence {
        q,
        d: dv,
        dstar: dsv,
        telescoping_residual: tel,
    })
}

/// `D_n`, `D_n*` below criticality for `n ≤ n_max ≤ 64`.
pub fn diagonal_subcritical(q: f64, n_max: usize) -> Result<DiagonalSequence> {
    if n_max == 0 || n_max > 64 {
        return Err(Error::InvalidArgument(format!("n_max = {n_max} outside 1..=64")));
    }
    subcritical_backward(q, n_max)
}

/// Forward recurrence from externally supplied `(D_1, D_1*)`. The forward
/// direction amplifies errors in `D_1*` by about `q^{−2n}`.
pub fn diagonal_subcritical_from(q: f64, n_max: usize, d1: f64, d1_star: f64) -> Result<DiagonalSequence> {
    if n_max == 0 || n_max > 64 {
        return Err(Error::InvalidArgument(format!("n_max = {n_max} outside 1..=64")));
    }
    let state = compute_opuc(q, n_max)?;
    let residual = ((d1 + q * q * d1_star) / state.beta[0] - 1.0).abs();
    if residual > 1e-8 {
        return Err(Error::InconsistentInitialData { residual });
    }
    let mut d = vec![d1];
    let mut ds = vec![d1_star];
    for n in 1..n_max {
        let (a, b) = forward(&state, n, d[n - 1], ds[n - 1]);
        d.push(a);
        ds.push(b);
    }
    let tel = telescoping(&state, &d, &ds);
    Ok(DiagonalSequence {
        q,
        d,
        dstar: ds,
        telescoping_residual: tel,
    })
}

/// Coefficients of `Q_n(e^{it}) = D_n + ... + D_n* e^{int}` (constant first).
pub fn q_polynomial(n: usize, q: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(vec![1.0]);
    }
    if q == 1.0 {
        return Ok(legendre_q(n));
    }
    let seq = diagonal_subcritical(q, n)?;
    let state = compute_opuc(q, n)?;
    let a = state.alpha[n - 1];
    let (d, ds) = (seq.d(n), seq.dstar(n));
    let den = 1.0 - a * a;
    let cs = (d + a * ds) / den;
    let c = (ds + a * d) / den;
    let p = &state.phi[n];
    Ok((0..=n).map(|k| c * p[k] + cs * p[n - k]).collect())
}

/// Critical `Q_n`: `e^{−int/2} Q_n(e^{it}) = P_n(cos t/2)` with `P_n`
/// proportional to the Legendre polynomial and leading coefficient `2^n D_n`.
fn legendre_q(n: usize) -> Vec<f64> {
    // Legendre coefficients in powers of x via the three-term recurrence.
    let mut p0 = vec![1.0];
    let mut p1 = vec![0.0, 1.0];
    for k in 1..n {
        let kf = k as f64;
        let mut next = vec![0.0; k + 2];
        for (j, &c) in p1.iter().enumerate() {
            next[j + 1] += (2.0 * kf + 1.0) * c / (kf + 1.0);
        }
        for (j, &c) in p0.iter().enumerate() {
            next[j] -= kf * c / (kf + 1.0);
        }
        p0 = p1;
        p1 = next;
    }
    let leg = if n == 0 { p0 } else { p1 };
    let scale = 2f64.powi(n as i32) * diagonal_critical(n) / leg[n];
    // x^j with x = cos(t/2): e^{int/2} x^j = 2^{-j} Σ_r C(j,r) e^{i t (n + j - 2r)/2}
    let mut out = vec![0.0; n + 1];
    for (j, &c) in leg.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mut binom = 1.0;
        for r in 0..=j {
            let idx = (n + j - 2 * r) / 2;
            out[idx] += scale * c * binom / 2f64.powi(j as i32);
            binom = binom * (j - r) as f64 / (r + 1) as f64;
        }
    }
    out
}

/// `Θ_n(k, s)` on a window `k ∈ [k_min, k_max]`, `0 ≤ s ≤ s_max`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThetaObservable {
    pub n: usize,
    pub q: f64,
    pub k_min: i32,
    pub k_max: i32,
    pub s_max: i32,
    /// Row-major by `s`, then `k`; entries with `k + s` odd are zero.
    pub values: Vec<f64>,
    /// Largest imaginary part met during the inversion.
    pub max_imag: f64,
}

impl ThetaObservable {
    /// `Θ_n(k, s)`, using `Θ_n(k, −s) = Θ_n(k, s)`.
    pub fn get(&self, k: i32, s: i32) -> f64 {
        let s = s.abs();
        assert!(k >= self.k_min && k <= self.k_max && s <= self.s_max, "({k},{s}) outside window");
        let w = (self.k_max - self.k_min + 1) as usize;
        self.values[s as usize * w + (k - self.k_min) as usize]
    }

    /// `Δ_θΘ_n(k,s) = Θ_n(k,s) − (m/4) Σ Θ_n(k±1, s±1)`.
    pub fn laplacian(&self, k: i32, s: i32) -> f64 {
        let m = mass(self.q);
        let nb: f64 = [(1, 1), (-1, 1), (-1, -1), (1, -1)]
            .iter()
            .map(|&(dk, ds)| self.get(k + dk, s + ds))
            .sum();
        self.get(k, s) - 0.25 * m * nb
    }
}

/// FFT size for the inversion over a `4π` period.
pub const THETA_NODES: usize = 1 << 18;

/// Reconstructs `Θ_n` by Fourier inversion of
/// `Q_{n,s}(e^{it}) = ρ(t)^s Q_n(e^{it})`, `ρ = (1 − (1−y²)^{1/2})/y`,
/// `y = m cos(t/2)`. `q = 1` selects the critical (Legendre) route.
pub fn theta_full_plane(n: usize, q: f64, k_range: (i32, i32), s_max: i32) -> Result<ThetaObservable> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidArgument(format!("q = {q} outside (0, 1]")));
    }
    let m = mass(q);
    let rho_max = (1.0 - (1.0 - m * m).max(0.0).sqrt()) / m;
    if s_max < 0 || (s_max as f64) * rho_max.ln() < -700.0 {
        return Err(Error::WindowTooLarge { s: s_max });
    }
    let (k_min, k_max) = k_range;
    if k_min > k_max || (k_max - k_min) as usize >= THETA_NODES / 2 {
        return Err(Error::InvalidArgument("bad k window".into()));
    }
    let coeffs = q_polynomial(n, q)?;
    let big_m = THETA_NODES;
    let h = 4.0 * PI / big_m as f64;
    let qn: Vec<Complex64> = (0..big_m)
        .map(|j| {
            let t = j as f64 * h;
            let z = Complex64::from_polar(1.0, t);
            coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
        })
        .collect();
    let rho: Vec<f64> = (0..big_m)
        .map(|j| {
            let y = m * (j as f64 * h / 2.0).cos();
            if y.abs() < 1e-300 {
                0.0
            } else {
                (1.0 - (1.0 - y * y).max(0.0).sqrt()) / y
            }
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(big_m);
    let w = (k_max - k_min + 1) as usize;
    let mut values = vec![0.0; w * (s_max as usize + 1)];
    let mut max_imag: f64 = 0.0;
    let mut buf = qn.clone();
    for s in 0..=s_max {
        if s > 0 {
            for (b, &r) in buf.iter_mut().zip(&rho) {
                *b *= r;
            }
        }
        let mut spec = buf.clone();
        fft.process(&mut spec);
        for k in k_min..=k_max {
            if (k + s).rem_euclid(2) == 1 {
                continue;
            }
            let c = spec[k.rem_euclid(big_m as i32) as usize] / big_m as f64;
            max_imag = max_imag.max(c.im.abs());
            values[s as usize * w + (k - k_min) as usize] = c.re;
        }
    }
    Ok(ThetaObservable {
        n,
        q,
        k_min,
        k_max,
        s_max,
        values,
        max_imag,
    })
}

/// Fourier coefficients `0..=n` (in `e^{it}`) of `(1 − y²)^{1/2} Q_n(e^{it})`;
/// those of index `1..n−1` vanish exactly when `Q_n` is the right polynomial.
pub fn theta01_coefficients(n: usize, q: f64) -> Result<Vec<f64>> {
    let coeffs = q_polynomial(n, q)?;
    let m = mass(q);
    let nodes = QUADRATURE_NODES;
    let h = 2.0 * PI / nodes as f64;
    let mut buf: Vec<Complex64> = (0..nodes)
        .map(|j| {
            let t = j as f64 * h;
            let y = m * (t / 2.0).cos();
            let z = Complex64::from_polar(1.0, t);
            let qn = coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
            qn * (1.0 - y * y).max(0.0).sqrt()
        })
        .collect();
    FftPlanner::new().plan_fft_forward(nodes).process(&mut buf);
    Ok(buf[..=n].iter().map(|c| c.re / nodes as f64).collect())
}

#[doc(hidden)]
pub fn moments_direct(q: f64, n: usize, nodes: usize) -> Vec<f64> {
    moments(q, n, nodes)
}
