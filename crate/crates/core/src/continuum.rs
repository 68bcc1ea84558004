//! Continuum correlators on the upper half-plane and on disks, and the
//! lattice-to-continuum convergence harness.

use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlators::Solver;
use crate::error::{Error, Result};
use crate::kacward::ModelParams;
use crate::lattice::{disk_domain, Domain, GridCoord, CORNER_STEPS};
use crate::opuc;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A point `x + i y` whose coordinates are themselves complex. Real
/// coordinates give an ordinary point; an imaginary perturbation of one
/// coordinate carries a complex-step derivative through every closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pt {
    pub x: Complex64,
    pub y: Complex64,
}

impl Pt {
    pub fn new(z: Complex64) -> Pt {
        Pt {
            x: z.re.into(),
            y: z.im.into(),
        }
    }

    pub fn real(r: f64) -> Pt {
        Pt::new(r.into())
    }

    /// The ordinary point (real parts of the coordinates).
    pub fn value(self) -> Complex64 {
        Complex64::new(self.x.re, self.y.re)
    }

    pub fn conj(self) -> Pt {
        Pt { x: self.x, y: -self.y }
    }

    /// `x² + y²`, i.e. `|z|²` continued analytically.
    pub fn norm_sqr(self) -> Complex64 {
        self.x * self.x + self.y * self.y
    }

    pub fn recip(self) -> Pt {
        let n = self.norm_sqr();
        Pt {
            x: self.x / n,
            y: -self.y / n,
        }
    }
}

impl From<Complex64> for Pt {
    fn from(z: Complex64) -> Pt {
        Pt::new(z)
    }
}

impl Add for Pt {
    type Output = Pt;
    fn add(self, o: Pt) -> Pt {
        Pt {
            x: self.x + o.x,
            y: self.y + o.y,
        }
    }
}

impl Sub for Pt {
    type Output = Pt;
    fn sub(self, o: Pt) -> Pt {
        Pt {
            x: self.x - o.x,
            y: self.y - o.y,
        }
    }
}

impl Neg for Pt {
    type Output = Pt;
    fn neg(self) -> Pt {
        Pt { x: -self.x, y: -self.y }
    }
}

impl Mul for Pt {
    type Output = Pt;
    fn mul(self, o: Pt) -> Pt {
        Pt {
            x: self.x * o.x - self.y * o.y,
            y: self.x * o.y + self.y * o.x,
        }
    }
}

impl Div for Pt {
    type Output = Pt;
    fn div(self, o: Pt) -> Pt {
        self * o.recip()
    }
}

/// Möbius automorphism `w ↦ (a w + b)/(c w + d)` of the upper half-plane,
/// `ad − bc = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Automorphism {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Automorphism {
    pub const IDENTITY: Automorphism = Automorphism {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Normalizes `(a, b, c, d)` to unit determinant.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Automorphism> {
        let det = a * d - b * c;
        if !(det > 0.0) {
            return Err(Error::InvalidArgument(format!("determinant {det} not positive")));
        }
        let s = det.sqrt();
        Ok(Automorphism {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        })
    }

    fn denom(&self, w: Pt) -> Pt {
        Pt::real(self.c) * w + Pt::real(self.d)
    }

    fn apply(&self, w: Pt) -> Pt {
        (Pt::real(self.a) * w + Pt::real(self.b)) / self.denom(w)
    }

    fn inverse(&self, w: Complex64) -> Complex64 {
        (self.d * w - self.b) / (-self.c * w + self.a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    HalfPlane,
    /// Disk of the given center and radius; `rotation` turns the base map.
    Disk { center: Complex64, radius: f64, rotation: f64 },
}

/// A simply connected domain with an explicit conformal map `φ` onto the
/// upper half-plane, followed by an automorphism of the half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuumDomain {
    pub shape: Shape,
    pub automorphism: Automorphism,
}

impl ContinuumDomain {
    pub fn half_plane() -> ContinuumDomain {
        ContinuumDomain {
            shape: Shape::HalfPlane,
            automorphism: Automorphism::IDENTITY,
        }
    }

    pub fn unit_disk() -> ContinuumDomain {
        ContinuumDomain::disk(Complex64::new(0.0, 0.0), 1.0, 0.0)
    }

    pub fn disk(center: Complex64, radius: f64, rotation: f64) -> ContinuumDomain {
        ContinuumDomain {
            shape: Shape::Disk {
                center,
                radius,
                rotation,
            },
            automorphism: Automorphism::IDENTITY,
        }
    }

    /// Same domain, map post-composed with `m`.
    pub fn with_automorphism(mut self, m: Automorphism) -> ContinuumDomain {
        let o = self.automorphism;
        // m ∘ o
        self.automorphism = Automorphism {
            a: m.a * o.a + m.b * o.c,
            b: m.a * o.b + m.b * o.d,
            c: m.c * o.a + m.d * o.c,
            d: m.c * o.b + m.d * o.d,
        };
        self
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match self.shape {
            Shape::HalfPlane => z.im > 0.0,
            Shape::Disk { center, radius, .. } => (z - center).norm() < radius,
        }
    }

    /// `(w, φ_0(w))` where `w` is the normalized disk coordinate.
    fn base(&self, z: Pt) -> (Pt, Pt) {
        match self.shape {
            Shape::HalfPlane => (z, z),
            Shape::Disk {
                center,
                radius,
                rotation,
            } => {
                let w = (z - center.into()) * Pt::new(Complex64::from_polar(1.0 / radius, -rotation));
                let one = Pt::real(1.0);
                (w, Pt::new(I) * (one - w) / (one + w))
            }
        }
    }

    pub fn map_pt(&self, z: Pt) -> Pt {
        self.automorphism.apply(self.base(z).1)
    }

    /// A branch of `(φ')^{1/2}` analytic on the domain.
    pub fn sqrt_deriv_pt(&self, z: Pt) -> Pt {
        let (w, b) = self.base(z);
        let m = self.automorphism.denom(b).recip();
        match self.shape {
            Shape::HalfPlane => m,
            Shape::Disk { radius, rotation, .. } => {
                let c = (Complex64::new(0.0, -2.0) / radius).sqrt() * Complex64::from_polar(1.0, -rotation / 2.0);
                Pt::new(c) / (Pt::real(1.0) + w) * m
            }
        }
    }

    pub fn deriv_pt(&self, z: Pt) -> Pt {
        let s = self.sqrt_deriv_pt(z);
        s * s
    }

    pub fn map(&self, z: Complex64) -> Complex64 {
        self.map_pt(z.into()).value()
    }

    pub fn deriv(&self, z: Complex64) -> Complex64 {
        self.deriv_pt(z.into()).value()
    }

    pub fn sqrt_deriv(&self, z: Complex64) -> Complex64 {
        self.sqrt_deriv_pt(z.into()).value()
    }

    /// `(log φ')'(z) = φ''/φ'`.
    pub fn log_deriv_prime(&self, z: Complex64) -> Complex64 {
        let (w, b) = self.base(z.into());
        let (w, b) = (w.value(), b.value());
        let m = self.automorphism;
        let m_part = -2.0 * m.c / (m.c * b + m.d);
        match self.shape {
            Shape::HalfPlane => m_part,
            Shape::Disk { radius, rotation, .. } => {
                let dw = Complex64::from_polar(1.0 / radius, -rotation);
                let d0 = Complex64::new(0.0, -2.0) / ((1.0 + w) * (1.0 + w)) * dw;
                -2.0 / (1.0 + w) * dw + m_part * d0
            }
        }
    }

    pub fn inverse(&self, w: Complex64) -> Complex64 {
        let b = self.automorphism.inverse(w);
        match self.shape {
            Shape::HalfPlane => b,
            Shape::Disk {
                center,
                radius,
                rotation,
            } => {
                let u = (I - b) / (I + b);
                center + Complex64::from_polar(radius, rotation) * u
            }
        }
    }
}

fn check_points(points: &[Complex64]) -> Result<()> {
    for (p, a) in points.iter().enumerate() {
        for b in &points[p + 1..] {
            if (a - b).norm() < 1e-14 {
                return Err(Error::CoincidentPoints);
            }
        }
    }
    Ok(())
}

/// Closed form of the half-plane spin correlator on complexified points.
fn spins_h_pt(u: &[Pt]) -> Complex64 {
    let m = u.len();
    let mut pref = Complex64::new(1.0, 0.0);
    for p in u {
        pref *= (2.0 * p.y).powf(-0.125);
    }
    // squared modulus ratios |u_p − u_q|² / |u_p − ū_q|²
    let mut r = vec![Complex64::new(0.0, 0.0); m * m];
    for p in 0..m {
        for q in p + 1..m {
            r[p * m + q] = (u[p] - u[q]).norm_sqr() / (u[p] - u[q].conj()).norm_sqr();
        }
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for mask in 0..(1u32 << m) {
        let mut t = Complex64::new(1.0, 0.0);
        for p in 0..m {
            for q in p + 1..m {
                let same = ((mask >> p) & 1) == ((mask >> q) & 1);
                t *= r[p * m + q].powf(if same { 0.25 } else { -0.25 });
            }
        }
        sum += t;
    }
    pref * (sum * 2f64.powf(-(m as f64) / 2.0)).sqrt()
}

fn spins_domain_pt(dom: &ContinuumDomain, u: &[Pt]) -> Complex64 {
    let mapped: Vec<Pt> = u.iter().map(|&p| dom.map_pt(p)).collect();
    let mut cov = Complex64::new(1.0, 0.0);
    for &p in u {
        cov *= dom.deriv_pt(p).norm_sqr().powf(1.0 / 16.0);
    }
    spins_h_pt(&mapped) * cov
}

/// `⟨σ_{u_1}…σ_{u_m}⟩_H` with `+` boundary conditions.
pub fn spins_halfplane(points: &[Complex64]) -> Result<f64> {
    check_points(points)?;
    if let Some(p) = points.iter().find(|p| p.im <= 0.0) {
        return Err(Error::InvalidArgument(format!("{p} not in the upper half-plane")));
    }
    let u: Vec<Pt> = points.iter().map(|&p| p.into()).collect();
    Ok(spins_h_pt(&u).re)
}

/// `⟨σ_{u_1}…σ_{u_m}⟩_Ω = ⟨σ_{φ(u_1)}…⟩_H ∏ |φ'(u_p)|^{1/8}`.
pub fn spins_domain(dom: &ContinuumDomain, points: &[Complex64]) -> Result<f64> {
    check_points(points)?;
    if let Some(p) = points.iter().find(|p| !dom.contains(**p)) {
        return Err(Error::InvalidArgument(format!("{p} outside the domain")));
    }
    let u: Vec<Pt> = points.iter().map(|&p| p.into()).collect();
    Ok(spins_domain_pt(dom, &u).re)
}

/// Complex-step size.
const STEP: f64 = 1e-20;

/// `A_Ω(u_l; others) = 2 ∂_{u_l} log⟨σ…σ⟩_Ω` by complex-step differentiation.
pub fn pre_schwarzian(dom: &ContinuumDomain, points: &[Complex64], l: usize) -> Result<Complex64> {
    spins_domain(dom, points)?;
    let base: Vec<Pt> = points.iter().map(|&p| p.into()).collect();
    let partial = |dx: Complex64, dy: Complex64| {
        let mut u = base.clone();
        u[l].x += dx;
        u[l].y += dy;
        spins_domain_pt(dom, &u).ln().im / STEP
    };
    let h = Complex64::new(0.0, STEP);
    let zero = Complex64::new(0.0, 0.0);
    let dx = partial(h, zero);
    let dy = partial(zero, h);
    Ok(Complex64::new(dx, -dy))
}

/// Central finite-difference version of [`pre_schwarzian`].
pub fn pre_schwarzian_fd(dom: &ContinuumDomain, points: &[Complex64], l: usize, h: f64) -> Result<Complex64> {
    let f = |d: Complex64| {
        let mut u = points.to_vec();
        u[l] += d;
        spins_domain(dom, &u).map(f64::ln)
    };
    let dx = (f(h.into())? - f((-h).into())?) / (2.0 * h);
    let dy = (f(Complex64::new(0.0, h))? - f(Complex64::new(0.0, -h))?) / (2.0 * h);
    Ok(Complex64::new(dx, -dy))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FermionVariant {
    F,
    FStar,
    /// `f^{[η]} = ½(η̄ f + η f*)`.
    FEta(Complex64),
}

/// `f_H(a,z) = 2/(z−a)`, `f*_H(a,z) = 2/(z−ā)`.
pub fn fermion_halfplane(a: Complex64, z: Complex64, v: FermionVariant) -> Result<Complex64> {
    let f = || {
        if (z - a).norm() < 1e-14 {
            Err(Error::CoincidentPoints)
        } else {
            Ok(2.0 / (z - a))
        }
    };
    let fs = || 2.0 / (z - a.conj());
    match v {
        FermionVariant::F => f(),
        FermionVariant::FStar => Ok(fs()),
        FermionVariant::FEta(eta) => Ok(0.5 * (eta.conj() * f()? + eta * fs())),
    }
}

/// Fermionic correlators transported by
/// `f_Ω(a,z) = f_H(φa, φz)(φ'(a)φ'(z))^{1/2}` and
/// `f*_Ω(a,z) = f*_H(φa, φz)(conj φ'(a) φ'(z))^{1/2}`.
pub fn fermion_domain(dom: &ContinuumDomain, a: Complex64, z: Complex64, v: FermionVariant) -> Result<Complex64> {
    let (sa, sz) = (dom.sqrt_deriv(a), dom.sqrt_deriv(z));
    let (pa, pz) = (dom.map(a), dom.map(z));
    let f = || Ok::<_, Error>(fermion_halfplane(pa, pz, FermionVariant::F)? * sa * sz);
    let fs = || fermion_halfplane(pa, pz, FermionVariant::FStar).map(|w| w * sa.conj() * sz);
    match v {
        FermionVariant::F => f(),
        FermionVariant::FStar => fs(),
        FermionVariant::FEta(eta) => Ok(0.5 * (eta.conj() * f()? + eta * fs()?)),
    }
}

/// `⟨ε_z⟩_Ω = |φ'(z)| / (2 Im φ(z))`.
pub fn energy_one_point(dom: &ContinuumDomain, z: Complex64) -> f64 {
    dom.deriv(z).norm() / (2.0 * dom.map(z).im)
}

/// `⟨ε_z⟩` as `Re[(i/2) f*_Ω(z,z)]`.
pub fn energy_via_fermion(dom: &ContinuumDomain, z: Complex64) -> Result<f64> {
    Ok((0.5 * I * fermion_domain(dom, z, z, FermionVariant::FStar)?).re)
}

/// `C_σ² ⟨σ_{u_1} σ_{u_2}⟩`: the predicted `δ^{−1/4} E[σ σ]`.
pub fn spin2_prediction(dom: &ContinuumDomain, u1: Complex64, u2: Complex64) -> Result<f64> {
    Ok(opuc::c_sigma().powi(2) * spins_domain(dom, &[u1, u2])?)
}

/// Fields with known conformal weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Field {
    Spin,
    Energy,
    Psi,
    PsiBar,
}

impl Field {
    pub fn weights(self) -> (f64, f64) {
        match self {
            Field::Spin => (1.0 / 16.0, 1.0 / 16.0),
            Field::Energy => (0.5, 0.5),
            Field::Psi => (0.5, 0.0),
            Field::PsiBar => (0.0, 0.5),
        }
    }
}

fn probe_value(field: Field, dom: &ContinuumDomain, a: Complex64, z: Complex64) -> Result<Complex64> {
    Ok(match field {
        Field::Spin => spins_domain(dom, &[a, z])?.into(),
        Field::Energy => energy_one_point(dom, z).into(),
        Field::Psi => fermion_domain(dom, a, z, FermionVariant::F)?,
        Field::PsiBar => fermion_domain(dom, a, z, FermionVariant::F)?.conj(),
    })
}

/// Measures `(Δ⁺, Δ⁻)` by comparing a correlator on `dom` with the one on
/// the image under `z ↦ c + λz`: the ratio is `∏ λ^{Δ⁺} λ̄^{Δ⁻}` over the
/// insertions (two points, or one for the energy field).
pub fn covariance_exponents(
    field: Field,
    dom: &ContinuumDomain,
    a: Complex64,
    z: Complex64,
    c: Complex64,
    lambda: Complex64,
) -> Result<(f64, f64)> {
    let image = match dom.shape {
        Shape::HalfPlane => {
            return Err(Error::InvalidArgument("probe needs a disk".into()));
        }
        Shape::Disk {
            center,
            radius,
            rotation,
        } => ContinuumDomain {
            shape: Shape::Disk {
                center: c + lambda * center,
                radius: radius * lambda.norm(),
                rotation: rotation + lambda.arg(),
            },
            automorphism: dom.automorphism,
        },
    };
    let v0 = probe_value(field, dom, a, z)?;
    let v1 = probe_value(field, &image, c + lambda * a, c + lambda * z)?;
    let count = if field == Field::Energy { 1.0 } else { 2.0 };
    let lf = (v0 / v1).ln();
    let ll = lambda.ln() * count;
    Ok((
        0.5 * (lf.re / ll.re + lf.im / ll.im),
        0.5 * (lf.re / ll.re - lf.im / ll.im),
    ))
}

/// `(⟨σ_{u'}σ_u⟩|u'−u|^{1/4} − 1)/|u'−u|` for the pair `c ± (r/2)e^{iψ}`,
/// to be compared with `½⟨ε_c⟩`.
pub fn ope_spin_slope(dom: &ContinuumDomain, c: Complex64, r: f64, psi: f64) -> Result<f64> {
    let d = Complex64::from_polar(r / 2.0, psi);
    let v = spins_domain(dom, &[c - d, c + d])?;
    Ok((v * r.powf(0.25) - 1.0) / r)
}

/// `f_Ω(z', z)(z − z')/2 − 1` for `z' = z − r e^{iψ}`.
pub fn ope_fermion_deviation(dom: &ContinuumDomain, z: Complex64, r: f64, psi: f64) -> Result<Complex64> {
    let zp = z - Complex64::from_polar(r, psi);
    Ok(fermion_domain(dom, zp, z, FermionVariant::F)? * (z - zp) / 2.0 - 1.0)
}

// ---------------------------------------------------------------------------
// Convergence harness

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// `δ⁻¹ F(a, z_e)` vs `(2/π) f^{[η_a]}(a, z)`.
    Fermion,
    /// `δ⁻¹ E[ε_e]` vs `(2/π)⟨ε_z⟩`.
    Energy,
    /// `(2δ)⁻¹ [E[σ_ũ σ_{u_2}]/E[σ_u σ_{u_2}] − 1]` vs the directional
    /// derivative `Re[A (ũ − u)/(2δ)]`.
    SpinRatio,
    /// `δ^{−1/4} E[σ_{u_1}σ_{u_2}]` vs `C_σ²⟨σ_{u_1}σ_{u_2}⟩`.
    Spin2,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Fermion => "fermion",
            Quantity::Energy => "energy",
            Quantity::SpinRatio => "spin-ratio",
            Quantity::Spin2 => "spin2",
        }
    }

    pub fn parse(s: &str) -> Option<Quantity> {
        [Quantity::Fermion, Quantity::Energy, Quantity::SpinRatio, Quantity::Spin2]
            .into_iter()
            .find(|q| q.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub quantity: Quantity,
    pub radius: f64,
    /// Inverse meshes `1/δ`, coarse to fine.
    pub meshes: Vec<u32>,
    pub theta: f64,
    /// Fermion source point.
    pub a: Complex64,
    /// Fermion and energy observation point.
    pub z: Complex64,
    /// Spin insertion points.
    pub u: [Complex64; 2],
    /// Threshold on `|ratio − 1|` at the finest mesh.
    pub threshold: f64,
    pub discretization: Discretization,
}

/// How the disk is approximated by lattice faces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    /// Faces whose centers lie in the disk.
    Centers,
    /// Faces whose four vertices lie in the disk.
    Inscribed,
}

/// Faces of mesh `delta` whose closed diamonds lie inside the disk.
pub fn inscribed_disk_domain(radius: f64, delta: f64) -> Result<Domain> {
    let n = (radius / delta).ceil() as i32 + 1;
    let mut faces = Vec::new();
    for k in -n..=n {
        for s in -n..=n {
            let c = GridCoord::new(k, s);
            if c.is_face()
                && CORNER_STEPS
                    .iter()
                    .all(|&(dk, ds)| c.offset(dk, ds).point(delta).norm() < radius)
            {
                faces.push(c);
            }
        }
    }
    Domain::new(faces)
}

impl HarnessConfig {
    pub fn new(quantity: Quantity) -> HarnessConfig {
        let z = match quantity {
            Quantity::Fermion => Complex64::new(0.0, 0.4),
            _ => Complex64::new(0.0, 0.0),
        };
        let u = match quantity {
            Quantity::SpinRatio => [Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0)],
            _ => [Complex64::new(-0.4, 0.0), Complex64::new(0.4, 0.0)],
        };
        HarnessConfig {
            quantity,
            radius: 1.0,
            meshes: vec![6, 9, 12, 18],
            theta: PI / 4.0,
            a: Complex64::new(-0.3, 0.0),
            z,
            u,
            threshold: 0.05,
            discretization: Discretization::Inscribed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub delta: f64,
    pub lattice: Complex64,
    pub continuum: Complex64,
    pub ratio: Complex64,
}

impl ConvergenceRow {
    pub fn deviation(&self) -> f64 {
        (self.ratio - 1.0).norm()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub quantity: Quantity,
    pub rows: Vec<ConvergenceRow>,
    pub threshold: f64,
    pub final_ratio: Complex64,
    pub monotone: bool,
    pub passed: bool,
}

fn fmt_c(z: Complex64, complex: bool) -> String {
    if complex {
        format!("{:.12e}{:+.12e}i", z.re, z.im)
    } else {
        format!("{:.12e}", z.re)
    }
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let complex = self.quantity == Quantity::Fermion;
        let mut s = String::from("delta,lattice,continuum,ratio\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:.12e},{},{},{}\n",
                r.delta,
                fmt_c(r.lattice, complex),
                fmt_c(r.continuum, complex),
                fmt_c(r.ratio, complex)
            ));
        }
        s
    }

    /// `{quantity, passed, final_ratio}`.
    pub fn summary_json(&self) -> serde_json::Value {
        let complex = self.quantity == Quantity::Fermion;
        serde_json::json!({
            "quantity": self.quantity.name(),
            "passed": self.passed,
            "final_ratio": if complex {
                serde_json::json!([self.final_ratio.re, self.final_ratio.im])
            } else {
                serde_json::json!(self.final_ratio.re)
            },
        })
    }
}

fn nearest_face(domain: &Domain, z: Complex64, delta: f64) -> GridCoord {
    *domain
        .faces()
        .iter()
        .min_by(|a, b| (a.point(delta) - z).norm().total_cmp(&(b.point(delta) - z).norm()))
        .expect("non-empty domain")
}

fn nearest_edge(domain: &Domain, z: Complex64, delta: f64) -> usize {
    (0..domain.edges().len())
        .min_by(|&a, &b| {
            let da = (domain.edges()[a].midpoint(delta) - z).norm();
            let db = (domain.edges()[b].midpoint(delta) - z).norm();
            da.total_cmp(&db)
        })
        .expect("non-empty domain")
}

/// One mesh of the harness: `(lattice, continuum)`, with continuum values
/// taken at the positions of the lattice insertions.
pub fn harness_point(cfg: &HarnessConfig, inv_delta: u32) -> Result<(Complex64, Complex64)> {
    let delta = 1.0 / inv_delta as f64;
    let domain = match cfg.discretization {
        Discretization::Centers => disk_domain(cfg.radius, delta)?,
        Discretization::Inscribed => inscribed_disk_domain(cfg.radius, delta)?,
    };
    let cont = ContinuumDomain::disk(Complex64::new(0.0, 0.0), cfg.radius, 0.0);
    let params = ModelParams::homogeneous(cfg.theta)?;
    let solver = Solver::new(&domain, &params)?;
    let two_pi = 2.0 / PI;
    Ok(match cfg.quantity {
        Quantity::Fermion => {
            let ea = nearest_edge(&domain, cfg.a, delta);
            let ez = nearest_edge(&domain, cfg.z, delta);
            let a = domain.orientations(ea)[0];
            let eta = domain.oriented_edges()[a].eta();
            let lat = solver.fermion_observable_f(a, ez)? / delta;
            let pa = domain.edges()[ea].midpoint(delta);
            let pz = domain.edges()[ez].midpoint(delta);
            let c = two_pi * fermion_domain(&cont, pa, pz, FermionVariant::FEta(eta))?;
            (lat, c)
        }
        Quantity::Energy => {
            let e = nearest_edge(&domain, cfg.z, delta);
            let lat = solver.energy_density(e)? / delta;
            let c = two_pi * energy_one_point(&cont, domain.edges()[e].midpoint(delta));
            (lat.into(), c.into())
        }
        Quantity::SpinRatio => {
            let u1 = nearest_face(&domain, cfg.u[0], delta);
            let u2 = nearest_face(&domain, cfg.u[1], delta);
            let moved = u1.offset(2, 0);
            let ratio = solver.spinor_ratio(&[u1, u2], moved)?;
            let lat = (ratio - 1.0) / (2.0 * delta);
            // the forward difference is centered on the midpoint of u and ũ
            let step = moved.point(delta) - u1.point(delta);
            let p = [u1.point(delta) + 0.5 * step, u2.point(delta)];
            let c = (pre_schwarzian(&cont, &p, 0)? * step).re / (2.0 * delta);
            (lat.into(), c.into())
        }
        Quantity::Spin2 => {
            let u1 = nearest_face(&domain, cfg.u[0], delta);
            let u2 = nearest_face(&domain, cfg.u[1], delta);
            let lat = solver.spin_correlator(&[u1, u2])?.value * delta.powf(-0.25);
            let c = spin2_prediction(&cont, u1.point(delta), u2.point(delta))?;
            (lat.into(), c.into())
        }
    })
}

/// Runs every mesh (in parallel) and judges the trend and the final ratio.
pub fn convergence_harness(cfg: &HarnessConfig) -> Result<ConvergenceReport> {
    if cfg.meshes.is_empty() || cfg.meshes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("meshes must be increasing in 1/δ".into()));
    }
    let results: Vec<Result<(Complex64, Complex64)>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg
            .meshes
            .iter()
            .map(|&m| s.spawn(move || harness_point(cfg, m)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("harness worker panicked")).collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for (&m, r) in cfg.meshes.iter().zip(results) {
        let (lattice, continuum) = r?;
        rows.push(ConvergenceRow {
            delta: 1.0 / m as f64,
            lattice,
            continuum,
            ratio: lattice / continuum,
        });
    }
    let tail = &rows[rows.len().saturating_sub(3)..];
    let monotone = tail.windows(2).all(|w| w[1].deviation() <= w[0].deviation());
    let last = rows.last().expect("non-empty");
    let passed = monotone && last.deviation() <= cfg.threshold;
    Ok(ConvergenceReport {
        quantity: cfg.quantity,
        final_ratio: last.ratio,
        rows,
        threshold: cfg.threshold,
        monotone,
        passed,
    })
}
