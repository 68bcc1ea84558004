//! Correlators of the planar Ising model as ratios of Kac–Ward Pfaffians.
//!
//! Spin correlators flip back-tracking entries along dual paths, disorder
//! correlators invert edge weights along primal paths, and fermionic
//! observables are entries of `K̂⁻¹`. All Pfaffian ratios are reported as a
//! magnitude together with the raw sign of the ratio.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kacward::{KacWardAssembly, ModelParams};
use crate::lattice::{default_defect_paths, DefectPaths, Domain, FaceRef, GridCoord, CORNER_STEPS};
use crate::pfaffian::{pfaffian, pfaffian_of_submatrix, AntisymMatrix, Lu, PartialPfaffian, Pfaffian};

const ILL_CONDITIONED: &str = "pivot growth above 1e12";

/// A correlator value with its bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorReport {
    /// Magnitude of the Pfaffian ratio.
    pub value: f64,
    /// Natural logarithm of `value` (finite even when `value` overflows).
    pub log_value: f64,
    /// Sign of the raw Pfaffian ratio.
    pub raw_sign: f64,
    /// Defect paths and weight changes that were applied.
    pub modification_log: Vec<String>,
    pub condition_warning: Option<String>,
}

impl CorrelatorReport {
    fn from_log(log_value: f64, raw_sign: f64, modification_log: Vec<String>, ill: bool) -> Self {
        CorrelatorReport {
            value: log_value.exp(),
            log_value,
            raw_sign,
            modification_log,
            condition_warning: ill.then(|| ILL_CONDITIONED.to_string()),
        }
    }

    /// `raw_sign * value`.
    pub fn signed(&self) -> f64 {
        self.raw_sign * self.value
    }
}

/// One serialized result line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub quantity: String,
    pub insertions: Vec<String>,
    pub theta: f64,
    pub value: f64,
    pub raw_sign: f64,
    pub residuals: BTreeMap<String, f64>,
}

/// Fermionic insertion: a half-edge variable `t_a φ_a`, or a mid-edge
/// spinor `ψ(z_e) = t_e(η_e φ_e + η_ē φ_ē)` or its conjugate `ψ̄(z_e)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "at", rename_all = "kebab-case")]
pub enum FermionInsertion {
    EdgePhi(usize),
    MidedgePsi(usize),
    MidedgePsibar(usize),
}

impl FermionInsertion {
    /// Linear expansion into `t φ` terms: (oriented edge, coefficient of `φ`).
    pub fn expand(&self, domain: &Domain, params: &ModelParams) -> Vec<(usize, Complex64)> {
        match *self {
            FermionInsertion::EdgePhi(a) => {
                let t = params.t(domain.oriented_edges()[a].edge);
                vec![(a, Complex64::new(t, 0.0))]
            }
            FermionInsertion::MidedgePsi(e) | FermionInsertion::MidedgePsibar(e) => {
                let t = params.t(e);
                let conj = matches!(self, FermionInsertion::MidedgePsibar(_));
                domain
                    .orientations(e)
                    .iter()
                    .map(|&o| {
                        let eta = domain.oriented_edges()[o].eta();
                        (o, t * if conj { eta.conj() } else { eta })
                    })
                    .collect()
            }
        }
    }
}

/// Factorizations of one Kac–Ward matrix shared by many correlators.
pub struct Solver<'d> {
    params: ModelParams,
    asm: KacWardAssembly<'d>,
    base: OnceLock<Result<Pfaffian<f64>>>,
    lu: OnceLock<Result<Lu<f64>>>,
}

fn describe_paths(domain: &Domain, paths: &DefectPaths) -> Vec<String> {
    let mut out = Vec::new();
    for p in &paths.kappa {
        let f = |r: FaceRef| match r {
            FaceRef::Inner(i) => domain.faces()[i].to_string(),
            FaceRef::Outer => "outer".to_string(),
        };
        out.push(format!("branch cut {} -> {} crossing {} edges", f(p.start), f(p.end), p.crossed.len()));
    }
    for p in &paths.gamma {
        let a = domain.vertices()[p.vertices[0]];
        let b = domain.vertices()[*p.vertices.last().expect("non-empty path")];
        out.push(format!("disorder line {a} -> {b} along {} edges", p.edges.len()));
    }
    out
}

impl<'d> Solver<'d> {
    pub fn new(domain: &'d Domain, params: &ModelParams) -> Result<Self> {
        Ok(Self::from_assembly(KacWardAssembly::assemble(domain, params)?, params.clone()))
    }

    pub fn from_assembly(asm: KacWardAssembly<'d>, params: ModelParams) -> Self {
        Solver {
            params,
            asm,
            base: OnceLock::new(),
            lu: OnceLock::new(),
        }
    }

    /// Solver for the double cover given by the branch cuts of `paths`.
    pub fn with_branch_cuts(&self, paths: &DefectPaths) -> Result<Solver<'d>> {
        Ok(Self::from_assembly(self.asm.apply_branch_cuts(paths)?, self.params.clone()))
    }

    pub fn domain(&self) -> &'d Domain {
        self.asm.domain()
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn assembly(&self) -> &KacWardAssembly<'d> {
        &self.asm
    }

    pub fn base_pfaffian(&self) -> Result<Pfaffian<f64>> {
        self.base.get_or_init(|| pfaffian(self.asm.khat())).clone()
    }

    fn lu(&self) -> Result<&Lu<f64>> {
        self.lu
            .get_or_init(|| {
                let m = self.asm.khat();
                Lu::new(m.n(), m.data().to_vec())
            })
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// `Z_G = |Pf K̂|`.
    pub fn partition_function(&self) -> Result<CorrelatorReport> {
        let pf = self.base_pfaffian()?;
        Ok(CorrelatorReport::from_log(
            pf.log_abs + self.asm.log_prefactor(),
            pf.sign,
            describe_paths(self.domain(), &DefectPaths::default()),
            pf.ill_conditioned(),
        ))
    }

    fn flip_update(&self, paths: &DefectPaths) -> Vec<(usize, usize, f64)> {
        let d = self.domain();
        let m = self.asm.khat();
        d.edges()
            .iter()
            .enumerate()
            .zip(paths.kappa_parity(d))
            .filter(|(_, p)| *p)
            .map(|((e, _), _)| {
                let [a, b] = d.orientations(e);
                (a, b, -2.0 * m.get(a, b))
            })
            .collect()
    }

    /// `E[σ_{u_1}..σ_{u_m}]` along the default branch cuts.
    pub fn spin_correlator(&self, faces: &[GridCoord]) -> Result<CorrelatorReport> {
        check_distinct_faces(self.domain(), faces)?;
        let paths = default_defect_paths(self.domain(), faces, &[])?;
        self.spin_correlator_with_paths(&paths)
    }

    /// `E[σ..]` for the branch faces of the given κ.
    pub fn spin_correlator_with_paths(&self, kappa: &DefectPaths) -> Result<CorrelatorReport> {
        Ok(self.spin_correlators_with_paths(std::slice::from_ref(kappa))?.remove(0))
    }

    /// Several spin correlators sharing one partial elimination.
    pub fn spin_correlators(&self, sets: &[Vec<GridCoord>]) -> Result<Vec<CorrelatorReport>> {
        let mut all = Vec::with_capacity(sets.len());
        for s in sets {
            check_distinct_faces(self.domain(), s)?;
            all.push(default_defect_paths(self.domain(), s, &[])?);
        }
        self.spin_correlators_with_paths(&all)
    }

    pub fn spin_correlators_with_paths(&self, kappas: &[DefectPaths]) -> Result<Vec<CorrelatorReport>> {
        let updates: Vec<_> = kappas.iter().map(|k| self.flip_update(k)).collect();
        let mut tail: Vec<usize> = updates.iter().flatten().flat_map(|&(a, b, _)| [a, b]).collect();
        tail.sort_unstable();
        tail.dedup();
        let partial = PartialPfaffian::new(self.asm.khat(), &tail)?;
        let base = partial.pfaffian()?;
        let mut out = Vec::with_capacity(kappas.len());
        for (k, up) in kappas.iter().zip(&updates) {
            let pf = partial.with_update(up)?;
            if pf.sign == 0.0 {
                return Err(Error::SingularMatrix { step: 0, pivot: 0.0 });
            }
            out.push(CorrelatorReport::from_log(
                pf.log_abs - base.log_abs,
                pf.sign * base.sign,
                describe_paths(self.domain(), k),
                pf.ill_conditioned() || base.ill_conditioned(),
            ));
        }
        Ok(out)
    }

    /// `⟨μ_{v_1}..μ_{v_2n}⟩` along the default disorder lines.
    pub fn disorder_correlator(&self, vertices: &[GridCoord]) -> Result<CorrelatorReport> {
        if vertices.len() % 2 == 1 {
            return Err(Error::InvalidInsertion("odd number of disorders".into()));
        }
        let paths = default_defect_paths(self.domain(), &[], vertices)?;
        self.modified_ratio(&paths)
    }

    /// Ratio for arbitrary defect paths: `prefactor Pf(K̂_{γ,κ}) / Pf(K̂)`.
    pub fn modified_ratio(&self, paths: &DefectPaths) -> Result<CorrelatorReport> {
        if paths.is_empty() {
            let pf = self.base_pfaffian()?;
            return Ok(CorrelatorReport::from_log(0.0, 1.0, Vec::new(), pf.ill_conditioned()));
        }
        let base = self.base_pfaffian()?;
        let m = self.asm.apply_disorder_lines(paths)?.apply_branch_cuts(paths)?;
        let pf = m.pfaffian()?;
        Ok(CorrelatorReport::from_log(
            pf.log_abs + m.log_prefactor() - self.asm.log_prefactor() - base.log_abs,
            pf.sign * base.sign,
            describe_paths(self.domain(), paths),
            pf.ill_conditioned() || base.ill_conditioned(),
        ))
    }

    /// `|⟨μ_{v..}σ_{u..}⟩|` along the default paths; `raw_sign` fixes the sheet.
    pub fn mixed_correlator(&self, vertices: &[GridCoord], faces: &[GridCoord]) -> Result<CorrelatorReport> {
        if vertices.len() % 2 == 1 {
            return Err(Error::InvalidInsertion("odd number of disorders".into()));
        }
        check_distinct_faces(self.domain(), faces)?;
        let paths = default_defect_paths(self.domain(), faces, vertices)?;
        self.modified_ratio(&paths)
    }

    /// Columns of `K̂⁻¹`.
    pub fn inverse_columns(&self, cols: &[usize]) -> Result<Vec<Vec<f64>>> {
        let lu = self.lu()?;
        let n = self.asm.khat().n();
        cols.iter()
            .map(|&j| {
                if j >= n {
                    return Err(Error::EdgeOutsideDomain(format!("oriented edge {j}")));
                }
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                Ok(lu.solve(&e))
            })
            .collect()
    }

    /// `⟨φ_{e_1}..φ_{e_2k}⟩ = Pf[K̂⁻¹_{e_p,e_q}]`.
    pub fn phi_correlator(&self, edges: &[usize]) -> Result<f64> {
        if edges.len() % 2 == 1 {
            return Ok(0.0);
        }
        let cols = self.inverse_columns(edges)?;
        let k = edges.len();
        let m = AntisymMatrix::from_upper(k, |p, q| cols[q][edges[p]]);
        Ok(pfaffian_of_submatrix(&m))
    }

    /// `Φ_G(a,e) = ⟨t_e φ_e t_a φ_a⟩`.
    pub fn fermion_two_point(&self, a: usize, e: usize) -> Result<f64> {
        let d = self.domain();
        check_oriented(d, a)?;
        check_oriented(d, e)?;
        let (ea, ee) = (d.oriented_edges()[a].edge, d.oriented_edges()[e].edge);
        if ea == ee && a == e {
            return Err(Error::InvalidInsertion("coincident insertions".into()));
        }
        let col = self.inverse_columns(&[a])?.remove(0);
        Ok(self.params.t(ea) * self.params.t(ee) * col[e])
    }

    /// `⟨X_1 .. X_2k⟩` for general insertions, expanded linearly into
    /// `⟨φ..φ⟩` and evaluated as Pfaffians of `K̂⁻¹` blocks.
    pub fn fermion_multi_point(&self, ins: &[FermionInsertion]) -> Result<Complex64> {
        if ins.len() % 2 == 1 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let d = self.domain();
        let terms: Vec<Vec<(usize, Complex64)>> = ins.iter().map(|i| i.expand(d, &self.params)).collect();
        for t in &terms {
            for &(o, _) in t {
                check_oriented(d, o)?;
            }
        }
        let mut idx: Vec<usize> = terms.iter().flatten().map(|&(o, _)| o).collect();
        idx.sort_unstable();
        idx.dedup();
        let cols = self.inverse_columns(&idx)?;
        let pos = |o: usize| idx.binary_search(&o).expect("collected index");
        // Multilinear expansion over the choice of term in each insertion.
        let k = ins.len();
        let mut choice = vec![0usize; k];
        let mut total = Complex64::new(0.0, 0.0);
        loop {
            let edges: Vec<usize> = (0..k).map(|p| terms[p][choice[p]].0).collect();
            let coeff: Complex64 = (0..k).map(|p| terms[p][choice[p]].1).product();
            let m: Vec<Vec<f64>> = (0..k)
                .map(|p| (0..k).map(|q| if p == q { 0.0 } else { cols[pos(edges[q])][edges[p]] }).collect())
                .collect();
            total += coeff * crate::pfaffian::pfaffian_expand(&m);
            let mut p = 0;
            loop {
                if p == k {
                    return Ok(total);
                }
                choice[p] += 1;
                if choice[p] < terms[p].len() {
                    break;
                }
                choice[p] = 0;
                p += 1;
            }
        }
    }

    /// The edge-source observables `Φ(a,·)` on oriented edges and `F(a,·)`
    /// on mid-edges.
    pub fn fermion_column(&self, a: usize) -> Result<FermionColumn> {
        let d = self.domain();
        check_oriented(d, a)?;
        let col = self.inverse_columns(&[a])?.remove(0);
        let ta = self.params.t(d.oriented_edges()[a].edge);
        let phi: Vec<f64> = d
            .oriented_edges()
            .iter()
            .enumerate()
            .map(|(e, o)| ta * self.params.t(o.edge) * col[e])
            .collect();
        let f = (0..d.edges().len())
            .map(|e| {
                let [o1, o2] = d.orientations(e);
                let oe = d.oriented_edges();
                ta * self.params.t(e) * (oe[o1].eta() * col[o1] + oe[o2].eta() * col[o2])
            })
            .collect();
        Ok(FermionColumn { source: a, phi, f })
    }

    /// `F_G(a, z_e) = t_a t_e (η_e K̂⁻¹_{e,a} + η_ē K̂⁻¹_{ē,a})`.
    pub fn fermion_observable_f(&self, a: usize, edge: usize) -> Result<Complex64> {
        let d = self.domain();
        if edge >= d.edges().len() {
            return Err(Error::EdgeOutsideDomain(format!("edge {edge}")));
        }
        check_oriented(d, a)?;
        if d.oriented_edges()[a].edge == edge {
            return Err(Error::InvalidInsertion("mid-edge of the source".into()));
        }
        Ok(self.fermion_column(a)?.f[edge])
    }

    /// `E[σ_{u-}σ_{u+}]` across an edge; a missing face is the outer `+` spin.
    pub fn edge_spin_pair(&self, edge: usize) -> Result<CorrelatorReport> {
        let d = self.domain();
        let ed = d.edges().get(edge).ok_or_else(|| Error::EdgeOutsideDomain(format!("edge {edge}")))?;
        let faces: Vec<GridCoord> = ed.faces.iter().flatten().map(|&f| d.faces()[f]).collect();
        self.spin_correlator(&faces)
    }

    /// `⟨μ_{v-}μ_{v+}⟩` across an edge.
    pub fn edge_disorder_pair(&self, edge: usize) -> Result<CorrelatorReport> {
        let d = self.domain();
        let ed = d.edges().get(edge).ok_or_else(|| Error::EdgeOutsideDomain(format!("edge {edge}")))?;
        self.disorder_correlator(&ed.ends)
    }

    /// `E[ε_e] = (sin θ)⁻¹ [E[σ_{u-}σ_{u+}] − (π−2θ)/(π cos θ)]`.
    pub fn energy_density(&self, edge: usize) -> Result<f64> {
        let ss = self.edge_spin_pair(edge)?.value;
        let th = self.params.theta(edge);
        Ok((ss - (PI - 2.0 * th) / (PI * th.cos())) / th.sin())
    }

    /// `E[ε_e] = (cos θ)⁻¹ [2θ/(π sin θ) − ⟨μ_{v-}μ_{v+}⟩]`.
    pub fn energy_density_disorder(&self, edge: usize) -> Result<f64> {
        let mm = self.edge_disorder_pair(edge)?.value;
        let th = self.params.theta(edge);
        Ok((2.0 * th / (PI * th.sin()) - mm) / th.cos())
    }

    /// `i η_e η̄_ē Φ(ē,e) − ε^∞`, the fermionic form of `E[ε_e]`, using the
    /// first orientation of the edge as `e`.
    pub fn energy_density_fermion(&self, edge: usize) -> Result<f64> {
        let d = self.domain();
        if edge >= d.edges().len() {
            return Err(Error::EdgeOutsideDomain(format!("edge {edge}")));
        }
        let [e, eb] = d.orientations(edge);
        let phi = self.fermion_two_point(eb, e)?;
        let oe = d.oriented_edges();
        let v = Complex64::new(0.0, 1.0) * oe[e].eta() * oe[eb].eta().conj() * phi;
        Ok(v.re - energy_infinity(self.params.theta(edge)))
    }

    /// `E[σ_ũ σ_{u_2}..] / E[σ_{u_1} σ_{u_2}..]` with `u_1 = branch_faces[0]`.
    pub fn spinor_ratio(&self, branch_faces: &[GridCoord], moved_face: GridCoord) -> Result<f64> {
        if branch_faces.is_empty() {
            return Err(Error::InvalidArgument("no branch faces".into()));
        }
        if moved_face == branch_faces[0] {
            return Ok(1.0);
        }
        let mut moved = branch_faces.to_vec();
        moved[0] = moved_face;
        let r = self.spin_correlators(&[branch_faces.to_vec(), moved])?;
        Ok(r[1].value / r[0].value)
    }
}

/// `ε^∞ = (sin θ)⁻¹ [1 + (π−2θ)/(π cos θ)]`.
pub fn energy_infinity(theta: f64) -> f64 {
    (1.0 + (PI - 2.0 * theta) / (PI * theta.cos())) / theta.sin()
}

fn check_oriented(d: &Domain, e: usize) -> Result<()> {
    if e < d.num_oriented() {
        Ok(())
    } else {
        Err(Error::EdgeOutsideDomain(format!("oriented edge {e}")))
    }
}

fn check_distinct_faces(d: &Domain, faces: &[GridCoord]) -> Result<()> {
    for (i, f) in faces.iter().enumerate() {
        if d.face_id(*f).is_none() {
            return Err(Error::FaceOutsideDomain(f.k, f.s));
        }
        if faces[..i].contains(f) {
            return Err(Error::InvalidInsertion(format!("face {f} repeated")));
        }
    }
    Ok(())
}

/// `Φ(a,·)` on oriented edges and `F(a,·)` on undirected edges.
#[derive(Clone, Debug)]
pub struct FermionColumn {
    pub source: usize,
    pub phi: Vec<f64>,
    pub f: Vec<Complex64>,
}

pub fn partition_function(domain: &Domain, params: &ModelParams) -> Result<CorrelatorReport> {
    Solver::new(domain, params)?.partition_function()
}

pub fn spin_correlator(domain: &Domain, params: &ModelParams, faces: &[GridCoord]) -> Result<CorrelatorReport> {
    Solver::new(domain, params)?.spin_correlator(faces)
}

pub fn disorder_correlator(domain: &Domain, params: &ModelParams, vertices: &[GridCoord]) -> Result<CorrelatorReport> {
    Solver::new(domain, params)?.disorder_correlator(vertices)
}

pub fn mixed_correlator(
    domain: &Domain,
    params: &ModelParams,
    vertices: &[GridCoord],
    faces: &[GridCoord],
) -> Result<CorrelatorReport> {
    Solver::new(domain, params)?.mixed_correlator(vertices, faces)
}

pub fn fermion_two_point(domain: &Domain, params: &ModelParams, a: usize, e: usize) -> Result<f64> {
    Solver::new(domain, params)?.fermion_two_point(a, e)
}

pub fn fermion_observable_f(domain: &Domain, params: &ModelParams, a: usize, edge: usize) -> Result<Complex64> {
    Solver::new(domain, params)?.fermion_observable_f(a, edge)
}

pub fn energy_density(domain: &Domain, params: &ModelParams, edge: usize) -> Result<f64> {
    Solver::new(domain, params)?.energy_density(edge)
}

pub fn spinor_ratio(
    domain: &Domain,
    params: &ModelParams,
    branch_faces: &[GridCoord],
    moved_face: GridCoord,
) -> Result<f64> {
    Solver::new(domain, params)?.spinor_ratio(branch_faces, moved_face)
}

/// The two mid-edges adjacent to a corner: (right of the decoration, left).
pub fn corner_edges(domain: &Domain, corner: usize) -> [usize; 2] {
    let c = domain.corners()[corner];
    let (dk, ds) = (c.vertex.k - c.face.k, c.vertex.s - c.face.s);
    let mut right = None;
    let mut left = None;
    let fid = domain.face_id(c.face).expect("corner face");
    for (e, _) in domain.face_neighbours(fid) {
        let ed = &domain.edges()[e];
        if !ed.ends.contains(&c.vertex) {
            continue;
        }
        let other = if ed.ends[0] == c.vertex { ed.ends[1] } else { ed.ends[0] };
        // midpoint relative to the face centre, doubled to stay integral
        let (mk, ms) = (c.vertex.k + other.k - 2 * c.face.k, c.vertex.s + other.s - 2 * c.face.s);
        if dk * ms - ds * mk < 0 {
            right = Some(e);
        } else {
            left = Some(e);
        }
    }
    [right.expect("right edge"), left.expect("left edge")]
}

/// Corner of the same type displaced by a diagonal step, if present.
pub fn corner_neighbours(domain: &Domain, corner: usize) -> Vec<usize> {
    let c = domain.corners()[corner];
    [(1, 1), (-1, 1), (-1, -1), (1, -1)]
        .iter()
        .filter_map(|&(dk, ds)| domain.corner_id(c.face.offset(dk, ds), c.vertex.offset(dk, ds)))
        .collect()
}

/// Corner values derived from mid-edge values through the condition at
/// the right mid-edge, with the residual at the left one.
pub fn project_to_corners(domain: &Domain, params: &ModelParams, f: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let delta = PI / 4.0 - params.base_theta();
    let mut phi = Vec::with_capacity(domain.corners().len());
    let mut other = Vec::with_capacity(domain.corners().len());
    for (i, c) in domain.corners().iter().enumerate() {
        let [r, l] = corner_edges(domain, i);
        let eta = c.eta().conj();
        phi.push((Complex64::from_polar(1.0, delta / 2.0) * eta * f[r]).re);
        other.push((Complex64::from_polar(1.0, -delta / 2.0) * eta * f[l]).re);
    }
    (phi, other)
}

/// Largest `|Φ(d) − Re[e^{±i(π/4−θ)/2} η̄_d F(z_e)]|` over adjacent pairs
/// `(z_e, d)`, "+" when `z_e` is right of `d`; pairs listed in `exclusions`
/// as `(edge, corner)` are skipped.
pub fn check_s_holomorphicity(
    domain: &Domain,
    f: &[Complex64],
    phi: &[f64],
    params: &ModelParams,
    exclusions: &[(usize, usize)],
) -> f64 {
    let delta = PI / 4.0 - params.base_theta();
    let mut worst: f64 = 0.0;
    for (i, c) in domain.corners().iter().enumerate() {
        let [r, l] = corner_edges(domain, i);
        for (e, sgn) in [(r, 1.0), (l, -1.0)] {
            if exclusions.contains(&(e, i)) {
                continue;
            }
            let v = (Complex64::from_polar(1.0, sgn * delta / 2.0) * c.eta().conj() * f[e]).re;
            worst = worst.max((phi[i] - v).abs());
        }
    }
    worst
}

/// `Δ_θΦ(d) = Φ(d) − ¼ sin 2θ Σ_{d'~d} Φ(d')` at one corner; `None` unless
/// all four neighbours exist.
pub fn massive_laplacian(domain: &Domain, params: &ModelParams, phi: &[f64], corner: usize) -> Option<f64> {
    massive_laplacian_on_cover(domain, params, phi, corner, None)
}

/// As [`massive_laplacian`] for a spinor on the double cover cut along κ: a
/// neighbour enters with a minus sign when the straight segment between the
/// two corners crosses κ an odd number of times.
pub fn massive_laplacian_on_cover(
    domain: &Domain,
    params: &ModelParams,
    phi: &[f64],
    corner: usize,
    kappa: Option<&DefectPaths>,
) -> Option<f64> {
    let nb = corner_neighbours(domain, corner);
    if nb.len() < 4 {
        return None;
    }
    let s: f64 = nb
        .iter()
        .map(|&d| match kappa {
            Some(k) if crosses_cut(domain, k, corner, d) => -phi[d],
            _ => phi[d],
        })
        .sum();
    Some(phi[corner] - 0.25 * (2.0 * params.base_theta()).sin() * s)
}

/// Largest `|Δ_θΦ|` over corners with four neighbours, skipping `exclusions`.
pub fn check_massive_harmonicity(domain: &Domain, phi: &[f64], params: &ModelParams, exclusions: &[usize]) -> f64 {
    (0..domain.corners().len())
        .filter(|c| !exclusions.contains(c))
        .filter_map(|c| massive_laplacian(domain, params, phi, c))
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// The corner of face `u` whose decoration points along `CORNER_STEPS[dir]`.
pub fn face_corner(domain: &Domain, u: GridCoord, dir: usize) -> Option<usize> {
    let (dk, ds) = CORNER_STEPS[dir];
    domain.corner_id(u, u.offset(dk, ds))
}

/// Whether the segment joining two corners (each placed halfway between its
/// face centre and its vertex) crosses the dual polyline of κ an odd number
/// of times. Such segments never pass through a face centre, so crossings are
/// always transversal.
pub fn crosses_cut(domain: &Domain, kappa: &DefectPaths, c1: usize, c2: usize) -> bool {
    let pos = |c: usize| {
        let c = domain.corners()[c];
        ((c.face.k + c.vertex.k) as f64 / 2.0, (c.face.s + c.vertex.s) as f64 / 2.0)
    };
    let (p, q) = (pos(c1), pos(c2));
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut odd = false;
    for (e, &flag) in kappa.kappa_parity(domain).iter().enumerate() {
        if !flag {
            continue;
        }
        let [a, b] = domain.edges()[e].cells;
        let (a, b) = ((a.k as f64, a.s as f64), (b.k as f64, b.s as f64));
        let d1 = cross(p, q, a);
        let d2 = cross(p, q, b);
        let d3 = cross(a, b, p);
        let d4 = cross(a, b, q);
        if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
            odd ^= true;
        }
    }
    odd
}

/// Residuals of the edge-source observable `F(a,·)` away from its source:
/// the s-holomorphicity mismatch and the massive Laplacian of the corner
/// projection, skipping corners next to the source edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    pub s_holomorphicity: f64,
    pub harmonicity: f64,
}

pub fn source_regularity(solver: &Solver, a: usize) -> Result<Regularity> {
    let d = solver.domain();
    let p = solver.params();
    let col = solver.fermion_column(a)?;
    let (phi, _) = project_to_corners(d, p, &col.f);
    let src = d.oriented_edges()[a].edge;
    let near = d.corners_at_edge(src);
    let pairs: Vec<(usize, usize)> = near
        .iter()
        .flat_map(|&c| corner_edges(d, c).map(|e| (e, c)))
        .collect();
    let mut skip = near.clone();
    for &c in &near {
        skip.extend(corner_neighbours(d, c));
    }
    Ok(Regularity {
        s_holomorphicity: check_s_holomorphicity(d, &col.f, &phi, p, &pairs),
        harmonicity: check_massive_harmonicity(d, &phi, p, &skip),
    })
}

/// `sin θ ⟨μ_{v−}μ_{v+}⟩ + cos θ ⟨σ_{u−}σ_{u+}⟩ − 1` across one edge.
pub fn three_term_residual(solver: &Solver, edge: usize) -> Result<f64> {
    let th = solver.params().theta(edge);
    let mm = solver.edge_disorder_pair(edge)?.value;
    let ss = solver.edge_spin_pair(edge)?.value;
    Ok(th.sin() * mm + th.cos() * ss - 1.0)
}
