//! Kac–Ward matrices over oriented edges and their defect modifications.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{DefectPaths, Domain, FaceRef};
use crate::pfaffian::{pfaffian, AntisymMatrix, Pfaffian, Real};

/// Coupling angles `θ_e ∈ (0, π/2)`, homogeneous unless overridden per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    theta: f64,
    per_edge: Option<Vec<f64>>,
}

fn check_theta(t: f64) -> Result<()> {
    if t > 0.0 && t < PI / 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("theta {t} outside (0, pi/2)")))
    }
}

impl ModelParams {
    pub fn homogeneous(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(ModelParams {
            theta,
            per_edge: None,
        })
    }

    pub fn critical() -> Self {
        ModelParams {
            theta: PI / 4.0,
            per_edge: None,
        }
    }

    /// One angle per undirected edge, in the domain's edge order.
    pub fn per_edge(thetas: Vec<f64>) -> Result<Self> {
        for &t in &thetas {
            check_theta(t)?;
        }
        let theta = thetas.first().copied().unwrap_or(PI / 4.0);
        Ok(ModelParams {
            theta,
            per_edge: Some(thetas),
        })
    }

    pub fn is_homogeneous(&self) -> bool {
        self.per_edge.is_none()
    }

    /// The homogeneous angle (the first edge's angle otherwise).
    pub fn base_theta(&self) -> f64 {
        self.theta
    }

    pub fn theta(&self, edge: usize) -> f64 {
        match &self.per_edge {
            Some(v) => v[edge],
            None => self.theta,
        }
    }

    pub fn x(&self, edge: usize) -> f64 {
        (self.theta(edge) / 2.0).tan()
    }

    /// `t_e = (x_e + 1/x_e)^{1/2}`.
    pub fn t(&self, edge: usize) -> f64 {
        let x = self.x(edge);
        (x + 1.0 / x).sqrt()
    }

    fn check(&self, domain: &Domain) -> Result<()> {
        match &self.per_edge {
            Some(v) if v.len() != domain.edges().len() => Err(Error::InvalidArgument(format!(
                "{} edge angles for {} edges",
                v.len(),
                domain.edges().len()
            ))),
            _ => Ok(()),
        }
    }
}

/// One applied modification.
#[derive(Clone, Debug, PartialEq)]
pub enum Modification {
    /// `K_{e,ē}` flipped on these undirected edges.
    BranchCut { edges: Vec<usize> },
    /// `x_e -> 1/x_e` on these undirected edges.
    DisorderLine { edges: Vec<usize> },
}

/// `K̂ = i U* K U` together with the data it was built from.
#[derive(Clone, Debug)]
pub struct KacWardAssembly<'d> {
    domain: &'d Domain,
    weights: Vec<f64>,
    flips: Vec<bool>,
    log_prefactor: f64,
    modifications: Vec<Modification>,
    khat: AntisymMatrix<f64>,
    residue: f64,
}

/// Sparse entry of a complex matrix over oriented edges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub value: Complex64,
}

fn transition(domain: &Domain, weights: &[f64], e: usize, e2: usize) -> Complex64 {
    let oe = domain.oriented_edges();
    let w = (weights[oe[e].edge] * weights[oe[e2].edge]).sqrt();
    Complex64::from_polar(w, 0.5 * domain.wind(e, e2))
}

/// `T_{e,e'}` for all `e'` continuing `e`.
pub fn transition_entries(domain: &Domain, weights: &[f64]) -> Vec<Entry> {
    let mut out = Vec::new();
    for e in 0..domain.num_oriented() {
        for e2 in domain.continuations(e) {
            out.push(Entry {
                row: e,
                col: e2,
                value: transition(domain, weights, e, e2),
            });
        }
    }
    out
}

/// Nonzero entries of `K = J (Id - T)` with the given back-tracking flips.
fn k_entries(domain: &Domain, weights: &[f64], flips: &[bool]) -> Vec<Entry> {
    let oe = domain.oriented_edges();
    let mut out = Vec::new();
    for e in 0..domain.num_oriented() {
        let rev = domain.reverse(e);
        let diag = if flips[oe[e].edge] { -1.0 } else { 1.0 };
        out.push(Entry {
            row: e,
            col: rev,
            value: Complex64::new(diag, 0.0),
        });
        for e2 in domain.continuations(rev) {
            out.push(Entry {
                row: e,
                col: e2,
                value: -transition(domain, weights, rev, e2),
            });
        }
    }
    out
}

impl<'d> KacWardAssembly<'d> {
    pub fn assemble(domain: &'d Domain, params: &ModelParams) -> Result<Self> {
        params.check(domain)?;
        let weights = (0..domain.edges().len()).map(|e| params.x(e)).collect();
        Self::build(
            domain,
            weights,
            vec![false; domain.edges().len()],
            0.0,
            Vec::new(),
        )
    }

    fn build(
        domain: &'d Domain,
        weights: Vec<f64>,
        flips: Vec<bool>,
        log_prefactor: f64,
        modifications: Vec<Modification>,
    ) -> Result<Self> {
        let n = domain.num_oriented();
        let etas: Vec<Complex64> = domain.oriented_edges().iter().map(|o| o.eta()).collect();
        let i = Complex64::new(0.0, 1.0);
        let mut khat = AntisymMatrix::zeros(n);
        let mut residue: f64 = 0.0;
        let mut asym: f64 = 0.0;
        let entries = k_entries(domain, &weights, &flips);
        let mut seen = std::collections::HashMap::with_capacity(entries.len());
        for en in &entries {
            let v = i * etas[en.row].conj() * en.value * etas[en.col];
            residue = residue.max(v.im.abs());
            seen.insert((en.row, en.col), v.re);
        }
        for (&(r, c), &v) in &seen {
            let mirror = seen.get(&(c, r)).copied().unwrap_or(0.0);
            asym = asym.max((v + mirror).abs());
            if r < c {
                khat.set(r, c, v);
            }
        }
        if residue > 1e-10 || asym > 1e-10 {
            return Err(Error::NonRealResidue(residue.max(asym)));
        }
        Ok(KacWardAssembly {
            domain,
            weights,
            flips,
            log_prefactor,
            modifications,
            khat,
            residue,
        })
    }

    pub fn domain(&self) -> &'d Domain {
        self.domain
    }

    pub fn khat(&self) -> &AntisymMatrix<f64> {
        &self.khat
    }

    /// `K̂` converted to another floating point type.
    pub fn khat_as<T: Real>(&self) -> AntisymMatrix<T> {
        let n = self.khat.n();
        AntisymMatrix::from_upper(n, |i, j| T::from(self.khat.get(i, j)).expect("cast"))
    }

    /// Effective edge weights (after disorder inversions).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Edges whose back-tracking entry is flipped.
    pub fn flips(&self) -> &[bool] {
        &self.flips
    }

    /// `ln ∏ x_e` over the inverted edges.
    pub fn log_prefactor(&self) -> f64 {
        self.log_prefactor
    }

    pub fn modifications(&self) -> &[Modification] {
        &self.modifications
    }

    /// Largest imaginary part discarded when forming `K̂`.
    pub fn imaginary_residue(&self) -> f64 {
        self.residue
    }

    pub fn transition_entries(&self) -> Vec<Entry> {
        transition_entries(self.domain, &self.weights)
    }

    /// Nonzero entries of `K` (including flips).
    pub fn k_entries(&self) -> Vec<Entry> {
        k_entries(self.domain, &self.weights, &self.flips)
    }

    /// Dense row-major `Id - T`.
    pub fn id_minus_t(&self) -> Vec<Complex64> {
        let n = self.domain.num_oriented();
        let mut m = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            m[i * n + i] = Complex64::new(1.0, 0.0);
        }
        for en in self.transition_entries() {
            m[en.row * n + en.col] -= en.value;
        }
        m
    }

    pub fn pfaffian(&self) -> Result<Pfaffian<f64>> {
        pfaffian(&self.khat)
    }

    /// Flips `K_{e,ē}` on every edge crossed an odd number of times by κ.
    pub fn apply_branch_cuts(&self, paths: &DefectPaths) -> Result<Self> {
        let ne = self.domain.edges().len();
        let mut flips = self.flips.clone();
        let mut crossed = Vec::new();
        for p in &paths.kappa {
            for &e in &p.crossed {
                if e >= ne {
                    return Err(Error::PathOutsideDomain(format!("edge index {e}")));
                }
                flips[e] ^= true;
                crossed.push(e);
            }
            for end in [p.start, p.end] {
                if let FaceRef::Inner(f) = end {
                    if f >= self.domain.faces().len() {
                        return Err(Error::PathOutsideDomain(format!("face index {f}")));
                    }
                }
            }
        }
        let mut mods = self.modifications.clone();
        if !crossed.is_empty() {
            mods.push(Modification::BranchCut { edges: crossed });
        }
        let mut out = self.clone();
        // Only the back-tracking entries change.
        for (e, (&old, &new)) in self.flips.iter().zip(&flips).enumerate() {
            if old != new {
                let [a, b] = self.domain.orientations(e);
                let v = out.khat.get(a, b);
                out.khat.set(a, b, -v);
            }
        }
        out.flips = flips;
        out.modifications = mods;
        Ok(out)
    }

    /// Inverts `x_e` on every edge used an odd number of times by γ and
    /// records the prefactor `∏ x_e`.
    pub fn apply_disorder_lines(&self, paths: &DefectPaths) -> Result<Self> {
        let ne = self.domain.edges().len();
        let mut weights = self.weights.clone();
        let mut log_pref = self.log_prefactor;
        let mut inverted = Vec::new();
        for p in &paths.gamma {
            for &e in &p.edges {
                if e >= ne {
                    return Err(Error::PathOutsideDomain(format!("edge index {e}")));
                }
                log_pref += weights[e].ln();
                weights[e] = 1.0 / weights[e];
                inverted.push(e);
            }
        }
        if inverted.is_empty() {
            return Ok(self.clone());
        }
        let mut mods = self.modifications.clone();
        mods.push(Modification::DisorderLine { edges: inverted });
        Self::build(self.domain, weights, self.flips.clone(), log_pref, mods)
    }

    /// Writes `K̂` as a JSON header line followed by row-major little-endian
    /// `f64` values.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = DumpHeader {
            dimension: self.khat.n(),
            index_map: self
                .domain
                .oriented_edges()
                .iter()
                .map(|o| [o.tail.k, o.tail.s, o.head.k, o.head.s])
                .collect(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for x in self.khat.data() {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub dimension: usize,
    /// `[tail k, tail s, head k, head s]` per row.
    pub index_map: Vec<[i32; 4]>,
}

/// Reads a matrix written by [`KacWardAssembly::write_dump`].
pub fn read_dump<R: Read>(mut r: R) -> std::io::Result<(DumpHeader, AntisymMatrix<f64>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidData, "missing header"))?;
    let header: DumpHeader = serde_json::from_slice(&bytes[..nl])?;
    let body = &bytes[nl + 1..];
    let n = header.dimension;
    if body.len() != n * n * 8 {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "wrong body length"));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let m = AntisymMatrix::from_dense(n, data)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
    Ok((header, m))
}
