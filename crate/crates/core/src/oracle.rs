//! Brute-force ground truth by exhaustive enumeration.
//!
//! Spin sums run over all `2^F` face configurations with the outer spin fixed
//! to `+1`. Subgraph sums run over all edge subsets in Gray-code order with an
//! incremental vertex-parity mask. Fermionic sums decompose each subgraph
//! into loops and paths and evaluate the winding sign of every path.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kacward::ModelParams;
use crate::lattice::{default_defect_paths, DefectPaths, Domain, GridCoord};

/// Largest edge count accepted by the subgraph enumerations.
pub const MAX_EDGES: usize = 24;
/// Largest face count accepted by the spin sums.
pub const MAX_FACES: usize = 24;

/// Compensated (Neumaier) running sum.
#[derive(Clone, Copy, Debug, Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// Calls `f(mask)` for every subset of `edges` (a list of undirected edge
/// ids, bit `i` of the mask standing for `edges[i]`) whose vertex-degree
/// parity equals `target`.
fn for_each_subgraph<F: FnMut(u64)>(
    domain: &Domain,
    edges: &[usize],
    target: u64,
    mut f: F,
) -> Result<()> {
    if edges.len() > MAX_EDGES {
        return Err(Error::TooLarge {
            edges: edges.len(),
            cap: MAX_EDGES,
        });
    }
    if domain.vertices().len() > 64 {
        return Err(Error::TooLarge {
            edges: domain.edges().len(),
            cap: MAX_EDGES,
        });
    }
    let inc: Vec<u64> = edges
        .iter()
        .map(|&e| {
            let ed = &domain.edges()[e];
            let a = domain.vertex_id(ed.ends[0]).expect("vertex");
            let b = domain.vertex_id(ed.ends[1]).expect("vertex");
            (1u64 << a) ^ (1u64 << b)
        })
        .collect();
    let m = edges.len();
    let mut mask = 0u64;
    let mut parity = 0u64;
    for i in 0u64..(1u64 << m) {
        if i > 0 {
            let bit = i.trailing_zeros() as usize;
            mask ^= 1 << bit;
            parity ^= inc[bit];
        }
        if parity == target {
            f(mask);
        }
    }
    Ok(())
}

fn weight(params_x: &[f64], edges: &[usize], mask: u64) -> f64 {
    let mut w = 1.0;
    let mut m = mask;
    while m != 0 {
        let b = m.trailing_zeros() as usize;
        w *= params_x[edges[b]];
        m &= m - 1;
    }
    w
}

fn xs(domain: &Domain, params: &ModelParams) -> Vec<f64> {
    (0..domain.edges().len()).map(|e| params.x(e)).collect()
}

fn all_edges(domain: &Domain) -> Vec<usize> {
    (0..domain.edges().len()).collect()
}

fn vertex_mask(domain: &Domain, vertices: &[GridCoord]) -> Result<u64> {
    let mut t = 0u64;
    for v in vertices {
        let id = domain.vertex_id(*v).ok_or(Error::VertexOutsideDomain(v.k, v.s))?;
        if id >= 64 {
            return Err(Error::TooLarge {
                edges: domain.edges().len(),
                cap: MAX_EDGES,
            });
        }
        t ^= 1 << id;
    }
    Ok(t)
}

/// Mask (over all edges) of an edge set.
fn edge_set_mask(edges: impl IntoIterator<Item = usize>) -> u64 {
    edges.into_iter().fold(0u64, |m, e| m ^ (1 << e))
}

/// `Z_G`: sum of `x(P)` over even subgraphs.
pub fn enumerate_z(domain: &Domain, params: &ModelParams) -> Result<f64> {
    let x = xs(domain, params);
    let edges = all_edges(domain);
    let mut s = Sum::default();
    for_each_subgraph(domain, &edges, 0, |m| s.add(weight(&x, &edges, m)))?;
    Ok(s.value())
}

/// `Z_G^{[v_1..v_2n]}`: sum over subgraphs odd exactly at the given vertices.
pub fn enumerate_z_disorder(domain: &Domain, params: &ModelParams, vertices: &[GridCoord]) -> Result<f64> {
    let x = xs(domain, params);
    let edges = all_edges(domain);
    let target = vertex_mask(domain, vertices)?;
    let mut s = Sum::default();
    for_each_subgraph(domain, &edges, target, |m| s.add(weight(&x, &edges, m)))?;
    Ok(s.value())
}

/// `⟨μ_{v_1}..μ_{v_2n}⟩ = Z^{[v]}/Z`.
pub fn enumerate_disorders(domain: &Domain, params: &ModelParams, vertices: &[GridCoord]) -> Result<f64> {
    if vertices.len() % 2 == 1 {
        return Err(Error::InvalidInsertion("odd number of disorders".into()));
    }
    Ok(enumerate_z_disorder(domain, params, vertices)? / enumerate_z(domain, params)?)
}

/// `E[σ_{u_1}..σ_{u_m}]` by summing over all spin configurations with the
/// outer spin fixed to `+1`.
pub fn enumerate_spins(domain: &Domain, params: &ModelParams, faces: &[GridCoord]) -> Result<f64> {
    let nf = domain.faces().len();
    if nf > MAX_FACES {
        return Err(Error::TooLarge {
            edges: domain.edges().len(),
            cap: MAX_EDGES,
        });
    }
    let mut sel = 0u64;
    for f in faces {
        let id = domain.face_id(*f).ok_or(Error::FaceOutsideDomain(f.k, f.s))?;
        sel ^= 1 << id;
    }
    let x = xs(domain, params);
    let mut z = Sum::default();
    let mut num = Sum::default();
    for conf in 0u64..(1u64 << nf) {
        // bit set = spin -1
        let mut w = 1.0;
        for (e, ed) in domain.edges().iter().enumerate() {
            let s0 = ed.faces[0].map_or(false, |f| conf >> f & 1 == 1);
            let s1 = ed.faces[1].map_or(false, |f| conf >> f & 1 == 1);
            if s0 != s1 {
                w *= x[e];
            }
        }
        z.add(w);
        let sign = if (conf & sel).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        num.add(sign * w);
    }
    Ok(num.value() / z.value())
}

/// Crossed-edge masks of fixed dual paths from each face to the outer face.
fn face_rays(domain: &Domain, faces: &[GridCoord]) -> Result<Vec<u64>> {
    faces
        .iter()
        .map(|&f| {
            let p = default_defect_paths(domain, &[f], &[])?;
            Ok(edge_set_mask(p.kappa[0].crossed.iter().copied()))
        })
        .collect()
}

/// `E[σ_{u_1}..σ_{u_m}]` through the domain-wall expansion: a loop separates
/// `u` from the outer face iff it crosses a fixed dual ray from `u` an odd
/// number of times.
pub fn enumerate_spins_loops(domain: &Domain, params: &ModelParams, faces: &[GridCoord]) -> Result<f64> {
    let rays = face_rays(domain, faces)?;
    let ray = rays.iter().fold(0u64, |a, &r| a ^ r);
    let x = xs(domain, params);
    let edges = all_edges(domain);
    let mut z = Sum::default();
    let mut num = Sum::default();
    for_each_subgraph(domain, &edges, 0, |m| {
        let w = weight(&x, &edges, m);
        z.add(w);
        num.add(if (m & ray).count_ones() % 2 == 0 { w } else { -w });
    })?;
    Ok(num.value() / z.value())
}

/// Mixed correlator `Z^{-1} Σ_{P ∈ E(v)} x(P) (-1)^{loops_u(P △ P_0)}` with
/// `P_0` the default disorder paths. Signed; the overall sign depends on the
/// identification of the faces with sheets.
pub fn enumerate_mixed(
    domain: &Domain,
    params: &ModelParams,
    vertices: &[GridCoord],
    faces: &[GridCoord],
) -> Result<f64> {
    let p0 = default_defect_paths(domain, &[], vertices)?;
    let p0_mask = edge_set_mask(p0.gamma.iter().flat_map(|p| p.edges.iter().copied()));
    let rays = face_rays(domain, faces)?;
    let ray = rays.iter().fold(0u64, |a, &r| a ^ r);
    let x = xs(domain, params);
    let edges = all_edges(domain);
    let target = vertex_mask(domain, vertices)?;
    let mut num = Sum::default();
    for_each_subgraph(domain, &edges, target, |m| {
        let w = weight(&x, &edges, m);
        num.add(if ((m ^ p0_mask) & ray).count_ones() % 2 == 0 { w } else { -w });
    })?;
    Ok(num.value() / enumerate_z(domain, params)?)
}

/// `E*[σ_{v_1}..σ_{v_k}]` for the model with spins on vertices and couplings
/// `tanh β*_e = x*_e`, free boundary conditions, by direct spin summation.
pub fn enumerate_vertex_spins(domain: &Domain, x_star: &[f64], vertices: &[GridCoord]) -> Result<f64> {
    let nv = domain.vertices().len();
    if nv > MAX_FACES {
        return Err(Error::TooLarge {
            edges: domain.edges().len(),
            cap: MAX_EDGES,
        });
    }
    let sel = vertex_mask(domain, vertices)?;
    let ends: Vec<(usize, usize)> = domain
        .edges()
        .iter()
        .map(|e| {
            (
                domain.vertex_id(e.ends[0]).expect("vertex"),
                domain.vertex_id(e.ends[1]).expect("vertex"),
            )
        })
        .collect();
    let beta: Vec<f64> = x_star.iter().map(|x| x.atanh()).collect();
    let mut z = Sum::default();
    let mut num = Sum::default();
    for conf in 0u64..(1u64 << nv) {
        let mut energy = 0.0;
        for (e, &(a, b)) in ends.iter().enumerate() {
            let same = (conf >> a & 1) == (conf >> b & 1);
            energy += if same { beta[e] } else { -beta[e] };
        }
        let w = energy.exp();
        z.add(w);
        num.add(if (conf & sel).count_ones() % 2 == 0 { w } else { -w });
    }
    Ok(num.value() / z.value())
}

/// A fermionic insertion: the half-edge of an oriented edge (from its
/// midpoint towards its head) or a corner decoration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Insertion {
    /// Oriented edge index.
    Edge(usize),
    /// Corner index.
    Corner(usize),
}

#[derive(Clone, Copy, Debug)]
struct Stub {
    vertex: usize,
    /// Direction from the vertex towards the stub, units of π/4.
    port: i32,
    eta: Complex64,
    weight: f64,
}

fn norm_angle(a: i32) -> i32 {
    // into (-4, 4]
    let r = a.rem_euclid(8);
    if r > 4 {
        r - 8
    } else {
        r
    }
}

fn step_angle(dk: i32, ds: i32) -> i32 {
    match (dk.signum(), ds.signum()) {
        (1, 0) => 0,
        (1, 1) => 1,
        (0, 1) => 2,
        (-1, 1) => 3,
        (-1, 0) => 4,
        (-1, -1) => -3,
        (0, -1) => -2,
        (1, -1) => -1,
        _ => unreachable!("zero step"),
    }
}

fn stubs(domain: &Domain, params: &ModelParams, ins: &[Insertion]) -> Result<(Vec<Stub>, Vec<usize>)> {
    let mut out = Vec::with_capacity(ins.len());
    let mut removed = Vec::new();
    for i in ins {
        match *i {
            Insertion::Edge(e) => {
                let o = *domain
                    .oriented_edges()
                    .get(e)
                    .ok_or_else(|| Error::EdgeOutsideDomain(format!("oriented edge {e}")))?;
                if removed.contains(&o.edge) {
                    return Err(Error::InvalidInsertion("two insertions on one edge".into()));
                }
                removed.push(o.edge);
                out.push(Stub {
                    vertex: domain.vertex_id(o.head).expect("vertex"),
                    port: step_angle(o.tail.k - o.head.k, o.tail.s - o.head.s),
                    eta: o.eta(),
                    weight: params.x(o.edge).sqrt(),
                });
            }
            Insertion::Corner(c) => {
                let cr = *domain
                    .corners()
                    .get(c)
                    .ok_or_else(|| Error::InvalidInsertion(format!("corner {c}")))?;
                out.push(Stub {
                    vertex: domain.vertex_id(cr.vertex).expect("vertex"),
                    port: step_angle(cr.face.k - cr.vertex.k, cr.face.s - cr.vertex.s),
                    eta: cr.eta(),
                    weight: 1.0,
                });
            }
        }
    }
    Ok((out, removed))
}

/// How ports at a vertex are paired: cyclically adjacent ports in angular
/// order, starting either at the first port (`false`) or the second (`true`).
#[derive(Clone, Debug)]
pub enum Resolution {
    First,
    Second,
    /// Pseudo-random choice per vertex.
    Mixed(u64),
}

impl Resolution {
    fn shift(&self, vertex: usize) -> bool {
        match self {
            Resolution::First => false,
            Resolution::Second => true,
            Resolution::Mixed(seed) => {
                let mut z = seed.wrapping_add((vertex as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
                (z ^ (z >> 31)) & 1 == 1
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Port {
    Edge(usize),
    Stub(usize),
}

/// A walk produced by the decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct Walk {
    /// Insertion indices at the two ends (`None` for loops).
    pub ends: Option<(usize, usize)>,
    pub edges: Vec<usize>,
    /// Total rotation angle in units of π/4.
    pub wind: i32,
}

impl Walk {
    pub fn wind_radians(&self) -> f64 {
        self.wind as f64 * PI / 4.0
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoopDecomposition {
    pub loops: Vec<Walk>,
    pub paths: Vec<Walk>,
}

/// Decomposes the subgraph made of `edges` plus the insertion stubs into
/// non-crossing loops and paths.
pub fn decompose(
    domain: &Domain,
    params: &ModelParams,
    insertions: &[Insertion],
    edges: &[usize],
    resolution: &Resolution,
) -> Result<LoopDecomposition> {
    let (st, _) = stubs(domain, params, insertions)?;
    Ok(decompose_stubs(domain, &st, edges, resolution))
}

fn decompose_stubs(domain: &Domain, st: &[Stub], edges: &[usize], resolution: &Resolution) -> LoopDecomposition {
    let nv = domain.vertices().len();
    let mut ports: Vec<Vec<(i32, Port)>> = vec![Vec::new(); nv];
    for &e in edges {
        let ed = &domain.edges()[e];
        let a = domain.vertex_id(ed.ends[0]).expect("vertex");
        let b = domain.vertex_id(ed.ends[1]).expect("vertex");
        let (dk, ds) = (ed.ends[1].k - ed.ends[0].k, ed.ends[1].s - ed.ends[0].s);
        ports[a].push((step_angle(dk, ds), Port::Edge(e)));
        ports[b].push((step_angle(-dk, -ds), Port::Edge(e)));
    }
    for (i, s) in st.iter().enumerate() {
        ports[s.vertex].push((s.port, Port::Stub(i)));
    }
    // partner[v][port] = matched port
    let mut partner: Vec<Vec<(Port, (i32, Port))>> = vec![Vec::new(); nv];
    for v in 0..nv {
        let p = &mut ports[v];
        if p.is_empty() {
            continue;
        }
        debug_assert!(p.len() % 2 == 0, "odd degree in decomposition");
        p.sort_by_key(|x| x.0);
        let d = p.len();
        let off = usize::from(resolution.shift(v) && d > 2);
        for i in 0..d / 2 {
            let a = p[(2 * i + off) % d];
            let b = p[(2 * i + 1 + off) % d];
            partner[v].push((a.1, b));
            partner[v].push((b.1, a));
        }
    }
    let find = |v: usize, port: Port| -> (i32, Port) {
        partner[v]
            .iter()
            .find(|(p, _)| *p == port)
            .map(|(_, q)| *q)
            .expect("paired port")
    };
    let other_end = |e: usize, v: usize| -> usize {
        let ed = &domain.edges()[e];
        let a = domain.vertex_id(ed.ends[0]).expect("vertex");
        let b = domain.vertex_id(ed.ends[1]).expect("vertex");
        if a == v {
            b
        } else {
            a
        }
    };
    // Angle of the port of edge e at vertex v.
    let port_angle = |e: usize, v: usize| -> i32 {
        let ed = &domain.edges()[e];
        let here = domain.vertices()[v];
        let there = if ed.ends[0] == here { ed.ends[1] } else { ed.ends[0] };
        step_angle(there.k - here.k, there.s - here.s)
    };

    let mut used = vec![false; domain.edges().len()];
    let mut done_stub = vec![false; st.len()];
    let mut out = LoopDecomposition::default();

    // Walk from vertex `v`, having entered through `port` while travelling in
    // direction `dir`. Returns (end stub, edges, wind).
    let walk = |mut v: usize, mut port: Port, mut dir: i32, used: &mut Vec<bool>, stop_edge: Option<usize>| {
        let mut wind = 0;
        let mut path = Vec::new();
        loop {
            let (qa, q) = find(v, port);
            wind += norm_angle(qa - dir);
            match q {
                Port::Stub(j) => return (Some(j), path, wind),
                Port::Edge(e) => {
                    if Some(e) == stop_edge && used[e] {
                        return (None, path, wind);
                    }
                    used[e] = true;
                    path.push(e);
                    dir = qa;
                    v = other_end(e, v);
                    port = Port::Edge(e);
                }
            }
        }
    };

    for i in 0..st.len() {
        if done_stub[i] {
            continue;
        }
        let s = st[i];
        let (end, path, wind) = walk(s.vertex, Port::Stub(i), norm_angle(s.port + 4), &mut used, None);
        let j = end.expect("path ends at a stub");
        done_stub[i] = true;
        done_stub[j] = true;
        out.paths.push(Walk {
            ends: Some((i, j)),
            edges: path,
            wind,
        });
    }
    for &e in edges {
        if used[e] {
            continue;
        }
        used[e] = true;
        let ed = &domain.edges()[e];
        let a = domain.vertex_id(ed.ends[0]).expect("vertex");
        let b = other_end(e, a);
        let dir = port_angle(e, a);
        let (end, mut path, wind) = walk(b, Port::Edge(e), dir, &mut used, Some(e));
        debug_assert!(end.is_none());
        path.insert(0, e);
        out.loops.push(Walk {
            ends: None,
            edges: path,
            wind,
        });
    }
    out
}

fn perm_sign(p: &[usize]) -> f64 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `τ(P)` from a decomposition: `sign(s) ∏ i η_start conj(η_end) e^{-i wind/2}`.
fn tau(st: &[Stub], dec: &LoopDecomposition) -> Complex64 {
    let mut order = Vec::with_capacity(st.len());
    let mut t = Complex64::new(1.0, 0.0);
    for w in &dec.paths {
        let (a, b) = w.ends.expect("path ends");
        order.push(a);
        order.push(b);
        t *= Complex64::new(0.0, 1.0)
            * st[a].eta
            * st[b].eta.conj()
            * Complex64::from_polar(1.0, -(w.wind as f64) * PI / 8.0);
    }
    t * perm_sign(&order)
}

/// The sign `τ(P)` of one subgraph (edges given explicitly).
pub fn tau_sign(
    domain: &Domain,
    params: &ModelParams,
    insertions: &[Insertion],
    edges: &[usize],
    resolution: &Resolution,
) -> Result<Complex64> {
    let (st, _) = stubs(domain, params, insertions)?;
    let dec = decompose_stubs(domain, &st, edges, resolution);
    Ok(tau(&st, &dec))
}

/// Result of a signed fermionic enumeration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FermionSum {
    /// `Σ x(P) τ(P)` (with the κ sign if requested), unnormalized.
    pub sum: f64,
    /// Normalization: `Z`, or `Z E[σ_{u..}]` when κ is given.
    pub norm: f64,
    /// Largest imaginary part of any `τ(P)` (should vanish).
    pub max_imag: f64,
    /// Number of contributing subgraphs.
    pub count: usize,
}

impl FermionSum {
    pub fn value(&self) -> f64 {
        self.sum / self.norm
    }
}

/// `⟨X_1 .. X_2k⟩` for insertions `X = φ_e` (half-edges) or `χ_c` (corners):
/// `Σ_P x(P) τ(P) / Z`. With `kappa`, the sign `τ(P)` is multiplied by
/// `(-1)^{|P ∩ κ|}` and the normalization is `Z E[σ_{u..}]` for the branch
/// faces of κ.
pub fn enumerate_fermions(
    domain: &Domain,
    params: &ModelParams,
    insertions: &[Insertion],
    kappa: Option<&DefectPaths>,
    resolution: &Resolution,
) -> Result<FermionSum> {
    if insertions.len() % 2 == 1 {
        return Err(Error::InvalidInsertion("odd number of fermions".into()));
    }
    let (st, removed) = stubs(domain, params, insertions)?;
    let edges: Vec<usize> = all_edges(domain).into_iter().filter(|e| !removed.contains(e)).collect();
    let mut target = 0u64;
    for s in &st {
        target ^= 1 << s.vertex;
    }
    let x = xs(domain, params);
    let kmask = kappa.map_or(0u64, |k| {
        edge_set_mask(
            k.kappa_parity(domain)
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(e, _)| e),
        )
    });
    let stub_weight: f64 = st.iter().map(|s| s.weight).product();
    let mut sum = Sum::default();
    let mut max_imag: f64 = 0.0;
    let mut count = 0;
    let mut list = Vec::with_capacity(edges.len());
    for_each_subgraph(domain, &edges, target, |m| {
        list.clear();
        let mut mm = m;
        while mm != 0 {
            list.push(edges[mm.trailing_zeros() as usize]);
            mm &= mm - 1;
        }
        let dec = decompose_stubs(domain, &st, &list, resolution);
        let t = tau(&st, &dec);
        max_imag = max_imag.max(t.im.abs());
        let full = edge_set_mask(list.iter().copied());
        let ksign = if (full & kmask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        sum.add(weight(&x, &edges, m) * stub_weight * t.re * ksign);
        count += 1;
    })?;
    let all = all_edges(domain);
    let mut norm = Sum::default();
    for_each_subgraph(domain, &all, 0, |m| {
        let w = weight(&x, &all, m);
        norm.add(if (m & kmask).count_ones() % 2 == 0 { w } else { -w });
    })?;
    Ok(FermionSum {
        sum: sum.value(),
        norm: norm.value(),
        max_imag,
        count,
    })
}

/// Combinatorial `F(c, z_e) = t_e Σ_{e' ∈ {e, ē}} η_{e'} ⟨φ_{e'} X⟩` for a
/// source insertion `X` (corner or half-edge, without its `t` factor).
pub fn enumerate_fermion_f(
    domain: &Domain,
    params: &ModelParams,
    source: Insertion,
    edge: usize,
    kappa: Option<&DefectPaths>,
) -> Result<Complex64> {
    let [o1, o2] = domain.orientations(edge);
    let t = params.t(edge);
    let mut f = Complex64::new(0.0, 0.0);
    for o in [o1, o2] {
        let v = enumerate_fermions(domain, params, &[Insertion::Edge(o), source], kappa, &Resolution::First)?;
        f += domain.oriented_edges()[o].eta() * v.value();
    }
    Ok(f * t)
}
