//! Rotated square grid, discrete domains and defect paths.
//!
//! Faces sit at integer points `(k, s)` with `k + s` even, vertices at points
//! with `k + s` odd. Edges join vertices by diagonal unit steps, so the face
//! `(k, s)` has the four vertices `(k ± 1, s)` and `(k, s ± 1)`.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridCoord {
    pub k: i32,
    pub s: i32,
}

impl GridCoord {
    pub const fn new(k: i32, s: i32) -> Self {
        GridCoord { k, s }
    }

    pub fn is_face(self) -> bool {
        (self.k + self.s).rem_euclid(2) == 0
    }

    pub fn is_vertex(self) -> bool {
        !self.is_face()
    }

    pub fn offset(self, dk: i32, ds: i32) -> Self {
        GridCoord::new(self.k + dk, self.s + ds)
    }

    /// Physical position `delta * (k + i s)`.
    pub fn point(self, delta: f64) -> Complex64 {
        Complex64::new(self.k as f64 * delta, self.s as f64 * delta)
    }
}

impl std::fmt::Display for GridCoord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.k, self.s)
    }
}

/// Diagonal vertex-to-vertex steps, counterclockwise starting at angle π/4.
pub const EDGE_STEPS: [(i32, i32); 4] = [(1, 1), (-1, 1), (-1, -1), (1, -1)];

/// Face-to-vertex steps (corner decorations), angles 0, π/2, π, -π/2.
pub const CORNER_STEPS: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// The unimodular factor ς = e^{iπ/4}.
pub fn varsigma() -> Complex64 {
    Complex64::from_polar(1.0, PI / 4.0)
}

/// Principal argument of an edge step in units of π/4.
pub fn edge_angle(dir: usize) -> i32 {
    [1, 3, -3, -1][dir]
}

/// Principal argument of a corner decoration in units of π/4.
pub fn corner_angle(dir: usize) -> i32 {
    [0, 2, 4, -2][dir]
}

/// ς times the conjugate of the principal square root of `e^{iπ a/4}`,
/// for `a` in (-4, 4].
pub fn eta_from_angle(a: i32) -> Complex64 {
    Complex64::from_polar(1.0, PI * (2 - a) as f64 / 8.0)
}

pub fn edge_dir_index(dk: i32, ds: i32) -> Option<usize> {
    EDGE_STEPS.iter().position(|&st| st == (dk, ds))
}

pub fn corner_dir_index(dk: i32, ds: i32) -> Option<usize> {
    CORNER_STEPS.iter().position(|&st| st == (dk, ds))
}

/// Turning angle from direction `d1` to `d2` in units of π/4; `None` for a
/// reversal.
pub fn turn(d1: usize, d2: usize) -> Option<i32> {
    match (d2 + 4 - d1) % 4 {
        0 => Some(0),
        1 => Some(2),
        3 => Some(-2),
        _ => None,
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoints in lexicographic order.
    pub ends: [GridCoord; 2],
    /// Grid cells on the left and right of `ends[0] -> ends[1]`.
    pub cells: [GridCoord; 2],
    /// Inner face indices of `cells`; `None` is the outer face.
    pub faces: [Option<usize>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.faces[0].is_none() || self.faces[1].is_none()
    }

    pub fn midpoint(&self, delta: f64) -> Complex64 {
        (self.ends[0].point(delta) + self.ends[1].point(delta)) * 0.5
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrientedEdge {
    pub tail: GridCoord,
    pub head: GridCoord,
    pub edge: usize,
    pub dir: usize,
}

impl OrientedEdge {
    pub fn direction(&self) -> Complex64 {
        let (dk, ds) = EDGE_STEPS[self.dir];
        Complex64::new(dk as f64, ds as f64) / 2f64.sqrt()
    }

    pub fn eta(&self) -> Complex64 {
        eta_from_angle(edge_angle(self.dir))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Corner {
    pub face: GridCoord,
    pub vertex: GridCoord,
    pub dir: usize,
}

impl Corner {
    /// Unit direction of the decoration from the face center to the vertex.
    pub fn direction(&self) -> Complex64 {
        let (dk, ds) = CORNER_STEPS[self.dir];
        Complex64::new(dk as f64, ds as f64)
    }

    pub fn eta(&self) -> Complex64 {
        eta_from_angle(corner_angle(self.dir))
    }
}

/// Face of the domain graph: an inner face or the outer face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceRef {
    Inner(usize),
    Outer,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainSpec {
    pub faces: Vec<[i32; 2]>,
}

#[derive(Clone, Debug)]
pub struct Domain {
    faces: Vec<GridCoord>,
    face_index: HashMap<GridCoord, usize>,
    vertices: Vec<GridCoord>,
    vertex_index: HashMap<GridCoord, usize>,
    edges: Vec<Edge>,
    edge_index: HashMap<(GridCoord, GridCoord), usize>,
    oriented: Vec<OrientedEdge>,
    oriented_index: HashMap<(GridCoord, GridCoord), usize>,
    reverse: Vec<usize>,
    corners: Vec<Corner>,
    corner_index: HashMap<(GridCoord, GridCoord), usize>,
}

fn face_vertices(f: GridCoord) -> [GridCoord; 4] {
    CORNER_STEPS.map(|(dk, ds)| f.offset(dk, ds))
}

fn ordered(a: GridCoord, b: GridCoord) -> (GridCoord, GridCoord) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Offsets of faces sharing at least a vertex with a given face.
const VERTEX_NEIGHBOURS: [(i32, i32); 8] = [
    (1, 1),
    (-1, 1),
    (-1, -1),
    (1, -1),
    (2, 0),
    (0, 2),
    (-2, 0),
    (0, -2),
];

fn components(cells: &BTreeSet<GridCoord>, offsets: &[(i32, i32)]) -> Vec<Vec<GridCoord>> {
    let mut seen: HashSet<GridCoord> = HashSet::new();
    let mut out = Vec::new();
    for &start in cells {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for &(dk, ds) in offsets {
                let n = c.offset(dk, ds);
                if cells.contains(&n) && seen.insert(n) {
                    comp.push(n);
                    queue.push_back(n);
                }
            }
        }
        comp.sort();
        out.push(comp);
    }
    out
}

/// Non-inner cells of the bounding box (padded by 2) that cannot reach the
/// padding through shared edges.
fn holes(faces: &BTreeSet<GridCoord>) -> Vec<GridCoord> {
    let kmin = faces.iter().map(|f| f.k).min().unwrap() - 2;
    let kmax = faces.iter().map(|f| f.k).max().unwrap() + 2;
    let smin = faces.iter().map(|f| f.s).min().unwrap() - 2;
    let smax = faces.iter().map(|f| f.s).max().unwrap() + 2;
    let mut outside = BTreeSet::new();
    for k in kmin..=kmax {
        for s in smin..=smax {
            let c = GridCoord::new(k, s);
            if c.is_face() && !faces.contains(&c) {
                outside.insert(c);
            }
        }
    }
    let mut reached = HashSet::new();
    let mut queue = VecDeque::new();
    for &c in &outside {
        if c.k <= kmin + 1 || c.k >= kmax - 1 || c.s <= smin + 1 || c.s >= smax - 1 {
            reached.insert(c);
            queue.push_back(c);
        }
    }
    while let Some(c) = queue.pop_front() {
        for &(dk, ds) in &EDGE_STEPS {
            let n = c.offset(dk, ds);
            if outside.contains(&n) && reached.insert(n) {
                queue.push_back(n);
            }
        }
    }
    outside.into_iter().filter(|c| !reached.contains(c)).collect()
}

impl Domain {
    /// Builds a domain from its inner faces.
    ///
    /// The faces must form a connected graph (faces touching at a single
    /// vertex count as connected) whose complement is connected.
    pub fn new<I: IntoIterator<Item = GridCoord>>(inner_faces: I) -> Result<Domain> {
        let faces: BTreeSet<GridCoord> = inner_faces.into_iter().collect();
        if faces.is_empty() {
            return Err(Error::EmptyDomain);
        }
        if let Some(bad) = faces.iter().find(|f| !f.is_face()) {
            return Err(Error::ParityViolation { k: bad.k, s: bad.s });
        }
        if components(&faces, &VERTEX_NEIGHBOURS).len() != 1 {
            return Err(Error::DisconnectedFaces);
        }
        if !holes(&faces).is_empty() {
            return Err(Error::NotSimplyConnected);
        }
        Ok(Self::assemble(faces))
    }

    fn assemble(face_set: BTreeSet<GridCoord>) -> Domain {
        let faces: Vec<GridCoord> = face_set.iter().copied().collect();
        let face_index: HashMap<GridCoord, usize> =
            faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();

        let mut vset = BTreeSet::new();
        let mut eset = BTreeSet::new();
        for &f in &faces {
            let vs = face_vertices(f);
            for i in 0..4 {
                vset.insert(vs[i]);
                eset.insert(ordered(vs[i], vs[(i + 1) % 4]));
            }
        }
        let vertices: Vec<GridCoord> = vset.into_iter().collect();
        let vertex_index = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();

        let mut edges = Vec::with_capacity(eset.len());
        let mut edge_index = HashMap::new();
        for (a, b) in eset {
            let (dk, ds) = (b.k - a.k, b.s - a.s);
            let c1 = a.offset(dk, 0);
            let c2 = a.offset(0, ds);
            let cells = if dk * ds > 0 { [c2, c1] } else { [c1, c2] };
            let faces_of = cells.map(|c| face_index.get(&c).copied());
            edge_index.insert((a, b), edges.len());
            edges.push(Edge {
                ends: [a, b],
                cells,
                faces: faces_of,
            });
        }

        let mut oriented = Vec::with_capacity(2 * edges.len());
        for (i, e) in edges.iter().enumerate() {
            for (t, h) in [(e.ends[0], e.ends[1]), (e.ends[1], e.ends[0])] {
                let dir = edge_dir_index(h.k - t.k, h.s - t.s).expect("diagonal step");
                oriented.push(OrientedEdge {
                    tail: t,
                    head: h,
                    edge: i,
                    dir,
                });
            }
        }
        oriented.sort_by_key(|o| (o.tail.k, o.tail.s, o.dir));
        let oriented_index: HashMap<(GridCoord, GridCoord), usize> = oriented
            .iter()
            .enumerate()
            .map(|(i, o)| ((o.tail, o.head), i))
            .collect();
        let reverse = oriented
            .iter()
            .map(|o| oriented_index[&(o.head, o.tail)])
            .collect();

        let mut corners = Vec::with_capacity(4 * faces.len());
        let mut corner_index = HashMap::new();
        for &f in &faces {
            for (dir, &(dk, ds)) in CORNER_STEPS.iter().enumerate() {
                let v = f.offset(dk, ds);
                corner_index.insert((f, v), corners.len());
                corners.push(Corner {
                    face: f,
                    vertex: v,
                    dir,
                });
            }
        }

        Domain {
            faces,
            face_index,
            vertices,
            vertex_index,
            edges,
            edge_index,
            oriented,
            oriented_index,
            reverse,
            corners,
            corner_index,
        }
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Domain> {
        Domain::new(spec.faces.iter().map(|&[k, s]| GridCoord::new(k, s)))
    }

    pub fn to_spec(&self) -> DomainSpec {
        DomainSpec {
            faces: self.faces.iter().map(|f| [f.k, f.s]).collect(),
        }
    }

    pub fn faces(&self) -> &[GridCoord] {
        &self.faces
    }

    pub fn vertices(&self) -> &[GridCoord] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn oriented_edges(&self) -> &[OrientedEdge] {
        &self.oriented
    }

    pub fn corners(&self) -> &[Corner] {
        &self.corners
    }

    pub fn num_oriented(&self) -> usize {
        self.oriented.len()
    }

    pub fn face_id(&self, f: GridCoord) -> Option<usize> {
        self.face_index.get(&f).copied()
    }

    pub fn vertex_id(&self, v: GridCoord) -> Option<usize> {
        self.vertex_index.get(&v).copied()
    }

    pub fn edge_id(&self, a: GridCoord, b: GridCoord) -> Option<usize> {
        self.edge_index.get(&ordered(a, b)).copied()
    }

    pub fn oriented_id(&self, tail: GridCoord, head: GridCoord) -> Option<usize> {
        self.oriented_index.get(&(tail, head)).copied()
    }

    pub fn corner_id(&self, face: GridCoord, vertex: GridCoord) -> Option<usize> {
        self.corner_index.get(&(face, vertex)).copied()
    }

    pub fn reverse(&self, e: usize) -> usize {
        self.reverse[e]
    }

    /// Oriented edges leaving `v`, indexed by direction.
    pub fn outgoing(&self, v: GridCoord) -> [Option<usize>; 4] {
        EDGE_STEPS.map(|(dk, ds)| self.oriented_id(v, v.offset(dk, ds)))
    }

    /// The two oriented edges of an undirected edge, `ends[0] -> ends[1]` first.
    pub fn orientations(&self, edge: usize) -> [usize; 2] {
        let e = &self.edges[edge];
        let fwd = self.oriented_index[&(e.ends[0], e.ends[1])];
        [fwd, self.reverse[fwd]]
    }

    /// Dual neighbours of an inner face: the crossed edge and the face on the
    /// other side, in direction order.
    pub fn face_neighbours(&self, face: usize) -> [(usize, FaceRef); 4] {
        let f = self.faces[face];
        let vs = face_vertices(f);
        let mut out = [(0, FaceRef::Outer); 4];
        for i in 0..4 {
            let (a, b) = (vs[i], vs[(i + 1) % 4]);
            let edge = self.edge_id(a, b).expect("face edge");
            let cell = f.offset(EDGE_STEPS[i].0, EDGE_STEPS[i].1);
            out[i] = (
                edge,
                self.face_id(cell).map_or(FaceRef::Outer, FaceRef::Inner),
            );
        }
        out
    }

    /// Undirected edges incident to a vertex.
    pub fn vertex_edges(&self, v: GridCoord) -> Vec<usize> {
        self.outgoing(v)
            .iter()
            .flatten()
            .map(|&o| self.oriented[o].edge)
            .collect()
    }

    /// Oriented edges `e'` that continue `e`: they start at the head of `e`
    /// and are not its reversal.
    pub fn continuations(&self, e: usize) -> Vec<usize> {
        let o = self.oriented[e];
        self.outgoing(o.head)
            .iter()
            .flatten()
            .copied()
            .filter(|&n| n != self.reverse[e])
            .collect()
    }

    /// Rotation angle from `e` to `e'` (which must continue `e`), radians.
    pub fn wind(&self, e: usize, e2: usize) -> f64 {
        let t = turn(self.oriented[e].dir, self.oriented[e2].dir).expect("no reversal");
        t as f64 * PI / 4.0
    }

    pub fn corners_of_face(&self, face: usize) -> [usize; 4] {
        let f = self.faces[face];
        CORNER_STEPS.map(|(dk, ds)| self.corner_index[&(f, f.offset(dk, ds))])
    }

    /// Corners whose vertex is an endpoint of the given edge and whose face is
    /// adjacent to it (up to four).
    pub fn corners_at_edge(&self, edge: usize) -> Vec<usize> {
        let e = &self.edges[edge];
        let mut out = Vec::new();
        for f in e.faces.iter().flatten() {
            for v in e.ends {
                if let Some(c) = self.corner_id(self.faces[*f], v) {
                    out.push(c);
                }
            }
        }
        out
    }
}

/// Faces `(k, s)` with `0 <= k < 2 width`, `0 <= s < height`, `k + s` even.
pub fn rectangle_domain(width: usize, height: usize) -> Result<Domain> {
    rectangle_domain_at(width, height, GridCoord::new(0, 0))
}

/// [`rectangle_domain`] translated so that its corner face sits at `origin`.
pub fn rectangle_domain_at(width: usize, height: usize, origin: GridCoord) -> Result<Domain> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument("rectangle sides must be positive".into()));
    }
    if !origin.is_face() {
        return Err(Error::ParityViolation {
            k: origin.k,
            s: origin.s,
        });
    }
    let mut faces = Vec::with_capacity(width * height);
    for s in 0..height as i32 {
        for k in 0..2 * width as i32 {
            if (k + s) % 2 == 0 {
                faces.push(origin.offset(k, s));
            }
        }
    }
    Domain::new(faces)
}

/// Rectangle whose middle is as close as possible to the point `(1, 0)`, the
/// midpoint of the faces `(0, 0)` and `(2, 0)`.
pub fn centered_rectangle(width: usize, height: usize) -> Result<Domain> {
    let mut k0 = 1 - width as i32;
    let s0 = -((height as i32 - 1) / 2);
    if (k0 + s0) % 2 != 0 {
        k0 += 1;
    }
    rectangle_domain_at(width, height, GridCoord::new(k0, s0))
}

/// `side × side` block of faces along the lattice axes (a square rotated by
/// π/4 in the `(k, s)` plane), centered on the midpoint of `(0, 0)` and
/// `(2, 0)` when `side` is even. Faces are `(a + b, a − b)` for `a, b` in a
/// run of `side` consecutive integers.
pub fn centered_square(side: usize) -> Result<Domain> {
    if side == 0 {
        return Err(Error::InvalidArgument("square side must be positive".into()));
    }
    let lo = 1 - (side as i32 + 1) / 2;
    let run = lo..lo + side as i32;
    let faces = run
        .clone()
        .flat_map(|a| run.clone().map(move |b| GridCoord::new(a + b, a - b)))
        .collect::<Vec<_>>();
    Domain::new(faces)
}

/// Faces whose centers, scaled by `mesh_delta`, lie in the open disk of the
/// given radius about the origin. The largest edge-connected component is
/// kept and its holes are filled.
pub fn disk_domain(radius: f64, mesh_delta: f64) -> Result<Domain> {
    if !(radius > 0.0 && mesh_delta > 0.0) || radius / mesh_delta < 2.0 {
        return Err(Error::InvalidArgument(format!(
            "radius/mesh ratio {} below 2",
            radius / mesh_delta
        )));
    }
    let n = (radius / mesh_delta).ceil() as i32 + 1;
    let mut cells = BTreeSet::new();
    for k in -n..=n {
        for s in -n..=n {
            let c = GridCoord::new(k, s);
            if c.is_face() && c.point(mesh_delta).norm() < radius {
                cells.insert(c);
            }
        }
    }
    let comps = components(&cells, &EDGE_STEPS);
    let best = comps
        .into_iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .unwrap_or_default();
    let mut faces: BTreeSet<GridCoord> = best.into_iter().collect();
    if faces.len() < 4 {
        return Err(Error::TooCoarse { faces: faces.len() });
    }
    faces.extend(holes(&faces));
    Ok(Domain::assemble(faces))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualPath {
    pub start: FaceRef,
    pub end: FaceRef,
    /// Crossed edges in order.
    pub crossed: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimalPath {
    /// Vertex indices from start to end.
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DefectPaths {
    pub kappa: Vec<DualPath>,
    pub gamma: Vec<PrimalPath>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectPathsSpec {
    /// Each path is a list of crossed dual edges `[[k1,s1],[k2,s2]]` between
    /// grid cells (cells outside the domain stand for the outer face).
    pub kappa: Vec<Vec<[[i32; 2]; 2]>>,
    /// Each path is a list of primal edges `[[k1,s1],[k2,s2]]` between vertices.
    pub gamma: Vec<Vec<[[i32; 2]; 2]>>,
}

fn face_ref(domain: &Domain, c: GridCoord) -> FaceRef {
    domain.face_id(c).map_or(FaceRef::Outer, FaceRef::Inner)
}

impl DefectPaths {
    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty() && self.gamma.is_empty()
    }

    /// Per-edge parity of the number of κ crossings.
    pub fn kappa_parity(&self, domain: &Domain) -> Vec<bool> {
        let mut p = vec![false; domain.edges().len()];
        for path in &self.kappa {
            for &e in &path.crossed {
                p[e] ^= true;
            }
        }
        p
    }

    /// Per-edge parity of the number of γ traversals.
    pub fn gamma_parity(&self, domain: &Domain) -> Vec<bool> {
        let mut p = vec![false; domain.edges().len()];
        for path in &self.gamma {
            for &e in &path.edges {
                p[e] ^= true;
            }
        }
        p
    }

    /// Branch faces: inner faces that are an endpoint of an odd number of κ paths.
    pub fn branch_faces(&self) -> Vec<usize> {
        let mut count: HashMap<usize, usize> = HashMap::new();
        for p in &self.kappa {
            for end in [p.start, p.end] {
                if let FaceRef::Inner(f) = end {
                    *count.entry(f).or_default() += 1;
                }
            }
        }
        let mut v: Vec<usize> = count
            .into_iter()
            .filter(|(_, c)| c % 2 == 1)
            .map(|(f, _)| f)
            .collect();
        v.sort();
        v
    }

    /// Returns `true` if a walk crossing the listed edges ends on the other
    /// sheet of the double cover defined by κ.
    pub fn sheet_flip(&self, domain: &Domain, crossed: &[usize]) -> bool {
        let p = self.kappa_parity(domain);
        crossed.iter().fold(false, |acc, &e| acc ^ p[e])
    }

    pub fn to_spec(&self, domain: &Domain) -> DefectPathsSpec {
        let cell = |c: GridCoord| [c.k, c.s];
        let kappa = self
            .kappa
            .iter()
            .map(|p| {
                let mut cur = p.start;
                p.crossed
                    .iter()
                    .map(|&e| {
                        let ed = &domain.edges()[e];
                        let (a, b) = if face_ref(domain, ed.cells[0]) == cur {
                            (ed.cells[0], ed.cells[1])
                        } else {
                            (ed.cells[1], ed.cells[0])
                        };
                        cur = face_ref(domain, b);
                        [cell(a), cell(b)]
                    })
                    .collect()
            })
            .collect();
        let gamma = self
            .gamma
            .iter()
            .map(|p| {
                p.vertices
                    .windows(2)
                    .map(|w| [cell(domain.vertices()[w[0]]), cell(domain.vertices()[w[1]])])
                    .collect()
            })
            .collect();
        DefectPathsSpec { kappa, gamma }
    }

    /// Validates user supplied paths against the domain.
    pub fn from_spec(domain: &Domain, spec: &DefectPathsSpec) -> Result<DefectPaths> {
        let mut kappa = Vec::new();
        for (pi, p) in spec.kappa.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::PathOutsideDomain(format!("kappa path {pi} is empty")));
            }
            let mut crossed = Vec::new();
            let start = GridCoord::new(p[0][0][0], p[0][0][1]);
            let mut cur = start;
            for step in p {
                let a = GridCoord::new(step[0][0], step[0][1]);
                let b = GridCoord::new(step[1][0], step[1][1]);
                if a != cur && !(face_ref(domain, a) == FaceRef::Outer && face_ref(domain, cur) == FaceRef::Outer) {
                    return Err(Error::PathOutsideDomain(format!("kappa path {pi} is not contiguous at {a}")));
                }
                let (dk, ds) = (b.k - a.k, b.s - a.s);
                if !a.is_face() || edge_dir_index(dk, ds).is_none() {
                    return Err(Error::PathOutsideDomain(format!("{a} -> {b} is not a dual edge")));
                }
                // The crossed edge joins the two vertices shared by a and b.
                let v1 = a.offset(dk, 0);
                let v2 = a.offset(0, ds);
                let e = domain
                    .edge_id(v1, v2)
                    .ok_or_else(|| Error::PathOutsideDomain(format!("{a} -> {b} crosses no edge")))?;
                crossed.push(e);
                cur = b;
            }
            kappa.push(DualPath {
                start: face_ref(domain, start),
                end: face_ref(domain, cur),
                crossed,
            });
        }
        let mut gamma = Vec::new();
        for (pi, p) in spec.gamma.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::PathOutsideDomain(format!("gamma path {pi} is empty")));
            }
            let first = GridCoord::new(p[0][0][0], p[0][0][1]);
            let mut vertices = vec![domain
                .vertex_id(first)
                .ok_or_else(|| Error::PathOutsideDomain(format!("vertex {first}")))?];
            let mut edges = Vec::new();
            let mut cur = first;
            for step in p {
                let a = GridCoord::new(step[0][0], step[0][1]);
                let b = GridCoord::new(step[1][0], step[1][1]);
                if a != cur {
                    return Err(Error::PathOutsideDomain(format!("gamma path {pi} is not contiguous at {a}")));
                }
                let e = domain
                    .edge_id(a, b)
                    .ok_or_else(|| Error::PathOutsideDomain(format!("{a} -> {b} is not an edge")))?;
                edges.push(e);
                vertices.push(domain.vertex_id(b).expect("edge endpoint"));
                cur = b;
            }
            gamma.push(PrimalPath { vertices, edges });
        }
        Ok(DefectPaths { kappa, gamma })
    }
}

fn dual_bfs(
    domain: &Domain,
    from: usize,
    to: FaceRef,
    used: &HashSet<usize>,
) -> Option<Vec<usize>> {
    // Nodes: inner faces, plus the outer face as node `n`.
    let n = domain.faces().len();
    let target = match to {
        FaceRef::Inner(f) => f,
        FaceRef::Outer => n,
    };
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n + 1];
    let mut seen = vec![false; n + 1];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(f) = queue.pop_front() {
        if f == target {
            break;
        }
        if f == n {
            continue;
        }
        for (edge, nb) in domain.face_neighbours(f) {
            if used.contains(&edge) {
                continue;
            }
            let id = match nb {
                FaceRef::Inner(g) => g,
                FaceRef::Outer => n,
            };
            if !seen[id] {
                seen[id] = true;
                parent[id] = Some((f, edge));
                queue.push_back(id);
            }
        }
    }
    if !seen[target] {
        return None;
    }
    let mut crossed = Vec::new();
    let mut cur = target;
    while cur != from {
        let (p, e) = parent[cur].expect("bfs parent");
        crossed.push(e);
        cur = p;
    }
    crossed.reverse();
    Some(crossed)
}

fn primal_bfs(domain: &Domain, from: usize, to: usize, used: &HashSet<usize>) -> Option<PrimalPath> {
    let nv = domain.vertices().len();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; nv];
    let mut seen = vec![false; nv];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            break;
        }
        let vc = domain.vertices()[v];
        for o in domain.outgoing(vc).iter().flatten() {
            let oe = domain.oriented_edges()[*o];
            if used.contains(&oe.edge) {
                continue;
            }
            let w = domain.vertex_id(oe.head).expect("head vertex");
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some((v, oe.edge));
                queue.push_back(w);
            }
        }
    }
    if !seen[to] {
        return None;
    }
    let mut vertices = vec![to];
    let mut edges = Vec::new();
    let mut cur = to;
    while cur != from {
        let (p, e) = parent[cur].expect("bfs parent");
        edges.push(e);
        vertices.push(p);
        cur = p;
    }
    vertices.reverse();
    edges.reverse();
    Some(PrimalPath { vertices, edges })
}

/// Deterministic shortest defect paths. Branch faces are sorted and paired
/// consecutively (the last one with the outer face if their number is odd);
/// disorder vertices likewise. Later paths avoid edges used by earlier ones.
pub fn default_defect_paths(
    domain: &Domain,
    branch_faces: &[GridCoord],
    disorder_vertices: &[GridCoord],
) -> Result<DefectPaths> {
    let mut faces = Vec::with_capacity(branch_faces.len());
    for &f in branch_faces {
        faces.push(domain.face_id(f).ok_or(Error::FaceOutsideDomain(f.k, f.s))?);
    }
    faces.sort();
    if faces.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInsertion("repeated branch face".into()));
    }
    let mut verts = Vec::with_capacity(disorder_vertices.len());
    for &v in disorder_vertices {
        verts.push(domain.vertex_id(v).ok_or(Error::VertexOutsideDomain(v.k, v.s))?);
    }
    verts.sort();
    if verts.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInsertion("repeated disorder vertex".into()));
    }
    if verts.len() % 2 == 1 {
        return Err(Error::InvalidInsertion("odd number of disorder vertices".into()));
    }

    let mut kappa = Vec::new();
    let mut used = HashSet::new();
    for pair in faces.chunks(2) {
        let start = pair[0];
        let end = pair.get(1).map_or(FaceRef::Outer, |&f| FaceRef::Inner(f));
        let crossed = dual_bfs(domain, start, end, &used).ok_or_else(|| {
            Error::PathCollisionUnresolvable(format!("no free dual path from face {}", domain.faces()[start]))
        })?;
        used.extend(crossed.iter().copied());
        kappa.push(DualPath {
            start: FaceRef::Inner(start),
            end,
            crossed,
        });
    }

    let mut gamma = Vec::new();
    let mut used = HashSet::new();
    for pair in verts.chunks(2) {
        let path = primal_bfs(domain, pair[0], pair[1], &used).ok_or_else(|| {
            Error::PathCollisionUnresolvable(format!(
                "no free primal path from vertex {}",
                domain.vertices()[pair[0]]
            ))
        })?;
        used.extend(path.edges.iter().copied());
        gamma.push(path);
    }
    Ok(DefectPaths { kappa, gamma })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_face_counts() {
        let d = Domain::new([GridCoord::new(0, 0)]).unwrap();
        assert_eq!(d.vertices().len(), 4);
        assert_eq!(d.edges().len(), 4);
        assert_eq!(d.num_oriented(), 8);
        assert_eq!(d.corners().len(), 4);
        assert!(d.edges().iter().all(|e| e.is_boundary()));
    }

    #[test]
    fn parity_violation() {
        let err = Domain::new([GridCoord::new(0, 0), GridCoord::new(3, 0)]).unwrap_err();
        assert_eq!(err, Error::ParityViolation { k: 3, s: 0 });
    }

    #[test]
    fn hole_detected() {
        let mut faces = Vec::new();
        for k in -2..=2i32 {
            for s in -2..=2i32 {
                if (k + s) % 2 == 0 && (k, s) != (0, 0) {
                    faces.push(GridCoord::new(k, s));
                }
            }
        }
        assert_eq!(Domain::new(faces).unwrap_err(), Error::NotSimplyConnected);
    }

    #[test]
    fn disconnected_detected() {
        let err = Domain::new([GridCoord::new(0, 0), GridCoord::new(4, 0)]).unwrap_err();
        assert_eq!(err, Error::DisconnectedFaces);
    }

    #[test]
    fn reverse_is_involution() {
        let d = rectangle_domain(3, 2).unwrap();
        for e in 0..d.num_oriented() {
            assert_eq!(d.reverse(d.reverse(e)), e);
            assert_ne!(d.reverse(e), e);
        }
    }

    #[test]
    fn turn_angles() {
        assert_eq!(turn(0, 0), Some(0));
        assert_eq!(turn(0, 1), Some(2));
        assert_eq!(turn(0, 3), Some(-2));
        assert_eq!(turn(1, 3), None);
    }
}
