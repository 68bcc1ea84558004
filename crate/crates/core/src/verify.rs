//! Dual-route verification: Pfaffian formulas against brute-force
//! enumeration on random small domains.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correlators::Solver;
use crate::error::{Error, Result};
use crate::kacward::ModelParams;
use crate::lattice::{Domain, GridCoord, EDGE_STEPS};
use crate::oracle::{self, Insertion, Resolution};

/// Grows a random simply connected face set with at most `max_edges` edges.
pub fn random_domain<R: Rng>(rng: &mut R, max_edges: usize) -> Domain {
    let mut faces: BTreeSet<GridCoord> = BTreeSet::new();
    faces.insert(GridCoord::new(0, 0));
    let mut current = Domain::new(faces.iter().copied()).expect("single face");
    let target = rng.gen_range(2..=12);
    let mut attempts = 0;
    while faces.len() < target && attempts < 200 {
        attempts += 1;
        let list: Vec<GridCoord> = faces.iter().copied().collect();
        let base = *list.choose(rng).expect("non-empty");
        let (dk, ds) = EDGE_STEPS[rng.gen_range(0..4)];
        let f = base.offset(dk, ds);
        if faces.contains(&f) {
            continue;
        }
        faces.insert(f);
        match Domain::new(faces.iter().copied()) {
            Ok(d) if d.edges().len() <= max_edges => current = d,
            _ => {
                faces.remove(&f);
            }
        }
    }
    current
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Partition,
    Spin,
    Disorder,
    Mixed,
    Fermion2,
    Fermion4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub domain: usize,
    pub theta: f64,
    pub kind: CheckKind,
    pub detail: String,
    pub pfaffian: f64,
    pub oracle: f64,
}

impl Check {
    pub fn error(&self) -> f64 {
        (self.pfaffian - self.oracle).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub domains: usize,
    pub checks: Vec<Check>,
    pub tolerance: f64,
    pub max_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub domains: usize,
    pub max_edges: usize,
    pub thetas: Vec<f64>,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            domains: 60,
            max_edges: 18,
            thetas: vec![PI / 6.0, PI / 4.0, PI / 3.0],
            seed: 2024,
            tolerance: 1e-11,
        }
    }
}

fn pick<T: Copy, R: Rng>(rng: &mut R, items: &[T], n: usize) -> Vec<T> {
    items.choose_multiple(rng, n).copied().collect()
}

/// Oriented edges on pairwise distinct undirected edges.
fn pick_oriented<R: Rng>(rng: &mut R, d: &Domain, n: usize) -> Vec<usize> {
    let edges: Vec<usize> = (0..d.edges().len()).collect();
    pick(rng, &edges, n)
        .into_iter()
        .map(|e| d.orientations(e)[rng.gen_range(0..2)])
        .collect()
}

fn fmt_coords(c: &[GridCoord]) -> String {
    c.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(" ")
}

/// Retries a randomized check when the random insertions admit no
/// edge-disjoint defect paths.
fn attempt<R: Rng, F: FnMut(&mut R) -> Result<(String, f64, f64)>>(
    rng: &mut R,
    mut f: F,
) -> Result<Option<(String, f64, f64)>> {
    for _ in 0..8 {
        match f(rng) {
            Ok(v) => return Ok(Some(v)),
            Err(Error::PathCollisionUnresolvable(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

fn checks_for(domain_id: usize, d: &Domain, theta: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let p = ModelParams::homogeneous(theta)?;
    let s = Solver::new(d, &p)?;
    let mut out = Vec::new();
    let mut push = |kind, r: Option<(String, f64, f64)>| {
        if let Some((detail, pfaffian, oracle)) = r {
            out.push(Check {
                domain: domain_id,
                theta,
                kind,
                detail,
                pfaffian,
                oracle,
            })
        }
    };
    push(
        CheckKind::Partition,
        Some((String::new(), s.partition_function()?.value, oracle::enumerate_z(d, &p)?)),
    );
    let faces = d.faces().to_vec();
    let verts = d.vertices().to_vec();
    for m in 1..=4.min(faces.len()) {
        let r = attempt(rng, |rng| {
            let u = pick(rng, &faces, m);
            Ok((
                fmt_coords(&u),
                s.spin_correlator(&u)?.value,
                oracle::enumerate_spins(d, &p, &u)?,
            ))
        })?;
        push(CheckKind::Spin, r);
    }
    for n in [2, 4] {
        let r = attempt(rng, |rng| {
            let v = pick(rng, &verts, n);
            Ok((
                fmt_coords(&v),
                s.disorder_correlator(&v)?.signed(),
                oracle::enumerate_disorders(d, &p, &v)?,
            ))
        })?;
        push(CheckKind::Disorder, r);
    }
    if faces.len() >= 2 {
        let r = attempt(rng, |rng| {
            let v = pick(rng, &verts, 2);
            let u = pick(rng, &faces, 2);
            // the sign of a mixed correlator depends on the sheet choice
            Ok((
                format!("{} | {}", fmt_coords(&v), fmt_coords(&u)),
                s.mixed_correlator(&v, &u)?.value,
                oracle::enumerate_mixed(d, &p, &v, &u)?.abs(),
            ))
        })?;
        push(CheckKind::Mixed, r);
    }
    for (kind, n) in [(CheckKind::Fermion2, 2), (CheckKind::Fermion4, 4)] {
        if d.edges().len() < n {
            continue;
        }
        let e = pick_oriented(rng, d, n);
        let ins: Vec<Insertion> = e.iter().map(|&o| Insertion::Edge(o)).collect();
        push(
            kind,
            Some((
                format!("{e:?}"),
                s.phi_correlator(&e)?,
                oracle::enumerate_fermions(d, &p, &ins, None, &Resolution::First)?.value(),
            )),
        );
    }
    Ok(out)
}

/// Runs the suite; every quantity is checked on every domain for every θ.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    if cfg.max_edges > oracle::MAX_EDGES {
        return Err(Error::TooLarge {
            edges: cfg.max_edges,
            cap: oracle::MAX_EDGES,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();
    for i in 0..cfg.domains {
        let d = random_domain(&mut rng, cfg.max_edges);
        for &theta in &cfg.thetas {
            checks.extend(checks_for(i, &d, theta, &mut rng)?);
        }
    }
    let max_error = checks.iter().map(Check::error).fold(0.0, f64::max);
    Ok(SuiteReport {
        domains: cfg.domains,
        passed: max_error <= cfg.tolerance,
        checks,
        tolerance: cfg.tolerance,
        max_error,
    })
}
