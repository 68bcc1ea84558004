use std::collections::HashSet;
use std::f64::consts::PI;

use planar_ising::lattice::*;
use planar_ising::Error;
use proptest::prelude::*;

fn g(k: i32, s: i32) -> GridCoord {
    GridCoord::new(k, s)
}

#[test]
fn single_face_counts() {
    let d = Domain::new([g(0, 0)]).unwrap();
    assert_eq!(d.faces().len(), 1);
    assert_eq!(d.vertices().len(), 4);
    assert_eq!(d.edges().len(), 4);
    assert_eq!(d.num_oriented(), 8);
    assert_eq!(d.corners().len(), 4);
    assert!(d.edges().iter().all(Edge::is_boundary));
}

#[test]
fn two_faces_sharing_a_vertex() {
    // (0,0) and (2,0) meet only at the vertex (1,0): 4 + 4 − 1 vertices.
    let d = Domain::new([g(0, 0), g(2, 0)]).unwrap();
    assert_eq!(d.vertices().len(), 7);
    assert_eq!(d.edges().len(), 8);
    // Euler: V − E + (inner faces + outer face) = 2
    assert_eq!(d.vertices().len() as i64 - d.edges().len() as i64 + 3, 2);
}

#[test]
fn construction_errors() {
    assert!(matches!(Domain::new([g(0, 0), g(3, 0)]), Err(Error::ParityViolation { k: 3, s: 0 })));
    assert_eq!(Domain::new(Vec::<GridCoord>::new()).unwrap_err(), Error::EmptyDomain);
    assert_eq!(Domain::new([g(0, 0), g(6, 0)]).unwrap_err(), Error::DisconnectedFaces);
    // ring of eight faces around (0,0)
    let ring: Vec<GridCoord> = [(-1, -1), (1, -1), (-1, 1), (1, 1), (2, 0), (-2, 0), (0, 2), (0, -2)]
        .iter()
        .map(|&(k, s)| g(k, s))
        .collect();
    assert_eq!(Domain::new(ring).unwrap_err(), Error::NotSimplyConnected);
    assert!(rectangle_domain(0, 3).is_err());
}

#[test]
fn rectangles() {
    assert_eq!(rectangle_domain(1, 1).unwrap().faces(), &[g(0, 0)]);
    let two = rectangle_domain(2, 1).unwrap();
    assert_eq!(two.faces(), &[g(0, 0), g(2, 0)]);
    let d = rectangle_domain(8, 8).unwrap();
    assert_eq!(d.faces().len(), 64);
    let euler = d.vertices().len() as i64 - d.edges().len() as i64 + d.faces().len() as i64;
    assert_eq!(euler, 1);
    let c = centered_rectangle(4, 4).unwrap();
    assert!(c.face_id(g(0, 0)).is_some() && c.face_id(g(2, 0)).is_some());
}

#[test]
fn centered_squares() {
    let sq = centered_square(4).unwrap();
    assert_eq!(sq.faces().len(), 16);
    // the square is symmetric under the point reflection about (1, 0)
    for f in sq.faces() {
        assert!(sq.face_id(g(2 - f.k, -f.s)).is_some(), "{f}");
    }
    let b = sq.edges().iter().filter(|e| e.is_boundary()).count();
    assert_eq!(b, 16);
    assert_eq!(centered_square(1).unwrap().faces(), &[g(0, 0)]);
    assert!(centered_square(0).is_err());
}

#[test]
fn disk_domains() {
    // The five faces (0,0), (±1,±1) lie at distance < 1 when δ = 0.5.
    let d = disk_domain(1.0, 0.5).unwrap();
    let faces: HashSet<GridCoord> = d.faces().iter().copied().collect();
    let expected: HashSet<GridCoord> = [(0, 0), (1, 1), (1, -1), (-1, 1), (-1, -1)]
        .iter()
        .map(|&(k, s)| g(k, s))
        .collect();
    assert_eq!(faces, expected);

    let d = disk_domain(1.0, 0.25).unwrap();
    let faces: HashSet<GridCoord> = d.faces().iter().copied().collect();
    for f in &faces {
        assert!(faces.contains(&g(-f.k, f.s)) && faces.contains(&g(f.k, -f.s)));
    }

    let delta = 0.01;
    let n = disk_domain(1.0, delta).unwrap().faces().len() as f64;
    let area = PI / (2.0 * delta * delta);
    assert!((n / area - 1.0).abs() < 0.02, "{n} vs {area}");
    assert!(disk_domain(1.0, 0.9).is_err());
}

#[test]
fn orientation_and_reversal() {
    let d = rectangle_domain(3, 3).unwrap();
    for e in 0..d.num_oriented() {
        let r = d.reverse(e);
        assert_ne!(r, e);
        assert_eq!(d.reverse(r), e);
        let (a, b) = (d.oriented_edges()[e], d.oriented_edges()[r]);
        assert_eq!((a.tail, a.head), (b.head, b.tail));
        assert!((a.direction() + b.direction()).norm() < 1e-15);
        assert!((a.eta().norm() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn winding_of_turns() {
    let d = rectangle_domain(3, 3).unwrap();
    let mut seen = HashSet::new();
    for e in 0..d.num_oriented() {
        for e2 in d.continuations(e) {
            let w = d.wind(e, e2);
            let (a, b) = (d.oriented_edges()[e].direction(), d.oriented_edges()[e2].direction());
            let turn = (b / a).arg();
            assert!((w - turn).abs() < 1e-12);
            seen.insert((w * 2.0 / PI).round() as i32);
        }
    }
    assert_eq!(seen, HashSet::from([-1, 0, 1]));
}

#[test]
fn defect_path_shapes() {
    let d = rectangle_domain(3, 3).unwrap();
    let empty = default_defect_paths(&d, &[], &[]).unwrap();
    assert!(empty.is_empty());

    // adjacent faces across one edge: κ crosses exactly that edge
    let p = default_defect_paths(&d, &[g(1, 1), g(2, 2)], &[]).unwrap();
    assert_eq!(p.kappa.len(), 1);
    assert_eq!(p.kappa[0].crossed.len(), 1);
    let e = p.kappa[0].crossed[0];
    let faces: HashSet<_> = d.edges()[e].faces.iter().flatten().copied().collect();
    assert_eq!(faces, HashSet::from([d.face_id(g(1, 1)).unwrap(), d.face_id(g(2, 2)).unwrap()]));

    // one branch face is joined to the outer face
    let p = default_defect_paths(&d, &[g(2, 2)], &[]).unwrap();
    assert_eq!(p.kappa.len(), 1);
    assert!(p.kappa[0].start == FaceRef::Outer || p.kappa[0].end == FaceRef::Outer);

    let v = default_defect_paths(&d, &[], &[g(1, 0), g(5, 2)]).unwrap();
    assert_eq!(v.gamma.len(), 1);
    assert!(!v.gamma[0].edges.is_empty());
}

#[test]
fn defect_paths_reject_bad_insertions() {
    let d = rectangle_domain(2, 2).unwrap();
    assert!(matches!(
        default_defect_paths(&d, &[g(10, 0)], &[]),
        Err(Error::FaceOutsideDomain(10, 0))
    ));
    assert!(default_defect_paths(&d, &[g(0, 0), g(0, 0)], &[]).is_err());
    assert!(matches!(
        default_defect_paths(&d, &[], &[g(21, 0), g(1, 0)]),
        Err(Error::VertexOutsideDomain(21, 0))
    ));
}

#[test]
fn spec_round_trip() {
    let d = rectangle_domain(3, 2).unwrap();
    let spec = d.to_spec();
    let json = serde_json::to_string(&spec).unwrap();
    let back: DomainSpec = serde_json::from_str(&json).unwrap();
    assert_eq!(Domain::from_spec(&back).unwrap().faces(), d.faces());

    let p = default_defect_paths(&d, &[g(0, 0), g(4, 0)], &[g(1, 0), g(3, 0)]).unwrap();
    let ps = p.to_spec(&d);
    assert_eq!(DefectPaths::from_spec(&d, &ps).unwrap(), p);
}

prop_compose! {
    fn face_blob()(steps in proptest::collection::vec(0usize..4, 1..14)) -> Vec<GridCoord> {
        let mut cur = g(0, 0);
        let mut out = vec![cur];
        for st in steps {
            let (dk, ds) = EDGE_STEPS[st];
            cur = cur.offset(dk, ds);
            out.push(cur);
        }
        out
    }
}

proptest! {
    #[test]
    fn euler_characteristic_of_random_walk_domains(faces in face_blob()) {
        // A walk of edge-adjacent faces is connected; holes make it fail.
        match Domain::new(faces) {
            Ok(d) => {
                let chi = d.vertices().len() as i64 - d.edges().len() as i64 + d.faces().len() as i64;
                prop_assert_eq!(chi, 1);
                let b = d.edges().iter().filter(|e| e.is_boundary()).count();
                prop_assert_eq!(4 * d.faces().len(), 2 * d.edges().len() - b);
                prop_assert_eq!(d.corners().len(), 4 * d.faces().len());
            }
            Err(e) => prop_assert_eq!(e, Error::NotSimplyConnected),
        }
    }
}
