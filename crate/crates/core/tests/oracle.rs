use std::f64::consts::PI;

use planar_ising::correlators::{crosses_cut, disorder_correlator, mixed_correlator};
use planar_ising::kacward::ModelParams;
use planar_ising::lattice::*;
use planar_ising::oracle::*;
use planar_ising::Error;

fn g(k: i32, s: i32) -> GridCoord {
    GridCoord::new(k, s)
}

fn flower() -> Domain {
    Domain::new([g(0, 0), g(1, 1), g(-1, 1), g(-1, -1), g(1, -1), g(2, 0)]).unwrap()
}

#[test]
fn two_face_partition_function_by_hand() {
    // (0,0) and (2,0) share only a vertex: two independent 4-cycles
    let d = Domain::new([g(0, 0), g(2, 0)]).unwrap();
    let p = ModelParams::homogeneous(0.8).unwrap();
    let x4 = p.x(0).powi(4);
    let want = (1.0 + x4) * (1.0 + x4);
    assert!((enumerate_z(&d, &p).unwrap() - want).abs() < 1e-14);
}

#[test]
fn loop_and_spin_sums_agree() {
    let d = flower();
    for theta in [0.4, PI / 4.0, 1.1] {
        let p = ModelParams::homogeneous(theta).unwrap();
        for set in [vec![g(0, 0)], vec![g(2, 0), g(-1, 1)], vec![g(1, 1), g(-1, -1), g(2, 0)]] {
            let a = enumerate_spins(&d, &p, &set).unwrap();
            let b = enumerate_spins_loops(&d, &p, &set).unwrap();
            assert!((a - b).abs() < 1e-13, "{set:?}: {a} vs {b}");
            assert!(a > 0.0);
        }
    }
}

#[test]
fn kramers_wannier_duality() {
    // ⟨μ_v μ_v'⟩ equals the free-boundary vertex-spin correlation with tanh β* = x
    let d = flower();
    for theta in [0.6, PI / 4.0] {
        let p = ModelParams::homogeneous(theta).unwrap();
        let xs = vec![p.x(0); d.edges().len()];
        for vv in [[g(1, 0), g(-1, 0)], [g(3, 0), g(0, 1)], [g(-2, 1), g(1, -2)]] {
            let a = enumerate_vertex_spins(&d, &xs, &vv).unwrap();
            let b = enumerate_disorders(&d, &p, &vv).unwrap();
            let c = disorder_correlator(&d, &p, &vv).unwrap().signed();
            assert!((a - b).abs() < 1e-13 && (b - c).abs() < 1e-12, "{a} {b} {c}");
        }
    }
}

#[test]
fn mixed_magnitude_matches_pfaffian() {
    let d = flower();
    let p = ModelParams::homogeneous(0.7).unwrap();
    let (vs, fs) = ([g(1, 0), g(-1, 2)], [g(2, 0), g(-1, -1)]);
    let a = enumerate_mixed(&d, &p, &vs, &fs).unwrap();
    let b = mixed_correlator(&d, &p, &vs, &fs).unwrap();
    assert!((a.abs() - b.value).abs() < 1e-12, "{a} vs {}", b.value);
}

#[test]
fn tau_of_a_single_straight_path() {
    // φ_a, φ_b at the two ends of a straight run of edges: no winding, τ = i η_a η̄_b
    let d = rectangle_domain(3, 1).unwrap();
    let p = ModelParams::critical();
    let a = d.oriented_id(g(0, 1), g(1, 0)).unwrap();
    let mid = d.edge_id(g(1, 0), g(2, 1)).unwrap();
    let b = d.oriented_id(g(3, 0), g(2, 1)).unwrap();
    let t = tau_sign(&d, &p, &[Insertion::Edge(a), Insertion::Edge(b)], &[mid], &Resolution::First).unwrap();
    let (ea, eb) = (d.oriented_edges()[a].eta(), d.oriented_edges()[b].eta());
    let dec = decompose(&d, &p, &[Insertion::Edge(a), Insertion::Edge(b)], &[mid], &Resolution::First).unwrap();
    assert_eq!(dec.paths.len(), 1);
    assert!(dec.loops.is_empty());
    let want = num_complex::Complex64::i() * ea * eb.conj() * num_complex::Complex64::from_polar(1.0, -dec.paths[0].wind_radians() / 2.0);
    assert!((t - want).norm() < 1e-14);
    assert!(t.im.abs() < 1e-14 && (t.re.abs() - 1.0).abs() < 1e-14);
}

#[test]
fn loops_carry_total_rotation_two_pi() {
    let d = Domain::new([g(0, 0)]).unwrap();
    let all: Vec<usize> = (0..4).collect();
    let dec = decompose(&d, &ModelParams::critical(), &[], &all, &Resolution::First).unwrap();
    assert_eq!(dec.loops.len(), 1);
    assert_eq!(dec.loops[0].wind.abs(), 8);
}

#[test]
fn resolution_does_not_change_fermions() {
    let d = rectangle_domain(2, 2).unwrap();
    let p = ModelParams::homogeneous(0.9).unwrap();
    let ins = [0, 7, 12, 21].map(Insertion::Edge);
    let a = enumerate_fermions(&d, &p, &ins, None, &Resolution::First).unwrap();
    let b = enumerate_fermions(&d, &p, &ins, None, &Resolution::Second).unwrap();
    let c = enumerate_fermions(&d, &p, &ins, None, &Resolution::Mixed(99)).unwrap();
    assert!((a.value() - b.value()).abs() < 1e-14 && (a.value() - c.value()).abs() < 1e-14);
    assert!(a.max_imag < 1e-12);
}

#[test]
fn corner_two_point_is_a_dual_spin_ratio() {
    // Φ(d, c) = ∓E*[σ_c σ_d] / E[σ_u1 σ_u2] for corners c of u1 and d of u2;
    // walking around u2 the sign flips each time the cut κ is crossed.
    let d = flower();
    let (u1, u2) = (g(2, 0), g(0, 0));
    let kappa = default_defect_paths(&d, &[u1, u2], &[]).unwrap();
    let around = [g(-1, 0), g(0, 1), g(1, 0), g(0, -1)].map(|v| (v, d.corner_id(u2, v).unwrap()));
    let mut sheet = [-1.0; 4];
    for i in 1..4 {
        let flip = crosses_cut(&d, &kappa, around[i - 1].1, around[i].1);
        sheet[i] = if flip { -sheet[i - 1] } else { sheet[i - 1] };
    }
    // a full turn changes sheet
    assert_eq!(sheet[3] == sheet[0], crosses_cut(&d, &kappa, around[3].1, around[0].1));
    for theta in [0.6, PI / 4.0] {
        let p = ModelParams::homogeneous(theta).unwrap();
        let xs = vec![p.x(0); d.edges().len()];
        let ess = enumerate_spins(&d, &p, &[u1, u2]).unwrap();
        for cv in [g(3, 0), g(2, 1)] {
            let c = d.corner_id(u1, cv).unwrap();
            for (i, &(dv, dd)) in around.iter().enumerate() {
                let got = enumerate_fermions(&d, &p, &[Insertion::Corner(dd), Insertion::Corner(c)], Some(&kappa), &Resolution::First)
                    .unwrap()
                    .value();
                let want = sheet[i] * enumerate_vertex_spins(&d, &xs, &[cv, dv]).unwrap() / ess;
                assert!((got - want).abs() < 1e-12, "{cv} {dv}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn size_and_parity_errors() {
    let d = rectangle_domain(4, 4).unwrap();
    let p = ModelParams::critical();
    assert!(matches!(enumerate_z(&d, &p), Err(Error::TooLarge { .. })));
    let s = flower();
    assert!(enumerate_disorders(&s, &p, &[g(1, 0)]).is_err());
    assert!(enumerate_fermions(&s, &p, &[Insertion::Edge(0)], None, &Resolution::First).is_err());
    let [o1, o2] = s.orientations(0);
    assert!(enumerate_fermions(&s, &p, &[Insertion::Edge(o1), Insertion::Edge(o2)], None, &Resolution::First).is_err());
}
