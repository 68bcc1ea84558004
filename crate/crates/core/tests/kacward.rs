use std::f64::consts::PI;

use planar_ising::correlators::partition_function;
use planar_ising::kacward::*;
use planar_ising::lattice::*;
use planar_ising::oracle::enumerate_z;
use planar_ising::pfaffian::complex_log_det;

fn g(k: i32, s: i32) -> GridCoord {
    GridCoord::new(k, s)
}

#[test]
fn single_face_partition_function() {
    let d = Domain::new([g(0, 0)]).unwrap();
    for theta in [0.2, PI / 4.0, 1.3] {
        let p = ModelParams::homogeneous(theta).unwrap();
        let x = (theta / 2.0).tan();
        let want = 1.0 + x.powi(4);
        assert!((enumerate_z(&d, &p).unwrap() - want).abs() < 1e-15);
        let z = partition_function(&d, &p).unwrap();
        assert!((z.value - want).abs() < 1e-13 * want, "{} vs {want}", z.value);
    }
    let z = partition_function(&d, &ModelParams::critical()).unwrap();
    assert!((z.value - (1.0 + (2f64.sqrt() - 1.0).powi(4))).abs() < 1e-13);
}

#[test]
fn params_validation() {
    assert!(ModelParams::homogeneous(0.0).is_err());
    assert!(ModelParams::homogeneous(PI / 2.0).is_err());
    let p = ModelParams::critical();
    assert!((p.x(0) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
    // t² = x + 1/x = 2√2 at criticality
    assert!((p.t(0).powi(2) - 2.0 * 2f64.sqrt()).abs() < 1e-14);
    let d = rectangle_domain(2, 1).unwrap();
    let wrong = ModelParams::per_edge(vec![0.5; 3]).unwrap();
    assert!(KacWardAssembly::assemble(&d, &wrong).is_err());
}

#[test]
fn pfaffian_squared_is_kac_ward_determinant() {
    let d = rectangle_domain(3, 3).unwrap();
    for theta in [PI / 6.0, PI / 4.0, PI / 3.0] {
        let p = ModelParams::homogeneous(theta).unwrap();
        let asm = KacWardAssembly::assemble(&d, &p).unwrap();
        assert!(asm.imaginary_residue() < 1e-12);
        let pf = asm.pfaffian().unwrap();
        let (phase, log) = complex_log_det(d.num_oriented(), asm.id_minus_t()).unwrap();
        assert!((phase - 1.0).norm() < 1e-9, "phase {phase}");
        // Z² = det(Id − T) with Z = |Pf| e^{prefactor}
        let lhs = 2.0 * (pf.log_abs + asm.log_prefactor());
        assert!((lhs - log).abs() < 1e-9, "{lhs} vs {log}");
    }
    let d = rectangle_domain(3, 2).unwrap();
    let p = ModelParams::homogeneous(0.7).unwrap();
    let asm = KacWardAssembly::assemble(&d, &p).unwrap();
    let (_, log) = complex_log_det(d.num_oriented(), asm.id_minus_t()).unwrap();
    let z = enumerate_z(&d, &p).unwrap();
    assert!((0.5 * log - z.ln()).abs() < 1e-10);
}

#[test]
fn per_edge_weights_match_enumeration() {
    let d = rectangle_domain(3, 2).unwrap();
    let thetas: Vec<f64> = (0..d.edges().len()).map(|e| 0.3 + 0.07 * e as f64).collect();
    let p = ModelParams::per_edge(thetas).unwrap();
    let z = partition_function(&d, &p).unwrap();
    let want = enumerate_z(&d, &p).unwrap();
    assert!((z.value / want - 1.0).abs() < 1e-11);
}

#[test]
fn branch_cut_across_one_edge() {
    let d = rectangle_domain(3, 3).unwrap();
    let asm = KacWardAssembly::assemble(&d, &ModelParams::critical()).unwrap();
    let paths = default_defect_paths(&d, &[g(1, 1), g(2, 2)], &[]).unwrap();
    let cut = asm.apply_branch_cuts(&paths).unwrap();
    let (a, b) = (asm.khat(), cut.khat());
    let n = a.n();
    let mut changed = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if a.get(i, j) != b.get(i, j) {
                assert_eq!(a.get(i, j), -b.get(i, j));
                changed.push((i, j));
            }
        }
    }
    // one undirected edge: the entry coupling its two orientations
    assert_eq!(changed.len(), 1, "{changed:?}");
    let (i, j) = changed[0];
    assert_eq!(d.reverse(i), j);
    assert_eq!(d.oriented_edges()[i].edge, paths.kappa[0].crossed[0]);
    assert_eq!(cut.modifications().len(), 1);

    let empty = default_defect_paths(&d, &[], &[]).unwrap();
    assert_eq!(asm.apply_branch_cuts(&empty).unwrap().khat(), asm.khat());
    assert_eq!(asm.apply_disorder_lines(&empty).unwrap().khat(), asm.khat());
}

#[test]
fn disorder_line_inverts_weights() {
    let d = rectangle_domain(3, 3).unwrap();
    let p = ModelParams::homogeneous(0.5).unwrap();
    let asm = KacWardAssembly::assemble(&d, &p).unwrap();
    let paths = default_defect_paths(&d, &[], &[g(1, 0), g(3, 0)]).unwrap();
    let m = asm.apply_disorder_lines(&paths).unwrap();
    let on_path = paths.gamma_parity(&d);
    for e in 0..d.edges().len() {
        let want = if on_path[e] { 1.0 / asm.weights()[e] } else { asm.weights()[e] };
        assert!((m.weights()[e] - want).abs() < 1e-14);
    }
}

#[test]
fn dump_round_trip() {
    let d = rectangle_domain(2, 2).unwrap();
    let asm = KacWardAssembly::assemble(&d, &ModelParams::homogeneous(0.4).unwrap()).unwrap();
    let mut buf = Vec::new();
    asm.write_dump(&mut buf).unwrap();
    let (header, m) = read_dump(buf.as_slice()).unwrap();
    assert_eq!(header.dimension, d.num_oriented());
    assert_eq!(&m, asm.khat());
    for (row, map) in header.index_map.iter().enumerate() {
        let o = d.oriented_edges()[row];
        assert_eq!(*map, [o.tail.k, o.tail.s, o.head.k, o.head.s]);
    }
    assert!(read_dump(&buf[..buf.len() - 3]).is_err());
}

#[test]
fn transition_entries_have_unit_phase_turns() {
    let d = rectangle_domain(2, 2).unwrap();
    let asm = KacWardAssembly::assemble(&d, &ModelParams::critical()).unwrap();
    for en in asm.transition_entries() {
        let x = 2f64.sqrt() - 1.0;
        assert!((en.value.norm() - x).abs() < 1e-15);
        let w = d.wind(en.row, en.col);
        assert!((en.value.arg() - w / 2.0).abs() < 1e-14);
    }
}
