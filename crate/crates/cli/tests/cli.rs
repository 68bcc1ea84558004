use std::f64::consts::PI;

use planar_ising_cli::{execute, run, Command, DomainSpec, JobConfig, EXIT_INVALID, EXIT_OK, EXIT_TOLERANCE};
use proptest::prelude::*;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("planar-ising").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn help_and_version() {
    assert_eq!(call(&["--help"]).0, EXIT_OK);
    assert_eq!(call(&["--version"]).0, EXIT_OK);
}

#[test]
fn invalid_input_exits_two() {
    assert_eq!(call(&["frobnicate"]).0, EXIT_INVALID);
    assert_eq!(call(&["describe", "frobnicate"]).0, EXIT_INVALID);
    assert_eq!(call(&[]).0, EXIT_INVALID);
    // face off the lattice parity
    assert_eq!(call(&["spin", "--rect", "2x2", "--face", "1,0"]).0, EXIT_INVALID);
    // theta out of range
    assert_eq!(call(&["partition", "--rect", "2x2", "--theta", "2.0"]).0, EXIT_INVALID);
}

#[test]
fn describe_every_command() {
    for c in Command::ALL {
        let (code, out, _) = call(&["describe", c.name()]);
        assert_eq!(code, EXIT_OK);
        assert!(out.starts_with(c.name()), "{out}");
    }
}

#[test]
fn diagonal_csv() {
    let (code, out, _) = call(&["diagonal", "--n", "2", "--critical", "--all"]);
    assert_eq!(code, EXIT_OK);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("n,q,d,dstar"));
    let row1: Vec<&str> = lines.next().unwrap().split(',').collect();
    let d1: f64 = row1[2].parse().unwrap();
    assert!((d1 - 2.0 / PI).abs() < 1e-15);
    let row2: Vec<&str> = lines.next().unwrap().split(',').collect();
    let d2: f64 = row2[2].parse().unwrap();
    assert!((d2 - 16.0 / (3.0 * PI * PI)).abs() < 1e-15);
}

#[test]
fn partition_matches_single_face_value() {
    let (code, out, _) = call(&["partition", "--faces", "0,0"]);
    assert_eq!(code, EXIT_OK);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("quantity,insertions,theta,value,log_value,raw_sign"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let z: f64 = row[3].parse().unwrap();
    assert!((z - (1.0 + (2f64.sqrt() - 1.0).powi(4))).abs() < 1e-13);
}

#[test]
fn tolerance_failure_exits_three() {
    let (code, _, _) = call(&["oracle-verify", "--domains", "2", "--max-edges", "10", "--tolerance", "1e-30"]);
    assert_eq!(code, EXIT_TOLERANCE);
    let (code, _, _) = call(&["oracle-verify", "--domains", "2", "--max-edges", "10"]);
    assert_eq!(code, EXIT_OK);
}

#[test]
fn config_file_and_print_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("job.json");
    let mut job = JobConfig::new(Command::Spin);
    job.domain = Some(DomainSpec::Rectangle {
        width: 3,
        height: 3,
        centered: false,
    });
    job.faces = vec![[2, 2]];
    std::fs::write(&path, job.to_json()).unwrap();

    let (code, out, _) = call(&["--config", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let direct = execute(&job).unwrap();
    assert!(out.starts_with(direct.csv.as_deref().unwrap()));

    // the same job built from flags prints an equivalent config
    let (code, printed, _) = call(&["--print-config", "spin", "--rect", "3x3", "--face", "2,2"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(JobConfig::from_json(&printed).unwrap(), job);

    let (code, _, _) = call(&["--config", path.to_str().unwrap(), "partition", "--rect", "2x2"]);
    assert_eq!(code, EXIT_INVALID);

    std::fs::write(&path, r#"{"command": "teleport"}"#).unwrap();
    let (code, _, err) = call(&["--config", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("unknown command"));
    std::fs::write(&path, r#"{"command": "spin", "colour": 1}"#).unwrap();
    assert_eq!(call(&["--config", path.to_str().unwrap()]).0, EXIT_INVALID);
    std::fs::write(&path, r#"{"command": "diagonal", "n": 2, "deterministic": false}"#).unwrap();
    assert_eq!(call(&["--config", path.to_str().unwrap()]).0, EXIT_INVALID);
}

#[test]
fn output_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("diag.csv");
    let (code, out, _) = call(&["--output", path.to_str().unwrap(), "diagonal", "--n", "3", "--q", "0.6"]);
    assert_eq!(code, EXIT_OK);
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("n,q,d,dstar"));
    assert!(out.is_empty());

    // tables with a verdict write both files and echo the verdict
    let path = dir.path().join("opuc.csv");
    let (code, out, _) = call(&["--output", path.to_str().unwrap(), "opuc", "--n", "4", "--q", "0.6"]);
    assert_eq!(code, EXIT_OK);
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("n,alpha,beta"));
    let verdict = std::fs::read_to_string(path.with_extension("json")).unwrap();
    assert!(verdict.contains("\"passed\":true"));
    assert_eq!(out.trim(), verdict.trim());
}

fn domain_strategy() -> impl Strategy<Value = Option<DomainSpec>> {
    prop_oneof![
        Just(None),
        (1usize..20, 1usize..20, any::<bool>()).prop_map(|(width, height, centered)| Some(DomainSpec::Rectangle {
            width,
            height,
            centered
        })),
        (0.5f64..3.0, 0.01f64..0.5, any::<bool>()).prop_map(|(radius, delta, inscribed)| Some(DomainSpec::Disk {
            radius,
            delta,
            inscribed
        })),
        proptest::collection::vec((-10i32..10, -10i32..10), 1..6)
            .prop_map(|v| Some(DomainSpec::Faces { faces: v.into_iter().map(|(k, s)| [k, s]).collect() })),
    ]
}

proptest! {
    #[test]
    fn job_config_json_round_trip(
        cmd in 0usize..12,
        domain in domain_strategy(),
        theta in 0.01f64..1.5,
        faces in proptest::collection::vec((-9i32..9, -9i32..9), 0..4),
        n in proptest::option::of(1usize..50),
        q in proptest::option::of(0.01f64..0.99),
        tolerance in proptest::option::of(1e-15f64..1e-3),
        all in any::<bool>(),
    ) {
        let mut job = JobConfig::new(Command::ALL[cmd]);
        job.domain = domain;
        job.theta = theta;
        job.faces = faces.into_iter().map(|(k, s)| [k, s]).collect();
        job.n = n;
        job.q = q;
        job.tolerance = tolerance;
        job.all = all;
        let back = JobConfig::from_json(&job.to_json()).unwrap();
        prop_assert_eq!(back, job);
    }
}
