use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_holed-potential"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("POTENTIAL_THREADS").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_SWEEP: &str = r#"{
  "seed": 7,
  "alpha": 0.5,
  "geometry_families": [
    { "kind": "explicit", "geometry": { "r0": 1.0, "holes": [{ "centre": [0.4, 0.0], "radius": 0.2 }], "d": 0.2 } },
    { "kind": "ring", "n": [0], "d_over_r0": [0.2], "r0": [1.0] }
  ],
  "solver": { "M": 16, "nodes_per_circle": 68, "residual_tol": 1e-6 }
}"#;

#[test]
fn verify_relation_default_passes() {
    let o = run(&["verify-relation"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("15 checks, 0 failed"));
}

#[test]
fn zero_tolerance_is_a_breach() {
    let o = run(&["verify-relation", "--tol", "0"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn empty_data_list_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{ "relation": { "random_data": 0, "data": [] } }"#);
    let out = dir.path().join("report.txt");
    let o = run(&["verify-relation", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(out).unwrap().contains("(no checks)"));
}

#[test]
fn parse_errors_report_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", "{\n  \"seed\": 1,\n  \"alpha\": ,\n}");
    let o = run(&["identities", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn unknown_keys_and_missing_files_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{ "sead": 1 }"#);
    assert_eq!(run(&["sweep", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--config", "/nonexistent/c.json"]).status.code(), Some(2));
}

#[test]
fn degenerate_trace_annulus_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{ "identities": { "reflection_pairs": 10, "benedetto_poles": 2, "benedetto_nodes": 16, "radii": [1.0],
             "laplacian_step": 0.01, "trace_fields": 2, "trace_annuli": [[1.0, 1.0]] } }"#,
    );
    let o = run(&["identities", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho1 < rho2"));
}

#[test]
fn identities_default_pass() {
    let o = run(&["identities", "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn sweep_csv_is_deterministic_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL_SWEEP);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let o = run(&["sweep", "--config", &cfg, "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bin()
        .args(["sweep", "--config", &cfg, "--out", b.to_str().unwrap()])
        .env("POTENTIAL_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let a = std::fs::read(a).unwrap();
    assert_eq!(a, std::fs::read(b).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.ends_with('\n'));
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(
        rows[0],
        "n,d,r0,alpha,C_P,B,g_sup,g_hold,gp_sup,gp_hold,Du_sup,Du_hold,D2u_sup,D2u_hold,bound1,bound2,bound3,bound4,ratio1,ratio2,ratio3,ratio4,residual,flags"
    );
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("1,2.000000000000e-1,"));
    assert!(rows[2].starts_with("0,") && rows[2].ends_with(",B_zero"), "{}", rows[2]);
    assert!(rows[3].starts_with("max,"));
    for r in &rows[1..] {
        assert_eq!(r.split(',').count(), 24);
    }
}

#[test]
fn invalid_geometry_rows_are_flagged_not_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{ "geometry_families": [ { "kind": "explicit",
              "geometry": { "r0": 1.0, "holes": [{ "centre": [0.8, 0.0], "radius": 0.2 }], "d": 0.2 } } ] }"#,
    );
    let o = run(&["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().any(|l| l.ends_with(",geometry_invalid")), "{text}");
}

#[test]
fn solve_writes_probe_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let o = run(&["solve", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("x,y,u,ux,uy\n"));
}

#[test]
fn solve_without_section_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", "{}");
    assert_eq!(run(&["solve", "--config", &cfg]).status.code(), Some(2));
}
