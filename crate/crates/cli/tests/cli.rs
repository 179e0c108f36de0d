use std::path::Path;
use std::process::{Command, Output};

use pillowcase_core::curves::{Component, ImmersedCurve};
use pillowcase_core::pillowcase::Side;
use pillowcase_core::variety::fold_locus;
use pillowcase_core::words::Variant;

fn pillowcase(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pillowcase"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("PILLOWCASE_OUT")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn trace_reports_genus_five_and_three() {
    for variant in ["earring", "bypass"] {
        let dir = tempfile::tempdir().unwrap();
        let out = pillowcase(dir.path(), &["trace", "--variant", variant, "--s", "0.05", "--json"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let report = json(&out);
        assert_eq!(report["genus"], 5);
        assert_eq!(report["quotient_genus"], 3);
        assert_eq!(report["fold_circles"], 4);
        for f in ["fibers.csv", "folds.csv", "topology.json", "folds.svg"] {
            assert!(dir.path().join(f).exists(), "{f} missing");
        }
        let header = std::fs::read_to_string(dir.path().join("fibers.csv")).unwrap();
        assert!(header.starts_with("gamma,theta,status,region,roots"));
    }
}

#[test]
fn trace_at_zero_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let out = pillowcase(dir.path(), &["trace", "--s", "0", "--grid", "24", "--json"]);
    assert!(out.status.success());
    let report = json(&out);
    assert_eq!(report["degenerate"], true);
    assert_eq!(report["fold_circles"], 0);
}

#[test]
fn compose_beta_writes_a_figure_eight() {
    let dir = tempfile::tempdir().unwrap();
    let out = pillowcase(dir.path(), &["compose", "beta", "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&out);
    assert_eq!(summary["components"], 1);
    assert_eq!(summary["invariants"]["components"][0]["double_points"], 1);
    let svg = std::fs::read_to_string(dir.path().join("beta-composed.svg")).unwrap();
    assert!(svg.contains("<svg") && svg.contains("<desc>composed</desc>"));
    let curve =
        ImmersedCurve::from_json(&std::fs::read_to_string(dir.path().join("beta-composed.json")).unwrap()).unwrap();
    assert_eq!(curve.side, Side::P1);
}

#[test]
fn compose_vertical_circle_gives_two_components() {
    let dir = tempfile::tempdir().unwrap();
    let out = pillowcase(dir.path(), &["compose", "b-ver", "--variant", "bypass", "--json"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["components"], 2);
}

#[test]
fn compose_reads_curve_files_and_pulls_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = pillowcase(dir.path(), &["curve", "slope-two", "--second"]);
    assert!(out.status.success());
    let file = dir.path().join("slope-two.json");
    let out = pillowcase(dir.path(), &["compose", file.to_str().unwrap(), "--pull-back", "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["direction"], "pull_back");
    // a second-pillowcase curve cannot be pushed forward
    let out = pillowcase(dir.path(), &["compose", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tangential_curve_is_refused() {
    let s = 0.05;
    let folds = fold_locus(Variant::Earring, s).unwrap();
    let reach = |p: &[f64; 2]| p[0].sin().asin();
    let lift = folds[0].image_lift();
    let far = lift.iter().max_by(|a, b| reach(a).total_cmp(&reach(b))).copied().unwrap();
    let gamma = reach(&far) - 1e-6;
    let curve = ImmersedCurve::new(
        Side::P0,
        vec![Component::circle(
            (0..=720).map(|k| [gamma, far[1] + std::f64::consts::TAU * k as f64 / 720.0]).collect(),
        )],
    );
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("grazing.json");
    std::fs::write(&file, curve.to_json().unwrap()).unwrap();
    let out = pillowcase(dir.path(), &["compose", file.to_str().unwrap(), "--variant", "earring"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tangent"));
}

#[test]
fn torus_knot_counts_nine_both_ways() {
    for variant in ["earring", "bypass"] {
        for s in ["0.05", "0.025"] {
            let dir = tempfile::tempdir().unwrap();
            let out = pillowcase(dir.path(), &["torus-knot", "--variant", variant, "--s", s, "--json"]);
            assert!(out.status.success());
            let r = json(&out);
            assert_eq!(r["forward"], 9, "{variant} {s}");
            assert_eq!(r["backward"], 9, "{variant} {s}");
        }
    }
}

#[test]
fn verify_all_passes_and_catches_faults() {
    let dir = tempfile::tempdir().unwrap();
    let out = pillowcase(dir.path(), &["verify-all", "--samples", "30", "--grid", "32", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out).as_array().unwrap().len(), 2);
    let out = pillowcase(
        dir.path(),
        &["verify-all", "--variant", "bypass", "--samples", "10", "--grid", "24", "--g-fault", "1e-3"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn runs_are_byte_stable() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        assert!(pillowcase(dir.path(), &["compose", "slope-one", "--variant", "bypass"]).status.success());
        assert!(pillowcase(dir.path(), &["trace", "--grid", "16"]).status.success());
    }
    for f in ["slope-one-composed.svg", "slope-one-composed.json", "slope-one-composed.csv", "fibers.csv", "folds.csv"]
    {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn environment_overrides_out() {
    let (flag, env) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let out = Command::new(env!("CARGO_BIN_EXE_pillowcase"))
        .args(["curve", "beta", "--out"])
        .arg(flag.path())
        .env("PILLOWCASE_OUT", env.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(env.path().join("beta.json").exists());
    assert!(!flag.path().join("beta.json").exists());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pillowcase(dir.path(), &["trace", "--variant", "trefoil"]).status.code(), Some(2));
    assert_eq!(pillowcase(dir.path(), &["compose", "no-such-curve"]).status.code(), Some(2));
    assert_eq!(pillowcase(dir.path(), &["intersect", "beta"]).status.code(), Some(2));
}

#[test]
fn intersect_counts_crossings() {
    let dir = tempfile::tempdir().unwrap();
    let out = pillowcase(dir.path(), &["intersect", "b-ver", "slope-two", "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // single interior point [π/2, π]
    assert_eq!(json(&out)["count"], 1);
}
