//! End-to-end command-line behavior: schemas, golden counts, exit codes
//! and byte-identical reruns.

use singres::run::{run, Outcome};

fn run_args(args: &[&str]) -> Outcome {
run(std::iter::once("singres").chain(args.iter().copied()))
}

#[test]
fn polyhedron_dump_matches_schema() {
    let out = run_args(&["polyhedron", "--poly", "x1^2 + x2^3"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["n"], 2);
    assert_eq!(v["normals"], serde_json::json!([[0, 1], [1, 0], [3, 2]]));
    assert_eq!(v["vertices"], serde_json::json!([[0, 3], [2, 0]]));
}

#[test]
fn orthant_polyhedron() {
    let out = run_args(&["polyhedron", "--poly", "x1", "--nvars", "2"]);
    assert_eq!(out.code, 0);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["normals"], serde_json::json!([[0, 1], [1, 0]]));
}

#[test]
fn fan_counts_for_cusp() {
    let out = run_args(&["fan", "--poly", "x1^2 + x2^3"]);
    assert_eq!(out.code, 0);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["cones"].as_array().unwrap().len(), 4);
    assert_eq!(v["chi"]["chi"], 1);
    assert_eq!(v["chi"]["chi_boundary"], 2);
    assert_eq!(v["pairs"].as_array().unwrap().len(), 3);
    for c in v["cones"].as_array().unwrap() {
        let m = c["matrix"].as_array().unwrap();
        assert_eq!(m.len(), 2);
    }
}

#[test]
fn resolve_cusp_exact() {
    let out = run_args(&["resolve", "--poly", "x1^2 + x2^3", "--mode", "exact"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["resolved"], true);
    assert_eq!(v["charts"], 4);
}

#[test]
fn byte_identical_reruns() {
    let a = run_args(&["resolve", "--poly", "x1^2 + x2^3"]);
    let b = run_args(&["resolve", "--poly", "x1^2 + x2^3"]);
    assert_eq!(a.stdout, b.stdout);
    let c = run_args(&["partition", "--poly", "x1^2 + x2^3", "--samples", "50"]);
    let d = run_args(&["partition", "--poly", "x1^2 + x2^3", "--samples", "50"]);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn partition_covers_everything() {
    let out = run_args(&["partition", "--poly", "x1^2 + x2^3", "--samples", "500"]);
    assert_eq!(out.code, 0);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["complete"], true);
    assert_eq!(v["covered"], 500);
}

#[test]
fn transform_partial_factorization() {
    let out = run_args(&[
        "transform",
        "--poly",
        "x1^2 + x2^3",
        "--matrix",
        "[[3,2],[2,1]]",
        "--i0",
        "1,2",
        "--vertex",
        "[0,3]",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["exceptional_exponents"], serde_json::json!([6, 3]));
    // partial transform 1 + y2
    let terms = v["partial"]["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 2);
}

#[test]
fn usage_errors_exit_2() {
    let out = run_args(&["resolve"]);
    assert_eq!(out.code, 2);
    let out = run_args(&["bogus"]);
    assert_eq!(out.code, 2);
}

#[test]
fn domain_errors_exit_1() {
    let out = run_args(&["polyhedron", "--poly", "x1^"]);
    assert_eq!(out.code, 1);
}

#[test]
fn check_suite_passes_on_cusp() {
    let out = run_args(&["check", "--poly", "x1^2 + x2^3"]);
    assert_eq!(out.code, 0, "{} {}", out.stdout, out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["pass"], true);
}

#[test]
fn dot_outputs_render() {
    let out = run_args(&["fan", "--poly", "x1^2 + x2^3", "--output", "dot"]);
    assert!(out.stdout.starts_with("graph section_dual"));
    let out = run_args(&["resolve", "--poly", "x1^2 + x2^3", "--output", "dot"]);
    assert!(out.stdout.starts_with("digraph resolution"));
}


#[test]
fn resolve_accepts_user_points() {
    let out = run_args(&[
        "resolve",
        "--poly",
        "x1^2 - x2^2 x3^2",
        "--point",
        "1,1",
        "--point",
        "-1,2",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["nodes"][0]["kind"], "problem");
}

#[test]
fn max_steps_env_fallback() {
    std::env::set_var("SINGRES_MAX_STEPS", "1");
    let out = run_args(&["resolve", "--poly", "x1^2 + x2^3"]);
    std::env::remove_var("SINGRES_MAX_STEPS");
    assert_eq!(out.code, 0);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["resolved"], false, "one step cannot finish the cusp");
    let capped = v["nodes"].as_array().unwrap().iter().any(|n| {
        n["status"] == "step-cap-exceeded"
    });
    assert!(capped);
}

#[test]
fn tree_json_carries_branch_points_and_forms() {
    let out = run_args(&["resolve", "--poly", "x1^2 + x2^3"]);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    let nodes = v["nodes"].as_array().unwrap();
    let localized: Vec<_> =
        nodes.iter().filter(|n| n["branch_point"].is_array()).collect();
    assert_eq!(localized.len(), 2, "two branch-point localizations for the cusp");
    for n in localized {
        let bp = n["branch_point"].as_array().unwrap();
        assert_eq!(bp[0][1], "-1");
    }
    assert!(nodes[0]["weierstrass"].is_object(), "root carries its prepared form");
}
