use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qistring"))
        .args(args)
        .env_remove("QISTRING_BUDGET")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

#[test]
fn gen_prints_the_prefix() {
    let out = run(&["gen", "--string", "cyclic(w=01)", "--n", "6"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "010101\n");
    let out = run(&["gen", "--string", "growing_zeros", "--n", "5", "--from", "3"]);
    assert_eq!(stdout(&out), "00100\n");
}

#[test]
fn check_passes_the_forward_map() {
    let out = run(&["check", "--map", "catalog:e_b_forward", "--c", "2", "--n", "100000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["verdict"], "pass");
}

#[test]
fn check_fails_with_too_small_a_constant() {
    let out = run(&["check", "--map", "e_b_forward", "--c", "1", "--n", "100"]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["verdict"], "fail");
}

#[test]
fn check_accepts_the_two_constant_form() {
    let out = run(&["check", "--map", "e_b_backward", "--ab", "3/2,1", "--n", "1000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invariants_follow_the_check() {
    let out = run(&["invariants", "--map", "nondense_g", "--n", "5000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&[
        "invariants",
        "--map",
        "e_d_beta_to_alpha",
        "--c",
        "1",
        "--n",
        "2000",
        "--mode",
        "one-one",
    ]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["mode"], "window");
}

#[test]
fn permutation_search_exhausts() {
    let out = run(&[
        "search",
        "--source",
        "cyclic(w=001)",
        "--target",
        "cyclic(w=01)",
        "--c",
        "2",
        "--n",
        "200",
        "--mode",
        "permutation",
    ]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["outcome"], "exhausted_none");
}

#[test]
fn found_witness_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("w.csv");
    let csv = csv.to_str().unwrap();
    let out = run(&[
        "search",
        "--source",
        "cyclic(w=001)",
        "--target",
        "cyclic(w=01)",
        "--c",
        "2",
        "--n",
        "9",
        "--mode",
        "permutation",
        "--witness-out",
        csv,
    ]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["outcome"], "found");
    assert_eq!(r["witness"].as_array().unwrap().len(), 9);
    let out = run(&[
        "check",
        "--map",
        csv,
        "--source",
        "cyclic(w=001)",
        "--target",
        "cyclic(w=01)",
        "--c",
        "2",
        "--n",
        "9",
        "--mode",
        "permutation",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn csv_maps_need_both_strings() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    std::fs::write(&csv, "x,fx\n1,1\n2,2\n").unwrap();
    let out = run(&["check", "--map", csv.to_str().unwrap(), "--n", "2"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn search_budget_is_a_resource_error() {
    let out = run(&[
        "search",
        "--source",
        "cyclic(w=01)",
        "--target",
        "cyclic(w=001)",
        "--c",
        "2",
        "--n",
        "200",
        "--budget",
        "50",
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn min_c_reports_the_smallest_constant() {
    let out = run(&[
        "min-c",
        "--source",
        "cyclic(w=001)",
        "--target",
        "cyclic(w=01)",
        "--n",
        "30",
        "--c-max",
        "3",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["c"], 1);
    let out = run(&[
        "min-c",
        "--source",
        "cyclic(w=001)",
        "--target",
        "cyclic(w=01)",
        "--n",
        "22",
        "--c-max",
        "3",
        "--mode",
        "permutation",
    ]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["c"], Value::Null);
}

#[test]
fn catalog_lists_and_emits() {
    let out = run(&["catalog", "list"]);
    assert_eq!(code(&out), 0);
    let names: Vec<String> = json(&out)["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap().to_string())
        .collect();
    assert!(names.contains(&"e_b_forward".to_string()) && names.contains(&"compiled".to_string()));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    let out = run(&[
        "catalog",
        "emit",
        "e_b_backward",
        "--window",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "x,fx\n1,1\n2,3\n3,4\n");
}

#[test]
fn sep_builds_compiles_and_verifies() {
    let out = run(&["sep", "build", "--tree", "full", "--stages", "2"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    let stage2 = &r["stages"][1];
    assert_eq!(stage2["n"], 2);
    assert!(stage2["theta_len"].is_string(), "counts are decimal strings");

    let out = run(&[
        "sep", "compile", "--branch", "ones", "--stages", "4", "--format", "text",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).ends_with("1 5 21\n"), "{}", stdout(&out));

    let out = run(&[
        "sep",
        "verify",
        "--branch",
        "ones",
        "--stage",
        "3",
        "--sampled",
        "--samples",
        "500",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert_eq!(json(&out)["verdict"], "pass");
}

#[test]
fn sep_extract_reads_the_branch() {
    let out = run(&[
        "sep",
        "extract",
        "--map",
        "compiled(branch=alternating,tree=full)",
        "--c",
        "8",
        "--n0",
        "4",
        "--n1",
        "6",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["branch"], "101");
}

#[test]
fn sep_extract_failure_exits_two() {
    // A unit shift of theta into zeta splits every block, so no lead exists.
    // Stage 2 ends before position 1_700_000.
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("shift.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&csv).unwrap());
    writeln!(w, "x,fx").unwrap();
    for x in 1..=1_700_000u64 {
        writeln!(w, "{x},{}", x + 1).unwrap();
    }
    w.flush().unwrap();
    drop(w);
    let out = run(&[
        "sep",
        "extract",
        "--map",
        csv.to_str().unwrap(),
        "--c",
        "2",
        "--n0",
        "2",
        "--n1",
        "2",
    ]);
    assert_eq!(
        code(&out),
        2,
        "{}{}",
        stdout(&out),
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(json(&out)["branch"], Value::Null);

    // A table that stops before the join is a resource error instead.
    std::fs::write(&csv, "x,fx\n1,2\n").unwrap();
    let out = run(&[
        "sep",
        "extract",
        "--map",
        csv.to_str().unwrap(),
        "--c",
        "2",
        "--n0",
        "2",
        "--n1",
        "2",
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("map domain"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&["bogus"])), 1);
    assert_eq!(code(&run(&["gen", "--n", "3"])), 1);
    assert_eq!(code(&run(&["check", "--map", "nope", "--n", "3"])), 1);
    assert_eq!(code(&run(&["gen", "--string", "nope", "--n", "3"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for args in [
        &[
            "search", "--source", "constant", "--target", "constant", "--c", "1", "--n", "40",
        ][..],
        &[
            "sep",
            "verify",
            "--stage",
            "3",
            "--sampled",
            "--samples",
            "300",
            "--seed",
            "7",
        ][..],
        &["sep", "compile", "--branch", "alternating"][..],
    ] {
        let (a, b) = (run(args), run(args));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert!(!stdout(&a).contains("elapsed"));
    }
}
