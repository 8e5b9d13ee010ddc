//! End-to-end runs of the `geoform` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn geoform(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoform"))
        .args(args)
        .current_dir(dir)
        .env_remove("GEOFORM_SOLVER")
        .env_remove("GEOFORM_SEED")
        .env_remove("GEOFORM_SAMPLES")
        .env_remove("GEOFORM_TOL")
        .env_remove("GEOFORM_MODEL")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

/// Identifiers directly followed by `(`, i.e. relation and function names.
fn applied_names(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let cs: Vec<char> = text.chars().collect();
    for i in 0..cs.len() {
        if cs[i] == '(' {
            let mut j = i;
            while j > 0 && (cs[j - 1].is_alphanumeric() || cs[j - 1] == '_') {
                j -= 1;
            }
            if j < i {
                out.push(cs[j..i].iter().collect());
            }
        }
    }
    out
}

#[test]
fn parse_prints_canonical_text() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "d1.geo", "forall a:P.\n  forall b:P. (0 <= d(a,b))\n");
    let o = geoform(dir.path(), &["parse", &f]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "forall a:P. forall b:P. 0 <= d(a,b)\n");
    // The printed text parses to itself.
    let again = write(dir.path(), "again.geo", &stdout(&o));
    assert_eq!(stdout(&geoform(dir.path(), &["parse", &again])), stdout(&o));
}

#[test]
fn parse_errors_exit_one_with_a_span() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.geo", "d(a,b");
    let o = geoform(dir.path(), &["parse", &f]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bad.geo:1:6: error"), "{}", stderr(&o));
    let f = write(dir.path(), "lang.geo", "forall a:P. B(a,a,a)");
    let o = geoform(dir.path(), &["parse", &f]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("E2"), "{}", stderr(&o));
    // The same atom is fine once the language says so.
    assert_eq!(code(&geoform(dir.path(), &["parse", &f, "--lang", "e2"])), 0);
}

#[test]
fn unreadable_file_is_an_environment_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = geoform(dir.path(), &["parse", "missing.geo"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn expand_right_angle_and_definition_free_input() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "r.geo", "Right(b,a,c)");
    let o = geoform(dir.path(), &["expand", &f]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        "~b == a & ~b == c & ~a == c & exists a1:P. Bet(b,a,a1) & d(a,b) = d(a,a1) & d(c,b) = d(c,a1)\n"
    );
    let o = geoform(dir.path(), &["expand", &f, "--full"]);
    assert!(stdout(&o).contains("d(b,a1) = d(b,a) + d(a,a1)"), "{}", stdout(&o));
    let plain = write(dir.path(), "p.geo", "forall a:P. forall b:P. d(a,b) = d(b,a)\n");
    assert_eq!(stdout(&geoform(dir.path(), &["expand", &plain, "--full"])), "forall a:P. forall b:P. d(a,b) = d(b,a)\n");
}

#[test]
fn expanded_segment_arithmetic_pythagoras_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let o = geoform(dir.path(), &["expand", "--item", "pythagoras-tarski", "--full"]);
    assert_eq!(code(&o), 0);
    let golden = include_str!("golden/pythagoras_tarski_full.geo");
    assert_eq!(stdout(&o), golden);
    let names = applied_names(golden.lines().last().unwrap());
    assert!(!names.is_empty());
    assert!(names.iter().all(|n| n == "B" || n == "D"), "{names:?}");
}

#[test]
fn translate_peephole_five_segments_and_angle_guard() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "eq.geo", "d(p,q) = d(u,v)");
    let o = geoform(dir.path(), &["translate", &f, "--to", "e2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "exists o_h:P. exists e_h:P. exists e':P. NonCollinear(o_h,e_h,e') & D(p,q,u,v)\n");
    let o = geoform(dir.path(), &["translate", &f, "--to", "e2", "--frame", "free"]);
    assert_eq!(stdout(&o), "NonCollinear(o_h,e_h,e') -> D(p,q,u,v)\n");

    // T5 in distance form equals the five-segment theorem with Bet unfolded.
    let t5 = geoform(dir.path(), &["translate", "--item", "T5", "--to", "ed"]);
    let fs = geoform(dir.path(), &["expand", "--item", "five-segments", "--full"]);
    let last = |o: &Output| stdout(o).lines().last().unwrap().to_string();
    assert_eq!(last(&t5), last(&fs));

    let a = write(dir.path(), "ang.geo", "forall p:P. forall v:P. ang(p,v,p) = 0");
    let o = geoform(dir.path(), &["translate", &a, "--to", "e2"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("angle term"), "{}", stderr(&o));
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn check_distance_axioms_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = geoform(dir.path(), &["check", "D1..D7", "--samples", "300"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let v = json(&o);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 7);
    for r in rows {
        assert_eq!(r["status"], "Pass", "{r}");
        assert_eq!(r["model"], "cartesian2");
        assert_eq!(r["samples"], 300);
    }
}

#[test]
fn check_similarity_in_the_disk_fails_as_expected() {
    let dir = tempfile::tempdir().unwrap();
    let o = geoform(dir.path(), &["check", "D5", "--model", "disk", "--samples", "300"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v[0]["status"], "Fail");
    assert_eq!(v[0]["expected"], "Fails");
    assert!(!v[0]["failures"].as_array().unwrap().is_empty());
    assert!(v[0]["failures"][0]["bindings"]["b1"].is_array());
}

#[test]
fn check_schema_is_unsupported_and_unknown_names_fail() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&geoform(dir.path(), &["check", "T11"]));
    assert_eq!(v[0]["status"], "Unsupported");
    assert_eq!(code(&geoform(dir.path(), &["check", "no-such-item"])), 1);
}

#[test]
fn check_items_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "mine.geo",
        "# name: sym\n# expect: cartesian2=Holds\nforall a:P. forall b:P. d(a,b) = d(b,a)\n---\n\
         # name: wrong\n# expect: cartesian2=Holds\nforall a:P. forall b:P. d(a,b) = 0\n",
    );
    let o = geoform(dir.path(), &["check", "--file", &f, "--samples", "50"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v[0]["match"], true);
    assert_eq!(v[1]["status"], "Fail");
    assert_eq!(v[1]["match"], false);
}

#[test]
fn reduce_emits_stable_text_and_needs_a_solver() {
    let dir = tempfile::tempdir().unwrap();
    let a = geoform(dir.path(), &["reduce", "--item", "pythagoras", "--emit"]);
    let b = geoform(dir.path(), &["reduce", "--item", "pythagoras", "--emit"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("(set-logic "));
    assert!(stdout(&a).ends_with("(check-sat)\n"));
    let o = geoform(dir.path(), &["reduce", "--item", "pythagoras", "--solve"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("SolverUnavailable"));
    let o = geoform(dir.path(), &["reduce", "--item", "D1", "--solve", "--solver", "/nonexistent/solver"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("SolverUnavailable"));
}

#[test]
fn verify_axioms_summary_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["verify-axioms", "--json", "--samples", "200"];
    let a = geoform(dir.path(), &args);
    assert_eq!(code(&a), 0, "{}", stdout(&a));
    let v = json(&a);
    assert_eq!(v["mismatches"], 0);
    assert!(v["rows"].as_array().unwrap().len() > 50);
    let b = geoform(dir.path(), &args);
    assert_eq!(a.stdout, b.stdout, "identical runs give identical bytes");

    let t = geoform(dir.path(), &["verify-axioms", "--samples", "200"]);
    assert!(stdout(&t).contains(" 0 mismatches"));
}

#[test]
fn verify_axioms_with_a_huge_tolerance_reports_mismatches() {
    let dir = tempfile::tempdir().unwrap();
    let o = geoform(dir.path(), &["verify-axioms", "--samples", "100", "--tol", "1e2"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains(" NO\n"));
}

#[test]
fn settings_precedence_flag_env_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "geoform.conf", "# test settings\nsamples = 17\nseed = 5\n");
    let run = |extra: &[&str], env: Option<(&str, &str)>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_geoform"));
        c.args(["check", "D3"]).args(extra).current_dir(dir.path()).env_remove("GEOFORM_SAMPLES");
        if let Some((k, v)) = env {
            c.env(k, v);
        }
        let v: Value = serde_json::from_slice(&c.output().unwrap().stdout).unwrap();
        (v[0]["samples"].as_u64().unwrap(), v[0]["seed"].as_u64().unwrap())
    };
    assert_eq!(run(&[], None), (17, 5));
    assert_eq!(run(&[], Some(("GEOFORM_SAMPLES", "23"))), (23, 5));
    assert_eq!(run(&["--samples", "29"], Some(("GEOFORM_SAMPLES", "23"))), (29, 5));

    write(dir.path(), "geoform.conf", "samples = lots\n");
    let o = geoform(dir.path(), &["check", "D3"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("geoform.conf"));
}

#[test]
fn out_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = geoform(dir.path(), &["reduce", "--item", "D2", "--emit", "--out", "d2.smt2"]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("d2.smt2")).unwrap();
    assert!(text.contains("(check-sat)"));
}
