use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mssp_core::metrics::vc;
use mssp_core::{brute_force_optima, canonical_form, DisplayedSolution, ProblemInstance, Solution};

fn mssp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mssp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = mssp(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn error_class(out: &Output) -> String {
    let line = String::from_utf8_lossy(&out.stderr);
    let v: serde_json::Value = serde_json::from_str(line.trim()).expect("stderr is JSON");
    v["error"]["class"].as_str().unwrap().to_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn solve_toy_matches_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "toy.json", r#"{"id": "toy", "bins": [15, 15], "items": [5, 10, 15]}"#);
    let out = ok(dir.path(), &["solve", "toy.json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["optimal_score"], 30);

    let toy = ProblemInstance::new("toy", vec![15, 15], vec![5, 10, 15]).unwrap();
    let oracle = brute_force_optima(&toy).unwrap();
    assert_eq!(oracle.optimal_score, 30);
    let mut keys: Vec<_> = v["solutions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| {
            let a: Vec<Option<usize>> = serde_json::from_value(a.clone()).unwrap();
            canonical_form(&toy, &Solution::from_assignment(&a, 2).unwrap()).unwrap()
        })
        .collect();
    keys.sort();
    assert_eq!(keys, oracle.keys(&toy));
}

#[test]
fn rank_puts_lower_visual_disorder_first() {
    let dir = tempfile::tempdir().unwrap();
    // same packing, two displays: only the item order differs
    let sorted = r#"{"id": "r", "bins": [30, 20], "items": [20, 10, 10, 5], "assignment": [0, 0, 1, null], "bin_order": [0, 1], "item_order": [0, 1, 2, 3]}"#;
    let shuffled = r#"{"id": "r", "bins": [30, 20], "items": [20, 10, 10, 5], "assignment": [0, 0, 1, null], "bin_order": [0, 1], "item_order": [3, 1, 0, 2]}"#;
    write(dir.path(), "pair.json", &format!("[{shuffled}, {sorted}]"));

    let problem = ProblemInstance::new("r", vec![30, 20], vec![20, 10, 10, 5]).unwrap();
    let packing = Solution::from_assignment(&[Some(0), Some(0), Some(1), None], 2).unwrap();
    let vc_sorted = vc(&problem, &DisplayedSolution::identity(packing.clone())).unwrap();
    let vc_shuffled =
        vc(&problem, &DisplayedSolution::new(packing, vec![0, 1], vec![3, 1, 0, 2]).unwrap()).unwrap();
    assert!(vc_sorted < vc_shuffled);

    let out = ok(dir.path(), &["rank", "pair.json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ranked = v.as_array().unwrap();
    assert_eq!(ranked.len(), 2);
    assert_eq!(ranked[0]["index"], 1);
    assert_eq!(ranked[1]["index"], 0);
    assert_eq!(ranked[0]["profile"]["hc"], ranked[1]["profile"]["hc"]);
    assert_eq!(ranked[0]["profile"]["cc"], ranked[1]["profile"]["cc"]);
}

#[test]
fn rank_is_a_permutation_of_its_input() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "toy.json", r#"{"id": "t", "bins": [40, 30, 30], "items": [30, 25, 20, 15, 10, 5, 5]}"#);
    let solved: serde_json::Value =
        serde_json::from_slice(&ok(dir.path(), &["solve", "toy.json"]).stdout).unwrap();
    let records: Vec<serde_json::Value> = solved["solutions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| serde_json::json!({"id": "t", "bins": [40, 30, 30], "items": [30, 25, 20, 15, 10, 5, 5], "assignment": a}))
        .collect();
    assert!(records.len() >= 2);
    write(dir.path(), "all.json", &serde_json::to_string(&records).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&ok(dir.path(), &["rank", "all.json"]).stdout).unwrap();
    let mut idx: Vec<u64> = v.as_array().unwrap().iter().map(|e| e["index"].as_u64().unwrap()).collect();
    idx.sort_unstable();
    assert_eq!(idx, (0..records.len() as u64).collect::<Vec<_>>());
}

const HEADER: &str = "participant_id,seed,trial_index,kind,stratum,problem_id,bins,items,left_assignment,left_bin_order,left_item_order,right_assignment,right_bin_order,right_item_order,pd,hc_left,cc_left,vc_left,dd_left,hc_right,cc_right,vc_right,dd_right";

#[test]
fn predict_with_no_difference_gives_baseline_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let row = "s001,1,5,catch,low,p1,20;30,10;10;20,0;0;1,0;1,0;1;2,0;0;1,0;1,0;1;2,0.8,0,0,0,0,0,0,0,0";
    write(dir.path(), "m.csv", &format!("{HEADER}\n{row}\n"));
    let out = ok(dir.path(), &["predict", "m.csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let values: Vec<&str> = lines.next().unwrap().split(',').collect();
    let get = |name: &str| -> f64 {
        values[header.iter().position(|h| *h == name).unwrap()].parse().unwrap()
    };
    let expected = [0.147, 0.387, 0.350, 0.116];
    let names = ["p_definitely_left", "p_slightly_left", "p_slightly_right", "p_definitely_right"];
    for (n, e) in names.iter().zip(expected) {
        assert!((get(n) - e).abs() < 1e-3, "{n}: {}", get(n));
    }
    assert!((get("log_rt") - 9.010).abs() < 1e-12);
}

#[test]
fn failures_have_classes_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let out = mssp(d, &["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_class(&out), "usage");

    let out = mssp(d, &["solve", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));

    let out = mssp(d, &["score", "missing.json", "--cc-params", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));

    write(d, "bad.json", r#"{"id": "b", "bins": [], "items": [5]}"#);
    let out = mssp(d, &["solve", "bad.json", "--out", "solved.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_class(&out), "validation");

    write(d, "big.json", r#"{"id": "g", "bins": [50, 40, 30, 20], "items": [35, 30, 25, 20, 15, 10, 5, 5]}"#);
    let out = mssp(d, &["solve", "big.json", "--node-budget", "3", "--out", "solved.json"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_class(&out), "budget");

    // nothing left behind by the failed runs
    let names: Vec<String> = fs::read_dir(d)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(!names.iter().any(|n| n.contains("solved")), "{names:?}");
}

fn pipeline(dir: &Path, sequential: bool) -> Vec<(String, Vec<u8>)> {
    let mut pre: Vec<&str> = Vec::new();
    if sequential {
        pre.push("--sequential");
    }
    let run = |args: &[&str]| {
        let mut all = pre.clone();
        all.extend_from_slice(args);
        ok(dir, &all);
    };
    run(&["gen-pool", "--iterations", "600", "--seed", "11", "--out", "pool.json"]);
    run(&["gen-trials", "pool.json", "--seed", "11", "--participants", "3", "--out", "manifest.csv", "--solve-out", "solve.json"]);
    run(&["simulate-log", "manifest.csv", "--seed", "11", "--out", "log.csv", "--participants-out", "people.csv"]);
    run(&["predict", "manifest.csv", "--out", "pred.csv"]);
    run(&["analyze", "log.csv", "--participants", "people.csv", "--out", "analysis.json"]);
    run(&["plot-data", "--out", "curves.csv"]);
    ["pool.json", "manifest.csv", "solve.json", "log.csv", "people.csv", "pred.csv", "analysis.json", "curves.csv"]
        .iter()
        .map(|n| (n.to_string(), fs::read(dir.join(n)).unwrap()))
        .collect()
}

#[test]
fn pipeline_is_byte_identical_across_reruns_and_thread_modes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let first = pipeline(a.path(), false);
    let second = pipeline(b.path(), false);
    let sequential = pipeline(c.path(), true);
    for ((name, x), ((_, y), (_, z))) in first.iter().zip(second.iter().zip(&sequential)) {
        assert!(!x.is_empty(), "{name} empty");
        assert!(x == y, "{name} differs between reruns");
        assert!(x == z, "{name} differs between thread modes");
    }
    let manifest = String::from_utf8(first[1].1.clone()).unwrap();
    assert_eq!(manifest.lines().count(), 1 + 3 * 25);
}

#[test]
fn calibration_failure_exits_with_class_five() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-pool", "--iterations", "600", "--seed", "2", "--out", "pool.json"]);
    ok(d, &["gen-trials", "pool.json", "--seed", "2", "--participants", "3", "--out", "manifest.csv"]);
    ok(d, &["simulate-log", "manifest.csv", "--seed", "2", "--out", "log.csv"]);
    // every answer in one category: the ordinal fit has nothing to separate
    let text = fs::read_to_string(d.join("log.csv")).unwrap();
    let flat: String = text
        .lines()
        .map(|l| {
            ["definitely_right", "slightly_left", "slightly_right"]
                .iter()
                .fold(l.to_owned(), |acc, c| acc.replace(&format!(",{c},"), ",definitely_left,"))
        })
        .collect::<Vec<_>>()
        .join("\n");
    write(d, "flat.csv", &flat);
    let out = mssp(d, &["calibrate-cc", "flat.csv", "--target", "logloss", "--out", "cal.json"]);
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(error_class(&out), "calibration");
    assert!(!d.join("cal.json").exists());
}
