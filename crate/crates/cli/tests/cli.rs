use std::process::{Command, Output};

fn sdisj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdisj")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn disjointness_report_envelope() {
    let out = sdisj(&["simulate-disjointness", "--k", "16", "--r", "1", "--trials", "50", "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "simulate-disjointness");
    assert_eq!(v["config"]["seed"], 9);
    assert_eq!(v["results"]["trials"], 50);
    assert_eq!(v["results"]["accounting_mismatches"], 0);
    assert_eq!(v["passed"], true);
}

#[test]
fn results_depend_only_on_config() {
    let args = ["simulate-disjointness", "--k", "32", "--r", "2", "--trials", "40", "--inputs", "intersecting"];
    let a = json(&sdisj(&args));
    let b = json(&sdisj(&[&args[..], &["--jobs", "1"]].concat()));
    assert_eq!(a["results"], b["results"]);
    assert_eq!(a["results"]["errors"], 0);
}

#[test]
fn conjecture_exit_codes() {
    let ok = sdisj(&["verify-conjecture", "--t", "3", "--n", "2", "--k", "2", "--M", "1", "--f", "counting"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["results"]["sets_checked"], 126);
    let found = sdisj(&["verify-conjecture", "--t", "3", "--n", "2", "--k", "2", "--M", "1", "--f", "log"]);
    assert_eq!(found.status.code(), Some(2));
    let v = json(&found);
    assert_eq!(v["results"]["verdict"], "counterexample");
    assert!(v["results"]["argmin_set"].is_array());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(sdisj(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(sdisj(&["simulate-disjointness"]).status.code(), Some(1));
    let bad_family = sdisj(&["verify-conjecture", "--t", "3", "--n", "2", "--k", "2", "--M", "1", "--f", "cubic"]);
    assert_eq!(bad_family.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_family.stderr).contains("cubic"));
    assert_eq!(sdisj(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_csv_columns() {
    let out = sdisj(&["sweep", "--ks", "16,64", "--rs", "1,2", "--trials", "10", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,r,total_bits,bits_over_k_logr_k,error_rate"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn suites_pass() {
    for args in [
        &["verify-downshift", "--t", "2", "--n", "2"][..],
        &["verify-list-lemma"],
        &["verify-isoperimetry", "--t", "3", "--n", "3", "--count", "20"],
    ] {
        let out = sdisj(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        assert_eq!(json(&out)["passed"], true, "{args:?}");
    }
}

#[test]
fn embedding_estimates_and_out_file() {
    let dir = std::env::temp_dir().join(format!("sdisj-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("empty.json");
    let out = sdisj(&["estimate-embedding-error", "--case", "empty", "--trials", "200", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["results"]["empty_events"], 0);
    assert_eq!(v["config"]["M"], 20);

    let preset = dir.join("preset.json");
    std::fs::write(&preset, r#"{"n": 100, "M": 20, "R": 1, "k": 80}"#).unwrap();
    let out = sdisj(&["estimate-embedding-error", "--case", "match0", "--trials", "300", "--preset", preset.to_str().unwrap()]);
    assert_eq!(json(&out)["config"]["n"], 100);

    std::fs::write(&preset, r#"{"n": 101, "M": 20, "R": 1, "k": 80}"#).unwrap();
    let bad = sdisj(&["estimate-embedding-error", "--case", "match0", "--preset", preset.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exists_equal_is_one_sided() {
    let out = sdisj(&["simulate-exists-equal", "--n", "16", "--r", "1", "--trials", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["results"]["one_sided_violations"], 0);
    assert_eq!(v["results"]["t"], 64);
}
