use std::path::Path;
use std::process::{Command, Output};

fn lark(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lark")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_then_replay_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let scs = dir.path().join("scenarios");
    assert!(lark(&["gen-scenarios", "--count", "2", "--seed", "3", "--out", s(&scs)]).status.success());
    let scenario = std::fs::read_dir(&scs).unwrap().next().unwrap().unwrap().path();
    let trace = dir.path().join("t.jsonl");
    let out = lark(&["run", "--scenario", s(&scenario), "--variant", "lark-no-penalty", "--out", s(&trace)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = lark(&["replay", s(&trace)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains(" 0 mismatches"));

    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut g: serde_json::Value = serde_json::from_str(&lines[1]).unwrap();
    let e = g["efficiency"].as_f64().unwrap();
    g["efficiency"] = serde_json::json!(e * 2.0 + 1.0);
    lines[1] = g.to_string();
    std::fs::write(&trace, lines.join("\n") + "\n").unwrap();
    let out = lark(&["replay", s(&trace)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("efficiency"));
}

#[test]
fn unknown_flags_and_bad_input_fail() {
    assert_eq!(lark(&["run", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(lark(&["frobnicate"]).status.code(), Some(2));
    let out = lark(&["replay", "/nonexistent/trace.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn stats_and_report_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.csv");
    let mut csv = String::from("round,Lark Full,Other\n");
    for r in 0..12 {
        csv.push_str(&format!("r{r},{},{}\n", 40 + r % 3, 35 + r % 4));
    }
    std::fs::write(&scores, csv).unwrap();
    let out = lark(&["stats", "--scores", s(&scores)]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("comparator,delta_mean,d_z,w,p_raw,p_holm"));
    assert!(text.contains("\nOther,"));

    let overall = dir.path().join("overall.csv");
    std::fs::write(
        &overall,
        "system,rank,rank_lo,rank_hi,score,score_lo,score_hi,cost\nA,1.5,1.2,1.8,30.1,28.0,32.2,0.01\n",
    )
    .unwrap();
    let out = lark(&["report", "--overall-csv", s(&overall)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("1.50 [1.20, 1.80]"));
}

#[test]
fn judge_and_bench_write_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let scs = dir.path().join("scenarios");
    assert!(lark(&["gen-scenarios", "--count", "2", "--out", s(&scs)]).status.success());
    let config = dir.path().join("bench.toml");
    std::fs::write(&config, "[evolution]\ngenerations = 2\n").unwrap();
    let bench = dir.path().join("bench");
    let out = lark(&["bench", "--scenarios", s(&scs), "--config", s(&config), "--out", s(&bench)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Mean Score /50"));
    for f in ["scores.csv", "costs.csv", "reports/report.txt", "reports/report.json", "reports/efficiency.csv"] {
        assert!(bench.join(f).exists(), "{f}");
    }

    let scenario = std::fs::read_dir(&scs).unwrap().next().unwrap().unwrap().path();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    std::fs::write(&a, "Run a pilot-program with open-data and milestone-reviews.").unwrap();
    std::fs::write(&b, "Do something.").unwrap();
    let judged = dir.path().join("judged");
    let out = lark(&[
        "judge",
        "--scenario",
        s(&scenario),
        "--output",
        &format!("alpha={}", s(&a)),
        "--output",
        &format!("beta={}", s(&b)),
        "--out",
        s(&judged),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let payloads: String = std::fs::read_dir(judged.join("evaluations"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(".payloads.jsonl"))
        .map(|p| std::fs::read_to_string(p).unwrap())
        .collect();
    assert!(!payloads.is_empty());
    assert!(!payloads.contains("alpha") && !payloads.contains("beta"));
}

#[test]
fn gen_scenarios_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let read = |d: &Path| -> Vec<(String, String)> {
        let mut v: Vec<(String, String)> = std::fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().path())
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
            .collect();
        v.sort();
        v
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        assert!(lark(&["gen-scenarios", "--count", "30", "--seed", "7", "--out", s(out)]).status.success());
    }
    let (ra, rb) = (read(&a), read(&b));
    assert_eq!(ra.len(), 30);
    assert_eq!(ra, rb);
}
