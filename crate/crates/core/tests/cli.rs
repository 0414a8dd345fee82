use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dupembed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dupembed"))
        .args(args)
        .env_remove("DUPEMBED_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn stats_on_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let o = dupembed(&["stats", "--in", p(&empty)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "documents=0\nsentences=0\ntokens=0\ndistinct_types=0\n");
}

#[test]
fn rho_zero_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.txt");
    fs::write(&corpus, "").unwrap();
    let out = dir.path().join("d.txt");
    let o = dupembed(&["duplicate", "--in", p(&corpus), "--rho", "0", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("--rho"), "{err}");
    assert!(err.contains("Usage: dupembed duplicate"), "{err}");
    assert!(!out.exists());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = dupembed(&["stats", "--in", "x", "--colour"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--colour"));
}

#[test]
fn missing_input_is_a_runtime_error() {
    let o = dupembed(&["stats", "--in", "/nonexistent/corpus.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/corpus.txt"));
}

#[test]
fn ingest_duplicate_train_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text = "Kali atl tepetl. Atl xochitl kali!\n\nTepetl kali atl; xochitl tepetl.\n";
    fs::write(d.join("a.txt"), text.repeat(20)).unwrap();
    fs::write(d.join("b.txt"), "Siwatl tlakatl kali. Kali siwatl atl.\n".repeat(20)).unwrap();
    let corpus = d.join("corpus.txt");
    let o = dupembed(&["ingest", "--in", p(&d.join("a.txt")), p(&d.join("b.txt")), "--out", p(&corpus)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("documents=2"));

    let dup = d.join("dup.txt");
    let o = dupembed(&["duplicate", "--in", p(&corpus), "--rho", "3", "--out", p(&dup)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let base_tokens = stdout(&dupembed(&["stats", "--in", p(&corpus)]))
        .lines()
        .find_map(|l| l.strip_prefix("tokens=").map(|n| n.parse::<usize>().unwrap()))
        .unwrap();
    assert!(stdout(&dupembed(&["stats", "--in", p(&dup)])).contains(&format!("tokens={}\n", 3 * base_tokens)));

    let evalset = d.join("eval.json");
    fs::write(
        &evalset,
        r#"{"items":[{"reference":"kali atl","candidates":["atl kali","tepetl","xochitl","siwatl","unknownword"],"gold_rank":[1,2,3,4,5]}]}"#,
    )
    .unwrap();
    for algo in ["w2v", "ft", "glove"] {
        let vec = d.join(format!("{algo}.vec"));
        let o = Command::new(env!("CARGO_BIN_EXE_dupembed"))
            .args(["train", "--algo", algo, "--mode", "cbow", "--in", p(&dup), "--out", p(&vec)])
            .args(["--dim", "8", "--epochs", "2", "--buckets", "1000", "--table-size", "10000", "--seed", "3"])
            .env("DUPEMBED_WORKERS", "2")
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{algo}: {}", stderr(&o));
        let meta = fs::read_to_string(d.join(format!("{algo}.vec.meta"))).unwrap();
        assert!(meta.contains("workers=2"), "{meta}");
        assert!(meta.contains("seed=3"), "{meta}");
        assert!(meta.contains("duplication_factor=3"), "{meta}");

        let report = d.join(format!("{algo}.json"));
        let o = dupembed(&["eval", "--model", p(&vec), "--evalset", p(&evalset), "--report", p(&report)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("items=1"));
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(json["per_item_tau"].as_array().unwrap().len(), 1);
    }
}

#[test]
fn sweep_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let corpus = "#tokens=24 #sentences=4 #rho=1\nkali atl tepetl xochitl kali atl\natl kali xochitl tepetl atl kali\n\n\
                  siwatl tlakatl kali siwatl atl tlakatl\ntlakatl siwatl atl kali tlakatl siwatl\n";
    fs::write(d.join("corpus.txt"), corpus).unwrap();
    fs::write(
        d.join("eval.json"),
        r#"{"items":[{"reference":"kali atl","candidates":["atl","tepetl","siwatl","xochitl kali","tlakatl"],"gold_rank":[1,3,4,2,5]}]}"#,
    )
    .unwrap();
    fs::write(
        d.join("sweep.json"),
        r#"{"rho_grid":[1,2],"models":["W2Vsg","Glove"],"runs":2,"base_seed":9,
            "sgns":{"dim":6,"epochs":1,"min_count":1,"table_size":1000},
            "glove":{"dim":6,"epochs":3,"min_count":1},
            "corpus":"corpus.txt","evalset":"eval.json"}"#,
    )
    .unwrap();
    let out = d.join("out");
    let o = dupembed(&["sweep", "--config", p(&d.join("sweep.json")), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["summary_table.txt", "curve_data.csv", "runs.csv", "summary.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let curve = fs::read_to_string(out.join("curve_data.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("model,rho,tau_mean,tau_std"));
    assert_eq!(curve.lines().count(), 1 + 2 * 2);
    assert_eq!(fs::read_to_string(out.join("runs.csv")).unwrap().lines().count(), 1 + 2 * 2 * 2);

    let again = d.join("again");
    let o = dupembed(&["report", "--runs", p(&out.join("runs.csv")), "--out", p(&again)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["summary_table.txt", "curve_data.csv", "summary.json"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn help_shows_defaults() {
    let o = dupembed(&["train", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let help = stdout(&o);
    for needle in ["--window <WINDOW>", "[default: 5]", "[default: 0.001]", "[env: DUPEMBED_WORKERS=]"] {
        assert!(help.contains(needle), "{needle} missing:\n{help}");
    }
}
