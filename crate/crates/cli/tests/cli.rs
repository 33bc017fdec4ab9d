use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn uniset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uniset")).args(args).output().expect("binary runs")
}

fn uniset_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uniset"))
        .args(args)
        .env("THREADS", threads)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn enumerate_counts_match_formula() {
    let out = uniset(&["enumerate", "--c", "3", "--k", "3", "--count-only"]);
    assert!(out.status.success());
    assert_eq!(json_of(&out)["count"], "280");
}

#[test]
fn search_json_and_csv_agree() {
    let args = ["search", "--c", "2", "--k", "4", "--t", "1"];
    let json = json_of(&uniset(&args));
    assert_eq!(json["value"], "225");
    assert_eq!(json["certified"], true);
    let mut csv_args = vec!["--format", "csv"];
    csv_args.extend(args);
    let out = uniset(&csv_args);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().unwrap();
    let optima = json["optima"].as_array().unwrap();
    assert_eq!(rows.len(), optima.len());
    for (row, opt) in rows.iter().zip(optima) {
        assert_eq!(&row[0], "225");
        let f: Vec<String> = opt["F"].as_array().unwrap().iter().map(|v| v.to_string()).collect();
        assert_eq!(row[1], f.join(" "));
        assert_eq!(&row[3], opt["class"].as_str().unwrap());
    }
}

#[test]
fn inequality_csv_has_one_row_per_point() {
    let base = ["verify-inequalities", "--lemma", "all", "--c-range", "3-5", "--t-range", "1-2"];
    let json = json_of(&uniset(&base));
    let mut csv_args = vec!["--format", "csv"];
    csv_args.extend(base);
    let out = uniset(&csv_args);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["lemma", "c", "k", "t", "s", "holds", "lhs", "rhs", "margin", "exploratory", "equality"]
    );
    assert_eq!(reader.records().count() as u64, json["points"].as_u64().unwrap());
}

#[test]
fn output_is_identical_across_thread_counts() {
    let args = ["search", "--c", "3", "--k", "3", "--t", "1", "--objective", "sum", "--method", "bnb"];
    let one = uniset_env(&args, "1");
    let four = uniset_env(&args, "4");
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let again = uniset_env(&args, "4");
    assert_eq!(four.stdout, again.stdout);
}

#[test]
fn timing_fields_only_on_request() {
    let args = ["search", "--c", "2", "--k", "3", "--t", "1"];
    let plain = json_of(&uniset(&args));
    assert!(plain.get("runtime_ms").is_none() && plain.get("nodes").is_none());
    let mut timed_args = vec!["--timing"];
    timed_args.extend(args);
    let timed = json_of(&uniset(&timed_args));
    assert!(timed["runtime_ms"].is_u64());
    assert!(timed["nodes"].is_u64());
}

#[test]
fn exit_codes() {
    let ok = uniset(&["verify-theorem", "--id", "T5.4"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json_of(&ok)["reports"][0]["verdict"], "confirmed");

    // Outside the hypotheses: reported, but not a confirmation.
    let exploratory = uniset(&["verify-theorem", "--id", "T1.1", "--c", "2", "--k", "3", "--t", "1"]);
    assert_eq!(exploratory.status.code(), Some(1));
    assert_eq!(json_of(&exploratory)["reports"][0]["verdict"], "exploratory");

    let bad_args = uniset(&["count-formula", "theta", "--c", "3", "--k", "3", "--z", "0"]);
    assert_eq!(bad_args.status.code(), Some(2));
    assert!(!bad_args.stderr.is_empty());

    let too_big = uniset(&["search", "--c", "3", "--k", "5", "--t", "1"]);
    assert_eq!(too_big.status.code(), Some(2));

    let unknown = uniset(&["verify-theorem", "--id", "T9.9"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn corrupt_cache_is_rebuilt_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let built = uniset(&["--cache-dir", d, "cache", "build", "--c", "2", "--k", "4"]);
    assert_eq!(json_of(&built)["status"], "written");
    let path = json_of(&built)["path"].as_str().unwrap().to_string();

    let loaded = uniset(&["--cache-dir", d, "cache", "build", "--c", "2", "--k", "4"]);
    assert_eq!(json_of(&loaded)["status"], "loaded");

    fs::write(&path, "{\"truncated\": ").unwrap();
    let verify = uniset(&["--cache-dir", d, "cache", "verify", "--c", "2", "--k", "4"]);
    assert_eq!(verify.status.code(), Some(2));

    let rebuilt = uniset(&["--cache-dir", d, "cache", "build", "--c", "2", "--k", "4"]);
    assert!(rebuilt.status.success());
    assert_eq!(json_of(&rebuilt)["status"], "rebuilt");
    assert!(String::from_utf8_lossy(&rebuilt.stderr).contains("warning"));
    assert_eq!(json_of(&rebuilt)["count"], "105");

    let verify = uniset(&["--cache-dir", d, "cache", "verify", "--c", "2", "--k", "4"]);
    assert!(verify.status.success());

    // A search that loads through the cache sees the same universe.
    let searched = uniset(&["--cache-dir", d, "search", "--c", "2", "--k", "4", "--t", "1"]);
    assert_eq!(json_of(&searched)["value"], "225");
}

#[test]
fn cache_requires_a_directory() {
    let out = uniset(&["cache", "path", "--c", "2", "--k", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn construct_from_inline_spec() {
    let canonical = json_of(&uniset(&["construct", "--kind", "n2", "--c", "2", "--k", "4", "--t", "1"]));
    let spec = canonical["spec"].to_string();
    let out = uniset(&["construct", "--spec", &spec, "--emit", "members"]);
    assert!(out.status.success());
    let doc = json_of(&out);
    assert_eq!(doc["families"][0]["members"].as_array().unwrap().len(), 7);
    assert_eq!(canonical["cross_intersecting"]["holds"], true);
    assert_eq!(canonical["cross_intersecting"]["mode"], "exact");
}

#[test]
fn construct_large_parameters_are_sampled() {
    let out = uniset(&["construct", "--kind", "n1", "--c", "6", "--k", "5", "--t", "1", "--samples", "500"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json_of(&out);
    assert_eq!(doc["cross_intersecting"]["mode"], "sampled");
    assert_eq!(doc["families"][0]["size_source"], "formula");
}

#[test]
fn cover_structure_of_hilton_milner_family() {
    let spec = json_of(&uniset(&["construct", "--kind", "n2", "--c", "2", "--k", "4", "--t", "1"]))["spec"].to_string();
    let out = uniset(&["covers", "--family", &spec, "--report", "structure"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json_of(&out);
    assert_eq!(doc["covers"]["tau"], 2);
    assert!(doc["structure"].as_array().unwrap().iter().all(|s| s["holds"] == true));
}
