use std::fs;
use std::path::{Path, PathBuf};

use koalition_cli::run;
use serde_json::Value;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).to_str().unwrap().to_owned()
}

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["koalition"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn error_json(stderr: &str) -> Value {
    assert_eq!(stderr.lines().count(), 1, "errors are one line: {stderr:?}");
    serde_json::from_str(stderr).unwrap()
}

fn nowcast(extra: &[&str]) -> (i32, String, String) {
    let (polls, config) = (fixture("polls.csv"), fixture("config.toml"));
    let mut args = vec!["nowcast", "--polls", &polls, "--config", &config, "--as-of", "2021-09-20", "--draws", "5000"];
    args.extend_from_slice(extra);
    invoke(&args)
}

fn write_temp(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn nowcast_report_is_deterministic_and_sorted() {
    let (code, first, err) = nowcast(&["--seed", "42"]);
    assert_eq!(code, 0, "{err}");
    let (_, second, _) = nowcast(&["--seed", "42"]);
    assert_eq!(first, second);
    let report: Value = serde_json::from_str(&first).unwrap();
    for key in ["as_of", "seed", "m", "window_days", "diagnostics", "coalitions", "parties"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["m"], 5000);
    assert_eq!(report["seed"], 42);
    let keys: Vec<&String> = report.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    let text_keys: Vec<usize> = ["\"as_of\"", "\"coalitions\"", "\"command\""].iter().map(|k| first.find(k).unwrap()).collect();
    assert!(text_keys.windows(2).all(|w| w[0] < w[1]));
    let means: f64 = report["parties"].as_array().unwrap().iter().map(|p| p["mean"].as_f64().unwrap()).sum();
    assert!((means - 1.0).abs() < 1e-5);
}

#[test]
fn floats_have_at_most_six_decimals() {
    let (_, out, _) = nowcast(&[]);
    let report: Value = serde_json::from_str(&out).unwrap();
    fn walk(v: &Value) {
        match v {
            Value::Number(n) if n.is_f64() => {
                let x = n.as_f64().unwrap();
                assert_eq!((x * 1e6).round() / 1e6, x);
            }
            Value::Array(a) => a.iter().for_each(walk),
            Value::Object(o) => o.values().for_each(walk),
            _ => {}
        }
    }
    walk(&report);
}

#[test]
fn different_seeds_differ() {
    let (_, a, _) = nowcast(&["--seed", "1"]);
    let (_, b, _) = nowcast(&["--seed", "2"]);
    assert_ne!(a, b);
}

#[test]
fn missing_polls_is_a_usage_error() {
    let config = fixture("config.toml");
    let (code, out, err) = invoke(&["nowcast", "--config", &config, "--as-of", "2021-09-20"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    let e = error_json(&err);
    assert_eq!(e["error"], "usage");
    assert!(e["message"].as_str().unwrap().contains("--polls"));
    assert!(e["usage"].as_str().unwrap().contains("Usage"));
}

#[test]
fn unknown_subcommand_and_help() {
    assert_eq!(invoke(&["frobnicate"]).0, 1);
    let (code, out, _) = invoke(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("nowcast"));
}

#[test]
fn unknown_coalition_party_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("config.toml")).unwrap().replace("[\"CDU\", \"SPD\"]", "[\"CDU\", \"PIRATEN\"]");
    let config = write_temp(dir.path(), "c.toml", &text);
    let polls = fixture("polls.csv");
    let (code, _, err) = invoke(&["nowcast", "--polls", &polls, "--config", config.to_str().unwrap(), "--as-of", "2021-09-20"]);
    assert_eq!(code, 3);
    let e = error_json(&err);
    assert_eq!(e["error"], "config");
    let message = e["message"].as_str().unwrap();
    assert!(message.contains("grand") && message.contains("PIRATEN"), "{message}");
}

#[test]
fn unknown_coalition_flag_is_a_config_error() {
    let (polls, config) = (fixture("polls.csv"), fixture("config.toml"));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.svg");
    let (code, _, err) = invoke(&[
        "plot", "--figure", "density", "--coalition", "nope", "--polls", &polls, "--config", &config, "--as-of", "2021-09-20",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
    assert!(error_json(&err)["message"].as_str().unwrap().contains("nope"));
}

#[test]
fn bad_csv_is_a_data_error_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let polls = write_temp(dir.path(), "p.csv", "pollster,date,n,CDU,SPD,GRUENE,FDP,AFD,LINKE\nX,2021-09-01,1000,30,30,30,10,10,10\n");
    let config = fixture("config.toml");
    let (code, _, err) = invoke(&["nowcast", "--polls", polls.to_str().unwrap(), "--config", &config, "--as-of", "2021-09-20"]);
    assert_eq!(code, 2);
    let e = error_json(&err);
    assert_eq!(e["line"], 2);
    assert!(e["file"].as_str().unwrap().ends_with("p.csv"));
}

#[test]
fn no_polls_in_window_is_a_data_error() {
    let (code, _, err) = {
        let (polls, config) = (fixture("polls.csv"), fixture("config.toml"));
        invoke(&["nowcast", "--polls", &polls, "--config", &config, "--as-of", "2020-01-01"])
    };
    assert_eq!(code, 2);
    assert_eq!(error_json(&err)["error"], "no-polls");
}

#[test]
fn too_few_draws_is_a_usage_error() {
    let (code, _, err) = nowcast(&["--draws", "10"]);
    assert_eq!(code, 1);
    assert_eq!(error_json(&err)["error"], "usage");
}

#[test]
fn forecast_adds_horizon_and_widens_intervals() {
    let (polls, config) = (fixture("polls.csv"), fixture("config.toml"));
    let base = ["--polls", polls.as_str(), "--config", config.as_str(), "--as-of", "2021-09-20", "--draws", "5000"];
    let (_, now, _) = invoke(&[&["nowcast"], &base[..]].concat());
    let (code, fc, err) = invoke(&[&["forecast"], &base[..], &["--election-date", "2021-12-19"]].concat());
    assert_eq!(code, 0, "{err}");
    let (now, fc): (Value, Value) = (serde_json::from_str(&now).unwrap(), serde_json::from_str(&fc).unwrap());
    assert_eq!(fc["horizon_days"], 90);
    assert_eq!(fc["command"], "forecast");
    let width = |r: &Value, k: usize| {
        let ci = r["parties"][k]["ci95"].as_array().unwrap();
        ci[1].as_f64().unwrap() - ci[0].as_f64().unwrap()
    };
    for k in 0..7 {
        assert!(width(&fc, k) > width(&now, k));
    }
    let (code, _, _) = invoke(&[&["forecast"], &base[..], &["--election-date", "2021-09-01"]].concat());
    assert_eq!(code, 1);
}

#[test]
fn parliaments_lists_allocations() {
    let (polls, config) = (fixture("polls.csv"), fixture("config.toml"));
    let (code, out, err) = invoke(&["parliaments", "--k", "3", "--polls", &polls, "--config", &config, "--as-of", "2021-09-20"]);
    assert_eq!(code, 0, "{err}");
    let report: Value = serde_json::from_str(&out).unwrap();
    let allocs = report["allocations"].as_array().unwrap();
    assert_eq!(allocs.len(), 3);
    for a in allocs {
        let total: u64 = a["seats"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
        assert_eq!(total, 598);
    }
}

#[test]
fn plot_requires_out() {
    let (polls, config) = (fixture("polls.csv"), fixture("config.toml"));
    let (code, _, _) = invoke(&["plot", "--figure", "classic", "--polls", &polls, "--config", &config, "--as-of", "2021-09-20"]);
    assert_eq!(code, 1);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let (code, stdout, _) = nowcast(&["--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let report: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(report["command"], "nowcast");
}
