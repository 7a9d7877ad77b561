use std::path::Path;
use std::process::{Command, Output};

use igprm_core::costnet::{Model, NetSpec};

fn igprm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_igprm"))
        .current_dir(dir)
        .args(args)
        .env_remove("IGPRM_TEST_KEY")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = igprm(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    igprm(dir, args).status.code().unwrap()
}

fn small_dataset(dir: &Path) {
    ok(dir, &["--seed", "4", "build-dataset", "--out", "ds", "--train", "1", "--val", "1", "--test", "2"]);
}

#[test]
fn dataset_plan_eval_render_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_dataset(d);
    let stdout = ok(d, &["plan", "--dataset", "ds", "--instance", "2", "--oracle", "--nodes", "80", "--out", "p.json"]);
    assert!(stdout.starts_with("path:") || stdout.starts_with("no path"));

    let plan: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("p.json")).unwrap()).unwrap();
    assert_eq!(plan["roadmap"]["nodes"].as_array().unwrap().len(), 82);
    assert_eq!(plan["roadmap"]["params"]["n_nodes"], 80);

    let eval: serde_json::Value =
        serde_json::from_str(&ok(d, &["eval", "--dataset", "ds", "--instance", "2", "--plan", "p.json"])).unwrap();
    assert!(eval["spl_term"].as_f64().unwrap() >= 0.0);

    ok(d, &["render", "--dataset", "ds", "--instance", "2", "--plan", "p.json", "--out", "fig.svg"]);
    let svg = std::fs::read_to_string(d.join("fig.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("id=\"roadmap\""));
}

#[test]
fn bench_ablate_and_learned_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_dataset(d);
    Model::random(NetSpec::new(16).unwrap(), 2).save(d.join("w16.igpw")).unwrap();

    ok(d, &["bench", "--dataset", "ds", "--weights", "w16.igpw", "--nodes", "50", "--out", "b"]);
    let rows = std::fs::read_to_string(d.join("b/rows.csv")).unwrap();
    // header + 2 test instances x 3 methods
    assert_eq!(rows.lines().count(), 1 + 2 * 3);
    assert!(rows.contains("igprm_learned"));
    assert!(d.join("b/aggregates.csv").is_file());

    ok(d, &["ablate", "--dataset", "ds", "--weights", "16=w16.igpw", "--out", "abl.csv"]);
    let abl = std::fs::read_to_string(d.join("abl.csv")).unwrap();
    assert_eq!(abl.lines().count(), 1 + 2);

    ok(d, &["predict", "--weights", "w16.igpw", "--dataset", "ds", "--instance", "2", "--out", "cost.pgm"]);
    assert!(std::fs::read(d.join("cost.pgm")).unwrap().starts_with(b"P5"));
    ok(d, &["plan", "--dataset", "ds", "--instance", "2", "--cost", "cost.pgm", "--out", "l.json"]);

    let rt: serde_json::Value = serde_json::from_str(&ok(
        d,
        &["runtime", "--dataset", "ds", "--weights", "w16.igpw", "--repeats", "1"],
    ))
    .unwrap();
    assert_eq!(rt["repeats"], 1);
}

#[test]
fn generators_and_offline_embedding() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["--seed", "9", "gen-synth", "--out", "w"]);
    let world: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("w/world.json")).unwrap()).unwrap();
    assert_eq!(world["seed"], 9);
    ok(d, &["plan", "--map", "w/map.pgm", "--start", "32,2", "--goal", "32,61", "--out", "q.json"]);

    ok(d, &["gen-instructions", "--kind", "indoor", "--out", "s.jsonl"]);
    assert_eq!(std::fs::read_to_string(d.join("s.jsonl")).unwrap().lines().count(), 90);
    let first = ok(d, &["embed", "--input", "s.jsonl", "--cache", "c.jsonl", "--offline"]);
    assert!(first.contains("90 newly embedded"), "{first}");
    let second = ok(d, &["embed", "--input", "s.jsonl", "--cache", "c.jsonl", "--offline"]);
    assert!(second.contains("0 newly embedded"), "{second}");
}

#[test]
fn config_file_sets_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["gen-synth", "--out", "w"]);
    std::fs::write(d.join("cfg.json"), r#"{"planner": {"n_nodes": 33, "k_neighbors": 4}}"#).unwrap();
    ok(d, &["--config", "cfg.json", "plan", "--map", "w/map.pgm", "--start", "32,2", "--goal", "32,61", "--out", "q.json"]);
    let plan: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("q.json")).unwrap()).unwrap();
    assert_eq!(plan["roadmap"]["nodes"].as_array().unwrap().len(), 35);
    assert_eq!(plan["roadmap"]["params"]["k_neighbors"], 4);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    // argument errors
    assert_eq!(code(d, &["plan"]), 2);
    assert_eq!(code(d, &["embed", "--input", "x", "--cache", "y"]), 2);
    assert_eq!(code(d, &["plan", "--map", "m.pgm", "--start", "1;1", "--goal", "2,2", "--out", "o"]), 2);
    // i/o errors
    assert_eq!(code(d, &["plan", "--map", "missing.pgm", "--start", "1,1", "--goal", "2,2", "--out", "o"]), 3);
    assert_eq!(code(d, &["--config", "missing.json", "gen-synth", "--out", "w"]), 3);
    assert_eq!(code(d, &["eval", "--dataset", "nowhere", "--instance", "0", "--plan", "p.json"]), 3);
    // validation errors
    std::fs::write(d.join("bad.json"), r#"{"planner": {"epsilon": 0.1}, "bogus": 1}"#).unwrap();
    assert_eq!(code(d, &["--config", "bad.json", "gen-synth", "--out", "w"]), 2);
    std::fs::write(d.join("neg.json"), r#"{"planner": {"epsilon": -1.0}}"#).unwrap();
    ok(d, &["gen-synth", "--out", "w"]);
    assert_eq!(
        code(d, &["--config", "neg.json", "plan", "--map", "w/map.pgm", "--start", "32,2", "--goal", "32,61", "--out", "o"]),
        2
    );
    // the credential variable is unset
    std::fs::write(d.join("s.jsonl"), "{\"text\": \"go\"}\n").unwrap();
    let args = [
        "embed", "--input", "s.jsonl", "--cache", "c.jsonl", "--endpoint", "http://127.0.0.1:9/v1", "--credential-env",
        "IGPRM_TEST_KEY",
    ];
    assert_eq!(code(d, &args), 2);
}
