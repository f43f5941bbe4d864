use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_simulrag"));
    c.env_remove("SIMULRAG_API_KEY").env_remove("RUST_LOG");
    c
}

fn core_asset(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/assets").join(rel)
}

fn pack() -> PathBuf {
    core_asset("fixtures/pack.jsonl")
}

fn first_question() -> (String, String) {
    let text = std::fs::read_to_string(core_asset("fixtures/eval_dataset.jsonl")).unwrap();
    let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    (v["id"].as_str().unwrap().to_string(), v["text"].as_str().unwrap().to_string())
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn ask(out: &Path) -> Output {
    let (id, q) = first_question();
    run(bin()
        .arg("--fixtures")
        .arg(pack())
        .args(["ask", "--domain", "climate", "--id", &id, "-q", &q, "--out"])
        .arg(out))
}

fn manifest_of(out: &Path) -> PathBuf {
    PathBuf::from(format!("{}.manifest.json", out.display()))
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(bin().arg("frobnicate"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_flag_value_is_a_usage_error() {
    let out = run(bin().args(["simulate", "--domain", "astrology", "--params", "{}"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ask_writes_result_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("answer.json");
    let status = ask(&out);
    assert!(status.status.success());
    let result: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert!(!result["final_answer"].as_str().unwrap().is_empty());
    assert!(result["audit"].as_array().unwrap().len() > 5);
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(manifest_of(&out)).unwrap()).unwrap();
    assert_eq!(manifest["command"], "ask");
    assert_eq!(manifest["backend"], "scripted:scripted");
    assert_eq!(manifest["config_digest"].as_str().unwrap().len(), 64);
    assert!(manifest["template_versions"]["claim_decompose"].is_string());
    assert!(manifest["handbook_versions"].as_object().unwrap().len() >= 2);
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("answer.json");
    assert!(ask(&out).status.success());
    let first = (std::fs::read(&out).unwrap(), std::fs::read(manifest_of(&out)).unwrap());
    assert!(ask(&out).status.success());
    let second = (std::fs::read(&out).unwrap(), std::fs::read(manifest_of(&out)).unwrap());
    assert_eq!(first, second);
}

#[test]
fn fixtures_override_an_http_config_without_network() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    let body = serde_json::json!({
        "m": 5,
        "centrality_metric": "closeness",
        "selection": {"strategy": "ue_sba", "budget": 0.25},
        "kappa": 0.3,
        "generation_mode": "simulrag",
        "seeds": {"answer_sampling": 0, "simulator": 0, "random_selector": 0},
        "backend": {"kind": "http", "model": "gpt-4o", "base_url": format!("http://{}/v1", listener.local_addr().unwrap()), "max_tokens": 1024},
        "concurrency_limit": 4
    });
    std::fs::write(&config, body.to_string()).unwrap();
    let (id, q) = first_question();
    let out = dir.path().join("a.json");
    let status = run(bin()
        .arg("--config")
        .arg(&config)
        .arg("--fixtures")
        .arg(pack())
        .args(["ask", "--domain", "climate", "--id", &id, "-q", &q, "--out"])
        .arg(&out));
    assert!(status.status.success());
    assert!(listener.accept().is_err(), "the http endpoint was contacted");
}

#[test]
fn scripted_config_without_fixtures_fails() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"m":5,"centrality_metric":"closeness","selection":{"strategy":"ue_sba","budget":0.25},"kappa":0.3,
            "generation_mode":"simulrag","seeds":{"answer_sampling":0,"simulator":0,"random_selector":0},
            "backend":{"kind":"scripted","model":"m","max_tokens":1024},"concurrency_limit":4}"#,
    )
    .unwrap();
    let out = run(bin().arg("--config").arg(&config).args(["ask", "--domain", "climate", "-q", "Will Oslo warm by 2050?"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_prints_context() {
    let out = run(bin().args([
        "simulate",
        "--domain",
        "climate",
        "--params",
        r#"{"location": "Jakarta", "year": 2065, "scenario": "ssp585", "delta_CO2": 26.3}"#,
    ]));
    assert!(out.status.success());
    let ctx: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(ctx["text"].as_str().unwrap().contains("Jakarta"));
    assert_eq!(ctx["sources"].as_array().unwrap().len(), 1);
}

#[test]
fn simulate_rejects_out_of_range_parameters() {
    let out = run(bin().args(["simulate", "--domain", "epidemiology", "--params", r#"{"R0": 9.0}"#]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_stats_reads_the_appendix_examples() {
    let out = run(bin().args(["bench", "stats", "--dataset"]).arg(core_asset("datasets/appendix_examples.jsonl")));
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    let climate = table.lines().find(|l| l.starts_with("climate")).unwrap();
    let cols: Vec<&str> = climate.split_whitespace().collect();
    assert_eq!(cols[1], "5");
    assert_eq!(cols[3], "4.0");
}

#[test]
fn bench_gen_replays_from_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.jsonl");
    let status = run(bin()
        .arg("--fixtures")
        .arg(pack())
        .args(["--seed", "21", "bench", "gen", "--domain", "climate", "-n", "10", "--out"])
        .arg(&out));
    assert!(status.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(!text.contains("{{"));
    assert!(manifest_of(&out).exists());
}

#[test]
fn bench_gen_needs_out() {
    let out = run(bin().arg("--fixtures").arg(pack()).args(["bench", "gen", "--domain", "climate", "-n", "1"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_writes_report_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eval");
    let status = run(bin()
        .arg("--fixtures")
        .arg(pack())
        .args(["eval", "--dataset"])
        .arg(core_asset("fixtures/eval_dataset.jsonl"))
        .args(["--methods", "ue_sba,random", "--budgets", "0.15,0.45", "--modes", "simulrag,no_rag", "--out"])
        .arg(&out));
    assert!(status.status.success());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["cells"].as_array().unwrap().len(), 4);
    assert_eq!(report["modes"].as_array().unwrap().len(), 2);
    for cell in report["cells"].as_array().unwrap() {
        assert!(cell["failures"].as_array().unwrap().is_empty(), "{cell}");
    }
    assert!(out.join("pr_curve_ue_sba_0.15.csv").exists());
    assert!(out.join("records.jsonl").exists());
}

#[test]
fn graph_lists_scores() {
    let (id, q) = first_question();
    let out = run(bin().arg("--fixtures").arg(pack()).args(["graph", "--domain", "climate", "--id", &id, "-q", &q]));
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.to_string().contains("scores"));
}
