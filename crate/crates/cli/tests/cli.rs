use std::fs;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bayes-assess"))
}

fn ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "{:?} failed: {}",
        cmd,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Fixture {
            dir: tempfile::tempdir().unwrap(),
        };
        ok(bin().args(["synth", "--classes", "5", "--low", "0.5", "--high", "0.95", "--n", "2000", "--seed", "3", "--out"]).arg(f.path("pool.jsonl")));
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, name: &str, cfg: Value) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, cfg.to_string()).unwrap();
        p
    }

    fn run(&self, config: &Path, out: &str, extra: &[&str]) -> PathBuf {
        let traj = self.path(out);
        ok(bin()
            .arg("run")
            .arg("--config")
            .arg(config)
            .arg("--pool")
            .arg(self.path("pool.jsonl"))
            .arg("--out")
            .arg(&traj)
            .args(extra));
        traj
    }
}

fn identify(strategy: &str) -> Value {
    json!({
        "task": "identify-accuracy",
        "strategy": {"kind": strategy},
        "budget": 150,
        "seed": 9,
        "runs": 4,
        "n_samples": 500
    })
}

#[test]
fn synth_then_ingest_round_trips() {
    let f = Fixture::new();
    let pool = fs::read_to_string(f.path("pool.jsonl")).unwrap();
    assert_eq!(pool.lines().count(), 2000);
    ok(bin().arg("ingest").arg("--input").arg(f.path("pool.jsonl")).arg("--out").arg(f.path("again.jsonl")));
    assert_eq!(pool, fs::read_to_string(f.path("again.jsonl")).unwrap());

    // CSV input: id, scores, label.
    fs::write(f.path("p.csv"), "id,score_0,score_1,label\na,0.2,0.8,1\nb,0.6,0.4,1\n").unwrap();
    ok(bin().arg("ingest").arg("--input").arg(f.path("p.csv")).arg("--out").arg(f.path("p.jsonl")));
    assert_eq!(fs::read_to_string(f.path("p.jsonl")).unwrap().lines().count(), 2);

    fs::write(f.path("bad.jsonl"), "{\"id\":\"a\",\"scores\":[0.3,0.3]}\n").unwrap();
    let out = bin().arg("ingest").arg("--input").arg(f.path("bad.jsonl")).arg("--out").arg(f.path("x.jsonl")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sum"));
}

#[test]
fn run_is_reproducible_and_flags_override_the_config() {
    let f = Fixture::new();
    let cfg = f.config("ts.json", identify("thompson"));
    let a = f.run(&cfg, "a.jsonl", &[]);
    let b = f.run(&cfg, "b.jsonl", &["--jobs", "1"]);
    let a_text = fs::read_to_string(&a).unwrap();
    assert_eq!(a_text, fs::read_to_string(&b).unwrap());

    let ends: Vec<Value> = a_text
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|v| v.get("end").is_some())
        .collect();
    assert_eq!(ends.len(), 4);
    let side: Value = serde_json::from_str(&fs::read_to_string(f.path("a.jsonl.config.json")).unwrap()).unwrap();
    assert_eq!(side["seed"], 9);
    for (r, end) in ends.iter().enumerate() {
        assert_eq!(end["run"], r);
        assert_eq!(end["seed"], 9 + r as u64);
        assert_eq!(end["steps"], 150);
        assert_eq!(end["config"].as_str().unwrap().len(), 64);
    }

    let c = f.run(&cfg, "c.jsonl", &["--seed", "10", "--runs", "1", "--budget", "20", "--strategy", "random"]);
    let side: Value = serde_json::from_str(&fs::read_to_string(f.path("c.jsonl.config.json")).unwrap()).unwrap();
    assert_eq!(side["seed"], 10);
    assert_eq!(side["runs"], 1);
    assert_eq!(side["budget"], 20);
    assert_eq!(side["strategy"]["kind"], "random");
    assert_eq!(fs::read_to_string(c).unwrap().lines().count(), 21);
}

#[test]
fn open_budget_with_stop_ends_on_the_stopping_rule() {
    let f = Fixture::new();
    let mut cfg = identify("thompson");
    cfg["budget"] = json!("until-stopped");
    let cfg = f.config("open.json", cfg);
    let traj = f.run(&cfg, "open.jsonl", &["--stop", "--runs", "2"]);
    let text = fs::read_to_string(traj).unwrap();
    let ends: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|v| v.get("end").is_some())
        .collect();
    assert_eq!(ends.len(), 2);
    for e in ends {
        assert_eq!(e["end"], "stopped");
        assert!(e["steps"].as_u64().unwrap() < 2000);
    }
}

#[test]
fn eval_compares_methods() {
    let f = Fixture::new();
    let mut trajs = Vec::new();
    for s in ["thompson", "random"] {
        let mut cfg = identify(s);
        cfg["budget"] = json!(400);
        cfg["runs"] = json!(6);
        let c = f.config(&format!("{s}.json"), cfg);
        trajs.push(f.run(&c, &format!("{s}.jsonl"), &[]));
    }
    let out = ok(bin()
        .arg("eval")
        .arg("--truth-from")
        .arg(f.path("pool.jsonl"))
        .arg("--traj")
        .arg(&trajs[0])
        .arg("--traj")
        .arg(&trajs[1]));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    for m in ["thompson", "random"] {
        let metrics = &report["methods"][m];
        assert_eq!(metrics["labels"]["n_runs"], 6);
        assert!(metrics["final_mrr"]["mean"].as_f64().unwrap() > 0.0);
        assert_eq!(report["config_digests"][m].as_str().unwrap().len(), 64);
    }
    assert_eq!(report["truth"]["thompson"]["top"], json!([0]));
    let sig = &report["methods"]["thompson"]["final_mrr"]["significant_vs"]["random"];
    assert!(sig["p_value"].as_f64().is_some());
    assert!(report["methods"]["random"]["final_mrr"].get("significant_vs").is_none());

    // Digest mismatch between trajectory and config is refused.
    let out = bin()
        .arg("eval")
        .arg("--truth-from")
        .arg(f.path("pool.jsonl"))
        .arg("--traj")
        .arg(&trajs[0])
        .arg("--config")
        .arg(f.path("random.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("produced by config"));
}

#[test]
fn eval_of_estimation_reports_rmse() {
    let f = Fixture::new();
    let cfg = f.config(
        "est.json",
        json!({"task": "estimate-accuracy", "strategy": {"kind": "variance-greedy"}, "budget": 300, "runs": 2, "seed": 1}),
    );
    let traj = f.run(&cfg, "est.jsonl", &[]);
    let out_path = f.path("eval.json");
    ok(bin().arg("eval").arg("--truth-from").arg(f.path("pool.jsonl")).arg("--traj").arg(&traj).arg("--out").arg(&out_path));
    let report: Value = serde_json::from_str(&fs::read_to_string(out_path).unwrap()).unwrap();
    let rmse = report["methods"]["variance-greedy"]["rmse"]["mean"].as_f64().unwrap();
    assert!(rmse > 0.0 && rmse < 10.0, "{rmse}");
}

#[test]
fn report_is_deterministic_and_writes_plot_data() {
    let f = Fixture::new();
    let mut cfg = identify("thompson");
    cfg["runs"] = json!(2);
    cfg["partition"] = json!({"kind": "score-bin", "num_bins": 5});
    let c = f.config("bins.json", cfg);
    let traj = f.run(&c, "bins.jsonl", &[]);
    let report = |out: &str, run: &str| {
        ok(bin()
            .arg("report")
            .arg("--pool")
            .arg(f.path("pool.jsonl"))
            .arg("--traj")
            .arg(&traj)
            .args(["--run", run])
            .arg("--out")
            .arg(f.path(out))
            .arg("--plots")
            .arg(f.path("plots")));
        fs::read(f.path(out)).unwrap()
    };
    let first = report("r1.json", "1");
    assert_eq!(first, report("r2.json", "1"));
    assert_ne!(first, report("r0.json", "0"));
    let parsed: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(parsed["labels"], 150);
    assert_eq!(parsed["arms"].as_array().unwrap().len(), 5);
    for file in ["summaries.csv", "ranking.csv", "reliability.json"] {
        assert!(f.path("plots").join(file).is_file(), "{file}");
    }
    let csv = fs::read_to_string(f.path("plots").join("summaries.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn missing_config_exits_two_with_usage() {
    let f = Fixture::new();
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg(f.path("nope.json"))
        .arg("--pool")
        .arg(f.path("pool.jsonl"))
        .arg("--out")
        .arg(f.path("t.jsonl"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not found") && err.contains("Usage"), "{err}");

    let out = bin().args(["run", "--pool", "p.jsonl", "--out", "t.jsonl"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));

    let out = bin().args(["run", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let bad = f.config("bad.json", json!({"task": "identify-accuracy", "budget": 5, "strategy": {"kind": "multiple-play-thompson", "m": 9}}));
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg(bad)
        .arg("--pool")
        .arg(f.path("pool.jsonl"))
        .arg("--out")
        .arg(f.path("t.jsonl"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn http(port: u16, method: &str, path: &str, body: &str) -> Option<(u16, Value)> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    s.set_read_timeout(Some(Duration::from_secs(10))).ok()?;
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .ok()?;
    let mut raw = String::new();
    s.read_to_string(&mut raw).ok()?;
    let status = raw.split_whitespace().nth(1)?.parse().ok()?;
    let payload = raw.split("\r\n\r\n").nth(1).unwrap_or("");
    Some((status, serde_json::from_str(payload).unwrap_or(Value::Null)))
}

#[test]
fn serve_runs_a_labeling_session() {
    let f = Fixture::new();
    let cfg = f.config("serve.json", json!({"task": "identify-accuracy", "budget": 3, "seed": 2, "n_samples": 200}));
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let _server = Server(
        bin()
            .arg("serve")
            .args(["--port", &port.to_string()])
            .arg("--pool")
            .arg(f.path("pool.jsonl"))
            .arg("--config")
            .arg(cfg)
            .stderr(Stdio::null())
            .spawn()
            .unwrap(),
    );
    let start = Instant::now();
    let (status, created) = loop {
        if let Some(r) = http(port, "POST", "/sessions", "") {
            break r;
        }
        assert!(start.elapsed() < Duration::from_secs(20), "server did not start");
        std::thread::sleep(Duration::from_millis(50));
    };
    assert_eq!(status, 201);
    let id = created["id"].as_str().unwrap();
    let mut labeled = 0;
    loop {
        let (status, q) = http(port, "GET", &format!("/sessions/{id}/next"), "").unwrap();
        if status == 410 {
            assert_eq!(q["reason"], "budget");
            break;
        }
        let body = json!({"id": q["id"], "outcome": 1}).to_string();
        let (status, _) = http(port, "POST", &format!("/sessions/{id}/label"), &body).unwrap();
        assert_eq!(status, 200);
        labeled += 1;
    }
    assert_eq!(labeled, 3);
    let (status, state) = http(port, "GET", &format!("/sessions/{id}/state"), "").unwrap();
    assert_eq!(status, 200);
    assert_eq!(state["steps"], 3);
}
