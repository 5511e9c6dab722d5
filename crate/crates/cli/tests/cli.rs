use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_morphoarms"));
    cmd.env("RUST_LOG", "warn").env_remove("MORPHOARMS_PORT");
    cmd
}

fn repo(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(path)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn check_passes_on_defaults_and_shipped_config() {
    let out = run(&["check"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 7);
    assert!(text.lines().all(|l| l.starts_with("PASS ")), "{text}");

    let config = repo("configs/robot.json");
    assert_eq!(run(&["check", "--config", config.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn check_fails_on_a_bad_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let body = std::fs::read_to_string(repo("configs/robot.json")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&body).unwrap();
    doc["gait"]["sweep_limit"] = 0.9.into();
    let config = write(dir.path(), "robot.json", &doc.to_string());
    let out = run(&["check", "--config", &config]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reference_run_succeeds_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let metrics = dir.path().join("metrics.json");
    let events = dir.path().join("events.jsonl");
    let out = run(&[
        "run",
        "--scenario",
        repo("configs/scenario.json").to_str().unwrap(),
        "--script",
        repo("configs/script.json").to_str().unwrap(),
        "--config",
        repo("configs/robot.json").to_str().unwrap(),
        "--out",
        metrics.to_str().unwrap(),
        "--events",
        events.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["success"], true);
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(m["trials"], 1);
    let sum = ["walk_to_goal_time", "telemanipulation_time", "walk_to_start_time"]
        .iter()
        .map(|k| m[k].as_f64().unwrap())
        .sum::<f64>();
    assert_eq!(sum, m["total_time"].as_f64().unwrap());

    let log = morphoarms::scenario::read_event_log(std::io::BufReader::new(std::fs::File::open(&events).unwrap()))
        .unwrap();
    assert_eq!(morphoarms::scenario::segment_metrics(&log), serde_json::from_value(m).unwrap());
}

#[test]
fn incomplete_run_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let script = write(dir.path(), "script.json", r#"{"commands":["step_forward","cancel_rotation"]}"#);
    let scenario = repo("configs/scenario.json");
    let out = run(&["run", "--scenario", scenario.to_str().unwrap(), "--script", &script]);
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["success"], false);
    assert_eq!(report["metrics"]["total_time"], 4.0);
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = repo("configs/scenario.json");
    let scenario = scenario.to_str().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"commands":["moonwalk"]}"#);
    let empty = write(dir.path(), "empty.json", r#"{"commands":[]}"#);
    for args in [
        vec!["run", "--scenario", scenario, "--script", &bad],
        vec!["run", "--scenario", scenario, "--script", &empty],
        vec!["run", "--scenario", "/nonexistent/scenario.json", "--script", &bad],
        vec!["run", "--scenario", scenario],
        vec!["teleport"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn speed_paces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let script = write(dir.path(), "script.json", r#"{"commands":["step_forward"]}"#);
    let scenario = repo("configs/scenario.json");
    let started = Instant::now();
    let out = run(&["run", "--scenario", scenario.to_str().unwrap(), "--script", &script, "--speed", "20"]);
    assert_eq!(out.status.code(), Some(2));
    // One 4 s step at 20x real time.
    assert!(started.elapsed() >= Duration::from_millis(200));
    let out = run(&["run", "--scenario", scenario.to_str().unwrap(), "--script", &script, "--speed", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn export_gait_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let out = run(&["export-gait", "--out", csv.to_str().unwrap(), "step_forward", "rotate_left", "switch_mode"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), morphoarms::gait::CSV_HEADER.join(","));
    // 200 + 500 + 750 ticks plus the initial sample, four limbs each.
    assert_eq!(lines.count(), (1 + 200 + 500 + 750) * 4);

    let out = run(&["export-gait", "--out", csv.to_str().unwrap(), "gripper_open"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["export-gait", "--out", csv.to_str().unwrap(), "switch_mode", "step_forward"]);
    assert_eq!(out.status.code(), Some(1));
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn get(port: u16, path: &str) -> Option<String> {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(stream, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut body = String::new();
    stream.read_to_string(&mut body).ok()?;
    Some(body)
}

#[test]
fn serve_honours_the_port_variable() {
    let port = free_port();
    let mut child = bin()
        .args(["serve", "--port", "1", "--scenario"])
        .arg(repo("configs/scenario.json"))
        .env("MORPHOARMS_PORT", port.to_string())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let health = loop {
        if let Some(body) = get(port, "/healthz") {
            break body;
        }
        assert!(Instant::now() < deadline, "server did not come up");
        std::thread::sleep(Duration::from_millis(50));
    };
    let scenario = get(port, "/scenario").unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(health.starts_with("HTTP/1.1 200") && health.ends_with("ok"));
    assert!(scenario.contains("\"aperture_radius\":0.075"));
}
