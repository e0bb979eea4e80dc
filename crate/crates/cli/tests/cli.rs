use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use ccscope_core::storage::read_recording;
use futures_util::StreamExt;
use tokio_tungstenite::tungstenite::client::IntoClientRequest;
use tokio_tungstenite::tungstenite::Message;

fn ccscope() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ccscope"));
    c.env_remove("CCSCOPE_CTL").env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    ccscope().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn interrupt(child: &Child) {
    let status = Command::new("kill")
        .args(["-INT", &child.id().to_string()])
        .status()
        .unwrap();
    assert!(status.success());
}

fn wait_with_timeout(mut child: Child, limit: Duration) -> std::process::ExitStatus {
    let deadline = Instant::now() + limit;
    loop {
        if let Some(status) = child.try_wait().unwrap() {
            return status;
        }
        if Instant::now() > deadline {
            let _ = child.kill();
            panic!("process did not exit within {limit:?}");
        }
        std::thread::sleep(Duration::from_millis(20));
    }
}

#[test]
fn list_groups_events_under_their_sensor() {
    let o = run(&["list", "--sensors", "numachip"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "NumaConnect2 (present, 6 sources, rate 200000000)"
    );
    let events: Vec<&str> = lines.take_while(|l| l.starts_with("  ")).collect();
    assert_eq!(events.len(), 71);
    assert!(events[0].trim_start().starts_with("n2Cycles"));
    assert!(text.contains("imbalanced-stack"));
}

#[test]
fn list_reports_absent_sensors() {
    let o = run(&[
        "list",
        "--sensors",
        "numachip,vmstat",
        "--vmstat-path",
        "/nonexistent/vmstat",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let numachip = text.find("NumaConnect2 (present").unwrap();
    let vmstat = text.find("vmstat (not present").unwrap();
    assert!(numachip < vmstat);
}

#[test]
fn stat_prints_columns_that_parse_back() {
    let o = run(&[
        "stat",
        "--sensors",
        "numachip",
        "--scenario",
        "balanced",
        "--events",
        "n2DirPrbRecv,n2CachelinesSent,n2CacheRolloutRmpe",
        "--interval",
        "10ms",
        "--samples",
        "4",
        "--no-fifo",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n2DirPrbRecv n2CachelinesSent n2CacheRolloutRmpe");
    assert_eq!(lines.len(), 5);
    for line in &lines[1..] {
        assert!(line.len() <= lines[0].len());
        let tokens: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(tokens.len(), 3, "{line:?}");
        assert!(tokens.iter().all(|t| *t == "-" || t.parse::<i64>().is_ok()), "{line:?}");
    }
}

#[test]
fn stat_repeats_the_header() {
    let o = run(&[
        "stat",
        "--sensors",
        "numachip",
        "--events",
        "n2Cycles",
        "--interval",
        "1",
        "--samples",
        "26",
        "--no-fifo",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.trim() == "n2Cycles").count(), 2);
    assert_eq!(text.lines().count(), 28);
}

#[test]
fn stat_reads_a_vmstat_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vmstat");
    std::fs::write(&path, "pgpgin 100\npgpgout 200\n").unwrap();
    let o = run(&[
        "stat",
        "--sensors",
        "vmstat",
        "--vmstat-path",
        path.to_str().unwrap(),
        "--events",
        "pgpgin,pgpgout",
        "--interval",
        "5",
        "--samples",
        "2",
        "--no-fifo",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split_whitespace().collect()).collect();
    // The file never changes, so every rate is zero.
    assert_eq!(rows, vec![vec!["0", "0"]; 2]);
}

#[test]
fn usage_errors_exit_with_one() {
    let o = run(&[
        "stat",
        "--sensors",
        "numachip",
        "--events",
        "n2CachelinesSnt",
        "--no-fifo",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("n2CachelinesSent"), "{}", stderr(&o));

    for args in [
        &["stat", "--interval", "0"][..],
        &["stat", "--interval", "fast"],
        &["stat", "--scenario", "no-such-scenario"],
        &["stat", "--sensors", "nonsense"],
        &["frobnicate"],
        &["stat", "--mnemonic", "--verbose-headings"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("missing").join("x.json");
    let o = run(&[
        "record",
        bad.to_str().unwrap(),
        "--sensors",
        "numachip",
        "--all",
        "--no-fifo",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).matches(bad.to_str().unwrap()).count(), 1, "{}", stderr(&o));

    let pipe = dir.path().join("missing").join("ctl");
    let o = run(&[
        "stat",
        "--sensors",
        "numachip",
        "--all",
        "--fifo",
        pipe.to_str().unwrap(),
        "--samples",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn record_writes_a_readable_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let o = run(&[
        "record",
        path.to_str().unwrap(),
        "--sensors",
        "numachip",
        "--all",
        "--discrete",
        "--interval",
        "5",
        "--samples",
        "6",
        "--no-fifo",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("6 frames captured, 6 written"), "{}", stderr(&o));
    let r = read_recording(&path).unwrap();
    assert_eq!(r.frames.len(), 6);
    assert_eq!(r.header.headings.len(), 71 * 6);
    assert_eq!(r.header.headings[0], "n2Cycles@0");
    assert!(r.header.discrete);
    assert_eq!(r.header.initial_interval, 5);
}

fn send(path: &Path, line: &str) {
    let mut pipe = std::fs::OpenOptions::new().write(true).open(path).unwrap();
    pipe.write_all(line.as_bytes()).unwrap();
}

#[test]
fn control_pipe_drives_a_recording_session() {
    let dir = tempfile::tempdir().unwrap();
    let (first, second, ctl) = (
        dir.path().join("a.json"),
        dir.path().join("b.json"),
        dir.path().join("ctl"),
    );
    let child = ccscope()
        .args([
            "record",
            first.to_str().unwrap(),
            "--sensors",
            "numachip",
            "--events",
            "n2Cycles",
        ])
        .args(["--interval", "10", "--fifo", ctl.to_str().unwrap()])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(10);
    while !ctl.exists() {
        assert!(Instant::now() < deadline, "control pipe never appeared");
        std::thread::sleep(Duration::from_millis(20));
    }
    std::thread::sleep(Duration::from_millis(100));
    send(&ctl, "label warm\n");
    std::thread::sleep(Duration::from_millis(100));
    send(&ctl, "pause\n");
    std::thread::sleep(Duration::from_millis(200));
    send(&ctl, "resume\ninterval 20ms\n");
    std::thread::sleep(Duration::from_millis(200));
    send(&ctl, &format!("record {}\n", second.display()));
    std::thread::sleep(Duration::from_millis(200));
    interrupt(&child);
    let status = wait_with_timeout(child, Duration::from_secs(10));
    assert!(status.success());

    let a = read_recording(&first).unwrap();
    let b = read_recording(&second).unwrap();
    let labels: Vec<_> = a.frames.iter().filter_map(|f| f.label.as_deref()).collect();
    assert_eq!(labels, ["warm"]);
    let gaps: Vec<u64> = a
        .frames
        .windows(2)
        .map(|w| w[1].timestamp_ms - w[0].timestamp_ms)
        .collect();
    assert!(gaps.iter().any(|&g| g >= 150), "no pause gap in {gaps:?}");
    assert_eq!(b.header.initial_interval, 20);
    assert!(!b.frames.is_empty());
    assert!(a.frames.last().unwrap().timestamp_ms <= b.frames[0].timestamp_ms);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn live_serves_hello_and_batches() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = ccscope()
        .args([
            "live",
            "--listen",
            "127.0.0.1:0",
            "--sensors",
            "numachip",
            "--all",
            "--interval",
            "50",
            "--no-fifo",
        ])
        .arg("--recordings-dir")
        .arg(dir.path())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let banner = lines
        .find_map(|l| l.ok().filter(|l| l.starts_with("live view at ")))
        .unwrap();
    let addr = banner
        .trim_start_matches("live view at http://")
        .trim_end_matches('/')
        .to_owned();

    let mut request = format!("ws://{addr}/ws").into_client_request().unwrap();
    request
        .headers_mut()
        .insert("Sec-WebSocket-Protocol", "ccscope.v1".parse().unwrap());
    let (mut ws, _) = tokio_tungstenite::connect_async(request).await.unwrap();
    let mut kinds = Vec::new();
    while kinds.len() < 3 {
        let Some(Ok(Message::Text(text))) = tokio::time::timeout(Duration::from_secs(5), ws.next()).await.unwrap()
        else {
            continue;
        };
        let msg: serde_json::Value = serde_json::from_str(&text).unwrap();
        if kinds.is_empty() {
            assert_eq!(msg["headings"].as_array().unwrap().len(), 71);
            assert_eq!(msg["interval"], 50);
        }
        kinds.push(msg["type"].as_str().unwrap().to_owned());
    }
    assert_eq!(kinds, ["hello", "batch", "batch"]);

    interrupt(&child);
    let status = tokio::task::spawn_blocking(move || wait_with_timeout(child, Duration::from_secs(10)))
        .await
        .unwrap();
    assert!(status.success());
}
