use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use vrtraffic::dist::{Model, ModelFile};

fn vrtraffic(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vrtraffic"));
    cmd.args(args).env_remove("VRTRAFFIC_CONFIG").env_remove("RUST_LOG");
    cmd
}

fn run(args: &[&str]) -> Output {
    vrtraffic(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Ten frames 11 ms apart, three packets each, ACKed 4 ms after the
/// frame's last packet except frame 3.
fn acked_trace(dir: &Path) -> PathBuf {
    let mut text = String::from("ts_us,dir,src_port,dst_port,len\n");
    for i in 0..10u64 {
        let t = 1000 + i * 11_000;
        text += &format!("{t},D,9000,54321,1514\n{t},D,9000,54321,1514\n{},D,9000,54321,1000\n", t + 1500);
        if i != 3 {
            text += &format!("{},U,54321,9000,60\n", t + 5500);
        }
    }
    let path = dir.join("acked.csv");
    fs::write(&path, text).unwrap();
    path
}

fn generated(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec!["generate", "--preset", "beat-saber/normal/cloud", "--out", p(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

#[test]
fn analyze_reports_json_and_csv() {
    let dir = TempDir::new().unwrap();
    let trace = acked_trace(dir.path());
    let report: Value = serde_json::from_str(ok(&["analyze", p(&trace)]).trim()).unwrap();
    assert_eq!(report["frame_count"], 10);
    assert_eq!(report["avg_frame_size"], 4028.0);
    assert_eq!(report["frame_loss_rate"], 0.1);
    assert_eq!(report["avg_frame_latency"], 5.5);
    assert_eq!(report["avg_inter_arrival"], 11.0);

    let csv = ok(&["analyze", p(&trace), "--format", "csv", "--game", "bs", "--limit", "54"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("game,mode,limit,frame_count,"), "{}", lines[0]);
    assert!(lines[1].starts_with("bs,,54,10,"), "{}", lines[1]);
}

#[test]
fn threshold_flag_changes_the_partition() {
    let dir = TempDir::new().unwrap();
    let trace = acked_trace(dir.path());
    // the 1.5 ms second burst becomes its own frame below 1.5 ms
    let r: Value = serde_json::from_str(ok(&["analyze", p(&trace), "--delta-t-thr-ms", "1.5"]).trim()).unwrap();
    assert_eq!(r["frame_count"], 20);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&["analyze", p(&dir.path().join("missing.csv"))]), 2);

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "ts_us,dir,src_port,dst_port,len\n1,X,1,2,3\n").unwrap();
    let o = run(&["analyze", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert!(o.stdout.is_empty());

    let audio = dir.path().join("audio.csv");
    fs::write(&audio, "ts_us,dir,src_port,dst_port,len\n1,D,1,2,100\n2,D,1,2,100\n").unwrap();
    assert_eq!(code(&["analyze", p(&audio)]), 3);

    assert_eq!(code(&["analyze", p(&bad), "--delta-t-thr-ms", "-1"]), 2);
    assert_eq!(code(&["no-such-command"]), 2);
}

#[test]
fn fit_recovers_the_generating_size_model() {
    let dir = TempDir::new().unwrap();
    let trace = generated(dir.path(), "g.csv", &["--duration", "60", "--seed", "4"]);
    let frames = dir.path().join("frames.jsonl");
    ok(&["analyze", p(&trace), "--frames", p(&frames)]);
    let model = ModelFile::from_json(&ok(&["fit", p(&frames), "--dist", "loglogistic"])).unwrap();
    let Model::LogLogistic(d) = model.model else { panic!("{model:?}") };
    // the preset's size model
    assert!((d.mu - 10.94).abs() < 0.01 && (d.sigma - 0.13).abs() < 0.01, "{d:?}");
    assert!(model.r2.unwrap() > 0.9);

    let iat = ModelFile::from_json(&ok(&["fit", p(&trace), "--trace", "--dist", "burr", "--field", "iat"])).unwrap();
    assert!(matches!(iat.model, Model::Burr(_)));
}

#[test]
fn fit_rejects_constant_data() {
    let dir = TempDir::new().unwrap();
    let mut text = String::new();
    for i in 0..200u64 {
        text += &format!("{},D,9000,54321,1514\n", i * 11_000);
    }
    let trace = dir.path().join("flat.csv");
    fs::write(&trace, text).unwrap();
    assert_eq!(code(&["fit", p(&trace), "--trace", "--dist", "loglogistic"]), 3);
}

#[test]
fn generate_is_deterministic_and_about_ninety_hz() {
    let dir = TempDir::new().unwrap();
    let a = fs::read(generated(dir.path(), "a.csv", &["--seed", "9", "--duration", "5"])).unwrap();
    let b = fs::read(generated(dir.path(), "b.csv", &["--seed", "9", "--duration", "5"])).unwrap();
    let c = fs::read(generated(dir.path(), "c.csv", &["--seed", "10", "--duration", "5"])).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let r: Value = serde_json::from_str(ok(&["analyze", p(&dir.path().join("a.csv"))]).trim()).unwrap();
    let frames = r["frame_count"].as_u64().unwrap();
    assert!((400..=500).contains(&frames), "{frames} frames in 5 s");
    assert!(ok(&["generate", "--list-presets"]).lines().count() == 16);
    assert_eq!(code(&["generate", "--preset", "nope"]), 2);
}

#[test]
fn simulate_default_sweep_degrades_monotonically() {
    let dir = TempDir::new().unwrap();
    let trace = generated(dir.path(), "g.csv", &["--duration", "20"]);
    let csv = ok(&["simulate", p(&trace), "--format", "csv"]);
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(csv.lines().next(), Some("capacity,loss_rate,avg_latency_ms"));
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), [54.0, 40.5, 27.0]);
    for w in rows.windows(2) {
        assert!(w[1][1] >= w[0][1] && w[1][2] >= w[0][2], "{csv}");
    }
    assert!(rows[2][1] > 0.1, "{csv}");

    let traces = dir.path().join("sim");
    ok(&["simulate", p(&trace), "--capacity-mbps", "1000", "--emit-traces", p(&traces)]);
    let emitted = traces.join("g.1000mbps.csv");
    let r: Value = serde_json::from_str(ok(&["analyze", p(&emitted)]).trim()).unwrap();
    assert_eq!(r["frame_loss_rate"], 0.0);
}

#[test]
fn report_tables() {
    let dir = TempDir::new().unwrap();
    let trace = acked_trace(dir.path());
    let mut reports = Vec::new();
    for (game, limit) in ["bs", "home"].into_iter().flat_map(|g| ["27", "normal", "40.5", "54"].map(|l| (g, l))) {
        let out = dir.path().join(format!("{game}-{limit}.json"));
        ok(&["analyze", p(&trace), "--game", game, "--mode", "cloud", "--limit", limit, "--out", p(&out)]);
        reports.push(out);
    }
    let single = ok(&["report", p(&reports[0])]);
    let rows = |md: &str| md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| limit")).count();
    assert_eq!(single.matches("### ").count(), 5);
    assert_eq!(rows(&single), 5);

    let args: Vec<&str> = ["report"].into_iter().chain(reports.iter().map(|r| p(r))).collect();
    let md = ok(&args);
    assert_eq!(rows(&md), 5 * 4, "{md}");
    assert!(md.contains("| limit | bs cloud | home cloud |"), "{md}");
    let normal = md.lines().find(|l| l.starts_with("| normal")).unwrap();
    assert_eq!(normal, "| normal | 4028 | 4028 |");
    let order: Vec<&str> = md.lines().skip_while(|l| !l.starts_with("| normal")).take(4).map(|l| l.split(' ').nth(1).unwrap()).collect();
    assert_eq!(order, ["normal", "54", "40.5", "27"]);

    let empty = dir.path().join("empty.json");
    fs::write(&empty, "").unwrap();
    assert_eq!(code(&["report", p(&empty)]), 2);
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = TempDir::new().unwrap();
    let trace = acked_trace(dir.path());
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "[analyzer]\ndelta_t_thr_ms = 1.5\n").unwrap();
    let frames = |extra: &[&str]| -> u64 {
        let mut args = vec!["analyze", p(&trace)];
        args.extend_from_slice(extra);
        let o = vrtraffic(&args).env("VRTRAFFIC_CONFIG", &cfg).output().unwrap();
        assert!(o.status.success());
        serde_json::from_str::<Value>(stdout(&o).trim()).unwrap()["frame_count"].as_u64().unwrap()
    };
    assert_eq!(frames(&[]), 20);
    assert_eq!(frames(&["--delta-t-thr-ms", "3"]), 10);
    assert!(ok(&["analyze", p(&trace)]).contains("\"frame_count\":10"));

    fs::write(&cfg, "[analyzer]\nbogus = 1\n").unwrap();
    let o = vrtraffic(&["analyze", p(&trace)]).env("VRTRAFFIC_CONFIG", &cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_dir_with_parallel_workers() {
    let dir = TempDir::new().unwrap();
    let inputs: Vec<PathBuf> = (0..6).map(|s| generated(dir.path(), &format!("t{s}.csv"), &["--seed", &s.to_string(), "--duration", "2"])).collect();
    let out = dir.path().join("out");
    let mut args = vec!["analyze", "--out-dir", p(&out), "--frames", "-j", "3"];
    args.extend(inputs.iter().map(|i| p(i)));
    ok(&args);
    for (s, input) in inputs.iter().enumerate() {
        let report = fs::read_to_string(out.join(format!("t{s}.report.json"))).unwrap();
        let single = ok(&["analyze", p(input)]);
        assert_eq!(report, single);
        assert!(out.join(format!("t{s}.frames.jsonl")).is_file());
    }

    let sweeps = dir.path().join("sweeps");
    let mut args = vec!["simulate", "--out-dir", p(&sweeps), "--capacity-mbps", "54"];
    args.extend(inputs.iter().map(|i| p(i)));
    ok(&args);
    assert_eq!(fs::read_dir(&sweeps).unwrap().count(), 6);
    let mut args = vec!["simulate"];
    args.extend(inputs.iter().map(|i| p(i)));
    assert_eq!(code(&args), 2);
}

#[test]
fn logs_stay_off_stdout() {
    let dir = TempDir::new().unwrap();
    let trace = acked_trace(dir.path());
    let o = run(&["-vv", "analyze", p(&trace)]);
    assert!(o.status.success());
    assert!(serde_json::from_str::<Value>(stdout(&o).trim()).is_ok());
    assert!(!o.stderr.is_empty());
    for sub in ["analyze", "fit", "generate", "simulate", "report"] {
        assert!(ok(&[sub, "--help"]).contains("Usage"));
    }
}
