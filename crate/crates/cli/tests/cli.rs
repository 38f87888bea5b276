use std::path::Path;
use std::process::{Command, Output};

use flock_cli::ConfigFile;

const BIN: &str = env!("CARGO_BIN_EXE_flock");

fn flock(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&flock(&["--help"])), 0);
    assert_eq!(code(&flock(&["simulate", "--help"])), 0);
    assert_eq!(code(&flock(&["simulate", "--no-such-flag"])), 2);
    let out = flock(&["simulate", "--regime", "12"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("12"));
}

#[test]
fn bad_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[model]\nn_agent = 3\n").unwrap();
    assert_eq!(code(&flock(&["simulate", "--config", s(&cfg), "--out", s(dir.path())])), 2);
    assert_eq!(code(&flock(&["simulate", "--config", "/does/not/exist.toml"])), 2);
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let res = flock(&[
        "simulate", "--regime", "3", "--scenario", "line", "--seed", "42", "--n-agents", "20", "--steps", "300",
        "--states", "--out", s(&out),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let series = std::fs::read_to_string(out.join("series.csv")).unwrap();
    let mut lines = series.lines();
    assert_eq!(lines.next(), Some("t,q_dev,v_dev,u_bar,energy,max_vel_spread"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 6);
    // 17 significant digits: one before the point, sixteen after
    assert_eq!(row[1].split('e').next().unwrap().len(), "d.dddddddddddddddd".len());
    assert_eq!(series.lines().count(), 302);

    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["functionals"]["u_bar"].as_f64().unwrap() > 0.0);
    assert!(summary["verdict"]["level"].is_string());
    assert!(summary["runtime_seconds"].as_f64().is_some());

    let states = std::fs::read_to_string(out.join("states.csv")).unwrap();
    assert_eq!(states.lines().count(), 1 + 301 * 20);
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["files"].as_array().unwrap().iter().any(|f| f["file"] == "states.csv"));

    // the saved config reproduces the run
    let again = dir.path().join("again");
    let cfg = out.join("config.toml");
    assert_eq!(code(&flock(&["simulate", "--config", s(&cfg), "--out", s(&again)])), 0);
    assert_eq!(std::fs::read(out.join("series.csv")).unwrap(), std::fs::read(again.join("series.csv")).unwrap());
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for scenario in ["line", "circle", "mission"] {
        let out = flock(&["simulate", "--regime", "6", "--scenario", scenario, "--seed", "9", "--dump-config"]);
        assert_eq!(code(&out), 0);
        let text = String::from_utf8(out.stdout).unwrap();
        let parsed = ConfigFile::parse(&text).unwrap();
        let path = dir.path().join(format!("{scenario}.toml"));
        std::fs::write(&path, &text).unwrap();
        let again = flock(&["simulate", "--config", s(&path), "--dump-config"]);
        assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
        assert_eq!(parsed.run.seed, 9);
        assert_eq!(parsed.control.r0, 3.23);
    }
}

#[test]
fn divergence_exits_with_abort_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("wild.toml");
    std::fs::write(&cfg, "[model]\nn_agents = 5\n[control]\nalpha = 1e6\n[run]\ndt = 1.0\nn_steps = 1000\n").unwrap();
    let out = flock(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&out), 5);
    assert!(dir.path().join("o/series.csv").exists());
}

const SWEEP: &[&str] = &[
    "sweep", "--regime", "1", "--scenario", "line", "--n-agents", "8", "--steps", "400", "--alpha", "0.5:1:2", "--r0",
    "0:4:2", "--beta", "0.5:1:2", "--v0", "0:0.5:2",
];

#[test]
fn sweep_resumes_to_the_same_table() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full");
    let out = flock(&[SWEEP, &["--parallel", "2", "--out", s(&full)]].concat());
    assert_eq!(code(&out), 0);
    let table = std::fs::read_to_string(full.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 17);
    assert!(String::from_utf8_lossy(&out.stderr).contains("100%"));
    for axis in ["alpha", "r0", "beta", "v0"] {
        assert_eq!(std::fs::read_to_string(full.join(format!("marginal_{axis}.csv"))).unwrap().lines().count(), 3);
    }

    // simulate a crash: a few finished rows and a torn last line
    let part = dir.path().join("part");
    std::fs::create_dir(&part).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    let mut ckpt = rows[..6].join("\n");
    ckpt.push('\n');
    ckpt.push_str(&rows[9][..20]);
    std::fs::write(part.join("checkpoint.csv"), ckpt).unwrap();
    assert_eq!(code(&flock(&[SWEEP, &["--parallel", "3", "--resume", "--out", s(&part)]].concat())), 0);
    assert_eq!(std::fs::read_to_string(part.join("sweep.csv")).unwrap(), table);

    // without --resume the checkpoint is discarded
    std::fs::write(part.join("checkpoint.csv"), "garbage\n").unwrap();
    assert_eq!(code(&flock(&[SWEEP, &["--out", s(&part)]].concat())), 0);
    assert_eq!(std::fs::read_to_string(part.join("sweep.csv")).unwrap(), table);
}

#[test]
fn sweep_rejects_a_checkpoint_from_another_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(code(&flock(&[SWEEP, &["--out", s(&out)]].concat())), 0);
    let mut other: Vec<&str> = SWEEP.to_vec();
    let pos = other.iter().position(|a| *a == "0.5:1:2").unwrap();
    other[pos] = "0.7:1:2";
    assert_eq!(code(&flock(&[&other[..], &["--resume", "--out", s(&out)]].concat())), 2);
}

#[test]
fn optimize_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    std::fs::write(
        &table,
        "idx,alpha,r0,beta,v0,u_bar,q_dev_bar,v_dev_bar,status\n\
         0,0,0,0,0,1.0,5.0,5.0,ok\n\
         1,0,0,0,1,2.0,0.5,0.5,ok\n\
         2,0,0,1,0,,,,aborted\n",
    )
    .unwrap();
    let out = flock(&["optimize", s(&table), "--qmax", "1", "--vmax", "1"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["idx"], 1);
    assert_eq!(v["theta"]["v0"], 1.0);

    let out = flock(&["optimize", s(&table), "--qmax", "0", "--vmax", "0"]);
    assert_eq!(code(&out), 3);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["feasible"], false);

    assert_eq!(code(&flock(&["optimize", "/no/such/table.csv", "--qmax", "1", "--vmax", "1"])), 2);
}

#[test]
fn verify_bounds_outcomes() {
    let out = flock(&["verify-bounds", "--regime", "4", "--steps", "10"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("K_p = 0"));

    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let sim = flock(&["simulate", "--regime", "1", "--scenario", "circle", "--n-agents", "20", "--steps", "2000", "--out", s(&run)]);
    assert_eq!(code(&sim), 0);
    let out = flock(&["verify-bounds", "--run-dir", s(&run)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["report"]["x_bound"].as_f64().unwrap() > v["absorbing"]["x_observed"].as_f64().unwrap());
    assert!(v["decay"]["applicable"].is_boolean());
}

#[test]
fn wobbler_commands() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("w.csv");
    let out = flock(&["wobbler", "--mode", "construct", "--positions", "1,0,0;0,2,0", "--samples", "5", "--out", s(&csv)]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let positions: Vec<String> = text.lines().skip(1).map(|l| l.split(',').skip(1).take(4).collect::<Vec<_>>().join(",")).collect();
    assert_eq!(positions.len(), 10);
    assert!(positions.chunks(2).all(|c| c == &positions[..2]));

    let out = flock(&["wobbler", "--mode", "check", "--kind", "power", "--gamma", "0.5"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["monotonicity"]["pass"], true);

    let out = flock(&["wobbler", "--mode", "check", "--kind", "linear", "--v0", "0.5", "--radius", "5", "--w0", "0.1,0,0"]);
    assert_eq!(code(&out), 1);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["monotonicity"]["violation"]["quantity"], "h");
    assert_eq!(v["admissible"], true);

    assert_eq!(code(&flock(&["wobbler", "--mode", "check", "--grid-n", "10"])), 2);
}
