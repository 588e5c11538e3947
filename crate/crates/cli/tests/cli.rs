use std::path::Path;
use std::process::{Command, Output};

use surfnet::braid::{simulate, Policy};
use surfnet::circuit::{parse_qasm, synth_workload};
use surfnet::config::{resolve, Override};
use surfnet::estimator::{braid_layout, code_distance, estimate, favorability_sweep, WorkloadFamily};
use surfnet::export::{self, ESTIMATES_HEADER, STATS_HEADER};
use surfnet::qec::Encoding;

fn surfnet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surfnet"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .env_remove("SURFNET_CONFIG")
        .output()
        .unwrap()
}

fn write_circuit(dir: &Path) -> String {
    let c = synth_workload(16, 150, 4.0, 0.1, 5).unwrap();
    std::fs::write(dir.join("c.qc"), c.to_qasm()).unwrap();
    "c.qc".to_string()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn json(path: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&read(path)).unwrap()
}

#[test]
fn braid_writes_run_dir_matching_library() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let circuit = write_circuit(dir);
    let o = surfnet(&["braid", "--circuit", &circuit, "--policy", "6", "--pp", "1e-8", "--out", "runs/"], dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = dir.join("runs");

    let manifest = json(run.join("manifest.json"));
    assert_eq!(manifest["command"], "braid");
    let listed: Vec<&str> = manifest["artifacts"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for f in ["config.resolved.json", "schedule.json", "stats.csv", "gantt.csv"] {
        assert!(listed.contains(&f), "{f} not in manifest");
        assert!(run.join(f).exists());
    }
    let resolved = json(run.join("config.resolved.json"));
    assert_eq!(resolved["config"]["out_dir"], "runs/");
    assert_eq!(resolved["provenance"]["overrides"][0]["key"], "out_dir");

    let c = parse_qasm(&read(dir.join(&circuit))).unwrap();
    let s = resolve(None, &[]).unwrap().config.settings();
    let d = code_distance(c.len() as u64, 1e-8, &s.qec).unwrap();
    let p = braid_layout(&c, d, Policy::P6, &s).unwrap();
    let sched = simulate(&c, &p, d, Policy::P6, &s.braid).unwrap();
    assert_eq!(read(run.join("stats.csv")), export::rows_to_string(&STATS_HEADER, &[sched.stats_row()]).unwrap());
    assert_eq!(json(run.join("schedule.json")), sched.to_json());
}

#[test]
fn out_of_range_policy_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let circuit = write_circuit(tmp.path());
    let o = surfnet(&["braid", "--circuit", &circuit, "--policy", "9"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--policy"));
    assert!(!tmp.path().join("runs").exists());
}

#[test]
fn stage_failures_exit_one_with_a_single_prefixed_line() {
    let tmp = tempfile::tempdir().unwrap();
    for (args, prefix) in [
        (vec!["braid", "--circuit", "missing.qc"], "error: parse: cannot read missing.qc"),
        (vec!["--set", "qec.bogus=1", "parse", "--circuit", "missing.qc"], "error: config: unknown key `qec.bogus`"),
        (vec!["synth", "--qubits", "4", "--ops", "10", "--parallelism", "9"], "error: synth:"),
    ] {
        let o = surfnet(&args, tmp.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with(prefix), "{err}");
    }
}

#[test]
fn config_file_then_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("cfg.json"), r#"{"estimator": {"seed": 4}, "out_dir": "from_file"}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_surfnet"))
        .args(["synth", "--qubits", "8", "--ops", "40", "--parallelism", "2", "--set", "braid.t_adapt=7"])
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .env("SURFNET_CONFIG", "cfg.json")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let resolved = json(dir.join("from_file/config.resolved.json"));
    assert_eq!(resolved["config"]["estimator"]["seed"], 4);
    assert_eq!(resolved["config"]["braid"]["t_adapt"], 7);
    assert_eq!(resolved["provenance"]["config_file"], "cfg.json");
    let expect = synth_workload(8, 40, 2.0, 0.1, 4).unwrap();
    assert_eq!(read(dir.join("from_file/circuit.qc")), expect.to_qasm());

    let o = surfnet(&["--seed", "9", "--out", "b", "synth", "--qubits", "8", "--ops", "40", "--parallelism", "2"], dir);
    assert!(o.status.success());
    assert_eq!(read(dir.join("b/circuit.qc")), synth_workload(8, 40, 2.0, 0.1, 9).unwrap().to_qasm());
}

#[test]
fn estimate_matches_library() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let circuit = write_circuit(dir);
    let o = surfnet(&["estimate", "--circuit", &circuit, "--pp", "1e-5", "--out", "e"], dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c = parse_qasm(&read(dir.join(&circuit))).unwrap();
    let s = resolve(None, &[]).unwrap().config.settings();
    let rows: Vec<_> = [Encoding::DoubleDefect, Encoding::Planar]
        .into_iter()
        .map(|e| estimate(&c, e, 1e-5, &s).unwrap().row())
        .collect();
    assert_eq!(read(dir.join("e/estimates.csv")), export::rows_to_string(&ESTIMATES_HEADER, &rows).unwrap());
}

/// Half-size double-defect tiles give the serial family a real crossing at
/// 1e-3, which keeps the sweep short.
fn crossing() -> Vec<String> {
    let families = serde_json::to_string(&[WorkloadFamily::serial()]).unwrap();
    ["qec.dd_tile_multiplier=1".to_string(), "p_grid=[1e-3]".to_string(), format!("families={families}")]
        .into_iter()
        .flat_map(|kv| ["--set".to_string(), kv])
        .collect()
}

#[test]
fn sweep_is_reproducible_and_matches_library() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut outputs = Vec::new();
    for (out, jobs) in [("a", "1"), ("b", "1"), ("c", "2")] {
        let mut args = crossing();
        args.extend(["--seed", "1", "--out", out, "sweep", "--jobs", jobs].map(String::from));
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = surfnet(&args, dir);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(read(dir.join(out).join("sweep.csv")));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let overrides: Vec<Override> = crossing()
        .chunks(2)
        .map(|kv| Override::parse(&kv[1]).unwrap())
        .chain([Override::new("estimator.seed", 1)])
        .collect();
    let cfg = resolve(None, &overrides).unwrap().config;
    let sweep = favorability_sweep(&cfg.p_grid, &cfg.families, &cfg.settings()).unwrap();
    assert!(sweep.cell(0, 0).op_count().is_some());
    let header = sweep.matrix_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    assert_eq!(outputs[0], export::rows_to_string(&header, &sweep.matrix_rows()).unwrap());
}
