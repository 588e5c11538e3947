use std::path::{Path, PathBuf};

use serde::Serialize;
use surfnet::braid::{simulate, Policy};
use surfnet::circuit::{build_dag, parallelism_profile, parse_qasm, synth_workload, LatencyModel, LogicalCircuit};
use surfnet::config::{config_path, resolve, Override, Resolved};
use surfnet::estimator::{
    braid_layout, code_distance, estimate, favorability_sweep, planar_schedule, tune_window, EstimateSettings,
};
use surfnet::export::{self, CROSSOVER_HEADER, ESTIMATES_HEADER, GANTT_HEADER, STATS_HEADER, WINDOW_HEADER};
use surfnet::layout::{extract_interactions, placement_cost};
use surfnet::qec::Encoding;
use surfnet::teleport::sweep_window;

use crate::{Cli, Command, Distance};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] surfnet::Error),
    #[error("parse: cannot read {path}: {source}")]
    Input { path: PathBuf, source: std::io::Error },
    #[error("crossover: no configured family named `{0}`")]
    UnknownFamily(String),
    #[error("sweep: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

type Result<T> = std::result::Result<T, CliError>;

fn core<T, E: Into<surfnet::Error>>(r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| CliError::Core(e.into()))
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    artifacts: Vec<String>,
}

struct RunDir {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl RunDir {
    fn create(dir: &Path) -> Result<Self> {
        core(std::fs::create_dir_all(dir))?;
        Ok(RunDir { dir: dir.to_path_buf(), artifacts: Vec::new() })
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = core(serde_json::to_string_pretty(value))?;
        core(std::fs::write(self.dir.join(name), text + "\n"))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        core(std::fs::write(self.dir.join(name), text))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn csv<R: Serialize>(&mut self, name: &str, header: &[&str], rows: &[R]) -> Result<()> {
        core(export::write_rows_to(&self.dir.join(name), header, rows))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, command: &str, seed: u64) -> Result<PathBuf> {
        let manifest = Manifest { command, seed, artifacts: self.artifacts.clone() };
        self.json("manifest.json", &manifest)?;
        Ok(self.dir)
    }
}

fn load_config(cli: &Cli) -> Result<Resolved> {
    let mut overrides = Vec::new();
    for s in &cli.common.set {
        overrides.push(core(Override::parse(s))?);
    }
    if let Some(seed) = cli.common.seed {
        overrides.push(Override::new("estimator.seed", seed));
    }
    if let Some(out) = &cli.common.out {
        overrides.push(Override::new("out_dir", out.display().to_string()));
    }
    let path = config_path(cli.common.config.as_deref());
    core(resolve(path.as_deref(), &overrides))
}

fn read_circuit(path: &Path) -> Result<LogicalCircuit> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Input { path: path.to_path_buf(), source })?;
    core(parse_qasm(&text))
}

fn distance(c: &LogicalCircuit, dist: Distance, s: &EstimateSettings) -> Result<u32> {
    match dist.d {
        Some(d) => Ok(d),
        None => core(code_distance(c.len() as u64, dist.pp, &s.qec)),
    }
}

fn policy(id: u8) -> Result<Policy> {
    core(Policy::from_id(id))
}

/// Runs the chosen subcommand and returns the output directory.
pub fn execute(cli: &Cli) -> Result<PathBuf> {
    let resolved = load_config(cli)?;
    let cfg = &resolved.config;
    let s = cfg.settings();
    let seed = cfg.seed();
    let mut out = RunDir::create(&cfg.out_dir)?;
    out.json("config.resolved.json", &resolved)?;

    let name = match &cli.cmd {
        Command::Parse { circuit } => {
            let c = read_circuit(circuit)?;
            let dag = build_dag(&c, &LatencyModel::uniform(1));
            out.json("dag.json", &dag.to_json())?;
            out.json("profile.json", &parallelism_profile(&dag))?;
            "parse"
        }
        Command::Synth { qubits, ops, parallelism, t_fraction } => {
            let c = core(synth_workload(*qubits, *ops, *parallelism, *t_fraction, seed))?;
            out.text("circuit.qc", &c.to_qasm())?;
            out.json("profile.json", &parallelism_profile(&build_dag(&c, &LatencyModel::uniform(1))))?;
            "synth"
        }
        Command::Place { circuit, policy: id, distance: dist } => {
            let c = read_circuit(circuit)?;
            let d = distance(&c, *dist, &s)?;
            let p = core(braid_layout(&c, d, policy(*id)?, &s))?;
            let mut json = p.to_json();
            json["cost"] = core(placement_cost(&extract_interactions(&c), &p))?.into();
            out.json("placement.json", &json)?;
            "place"
        }
        Command::Braid { circuit, policy: id, distance: dist } => {
            let c = read_circuit(circuit)?;
            let d = distance(&c, *dist, &s)?;
            let pol = policy(*id)?;
            let p = core(braid_layout(&c, d, pol, &s))?;
            let sched = core(simulate(&c, &p, d, pol, &s.braid))?;
            out.json("schedule.json", &sched.to_json())?;
            out.csv("stats.csv", &STATS_HEADER, &[sched.stats_row()])?;
            out.csv("gantt.csv", &GANTT_HEADER, &sched.gantt_rows())?;
            "braid"
        }
        Command::Teleport { circuit, window, distance: dist } => {
            let c = read_circuit(circuit)?;
            let d = distance(&c, *dist, &s)?;
            let windows = if window.is_empty() { s.estimator.windows.clone() } else { window.clone() };
            let sched = core(planar_schedule(&c, d, None, &s))?;
            let points = core(sweep_window(&sched, &windows))?;
            out.csv("window.csv", &WINDOW_HEADER, &points)?;
            let tuned = core(tune_window(&c, d, None, &s))?;
            out.json(
                "teleport.json",
                &serde_json::json!({
                    "d": d,
                    "tuned_window": tuned,
                    "schedule_length": sched.schedule_length,
                    "critical_path": sched.critical_path,
                    "teleports": sched.teleports.len(),
                }),
            )?;
            "teleport"
        }
        Command::Estimate { circuit, pp } => {
            let c = read_circuit(circuit)?;
            let mut rows = Vec::new();
            for enc in [Encoding::DoubleDefect, Encoding::Planar] {
                rows.push(core(estimate(&c, enc, *pp, &s))?.row());
            }
            out.csv("estimates.csv", &ESTIMATES_HEADER, &rows)?;
            "estimate"
        }
        Command::Crossover { pp, family } => {
            let families: Vec<_> = match family {
                Some(f) => vec![cfg
                    .families
                    .iter()
                    .find(|x| &x.name == f)
                    .cloned()
                    .ok_or_else(|| CliError::UnknownFamily(f.clone()))?],
                None => cfg.families.clone(),
            };
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
            let sweep = core(pool.install(|| favorability_sweep(&[*pp], &families, &s)))?;
            out.csv("crossover.csv", &CROSSOVER_HEADER, &sweep.crossover_rows())?;
            out.json("crossover.json", &sweep)?;
            "crossover"
        }
        Command::Sweep { jobs } => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads((*jobs).max(1)).build()?;
            let sweep = core(pool.install(|| favorability_sweep(&cfg.p_grid, &cfg.families, &s)))?;
            let header = sweep.matrix_header();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            out.csv("sweep.csv", &header, &sweep.matrix_rows())?;
            out.csv("crossover.csv", &CROSSOVER_HEADER, &sweep.crossover_rows())?;
            out.json("sweep.json", &sweep)?;
            "sweep"
        }
    };
    out.finish(name, seed)
}
