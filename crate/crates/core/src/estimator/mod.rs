//! Physical qubit and wall-clock accounting for both encodings.
//!
//! Double-defect runs go through placement and the braid simulator; planar
//! runs go through the SIMD scheduler and EPR planning at a chosen prefetch
//! window. [`find_crossover`] and [`favorability_sweep`] scale synthetic
//! workload families and look for the op count where the double-defect
//! space-time product drops below the planar one.

mod crossover;

use serde::{Deserialize, Serialize};

use crate::braid::{simulate, BraidError, BraidOptions, Policy};
use crate::circuit::{build_dag, parallelism_profile, LatencyModel, LogicalCircuit, SynthError};
use crate::layout::{tiled_layout, LayoutError, PlaceOptions, Placement};
use crate::qec::{factory_plan, required_logical_rate, CodeParams, Encoding, FactoryPlan, QecConfig, QecError};
use crate::teleport::{
    layout_for, plan_epr_distribution, schedule_simd, SimdSchedule, TeleportError, TeleportOptions,
    Window,
};

pub use crossover::{
    favorability_sweep, find_crossover, Calibration, CrossoverOutcome, CrossoverPoint, CrossoverRow, FamilyModel, SlowdownFit,
    SweepCell, SweepResult, WorkloadFamily,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimatorError {
    #[error(transparent)]
    Qec(#[from] QecError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Braid(#[from] BraidError),
    #[error(transparent)]
    Teleport(#[from] TeleportError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("circuit has no ops")]
    EmptyCircuit,
    #[error("op-count range [{lo}, {hi}] is empty or below 1")]
    BadRange { lo: f64, hi: f64 },
    #[error("p_P grid is empty")]
    EmptyGrid,
    #[error("no window candidates")]
    NoWindows,
}

/// Estimator knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Channel tiles as a fraction of data tiles.
    pub channel_overhead: f64,
    /// Cross-over search range in ops.
    pub min_ops: f64,
    pub max_ops: f64,
    pub max_evaluations: u32,
    /// Bisection stops once `|ratio - 1|` is within this.
    pub crossover_tolerance: f64,
    /// Largest workload simulated directly; larger sizes use the calibrated model.
    pub direct_max_ops: u64,
    /// Prefetch windows tried when tuning the planar window.
    pub windows: Vec<Window>,
    pub policy: Policy,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            channel_overhead: 0.25,
            min_ops: 1e2,
            max_ops: 1e12,
            max_evaluations: 40,
            crossover_tolerance: 0.05,
            direct_max_ops: 20_000,
            windows: default_windows(),
            policy: Policy::P6,
            seed: 0,
        }
    }
}

/// Every 4 cycles up to 256, then coarser up to 1024, then unbounded.
pub fn default_windows() -> Vec<Window> {
    let mut w: Vec<Window> = (0..=64).map(|i| Window::Finite(4 * i)).collect();
    w.extend([320, 384, 448, 512, 768, 1024].map(Window::Finite));
    w.push(Window::Infinite);
    w
}

/// Everything the estimator needs besides the circuit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSettings {
    pub qec: QecConfig,
    pub braid: BraidOptions,
    pub teleport: TeleportOptions,
    pub estimator: EstimatorConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub encoding: Encoding,
    pub d: u32,
    pub total_ops: u64,
    pub data_tiles: u64,
    pub factory_tiles: u64,
    pub channel_tiles: u64,
    /// Planar only: two tiles per EPR pair waiting in a teleport buffer at
    /// the high-water mark. Pairs in transit ride the channel tiles.
    pub epr_buffer_tiles: u64,
    pub physical_qubits_per_tile: u64,
    pub physical_qubits: u64,
    /// Simulator cycles: syndrome cycles for braids, logical cycles for planar.
    pub cycles: u64,
    pub seconds_per_cycle: f64,
    pub wall_time_seconds: f64,
    pub spacetime: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
}

impl ResourceEstimate {
    pub fn total_tiles(&self) -> u64 {
        self.data_tiles + self.factory_tiles + self.channel_tiles + self.epr_buffer_tiles
    }

    pub fn row(&self) -> EstimateRow {
        EstimateRow {
            encoding: self.encoding.name().to_string(),
            d: self.d,
            qubits: self.physical_qubits,
            seconds: self.wall_time_seconds,
            spacetime: self.spacetime,
        }
    }
}

/// Row of `estimates.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub encoding: String,
    pub d: u32,
    pub qubits: u64,
    pub seconds: f64,
    pub spacetime: f64,
}

/// Raw simulator output at a given size, before space-time assembly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Run {
    pub data_tiles: u64,
    pub cycles: u64,
    pub epr_buffered: u64,
}

/// Smallest distance meeting the error budget of `total_ops` logical ops.
pub fn code_distance(total_ops: u64, p_p: f64, qec: &QecConfig) -> Result<u32, EstimatorError> {
    let p_l = required_logical_rate(total_ops, qec.success_target)?;
    Ok(qec.choose_distance(p_p, p_l)?)
}

pub fn plan_for(c: &LogicalCircuit, encoding: Encoding, d: u32, qec: &QecConfig) -> Result<FactoryPlan, EstimatorError> {
    let params = CodeParams::new(encoding, d, qec)?;
    let profile = parallelism_profile(&build_dag(c, &LatencyModel::uniform(1)));
    Ok(factory_plan(c.num_qubits() as u64, &profile, &params))
}

/// Tiled double-defect layout for `policy`, with factories sized at `d`.
pub fn braid_layout(c: &LogicalCircuit, d: u32, policy: Policy, s: &EstimateSettings) -> Result<Placement, EstimatorError> {
    let plan = plan_for(c, Encoding::DoubleDefect, d, &s.qec)?;
    let opts = PlaceOptions { seed: s.estimator.seed, ..PlaceOptions::default() };
    Ok(tiled_layout(
        c,
        plan.magic_factories as usize,
        plan.tiles_per_factory as usize,
        policy.uses_optimized_layout(),
        &opts,
    )?)
}

/// Braid schedule length in syndrome cycles.
pub(crate) fn run_double_defect(c: &LogicalCircuit, d: u32, s: &EstimateSettings) -> Result<(Run, u64), EstimatorError> {
    let placement = braid_layout(c, d, s.estimator.policy, s)?;
    let sched = simulate(c, &placement, d, s.estimator.policy, &s.braid)?;
    let run = Run { data_tiles: c.num_qubits() as u64, cycles: sched.schedule_length, epr_buffered: 0 };
    Ok((run, sched.critical_path))
}

pub(crate) fn teleport_options(c: &LogicalCircuit, d: u32, s: &EstimateSettings) -> Result<TeleportOptions, EstimatorError> {
    let plan = plan_for(c, Encoding::Planar, d, &s.qec)?;
    Ok(TeleportOptions { magic_factories: plan.magic_factories.max(1) as usize, ..s.teleport.clone() })
}

/// Multi-SIMD schedule before EPR planning. `capacity` overrides the region
/// size, which sets swap distances.
pub fn planar_schedule(
    c: &LogicalCircuit,
    d: u32,
    capacity: Option<usize>,
    s: &EstimateSettings,
) -> Result<SimdSchedule, EstimatorError> {
    let mut opts = teleport_options(c, d, s)?;
    if capacity.is_some() {
        opts.capacity = capacity;
    }
    let layout = layout_for(c, &opts)?;
    Ok(schedule_simd(c, &layout, &opts)?)
}

/// Window with the smallest planar space-time product on `c`; ties go to the
/// smaller window.
pub fn tune_window(
    c: &LogicalCircuit,
    d: u32,
    capacity: Option<usize>,
    s: &EstimateSettings,
) -> Result<Window, EstimatorError> {
    if s.estimator.windows.is_empty() {
        return Err(EstimatorError::NoWindows);
    }
    let sched = planar_schedule(c, d, capacity, s)?;
    let plan = plan_for(c, Encoding::Planar, d, &s.qec)?;
    let data = c.num_qubits() as u64;
    let base = data + plan.total_tiles() + (data as f64 * s.estimator.channel_overhead).ceil() as u64;
    let mut windows = s.estimator.windows.clone();
    windows.sort();
    let mut best: Option<(f64, Window)> = None;
    for w in windows {
        let plan = plan_epr_distribution(&sched, w);
        let cost = (base + 2 * plan.buffered_high_water()) as f64 * plan.schedule_length as f64;
        if best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, w));
        }
    }
    Ok(best.expect("window list is not empty").1)
}

/// Planar schedule length in logical cycles.
pub(crate) fn run_planar(
    c: &LogicalCircuit,
    d: u32,
    window: Window,
    capacity: Option<usize>,
    s: &EstimateSettings,
) -> Result<Run, EstimatorError> {
    let sched = planar_schedule(c, d, capacity, s)?;
    let plan = plan_epr_distribution(&sched, window);
    Ok(Run { data_tiles: c.num_qubits() as u64, cycles: plan.schedule_length, epr_buffered: plan.buffered_high_water() })
}

/// Space and time for a finished run.
pub(crate) fn assemble(
    encoding: Encoding,
    d: u32,
    total_ops: u64,
    run: Run,
    plan: &FactoryPlan,
    window: Option<Window>,
    s: &EstimateSettings,
) -> Result<ResourceEstimate, EstimatorError> {
    let params = CodeParams::new(encoding, d, &s.qec)?;
    let channel_tiles = (run.data_tiles as f64 * s.estimator.channel_overhead).ceil() as u64;
    let epr_buffer_tiles = match encoding {
        Encoding::Planar => 2 * run.epr_buffered,
        Encoding::DoubleDefect => 0,
    };
    let factory_tiles = plan.total_tiles();
    let tiles = run.data_tiles + factory_tiles + channel_tiles + epr_buffer_tiles;
    let physical_qubits = tiles * params.physical_qubits_per_tile;
    let seconds_per_cycle = match encoding {
        Encoding::DoubleDefect => s.qec.syndrome_cycle_seconds,
        Encoding::Planar => s.qec.syndrome_cycle_seconds * f64::from(d),
    };
    let wall_time_seconds = run.cycles as f64 * seconds_per_cycle;
    Ok(ResourceEstimate {
        encoding,
        d,
        total_ops,
        data_tiles: run.data_tiles,
        factory_tiles,
        channel_tiles,
        epr_buffer_tiles,
        physical_qubits_per_tile: params.physical_qubits_per_tile,
        physical_qubits,
        cycles: run.cycles,
        seconds_per_cycle,
        wall_time_seconds,
        spacetime: physical_qubits as f64 * wall_time_seconds,
        window,
    })
}

/// Full pipeline for one circuit on one encoding.
///
/// Distance comes from the error budget of `circuit.len()` ops. The planar
/// window is tuned on this circuit, see [`tune_window`].
pub fn estimate(
    circuit: &LogicalCircuit,
    encoding: Encoding,
    p_p: f64,
    s: &EstimateSettings,
) -> Result<ResourceEstimate, EstimatorError> {
    if circuit.is_empty() {
        return Err(EstimatorError::EmptyCircuit);
    }
    let n = circuit.len() as u64;
    let d = code_distance(n, p_p, &s.qec)?;
    estimate_at(circuit, encoding, d, None, s)
}

/// As [`estimate`] at a fixed distance and optionally a fixed window.
pub fn estimate_at(
    circuit: &LogicalCircuit,
    encoding: Encoding,
    d: u32,
    window: Option<Window>,
    s: &EstimateSettings,
) -> Result<ResourceEstimate, EstimatorError> {
    if circuit.is_empty() {
        return Err(EstimatorError::EmptyCircuit);
    }
    let n = circuit.len() as u64;
    let plan = plan_for(circuit, encoding, d, &s.qec)?;
    match encoding {
        Encoding::DoubleDefect => {
            let (run, _) = run_double_defect(circuit, d, s)?;
            assemble(encoding, d, n, run, &plan, None, s)
        }
        Encoding::Planar => {
            let w = match window {
                Some(w) => w,
                None => tune_window(circuit, d, None, s)?,
            };
            let run = run_planar(circuit, d, w, None, s)?;
            assemble(encoding, d, n, run, &plan, Some(w), s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{parse_qasm, synth_workload};

    fn serial10() -> LogicalCircuit {
        parse_qasm(
            "qubits 2\nh q0\ncnot q0 q1\nt q1\ncnot q0 q1\nh q1\ns q0\ncnot q1 q0\nx q0\nt q0\nmeasure q1\n",
        )
        .unwrap()
    }

    #[test]
    fn tiny_circuit_runs_fast() {
        let s = EstimateSettings::default();
        for enc in [Encoding::Planar, Encoding::DoubleDefect] {
            let e = estimate(&serial10(), enc, 1e-8, &s).unwrap();
            assert_eq!(e.d, 3);
            assert!(e.wall_time_seconds < 1.0);
            assert!(e.physical_qubits > 0 && e.wall_time_seconds > 0.0);
        }
    }

    #[test]
    fn planar_has_fewer_qubits_at_equal_distance() {
        let s = EstimateSettings::default();
        let c = serial10();
        let p = estimate(&c, Encoding::Planar, 1e-8, &s).unwrap();
        let dd = estimate(&c, Encoding::DoubleDefect, 1e-8, &s).unwrap();
        assert_eq!(p.d, dd.d);
        assert!(p.physical_qubits < dd.physical_qubits);
    }

    #[test]
    fn accounting_ties_out() {
        let s = EstimateSettings::default();
        let c = synth_workload(32, 400, 8.0, 0.1, 1).unwrap();
        for enc in [Encoding::Planar, Encoding::DoubleDefect] {
            let e = estimate(&c, enc, 1e-5, &s).unwrap();
            let tile = s.qec.tile_footprint(enc, e.d);
            assert_eq!(e.physical_qubits, e.total_tiles() * tile);
            assert_eq!(e.channel_tiles, 8);
            assert_eq!(e.spacetime, e.physical_qubits as f64 * e.wall_time_seconds);
            if enc == Encoding::DoubleDefect {
                assert_eq!(e.epr_buffer_tiles, 0);
                assert_eq!(e.factory_tiles, 12);
            } else {
                assert_eq!(e.factory_tiles, 24);
            }
        }
    }

    #[test]
    fn empty_circuit_rejected() {
        let c = LogicalCircuit::new(1);
        let s = EstimateSettings::default();
        assert_eq!(estimate(&c, Encoding::Planar, 1e-5, &s), Err(EstimatorError::EmptyCircuit));
    }

    #[test]
    fn above_threshold_propagates() {
        let s = EstimateSettings::default();
        assert!(matches!(
            estimate(&serial10(), Encoding::Planar, 0.5, &s),
            Err(EstimatorError::Qec(QecError::Uncorrectable { .. }))
        ));
    }
}
