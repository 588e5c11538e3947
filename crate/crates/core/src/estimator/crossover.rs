use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    assemble, code_distance, run_double_defect, run_planar, tune_window, EstimateSettings, EstimatorError,
    ResourceEstimate, Run,
};
use crate::circuit::{LogicalCircuit, ParallelismProfile, SynthError, WorkloadSpec};
use crate::qec::{factory_plan, CodeParams, Encoding, FactoryPlan};
use crate::teleport::Window;

/// Synthetic workloads of one shape, scaled by op count.
///
/// Qubit count grows as `sqrt(ops)` above a floor set by the parallelism, so
/// larger problems occupy more area.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadFamily {
    pub name: String,
    pub parallelism: f64,
    pub t_fraction: f64,
    #[serde(default = "default_min_qubits")]
    pub min_qubits: usize,
    /// Distinct single-qubit kinds per level; see [`WorkloadSpec::level_kinds`].
    #[serde(default)]
    pub level_kinds: Option<usize>,
    /// CNOT partner window; see [`WorkloadSpec::locality`].
    #[serde(default = "default_locality")]
    pub locality: Option<usize>,
}

fn default_locality() -> Option<usize> {
    Some(4)
}

fn default_min_qubits() -> usize {
    16
}

impl WorkloadFamily {
    pub fn new(name: &str, parallelism: f64, t_fraction: f64) -> Self {
        WorkloadFamily {
            name: name.to_string(),
            parallelism,
            t_fraction,
            min_qubits: default_min_qubits(),
            level_kinds: None,
            locality: default_locality(),
        }
    }

    pub fn serial() -> Self {
        WorkloadFamily::new("serial", 1.5, 0.05)
    }

    /// Data-parallel with long-range CNOTs: every level applies one
    /// single-qubit kind and partners are drawn from the whole register.
    pub fn parallel() -> Self {
        WorkloadFamily { level_kinds: Some(1), locality: None, ..WorkloadFamily::new("parallel", 66.0, 0.05) }
    }

    pub fn qubits(&self, ops: u64) -> usize {
        let floor = (4.0 * self.parallelism).ceil() as usize;
        let grow = (ops as f64).sqrt().ceil() as usize;
        self.min_qubits.max(floor).max(grow)
    }

    /// Parallelism actually requested for a workload of `ops` ops; small
    /// instances cannot be wider than a handful of levels allows.
    pub fn target_parallelism(&self, ops: u64) -> f64 {
        self.parallelism.min((ops as f64 / 4.0).max(1.0))
    }

    pub fn instance(&self, ops: u64, seed: u64) -> Result<LogicalCircuit, SynthError> {
        let mut spec = WorkloadSpec::new(
            self.qubits(ops),
            ops as usize,
            self.target_parallelism(ops),
            self.t_fraction,
            seed ^ ops.wrapping_mul(0x9e37_79b9_7f4a_7c15),
        );
        spec.level_kinds = self.level_kinds;
        spec.locality = self.locality;
        spec.generate()
    }
}

/// Least-squares fit `schedule_length ~ factor * critical_path`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlowdownFit {
    pub factor: f64,
    /// `(ops, critical_path, schedule_length)` per calibration run.
    pub points: Vec<(u64, u64, u64)>,
    /// Relative residual per point.
    pub residuals: Vec<f64>,
}

impl SlowdownFit {
    pub fn fit(points: Vec<(u64, u64, u64)>) -> SlowdownFit {
        let num: f64 = points.iter().map(|&(_, cp, sl)| cp as f64 * sl as f64).sum();
        let den: f64 = points.iter().map(|&(_, cp, _)| (cp as f64).powi(2)).sum();
        let factor = if den > 0.0 { num / den } else { 1.0 };
        let residuals = points
            .iter()
            .map(|&(_, cp, sl)| (sl as f64 - factor * cp as f64) / sl.max(1) as f64)
            .collect();
        SlowdownFit { factor, points, residuals }
    }
}

/// Calibrated model for sizes above the direct-simulation limit, per distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub d: u32,
    pub ops: u64,
    pub critical_path: u64,
    pub fit: SlowdownFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverPoint {
    pub family: String,
    pub parallelism: f64,
    pub p_p: f64,
    pub op_count: u64,
    /// Space-time ratio double-defect / planar at `op_count`.
    pub ratio: f64,
    /// Final bracket: planar wins at `bracket.0`, double-defect at `bracket.1`.
    pub bracket: (u64, u64),
    pub evaluations: u32,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CrossoverOutcome {
    Found(CrossoverPoint),
    /// No sign change of `ratio - 1` across the range.
    NotBracketed { lo: u64, hi: u64, ratio_lo: f64, ratio_hi: f64 },
}

impl CrossoverOutcome {
    pub fn op_count(&self) -> Option<u64> {
        match self {
            CrossoverOutcome::Found(p) => Some(p.op_count),
            CrossoverOutcome::NotBracketed { .. } => None,
        }
    }

    /// Planar wins over the whole range.
    pub fn planar_always(&self) -> bool {
        matches!(self, CrossoverOutcome::NotBracketed { ratio_lo, ratio_hi, .. } if *ratio_lo > 1.0 && *ratio_hi > 1.0)
    }

    pub fn double_defect_always(&self) -> bool {
        matches!(self, CrossoverOutcome::NotBracketed { ratio_lo, ratio_hi, .. } if *ratio_lo <= 1.0 && *ratio_hi <= 1.0)
    }
}

/// Row of `crossover.csv`; `op_count` is empty when there is no crossing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverRow {
    pub family: String,
    #[serde(rename = "p_P")]
    pub p_p: f64,
    pub op_count: Option<u64>,
}

/// Evaluates one family at arbitrary sizes, caching calibrations and
/// tuned windows.
pub struct FamilyModel<'a> {
    family: &'a WorkloadFamily,
    settings: &'a EstimateSettings,
    reference: Option<LogicalCircuit>,
    // (distance, region side) to tuned window.
    windows: HashMap<(u32, usize), Window>,
    calibrations: HashMap<u32, Calibration>,
}

impl<'a> FamilyModel<'a> {
    pub fn new(family: &'a WorkloadFamily, settings: &'a EstimateSettings) -> Self {
        FamilyModel { family, settings, reference: None, windows: HashMap::new(), calibrations: HashMap::new() }
    }

    /// The calibration circuit, at the largest directly simulated size.
    fn reference(&mut self) -> Result<&LogicalCircuit, EstimatorError> {
        if self.reference.is_none() {
            let est = &self.settings.estimator;
            self.reference = Some(self.family.instance(est.direct_max_ops.max(4), est.seed)?);
        }
        Ok(self.reference.as_ref().expect("just built"))
    }

    /// Window for the calibration circuit on regions of `capacity` qubits.
    /// Swap distances grow with the region side, so each side gets its own.
    pub fn window_for(&mut self, d: u32, capacity: usize) -> Result<Window, EstimatorError> {
        let side = (capacity as f64).sqrt().ceil() as usize;
        if let Some(&w) = self.windows.get(&(d, side)) {
            return Ok(w);
        }
        let s = self.settings;
        let w = tune_window(self.reference()?, d, Some(capacity), s)?;
        self.windows.insert((d, side), w);
        Ok(w)
    }

    /// Tuned windows so far as `(d, region side, window)`.
    pub fn windows(&self) -> Vec<(u32, usize, Window)> {
        let mut v: Vec<_> = self.windows.iter().map(|(&(d, side), &w)| (d, side, w)).collect();
        v.sort();
        v
    }

    fn calibration(&mut self, d: u32) -> Result<Calibration, EstimatorError> {
        if let Some(c) = self.calibrations.get(&d) {
            return Ok(c.clone());
        }
        let est = &self.settings.estimator;
        let top = est.direct_max_ops.max(4);
        let mut points = Vec::new();
        for n in [top / 4, top / 2] {
            let c = self.family.instance(n, est.seed)?;
            let (run, cp) = run_double_defect(&c, d, self.settings)?;
            points.push((n, cp, run.cycles));
        }
        let s = self.settings;
        let (run, top_cp) = run_double_defect(self.reference()?, d, s)?;
        points.push((top, top_cp, run.cycles));
        let cal = Calibration { d, ops: top, critical_path: top_cp, fit: SlowdownFit::fit(points) };
        self.calibrations.insert(d, cal.clone());
        Ok(cal)
    }

    fn plan(&self, encoding: Encoding, d: u32, data: u64) -> Result<FactoryPlan, EstimatorError> {
        let params = CodeParams::new(encoding, d, &self.settings.qec)?;
        let profile = ParallelismProfile {
            parallelism_factor: self.family.parallelism,
            total_ops: 0,
            t_count: usize::from(self.family.t_fraction > 0.0),
            twoq_count: 0,
            num_levels: 0,
        };
        Ok(factory_plan(data, &profile, &params))
    }

    /// Both estimates at `ops` ops.
    pub fn estimates(&mut self, ops: u64, p_p: f64) -> Result<(ResourceEstimate, ResourceEstimate), EstimatorError> {
        let s = self.settings;
        let d = code_distance(ops, p_p, &s.qec)?;
        let (dd_run, pl_run, window) = if ops <= s.estimator.direct_max_ops {
            let c = self.family.instance(ops, s.estimator.seed)?;
            let (dd, _) = run_double_defect(&c, d, s)?;
            let window = tune_window(&c, d, None, s)?;
            (dd, run_planar(&c, d, window, None, s)?, window)
        } else {
            let data = self.family.qubits(ops);
            let window = self.window_for(d, data)?;
            let cal = self.calibration(d)?;
            let scale = |cycles: f64| (cycles * ops as f64 / cal.ops as f64).round() as u64;
            let dd = Run {
                data_tiles: data as u64,
                cycles: scale(cal.fit.factor * cal.critical_path as f64),
                epr_buffered: 0,
            };
            let pl = run_planar(self.reference()?, d, window, Some(data), s)?;
            let pl = Run { data_tiles: data as u64, cycles: scale(pl.cycles as f64), ..pl };
            (dd, pl, window)
        };
        let dd_plan = self.plan(Encoding::DoubleDefect, d, dd_run.data_tiles)?;
        let pl_plan = self.plan(Encoding::Planar, d, pl_run.data_tiles)?;
        Ok((
            assemble(Encoding::DoubleDefect, d, ops, dd_run, &dd_plan, None, s)?,
            assemble(Encoding::Planar, d, ops, pl_run, &pl_plan, Some(window), s)?,
        ))
    }

    /// Space-time ratio double-defect / planar; above 1 means planar wins.
    pub fn ratio(&mut self, ops: u64, p_p: f64) -> Result<f64, EstimatorError> {
        let (dd, pl) = self.estimates(ops, p_p)?;
        Ok(dd.spacetime / pl.spacetime)
    }

    pub fn calibrations(&self) -> Vec<Calibration> {
        let mut v: Vec<Calibration> = self.calibrations.values().cloned().collect();
        v.sort_by_key(|c| c.d);
        v
    }
}

/// Log-scale bisection on `ratio - 1` over the configured op range.
pub fn find_crossover(
    family: &WorkloadFamily,
    p_p: f64,
    s: &EstimateSettings,
) -> Result<CrossoverOutcome, EstimatorError> {
    search(&mut FamilyModel::new(family, s), p_p)
}

fn search(model: &mut FamilyModel<'_>, p_p: f64) -> Result<CrossoverOutcome, EstimatorError> {
    let est = &model.settings.estimator;
    let (lo_f, hi_f) = (est.min_ops.ceil(), est.max_ops.floor());
    if !(lo_f >= 1.0 && hi_f > lo_f) {
        return Err(EstimatorError::BadRange { lo: est.min_ops, hi: est.max_ops });
    }
    let (tol, max_evals) = (est.crossover_tolerance, est.max_evaluations.max(2));
    let (mut lo, mut hi) = (lo_f as u64, hi_f as u64);
    let mut r_lo = model.ratio(lo, p_p)?;
    let mut r_hi = model.ratio(hi, p_p)?;
    let mut evals = 2;
    if (r_lo > 1.0) == (r_hi > 1.0) {
        return Ok(CrossoverOutcome::NotBracketed { lo, hi, ratio_lo: r_lo, ratio_hi: r_hi });
    }
    // Orient so that planar wins at `lo`.
    let rising = r_lo <= 1.0;
    let wins_planar = |r: f64| (r > 1.0) != rising;
    while evals < max_evals {
        let mid = ((lo as f64) * (hi as f64)).sqrt().round() as u64;
        if mid <= lo || mid >= hi {
            break;
        }
        let r = model.ratio(mid, p_p)?;
        evals += 1;
        if wins_planar(r) {
            lo = mid;
            r_lo = r;
        } else {
            hi = mid;
            r_hi = r;
        }
        if (r - 1.0).abs() <= tol {
            break;
        }
    }
    let (op_count, ratio) = if (r_lo - 1.0).abs() < (r_hi - 1.0).abs() { (lo, r_lo) } else { (hi, r_hi) };
    Ok(CrossoverOutcome::Found(CrossoverPoint {
        family: model.family.name.clone(),
        parallelism: model.family.parallelism,
        p_p,
        op_count,
        ratio,
        bracket: (lo, hi),
        evaluations: evals,
        converged: (ratio - 1.0).abs() <= tol,
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub family: String,
    pub parallelism: f64,
    pub p_p: f64,
    pub outcome: Option<CrossoverOutcome>,
    pub error: Option<String>,
    /// Tuned planar windows as `(d, region side, window)`.
    pub windows: Vec<(u32, usize, Window)>,
    pub calibrations: Vec<Calibration>,
}

impl SweepCell {
    pub fn op_count(&self) -> Option<u64> {
        self.outcome.as_ref().and_then(CrossoverOutcome::op_count)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub p_grid: Vec<f64>,
    pub families: Vec<WorkloadFamily>,
    /// Family-major: cell `(f, i)` is at `f * p_grid.len() + i`.
    pub cells: Vec<SweepCell>,
}

/// Cross-over op count for every family at every `p_P`.
///
/// Cells run in parallel on the current rayon pool. A failing cell records
/// its error and the rest of the sweep continues.
pub fn favorability_sweep(
    p_grid: &[f64],
    families: &[WorkloadFamily],
    s: &EstimateSettings,
) -> Result<SweepResult, EstimatorError> {
    if p_grid.is_empty() || families.is_empty() {
        return Err(EstimatorError::EmptyGrid);
    }
    let keys: Vec<(usize, usize)> =
        (0..families.len()).flat_map(|f| (0..p_grid.len()).map(move |i| (f, i))).collect();
    let cells = keys
        .par_iter()
        .map(|&(f, i)| {
            let family = &families[f];
            let mut cell = SweepCell {
                family: family.name.clone(),
                parallelism: family.parallelism,
                p_p: p_grid[i],
                outcome: None,
                error: None,
                windows: Vec::new(),
                calibrations: Vec::new(),
            };
            let mut model = FamilyModel::new(family, s);
            match search(&mut model, p_grid[i]) {
                Ok(o) => cell.outcome = Some(o),
                Err(e) => cell.error = Some(e.to_string()),
            }
            cell.windows = model.windows();
            cell.calibrations = model.calibrations();
            cell
        })
        .collect();
    Ok(SweepResult { p_grid: p_grid.to_vec(), families: families.to_vec(), cells })
}

impl SweepResult {
    pub fn cell(&self, family: usize, p: usize) -> &SweepCell {
        &self.cells[family * self.p_grid.len() + p]
    }

    pub fn boundary(&self, family: usize) -> Vec<Option<u64>> {
        (0..self.p_grid.len()).map(|i| self.cell(family, i).op_count()).collect()
    }

    pub fn crossover_rows(&self) -> Vec<CrossoverRow> {
        self.cells
            .iter()
            .map(|c| CrossoverRow { family: c.family.clone(), p_p: c.p_p, op_count: c.op_count() })
            .collect()
    }

    /// `p_P` down the rows, one column per family.
    pub fn matrix_header(&self) -> Vec<String> {
        std::iter::once("p_P".to_string()).chain(self.families.iter().map(|f| f.name.clone())).collect()
    }

    pub fn matrix_rows(&self) -> Vec<Vec<String>> {
        (0..self.p_grid.len())
            .map(|i| {
                std::iter::once(format!("{:e}", self.p_grid[i]))
                    .chain((0..self.families.len()).map(|f| {
                        self.cell(f, i).op_count().map(|n| n.to_string()).unwrap_or_default()
                    }))
                    .collect()
            })
            .collect()
    }

    /// `(p_P index, lower family, higher family)` where a more parallel family
    /// crosses over at a smaller op count than a less parallel one.
    pub fn ordering_violations(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.p_grid.len() {
            for a in 0..self.families.len() {
                for b in 0..self.families.len() {
                    if self.families[a].parallelism < self.families[b].parallelism {
                        if let (Some(na), Some(nb)) = (self.cell(a, i).op_count(), self.cell(b, i).op_count()) {
                            if nb < na {
                                out.push((i, a, b));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// `(family, i, j)` with `p_grid[i] < p_grid[j]` but a higher boundary at `j`.
    pub fn monotonicity_violations(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for f in 0..self.families.len() {
            let b = self.boundary(f);
            for i in 0..b.len() {
                for j in 0..b.len() {
                    if self.p_grid[i] < self.p_grid[j] {
                        if let (Some(x), Some(y)) = (b[i], b[j]) {
                            if y > x {
                                out.push((f, i, j));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}
