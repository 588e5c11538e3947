use serde::{Deserialize, Serialize};

use super::{LogicalCircuit, OpKind};

/// Cycle cost per op kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyModel {
    cycles: [u64; 8],
}

impl LatencyModel {
    pub fn uniform(cycles: u64) -> Self {
        LatencyModel { cycles: [cycles; 8] }
    }

    /// Double-defect costs at code distance `d`, in syndrome cycles.
    ///
    /// Two-qubit ops and T run the five-stage braid sequence (`2d + 3`
    /// cycles). Other single-qubit gates are ten times faster than that
    /// sequence's `2d + 2` span, rounded up. Measure and prepare take one cycle.
    pub fn braid(d: u32) -> Self {
        let d = u64::from(d);
        let braided = 2 * d + 3;
        let local = (2 * d + 2).div_ceil(10);
        let mut m = LatencyModel::uniform(local);
        m.set(OpKind::Cnot, braided);
        m.set(OpKind::T, braided);
        m.set(OpKind::Measure, 1);
        m.set(OpKind::Prepare, 1);
        m
    }

    pub fn set(&mut self, kind: OpKind, cycles: u64) {
        self.cycles[kind.index()] = cycles;
    }

    pub fn of(&self, kind: OpKind) -> u64 {
        self.cycles[kind.index()]
    }
}

/// Dependency DAG with latency-weighted criticality.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepDag {
    kinds: Vec<OpKind>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    latency: Vec<u64>,
    criticality: Vec<u64>,
    critical_path_length: u64,
}

#[derive(Serialize)]
struct DagExport {
    nodes: Vec<DagNodeExport>,
    edges: Vec<(usize, usize)>,
    critical_path_length: u64,
}

#[derive(Serialize)]
struct DagNodeExport {
    id: usize,
    kind: OpKind,
    latency: u64,
    criticality: u64,
}

impl DepDag {
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kind(&self, node: usize) -> OpKind {
        self.kinds[node]
    }

    pub fn preds(&self, node: usize) -> &[usize] {
        &self.preds[node]
    }

    pub fn succs(&self, node: usize) -> &[usize] {
        &self.succs[node]
    }

    pub fn latency(&self, node: usize) -> u64 {
        self.latency[node]
    }

    pub fn criticality(&self, node: usize) -> u64 {
        self.criticality[node]
    }

    pub fn critical_path_length(&self) -> u64 {
        self.critical_path_length
    }

    pub fn total_latency(&self) -> u64 {
        self.latency.iter().sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succs
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    pub fn num_edges(&self) -> usize {
        self.succs.iter().map(Vec::len).sum()
    }

    /// JSON with nodes, edges and criticality, for debugging.
    pub fn to_json(&self) -> serde_json::Value {
        let export = DagExport {
            nodes: (0..self.len())
                .map(|id| DagNodeExport {
                    id,
                    kind: self.kinds[id],
                    latency: self.latency[id],
                    criticality: self.criticality[id],
                })
                .collect(),
            edges: self.edges().collect(),
            critical_path_length: self.critical_path_length,
        };
        serde_json::to_value(export).expect("dag export is plain data")
    }
}

/// Build last-writer dependency edges per qubit and compute criticality.
///
/// An op depends on the closest earlier op touching each of its operands; no
/// commutation is exploited. Ids are program order, so every edge points
/// forward and a reverse sweep over ids is a reverse topological order.
pub fn build_dag(c: &LogicalCircuit, latency: &LatencyModel) -> DepDag {
    let n = c.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut last: Vec<Option<usize>> = vec![None; c.num_qubits()];

    for op in c.ops() {
        for q in op.operands.iter() {
            if let Some(p) = last[q] {
                if !preds[op.id].contains(&p) {
                    preds[op.id].push(p);
                    succs[p].push(op.id);
                }
            }
            last[q] = Some(op.id);
        }
    }

    let kinds: Vec<OpKind> = c.ops().iter().map(|o| o.kind).collect();
    let lat: Vec<u64> = kinds.iter().map(|&k| latency.of(k)).collect();
    let mut crit = vec![0u64; n];
    for u in (0..n).rev() {
        let tail = succs[u].iter().map(|&v| crit[v]).max().unwrap_or(0);
        crit[u] = lat[u] + tail;
    }
    let critical_path_length = crit.iter().copied().max().unwrap_or(0);

    DepDag {
        kinds,
        preds,
        succs,
        latency: lat,
        criticality: crit,
        critical_path_length,
    }
}

/// ASAP level decomposition under unbounded resources.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelismProfile {
    pub parallelism_factor: f64,
    pub total_ops: usize,
    pub t_count: usize,
    pub twoq_count: usize,
    pub num_levels: usize,
}

/// Unit-latency ASAP levels; `parallelism_factor = total_ops / levels`.
/// An empty DAG reports a factor of zero.
pub fn parallelism_profile(d: &DepDag) -> ParallelismProfile {
    let levels = asap_levels(d);
    let num_levels = levels.iter().map(|&l| l + 1).max().unwrap_or(0);
    let total_ops = d.len();
    ParallelismProfile {
        parallelism_factor: if num_levels == 0 {
            0.0
        } else {
            total_ops as f64 / num_levels as f64
        },
        total_ops,
        t_count: d.kinds.iter().filter(|&&k| k == OpKind::T).count(),
        twoq_count: d.kinds.iter().filter(|k| k.arity() == 2).count(),
        num_levels,
    }
}

/// Zero-based ASAP level of every node.
pub(crate) fn asap_levels(d: &DepDag) -> Vec<usize> {
    let mut level = vec![0usize; d.len()];
    for u in 0..d.len() {
        level[u] = d.preds[u].iter().map(|&p| level[p] + 1).max().unwrap_or(0);
    }
    level
}
