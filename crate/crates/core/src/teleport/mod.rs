//! Planar-code execution on a Multi-SIMD region layout.
//!
//! Ops run in SIMD regions, one kind per region per logical cycle. Data moves
//! between regions, and magic states leave the factory region, by
//! teleportation. Each teleport consumes one EPR pair that travels a swap
//! chain between the two regions; [`plan_epr_distribution`] decides when
//! those pairs are launched.

mod epr;

use std::collections::{BinaryHeap, HashMap};
use std::cmp::Reverse;

use serde::{Deserialize, Serialize};

use crate::circuit::{build_dag, LatencyModel, LogicalCircuit, OpKind};

pub use epr::{
    find_knee, plan_epr_distribution, sweep_window, EprRequest, EprState, Leg, TeleportSchedule, Window,
    WindowPoint,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TeleportError {
    #[error("need at least one SIMD region")]
    NoRegions,
    #[error("region capacity must be at least 2")]
    SmallCapacity,
    #[error("swap hop cost must be positive")]
    ZeroSwapCost,
    #[error("window list is empty")]
    EmptyWindowList,
}

/// Timing knobs, in logical cycles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeleportOptions {
    /// SIMD regions.
    pub k: usize,
    /// Qubits a region can operate on per cycle; `None` means one per data qubit.
    pub capacity: Option<usize>,
    /// Cycles per swap hop.
    pub s_swap: u64,
    /// Teleport latency once the EPR pair is present.
    pub l_tp: u64,
    /// Magic-state factories.
    pub magic_factories: usize,
    /// Cycles per magic state per factory.
    pub magic_period: u64,
    /// Cycles of delay the scheduler accepts to save one teleport.
    pub move_penalty: u64,
}

impl Default for TeleportOptions {
    fn default() -> Self {
        TeleportOptions {
            k: 4,
            capacity: None,
            s_swap: 2,
            l_tp: 2,
            magic_factories: 1,
            magic_period: 3,
            move_penalty: 3,
        }
    }
}

/// Region cell on the checkerboard.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    fn manhattan(self, o: Cell) -> usize {
        self.row.abs_diff(o.row) + self.col.abs_diff(o.col)
    }
}

/// Checkerboard of SIMD and memory regions with one factory region.
///
/// The board is the smallest odd square whose dark cells hold `k` SIMD
/// regions plus the factory; the factory takes the dark cell nearest the
/// centre and SIMD regions the next nearest. Light cells are memory.
/// Neighbouring cells are joined by a channel of `side` parallel swap lanes,
/// `side` hops long.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimdLayout {
    pub board: usize,
    /// Tile side length of every region.
    pub side: usize,
    pub capacity: usize,
    pub simd: Vec<Cell>,
    pub factory: Cell,
    pub memory: Vec<Cell>,
}

/// Where a teleport starts: a SIMD region or the factory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Site {
    Region(usize),
    Factory,
}

impl SimdLayout {
    pub fn new(k: usize, capacity: usize) -> Result<Self, TeleportError> {
        if k == 0 {
            return Err(TeleportError::NoRegions);
        }
        if capacity < 2 {
            return Err(TeleportError::SmallCapacity);
        }
        let mut board = 1;
        while board * board / 2 + 1 < k + 1 {
            board += 2;
        }
        let mid = board / 2;
        let centre = Cell { row: mid, col: mid };
        let mut dark = Vec::new();
        let mut memory = Vec::new();
        for row in 0..board {
            for col in 0..board {
                let c = Cell { row, col };
                if (row + col) % 2 == 0 {
                    dark.push(c);
                } else {
                    memory.push(c);
                }
            }
        }
        dark.sort_by_key(|c| (c.manhattan(centre), *c));
        let factory = dark[0];
        let simd = dark[1..=k].to_vec();
        memory.extend_from_slice(&dark[k + 1..]);
        memory.sort();
        let side = (capacity as f64).sqrt().ceil() as usize;
        Ok(SimdLayout {
            board,
            side: side.max(1),
            capacity,
            simd,
            factory,
            memory,
        })
    }

    pub fn k(&self) -> usize {
        self.simd.len()
    }

    pub fn cell(&self, s: Site) -> Cell {
        match s {
            Site::Region(r) => self.simd[r],
            Site::Factory => self.factory,
        }
    }

    /// Swap hops between two sites.
    pub fn hops(&self, a: Site, b: Site) -> u64 {
        (self.cell(a).manhattan(self.cell(b)) * self.side) as u64
    }

    /// Region-to-region channels along the column-then-row cell path.
    pub fn channel_path(&self, a: Site, b: Site) -> Vec<(Cell, Cell)> {
        let (mut cur, dst) = (self.cell(a), self.cell(b));
        let mut out = Vec::new();
        while cur.col != dst.col {
            let next = Cell {
                row: cur.row,
                col: if dst.col > cur.col { cur.col + 1 } else { cur.col - 1 },
            };
            out.push((cur.min(next), cur.max(next)));
            cur = next;
        }
        while cur.row != dst.row {
            let next = Cell {
                row: if dst.row > cur.row { cur.row + 1 } else { cur.row - 1 },
                col: cur.col,
            };
            out.push((cur.min(next), cur.max(next)));
            cur = next;
        }
        out
    }

    /// Data plus factory tiles, excluding channels.
    pub fn region_tiles(&self) -> u64 {
        let cells = self.board * self.board;
        (cells * self.side * self.side) as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeleportKind {
    Data,
    Magic,
}

/// One teleport emitted by the SIMD scheduler.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Teleport {
    pub id: usize,
    pub kind: TeleportKind,
    /// Op that needs the teleported state.
    pub op: usize,
    pub qubit: Option<usize>,
    pub src: Site,
    pub dst: Site,
    /// Op whose completion makes the data available; `None` for magic.
    pub after_op: Option<usize>,
    /// Production time of the magic state; zero for data.
    pub magic_ready: u64,
    /// Latest start that keeps the op on its ideal schedule.
    pub needed_at: u64,
    pub hops: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimdOp {
    pub op: usize,
    pub region: usize,
    pub start: u64,
}

/// Ideal schedule assuming every EPR pair is on time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimdSchedule {
    pub layout: SimdLayout,
    pub ops: Vec<SimdOp>,
    pub teleports: Vec<Teleport>,
    pub schedule_length: u64,
    pub critical_path: u64,
    pub s_swap: u64,
    pub l_tp: u64,
    /// Operands of every op.
    pub operands: Vec<Vec<usize>>,
    /// Previous op on each operand, aligned with `operands`.
    pub prev_on_qubit: Vec<Vec<Option<usize>>>,
}

/// Build a layout sized from the options and the circuit.
pub fn layout_for(c: &LogicalCircuit, opts: &TeleportOptions) -> Result<SimdLayout, TeleportError> {
    let cap = opts.capacity.unwrap_or(c.num_qubits()).max(2);
    SimdLayout::new(opts.k, cap)
}

/// List-schedule ops onto SIMD regions, highest criticality first.
///
/// Each op goes to the region where it can start earliest, counting teleport
/// latency for operands that live elsewhere and for the magic state of a T;
/// ties prefer fewer teleports, then the lower region index. A region runs one
/// op kind per cycle on at most `capacity` qubits. A qubit sits nowhere until
/// its first op, which therefore needs no teleport.
pub fn schedule_simd(
    c: &LogicalCircuit,
    layout: &SimdLayout,
    opts: &TeleportOptions,
) -> Result<SimdSchedule, TeleportError> {
    if opts.s_swap == 0 {
        return Err(TeleportError::ZeroSwapCost);
    }
    let dag = build_dag(c, &LatencyModel::uniform(1));
    let n = c.len();
    let all = c.ops();
    let l_tp = opts.l_tp;

    let mut prev_on_qubit: Vec<Vec<Option<usize>>> = Vec::with_capacity(n);
    let mut last: Vec<Option<usize>> = vec![None; c.num_qubits()];
    for op in all {
        prev_on_qubit.push(op.operands.iter().map(|q| last[q]).collect());
        for q in op.operands.iter() {
            last[q] = Some(op.id);
        }
    }

    let mut remaining: Vec<usize> = (0..n).map(|u| dag.preds(u).len()).collect();
    let mut ready_at = vec![0u64; n];
    let mut heap: BinaryHeap<Reverse<(u64, Reverse<u64>, usize)>> = BinaryHeap::new();
    for u in 0..n {
        if remaining[u] == 0 {
            heap.push(Reverse((0, Reverse(dag.criticality(u)), u)));
        }
    }
    let mut loc: Vec<Option<usize>> = vec![None; c.num_qubits()];
    let mut avail = vec![0u64; c.num_qubits()];
    let mut slots: HashMap<(usize, u64), (OpKind, usize)> = HashMap::new();
    let mut placed: Vec<Option<SimdOp>> = vec![None; n];
    let mut teleports = Vec::new();
    let mut magic_used = 0u64;
    let factories = opts.magic_factories.max(1) as u64;

    while let Some(Reverse((ready, _, u))) = heap.pop() {
        let op = &all[u];
        let width = op.operands.len();
        let magic_ready = if op.kind == OpKind::T {
            Some((magic_used / factories) * opts.magic_period)
        } else {
            None
        };
        let mut best: Option<(u64, usize, usize)> = None;
        let mut best_start = vec![0u64; layout.k()];
        for r in 0..layout.k() {
            let mut earliest = ready;
            let mut moves = 0;
            for q in op.operands.iter() {
                match loc[q] {
                    Some(at) if at != r => {
                        earliest = earliest.max(avail[q] + l_tp);
                        moves += 1;
                    }
                    _ => earliest = earliest.max(avail[q]),
                }
            }
            if let Some(m) = magic_ready {
                earliest = earliest.max(m + l_tp);
                moves += 1;
            }
            let mut s = earliest;
            while let Some(&(kind, used)) = slots.get(&(r, s)) {
                if kind == op.kind && used + width <= layout.capacity {
                    break;
                }
                s += 1;
            }
            best_start[r] = s;
            let cand = (s + opts.move_penalty * moves as u64, moves, r);
            if best.is_none_or(|b| cand < b) {
                best = Some(cand);
            }
        }
        let (_, _, region) = best.ok_or(TeleportError::NoRegions)?;
        let start = best_start[region];
        let slot = slots.entry((region, start)).or_insert((op.kind, 0));
        slot.1 += width;

        for (i, q) in op.operands.iter().enumerate() {
            if let Some(at) = loc[q] {
                if at != region {
                    teleports.push(Teleport {
                        id: teleports.len(),
                        kind: TeleportKind::Data,
                        op: u,
                        qubit: Some(q),
                        src: Site::Region(at),
                        dst: Site::Region(region),
                        after_op: prev_on_qubit[u][i],
                        magic_ready: 0,
                        needed_at: start - l_tp,
                        hops: layout.hops(Site::Region(at), Site::Region(region)),
                    });
                }
            }
            loc[q] = Some(region);
            avail[q] = start + 1;
        }
        if let Some(m) = magic_ready {
            magic_used += 1;
            teleports.push(Teleport {
                id: teleports.len(),
                kind: TeleportKind::Magic,
                op: u,
                qubit: None,
                src: Site::Factory,
                dst: Site::Region(region),
                after_op: None,
                magic_ready: m,
                needed_at: start - l_tp,
                hops: layout.hops(Site::Factory, Site::Region(region)),
            });
        }
        placed[u] = Some(SimdOp { op: u, region, start });
        for &v in dag.succs(u) {
            remaining[v] -= 1;
            ready_at[v] = ready_at[v].max(start + 1);
            if remaining[v] == 0 {
                heap.push(Reverse((ready_at[v], Reverse(dag.criticality(v)), v)));
            }
        }
    }

    let ops: Vec<SimdOp> = placed.into_iter().map(|p| p.expect("every op scheduled")).collect();
    let schedule_length = ops.iter().map(|o| o.start + 1).max().unwrap_or(0);
    Ok(SimdSchedule {
        layout: layout.clone(),
        ops,
        teleports,
        schedule_length,
        critical_path: dag.critical_path_length(),
        s_swap: opts.s_swap,
        l_tp,
        operands: c.ops().iter().map(|o| o.operands.iter().collect()).collect(),
        prev_on_qubit,
    })
}
