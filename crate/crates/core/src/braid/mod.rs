//! Double-defect execution as circuit-switched braids on a corner-router mesh.
//!
//! A two-qubit op (and a T, whose magic state travels from a factory) runs an
//! ancilla init cycle, a first braid held for `d` cycles, one stabilize cycle,
//! a second braid held for `d` cycles and a measure cycle: `2d + 3` cycles
//! when nothing is in the way. A braid claims every router and link of its
//! route for the whole hold. Single-qubit ops never touch the network.

mod mesh;
mod sim;

use serde::{Deserialize, Serialize};

pub use mesh::{RouteMode, Router, RouterMesh};
pub use sim::simulate;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BraidError {
    #[error("unknown policy {0}; expected 0..=6")]
    UnknownPolicy(u8),
    #[error("op {op}: qubit {qubit} has no tile")]
    Unplaced { op: usize, qubit: usize },
    #[error("op {op} needs a magic state but no factory is placed")]
    NoFactory { op: usize },
    #[error("no progress for {idle} cycles at cycle {cycle} with {pending} ops unfinished")]
    Stalled { cycle: u64, idle: u64, pending: usize },
    #[error("braids {a} and {b} overlap at cycle {cycle}")]
    Crossing { cycle: u64, a: usize, b: usize },
    #[error("code distance must be positive")]
    ZeroDistance,
}

/// Braid priority policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Policy {
    /// One op at a time in program order.
    P0,
    /// Program order with interleaved events.
    P1,
    /// As 1, on an optimized layout.
    P2,
    /// Highest criticality first.
    P3,
    /// Longest braid first.
    P4,
    /// Closing braids before opening braids.
    P5,
    /// Closing first, then criticality, then length.
    P6,
}

impl Policy {
    pub const ALL: [Policy; 7] = [
        Policy::P0,
        Policy::P1,
        Policy::P2,
        Policy::P3,
        Policy::P4,
        Policy::P5,
        Policy::P6,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Self, BraidError> {
        Policy::ALL
            .get(usize::from(id))
            .copied()
            .ok_or(BraidError::UnknownPolicy(id))
    }

    /// Policies from 2 upward run on the interaction-aware placement.
    pub fn uses_optimized_layout(self) -> bool {
        self >= Policy::P2
    }
}

impl TryFrom<u8> for Policy {
    type Error = BraidError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Policy::from_id(v)
    }
}

impl From<Policy> for u8 {
    fn from(p: Policy) -> u8 {
        p.id()
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// Timeouts and factory throughput. Unset fields scale with `d`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BraidOptions {
    /// Waiting cycles before a braid tries adaptive routes; default `2d`.
    pub t_adapt: Option<u64>,
    /// Waiting cycles before a braid is dropped to the queue tail; default `8d`.
    pub t_drop: Option<u64>,
    /// Cycles per magic state per factory; default `2d + 3`.
    pub magic_period: Option<u64>,
    /// Skip the per-cycle overlap audit.
    pub skip_invariant_checks: bool,
}

impl BraidOptions {
    pub fn t_adapt(&self, d: u32) -> u64 {
        self.t_adapt.unwrap_or(2 * u64::from(d))
    }

    pub fn t_drop(&self, d: u32) -> u64 {
        self.t_drop.unwrap_or(8 * u64::from(d)).max(1)
    }

    pub fn magic_period(&self, d: u32) -> u64 {
        self.magic_period.unwrap_or(2 * u64::from(d) + 3)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    InitAncilla,
    OpenBraid,
    CloseBraid,
    Stabilize,
    MeasureAncilla,
    /// A network-free op occupying its tile for its latency.
    Local,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BraidEvent {
    pub cycle: u64,
    pub kind: EventKind,
    pub op: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub braid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route: Option<Vec<Router>>,
}

/// One braid as it ran. Claims cover cycles `opened_at..closed_at`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BraidRecord {
    pub id: usize,
    pub op: usize,
    /// 0 for the opening braid of an op, 1 for the closing braid.
    pub stage: u8,
    pub route: Vec<Router>,
    pub links: Vec<usize>,
    pub opened_at: u64,
    pub closed_at: u64,
    pub adaptive: bool,
}

/// First and last occupied cycle of an op.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpRecord {
    pub op: usize,
    pub start: u64,
    pub done: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BraidStats {
    pub utilization: f64,
    pub drops: u64,
    pub adaptive_reroutes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BraidSchedule {
    pub policy: Policy,
    pub distance: u32,
    pub schedule_length: u64,
    pub critical_path: u64,
    pub router_rows: usize,
    pub router_cols: usize,
    pub num_links: usize,
    pub link_busy: Vec<u64>,
    pub ops: Vec<OpRecord>,
    pub braids: Vec<BraidRecord>,
    pub events: Vec<BraidEvent>,
    pub stats: BraidStats,
}

/// Row of the per-run stats CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub policy: u8,
    pub schedule_length: u64,
    pub critical_path: u64,
    pub utilization: f64,
    pub drops: u64,
}

/// Row of the Gantt CSV; `links` is a `;`-separated list of link ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GanttRow {
    pub braid: usize,
    pub op: usize,
    pub open: u64,
    pub close: u64,
    pub links: String,
}

impl BraidSchedule {
    /// Braids holding claims during `cycle`.
    pub fn open_at(&self, cycle: u64) -> Vec<usize> {
        self.braids
            .iter()
            .filter(|b| b.opened_at <= cycle && cycle < b.closed_at)
            .map(|b| b.id)
            .collect()
    }

    pub fn stats_row(&self) -> StatsRow {
        StatsRow {
            policy: self.policy.id(),
            schedule_length: self.schedule_length,
            critical_path: self.critical_path,
            utilization: self.stats.utilization,
            drops: self.stats.drops,
        }
    }

    pub fn gantt_rows(&self) -> Vec<GanttRow> {
        self.braids
            .iter()
            .map(|b| GanttRow {
                braid: b.id,
                op: b.op,
                open: b.opened_at,
                close: b.closed_at,
                links: b
                    .links
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(";"),
            })
            .collect()
    }

    /// Event log and summary as JSON.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "policy": self.policy.id(),
            "distance": self.distance,
            "schedule_length": self.schedule_length,
            "critical_path": self.critical_path,
            "mesh": { "router_rows": self.router_rows, "router_cols": self.router_cols, "links": self.num_links },
            "stats": self.stats,
            "events": self.events,
        })
    }
}
