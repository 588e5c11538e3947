use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Cell, SimdSchedule, Teleport, TeleportError, TeleportKind};

/// Look-ahead window in logical cycles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Window {
    Finite(u64),
    /// Every pair is in place before the first op runs.
    Infinite,
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Window::Finite(w) => write!(f, "{w}"),
            Window::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinite" | "∞" => Ok(Window::Infinite),
            other => other
                .parse::<u64>()
                .map(Window::Finite)
                .map_err(|_| format!("bad window `{other}`")),
        }
    }
}

impl Serialize for Window {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Window::Finite(w) => s.serialize_u64(*w),
            Window::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Window {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(w) => Ok(Window::Finite(w)),
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EprState {
    Planned,
    InFlight,
    Delivered,
    Consumed,
}

/// Logistics of the EPR pair behind one teleport. Times may be negative:
/// pairs can be distributed before the program starts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EprRequest {
    pub teleport: usize,
    pub needed_at: i64,
    pub launch_at: i64,
    pub arrival: i64,
    pub consumed_at: i64,
    /// Lane reservations along the route, in order.
    pub legs: Vec<Leg>,
}

/// One channel crossing: the pair enters `lane` of `channel` at `entry`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    pub channel: (Cell, Cell),
    pub lane: usize,
    pub entry: i64,
}

impl EprRequest {
    pub fn state_at(&self, t: i64) -> EprState {
        if t < self.launch_at {
            EprState::Planned
        } else if t < self.arrival {
            EprState::InFlight
        } else if t < self.consumed_at {
            EprState::Delivered
        } else {
            EprState::Consumed
        }
    }

    pub fn stall(&self) -> u64 {
        (self.arrival - self.needed_at).max(0) as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeleportSchedule {
    pub window: Window,
    pub schedule_length: u64,
    pub epr_high_water: u64,
    pub stall_cycles: u64,
    pub num_teleports: usize,
    pub requests: Vec<EprRequest>,
    /// Lane-cycles of occupancy per channel, keyed `"r,c-r,c"`.
    pub channel_busy: BTreeMap<String, u64>,
    /// Retimed start cycle per op.
    pub op_starts: Vec<u64>,
}

impl TeleportSchedule {
    /// Peak count of pairs that have arrived but are not yet consumed.
    pub fn buffered_high_water(&self) -> u64 {
        peak(self.requests.iter().map(|r| (r.arrival, r.consumed_at)))
    }
}

/// Maximum overlap of half-open intervals `[a, b)`.
fn peak(intervals: impl Iterator<Item = (i64, i64)>) -> u64 {
    let mut events: Vec<(i64, i32)> = Vec::new();
    for (a, b) in intervals {
        if b > a {
            events.push((a, 1));
            events.push((b, -1));
        }
    }
    events.sort();
    let (mut live, mut high) = (0i64, 0i64);
    for (_, delta) in events {
        live += i64::from(delta);
        high = high.max(live);
    }
    high as u64
}

/// One row of a window sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct WindowPoint {
    #[serde(rename = "W")]
    pub window: Window,
    pub epr_high_water: u64,
    pub schedule_length: u64,
    pub stall_cycles: u64,
}

impl From<&TeleportSchedule> for WindowPoint {
    fn from(t: &TeleportSchedule) -> Self {
        WindowPoint {
            window: t.window,
            epr_high_water: t.epr_high_water,
            schedule_length: t.schedule_length,
            stall_cycles: t.stall_cycles,
        }
    }
}

/// Per-channel lane reservations. Each channel between neighbouring cells has
/// `side` lanes, each `side` hops long; a lane admits a new pair every
/// `s_swap` cycles, so no hop ever holds two pairs at once.
struct Lanes<'a> {
    s: &'a SimdSchedule,
    lanes: HashMap<(Cell, Cell), Vec<BTreeSet<i64>>>,
    busy: BTreeMap<String, u64>,
}

impl<'a> Lanes<'a> {
    fn new(s: &'a SimdSchedule) -> Self {
        Lanes { s, lanes: HashMap::new(), busy: BTreeMap::new() }
    }

    /// Route a pair launched at `launch`; returns its arrival and legs.
    fn route(&mut self, tp: &Teleport, launch: i64) -> (i64, Vec<Leg>) {
        let l = &self.s.layout;
        let step = self.s.s_swap as i64;
        let transit = (l.side as i64) * step;
        let mut t = launch;
        let mut legs = Vec::new();
        for ch in l.channel_path(tp.src, tp.dst) {
            let ls = self.lanes.entry(ch).or_insert_with(|| vec![BTreeSet::new(); l.side]);
            let mut best: Option<(i64, usize)> = None;
            for (li, lane) in ls.iter().enumerate() {
                let e = earliest_entry(lane, t, step);
                if best.is_none_or(|b| e < b.0) {
                    best = Some((e, li));
                }
            }
            let (e, li) = best.expect("channels have lanes");
            ls[li].insert(e);
            legs.push(Leg { channel: ch, lane: li, entry: e });
            let key = format!("{},{}-{},{}", ch.0.row, ch.0.col, ch.1.row, ch.1.col);
            *self.busy.entry(key).or_insert(0) += transit as u64;
            t = e + transit;
        }
        (t, legs)
    }
}

fn earliest_entry(lane: &BTreeSet<i64>, from: i64, step: i64) -> i64 {
    let mut e = from;
    loop {
        match lane.range(e - step + 1..e + step).next_back() {
            Some(&x) => e = x + step,
            None => return e,
        }
    }
}

/// Lead time that stands in for an unbounded window: longer than any pair
/// can spend in transit and queues, so nothing is ever late.
fn unbounded_lead(s: &SimdSchedule) -> i64 {
    let step = s.s_swap as i64;
    let longest = s
        .teleports
        .iter()
        .map(|t| s.layout.channel_path(t.src, t.dst).len() as i64)
        .max()
        .unwrap_or(0);
    let transit = longest * s.layout.side as i64 * step;
    transit + longest * s.teleports.len() as i64 * step + 1
}

/// Launch each teleport's EPR pair `W` cycles ahead of the moment it is
/// needed in the final schedule, and push ops back when pairs arrive late.
///
/// Batches are walked in their ideal order and keep their region order. A
/// batch starts no earlier than its ideal time, one cycle after the previous
/// batch of its region, its data and its magic states, and `l_tp` after each
/// of its pairs arrives. A pair is needed `l_tp` before the batch could start
/// without it; `W = 0` launches at that moment and `W = inf` early enough that
/// no pair is ever late. Launches may fall before cycle 0.
pub fn plan_epr_distribution(s: &SimdSchedule, w: Window) -> TeleportSchedule {
    let lead = match w {
        Window::Finite(w) => w as i64,
        Window::Infinite => unbounded_lead(s),
    };
    let l_tp = s.l_tp as i64;
    let n = s.ops.len();

    let mut data_tp: HashMap<(usize, usize), usize> = HashMap::new();
    let mut magic_tp: HashMap<usize, usize> = HashMap::new();
    for t in &s.teleports {
        match t.kind {
            TeleportKind::Data => {
                data_tp.insert((t.op, t.qubit.expect("data teleports name a qubit")), t.id);
            }
            TeleportKind::Magic => {
                magic_tp.insert(t.op, t.id);
            }
        }
    }

    let mut lanes = Lanes::new(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&u| (s.ops[u].start, s.ops[u].region, u));
    let mut actual = vec![0i64; n];
    let mut requests: Vec<Option<EprRequest>> = vec![None; s.teleports.len()];
    let mut region_last: Vec<Option<i64>> = vec![None; s.layout.k()];
    let mut pending: Vec<(usize, i64)> = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let head = s.ops[order[i]];
        let mut j = i;
        while j < order.len() && s.ops[order[j]].start == head.start && s.ops[order[j]].region == head.region {
            j += 1;
        }
        let mut start = head.start as i64;
        if let Some(prev) = region_last[head.region] {
            start = start.max(prev + 1);
        }
        // Teleports of this batch with the moment their payload is ready.
        pending.clear();
        for &u in &order[i..j] {
            for (k, &q) in s.operands[u].iter().enumerate() {
                let ready = s.prev_on_qubit[u][k].map(|p| actual[p] + 1).unwrap_or(0);
                match data_tp.get(&(u, q)) {
                    Some(&tid) => {
                        start = start.max(ready + l_tp);
                        pending.push((tid, ready));
                    }
                    None => start = start.max(ready),
                }
            }
            if let Some(&tid) = magic_tp.get(&u) {
                let ready = s.teleports[tid].magic_ready as i64;
                start = start.max(ready + l_tp);
                pending.push((tid, ready));
            }
        }
        let needed = start - l_tp;
        for &(tid, ready) in &pending {
            let launch = needed - lead;
            let (arrival, legs) = lanes.route(&s.teleports[tid], launch);
            start = start.max(arrival + l_tp);
            requests[tid] = Some(EprRequest {
                teleport: tid,
                needed_at: needed,
                launch_at: launch,
                arrival,
                consumed_at: ready.max(arrival),
                legs,
            });
        }
        for &u in &order[i..j] {
            actual[u] = start;
        }
        region_last[head.region] = Some(start);
        i = j;
    }

    let requests: Vec<EprRequest> = requests
        .into_iter()
        .map(|r| r.expect("every teleport feeds a scheduled op"))
        .collect();
    let stall_cycles = requests.iter().map(EprRequest::stall).sum();
    let high = peak(requests.iter().map(|r| (r.launch_at, r.consumed_at)));
    let schedule_length = actual.iter().map(|&a| a + 1).max().unwrap_or(0).max(0) as u64;
    TeleportSchedule {
        window: w,
        schedule_length,
        epr_high_water: high,
        stall_cycles,
        num_teleports: requests.len(),
        requests,
        channel_busy: lanes.busy,
        op_starts: actual.into_iter().map(|a| a as u64).collect(),
    }
}

/// Plan every window in `ws`.
pub fn sweep_window(s: &SimdSchedule, ws: &[Window]) -> Result<Vec<WindowPoint>, TeleportError> {
    if ws.is_empty() {
        return Err(TeleportError::EmptyWindowList);
    }
    Ok(ws.iter().map(|&w| WindowPoint::from(&plan_epr_distribution(s, w))).collect())
}

/// Smallest window whose schedule stays within `tolerance` of the shortest
/// schedule in the sweep, which is the full-prefetch length when
/// `Window::Infinite` is among the points.
pub fn find_knee(points: &[WindowPoint], tolerance: f64) -> Option<WindowPoint> {
    let base = points
        .iter()
        .map(|p| p.schedule_length)
        .min()?;
    let limit = base as f64 * (1.0 + tolerance);
    let mut sorted: Vec<WindowPoint> = points.to_vec();
    sorted.sort_by_key(|p| p.window);
    sorted.into_iter().find(|p| p.schedule_length as f64 <= limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_qasm;
    use crate::teleport::{layout_for, schedule_simd, TeleportOptions};

    fn one_t() -> SimdSchedule {
        // Two qubits: regions are 2x2 tiles, factory to region is 4 hops.
        let c = parse_qasm("qubits 2\nt q0\n").unwrap();
        let opts = TeleportOptions::default();
        let l = layout_for(&c, &opts).unwrap();
        let s = schedule_simd(&c, &l, &opts).unwrap();
        assert_eq!(s.teleports[0].hops, 4);
        s
    }

    #[test]
    fn single_teleport_stalls_without_lead_time() {
        let s = one_t();
        let late = plan_epr_distribution(&s, Window::Finite(0));
        assert_eq!(late.stall_cycles, 8);
        assert_eq!(late.schedule_length, s.schedule_length + 8);
        for w in [8, 9, 50] {
            let p = plan_epr_distribution(&s, Window::Finite(w));
            assert_eq!(p.stall_cycles, 0);
            assert_eq!(p.schedule_length, s.schedule_length);
        }
        let p = plan_epr_distribution(&s, Window::Finite(8));
        let r = &p.requests[0];
        assert_eq!(r.arrival - r.launch_at, 8);
        assert_eq!(r.consumed_at - r.launch_at, 8);
        assert_eq!(r.state_at(r.launch_at), EprState::InFlight);
        assert_eq!(r.state_at(r.consumed_at), EprState::Consumed);
    }

    #[test]
    fn infinite_window_never_stalls() {
        let s = one_t();
        let p = plan_epr_distribution(&s, Window::Infinite);
        assert_eq!(p.stall_cycles, 0);
        assert_eq!(p.epr_high_water, 1);
    }

    #[test]
    fn window_parsing() {
        assert_eq!("inf".parse::<Window>().unwrap(), Window::Infinite);
        assert_eq!("12".parse::<Window>().unwrap(), Window::Finite(12));
        assert!("x".parse::<Window>().is_err());
        assert!(Window::Finite(u64::MAX) < Window::Infinite);
        let j = serde_json::to_string(&[Window::Finite(3), Window::Infinite]).unwrap();
        assert_eq!(j, r#"[3,"inf"]"#);
        let back: Vec<Window> = serde_json::from_str(&j).unwrap();
        assert_eq!(back, vec![Window::Finite(3), Window::Infinite]);
    }

    #[test]
    fn knee_picks_smallest_within_tolerance() {
        let pt = |w, sl| WindowPoint {
            window: w,
            epr_high_water: 0,
            schedule_length: sl,
            stall_cycles: 0,
        };
        let pts = [pt(Window::Finite(0), 150), pt(Window::Finite(4), 104), pt(Window::Finite(8), 100), pt(Window::Infinite, 100)];
        assert_eq!(find_knee(&pts, 0.05).unwrap().window, Window::Finite(4));
        assert!(sweep_window(&one_t(), &[]).is_err());
    }
}
