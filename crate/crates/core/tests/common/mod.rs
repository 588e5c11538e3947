#![allow(dead_code)]

use std::collections::HashMap;

use surfnet::braid::{BraidSchedule, Router};
use surfnet::circuit::{LogicalCircuit, OpKind};
use surfnet::layout::Placement;

/// Latency of a network-free op at distance `d`.
fn local_latency(kind: OpKind, d: u64) -> u64 {
    match kind {
        OpKind::Measure | OpKind::Prepare => 1,
        _ => (2 * d + 2).div_ceil(10),
    }
}

/// Every earlier op sharing a qubit.
fn deps(c: &LogicalCircuit) -> Vec<Vec<usize>> {
    let ops = c.ops();
    (0..ops.len())
        .map(|j| {
            (0..j)
                .filter(|&i| ops[i].operands.iter().any(|q| ops[j].operands.iter().any(|r| r == q)))
                .collect()
        })
        .collect()
}

fn braided(kind: OpKind) -> bool {
    matches!(kind, OpKind::Cnot | OpKind::T)
}

/// Audit a braid schedule from its records alone. Returns the number of
/// cycles checked.
pub fn verify_braid_schedule(c: &LogicalCircuit, p: &Placement, s: &BraidSchedule) -> Result<u64, String> {
    let d = u64::from(s.distance);
    let ops = c.ops();
    if s.ops.len() != ops.len() {
        return Err(format!("{} op records for {} ops", s.ops.len(), ops.len()));
    }
    for (i, r) in s.ops.iter().enumerate() {
        if r.op != i {
            return Err(format!("op record {i} names op {}", r.op));
        }
    }
    let dep = deps(c);
    for (j, pre) in dep.iter().enumerate() {
        for &i in pre {
            if s.ops[j].start <= s.ops[i].done {
                return Err(format!("op {j} starts at {} before op {i} finishes at {}", s.ops[j].start, s.ops[i].done));
            }
        }
    }
    let mut per_op: Vec<Vec<usize>> = vec![Vec::new(); ops.len()];
    for b in &s.braids {
        per_op[b.op].push(b.id);
        if b.closed_at != b.opened_at + d {
            return Err(format!("braid {} held {} cycles", b.id, b.closed_at - b.opened_at));
        }
        for w in b.route.windows(2) {
            if w[0].manhattan(w[1]) != 1 {
                return Err(format!("braid {} route not connected", b.id));
            }
        }
        let mut sorted = b.route.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != b.route.len() {
            return Err(format!("braid {} route not simple", b.id));
        }
    }
    for (u, op) in ops.iter().enumerate() {
        let rec = s.ops[u];
        if braided(op.kind) {
            let bs = &per_op[u];
            if bs.len() != 2 {
                return Err(format!("op {u} has {} braids", bs.len()));
            }
            let (b1, b2) = (&s.braids[bs[0]], &s.braids[bs[1]]);
            if b1.opened_at < rec.start + 1 || b2.opened_at < b1.closed_at + 1 || rec.done != b2.closed_at {
                return Err(format!("op {u} stage timing broken"));
            }
            let dst = Router::attach(p.tile_of(op.operands.iter().last().unwrap()));
            let src = Router::attach(p.tile_of(op.operands.first()));
            for b in [b1, b2] {
                let ends = (b.route[0], *b.route.last().unwrap());
                let ok = if op.kind == OpKind::Cnot {
                    ends == (src, dst)
                } else {
                    ends.1 == dst
                        && p.factories.iter().flatten().any(|&t| Router::attach(t) == ends.0)
                };
                if !ok {
                    return Err(format!("op {u} braid endpoints wrong"));
                }
            }
        } else {
            if !per_op[u].is_empty() {
                return Err(format!("local op {u} opened a braid"));
            }
            if rec.done + 1 - rec.start != local_latency(op.kind, d) {
                return Err(format!("local op {u} wrong latency"));
            }
        }
    }
    let critical = critical_path(c, d);
    if s.schedule_length < critical {
        return Err(format!("schedule {} below critical path {critical}", s.schedule_length));
    }
    let last = s.ops.iter().map(|r| r.done + 1).max().unwrap_or(0);
    if last != s.schedule_length {
        return Err("schedule length mismatch".into());
    }
    // Per-cycle disjointness of routers and links.
    for t in 0..s.schedule_length {
        let mut routers: HashMap<Router, usize> = HashMap::new();
        let mut links: HashMap<usize, usize> = HashMap::new();
        for b in s.braids.iter().filter(|b| b.opened_at <= t && t < b.closed_at) {
            for r in &b.route {
                if let Some(o) = routers.insert(*r, b.id) {
                    return Err(format!("cycle {t}: braids {o} and {} share router {r:?}", b.id));
                }
            }
            for l in &b.links {
                if let Some(o) = links.insert(*l, b.id) {
                    return Err(format!("cycle {t}: braids {o} and {} share link {l}", b.id));
                }
            }
        }
    }
    Ok(s.schedule_length)
}

/// Longest latency-weighted path, by memoized DFS over shared-qubit edges.
pub fn critical_path(c: &LogicalCircuit, d: u64) -> u64 {
    let ops = c.ops();
    let dep = deps(c);
    let lat = |k: OpKind| if braided(k) { 2 * d + 3 } else { local_latency(k, d) };
    let mut finish = vec![0u64; ops.len()];
    for j in 0..ops.len() {
        let start = dep[j].iter().map(|&i| finish[i]).max().unwrap_or(0);
        finish[j] = start + lat(ops[j].kind);
    }
    finish.into_iter().max().unwrap_or(0)
}

/// Exhaustive optimum for tiny instances with no T ops.
///
/// Explores every cycle-by-cycle choice of which eligible braids open and on
/// which simple router path, including waiting. Local ops and ancilla inits
/// start as soon as their dependencies allow, which costs nothing since they
/// hold no network resources.
pub struct Exhaustive {
    d: u64,
    kinds: Vec<OpKind>,
    ends: Vec<(usize, usize)>,
    dep: Vec<Vec<usize>>,
    paths: HashMap<(usize, usize), Vec<u32>>,
    memo: HashMap<Key, u64>,
    pub states: usize,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum Phase {
    Idle,
    /// Waiting to open braid `stage` since it became eligible at `from`.
    Wait { stage: u8, from: u64 },
    Hold { stage: u8, until: u64, mask: u32 },
    Done { at: u64 },
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
struct State {
    t: u64,
    ops: Vec<Phase>,
}

type Key = Vec<Phase>;

fn simple_paths(rows: usize, cols: usize, src: usize, dst: usize) -> Vec<u32> {
    fn walk(rows: usize, cols: usize, at: usize, dst: usize, mask: u32, out: &mut Vec<u32>) {
        if at == dst {
            out.push(mask);
            return;
        }
        let (r, c) = (at / cols, at % cols);
        let mut nbrs = Vec::new();
        if r > 0 {
            nbrs.push(at - cols);
        }
        if r + 1 < rows {
            nbrs.push(at + cols);
        }
        if c > 0 {
            nbrs.push(at - 1);
        }
        if c + 1 < cols {
            nbrs.push(at + 1);
        }
        for n in nbrs {
            if mask & (1 << n) == 0 {
                walk(rows, cols, n, dst, mask | (1 << n), out);
            }
        }
    }
    let mut out = Vec::new();
    walk(rows, cols, src, dst, 1 << src, &mut out);
    out
}

impl Exhaustive {
    pub fn new(c: &LogicalCircuit, p: &Placement, d: u64) -> Self {
        let rows = p.grid.rows + 1;
        let cols = p.grid.cols + 1;
        assert!(rows * cols <= 32);
        let rid = |q: usize| {
            let t = p.tile_of(q);
            t.row * cols + t.col
        };
        let ops = c.ops();
        assert!(ops.iter().all(|o| o.kind != OpKind::T));
        let ends: Vec<(usize, usize)> = ops
            .iter()
            .map(|o| match o.operands.second() {
                Some(b) => (rid(o.operands.first()), rid(b)),
                None => (0, 0),
            })
            .collect();
        let mut paths = HashMap::new();
        for &(a, b) in &ends {
            if a != b {
                paths.entry((a, b)).or_insert_with(|| simple_paths(rows, cols, a, b));
            }
        }
        Exhaustive {
            d,
            kinds: ops.iter().map(|o| o.kind).collect(),
            ends,
            dep: deps(c),
            paths,
            memo: HashMap::new(),
            states: 0,
        }
    }

    pub fn optimum(&mut self) -> u64 {
        let init = State {
            t: 0,
            ops: vec![Phase::Idle; self.kinds.len()],
        };
        self.solve(init)
    }

    /// Apply closes and starts at the current cycle, then branch on opens.
    fn solve(&mut self, mut s: State) -> u64 {
        let t = s.t;
        let d = self.d;
        for i in 0..s.ops.len() {
            if let Phase::Hold { stage, until, .. } = s.ops[i] {
                if until == t {
                    s.ops[i] = if stage == 0 {
                        Phase::Wait { stage: 1, from: t + 1 }
                    } else {
                        Phase::Done { at: t }
                    };
                }
            }
        }
        for i in 0..s.ops.len() {
            if s.ops[i] != Phase::Idle {
                continue;
            }
            let ready = self.dep[i].iter().all(|&j| matches!(s.ops[j], Phase::Done { at } if at < t));
            if !ready {
                continue;
            }
            s.ops[i] = if self.kinds[i] == OpKind::Cnot {
                Phase::Wait { stage: 0, from: t + 1 }
            } else {
                Phase::Done {
                    at: t + local_latency(self.kinds[i], d) - 1,
                }
            };
        }
        if s.ops.iter().all(|p| matches!(p, Phase::Done { .. })) {
            return s
                .ops
                .iter()
                .map(|p| match p {
                    Phase::Done { at } => at + 1,
                    _ => unreachable!(),
                })
                .max()
                .unwrap_or(0);
        }
        // Times are stored relative to `t`; completions before `t` can no
        // longer raise the final length, so they collapse to one marker.
        let key: Vec<Phase> = s
            .ops
            .iter()
            .map(|p| match *p {
                Phase::Wait { stage, from } => Phase::Wait { stage, from: from.saturating_sub(t) },
                Phase::Hold { stage, until, mask } => Phase::Hold { stage, until: until - t, mask },
                Phase::Done { at } if at >= t => Phase::Done { at: at - t },
                Phase::Done { .. } => Phase::Idle,
                Phase::Idle => Phase::Wait { stage: 9, from: 0 },
            })
            .collect();
        if let Some(&v) = self.memo.get(&key) {
            return t + v;
        }
        self.states += 1;
        let busy: u32 = s
            .ops
            .iter()
            .map(|p| match p {
                Phase::Hold { mask, .. } => *mask,
                _ => 0,
            })
            .fold(0, |a, b| a | b);
        let eligible: Vec<usize> = (0..s.ops.len())
            .filter(|&i| matches!(s.ops[i], Phase::Wait { from, .. } if from <= t))
            .collect();
        let mut best = u64::MAX;
        let changes_later = s.ops.iter().any(|p| match *p {
            Phase::Hold { .. } => true,
            Phase::Wait { from, .. } => from > t,
            Phase::Done { at } => at >= t,
            Phase::Idle => false,
        });
        self.branch(&s, &eligible, 0, busy, changes_later, &mut best);
        self.memo.insert(key, best - t);
        best
    }

    fn branch(&mut self, s: &State, eligible: &[usize], k: usize, busy: u32, live: bool, best: &mut u64) {
        if k == eligible.len() {
            // Waiting with nothing in motion only replays the same state.
            if !live {
                return;
            }
            let mut next = s.clone();
            next.t += 1;
            let v = self.solve(next);
            *best = (*best).min(v);
            return;
        }
        let i = eligible[k];
        // Wait.
        self.branch(s, eligible, k + 1, busy, live, best);
        let Phase::Wait { stage, .. } = s.ops[i] else { unreachable!() };
        let options = self.paths[&self.ends[i]].clone();
        for mask in options {
            if mask & busy != 0 {
                continue;
            }
            let mut next = s.clone();
            next.ops[i] = Phase::Hold {
                stage,
                until: s.t + self.d,
                mask,
            };
            self.branch(&next, eligible, k + 1, busy | mask, true, best);
        }
    }
}
