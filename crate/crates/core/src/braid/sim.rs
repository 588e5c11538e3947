use std::cmp::Reverse;
use std::collections::BTreeSet;

use super::mesh::{RouteMode, Router, RouterMesh};
use super::{
    BraidError, BraidEvent, BraidOptions, BraidRecord, BraidSchedule, BraidStats, EventKind,
    OpRecord, Policy,
};
use crate::circuit::{build_dag, DepDag, LatencyModel, LogicalCircuit, OpKind};
use crate::layout::Placement;

#[derive(Clone, Debug)]
struct Pending {
    op: usize,
    stage: u8,
    src: Router,
    dst: Router,
    eligible_at: u64,
    wait: u64,
    seq: u64,
}

#[derive(Clone, Debug)]
struct Open {
    braid: usize,
    op: usize,
    stage: u8,
    src: Router,
    dst: Router,
    close_at: u64,
}

struct Factory {
    ready_at: u64,
}

/// Sort key: smaller runs first.
type Key = (u8, i64, i64, u64);

fn key(policy: Policy, closing: bool, crit: u64, len: usize, top_crit: u64, seq: u64) -> Key {
    let crit = crit as i64;
    let len = len as i64;
    match policy {
        Policy::P0 | Policy::P1 | Policy::P2 => (0, 0, 0, seq),
        Policy::P3 => (0, -crit, 0, seq),
        Policy::P4 => (0, -len, 0, seq),
        Policy::P5 => (u8::from(!closing), 0, 0, seq),
        Policy::P6 => {
            let by_len = if crit as u64 == top_crit { len } else { -len };
            (u8::from(!closing), -crit, by_len, seq)
        }
    }
}

struct Sim<'a> {
    circuit: &'a LogicalCircuit,
    dag: DepDag,
    placement: &'a Placement,
    d: u64,
    policy: Policy,
    t_adapt: u64,
    t_drop: u64,
    magic_period: u64,
    audit: bool,

    mesh: RouterMesh,
    factories: Vec<Factory>,
    factory_ports: Vec<Vec<Router>>,
    remaining_preds: Vec<usize>,
    ready_from: Vec<u64>,
    ready: BTreeSet<usize>,
    start: Vec<Option<u64>>,
    done: Vec<Option<u64>>,
    completed: usize,
    serial_next: usize,
    pending: Vec<Pending>,
    open: Vec<Open>,
    next_seq: u64,

    braids: Vec<BraidRecord>,
    events: Vec<BraidEvent>,
    link_busy: Vec<u64>,
    drops: u64,
    adaptive: u64,
    audit_router: Vec<(u64, usize)>,
}

/// Run the cycle loop and return the resulting static schedule.
///
/// The DAG is built from `circuit` with braid latencies at distance `d`.
/// Placement choice (naive or optimized) is up to the caller.
pub fn simulate(
    circuit: &LogicalCircuit,
    placement: &Placement,
    d: u32,
    policy: Policy,
    opts: &BraidOptions,
) -> Result<BraidSchedule, BraidError> {
    if d == 0 {
        return Err(BraidError::ZeroDistance);
    }
    for op in circuit.ops() {
        for q in op.operands.iter() {
            if q >= placement.num_qubits() {
                return Err(BraidError::Unplaced { op: op.id, qubit: q });
            }
        }
        if op.kind == OpKind::T && placement.factories.is_empty() {
            return Err(BraidError::NoFactory { op: op.id });
        }
    }
    let dag = build_dag(circuit, &LatencyModel::braid(d));
    let mesh = RouterMesh::for_grid(placement.grid);
    let n = circuit.len();
    let remaining_preds: Vec<usize> = (0..n).map(|u| dag.preds(u).len()).collect();
    let ready: BTreeSet<usize> = (0..n).filter(|&u| remaining_preds[u] == 0).collect();
    let factory_ports = placement
        .factories
        .iter()
        .map(|tiles| tiles.iter().map(|&t| Router::attach(t)).collect())
        .collect();
    let mut sim = Sim {
        circuit,
        placement,
        d: u64::from(d),
        policy,
        t_adapt: opts.t_adapt(d),
        t_drop: opts.t_drop(d),
        magic_period: opts.magic_period(d),
        audit: !opts.skip_invariant_checks,
        factories: placement.factories.iter().map(|_| Factory { ready_at: 0 }).collect(),
        factory_ports,
        remaining_preds,
        ready_from: vec![0; n],
        ready,
        start: vec![None; n],
        done: vec![None; n],
        completed: 0,
        serial_next: 0,
        pending: Vec::new(),
        open: Vec::new(),
        next_seq: 0,
        braids: Vec::new(),
        events: Vec::new(),
        link_busy: vec![0; mesh.num_links()],
        drops: 0,
        adaptive: 0,
        audit_router: vec![(u64::MAX, 0); mesh.num_routers()],
        mesh,
        dag,
    };
    sim.run()?;
    Ok(sim.finish())
}

impl Sim<'_> {
    fn run(&mut self) -> Result<(), BraidError> {
        let n = self.circuit.len();
        let guard = 10 * self.t_drop;
        let mut t: u64 = 0;
        let mut last_progress: u64 = 0;
        while self.completed < n {
            let mut progress = self.close_braids(t);
            progress |= self.admit(t);
            progress |= self.open_braids(t);
            if self.audit {
                self.check_disjoint(t)?;
            }
            if progress {
                last_progress = t;
            } else if t - last_progress > guard {
                return Err(BraidError::Stalled {
                    cycle: t,
                    idle: t - last_progress,
                    pending: n - self.completed,
                });
            }
            if self.completed == n {
                break;
            }
            t = self.next_time(t);
        }
        Ok(())
    }

    /// Next cycle where anything can change. Blocked braids tick every cycle.
    fn next_time(&self, t: u64) -> u64 {
        if self.pending.iter().any(|p| p.eligible_at <= t) {
            return t + 1;
        }
        let mut next = u64::MAX;
        for o in &self.open {
            next = next.min(o.close_at);
        }
        for p in &self.pending {
            next = next.min(p.eligible_at);
        }
        let magic_wait = self.ready.iter().any(|&u| self.circuit.ops()[u].kind == OpKind::T);
        for &u in &self.ready {
            next = next.min(self.ready_from[u].max(t + 1));
        }
        if magic_wait {
            for f in &self.factories {
                next = next.min(f.ready_at.max(t + 1));
            }
        }
        if next == u64::MAX {
            t + 1
        } else {
            next.max(t + 1)
        }
    }

    fn finish_op(&mut self, op: usize, at: u64) {
        self.done[op] = Some(at);
        self.completed += 1;
        let succs = self.dag.succs(op).to_vec();
        for v in succs {
            self.remaining_preds[v] -= 1;
            self.ready_from[v] = self.ready_from[v].max(at + 1);
            if self.remaining_preds[v] == 0 {
                self.ready.insert(v);
            }
        }
    }

    fn log(&mut self, cycle: u64, kind: EventKind, op: usize) {
        self.events.push(BraidEvent {
            cycle,
            kind,
            op,
            braid: None,
            route: None,
        });
    }

    fn close_braids(&mut self, t: u64) -> bool {
        let mut closing: Vec<Open> = Vec::new();
        self.open.retain(|o| {
            if o.close_at == t {
                closing.push(o.clone());
                false
            } else {
                true
            }
        });
        closing.sort_by_key(|o| o.braid);
        let any = !closing.is_empty();
        for o in closing {
            let route = self.braids[o.braid].route.clone();
            self.mesh.release(o.braid, &route);
            self.events.push(BraidEvent {
                cycle: t,
                kind: EventKind::CloseBraid,
                op: o.op,
                braid: Some(o.braid),
                route: None,
            });
            if o.stage == 0 {
                self.log(t, EventKind::Stabilize, o.op);
                let seq = self.bump_seq();
                self.pending.push(Pending {
                    op: o.op,
                    stage: 1,
                    src: o.src,
                    dst: o.dst,
                    eligible_at: t + 1,
                    wait: 0,
                    seq,
                });
            } else {
                self.log(t, EventKind::MeasureAncilla, o.op);
                self.finish_op(o.op, t);
            }
        }
        any
    }

    fn bump_seq(&mut self) -> u64 {
        self.next_seq += 1;
        self.next_seq - 1
    }

    fn attach(&self, q: usize) -> Router {
        Router::attach(self.placement.tile_of(q))
    }

    /// Nearest factory with a state ready at `t`, as `(factory, port)`.
    fn pick_factory(&self, target: Router, t: u64) -> Option<(usize, Router)> {
        self.factories
            .iter()
            .enumerate()
            .filter(|(_, f)| f.ready_at <= t)
            .map(|(i, _)| {
                let port = *self.factory_ports[i]
                    .iter()
                    .min_by_key(|r| (r.manhattan(target), **r))
                    .expect("factories have tiles");
                (port.manhattan(target), i, port)
            })
            .min()
            .map(|(_, i, port)| (i, port))
    }

    fn admit(&mut self, t: u64) -> bool {
        let candidates: Vec<usize> = if self.policy == Policy::P0 {
            let prev_done = self.serial_next == 0
                || self.done[self.serial_next - 1].is_some_and(|x| x < t);
            let u = self.serial_next;
            if prev_done && self.ready.contains(&u) && self.ready_from[u] <= t {
                vec![u]
            } else {
                Vec::new()
            }
        } else {
            let mut c: Vec<usize> = self
                .ready
                .iter()
                .copied()
                .filter(|&u| self.ready_from[u] <= t)
                .collect();
            if c.len() > 1 && self.factories.len() < c.len() {
                let top = c.iter().map(|&u| self.dag.criticality(u)).max().unwrap_or(0);
                c.sort_by_key(|&u| {
                    key(self.policy, false, self.dag.criticality(u), self.op_span(u), top, u as u64)
                });
            }
            c
        };
        let mut any = false;
        for u in candidates {
            let op = &self.circuit.ops()[u];
            let kind = op.kind;
            let (src, dst) = match kind {
                OpKind::Cnot => (
                    self.attach(op.operands.first()),
                    self.attach(op.operands.second().expect("cnot has two operands")),
                ),
                OpKind::T => {
                    let dst = self.attach(op.operands.first());
                    let Some((fi, port)) = self.pick_factory(dst, t) else {
                        continue;
                    };
                    self.factories[fi].ready_at = t + self.magic_period;
                    (port, dst)
                }
                _ => {
                    self.ready.remove(&u);
                    self.start[u] = Some(t);
                    self.log(t, EventKind::Local, u);
                    let lat = self.dag.latency(u).max(1);
                    self.finish_op(u, t + lat - 1);
                    self.serial_next += 1;
                    any = true;
                    continue;
                }
            };
            self.ready.remove(&u);
            self.start[u] = Some(t);
            self.log(t, EventKind::InitAncilla, u);
            let seq = self.bump_seq();
            self.pending.push(Pending {
                op: u,
                stage: 0,
                src,
                dst,
                eligible_at: t + 1,
                wait: 0,
                seq,
            });
            self.serial_next += 1;
            any = true;
        }
        any
    }

    /// Manhattan span of a ready op's future braid, for admission ordering.
    fn op_span(&self, u: usize) -> usize {
        let op = &self.circuit.ops()[u];
        match (op.kind, op.operands.second()) {
            (OpKind::Cnot, Some(b)) => self.attach(op.operands.first()).manhattan(self.attach(b)),
            _ => 0,
        }
    }

    fn open_braids(&mut self, t: u64) -> bool {
        let mut idx: Vec<usize> = (0..self.pending.len())
            .filter(|&i| self.pending[i].eligible_at <= t)
            .collect();
        if idx.is_empty() {
            return false;
        }
        let mut top = [0u64; 2];
        for &i in &idx {
            let p = &self.pending[i];
            let c = self.dag.criticality(p.op);
            let slot = usize::from(p.stage);
            top[slot] = top[slot].max(c);
        }
        idx.sort_by_cached_key(|&i| {
            let p = &self.pending[i];
            key(
                self.policy,
                p.stage == 1,
                self.dag.criticality(p.op),
                p.src.manhattan(p.dst),
                top[usize::from(p.stage)],
                p.seq,
            )
        });

        let mut any = false;
        let mut opened: Vec<usize> = Vec::new();
        for i in idx {
            if self.pending[i].wait >= self.t_drop {
                self.drops += 1;
                let seq = self.bump_seq();
                let p = &mut self.pending[i];
                p.wait = 0;
                p.seq = seq;
                continue;
            }
            let p = &self.pending[i];
            let adaptive = p.wait >= self.t_adapt;
            let mode = if adaptive {
                RouteMode::Adaptive
            } else {
                RouteMode::DimensionOrdered
            };
            let Some(route) = self.mesh.route(p.src, p.dst, mode) else {
                self.pending[i].wait += 1;
                continue;
            };
            let id = self.braids.len();
            self.mesh
                .claim(id, &route)
                .expect("route was checked free this cycle");
            let links = self.mesh.links_of(&route);
            for &l in &links {
                self.link_busy[l] += self.d;
            }
            if adaptive {
                self.adaptive += 1;
            }
            let close_at = t + self.d;
            self.events.push(BraidEvent {
                cycle: t,
                kind: EventKind::OpenBraid,
                op: p.op,
                braid: Some(id),
                route: Some(route.clone()),
            });
            self.braids.push(BraidRecord {
                id,
                op: p.op,
                stage: p.stage,
                route,
                links,
                opened_at: t,
                closed_at: close_at,
                adaptive,
            });
            self.open.push(Open {
                braid: id,
                op: p.op,
                stage: p.stage,
                src: p.src,
                dst: p.dst,
                close_at,
            });
            opened.push(i);
            any = true;
        }
        opened.sort_by_key(|&i| Reverse(i));
        for i in opened {
            self.pending.swap_remove(i);
        }
        // Keep the pending list in a stable order for determinism.
        self.pending.sort_by_key(|p| p.seq);
        any
    }

    /// Recount router ownership of all open braids from their routes.
    fn check_disjoint(&mut self, t: u64) -> Result<(), BraidError> {
        for o in &self.open {
            for r in &self.braids[o.braid].route {
                let id = r.row * self.mesh.router_cols() + r.col;
                let (stamp, owner) = self.audit_router[id];
                if stamp == t && owner != o.braid {
                    return Err(BraidError::Crossing {
                        cycle: t,
                        a: owner,
                        b: o.braid,
                    });
                }
                self.audit_router[id] = (t, o.braid);
            }
        }
        Ok(())
    }

    fn finish(self) -> BraidSchedule {
        let schedule_length = self.done.iter().flatten().map(|&x| x + 1).max().unwrap_or(0);
        let num_links = self.mesh.num_links();
        let busy: u64 = self.link_busy.iter().sum();
        let utilization = if num_links == 0 || schedule_length == 0 {
            0.0
        } else {
            busy as f64 / (num_links as f64 * schedule_length as f64)
        };
        let ops = (0..self.circuit.len())
            .map(|u| OpRecord {
                op: u,
                start: self.start[u].expect("all ops ran"),
                done: self.done[u].expect("all ops ran"),
            })
            .collect();
        BraidSchedule {
            policy: self.policy,
            distance: self.d as u32,
            schedule_length,
            critical_path: self.dag.critical_path_length(),
            router_rows: self.mesh.router_rows(),
            router_cols: self.mesh.router_cols(),
            num_links,
            link_busy: self.link_busy,
            ops,
            braids: self.braids,
            events: self.events,
            stats: BraidStats {
                utilization,
                drops: self.drops,
                adaptive_reroutes: self.adaptive,
            },
        }
    }
}
