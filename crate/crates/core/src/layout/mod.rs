//! Interaction-aware placement of logical qubits onto a tile grid.

mod partition;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{LogicalCircuit, OpKind};

pub use partition::{bisect, Bisection};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("grid {rows}x{cols} has {available} free tiles but {needed} are needed")]
    InsufficientArea {
        rows: usize,
        cols: usize,
        needed: usize,
        available: usize,
    },
    #[error("vertex {0} is not placed")]
    Unplaced(usize),
    #[error("tile ({0}, {1}) is outside the grid")]
    OutOfGrid(usize, usize),
    #[error("tile ({0}, {1}) holds more than one occupant")]
    Collision(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Tile {
    pub row: usize,
    pub col: usize,
}

impl Tile {
    pub const fn new(row: usize, col: usize) -> Self {
        Tile { row, col }
    }

    pub fn manhattan(self, other: Tile) -> u64 {
        (self.row.abs_diff(other.row) + self.col.abs_diff(other.col)) as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
}

impl Grid {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Grid { rows, cols }
    }

    pub fn area(&self) -> usize {
        self.rows * self.cols
    }

    /// Squarest grid holding at least `tiles` tiles.
    pub fn squarest(tiles: usize) -> Self {
        let tiles = tiles.max(1);
        let cols = (tiles as f64).sqrt().ceil() as usize;
        let rows = tiles.div_ceil(cols);
        Grid { rows, cols }
    }

    pub fn contains(&self, t: Tile) -> bool {
        t.row < self.rows && t.col < self.cols
    }

    pub fn tiles(&self) -> impl Iterator<Item = Tile> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| Tile::new(r, c)))
    }

    /// Tiles ordered ring by ring from the boundary inwards, each ring
    /// walked clockwise from its north-west corner.
    pub fn rings(&self) -> Vec<Vec<Tile>> {
        let mut out = Vec::new();
        let (mut r0, mut c0) = (0usize, 0usize);
        let (mut r1, mut c1) = (self.rows, self.cols);
        while r0 < r1 && c0 < c1 {
            let mut ring = Vec::new();
            for c in c0..c1 {
                ring.push(Tile::new(r0, c));
            }
            for r in r0 + 1..r1 {
                ring.push(Tile::new(r, c1 - 1));
            }
            if r1 - r0 > 1 {
                for c in (c0..c1 - 1).rev() {
                    ring.push(Tile::new(r1 - 1, c));
                }
            }
            if c1 - c0 > 1 {
                for r in (r0 + 1..r1 - 1).rev() {
                    ring.push(Tile::new(r, c0));
                }
            }
            out.push(ring);
            r0 += 1;
            c0 += 1;
            r1 -= 1;
            c1 -= 1;
        }
        out
    }
}

/// Weighted qubit interaction graph plus a factory pool super-vertex.
///
/// Vertex ids `0..num_qubits` are logical qubits; id `num_qubits` is the
/// factory pool, whose edge weight to a qubit is that qubit's T count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionGraph {
    num_qubits: usize,
    adj: Vec<BTreeMap<usize, u64>>,
    factory_weight: Vec<u64>,
}

impl InteractionGraph {
    pub fn new(num_qubits: usize) -> Self {
        InteractionGraph {
            num_qubits,
            adj: vec![BTreeMap::new(); num_qubits],
            factory_weight: vec![0; num_qubits],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn factory_vertex(&self) -> usize {
        self.num_qubits
    }

    pub fn add_edge(&mut self, u: usize, v: usize, w: u64) {
        if u == v || w == 0 {
            return;
        }
        let f = self.factory_vertex();
        if v == f {
            self.factory_weight[u] += w;
        } else if u == f {
            self.factory_weight[v] += w;
        } else {
            *self.adj[u].entry(v).or_insert(0) += w;
            *self.adj[v].entry(u).or_insert(0) += w;
        }
    }

    pub fn weight(&self, u: usize, v: usize) -> u64 {
        let f = self.factory_vertex();
        match (u == f, v == f) {
            (true, true) => 0,
            (true, false) => self.factory_weight[v],
            (false, true) => self.factory_weight[u],
            (false, false) => self.adj[u].get(&v).copied().unwrap_or(0),
        }
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.adj[u].iter().map(|(&v, &w)| (v, w))
    }

    pub fn factory_weight(&self, u: usize) -> u64 {
        self.factory_weight[u]
    }

    /// Every present edge once, `(u, v, w)` with `u < v`; factory edges use
    /// the pool id as `v`.
    pub fn edges(&self) -> Vec<(usize, usize, u64)> {
        let mut out = Vec::new();
        for u in 0..self.num_qubits {
            for (&v, &w) in &self.adj[u] {
                if u < v {
                    out.push((u, v, w));
                }
            }
            if self.factory_weight[u] > 0 {
                out.push((u, self.factory_vertex(), self.factory_weight[u]));
            }
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.edges().is_empty()
    }
}

/// Tally CNOT pairs and per-qubit T counts.
pub fn extract_interactions(c: &LogicalCircuit) -> InteractionGraph {
    let mut g = InteractionGraph::new(c.num_qubits());
    for op in c.ops() {
        match (op.kind, op.operands.second()) {
            (OpKind::Cnot, Some(b)) => g.add_edge(op.operands.first(), b, 1),
            (OpKind::T, _) => g.add_edge(op.operands.first(), g.factory_vertex(), 1),
            _ => {}
        }
    }
    g
}

/// Logical-qubit to tile assignment with reserved factory regions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub grid: Grid,
    pub qubit_tiles: Vec<Tile>,
    pub factories: Vec<Vec<Tile>>,
}

impl Placement {
    pub fn tile_of(&self, q: usize) -> Tile {
        self.qubit_tiles[q]
    }

    pub fn num_qubits(&self) -> usize {
        self.qubit_tiles.len()
    }

    /// Factory tile closest to `t` over all factories, ties by factory then
    /// tile order. Returns `(factory index, tile)`.
    pub fn nearest_factory_tile(&self, t: Tile) -> Option<(usize, Tile)> {
        let mut best: Option<(u64, usize, Tile)> = None;
        for (fi, tiles) in self.factories.iter().enumerate() {
            for &ft in tiles {
                let dist = ft.manhattan(t);
                if best.is_none_or(|(bd, _, _)| dist < bd) {
                    best = Some((dist, fi, ft));
                }
            }
        }
        best.map(|(_, fi, ft)| (fi, ft))
    }

    /// Nearest tile of one particular factory.
    pub fn factory_port(&self, factory: usize, t: Tile) -> Tile {
        *self.factories[factory]
            .iter()
            .min_by_key(|ft| (ft.manhattan(t), **ft))
            .expect("factories have tiles")
    }

    /// Check injectivity, bounds and factory disjointness.
    pub fn validate(&self) -> Result<(), LayoutError> {
        let mut seen = vec![false; self.grid.area()];
        let all = self
            .qubit_tiles
            .iter()
            .chain(self.factories.iter().flatten());
        for &t in all {
            if !self.grid.contains(t) {
                return Err(LayoutError::OutOfGrid(t.row, t.col));
            }
            let idx = t.row * self.grid.cols + t.col;
            if seen[idx] {
                return Err(LayoutError::Collision(t.row, t.col));
            }
            seen[idx] = true;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dims": { "rows": self.grid.rows, "cols": self.grid.cols },
            "assignments": self
                .qubit_tiles
                .iter()
                .enumerate()
                .map(|(q, t)| serde_json::json!({ "qubit": q, "row": t.row, "col": t.col }))
                .collect::<Vec<_>>(),
            "factories": self
                .factories
                .iter()
                .map(|tiles| tiles.iter().map(|t| [t.row, t.col]).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, serde_json::Error> {
        #[derive(Deserialize)]
        struct Assign {
            qubit: usize,
            row: usize,
            col: usize,
        }
        #[derive(Deserialize)]
        struct Raw {
            dims: Grid,
            assignments: Vec<Assign>,
            factories: Vec<Vec<[usize; 2]>>,
        }
        let raw: Raw = serde_json::from_value(v.clone())?;
        let mut tiles = vec![Tile::new(0, 0); raw.assignments.len()];
        for a in raw.assignments {
            if a.qubit < tiles.len() {
                tiles[a.qubit] = Tile::new(a.row, a.col);
            }
        }
        Ok(Placement {
            grid: raw.dims,
            qubit_tiles: tiles,
            factories: raw
                .factories
                .into_iter()
                .map(|f| f.into_iter().map(|[r, c]| Tile::new(r, c)).collect())
                .collect(),
        })
    }
}

/// Reserve `count` factory regions of `size` tiles along the grid boundary.
///
/// Factories start at evenly spaced offsets of the outer ring and take
/// consecutive ring tiles; when the outer ring is too short the remaining
/// tiles come from inner rings in ring order.
pub fn reserve_factories(grid: Grid, count: usize, size: usize) -> Result<Vec<Vec<Tile>>, LayoutError> {
    if count == 0 || size == 0 {
        return Ok(Vec::new());
    }
    let needed = count * size;
    if needed > grid.area() {
        return Err(LayoutError::InsufficientArea {
            rows: grid.rows,
            cols: grid.cols,
            needed,
            available: grid.area(),
        });
    }
    let rings = grid.rings();
    let outer = &rings[0];
    if needed <= outer.len() {
        let len = outer.len();
        return Ok((0..count)
            .map(|i| {
                let start = i * len / count;
                (0..size).map(|k| outer[(start + k) % len]).collect()
            })
            .collect());
    }
    let order: Vec<Tile> = rings.into_iter().flatten().collect();
    Ok(order[..needed].chunks(size).map(<[Tile]>::to_vec).collect())
}

/// Grid sized for `qubits` data tiles plus the given factories.
pub fn grid_for(qubits: usize, factories: usize, factory_size: usize) -> Grid {
    Grid::squarest(qubits + factories * factory_size)
}

fn free_tiles(grid: Grid, factories: &[Vec<Tile>]) -> Vec<Tile> {
    let mut reserved = vec![false; grid.area()];
    for t in factories.iter().flatten() {
        reserved[t.row * grid.cols + t.col] = true;
    }
    grid.tiles()
        .filter(|t| !reserved[t.row * grid.cols + t.col])
        .collect()
}

fn check_area(grid: Grid, free: usize, needed: usize) -> Result<(), LayoutError> {
    if free < needed {
        return Err(LayoutError::InsufficientArea {
            rows: grid.rows,
            cols: grid.cols,
            needed,
            available: free,
        });
    }
    Ok(())
}

/// Row-major placement in qubit-index order, skipping factory tiles.
pub fn naive_place(num_qubits: usize, grid: Grid, factories: Vec<Vec<Tile>>) -> Result<Placement, LayoutError> {
    let free = free_tiles(grid, &factories);
    check_area(grid, free.len(), num_qubits)?;
    Ok(Placement {
        grid,
        qubit_tiles: free[..num_qubits].to_vec(),
        factories,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlaceOptions {
    /// Random initial cuts tried per bisection; the lowest cut wins.
    pub restarts: usize,
    pub seed: u64,
    /// Grids with at most this many tiles get a final pairwise-swap polish.
    pub polish_limit: usize,
    /// Polished grids also try this many runs in total, the extra ones from
    /// random starts; the cheapest wins.
    pub attempts: usize,
}

impl Default for PlaceOptions {
    fn default() -> Self {
        PlaceOptions {
            restarts: 8,
            seed: 0,
            polish_limit: 400,
            attempts: 4,
        }
    }
}

/// Recursive-bisection placement minimizing weighted Manhattan distance.
pub fn place(
    g: &InteractionGraph,
    grid: Grid,
    factories: Vec<Vec<Tile>>,
    opts: &PlaceOptions,
) -> Result<Placement, LayoutError> {
    let n = g.num_qubits();
    let free = free_tiles(grid, &factories);
    check_area(grid, free.len(), n)?;
    let factory_tiles: Vec<Tile> = factories.iter().flatten().copied().collect();
    let polished = free.len() <= opts.polish_limit;
    let attempts = if polished { opts.attempts.max(1) } else { 1 };
    let mut best: Option<(u64, Vec<Tile>)> = None;
    for a in 0..attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(a as u64));
        let mut tiles = if a == 0 {
            split_place(g, grid, &free, &factory_tiles, opts.restarts, &mut rng)?
        } else {
            let mut t = free.clone();
            t.shuffle(&mut rng);
            t.truncate(n);
            t
        };
        if polished {
            polish(g, &mut tiles, &free, &factory_tiles);
        }
        let cost = (0..n).map(|u| vertex_cost(g, u, tiles[u], &tiles, &factory_tiles)).sum();
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, tiles));
        }
    }
    let qubit_tiles = best.map(|(_, t)| t).unwrap_or_default();
    let p = Placement {
        grid,
        qubit_tiles,
        factories,
    };
    p.validate()?;
    Ok(p)
}

fn split_place(
    g: &InteractionGraph,
    grid: Grid,
    free: &[Tile],
    factory_tiles: &[Tile],
    restarts: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Tile>, LayoutError> {
    let n = g.num_qubits();
    let cy = (grid.rows as f64 - 1.0) / 2.0;
    let cx = (grid.cols as f64 - 1.0) / 2.0;
    let mut ctx = Ctx {
        g,
        pos: vec![(cy, cx); n],
        assigned: vec![None; n],
        factory_tiles,
        restarts: restarts.max(1),
    };
    ctx.recurse((0..n).collect(), free.to_vec(), rng);
    ctx.assigned
        .iter()
        .enumerate()
        .map(|(q, t)| t.ok_or(LayoutError::Unplaced(q)))
        .collect()
}

struct Ctx<'a> {
    g: &'a InteractionGraph,
    pos: Vec<(f64, f64)>,
    assigned: Vec<Option<Tile>>,
    factory_tiles: &'a [Tile],
    restarts: usize,
}

fn centroid(tiles: &[Tile]) -> (f64, f64) {
    let n = tiles.len() as f64;
    let r = tiles.iter().map(|t| t.row as f64).sum::<f64>() / n;
    let c = tiles.iter().map(|t| t.col as f64).sum::<f64>() / n;
    (r, c)
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

impl Ctx<'_> {
    fn nearest_factory(&self, p: (f64, f64)) -> Option<f64> {
        self.factory_tiles
            .iter()
            .map(|t| dist(p, (t.row as f64, t.col as f64)))
            .min_by(f64::total_cmp)
    }

    fn recurse(&mut self, verts: Vec<usize>, mut tiles: Vec<Tile>, rng: &mut ChaCha8Rng) {
        if verts.is_empty() {
            return;
        }
        if verts.len() == 1 {
            let u = verts[0];
            let best = *tiles
                .iter()
                .min_by(|a, b| {
                    self.tile_cost(u, **a)
                        .total_cmp(&self.tile_cost(u, **b))
                        .then(a.cmp(b))
                })
                .expect("area checked");
            self.assigned[u] = Some(best);
            self.pos[u] = (best.row as f64, best.col as f64);
            return;
        }

        let (rmin, rmax) = min_max(tiles.iter().map(|t| t.row));
        let (cmin, cmax) = min_max(tiles.iter().map(|t| t.col));
        if rmax - rmin >= cmax - cmin {
            tiles.sort_by_key(|t| (t.row, t.col));
        } else {
            tiles.sort_by_key(|t| (t.col, t.row));
        }
        let tb = tiles.split_off(tiles.len() / 2);
        let ta = tiles;
        let n = verts.len();
        let mut na = n * ta.len() / (ta.len() + tb.len());
        let mut nb = n - na;
        if nb > tb.len() {
            nb = tb.len();
            na = n - nb;
        }
        let ca = centroid(&ta);
        let cb = centroid(&tb);

        // Terminal pulls: neighbours outside this subproblem and the factory
        // pool count as fixed vertices on whichever half is nearer to them.
        let mut local = vec![usize::MAX; self.g.num_qubits()];
        for (i, &u) in verts.iter().enumerate() {
            local[u] = i;
        }
        let mut edges: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
        let mut pull = vec![0i64; n];
        for (i, &u) in verts.iter().enumerate() {
            for (v, w) in self.g.neighbors(u) {
                let w = w as i64;
                if local[v] != usize::MAX {
                    edges[i].push((local[v], w));
                } else {
                    let p = self.pos[v];
                    pull[i] += w * side_sign(dist(p, ca), dist(p, cb));
                }
            }
            let fw = self.g.factory_weight(u) as i64;
            if fw > 0 {
                if let (Some(da), Some(db)) = (
                    self.nearest_factory(ca),
                    self.nearest_factory(cb),
                ) {
                    pull[i] += fw * side_sign(da, db);
                }
            }
        }

        let cut = bisect(&edges, &pull, na, self.restarts, rng);
        let (mut va, mut vb) = (Vec::with_capacity(na), Vec::with_capacity(nb));
        for (i, &u) in verts.iter().enumerate() {
            if cut.side[i] == 0 {
                va.push(u);
                self.pos[u] = ca;
            } else {
                vb.push(u);
                self.pos[u] = cb;
            }
        }
        self.recurse(va, ta, rng);
        self.recurse(vb, tb, rng);
    }

    fn tile_cost(&self, u: usize, t: Tile) -> f64 {
        let p = (t.row as f64, t.col as f64);
        let mut c: f64 = self
            .g
            .neighbors(u)
            .map(|(v, w)| w as f64 * dist(p, self.pos[v]))
            .sum();
        let fw = self.g.factory_weight(u);
        if fw > 0 {
            c += fw as f64 * self.nearest_factory(p).unwrap_or(0.0);
        }
        c
    }
}

/// +1 pulls toward side A (index 0), -1 toward B, 0 on ties.
fn side_sign(da: f64, db: f64) -> i64 {
    if da < db {
        1
    } else if db < da {
        -1
    } else {
        0
    }
}

fn min_max(it: impl Iterator<Item = usize>) -> (usize, usize) {
    it.fold((usize::MAX, 0), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

fn vertex_cost(g: &InteractionGraph, u: usize, t: Tile, tiles: &[Tile], factory: &[Tile]) -> u64 {
    let mut c: u64 = g.neighbors(u).map(|(v, w)| w * t.manhattan(tiles[v])).sum();
    let fw = g.factory_weight(u);
    if fw > 0 {
        c += fw * factory.iter().map(|f| f.manhattan(t)).min().unwrap_or(0);
    }
    c
}

/// Greedy pairwise swaps (and moves into empty tiles) until no swap helps.
fn polish(g: &InteractionGraph, tiles: &mut [Tile], free: &[Tile], factory: &[Tile]) {
    let mut occupant: BTreeMap<Tile, usize> = tiles.iter().enumerate().map(|(q, &t)| (t, q)).collect();
    for _pass in 0..20 {
        let mut improved = false;
        for u in 0..tiles.len() {
            for &t in free {
                let tu = tiles[u];
                if t == tu {
                    continue;
                }
                let other = occupant.get(&t).copied();
                let before = vertex_cost(g, u, tu, tiles, factory)
                    + other.map_or(0, |v| vertex_cost(g, v, t, tiles, factory));
                tiles[u] = t;
                if let Some(v) = other {
                    tiles[v] = tu;
                }
                let after = vertex_cost(g, u, t, tiles, factory)
                    + other.map_or(0, |v| vertex_cost(g, v, tu, tiles, factory));
                // A u-v edge is counted twice on both sides, so the comparison stays exact.
                if after < before {
                    occupant.remove(&tu);
                    occupant.insert(t, u);
                    if let Some(v) = other {
                        occupant.insert(tu, v);
                    }
                    improved = true;
                } else {
                    tiles[u] = tu;
                    if let Some(v) = other {
                        tiles[v] = t;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// `sum weight(u, v) * manhattan(tile_u, tile_v)`; factory-pool edges use the
/// distance to the nearest factory tile.
pub fn placement_cost(g: &InteractionGraph, p: &Placement) -> Result<u64, LayoutError> {
    if p.qubit_tiles.len() < g.num_qubits() {
        return Err(LayoutError::Unplaced(p.qubit_tiles.len()));
    }
    let factory: Vec<Tile> = p.factories.iter().flatten().copied().collect();
    let mut total = 0u64;
    for (u, v, w) in g.edges() {
        let tu = p.qubit_tiles[u];
        let d = if v == g.factory_vertex() {
            match factory.iter().map(|f| f.manhattan(tu)).min() {
                Some(d) => d,
                None => return Err(LayoutError::Unplaced(v)),
            }
        } else {
            tu.manhattan(p.qubit_tiles[v])
        };
        total += w * d;
    }
    Ok(total)
}

/// Grid, factory reservation and placement in one step.
///
/// `optimized = false` gives the row-major placement.
pub fn tiled_layout(
    c: &LogicalCircuit,
    factories: usize,
    factory_size: usize,
    optimized: bool,
    opts: &PlaceOptions,
) -> Result<Placement, LayoutError> {
    let grid = grid_for(c.num_qubits(), factories, factory_size);
    let regions = reserve_factories(grid, factories, factory_size)?;
    if optimized {
        place(&extract_interactions(c), grid, regions, opts)
    } else {
        naive_place(c.num_qubits(), grid, regions)
    }
}
