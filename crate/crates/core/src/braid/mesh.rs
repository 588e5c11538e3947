use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::layout::{Grid, Tile};

/// Router coordinate on the tile-corner grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Router {
    pub row: usize,
    pub col: usize,
}

impl Router {
    pub const fn new(row: usize, col: usize) -> Self {
        Router { row, col }
    }

    /// North-west corner of a tile.
    pub fn attach(t: Tile) -> Self {
        Router::new(t.row, t.col)
    }

    pub fn manhattan(self, o: Router) -> usize {
        self.row.abs_diff(o.row) + self.col.abs_diff(o.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RouteMode {
    DimensionOrdered,
    Adaptive,
}

/// Corner routers of a tile grid joined by nearest-neighbour links, with
/// per-router and per-link claim state.
#[derive(Clone, Debug)]
pub struct RouterMesh {
    rows: usize,
    cols: usize,
    router_owner: Vec<Option<usize>>,
    link_owner: Vec<Option<usize>>,
}

impl RouterMesh {
    /// Mesh for a `rows x cols` tile grid: `(rows + 1) x (cols + 1)` routers.
    pub fn for_grid(g: Grid) -> Self {
        Self::with_routers(g.rows + 1, g.cols + 1)
    }

    pub fn with_routers(rows: usize, cols: usize) -> Self {
        let links = rows * cols.saturating_sub(1) + rows.saturating_sub(1) * cols;
        RouterMesh {
            rows,
            cols,
            router_owner: vec![None; rows * cols],
            link_owner: vec![None; links],
        }
    }

    pub fn router_rows(&self) -> usize {
        self.rows
    }

    pub fn router_cols(&self) -> usize {
        self.cols
    }

    pub fn num_routers(&self) -> usize {
        self.router_owner.len()
    }

    pub fn num_links(&self) -> usize {
        self.link_owner.len()
    }

    pub fn contains(&self, r: Router) -> bool {
        r.row < self.rows && r.col < self.cols
    }

    fn rid(&self, r: Router) -> usize {
        r.row * self.cols + r.col
    }

    /// Link index between two adjacent routers. Horizontal links come first,
    /// row-major, then vertical links.
    pub fn link_id(&self, a: Router, b: Router) -> Option<usize> {
        if !self.contains(a) || !self.contains(b) || a.manhattan(b) != 1 {
            return None;
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        if a.row == b.row {
            Some(a.row * (self.cols - 1) + a.col)
        } else {
            Some(self.rows * (self.cols - 1) + a.row * self.cols + a.col)
        }
    }

    /// Links along a router path.
    pub fn links_of(&self, path: &[Router]) -> Vec<usize> {
        path.windows(2)
            .map(|w| self.link_id(w[0], w[1]).expect("path steps are adjacent"))
            .collect()
    }

    pub fn router_owner(&self, r: Router) -> Option<usize> {
        self.router_owner[self.rid(r)]
    }

    pub fn link_owner(&self, link: usize) -> Option<usize> {
        self.link_owner[link]
    }

    pub fn is_free(&self, r: Router) -> bool {
        self.router_owner(r).is_none()
    }

    fn step_free(&self, a: Router, b: Router) -> bool {
        self.is_free(b) && self.link_id(a, b).is_some_and(|l| self.link_owner[l].is_none())
    }

    /// Claim every router and link of `path` for `braid`.
    ///
    /// Fails without side effects if anything on the path is already held.
    pub fn claim(&mut self, braid: usize, path: &[Router]) -> Result<(), Router> {
        for (i, &r) in path.iter().enumerate() {
            if !self.contains(r) || !self.is_free(r) {
                return Err(r);
            }
            if i > 0 && !self.step_free(path[i - 1], r) {
                return Err(r);
            }
        }
        for &r in path {
            let id = self.rid(r);
            self.router_owner[id] = Some(braid);
        }
        for l in self.links_of(path) {
            self.link_owner[l] = Some(braid);
        }
        Ok(())
    }

    pub fn release(&mut self, braid: usize, path: &[Router]) {
        for &r in path {
            let id = self.rid(r);
            if self.router_owner[id] == Some(braid) {
                self.router_owner[id] = None;
            }
        }
        for l in self.links_of(path) {
            if self.link_owner[l] == Some(braid) {
                self.link_owner[l] = None;
            }
        }
    }

    /// X-then-Y router path, ignoring claims.
    pub fn xy_path(src: Router, dst: Router) -> Vec<Router> {
        let mut path = vec![src];
        let mut cur = src;
        while cur.col != dst.col {
            cur.col = if dst.col > cur.col { cur.col + 1 } else { cur.col - 1 };
            path.push(cur);
        }
        while cur.row != dst.row {
            cur.row = if dst.row > cur.row { cur.row + 1 } else { cur.row - 1 };
            path.push(cur);
        }
        path
    }

    /// Free route from `src` to `dst`, or `None` when blocked.
    ///
    /// Adaptive mode returns a shortest free path found breadth-first, and
    /// accepts it only if it is at most twice the Manhattan distance.
    pub fn route(&self, src: Router, dst: Router, mode: RouteMode) -> Option<Vec<Router>> {
        if !self.contains(src) || !self.contains(dst) || !self.is_free(src) || !self.is_free(dst) {
            return None;
        }
        match mode {
            RouteMode::DimensionOrdered => {
                let p = Self::xy_path(src, dst);
                p.windows(2).all(|w| self.step_free(w[0], w[1])).then_some(p)
            }
            RouteMode::Adaptive => {
                let limit = 2 * src.manhattan(dst);
                let p = self.bfs(src, dst)?;
                (p.len() - 1 <= limit).then_some(p)
            }
        }
    }

    fn bfs(&self, src: Router, dst: Router) -> Option<Vec<Router>> {
        let mut prev: Vec<Option<usize>> = vec![None; self.num_routers()];
        let mut seen = vec![false; self.num_routers()];
        let mut q = VecDeque::new();
        seen[self.rid(src)] = true;
        q.push_back(src);
        while let Some(cur) = q.pop_front() {
            if cur == dst {
                let mut path = vec![dst];
                let mut at = self.rid(dst);
                while let Some(p) = prev[at] {
                    path.push(Router::new(p / self.cols, p % self.cols));
                    at = p;
                }
                path.reverse();
                return Some(path);
            }
            for nb in self.toward(cur, dst) {
                let id = self.rid(nb);
                if !seen[id] && self.step_free(cur, nb) {
                    seen[id] = true;
                    prev[id] = Some(self.rid(cur));
                    q.push_back(nb);
                }
            }
        }
        None
    }

    /// Neighbours of `r`, moves that close the column gap first, then the
    /// row gap, then the rest.
    fn toward(&self, r: Router, dst: Router) -> Vec<Router> {
        let mut out = Vec::with_capacity(4);
        let mut push = |row: Option<usize>, col: Option<usize>| {
            if let (Some(row), Some(col)) = (row, col) {
                let n = Router::new(row, col);
                if self.contains(n) && !out.contains(&n) {
                    out.push(n);
                }
            }
        };
        let left = r.col.checked_sub(1);
        let right = Some(r.col + 1);
        let up = r.row.checked_sub(1);
        let down = Some(r.row + 1);
        let (cfwd, cback) = if dst.col >= r.col { (right, left) } else { (left, right) };
        let (rfwd, rback) = if dst.row >= r.row { (down, up) } else { (up, down) };
        push(Some(r.row), cfwd);
        push(rfwd, Some(r.col));
        push(rback, Some(r.col));
        push(Some(r.row), cback);
        out
    }
}
