//! Balanced two-way partitioning with Fiduccia-Mattheyses refinement.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

const MAX_PASSES: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bisection {
    /// `0` or `1` per vertex; exactly `size_a` zeros.
    pub side: Vec<u8>,
    /// Cut weight plus terminal penalties.
    pub cost: i64,
}

/// Split vertices into sides of exactly `size_a` and `n - size_a`.
///
/// `adj[i]` lists `(j, w)` for both directions of every edge. `pull[i] > 0`
/// charges `pull[i]` when `i` lands on side 1, `pull[i] < 0` charges `-pull[i]`
/// on side 0. The best of `restarts` random starts is kept.
pub fn bisect(
    adj: &[Vec<(usize, i64)>],
    pull: &[i64],
    size_a: usize,
    restarts: usize,
    rng: &mut ChaCha8Rng,
) -> Bisection {
    let n = adj.len();
    assert!(size_a <= n);
    let mut best: Option<Bisection> = None;
    for _ in 0..restarts.max(1) {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut side = vec![1u8; n];
        for &i in &order[..size_a] {
            side[i] = 0;
        }
        let mut cost = evaluate(adj, pull, &side);
        if size_a > 0 && size_a < n {
            for _ in 0..MAX_PASSES {
                let next = fm_pass(adj, pull, &mut side, size_a, cost);
                if next >= cost {
                    break;
                }
                cost = next;
            }
        }
        if best.as_ref().is_none_or(|b| cost < b.cost) {
            best = Some(Bisection { side, cost });
        }
    }
    best.expect("at least one restart")
}

pub(crate) fn evaluate(adj: &[Vec<(usize, i64)>], pull: &[i64], side: &[u8]) -> i64 {
    let mut cost = 0;
    for (i, nbrs) in adj.iter().enumerate() {
        for &(j, w) in nbrs {
            if i < j && side[i] != side[j] {
                cost += w;
            }
        }
        cost += terminal(pull[i], side[i]);
    }
    cost
}

fn terminal(pull: i64, side: u8) -> i64 {
    match side {
        0 => (-pull).max(0),
        _ => pull.max(0),
    }
}

fn gain(adj: &[Vec<(usize, i64)>], pull: &[i64], side: &[u8], i: usize) -> i64 {
    let mut g = terminal(pull[i], side[i]) - terminal(pull[i], 1 - side[i]);
    for &(j, w) in &adj[i] {
        if side[j] == side[i] {
            g -= w;
        } else {
            g += w;
        }
    }
    g
}

/// One FM pass; rolls back to the cheapest balanced prefix and returns its cost.
fn fm_pass(adj: &[Vec<(usize, i64)>], pull: &[i64], side: &mut [u8], size_a: usize, start: i64) -> i64 {
    let n = side.len();
    let mut gains: Vec<i64> = (0..n).map(|i| gain(adj, pull, side, i)).collect();
    let mut buckets: [BTreeSet<(i64, usize)>; 2] = [BTreeSet::new(), BTreeSet::new()];
    for i in 0..n {
        buckets[side[i] as usize].insert((gains[i], i));
    }
    let mut locked = vec![false; n];
    let mut count_a = side.iter().filter(|&&s| s == 0).count();
    let mut cost = start;
    let mut best = (start, 0usize);
    let mut moves: Vec<usize> = Vec::new();

    loop {
        let from = if count_a > size_a {
            0
        } else if count_a < size_a {
            1
        } else {
            match (buckets[0].last(), buckets[1].last()) {
                (Some(a), Some(b)) => usize::from(b.0 > a.0),
                (Some(_), None) => 0,
                (None, Some(_)) => 1,
                (None, None) => break,
            }
        };
        let Some((g, i)) = buckets[from].pop_last() else {
            break;
        };
        side[i] = 1 - side[i];
        locked[i] = true;
        cost -= g;
        if from == 0 {
            count_a -= 1;
        } else {
            count_a += 1;
        }
        moves.push(i);
        for &(j, w) in &adj[i] {
            if locked[j] {
                continue;
            }
            let sj = side[j] as usize;
            buckets[sj].remove(&(gains[j], j));
            if side[j] == side[i] {
                gains[j] -= 2 * w;
            } else {
                gains[j] += 2 * w;
            }
            buckets[sj].insert((gains[j], j));
        }
        if count_a == size_a && cost < best.0 {
            best = (cost, moves.len());
        }
    }
    for &i in moves[best.1..].iter() {
        side[i] = 1 - side[i];
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn sym(n: usize, edges: &[(usize, usize, i64)]) -> Vec<Vec<(usize, i64)>> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v, w) in edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        adj
    }

    #[test]
    fn reported_cost_is_exact_and_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..30 {
            let n = rng.gen_range(2..14);
            let edges: Vec<_> = (0..n * 2)
                .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(1..5)))
                .filter(|(u, v, _)| u != v)
                .collect();
            let adj = sym(n, &edges);
            let pull: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..4)).collect();
            let na = rng.gen_range(0..=n);
            let b = bisect(&adj, &pull, na, 4, &mut rng);
            assert_eq!(b.side.iter().filter(|&&s| s == 0).count(), na);
            assert_eq!(b.cost, evaluate(&adj, &pull, &b.side));
        }
    }

    #[test]
    fn matches_exhaustive_on_small_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..30 {
            let n = 8;
            let edges: Vec<_> = (0..12)
                .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(1..4)))
                .filter(|(u, v, _)| u != v)
                .collect();
            let adj = sym(n, &edges);
            let pull = vec![0; n];
            let b = bisect(&adj, &pull, 4, 8, &mut rng);
            let mut opt = i64::MAX;
            for mask in 0u32..(1 << n) {
                if mask.count_ones() != 4 {
                    continue;
                }
                let side: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
                opt = opt.min(evaluate(&adj, &pull, &side));
            }
            assert!(b.cost <= opt + 1, "fm {} vs optimum {opt}", b.cost);
        }
    }
}
