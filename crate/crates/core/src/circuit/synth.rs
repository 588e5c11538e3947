//! Layered synthetic workloads with a controllable parallelism factor.
//!
//! The generator lays ops out level by level. Every op on level `l > 0` takes
//! its first operand from the qubits touched on level `l - 1`, which pins its
//! ASAP level to exactly `l`; a CNOT partner is drawn from qubits still free on
//! the level, preferring indices close to the first operand. Level widths are
//! drawn around the target parallelism, so `total_ops / levels` lands near it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LogicalCircuit, OpKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("target parallelism {target} infeasible with {num_qubits} qubits")]
    InfeasibleParallelism { target: f64, num_qubits: usize },
    #[error("t_fraction {0} outside [0, 1]")]
    BadTFraction(f64),
    #[error("cnot_fraction {0} outside [0, 1]")]
    BadCnotFraction(f64),
    #[error("width_spread {0} outside [0, 1]")]
    BadSpread(f64),
}

/// Full knob set for [`synth_workload`]-style generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub num_qubits: usize,
    pub total_ops: usize,
    pub target_parallelism: f64,
    pub t_fraction: f64,
    /// Share of non-T ops that are CNOTs.
    pub cnot_fraction: f64,
    /// Level widths are drawn uniformly in `target * [1 - spread, 1 + spread]`.
    pub width_spread: f64,
    /// CNOT partners are drawn within this index distance of the first
    /// operand when possible. `None` draws uniformly.
    pub locality: Option<usize>,
    /// Single-qubit ops on a level draw from this many kinds, picked per
    /// level. `None` draws from all of them.
    pub level_kinds: Option<usize>,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn new(
        num_qubits: usize,
        total_ops: usize,
        target_parallelism: f64,
        t_fraction: f64,
        seed: u64,
    ) -> Self {
        WorkloadSpec {
            num_qubits,
            total_ops,
            target_parallelism,
            t_fraction,
            cnot_fraction: 0.5,
            width_spread: 0.5,
            locality: Some(4),
            level_kinds: None,
            seed,
        }
    }

    pub fn generate(&self) -> Result<LogicalCircuit, SynthError> {
        generate(self)
    }
}

/// Synthesize a circuit with default mix and locality settings.
pub fn synth_workload(
    num_qubits: usize,
    total_ops: usize,
    target_parallelism: f64,
    t_fraction: f64,
    seed: u64,
) -> Result<LogicalCircuit, SynthError> {
    WorkloadSpec::new(num_qubits, total_ops, target_parallelism, t_fraction, seed).generate()
}

const LOCAL_KINDS: [OpKind; 4] = [OpKind::H, OpKind::X, OpKind::Z, OpKind::S];

fn validate(spec: &WorkloadSpec) -> Result<(), SynthError> {
    let p = spec.target_parallelism;
    if !(p >= 1.0) || p > spec.num_qubits as f64 {
        return Err(SynthError::InfeasibleParallelism {
            target: p,
            num_qubits: spec.num_qubits,
        });
    }
    if !(0.0..=1.0).contains(&spec.t_fraction) {
        return Err(SynthError::BadTFraction(spec.t_fraction));
    }
    if !(0.0..=1.0).contains(&spec.cnot_fraction) {
        return Err(SynthError::BadCnotFraction(spec.cnot_fraction));
    }
    if !(0.0..=1.0).contains(&spec.width_spread) {
        return Err(SynthError::BadSpread(spec.width_spread));
    }
    Ok(())
}

fn level_widths(spec: &WorkloadSpec, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = spec.total_ops;
    let p = spec.target_parallelism;
    let levels = ((n as f64 / p).round() as usize).clamp(1, n.max(1));
    let cap = spec.num_qubits;
    let mut widths: Vec<usize> = (0..levels)
        .map(|_| {
            let s = spec.width_spread;
            let w = p * rng.gen_range((1.0 - s)..=(1.0 + s));
            (w.round() as usize).clamp(1, cap)
        })
        .collect();
    // Rebalance to hit the exact op count while keeping every width in [1, cap].
    let mut total: usize = widths.iter().sum();
    while total != n {
        let i = rng.gen_range(0..levels);
        if total < n && widths[i] < cap {
            widths[i] += 1;
            total += 1;
        } else if total > n && widths[i] > 1 {
            widths[i] -= 1;
            total -= 1;
        } else if widths.iter().all(|&w| w == cap) || widths.iter().all(|&w| w == 1) {
            break;
        }
    }
    widths
}

fn generate(spec: &WorkloadSpec) -> Result<LogicalCircuit, SynthError> {
    let mut circuit = LogicalCircuit::new(spec.num_qubits);
    if spec.total_ops == 0 {
        return Ok(circuit);
    }
    validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let nq = spec.num_qubits;
    let widths = level_widths(spec, &mut rng);

    let mut used_stamp = vec![usize::MAX; nq];
    let mut prev: Vec<usize> = Vec::new();
    let mut remaining = spec.total_ops;
    let mut level = 0usize;
    let mut carry = 0usize;

    while remaining > 0 {
        let planned = widths.get(level).copied().unwrap_or(0) + carry;
        let target = if level >= widths.len() {
            remaining.min(spec.target_parallelism.round().max(1.0) as usize)
        } else {
            planned.min(remaining)
        };
        let mut touched: Vec<usize> = Vec::new();
        let mut pool: Vec<usize> = if level == 0 {
            (0..nq).collect()
        } else {
            prev.clone()
        };
        pool.shuffle(&mut rng);
        let kinds: Vec<OpKind> = match spec.level_kinds {
            Some(m) => LOCAL_KINDS.choose_multiple(&mut rng, m.clamp(1, LOCAL_KINDS.len())).copied().collect(),
            None => LOCAL_KINDS.to_vec(),
        };
        let mut placed = 0usize;

        while placed < target {
            let Some(first) = pool.pop() else { break };
            if used_stamp[first] == level {
                continue;
            }
            let roll: f64 = rng.gen();
            let kind = if roll < spec.t_fraction {
                OpKind::T
            } else if rng.gen::<f64>() < spec.cnot_fraction {
                OpKind::Cnot
            } else {
                *kinds.choose(&mut rng).expect("non-empty")
            };
            used_stamp[first] = level;
            touched.push(first);
            if kind == OpKind::Cnot {
                if let Some(partner) = pick_partner(first, level, &used_stamp, spec.locality, &mut rng) {
                    used_stamp[partner] = level;
                    touched.push(partner);
                    circuit
                        .push(OpKind::Cnot, &[first, partner])
                        .expect("generator operands are valid");
                    placed += 1;
                    continue;
                }
                let fallback = *kinds.choose(&mut rng).expect("non-empty");
                circuit.push(fallback, &[first]).expect("valid operand");
            } else {
                circuit.push(kind, &[first]).expect("valid operand");
            }
            placed += 1;
        }

        carry = if level < widths.len() { planned - placed.min(planned) } else { 0 };
        remaining -= placed;
        prev = touched;
        level += 1;
    }
    Ok(circuit)
}

fn pick_partner(
    first: usize,
    level: usize,
    used_stamp: &[usize],
    locality: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Option<usize> {
    let nq = used_stamp.len();
    let free = |q: usize| used_stamp[q] != level;
    if let Some(w) = locality {
        let lo = first.saturating_sub(w);
        let hi = (first + w).min(nq - 1);
        let near: Vec<usize> = (lo..=hi).filter(|&q| q != first && free(q)).collect();
        if let Some(&q) = near.choose(rng) {
            return Some(q);
        }
    }
    // Uniform over free qubits; rejection sampling first, then a scan.
    for _ in 0..8 {
        let q = rng.gen_range(0..nq);
        if q != first && free(q) {
            return Some(q);
        }
    }
    let free_all: Vec<usize> = (0..nq).filter(|&q| q != first && free(q)).collect();
    free_all.choose(rng).copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_dag, parallelism_profile, LatencyModel};

    fn factor(c: &LogicalCircuit) -> f64 {
        parallelism_profile(&build_dag(c, &LatencyModel::uniform(1))).parallelism_factor
    }

    #[test]
    fn forced_chain() {
        let c = synth_workload(4, 4, 1.0, 0.0, 7).unwrap();
        assert_eq!(c.len(), 4);
        let d = build_dag(&c, &LatencyModel::uniform(1));
        assert_eq!(parallelism_profile(&d).num_levels, 4);
        assert_eq!(d.num_edges(), 3);
    }

    #[test]
    fn sha_like_parallelism() {
        let c = synth_workload(100, 5000, 29.0, 0.2, 1).unwrap();
        assert_eq!(c.len(), 5000);
        let f = factor(&c);
        assert!((24.6..=33.4).contains(&f), "factor {f}");
        let t = c.t_count() as f64 / 5000.0;
        assert!((0.17..0.23).contains(&t), "t share {t}");
    }

    #[test]
    fn im_like_parallelism() {
        let c = synth_workload(200, 6000, 66.0, 0.05, 3).unwrap();
        let f = factor(&c);
        assert!((66.0 * 0.9..=66.0 * 1.1).contains(&f), "factor {f}");
    }

    #[test]
    fn deterministic() {
        let a = synth_workload(50, 1000, 10.0, 0.1, 42).unwrap();
        let b = synth_workload(50, 1000, 10.0, 0.1, 42).unwrap();
        assert_eq!(a.to_qasm().as_bytes(), b.to_qasm().as_bytes());
        let c = synth_workload(50, 1000, 10.0, 0.1, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_infeasible() {
        assert!(matches!(
            synth_workload(4, 100, 8.0, 0.0, 0),
            Err(SynthError::InfeasibleParallelism { .. })
        ));
        assert!(matches!(
            synth_workload(4, 100, 0.5, 0.0, 0),
            Err(SynthError::InfeasibleParallelism { .. })
        ));
        assert!(matches!(
            synth_workload(4, 100, 2.0, 1.5, 0),
            Err(SynthError::BadTFraction(_))
        ));
    }

    #[test]
    fn factor_tracks_target_across_range() {
        for (q, p) in [(8, 1.5), (64, 8.0), (100, 29.0), (160, 50.0), (200, 66.0)] {
            let c = synth_workload(q, 3000, p, 0.1, 5).unwrap();
            let f = factor(&c);
            assert!((f / p - 1.0).abs() <= 0.15, "target {p}: got {f}");
        }
    }
}
