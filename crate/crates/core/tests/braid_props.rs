mod common;

use proptest::prelude::*;
use surfnet::braid::{simulate, BraidOptions, Policy};
use surfnet::circuit::{LogicalCircuit, OpKind};
use surfnet::layout::{tiled_layout, PlaceOptions};

const POLICIES: [Policy; 7] = [Policy::P0, Policy::P1, Policy::P2, Policy::P3, Policy::P4, Policy::P5, Policy::P6];

fn arb_circuit() -> impl Strategy<Value = LogicalCircuit> {
    (2usize..10).prop_flat_map(|nq| {
        let op = (0u8..8, 0..nq, 1..nq).prop_map(move |(k, a, off)| {
            let kind = match k {
                0..=3 => OpKind::Cnot,
                4 => OpKind::T,
                5 => OpKind::H,
                6 => OpKind::S,
                _ => OpKind::Measure,
            };
            (kind, a, (a + off) % nq)
        });
        proptest::collection::vec(op, 1..30).prop_map(move |ops| {
            let mut c = LogicalCircuit::new(nq);
            for (kind, a, b) in ops {
                if kind == OpKind::Cnot {
                    c.push(kind, &[a, b]).unwrap();
                } else {
                    c.push(kind, &[a]).unwrap();
                }
            }
            c
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_policy_passes_the_audit(c in arb_circuit(), d in prop_oneof![Just(3u32), Just(5u32)]) {
        let factories = usize::from(c.t_count() > 0);
        let naive = tiled_layout(&c, factories, 12, false, &PlaceOptions::default()).unwrap();
        let opt = tiled_layout(&c, factories, 12, true, &PlaceOptions::default()).unwrap();
        for policy in POLICIES {
            let p = if policy.uses_optimized_layout() { &opt } else { &naive };
            let s = simulate(&c, p, d, policy, &BraidOptions::default()).unwrap();
            let cycles = common::verify_braid_schedule(&c, p, &s).map_err(TestCaseError::fail)?;
            prop_assert_eq!(cycles, s.schedule_length);
            prop_assert_eq!(s.critical_path, common::critical_path(&c, u64::from(d)));
        }
    }

    #[test]
    fn p0_runs_one_op_at_a_time(c in arb_circuit()) {
        let factories = usize::from(c.t_count() > 0);
        let p = tiled_layout(&c, factories, 12, false, &PlaceOptions::default()).unwrap();
        let s = simulate(&c, &p, 3, Policy::P0, &BraidOptions::default()).unwrap();
        let mut spans: Vec<(u64, u64)> = s.ops.iter().map(|r| (r.start, r.done)).collect();
        spans.sort();
        for w in spans.windows(2) {
            prop_assert!(w[1].0 > w[0].1, "overlap {:?}", w);
        }
    }
}

#[test]
fn simulation_is_deterministic() {
    let c = surfnet::circuit::synth_workload(24, 300, 6.0, 0.1, 11).unwrap();
    let p = tiled_layout(&c, 1, 12, true, &PlaceOptions::default()).unwrap();
    let a = simulate(&c, &p, 3, Policy::P6, &BraidOptions::default()).unwrap();
    let b = simulate(&c, &p, 3, Policy::P6, &BraidOptions::default()).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}
