// SPDX-License-Identifier: Apache-2.0

use htgen::harness::{baseline_insert, build_training_set, generate, BaselineConfig, GeneratorConfig, TrainConfig, TrainingSample};
use htgen::insert::{insert, InsertionConfig, TrojanTemplate};
use htgen::validate::verify_inserted;

fn host() -> htgen::netlist::Netlist {
    generate(&GeneratorConfig { name: "h".into(), gates: 300, seed: 4, ..Default::default() }).unwrap()
}

#[test]
fn baseline_trojans_verify_without_a_supplied_witness() {
    let h = host();
    for id in ["c1", "s1"] {
        let t = TrojanTemplate::builtin(id).unwrap();
        let cfg = BaselineConfig { theta: 0.02, r: t.r(), count: 12, vectors: 20_000, ..Default::default() };
        let suite = baseline_insert(&h, &t, &cfg).unwrap();
        assert_eq!(suite.len(), 12);
        for (i, (n, rep)) in suite.iter().enumerate() {
            let v = verify_inserted(&h, n, &rep.condition(), None, 4096, 900 + i as u64).unwrap();
            assert!(v.passed(), "{id} #{i}: {v:?}");
        }
    }
}

#[test]
fn learned_insertion_emits_requested_count() {
    let h = host();
    let t = TrojanTemplate::builtin("c2").unwrap();
    let cfg = BaselineConfig { theta: 0.02, r: t.r(), count: 30, vectors: 20_000, ..Default::default() };
    let samples: Vec<TrainingSample> = baseline_insert(&h, &t, &cfg).unwrap().into_iter().map(Into::into).collect();
    let ts = build_training_set(&h, "c2", &samples, &TrainConfig { vectors: 5000, ..Default::default() }).unwrap();
    assert!(!ts.bundles.is_empty());
    let icfg = InsertionConfig { num_trojans: 3, vectors: 5000, ..Default::default() };
    let out = insert(&h, &t, &ts.bundles[0], &icfg).unwrap();
    assert_eq!(out.netlists.len(), 3);
    assert_eq!(out.ledger.target, 60);
    assert!(out.shortfall.is_none());
    let again = insert(&h, &t, &ts.bundles[0], &icfg).unwrap();
    assert_eq!(
        serde_json::to_string(&out.reports).unwrap(),
        serde_json::to_string(&again.reports).unwrap()
    );
}
