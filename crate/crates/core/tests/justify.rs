// SPDX-License-Identifier: Apache-2.0

use htgen::harness::{generate, GeneratorConfig};
use htgen::validate::{justify, replay, TriggerCondition, Witness};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn justify_matches_exhaustive_search(
        seed in 0u64..100_000,
        inputs in 4usize..=10,
        gates in 4usize..40,
        picks in prop::collection::vec((any::<prop::sample::Index>(), any::<bool>()), 1..=3),
    ) {
        let n = generate(&GeneratorConfig {
            name: "cone".into(), gates, inputs, dff_fraction: 0.0, decoders: 1, decoder_width: 4, seed,
            ..Default::default()
        }).unwrap();
        let internal: Vec<_> = n.net_ids().filter(|&id| n.driver_cell(id).is_some()).collect();
        let mut cond: Vec<(String, bool)> = picks
            .iter()
            .map(|(i, b)| (n.net_name(internal[i.index(internal.len())]).to_string(), *b))
            .collect();
        cond.sort();
        cond.dedup_by(|x, y| x.0 == y.0);
        let tc = TriggerCondition::new(cond).unwrap();
        let sources = n.sources();
        let exists = (0..1u64 << sources.len()).any(|p| {
            let w: Witness = sources.iter().enumerate().map(|(k, &s)| (n.net_name(s).to_string(), p >> k & 1 == 1)).collect();
            tc.holds(&n, &replay(&n, &w)).unwrap()
        });
        let j = justify(&n, &tc).unwrap();
        prop_assert!(!j.timed_out);
        prop_assert_eq!(j.satisfiable, exists);
        if let Some(w) = j.witness {
            prop_assert!(tc.holds(&n, &replay(&n, &w)).unwrap());
        }
    }
}
