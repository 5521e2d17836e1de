// SPDX-License-Identifier: Apache-2.0

use htgen::harness::{generate, GeneratorConfig};
use htgen::netlist::{emit_netlist, parse_netlist, splice_subcircuit, Netlist, PortBinding};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small(seed: u64, gates: usize, dff_fraction: f64) -> Netlist {
    generate(&GeneratorConfig {
        name: "t".into(),
        gates,
        inputs: 8,
        dff_fraction,
        decoders: 2,
        decoder_width: 4,
        seed,
        ..Default::default()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn emit_parse_round_trip(seed in 0u64..10_000, gates in 8usize..120, dff in 0.0f64..0.2) {
        let n = small(seed, gates, dff);
        let back = parse_netlist(&emit_netlist(&n)).unwrap();
        prop_assert!(n.is_isomorphic(&back));
        prop_assert_eq!(emit_netlist(&back), emit_netlist(&n));
    }

    #[test]
    fn levels_ignore_statement_order(seed in 0u64..10_000, gates in 8usize..120) {
        let n = small(seed, gates, 0.05);
        let text = emit_netlist(&n);
        let mut lines: Vec<&str> = text.lines().collect();
        let body: Vec<usize> = (0..lines.len())
            .filter(|&i| {
                let l = lines[i].trim_start();
                !(l.starts_with("module") || l.starts_with("input") || l.starts_with("output")
                    || l.starts_with("wire") || l.starts_with("endmodule") || l.is_empty())
            })
            .collect();
        let mut stmts: Vec<&str> = body.iter().map(|&i| lines[i]).collect();
        stmts.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for (&i, s) in body.iter().zip(stmts) {
            lines[i] = s;
        }
        let shuffled = parse_netlist(&lines.join("\n")).unwrap();
        prop_assert_eq!(n.topo().by_name(&n), shuffled.topo().by_name(&shuffled));
    }

    #[test]
    fn splice_adds_internal_nets_and_keeps_interface(seed in 0u64..10_000, pick in any::<u64>()) {
        let host = small(seed, 60, 0.0);
        let sub = parse_netlist(
            "module s (a, b, pin, pout); input a, b, pin; output pout; wire t;
             and g0 (t, a, b); xor g1 (pout, t, pin); endmodule",
        ).unwrap();
        let order = host.topo();
        let internal: Vec<_> = host.net_ids().filter(|&id| host.driver_cell(id).is_some()).collect();
        let victim = internal[(pick as usize) % internal.len()];
        let below: Vec<_> = host.net_ids().filter(|&id| order.level(id) < order.level(victim)).collect();
        prop_assume!(below.len() >= 2);
        let a = below[(pick >> 16) as usize % below.len()];
        let b = below[(pick >> 32) as usize % below.len()];
        prop_assume!(a != b);
        let binding = PortBinding {
            inputs: [("a", a), ("b", b)].iter().map(|(p, id)| (p.to_string(), host.net_name(*id).to_string())).collect(),
            payload_in: "pin".into(),
            payload_out: "pout".into(),
            victim: host.net_name(victim).to_string(),
        };
        let res = splice_subcircuit(&host, &sub, &binding, "ht_").unwrap();
        let t = &res.netlist;
        prop_assert_eq!(t.nets().len(), host.nets().len() + 2);
        prop_assert_eq!(t.cells().len(), host.cells().len() + 2);
        let names = |n: &Netlist, v: &[htgen::netlist::NetId]| v.iter().map(|&i| n.net_name(i).to_string()).collect::<Vec<_>>();
        prop_assert_eq!(names(&host, host.inputs()), names(t, t.inputs()));
        prop_assert_eq!(names(&host, host.outputs()), names(t, t.outputs()));
        prop_assert!(t.net_id(&res.rewired_net).is_some());
    }
}

#[test]
fn shipped_corpus_matches_generator() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    for s in 1..=3u64 {
        let cfg = GeneratorConfig { name: format!("synth{s}"), seed: s, ..Default::default() };
        let text = std::fs::read_to_string(dir.join(format!("synth{s}.v"))).unwrap();
        assert_eq!(text, emit_netlist(&generate(&cfg).unwrap()), "synth{s}.v");
    }
    let c17 = parse_netlist(&std::fs::read_to_string(dir.join("c17.v")).unwrap()).unwrap();
    assert!(c17.is_isomorphic(&htgen::harness::c17()));
}
