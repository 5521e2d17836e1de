// SPDX-License-Identifier: Apache-2.0

use htgen::features::{scoap, TrojanFeatureVector, NUM_TROJAN_FEATURES};
use htgen::netlist::parse_netlist;
use proptest::prelude::*;

fn buffer_chain(k: usize) -> String {
    let mut s = String::from("module chain (a, y); input a; output y;\n");
    let net = |i: usize| if i == 0 { "a".to_string() } else if i == k { "y".to_string() } else { format!("w{i}") };
    for i in 1..k {
        s += &format!("wire w{i};\n");
    }
    for i in 1..=k {
        s += &format!("buf b{i} ({}, {});\n", net(i), net(i - 1));
    }
    s + "endmodule\n"
}

fn vector() -> impl Strategy<Value = TrojanFeatureVector> {
    prop::array::uniform5(0.0f64..1.0).prop_map(TrojanFeatureVector::from_array)
}

proptest! {
    #[test]
    fn buffer_chain_scoap(k in 1usize..60) {
        let n = parse_netlist(&buffer_chain(k)).unwrap();
        let s = scoap(&n);
        for i in 0..=k {
            let name = if i == 0 { "a".to_string() } else if i == k { "y".to_string() } else { format!("w{i}") };
            let v = s[n.net_id(&name).unwrap().index()];
            prop_assert_eq!((v.cc0, v.cc1, v.co), (1 + i as u32, 1 + i as u32, (k - i) as u32));
        }
    }

    #[test]
    fn weighted_distance_is_a_metric(
        a in vector(), b in vector(), c in vector(),
        w in prop::array::uniform5(0.0f64..4.0),
    ) {
        let w: [f64; NUM_TROJAN_FEATURES] = w;
        prop_assert_eq!(a.distance(&a, &w), 0.0);
        prop_assert!((a.distance(&b, &w) - b.distance(&a, &w)).abs() < 1e-12);
        prop_assert!(a.distance(&c, &w) <= a.distance(&b, &w) + b.distance(&c, &w) + 1e-9);
    }
}
