// SPDX-License-Identifier: Apache-2.0

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use htgen::features::{scoap, simulate};
use htgen::insert::{insert, InsertionConfig, TrojanTemplate};
use htgen::ml::{train_classifier, ForestParams};
use htgen::netlist::{emit_netlist, parse_netlist};
use htgen::validate::{justify, TriggerCondition};
use htgen_bench::{host, training};
use std::hint::black_box;

fn netlist(c: &mut Criterion) {
    let mut g = c.benchmark_group("netlist");
    for gates in [400, 4000] {
        let text = emit_netlist(&host(gates));
        g.bench_with_input(BenchmarkId::new("parse", gates), &text, |b, t| b.iter(|| parse_netlist(black_box(t)).unwrap()));
        let n = parse_netlist(&text).unwrap();
        g.bench_with_input(BenchmarkId::new("simulate_10k", gates), &n, |b, n| b.iter(|| simulate(n, 10_000, 0)));
        g.bench_with_input(BenchmarkId::new("scoap", gates), &n, |b, n| b.iter(|| scoap(n)));
    }
    g.finish();
}

fn forest(c: &mut Criterion) {
    let row = |i: usize, pos: bool| -> Vec<f64> {
        (0..14).map(|f| ((i * 31 + f * 17) % 97) as f64 / 97.0 * 0.5 + if pos && f < 3 { 0.5 } else { 0.0 }).collect()
    };
    let pos: Vec<Vec<f64>> = (0..40).map(|i| row(i, true)).collect();
    let neg: Vec<Vec<f64>> = (0..2000).map(|i| row(i, false)).collect();
    c.bench_function("forest/train_2040x14", |b| {
        b.iter(|| train_classifier(&pos, &neg, &ForestParams { seed: 1, ..Default::default() }).unwrap())
    });
}

fn sat(c: &mut Criterion) {
    let n = host(4000);
    let deep: Vec<String> = {
        let order = n.topo();
        let mut ids: Vec<_> = n.net_ids().filter(|&id| n.driver_cell(id).is_some()).collect();
        ids.sort_by_key(|&id| std::cmp::Reverse(order.level(id)));
        ids.iter().take(4).map(|&id| n.net_name(id).to_string()).collect()
    };
    let cond = TriggerCondition::new(deep.into_iter().map(|s| (s, true)).collect()).unwrap();
    c.bench_function("sat/justify_4_deep_nets", |b| b.iter(|| justify(&n, &cond).unwrap()));
}

fn insertion(c: &mut Criterion) {
    let n = host(400);
    let ts = training(&n, 5000);
    let t = TrojanTemplate::builtin("c2").unwrap();
    let cfg = InsertionConfig { num_trojans: 1, vectors: 5000, ..Default::default() };
    let mut g = c.benchmark_group("insert");
    g.sample_size(10);
    g.bench_function("one_trojan", |b| b.iter(|| insert(&n, &t, &ts.bundles[0], &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, netlist, forest, sat, insertion);
criterion_main!(benches);
