// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the benchmarks.

use htgen::harness::{baseline_insert, build_training_set, generate, BaselineConfig, GeneratorConfig, TrainConfig, TrainingSample, TrainingSet};
use htgen::insert::TrojanTemplate;
use htgen::netlist::Netlist;

/// Synthetic host with `gates` combinational gates.
pub fn host(gates: usize) -> Netlist {
    generate(&GeneratorConfig { name: format!("bench{gates}"), gates, seed: 1, ..Default::default() }).expect("generator")
}

/// A c2 training set on `n` from a 40-Trojan baseline suite.
pub fn training(n: &Netlist, vectors: usize) -> TrainingSet {
    let t = TrojanTemplate::builtin("c2").expect("builtin");
    let cfg = BaselineConfig { theta: 0.01, r: t.r(), count: 40, vectors, ..Default::default() };
    let samples: Vec<TrainingSample> = baseline_insert(n, &t, &cfg).expect("baseline").into_iter().map(Into::into).collect();
    build_training_set(n, "c2", &samples, &TrainConfig { vectors, ..Default::default() }).expect("training")
}
