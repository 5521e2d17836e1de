// SPDX-License-Identifier: Apache-2.0

//! The fourteen per-net features and the five-feature Trojan signature.
//!
//! Functional features come from random-pattern simulation, the driving
//! cell's truth table and SCOAP; structural ones from breadth-first
//! traversal of the scan-cut view.

pub mod scale;
pub mod scoap;
pub mod sim;
pub mod structural;

pub use scale::Scaler;
pub use scoap::{scoap, Scoap, SCOAP_CAP};
pub use sim::{simulate, SimStats, DEFAULT_VECTORS};
pub use structural::{structural_features, Structural, UNREACHABLE};

use crate::error::{Error, Result};
use crate::netlist::{CellKind, Driver, NetId, Netlist};
use serde::{Deserialize, Serialize};
use std::fmt::Write;

pub const NUM_NET_FEATURES: usize = 14;
pub const NUM_TROJAN_FEATURES: usize = 5;

pub const NET_FEATURE_NAMES: [&str; NUM_NET_FEATURES] = [
    "signal_probability",
    "toggle_rate",
    "entropy",
    "cc0",
    "cc1",
    "co",
    "dist_pi",
    "dist_po",
    "dist_ff_in",
    "dist_ff_out",
    "fanin_imm",
    "fanout_imm",
    "fanin_nbr",
    "fanout_nbr",
];

pub const TROJAN_FEATURE_NAMES: [&str; NUM_TROJAN_FEATURES] =
    ["probability", "activity", "cc1", "cc0", "co"];

/// Positions of the Trojan features inside a net feature vector.
const TROJAN_FROM_NET: [usize; NUM_TROJAN_FEATURES] = [0, 1, 4, 3, 5];

/// Shannon entropy of a truth-table column, with `0 log 0 = 0`.
pub fn entropy_of_table(table: &[bool]) -> f64 {
    let p1 = table.iter().filter(|&&b| b).count() as f64 / table.len() as f64;
    let term = |p: f64| if p > 0.0 { p * (1.0 / p).log2() } else { 0.0 };
    term(p1) + term(1.0 - p1)
}

/// Entropy of a combinational cell's truth table.
pub fn entropy(kind: CellKind) -> Result<f64> {
    kind.truth_table()
        .map(|t| entropy_of_table(&t))
        .ok_or(Error::SequentialCell)
}

/// Which net features feed the classifiers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMask {
    #[default]
    All,
    /// The six functional features only.
    Functional,
}

impl FeatureMask {
    pub fn dim(self) -> usize {
        match self {
            FeatureMask::All => NUM_NET_FEATURES,
            FeatureMask::Functional => 6,
        }
    }

    pub fn apply(self, v: &[f64]) -> Vec<f64> {
        v[..self.dim()].to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetFeatureVector {
    pub signal_probability: f64,
    pub toggle_rate: f64,
    pub entropy: f64,
    pub cc0: u32,
    pub cc1: u32,
    pub co: u32,
    pub dist_pi: u32,
    pub dist_po: u32,
    pub dist_ff_in: u32,
    pub dist_ff_out: u32,
    pub fanin_imm: u32,
    pub fanout_imm: u32,
    pub fanin_nbr: u32,
    pub fanout_nbr: u32,
}

fn dist(d: u32) -> f64 {
    if d == UNREACHABLE {
        f64::INFINITY
    } else {
        d as f64
    }
}

fn testability(v: u32) -> f64 {
    if v >= SCOAP_CAP {
        f64::INFINITY
    } else {
        v as f64
    }
}

impl NetFeatureVector {
    /// Raw values in [`NET_FEATURE_NAMES`] order; unreachable distances and
    /// saturated SCOAP values are `f64::INFINITY`.
    pub fn to_array(&self) -> [f64; NUM_NET_FEATURES] {
        [
            self.signal_probability,
            self.toggle_rate,
            self.entropy,
            testability(self.cc0),
            testability(self.cc1),
            testability(self.co),
            dist(self.dist_pi),
            dist(self.dist_po),
            dist(self.dist_ff_in),
            dist(self.dist_ff_out),
            self.fanin_imm as f64,
            self.fanout_imm as f64,
            self.fanin_nbr as f64,
            self.fanout_nbr as f64,
        ]
    }

    pub fn trojan(&self) -> TrojanFeatureVector {
        TrojanFeatureVector::from_net_array(&self.to_array())
    }
}

/// Functional signature of a Trojan's final trigger wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrojanFeatureVector {
    pub probability: f64,
    pub activity: f64,
    pub cc1: f64,
    pub cc0: f64,
    pub co: f64,
}

impl TrojanFeatureVector {
    pub fn from_net_array(v: &[f64]) -> Self {
        let g = |k: usize| v[TROJAN_FROM_NET[k]];
        TrojanFeatureVector {
            probability: g(0),
            activity: g(1),
            cc1: g(2),
            cc0: g(3),
            co: g(4),
        }
    }

    pub fn from_array(v: [f64; NUM_TROJAN_FEATURES]) -> Self {
        TrojanFeatureVector {
            probability: v[0],
            activity: v[1],
            cc1: v[2],
            cc0: v[3],
            co: v[4],
        }
    }

    pub fn to_array(&self) -> [f64; NUM_TROJAN_FEATURES] {
        [self.probability, self.activity, self.cc1, self.cc0, self.co]
    }

    /// Weighted Euclidean distance.
    pub fn distance(&self, other: &Self, weights: &[f64; NUM_TROJAN_FEATURES]) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .zip(weights)
            .map(|((a, b), w)| w * (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Features of every net in a design, indexed by [`NetId`], with the
/// design's own scaler.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: Vec<NetFeatureVector>,
    pub scaler: Scaler,
}

impl FeatureTable {
    pub fn row(&self, id: NetId) -> &NetFeatureVector {
        &self.rows[id.index()]
    }

    /// Min-max scaled vector of one net.
    pub fn scaled(&self, id: NetId) -> Vec<f64> {
        self.scaler.apply(&self.rows[id.index()].to_array())
    }

    /// Scaled Trojan signature of the net.
    pub fn trojan(&self, id: NetId) -> TrojanFeatureVector {
        TrojanFeatureVector::from_net_array(&self.scaled(id))
    }

    /// Less probable level and its probability (ties go to 1).
    pub fn rare(&self, id: NetId) -> (bool, f64) {
        let p = self.rows[id.index()].signal_probability;
        if p <= 0.5 {
            (true, p)
        } else {
            (false, 1.0 - p)
        }
    }

    /// One row per net: name followed by the 14 raw features, 6 significant
    /// digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("net");
        for h in NET_FEATURE_NAMES {
            out.push(',');
            out.push_str(h);
        }
        out.push('\n');
        for (name, row) in self.names.iter().zip(&self.rows) {
            out.push_str(&csv_field(name));
            for v in row.to_array() {
                let _ = write!(out, ",{}", sig6(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .names
            .iter()
            .zip(&self.rows)
            .map(|(name, row)| {
                let mut m = serde_json::Map::new();
                m.insert("net".into(), name.clone().into());
                for (h, v) in NET_FEATURE_NAMES.iter().zip(row.to_array()) {
                    let val = if v.is_finite() {
                        serde_json::Value::from(sig6(v).parse::<f64>().unwrap_or(v))
                    } else {
                        serde_json::Value::Null
                    };
                    m.insert((*h).into(), val);
                }
                serde_json::Value::Object(m)
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Formats with at most 6 significant digits.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == v.trunc() && v.abs() < 1e15 {
        return format!("{}", v as i64);
    }
    let rounded: f64 = format!("{v:.5e}").parse().unwrap_or(v);
    format!("{rounded}")
}

/// Entropy feature of a net: that of its driving combinational cell; 1 for
/// free sources (primary inputs, flip-flop outputs), 0 for constants.
fn net_entropy(n: &Netlist, id: NetId) -> f64 {
    match n.net(id).driver {
        Driver::Input => 1.0,
        Driver::Const(_) => 0.0,
        Driver::Cell(c) => entropy(n.cell(c).kind).unwrap_or(1.0),
    }
}

/// Computes all 14 features for every net and fits the design's scaler.
pub fn extract_features(n: &Netlist, vectors: usize, seed: u64) -> FeatureTable {
    let sim = simulate(n, vectors, seed);
    let sc = scoap(n);
    let st = structural_features(n);
    let rows: Vec<NetFeatureVector> = n
        .net_ids()
        .map(|id| {
            let i = id.index();
            NetFeatureVector {
                signal_probability: sim.prob[i],
                toggle_rate: sim.toggle[i],
                entropy: net_entropy(n, id),
                cc0: sc[i].cc0,
                cc1: sc[i].cc1,
                co: sc[i].co,
                dist_pi: st[i].dist_pi,
                dist_po: st[i].dist_po,
                dist_ff_in: st[i].dist_ff_in,
                dist_ff_out: st[i].dist_ff_out,
                fanin_imm: st[i].fanin_imm,
                fanout_imm: st[i].fanout_imm,
                fanin_nbr: st[i].fanin_nbr,
                fanout_nbr: st[i].fanout_nbr,
            }
        })
        .collect();
    let arrays: Vec<[f64; NUM_NET_FEATURES]> = rows.iter().map(|r| r.to_array()).collect();
    let scaler = if arrays.is_empty() {
        Scaler { min: vec![0.0; NUM_NET_FEATURES], max: vec![0.0; NUM_NET_FEATURES] }
    } else {
        Scaler::fit(&arrays)
    };
    FeatureTable {
        names: n.nets().iter().map(|net| net.name.clone()).collect(),
        rows,
        scaler,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(CellKind::Not).unwrap(), 1.0);
        assert!((entropy(CellKind::And(2)).unwrap() - 0.811_278).abs() < 1e-4);
        assert_eq!(entropy(CellKind::Xor(2)).unwrap(), 1.0);
        assert!(matches!(entropy(CellKind::Dff { reset: false }), Err(Error::SequentialCell)));
        for k in CellKind::all().into_iter().filter(|k| !k.is_sequential()) {
            let e = entropy(k).unwrap();
            assert!((0.0..=1.0).contains(&e));
            let t = k.truth_table().unwrap();
            let balanced = 2 * t.iter().filter(|&&b| b).count() == t.len();
            assert_eq!(balanced, (e - 1.0).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn sig6_format() {
        assert_eq!(sig6(3.0), "3");
        assert_eq!(sig6(0.123456789), "0.123457");
        assert_eq!(sig6(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_has_one_row_per_net() {
        let n = parse_netlist("module t(a,b,y); input a,b; output y; and g(y,a,b); endmodule").unwrap();
        let t = extract_features(&n, 1000, 1);
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 1 + n.nets().len());
        assert!(csv.starts_with("net,signal_probability,toggle_rate,entropy"));
        let y = n.net_id("y").unwrap();
        assert_eq!(t.row(y).cc1, 3);
        assert_eq!(t.row(y).dist_pi, 1);
        assert!((t.row(y).entropy - 0.811_278).abs() < 1e-4);
    }

    #[test]
    fn trojan_vector_picks_functional_subset() {
        let v = [0.1, 0.2, 0.3, 4.0, 5.0, 6.0, 0., 0., 0., 0., 0., 0., 0., 0.];
        let t = TrojanFeatureVector::from_net_array(&v);
        assert_eq!(t.to_array(), [0.1, 0.2, 5.0, 4.0, 6.0]);
    }
}
