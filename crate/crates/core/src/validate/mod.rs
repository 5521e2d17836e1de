// SPDX-License-Identifier: Apache-2.0

//! Trigger justification, payload legality and end-to-end checks of an
//! inserted Trojan.

pub mod cnf;
pub mod solver;

pub use cnf::{Cnf, Encoder};
pub use solver::{solve, SatResult};

use crate::error::{Error, Result};
use crate::features::sim::{eval_pattern, propagate, propagate_flipped, source_rng};
use crate::netlist::{topo_sort, CellKind, Driver, NetId, Netlist, TopoOrder};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

/// Required value per trigger net.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TriggerCondition {
    pub assignments: Vec<(String, bool)>,
}

impl TriggerCondition {
    pub fn new(assignments: Vec<(String, bool)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (n, _) in &assignments {
            if !seen.insert(n.as_str()) {
                return Err(Error::InvalidBinding(format!("net {n} appears twice in a trigger condition")));
            }
        }
        Ok(TriggerCondition { assignments })
    }

    fn resolve(&self, n: &Netlist) -> Result<Vec<(NetId, bool)>> {
        self.assignments.iter().map(|(name, v)| Ok((n.require_net(name)?, *v))).collect()
    }

    /// Whether a fully evaluated pattern (indexed by net) meets the condition.
    pub fn holds(&self, n: &Netlist, values: &[bool]) -> Result<bool> {
        Ok(self.resolve(n)?.iter().all(|&(id, v)| values[id.index()] == v))
    }
}

/// Source-net assignment; sources not listed are 0.
pub type Witness = BTreeMap<String, bool>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Justification {
    pub satisfiable: bool,
    pub timed_out: bool,
    pub witness: Option<Witness>,
}

impl Justification {
    fn unsat(timed_out: bool) -> Self {
        Justification { satisfiable: false, timed_out, witness: None }
    }
}

/// Evaluates a witness over the scan-cut view.
pub fn replay(n: &Netlist, w: &Witness) -> Vec<bool> {
    eval_pattern(n, |id| w.get(n.net_name(id)).copied().unwrap_or(false))
}

fn witness_from(n: &Netlist, enc: &Encoder, model: &[bool]) -> Witness {
    n.sources()
        .into_iter()
        .filter_map(|s| enc.var(s).map(|v| (n.net_name(s).to_string(), model[v as usize])))
        .collect()
}

fn encode_condition<'a>(n: &'a Netlist, cond: &TriggerCondition) -> Result<(Encoder<'a>, Vec<(NetId, bool)>)> {
    let assigns = cond.resolve(n)?;
    let mut enc = Encoder::new(n);
    let roots: Vec<NetId> = assigns.iter().map(|a| a.0).collect();
    enc.encode_cone(&roots);
    for &(id, v) in &assigns {
        let l = enc.var(id).expect("encoded");
        enc.cnf.add(&[if v { l } else { -l }]);
    }
    Ok((enc, assigns))
}

/// CNF of the condition's fanin cone, for external cross-checking.
pub fn condition_cnf(n: &Netlist, cond: &TriggerCondition) -> Result<Cnf> {
    Ok(encode_condition(n, cond)?.0.cnf)
}

/// Decides whether all condition nets can hold their values at once.
pub fn justify(n: &Netlist, cond: &TriggerCondition) -> Result<Justification> {
    justify_within(n, cond, DEFAULT_TIMEOUT)
}

pub fn justify_within(n: &Netlist, cond: &TriggerCondition, timeout: Duration) -> Result<Justification> {
    let (enc, _) = encode_condition(n, cond)?;
    match solve(&enc.cnf, Some(Instant::now() + timeout)) {
        SatResult::Unsat => Ok(Justification::unsat(false)),
        SatResult::Timeout => Ok(Justification::unsat(true)),
        SatResult::Sat(model) => {
            let w = witness_from(n, &enc, &model);
            assert!(cond.holds(n, &replay(n, &w))?, "witness failed to replay");
            Ok(Justification { satisfiable: true, timed_out: false, witness: Some(w) })
        }
    }
}

/// Decides whether the condition can hold while inverting `victim` changes
/// some primary output or flip-flop input. The witness is checked against
/// both the clean and the inverted evaluation.
pub fn justify_activation(
    n: &Netlist,
    cond: &TriggerCondition,
    victim: NetId,
    timeout: Duration,
) -> Result<Justification> {
    let (mut enc, _) = encode_condition(n, cond)?;
    let direct = n.observe_points().contains(&victim);
    if !direct {
        let pairs = enc.flipped_cone(victim);
        if pairs.is_empty() {
            return Ok(Justification::unsat(false));
        }
        let mut any = Vec::with_capacity(pairs.len());
        for (g, f) in pairs {
            let d = enc.cnf.new_var();
            enc.cnf.xor2(g, f, d);
            any.push(d);
        }
        enc.cnf.add(&any);
    }
    match solve(&enc.cnf, Some(Instant::now() + timeout)) {
        SatResult::Unsat => Ok(Justification::unsat(false)),
        SatResult::Timeout => Ok(Justification::unsat(true)),
        SatResult::Sat(model) => {
            let w = witness_from(n, &enc, &model);
            let good = replay(n, &w);
            assert!(cond.holds(n, &good)?, "witness failed to replay");
            let mut words: Vec<u64> = good.iter().map(|&b| if b { !0 } else { 0 }).collect();
            propagate_flipped(n, &mut words, Some(victim));
            let visible = n.observe_points().iter().any(|o| (words[o.index()] & 1 == 1) != good[o.index()]);
            assert!(visible, "activation witness does not reach an observe point");
            Ok(Justification { satisfiable: true, timed_out: false, witness: Some(w) })
        }
    }
}

/// Whether `payload` sits strictly above every trigger net in `order`.
pub fn check_no_comb_loop(_n: &Netlist, triggers: &[NetId], payload: NetId, order: &TopoOrder) -> bool {
    let top = triggers.iter().map(|&t| order.level(t)).max().unwrap_or(0);
    order.level(payload) > top
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    /// Dormant cycles compared.
    pub compared: usize,
    pub matched: usize,
    pub pass_rate: f64,
    pub activation_witnessed: bool,
    pub acyclic: bool,
    pub interface_ok: bool,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.interface_ok && self.acyclic && self.activation_witnessed && self.matched == self.compared
    }
}

fn names(n: &Netlist, v: &[NetId]) -> Vec<String> {
    v.iter().map(|&i| n.net_name(i).to_string()).collect()
}

/// Clocked simulation of `trojaned` in which host flip-flops stay scan-cut
/// (their outputs are driven like inputs) and every other flip-flop holds
/// real state.
struct SeqSim<'a> {
    n: &'a Netlist,
    /// (cell output net, d net, optional reset net) of state-holding flops.
    state: Vec<(NetId, NetId, Option<NetId>)>,
    values: Vec<u64>,
}

impl<'a> SeqSim<'a> {
    fn new(n: &'a Netlist, host: &Netlist) -> Self {
        let state = n
            .flops()
            .map(|c| n.cell(c))
            .filter(|c| host.net_id(n.net_name(c.output)).is_none_or(|h| !host.is_state(h)))
            .map(|c| {
                let rst = matches!(c.kind, CellKind::Dff { reset: true }).then(|| c.inputs[2]);
                (c.output, c.inputs[0], rst)
            })
            .collect();
        SeqSim { n, state, values: vec![0; n.nets().len()] }
    }

    fn is_state(&self, id: NetId) -> bool {
        self.state.iter().any(|s| s.0 == id)
    }

    fn step(&mut self) {
        propagate(self.n, &mut self.values);
    }

    fn clock(&mut self) {
        let next: Vec<u64> = self
            .state
            .iter()
            .map(|&(_, d, r)| self.values[d.index()] & r.map_or(!0, |r| self.values[r.index()]))
            .collect();
        for (s, v) in self.state.iter().zip(next) {
            self.values[s.0.index()] = v;
        }
    }
}

/// Checks that `trojaned` matches `original` whenever the trigger condition
/// has not yet occurred, and that holding the witness activates it.
///
/// Stimulus runs as 64 parallel traces; a trace is dropped from comparison
/// from the first cycle on which the condition holds. Outputs compared are
/// the primary outputs and the original's flip-flop inputs.
pub fn verify_inserted(
    original: &Netlist,
    trojaned: &Netlist,
    cond: &TriggerCondition,
    witness: Option<&Witness>,
    vectors: usize,
    seed: u64,
) -> Result<VerifyReport> {
    let interface_ok = names(original, original.inputs()) == names(trojaned, trojaned.inputs())
        && names(original, original.outputs()) == names(trojaned, trojaned.outputs());
    if !interface_ok {
        return Err(Error::InterfaceMismatch);
    }
    let acyclic = topo_sort(trojaned).is_ok();
    let cond_ids = cond.resolve(original)?;
    let observe: Vec<(NetId, NetId)> = original
        .observe_points()
        .into_iter()
        .map(|o| Ok((o, trojaned.require_net(original.net_name(o))?)))
        .collect::<Result<_>>()?;
    let host_sources = original.sources();
    let mapped: Vec<NetId> = host_sources
        .iter()
        .map(|&s| trojaned.require_net(original.net_name(s)))
        .collect::<Result<_>>()?;

    let mut rngs: Vec<_> = host_sources.iter().map(|&s| source_rng(seed, original.net_name(s))).collect();
    let mut seq = SeqSim::new(trojaned, original);
    let mut host = vec![0u64; original.nets().len()];
    let cycles = vectors.div_ceil(64).max(1);
    let mut tainted = 0u64;
    let (mut compared, mut matched) = (0usize, 0usize);
    for _ in 0..cycles {
        for ((&s, &t), rng) in host_sources.iter().zip(&mapped).zip(rngs.iter_mut()) {
            let w: u64 = rng.random();
            host[s.index()] = w;
            if !seq.is_state(t) {
                seq.values[t.index()] = w;
            }
        }
        propagate(original, &mut host);
        seq.step();
        let fire = cond_ids
            .iter()
            .fold(!0u64, |acc, &(id, v)| acc & if v { host[id.index()] } else { !host[id.index()] });
        tainted |= fire;
        let mut diff = 0u64;
        for &(o, t) in &observe {
            diff |= host[o.index()] ^ seq.values[t.index()];
        }
        let live = !tainted;
        compared += live.count_ones() as usize;
        matched += (live & !diff).count_ones() as usize;
        seq.clock();
    }

    let owned;
    let w = match witness {
        Some(w) => Some(w),
        None => {
            owned = match displaced(original, trojaned).as_slice() {
                [victim] => justify_activation(original, cond, *victim, DEFAULT_TIMEOUT)?.witness,
                _ => justify(original, cond)?.witness,
            };
            owned.as_ref()
        }
    };
    let activation_witnessed = w.is_some_and(|w| activation(original, trojaned, w, &observe));
    Ok(VerifyReport {
        compared,
        matched,
        pass_rate: if compared == 0 { 1.0 } else { matched as f64 / compared as f64 },
        activation_witnessed,
        acyclic,
        interface_ok,
    })
}

/// Host nets whose driving cell was replaced in `trojaned`.
fn displaced(original: &Netlist, trojaned: &Netlist) -> Vec<NetId> {
    original
        .net_ids()
        .filter(|&id| {
            let Driver::Cell(c) = original.net(id).driver else { return false };
            let Some(t) = trojaned.net_id(original.net_name(id)) else { return false };
            match trojaned.net(t).driver {
                Driver::Cell(d) => trojaned.cell(d).name != original.cell(c).name,
                _ => true,
            }
        })
        .collect()
}

const ACTIVATION_CYCLES: usize = 8;

/// Holds the witness (reset deasserted) for a few cycles and reports
/// whether any compared output departs from the original.
fn activation(original: &Netlist, trojaned: &Netlist, w: &Witness, observe: &[(NetId, NetId)]) -> bool {
    let reset = trojaned.reset().map(|r| trojaned.net_name(r).to_string());
    let level = |name: &str| -> bool {
        w.get(name).copied().unwrap_or_else(|| reset.as_deref() == Some(name))
    };
    let mut host = vec![0u64; original.nets().len()];
    for s in original.sources() {
        host[s.index()] = if level(original.net_name(s)) { !0 } else { 0 };
    }
    propagate(original, &mut host);
    let mut seq = SeqSim::new(trojaned, original);
    for s in trojaned.sources() {
        if !seq.is_state(s) {
            seq.values[s.index()] = if level(trojaned.net_name(s)) { !0 } else { 0 };
        }
    }
    for id in trojaned.net_ids() {
        if let Driver::Const(v) = trojaned.net(id).driver {
            seq.values[id.index()] = if v { !0 } else { 0 };
        }
    }
    for _ in 0..ACTIVATION_CYCLES {
        seq.step();
        if observe.iter().any(|&(o, t)| (host[o.index()] ^ seq.values[t.index()]) & 1 == 1) {
            return true;
        }
        seq.clock();
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    fn cond(v: &[(&str, bool)]) -> TriggerCondition {
        TriggerCondition::new(v.iter().map(|&(n, b)| (n.to_string(), b)).collect()).unwrap()
    }

    #[test]
    fn and_output_justified() {
        let n = parse_netlist("module t(a,b,y); input a,b; output y; and g(y,a,b); endmodule").unwrap();
        let j = justify(&n, &cond(&[("y", true)])).unwrap();
        assert!(j.satisfiable);
        let w = j.witness.unwrap();
        assert_eq!((w["a"], w["b"]), (true, true));
    }

    #[test]
    fn contradictory_cone() {
        let n = parse_netlist(
            "module t(a,b,y,z); input a,b; output y,z; wire nb; not g0(nb,b);\n\
             and g1(y,a,b); and g2(z,a,nb); endmodule",
        )
        .unwrap();
        let j = justify(&n, &cond(&[("y", true), ("z", true)])).unwrap();
        assert!(!j.satisfiable && !j.timed_out);
        assert!(justify(&n, &cond(&[("y", true), ("z", false)])).unwrap().satisfiable);
        assert!(TriggerCondition::new(vec![("y".into(), true), ("y".into(), false)]).is_err());
    }

    #[test]
    fn loop_check_levels() {
        let n = parse_netlist(
            "module t(a,y); input a; output y; wire n1,n2,n3,n4;\n\
             not g1(n1,a); not g2(n2,n1); not g3(n3,n2); not g4(n4,n3); not g5(y,n4); endmodule",
        )
        .unwrap();
        let id = |s| n.net_id(s).unwrap();
        assert!(check_no_comb_loop(&n, &[id("n1"), id("n2")], id("y"), n.topo()));
        assert!(!check_no_comb_loop(&n, &[id("n2")], id("n2"), n.topo()));
        assert!(!check_no_comb_loop(&n, &[id("n3")], id("n1"), n.topo()));
    }

    #[test]
    fn activation_needs_observability() {
        // the victim m is masked by c = 0 whenever the trigger t = c fires
        let n = parse_netlist(
            "module t(a,b,c,y); input a,b,c; output y; wire m;\n\
             xor g0(m,a,b); and g1(y,m,c); endmodule",
        )
        .unwrap();
        let m = n.net_id("m").unwrap();
        let j = justify_activation(&n, &cond(&[("c", false)]), m, DEFAULT_TIMEOUT).unwrap();
        assert!(!j.satisfiable);
        let j = justify_activation(&n, &cond(&[("c", true)]), m, DEFAULT_TIMEOUT).unwrap();
        assert!(j.satisfiable);
    }

    #[test]
    fn self_verification() {
        let n = parse_netlist("module t(a,b,y); input a,b; output y; and g(y,a,b); endmodule").unwrap();
        let r = verify_inserted(&n, &n, &cond(&[("y", true)]), None, 1000, 1).unwrap();
        assert_eq!(r.matched, r.compared);
        assert!(!r.activation_witnessed);
        let other = parse_netlist("module t(a,b,z); input a,b; output z; and g(z,a,b); endmodule").unwrap();
        assert!(matches!(
            verify_inserted(&n, &other, &cond(&[]), None, 10, 1),
            Err(Error::InterfaceMismatch)
        ));
    }

    #[test]
    fn dimacs_header() {
        let n = parse_netlist("module t(a,b,y); input a,b; output y; and g(y,a,b); endmodule").unwrap();
        let d = condition_cnf(&n, &cond(&[("y", true)])).unwrap().to_dimacs();
        assert!(d.starts_with("p cnf 3 4\n"));
    }
}
