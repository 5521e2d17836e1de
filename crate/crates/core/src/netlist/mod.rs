// SPDX-License-Identifier: Apache-2.0

//! Hypergraph netlist IR.
//!
//! A [`Netlist`] owns cells and nets. Each net has exactly one driver (a cell
//! output, a primary input or a tie constant) and a list of sink pins. The
//! scan-cut view treats every flip-flop output as a pseudo-primary input and
//! every flip-flop input pin as a pseudo-primary output; that view must be
//! acyclic and its levelization is cached as a [`TopoOrder`].

mod cell;
mod emit;
mod parse;
mod splice;
mod topo;

pub use cell::{CellKind, MAX_ARITY};
pub use emit::{dump_edges, emit_netlist};
pub use parse::parse_netlist;
pub use splice::{splice_subcircuit, PortBinding, SpliceResult};
pub use topo::{topo_sort, TopoOrder};

use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NetId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId(pub u32);

impl NetId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl CellId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A cell input pin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pin {
    pub cell: CellId,
    pub pin: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Input,
    Const(bool),
    Cell(CellId),
}

#[derive(Debug, Clone)]
pub struct Net {
    pub name: String,
    pub driver: Driver,
    pub sinks: Vec<Pin>,
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub name: String,
    pub kind: CellKind,
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

pub const CONST0: &str = "1'b0";
pub const CONST1: &str = "1'b1";

pub(crate) fn const_value(name: &str) -> Option<bool> {
    match name {
        "1'b0" | "1'B0" | "1'h0" | "1'd0" => Some(false),
        "1'b1" | "1'B1" | "1'h1" | "1'd1" => Some(true),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct Netlist {
    name: String,
    cells: Vec<Cell>,
    nets: Vec<Net>,
    by_name: HashMap<String, NetId>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    clock: Option<NetId>,
    reset: Option<NetId>,
    order: TopoOrder,
}

impl Netlist {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn nets(&self) -> &[Net] {
        &self.nets
    }

    pub fn cell(&self, id: CellId) -> &Cell {
        &self.cells[id.index()]
    }

    pub fn net(&self, id: NetId) -> &Net {
        &self.nets[id.index()]
    }

    pub fn net_name(&self, id: NetId) -> &str {
        &self.nets[id.index()].name
    }

    pub fn net_id(&self, name: &str) -> Option<NetId> {
        self.by_name.get(name).copied()
    }

    pub fn require_net(&self, name: &str) -> Result<NetId> {
        self.net_id(name).ok_or_else(|| Error::UnknownNet(name.to_string()))
    }

    pub fn net_ids(&self) -> impl Iterator<Item = NetId> + '_ {
        (0..self.nets.len() as u32).map(NetId)
    }

    pub fn cell_ids(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.cells.len() as u32).map(CellId)
    }

    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    pub fn clock(&self) -> Option<NetId> {
        self.clock
    }

    pub fn reset(&self) -> Option<NetId> {
        self.reset
    }

    pub fn topo(&self) -> &TopoOrder {
        &self.order
    }

    pub fn is_input(&self, id: NetId) -> bool {
        matches!(self.net(id).driver, Driver::Input)
    }

    pub fn is_output(&self, id: NetId) -> bool {
        self.outputs.contains(&id)
    }

    pub fn is_const(&self, id: NetId) -> bool {
        matches!(self.net(id).driver, Driver::Const(_))
    }

    /// Driving cell, if the net is driven by one.
    pub fn driver_cell(&self, id: NetId) -> Option<&Cell> {
        match self.net(id).driver {
            Driver::Cell(c) => Some(self.cell(c)),
            _ => None,
        }
    }

    /// True for flip-flop outputs.
    pub fn is_state(&self, id: NetId) -> bool {
        self.driver_cell(id).is_some_and(|c| c.kind.is_sequential())
    }

    /// Sources of the scan-cut view: primary inputs and flip-flop outputs.
    pub fn sources(&self) -> Vec<NetId> {
        self.net_ids()
            .filter(|&n| self.is_input(n) || self.is_state(n))
            .collect()
    }

    /// Flip-flop cells.
    pub fn flops(&self) -> impl Iterator<Item = CellId> + '_ {
        self.cell_ids().filter(|&c| self.cell(c).kind.is_sequential())
    }

    /// Nets observed by the scan-cut view: primary outputs, then every net
    /// feeding a flip-flop input pin, deduplicated in net order.
    pub fn observe_points(&self) -> Vec<NetId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &o in &self.outputs {
            if seen.insert(o) {
                out.push(o);
            }
        }
        let mut ff: Vec<NetId> = self
            .flops()
            .flat_map(|c| self.cell(c).inputs.iter().copied())
            .collect();
        ff.sort();
        for n in ff {
            if seen.insert(n) {
                out.push(n);
            }
        }
        out
    }

    /// Nets that may carry Trojan logic: not a primary input or output, not
    /// a constant, not the clock or reset.
    pub fn is_internal(&self, id: NetId) -> bool {
        !self.is_input(id)
            && !self.is_output(id)
            && !self.is_const(id)
            && Some(id) != self.clock
            && Some(id) != self.reset
    }

    /// Name-based structural signature; two netlists with equal signatures
    /// are graph-isomorphic under the identity name mapping.
    pub fn signature(&self) -> NetlistSignature {
        let mut cells = BTreeMap::new();
        for c in &self.cells {
            let ins: Vec<String> = c.inputs.iter().map(|&n| self.net_name(n).to_string()).collect();
            cells.insert(
                c.name.clone(),
                (c.kind, ins, self.net_name(c.output).to_string()),
            );
        }
        let names = |v: &[NetId]| -> Vec<String> {
            let mut s: Vec<String> = v.iter().map(|&n| self.net_name(n).to_string()).collect();
            s.sort();
            s
        };
        let mut nets: Vec<String> = self.nets.iter().map(|n| n.name.clone()).collect();
        nets.sort();
        NetlistSignature {
            inputs: names(&self.inputs),
            outputs: names(&self.outputs),
            nets,
            cells,
        }
    }

    pub fn is_isomorphic(&self, other: &Netlist) -> bool {
        self.signature() == other.signature()
    }

    /// A builder pre-loaded with this netlist, for incremental rewrites.
    pub fn to_builder(&self) -> NetlistBuilder {
        let mut b = NetlistBuilder::new(&self.name);
        for &i in &self.inputs {
            b.add_input(self.net_name(i)).expect("netlist already validated");
        }
        for c in &self.cells {
            let ins: Vec<&str> = c.inputs.iter().map(|&n| self.net_name(n)).collect();
            b.add_cell(&c.name, c.kind, &ins, self.net_name(c.output))
                .expect("netlist already validated");
        }
        for &o in &self.outputs {
            b.add_output(self.net_name(o));
        }
        if let Some(c) = self.clock {
            b.set_clock(self.net_name(c));
        }
        if let Some(r) = self.reset {
            b.set_reset(self.net_name(r));
        }
        b
    }

    /// Returns a copy with the clock and/or reset net overridden.
    pub fn with_clock_reset(&self, clock: Option<&str>, reset: Option<&str>) -> Result<Netlist> {
        let mut n = self.clone();
        if let Some(c) = clock {
            n.clock = Some(self.require_net(c)?);
        }
        if let Some(r) = reset {
            n.reset = Some(self.require_net(r)?);
        }
        Ok(n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetlistSignature {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub nets: Vec<String>,
    pub cells: BTreeMap<String, (CellKind, Vec<String>, String)>,
}

/// Incremental netlist construction. Nets are created on first mention.
#[derive(Debug, Clone)]
pub struct NetlistBuilder {
    name: String,
    cells: Vec<Cell>,
    nets: Vec<Net>,
    by_name: HashMap<String, NetId>,
    cell_names: HashMap<String, CellId>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    driven: Vec<bool>,
    clock: Option<String>,
    reset: Option<String>,
}

impl NetlistBuilder {
    pub fn new(name: &str) -> Self {
        NetlistBuilder {
            name: name.to_string(),
            cells: Vec::new(),
            nets: Vec::new(),
            by_name: HashMap::new(),
            cell_names: HashMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            driven: Vec::new(),
            clock: None,
            reset: None,
        }
    }

    pub fn has_net(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    pub fn has_cell(&self, name: &str) -> bool {
        self.cell_names.contains_key(name)
    }

    fn net(&mut self, name: &str) -> NetId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = NetId(self.nets.len() as u32);
        let driver = match const_value(name) {
            Some(v) => Driver::Const(v),
            None => Driver::Input,
        };
        let canonical = match const_value(name) {
            Some(false) => CONST0,
            Some(true) => CONST1,
            None => name,
        };
        if canonical != name {
            if let Some(&cid) = self.by_name.get(canonical) {
                self.by_name.insert(name.to_string(), cid);
                return cid;
            }
        }
        self.nets.push(Net {
            name: canonical.to_string(),
            driver,
            sinks: Vec::new(),
        });
        self.driven.push(matches!(driver, Driver::Const(_)));
        self.by_name.insert(canonical.to_string(), id);
        self.by_name.insert(name.to_string(), id);
        id
    }

    /// Declares a net without connecting it.
    pub fn declare(&mut self, name: &str) -> NetId {
        self.net(name)
    }

    pub fn add_input(&mut self, name: &str) -> Result<NetId> {
        let id = self.net(name);
        if self.driven[id.index()] {
            return Err(Error::MultipleDrivers { net: name.to_string() });
        }
        self.driven[id.index()] = true;
        self.nets[id.index()].driver = Driver::Input;
        self.inputs.push(id);
        Ok(id)
    }

    pub fn add_output(&mut self, name: &str) -> NetId {
        let id = self.net(name);
        if !self.outputs.contains(&id) {
            self.outputs.push(id);
        }
        id
    }

    pub fn add_cell(
        &mut self,
        name: &str,
        kind: CellKind,
        inputs: &[&str],
        output: &str,
    ) -> Result<CellId> {
        if inputs.len() != kind.arity() {
            return Err(Error::InvalidBinding(format!(
                "cell `{name}` of kind {kind} needs {} inputs, got {}",
                kind.arity(),
                inputs.len()
            )));
        }
        if self.cell_names.contains_key(name) {
            return Err(Error::NameCollision { name: name.to_string() });
        }
        let out = self.net(output);
        if self.driven[out.index()] {
            return Err(Error::MultipleDrivers { net: self.nets[out.index()].name.clone() });
        }
        let id = CellId(self.cells.len() as u32);
        let ins: Vec<NetId> = inputs.iter().map(|n| self.net(n)).collect();
        for (pin, &n) in ins.iter().enumerate() {
            self.nets[n.index()].sinks.push(Pin { cell: id, pin: pin as u8 });
        }
        self.driven[out.index()] = true;
        self.nets[out.index()].driver = Driver::Cell(id);
        self.cells.push(Cell {
            name: name.to_string(),
            kind,
            inputs: ins,
            output: out,
        });
        self.cell_names.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn set_clock(&mut self, name: &str) {
        self.clock = Some(name.to_string());
    }

    pub fn set_reset(&mut self, name: &str) {
        self.reset = Some(name.to_string());
    }

    /// Validates the invariants and levelizes the scan-cut view.
    ///
    /// Nets that were declared but are neither driven nor used are dropped.
    pub fn finish(self) -> Result<Netlist> {
        let NetlistBuilder {
            name,
            mut cells,
            nets,
            inputs,
            outputs,
            driven,
            clock,
            reset,
            ..
        } = self;

        // Drop unused undriven nets and renumber.
        let mut keep = vec![true; nets.len()];
        for (i, net) in nets.iter().enumerate() {
            if !driven[i] {
                if net.sinks.is_empty() && !outputs.contains(&NetId(i as u32)) {
                    keep[i] = false;
                } else {
                    return Err(Error::UndrivenNet { net: net.name.clone() });
                }
            }
        }
        let mut remap = vec![NetId(u32::MAX); nets.len()];
        let mut kept = Vec::with_capacity(nets.len());
        for (i, net) in nets.into_iter().enumerate() {
            if keep[i] {
                remap[i] = NetId(kept.len() as u32);
                kept.push(net);
            }
        }
        for c in &mut cells {
            c.output = remap[c.output.index()];
            for n in &mut c.inputs {
                *n = remap[n.index()];
            }
        }
        let inputs: Vec<NetId> = inputs.iter().map(|n| remap[n.index()]).collect();
        let outputs: Vec<NetId> = outputs.iter().map(|n| remap[n.index()]).collect();
        for &o in &outputs {
            if inputs.contains(&o) {
                return Err(Error::InvalidBinding(format!(
                    "net `{}` is both a primary input and a primary output",
                    kept[o.index()].name
                )));
            }
        }
        let by_name: HashMap<String, NetId> = kept
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), NetId(i as u32)))
            .collect();
        let lookup = |s: &Option<String>| -> Result<Option<NetId>> {
            match s {
                None => Ok(None),
                Some(s) => by_name
                    .get(s)
                    .copied()
                    .map(Some)
                    .ok_or_else(|| Error::UnknownNet(s.clone())),
            }
        };
        let clock = match lookup(&clock)? {
            Some(c) => Some(c),
            None => busiest_pin(&cells, &kept, 1),
        };
        let reset = match lookup(&reset)? {
            Some(r) => Some(r),
            None => busiest_pin(&cells, &kept, 2),
        };
        let mut n = Netlist {
            name,
            cells,
            nets: kept,
            by_name,
            inputs,
            outputs,
            clock,
            reset,
            order: TopoOrder::default(),
        };
        n.order = topo_sort(&n)?;
        Ok(n)
    }
}

/// The net feeding the most flip-flop pins at index `pin`; ties broken by
/// lexicographic net name.
fn busiest_pin(cells: &[Cell], nets: &[Net], pin: usize) -> Option<NetId> {
    let mut counts: BTreeMap<&str, (usize, NetId)> = BTreeMap::new();
    for c in cells.iter().filter(|c| c.kind.is_sequential()) {
        if let Some(&n) = c.inputs.get(pin) {
            counts.entry(nets[n.index()].name.as_str()).or_insert((0, n)).0 += 1;
        }
    }
    let mut best: Option<(usize, NetId)> = None;
    for &(count, id) in counts.values() {
        if best.is_none_or(|(b, _)| count > b) {
            best = Some((count, id));
        }
    }
    best.map(|(_, id)| id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn and_not() -> Netlist {
        let mut b = NetlistBuilder::new("t");
        b.add_input("a").unwrap();
        b.add_input("b").unwrap();
        b.add_cell("g1", CellKind::Not, &["b"], "n1").unwrap();
        b.add_cell("g2", CellKind::And(2), &["a", "n1"], "y").unwrap();
        b.add_output("y");
        b.finish().unwrap()
    }

    #[test]
    fn builder_basics() {
        let n = and_not();
        assert_eq!(n.cells().len(), 2);
        assert_eq!(n.nets().len(), 4);
        assert_eq!(n.sources().len(), 2);
        assert!(n.is_internal(n.net_id("n1").unwrap()));
        assert!(!n.is_internal(n.net_id("y").unwrap()));
    }

    #[test]
    fn multiple_drivers_rejected() {
        let mut b = NetlistBuilder::new("t");
        b.add_input("a").unwrap();
        b.add_cell("g1", CellKind::Not, &["a"], "n1").unwrap();
        let err = b.add_cell("g2", CellKind::Buf, &["a"], "n1").unwrap_err();
        assert!(matches!(err, Error::MultipleDrivers { .. }));
    }

    #[test]
    fn undriven_sink_rejected() {
        let mut b = NetlistBuilder::new("t");
        b.add_cell("g1", CellKind::Not, &["floating"], "n1").unwrap();
        b.add_output("n1");
        assert!(matches!(b.finish(), Err(Error::UndrivenNet { .. })));
    }

    #[test]
    fn constants_are_shared_pseudo_drivers() {
        let mut b = NetlistBuilder::new("t");
        b.add_input("a").unwrap();
        b.add_cell("g1", CellKind::And(2), &["a", "1'b1"], "y").unwrap();
        b.add_cell("g2", CellKind::Or(2), &["a", "1'B1"], "z").unwrap();
        b.add_output("y");
        b.add_output("z");
        let n = b.finish().unwrap();
        let c = n.net_id(CONST1).unwrap();
        assert!(n.is_const(c));
        assert_eq!(n.net(c).sinks.len(), 2);
    }

    #[test]
    fn clock_inferred_from_flop_pins() {
        let mut b = NetlistBuilder::new("t");
        for p in ["clk", "other", "d"] {
            b.add_input(p).unwrap();
        }
        b.add_cell("r1", CellKind::Dff { reset: false }, &["d", "clk"], "q1").unwrap();
        b.add_cell("r2", CellKind::Dff { reset: false }, &["q1", "clk"], "q2").unwrap();
        b.add_cell("r3", CellKind::Dff { reset: false }, &["q2", "other"], "q3").unwrap();
        b.add_output("q3");
        let n = b.finish().unwrap();
        assert_eq!(n.net_name(n.clock().unwrap()), "clk");
        assert_eq!(n.reset(), None);
    }
}
