// SPDX-License-Identifier: Apache-2.0

//! Gate-consistency (Tseitin) encoding of scan-cut logic cones.

use crate::netlist::{CellKind, Driver, NetId, Netlist};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

/// Clause set over variables `1..=num_vars`; literals are signed, DIMACS
/// style.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<i32>>,
}

impl Cnf {
    pub fn new_var(&mut self) -> i32 {
        self.num_vars += 1;
        self.num_vars as i32
    }

    pub fn add(&mut self, clause: &[i32]) {
        self.clauses.push(clause.to_vec());
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                let _ = write!(out, "{l} ");
            }
            out.push_str("0\n");
        }
        out
    }

    /// Emits `out <-> kind(ins)`.
    pub fn gate(&mut self, kind: CellKind, ins: &[i32], out: i32) {
        match kind {
            CellKind::Buf => self.equal(ins[0], out),
            CellKind::Not => self.equal(-ins[0], out),
            CellKind::And(_) => self.and(ins, out),
            CellKind::Nand(_) => self.and(ins, -out),
            CellKind::Or(_) => self.and(&ins.iter().map(|l| -l).collect::<Vec<_>>(), -out),
            CellKind::Nor(_) => self.and(&ins.iter().map(|l| -l).collect::<Vec<_>>(), out),
            CellKind::Xor(_) => self.parity(ins, out),
            CellKind::Xnor(_) => self.parity(ins, -out),
            CellKind::Mux2 => {
                let (a, b, s) = (ins[0], ins[1], ins[2]);
                self.add(&[s, -a, out]);
                self.add(&[s, a, -out]);
                self.add(&[-s, -b, out]);
                self.add(&[-s, b, -out]);
                self.add(&[-a, -b, out]);
                self.add(&[a, b, -out]);
            }
            CellKind::Dff { .. } => unreachable!("flip-flops are cut in the scan view"),
        }
    }

    fn equal(&mut self, a: i32, b: i32) {
        self.add(&[-a, b]);
        self.add(&[a, -b]);
    }

    fn and(&mut self, ins: &[i32], out: i32) {
        let mut big = vec![out];
        for &i in ins {
            self.add(&[-out, i]);
            big.push(-i);
        }
        self.add(&big);
    }

    pub fn xor2(&mut self, a: i32, b: i32, out: i32) {
        self.add(&[-a, -b, -out]);
        self.add(&[a, b, -out]);
        self.add(&[a, -b, out]);
        self.add(&[-a, b, out]);
    }

    fn parity(&mut self, ins: &[i32], out: i32) {
        let mut acc = ins[0];
        for (k, &i) in ins.iter().enumerate().skip(1) {
            let t = if k + 1 == ins.len() { out } else { self.new_var() };
            self.xor2(acc, i, t);
            acc = t;
        }
        if ins.len() == 1 {
            self.equal(acc, out);
        }
    }
}

/// Incremental encoder of a netlist's scan-cut view.
pub struct Encoder<'a> {
    n: &'a Netlist,
    pub cnf: Cnf,
    vars: BTreeMap<NetId, i32>,
}

impl<'a> Encoder<'a> {
    pub fn new(n: &'a Netlist) -> Self {
        Encoder { n, cnf: Cnf::default(), vars: BTreeMap::new() }
    }

    pub fn var(&self, id: NetId) -> Option<i32> {
        self.vars.get(&id).copied()
    }

    /// Encodes the transitive fanin of `roots`, returning nothing new for
    /// nets already encoded.
    pub fn encode_cone(&mut self, roots: &[NetId]) {
        let n = self.n;
        let mut cone = BTreeSet::new();
        let mut stack: Vec<NetId> = roots.iter().copied().filter(|r| !self.vars.contains_key(r)).collect();
        while let Some(x) = stack.pop() {
            if !cone.insert(x) {
                continue;
            }
            if let Some(c) = n.driver_cell(x).filter(|c| !c.kind.is_sequential()) {
                for &i in &c.inputs {
                    if !self.vars.contains_key(&i) && !cone.contains(&i) {
                        stack.push(i);
                    }
                }
            }
        }
        let mut order: Vec<NetId> = cone.into_iter().collect();
        order.sort_by_key(|&x| (n.topo().level(x), x));
        for x in order {
            let v = self.cnf.new_var();
            self.vars.insert(x, v);
            match n.net(x).driver {
                Driver::Const(b) => self.cnf.add(&[if b { v } else { -v }]),
                Driver::Cell(c) if !n.cell(c).kind.is_sequential() => {
                    let c = n.cell(c);
                    let ins: Vec<i32> = c.inputs.iter().map(|i| self.vars[i]).collect();
                    self.cnf.gate(c.kind, &ins, v);
                }
                _ => {}
            }
        }
    }

    pub fn lit(&mut self, id: NetId) -> i32 {
        self.encode_cone(&[id]);
        self.vars[&id]
    }

    /// Encodes a copy of the forward combinational cone of `victim` with the
    /// victim inverted, and returns `(good, faulty)` literal pairs for every
    /// observe point in that cone.
    pub fn flipped_cone(&mut self, victim: NetId) -> Vec<(i32, i32)> {
        let n = self.n;
        let good_v = self.lit(victim);
        let mut faulty: BTreeMap<NetId, i32> = BTreeMap::new();
        faulty.insert(victim, -good_v);
        let mut cells = BTreeSet::new();
        let mut stack = vec![victim];
        while let Some(x) = stack.pop() {
            for p in &n.net(x).sinks {
                let c = n.cell(p.cell);
                if !c.kind.is_sequential() && cells.insert((n.topo().level(c.output), c.output, p.cell)) {
                    stack.push(c.output);
                }
            }
        }
        for &(_, out, cid) in &cells {
            let c = n.cell(cid);
            let mut ins = Vec::with_capacity(c.inputs.len());
            for &i in &c.inputs {
                let l = match faulty.get(&i) {
                    Some(&f) => f,
                    None => self.lit(i),
                };
                ins.push(l);
            }
            let v = self.cnf.new_var();
            self.cnf.gate(c.kind, &ins, v);
            faulty.insert(out, v);
        }
        n.observe_points()
            .into_iter()
            .filter_map(|o| faulty.get(&o).map(|&f| (self.lit(o), f)))
            .collect()
    }
}
