// SPDX-License-Identifier: Apache-2.0

//! SCOAP combinational controllability and observability, full-scan.
//!
//! Primary inputs and flip-flop outputs have `cc0 = cc1 = 1`; primary
//! outputs and every flip-flop input pin have `co = 0`. All values saturate
//! at [`SCOAP_CAP`], which also stands for "impossible" (the 1-controllability
//! of a tie-0 net, the observability of a net nothing reads).

use crate::netlist::{CellKind, Driver, Netlist};

pub const SCOAP_CAP: u32 = 1_000_000;

#[inline]
fn add(a: u32, b: u32) -> u32 {
    a.saturating_add(b).min(SCOAP_CAP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scoap {
    pub cc0: u32,
    pub cc1: u32,
    pub co: u32,
}

/// Minimum cost of driving the inputs to odd (`.1`) or even (`.0`) parity.
fn parity_costs(cc: &[(u32, u32)]) -> (u32, u32) {
    let mut even = 0u32;
    let mut odd = SCOAP_CAP;
    for &(c0, c1) in cc {
        let e = add(even, c0).min(add(odd, c1));
        let o = add(even, c1).min(add(odd, c0));
        even = e;
        odd = o;
    }
    (even, odd)
}

/// `(cc0, cc1)` of a cell output from its input controllabilities.
pub fn controllability(kind: CellKind, ins: &[(u32, u32)]) -> (u32, u32) {
    let sum0 = || ins.iter().fold(0, |a, &(c0, _)| add(a, c0));
    let sum1 = || ins.iter().fold(0, |a, &(_, c1)| add(a, c1));
    let min0 = || ins.iter().map(|&(c0, _)| c0).min().unwrap_or(SCOAP_CAP);
    let min1 = || ins.iter().map(|&(_, c1)| c1).min().unwrap_or(SCOAP_CAP);
    let (c0, c1) = match kind {
        CellKind::Buf => (ins[0].0, ins[0].1),
        CellKind::Not => (ins[0].1, ins[0].0),
        CellKind::And(_) => (min0(), sum1()),
        CellKind::Nand(_) => (sum1(), min0()),
        CellKind::Or(_) => (sum0(), min1()),
        CellKind::Nor(_) => (min1(), sum0()),
        CellKind::Xor(_) => parity_costs(ins),
        CellKind::Xnor(_) => {
            let (e, o) = parity_costs(ins);
            (o, e)
        }
        CellKind::Mux2 => {
            let (a, b, s) = (ins[0], ins[1], ins[2]);
            (
                add(s.0, a.0).min(add(s.1, b.0)),
                add(s.0, a.1).min(add(s.1, b.1)),
            )
        }
        CellKind::Dff { .. } => (0, 0),
    };
    (add(c0, 1), add(c1, 1))
}

/// Cost of observing input `pin` through the cell, excluding the output's
/// own observability and the unit gate cost.
fn side_cost(kind: CellKind, ins: &[(u32, u32)], pin: usize) -> u32 {
    let others = ins.iter().enumerate().filter(|&(j, _)| j != pin).map(|(_, &c)| c);
    match kind {
        CellKind::Buf | CellKind::Not => 0,
        CellKind::And(_) | CellKind::Nand(_) => others.fold(0, |a, (_, c1)| add(a, c1)),
        CellKind::Or(_) | CellKind::Nor(_) => others.fold(0, |a, (c0, _)| add(a, c0)),
        CellKind::Xor(_) | CellKind::Xnor(_) => others.fold(0, |a, (c0, c1)| add(a, c0.min(c1))),
        CellKind::Mux2 => {
            let (a, b, s) = (ins[0], ins[1], ins[2]);
            match pin {
                0 => s.0,
                1 => s.1,
                _ => add(a.1, b.0).min(add(a.0, b.1)),
            }
        }
        CellKind::Dff { .. } => 0,
    }
}

/// SCOAP values for every net, indexed by [`NetId`].
pub fn scoap(n: &Netlist) -> Vec<Scoap> {
    let nets = n.nets().len();
    let mut cc = vec![(SCOAP_CAP, SCOAP_CAP); nets];
    for id in n.net_ids() {
        cc[id.index()] = match n.net(id).driver {
            Driver::Input => (1, 1),
            Driver::Const(false) => (1, SCOAP_CAP),
            Driver::Const(true) => (SCOAP_CAP, 1),
            Driver::Cell(c) if n.cell(c).kind.is_sequential() => (1, 1),
            Driver::Cell(_) => cc[id.index()],
        };
    }
    let mut ins = Vec::with_capacity(8);
    for &cid in n.topo().comb_cells() {
        let c = n.cell(cid);
        ins.clear();
        ins.extend(c.inputs.iter().map(|&i| cc[i.index()]));
        cc[c.output.index()] = controllability(c.kind, &ins);
    }

    let mut co = vec![SCOAP_CAP; nets];
    for &o in n.outputs() {
        co[o.index()] = 0;
    }
    for f in n.flops() {
        for &i in &n.cell(f).inputs {
            co[i.index()] = 0;
        }
    }
    for &cid in n.topo().comb_cells().iter().rev() {
        let c = n.cell(cid);
        let out_co = co[c.output.index()];
        if out_co >= SCOAP_CAP {
            continue;
        }
        ins.clear();
        ins.extend(c.inputs.iter().map(|&i| cc[i.index()]));
        for (pin, &i) in c.inputs.iter().enumerate() {
            let v = add(add(out_co, side_cost(c.kind, &ins, pin)), 1);
            if v < co[i.index()] {
                co[i.index()] = v;
            }
        }
    }
    (0..nets)
        .map(|i| Scoap { cc0: cc[i].0, cc1: cc[i].1, co: co[i] })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    fn get(n: &Netlist, v: &[Scoap], name: &str) -> Scoap {
        v[n.net_id(name).unwrap().index()]
    }

    #[test]
    fn and_gate() {
        let n = parse_netlist("module t(a,b,y); input a,b; output y; and g(y,a,b); endmodule").unwrap();
        let v = scoap(&n);
        assert_eq!(get(&n, &v, "y"), Scoap { cc0: 2, cc1: 3, co: 0 });
        assert_eq!(get(&n, &v, "a"), Scoap { cc0: 1, cc1: 1, co: 2 });
    }

    #[test]
    fn xor_and_mux_rules() {
        let n = parse_netlist(
            "module t(a,b,s,x,m); input a,b,s; output x,m; wire na;\n\
             not g0(na,a); xor g1(x,na,b); MUX2 g2(.A(na),.B(b),.S(s),.Y(m)); endmodule",
        )
        .unwrap();
        let v = scoap(&n);
        // na: cc0 = 2, cc1 = 2
        // x = na ^ b: cc1 = min(2+1, 2+1)+1 = 4, cc0 = min(2+1, 2+1)+1 = 4
        assert_eq!(get(&n, &v, "x").cc1, 4);
        assert_eq!(get(&n, &v, "x").cc0, 4);
        // m: cc1 = min(cc0(s)+cc1(na), cc1(s)+cc1(b)) + 1 = min(3, 2)+1 = 3
        assert_eq!(get(&n, &v, "m").cc1, 3);
        // co(s) = co(m) + min(cc1(A)+cc0(B), cc0(A)+cc1(B)) + 1 = 0 + 3 + 1
        assert_eq!(get(&n, &v, "s").co, 4);
        // co(b): via x = 0 + min(cc0,cc1)(na) + 1 = 3; via m = 0 + cc1(s) + 1 = 2
        assert_eq!(get(&n, &v, "b").co, 2);
    }

    #[test]
    fn flops_are_scan_points() {
        let n = parse_netlist(
            "module t(a,clk,y); input a,clk; output y; wire d,q;\n\
             not g0(d,a); DFF r(.D(d),.CLK(clk),.Q(q)); buf g1(y,q); endmodule",
        )
        .unwrap();
        let v = scoap(&n);
        assert_eq!(get(&n, &v, "q").cc0, 1);
        assert_eq!(get(&n, &v, "d").co, 0);
        assert_eq!(get(&n, &v, "a").co, 1);
    }

    #[test]
    fn unobservable_net_caps() {
        let n = parse_netlist(
            "module t(a,b,y); input a,b; output y; wire dead; and g0(y,a,b); not g1(dead,a); endmodule",
        )
        .unwrap();
        let v = scoap(&n);
        assert_eq!(get(&n, &v, "dead").co, SCOAP_CAP);
    }
}
