// SPDX-License-Identifier: Apache-2.0

use crate::netlist::{NetId, Netlist};
use std::collections::VecDeque;

/// Distance sentinel for nets that cannot reach (or be reached from) the
/// boundary in question.
pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Structural {
    pub dist_pi: u32,
    pub dist_po: u32,
    pub dist_ff_in: u32,
    pub dist_ff_out: u32,
    pub fanin_imm: u32,
    pub fanout_imm: u32,
    pub fanin_nbr: u32,
    pub fanout_nbr: u32,
}

fn comb_driver(n: &Netlist, id: NetId) -> Option<&crate::netlist::Cell> {
    n.driver_cell(id).filter(|c| !c.kind.is_sequential())
}

/// Breadth-first cell-hop distance from `seeds`, walking toward sinks.
fn bfs_forward(n: &Netlist, seeds: impl IntoIterator<Item = NetId>) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; n.nets().len()];
    let mut q = VecDeque::new();
    for s in seeds {
        if dist[s.index()] != 0 {
            dist[s.index()] = 0;
            q.push_back(s);
        }
    }
    while let Some(net) = q.pop_front() {
        let d = dist[net.index()];
        for pin in &n.net(net).sinks {
            let c = n.cell(pin.cell);
            if c.kind.is_sequential() {
                continue;
            }
            if dist[c.output.index()] == UNREACHABLE {
                dist[c.output.index()] = d + 1;
                q.push_back(c.output);
            }
        }
    }
    dist
}

/// Breadth-first cell-hop distance to `seeds`, walking toward drivers.
fn bfs_backward(n: &Netlist, seeds: impl IntoIterator<Item = NetId>) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; n.nets().len()];
    let mut q = VecDeque::new();
    for s in seeds {
        if dist[s.index()] != 0 {
            dist[s.index()] = 0;
            q.push_back(s);
        }
    }
    while let Some(net) = q.pop_front() {
        let d = dist[net.index()];
        if let Some(c) = comb_driver(n, net) {
            for &i in &c.inputs {
                if dist[i.index()] == UNREACHABLE {
                    dist[i.index()] = d + 1;
                    q.push_back(i);
                }
            }
        }
    }
    dist
}

/// Distance and fan structure features for every net, indexed by [`NetId`].
///
/// Distances count cells traversed in the scan-cut view. Immediate fanin is
/// the input count of the driving combinational gate (0 for primary inputs,
/// constants and flip-flop outputs); immediate fanout is the number of sink
/// pins. Neighboring counts sum the immediate counts one gate further out.
pub fn structural_features(n: &Netlist) -> Vec<Structural> {
    let dist_pi = bfs_forward(n, n.inputs().iter().copied());
    let dist_po = bfs_backward(n, n.outputs().iter().copied());
    let ff_d: Vec<NetId> = n.flops().map(|f| n.cell(f).inputs[0]).collect();
    let ff_q: Vec<NetId> = n.flops().map(|f| n.cell(f).output).collect();
    let dist_ff_in = bfs_backward(n, ff_d);
    let dist_ff_out = bfs_forward(n, ff_q);

    let fanin_imm: Vec<u32> = n
        .net_ids()
        .map(|id| comb_driver(n, id).map_or(0, |c| c.inputs.len() as u32))
        .collect();
    let fanout_imm: Vec<u32> = n.nets().iter().map(|net| net.sinks.len() as u32).collect();

    n.net_ids()
        .map(|id| {
            let i = id.index();
            let fanin_nbr = comb_driver(n, id)
                .map_or(0, |c| c.inputs.iter().map(|&x| fanin_imm[x.index()]).sum());
            let fanout_nbr = n
                .net(id)
                .sinks
                .iter()
                .filter_map(|p| {
                    let c = n.cell(p.cell);
                    (!c.kind.is_sequential()).then(|| fanout_imm[c.output.index()])
                })
                .sum();
            Structural {
                dist_pi: dist_pi[i],
                dist_po: dist_po[i],
                dist_ff_in: dist_ff_in[i],
                dist_ff_out: dist_ff_out[i],
                fanin_imm: fanin_imm[i],
                fanout_imm: fanout_imm[i],
                fanin_nbr,
                fanout_nbr,
            }
        })
        .collect()
}
