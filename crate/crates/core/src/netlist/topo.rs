// SPDX-License-Identifier: Apache-2.0

use super::{CellId, Driver, NetId, Netlist};
use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Levelization of the scan-cut view.
///
/// Sources (primary inputs, flip-flop outputs, constants) sit at level 0 and
/// a combinational cell's output is one more than its deepest input.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopoOrder {
    level: Vec<u32>,
    cells: Vec<CellId>,
}

impl TopoOrder {
    pub fn level(&self, net: NetId) -> u32 {
        self.level[net.index()]
    }

    pub fn levels(&self) -> &[u32] {
        &self.level
    }

    /// Combinational cells in evaluation order, sorted by (level, output
    /// net name).
    pub fn comb_cells(&self) -> &[CellId] {
        &self.cells
    }

    pub fn max_level(&self) -> u32 {
        self.level.iter().copied().max().unwrap_or(0)
    }

    /// Name-keyed view, independent of internal net numbering.
    pub fn by_name(&self, n: &Netlist) -> BTreeMap<String, u32> {
        n.net_ids()
            .map(|id| (n.net_name(id).to_string(), self.level(id)))
            .collect()
    }
}

/// Levelizes the scan-cut view of `n`.
pub fn topo_sort(n: &Netlist) -> Result<TopoOrder> {
    let comb = |net: NetId| match n.net(net).driver {
        Driver::Cell(c) => !n.cell(c).kind.is_sequential(),
        _ => false,
    };
    let mut pending = vec![0usize; n.cells().len()];
    let mut ready: Vec<CellId> = Vec::new();
    for id in n.cell_ids() {
        let c = n.cell(id);
        if c.kind.is_sequential() {
            continue;
        }
        pending[id.index()] = c.inputs.iter().filter(|&&i| comb(i)).count();
        if pending[id.index()] == 0 {
            ready.push(id);
        }
    }
    let mut level = vec![0u32; n.nets().len()];
    let mut done = Vec::with_capacity(n.cells().len());
    while let Some(id) = ready.pop() {
        let c = n.cell(id);
        let l = c.inputs.iter().map(|&i| level[i.index()]).max().unwrap_or(0) + 1;
        level[c.output.index()] = l;
        done.push(id);
        for pin in &n.net(c.output).sinks {
            let sink = n.cell(pin.cell);
            if sink.kind.is_sequential() {
                continue;
            }
            let p = &mut pending[pin.cell.index()];
            *p -= 1;
            if *p == 0 {
                ready.push(pin.cell);
            }
        }
    }
    let comb_total = n.cells().iter().filter(|c| !c.kind.is_sequential()).count();
    if done.len() != comb_total {
        let stuck = n
            .cell_ids()
            .filter(|&c| !n.cell(c).kind.is_sequential() && pending[c.index()] > 0)
            .map(|c| n.net_name(n.cell(c).output))
            .min()
            .unwrap_or_default();
        return Err(Error::CombinationalCycle { net: stuck.to_string() });
    }
    done.sort_by(|&a, &b| {
        let oa = n.cell(a).output;
        let ob = n.cell(b).output;
        level[oa.index()]
            .cmp(&level[ob.index()])
            .then_with(|| n.net_name(oa).cmp(n.net_name(ob)))
    });
    Ok(TopoOrder { level, cells: done })
}
