// SPDX-License-Identifier: Apache-2.0

use super::{const_value, Driver, Netlist, NetlistBuilder};
use crate::error::{Error, Result};
use std::collections::{BTreeMap, HashMap};

/// How a subcircuit's ports attach to the host.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortBinding {
    /// Subcircuit input port → host net (trigger, clock and reset ports).
    pub inputs: BTreeMap<String, String>,
    /// Subcircuit input port that receives the victim's original value.
    pub payload_in: String,
    /// Subcircuit output port that takes over the victim net.
    pub payload_out: String,
    /// Host net whose driver is displaced.
    pub victim: String,
}

#[derive(Debug, Clone)]
pub struct SpliceResult {
    pub netlist: Netlist,
    /// Fresh net now driven by the victim's original driver.
    pub rewired_net: String,
    /// Host-side name of every subcircuit net (ports map to host nets).
    pub net_map: BTreeMap<String, String>,
}

/// Splices `sub` into `host`.
///
/// The victim's original driver is moved onto a fresh net that feeds the
/// subcircuit's payload input; the subcircuit's payload output then drives
/// the victim net under its original name, so every downstream sink sees
/// the modified value. Subcircuit-internal nets and cells get `prefix`.
pub fn splice_subcircuit(
    host: &Netlist,
    sub: &Netlist,
    binding: &PortBinding,
    prefix: &str,
) -> Result<SpliceResult> {
    let victim = host.require_net(&binding.victim)?;
    let victim_driver = match host.net(victim).driver {
        Driver::Cell(c) => c,
        _ => {
            return Err(Error::InvalidBinding(format!(
                "victim net `{}` is not driven by a cell",
                binding.victim
            )))
        }
    };
    let pin = sub.require_net(&binding.payload_in)?;
    if !sub.is_input(pin) {
        return Err(Error::InvalidBinding(format!(
            "`{}` is not an input of the subcircuit",
            binding.payload_in
        )));
    }
    let pout = sub.require_net(&binding.payload_out)?;
    if !sub.is_output(pout) {
        return Err(Error::InvalidBinding(format!(
            "`{}` is not an output of the subcircuit",
            binding.payload_out
        )));
    }

    let clock_ports: Vec<&str> = sub
        .flops()
        .map(|c| sub.net_name(sub.cell(c).inputs[1]))
        .collect();
    let mut map: HashMap<&str, String> = HashMap::new();
    for &i in sub.inputs() {
        let port = sub.net_name(i);
        if i == pin {
            continue;
        }
        match binding.inputs.get(port) {
            Some(h) => {
                host.require_net(h)?;
                map.insert(port, h.clone());
            }
            None if clock_ports.contains(&port) => return Err(Error::MissingClock),
            None => {
                return Err(Error::InvalidBinding(format!("port `{port}` is not bound")))
            }
        }
    }
    for port in binding.inputs.keys() {
        if sub.net_id(port).is_none_or(|id| !sub.is_input(id)) {
            return Err(Error::InvalidBinding(format!("`{port}` is not an input of the subcircuit")));
        }
    }

    let fresh = format!("{prefix}{}", binding.payload_in);
    let check_free = |name: &str| -> Result<()> {
        if host.net_id(name).is_some() {
            return Err(Error::NameCollision { name: name.to_string() });
        }
        Ok(())
    };
    check_free(&fresh)?;
    map.insert(sub.net_name(pin), fresh.clone());
    map.insert(sub.net_name(pout), binding.victim.clone());
    for id in sub.net_ids() {
        let name = sub.net_name(id);
        if map.contains_key(name) {
            continue;
        }
        if const_value(name).is_some() {
            map.insert(name, name.to_string());
            continue;
        }
        let new = format!("{prefix}{name}");
        check_free(&new)?;
        map.insert(name, new);
    }
    let host_cells: std::collections::HashSet<&str> =
        host.cells().iter().map(|c| c.name.as_str()).collect();

    let mut b = NetlistBuilder::new(host.name());
    for &i in host.inputs() {
        b.add_input(host.net_name(i))?;
    }
    for (cid, c) in host.cell_ids().zip(host.cells()) {
        let ins: Vec<&str> = c.inputs.iter().map(|&n| host.net_name(n)).collect();
        let out = if cid == victim_driver {
            fresh.as_str()
        } else {
            host.net_name(c.output)
        };
        b.add_cell(&c.name, c.kind, &ins, out)?;
    }
    for c in sub.cells() {
        let name = format!("{prefix}{}", c.name);
        if host_cells.contains(name.as_str()) {
            return Err(Error::NameCollision { name });
        }
        let ins: Vec<&str> = c.inputs.iter().map(|&n| map[sub.net_name(n)].as_str()).collect();
        b.add_cell(&name, c.kind, &ins, &map[sub.net_name(c.output)])?;
    }
    for &o in host.outputs() {
        b.add_output(host.net_name(o));
    }
    if let Some(c) = host.clock() {
        b.set_clock(host.net_name(c));
    }
    if let Some(r) = host.reset() {
        b.set_reset(host.net_name(r));
    }
    let netlist = b.finish()?;
    let net_map = map
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    Ok(SpliceResult { netlist, rewired_net: fresh, net_map })
}
