// SPDX-License-Identifier: Apache-2.0

use super::{CellKind, Driver, Netlist};
use std::fmt::Write;

fn ident(name: &str) -> String {
    let simple = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$');
    if simple || super::const_value(name).is_some() {
        name.to_string()
    } else {
        format!("\\{name} ")
    }
}

fn write_list(out: &mut String, kw: &str, names: &[String]) {
    for chunk in names.chunks(8) {
        let _ = writeln!(out, "  {kw} {};", chunk.join(", "));
    }
}

/// Writes `n` as structural Verilog that [`super::parse_netlist`] reads back
/// into an isomorphic netlist.
pub fn emit_netlist(n: &Netlist) -> String {
    let mut out = String::new();
    let pis: Vec<String> = n.inputs().iter().map(|&i| ident(n.net_name(i))).collect();
    let pos: Vec<String> = n.outputs().iter().map(|&o| ident(n.net_name(o))).collect();
    let ports: Vec<String> = pis.iter().chain(pos.iter()).cloned().collect();
    let _ = writeln!(out, "module {} ({});", ident(n.name()), ports.join(", "));
    write_list(&mut out, "input", &pis);
    write_list(&mut out, "output", &pos);
    let wires: Vec<String> = n
        .net_ids()
        .filter(|&id| {
            !n.is_input(id) && !n.is_output(id) && !matches!(n.net(id).driver, Driver::Const(_))
        })
        .map(|id| ident(n.net_name(id)))
        .collect();
    write_list(&mut out, "wire", &wires);
    out.push('\n');
    for c in n.cells() {
        let name = |id| ident(n.net_name(id));
        match c.kind {
            CellKind::Dff { reset } => {
                let _ = write!(
                    out,
                    "  {} {} (.D({}), .CLK({}), ",
                    if reset { "DFFR" } else { "DFF" },
                    ident(&c.name),
                    name(c.inputs[0]),
                    name(c.inputs[1])
                );
                if reset {
                    let _ = write!(out, ".RSTN({}), ", name(c.inputs[2]));
                }
                let _ = writeln!(out, ".Q({}));", name(c.output));
            }
            CellKind::Mux2 => {
                let _ = writeln!(
                    out,
                    "  MUX2 {} (.A({}), .B({}), .S({}), .Y({}));",
                    ident(&c.name),
                    name(c.inputs[0]),
                    name(c.inputs[1]),
                    name(c.inputs[2]),
                    name(c.output)
                );
            }
            kind => {
                let mut conns = vec![name(c.output)];
                conns.extend(c.inputs.iter().map(|&i| name(i)));
                let _ = writeln!(out, "  {} {} ({});", kind.family(), ident(&c.name), conns.join(", "));
            }
        }
    }
    out.push_str("endmodule\n");
    out
}

/// Text edge list of the scan-cut graph, one `driver -> sink [cell]` line
/// per pin, for debugging.
pub fn dump_edges(n: &Netlist) -> String {
    let mut out = String::new();
    for c in n.cells() {
        for (pin, &i) in c.inputs.iter().enumerate() {
            let _ = writeln!(
                out,
                "{} -> {} [{} {}.{}]",
                n.net_name(i),
                n.net_name(c.output),
                c.kind,
                c.name,
                pin
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use crate::netlist::parse_netlist;

    #[test]
    fn round_trip_small() {
        let src = "module top (a, b, y);\n input a, b;\n output y;\n wire n1;\n \
                   not g1 (n1, b);\n and g2 (y, a, n1);\nendmodule\n";
        let n = parse_netlist(src).unwrap();
        let back = parse_netlist(&super::emit_netlist(&n)).unwrap();
        assert!(n.is_isomorphic(&back));
    }

    #[test]
    fn round_trip_buffers_only() {
        let src = "module wires (a, b, x, y); input a, b; output x, y;\n\
                   buf u0 (x, a); buf u1 (y, b); endmodule";
        let n = parse_netlist(src).unwrap();
        let text = super::emit_netlist(&n);
        assert!(n.is_isomorphic(&parse_netlist(&text).unwrap()));
    }

    #[test]
    fn escaped_names_round_trip() {
        let src = "module t (a, y); input a; output y; wire \\n[0] ;\n\
                   not g (\\n[0] , a); DFFR \\r.x (.D(\\n[0] ), .CLK(a), .RSTN(1'b1), .Q(y));\nendmodule";
        let n = parse_netlist(src).unwrap();
        assert!(n.net_id("n[0]").is_some());
        let text = super::emit_netlist(&n);
        assert!(n.is_isomorphic(&parse_netlist(&text).unwrap()));
    }
}
