// SPDX-License-Identifier: Apache-2.0

//! Trojan templates: a trigger/payload subcircuit plus its port roles.

use crate::error::{Error, Result};
use crate::netlist::{parse_netlist, CellKind, Netlist, NetlistBuilder};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    Combinational,
    Sequential,
}

/// Sidecar describing a template body's ports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSpec {
    pub id: String,
    pub trigger_ports: Vec<String>,
    /// Level at which each trigger port arms the trigger; all 1 if absent.
    #[serde(default)]
    pub trigger_active: Option<Vec<bool>>,
    pub final_trigger_net: String,
    pub payload_in: String,
    pub payload_out: String,
    #[serde(default)]
    pub clock_port: Option<String>,
    #[serde(default)]
    pub reset_port: Option<String>,
    pub kind: TemplateKind,
}

#[derive(Debug, Clone)]
pub struct TrojanTemplate {
    pub id: String,
    pub body: Netlist,
    pub trigger_ports: Vec<String>,
    pub trigger_active: Vec<bool>,
    pub final_trigger_net: String,
    pub payload_in: String,
    pub payload_out: String,
    pub clock_port: Option<String>,
    pub reset_port: Option<String>,
    pub kind: TemplateKind,
}

const C1: &str = "\
module c1 (t0, t1, t2, t3, t4, t5, pin, pout);
  input t0, t1, t2, t3, t4, t5, pin;
  output pout;
  wire a0, a1, trig;
  and g0 (a0, t0, t1, t2);
  and g1 (a1, t3, t4, t5);
  and g2 (trig, a0, a1);
  xor gp (pout, pin, trig);
endmodule
";

const C2: &str = "\
module c2 (t0, t1, t2, t3, t4, pin, pout);
  input t0, t1, t2, t3, t4, pin;
  output pout;
  wire n0, a0, trig;
  nor g0 (n0, t2, t3);
  and g1 (a0, t0, t1);
  and g2 (trig, a0, n0, t4);
  xor gp (pout, pin, trig);
endmodule
";

// enable advances 00 -> 01 -> 11; a cycle without enable returns to 00
const S1: &str = "\
module s1 (t0, t1, t2, t3, t4, clk, rstn, pin, pout);
  input t0, t1, t2, t3, t4, clk, rstn, pin;
  output pout;
  wire en, s0, s1, ns1, trig;
  and g0 (en, t0, t1, t2, t3, t4);
  DFFR r0 (.D(en), .CLK(clk), .RSTN(rstn), .Q(s0));
  and g1 (ns1, en, s0);
  DFFR r1 (.D(ns1), .CLK(clk), .RSTN(rstn), .Q(s1));
  and g2 (trig, s0, s1);
  xor gp (pout, pin, trig);
endmodule
";

// saturating counter of enable cycles; fires at terminal count 11
const S2: &str = "\
module s2 (t0, t1, t2, t3, clk, rstn, pin, pout);
  input t0, t1, t2, t3, clk, rstn, pin;
  output pout;
  wire en, c0, c1, ntc, inc, nc0, carry, nc1, trig;
  and g0 (en, t0, t1, t2, t3);
  nand g1 (ntc, c0, c1);
  and g2 (inc, en, ntc);
  xor g3 (nc0, c0, inc);
  and g4 (carry, inc, c0);
  xor g5 (nc1, c1, carry);
  DFFR r0 (.D(nc0), .CLK(clk), .RSTN(rstn), .Q(c0));
  DFFR r1 (.D(nc1), .CLK(clk), .RSTN(rstn), .Q(c1));
  and g6 (trig, c0, c1);
  xor gp (pout, pin, trig);
endmodule
";

fn spec(id: &str, r: usize, active: Option<Vec<bool>>, fin: &str, seq: bool) -> TemplateSpec {
    TemplateSpec {
        id: id.into(),
        trigger_ports: (0..r).map(|i| format!("t{i}")).collect(),
        trigger_active: active,
        final_trigger_net: fin.into(),
        payload_in: "pin".into(),
        payload_out: "pout".into(),
        clock_port: seq.then(|| "clk".into()),
        reset_port: seq.then(|| "rstn".into()),
        kind: if seq { TemplateKind::Sequential } else { TemplateKind::Combinational },
    }
}

pub const BUILTIN_IDS: [&str; 4] = ["c1", "c2", "s1", "s2"];

impl TrojanTemplate {
    /// One of the shipped templates `c1`, `c2`, `s1`, `s2`.
    pub fn builtin(id: &str) -> Result<Self> {
        let (text, s) = match id {
            "c1" => (C1, spec("c1", 6, None, "trig", false)),
            "c2" => (C2, spec("c2", 5, Some(vec![true, true, false, false, true]), "trig", false)),
            "s1" => (S1, spec("s1", 5, None, "en", true)),
            "s2" => (S2, spec("s2", 4, None, "en", true)),
            _ => return Err(Error::Config(format!("unknown template `{id}`"))),
        };
        Self::from_parts(parse_netlist(text)?, s)
    }

    /// Loads `path` (Verilog) with its sidecar `path` + `.json`, or a
    /// builtin name.
    pub fn load(arg: &str) -> Result<Self> {
        if BUILTIN_IDS.contains(&arg) {
            return Self::builtin(arg);
        }
        let body = parse_netlist(&std::fs::read_to_string(arg)?)?;
        let side = Path::new(arg).with_extension("json");
        let spec: TemplateSpec = serde_json::from_str(&std::fs::read_to_string(&side)?)?;
        Self::from_parts(body, spec)
    }

    pub fn from_parts(body: Netlist, s: TemplateSpec) -> Result<Self> {
        let bad = |m: String| Err(Error::Config(format!("template {}: {m}", s.id)));
        if s.trigger_ports.is_empty() {
            return bad("no trigger ports".into());
        }
        let active = s.trigger_active.clone().unwrap_or_else(|| vec![true; s.trigger_ports.len()]);
        if active.len() != s.trigger_ports.len() {
            return bad("trigger_active length differs from trigger_ports".into());
        }
        let mut ports: Vec<&String> = s.trigger_ports.iter().collect();
        ports.push(&s.payload_in);
        ports.extend(s.clock_port.iter());
        ports.extend(s.reset_port.iter());
        for p in &ports {
            if body.net_id(p).is_none_or(|id| !body.is_input(id)) {
                return bad(format!("`{p}` is not an input port"));
            }
        }
        if body.inputs().len() != ports.len() {
            return bad("body has inputs without a declared role".into());
        }
        match body.net_id(&s.payload_out) {
            Some(id) if body.is_output(id) && body.outputs().len() == 1 => {}
            _ => return bad(format!("`{}` must be the only output", s.payload_out)),
        }
        if body.net_id(&s.final_trigger_net).is_none() {
            return bad(format!("final trigger net `{}` missing", s.final_trigger_net));
        }
        let seq = body.flops().next().is_some();
        if seq != (s.kind == TemplateKind::Sequential) {
            return bad("kind does not match the presence of flip-flops".into());
        }
        if seq && s.clock_port.is_none() {
            return Err(Error::MissingClock);
        }
        Ok(TrojanTemplate {
            id: s.id,
            body,
            trigger_ports: s.trigger_ports,
            trigger_active: active,
            final_trigger_net: s.final_trigger_net,
            payload_in: s.payload_in,
            payload_out: s.payload_out,
            clock_port: s.clock_port,
            reset_port: s.reset_port,
            kind: s.kind,
        })
    }

    pub fn r(&self) -> usize {
        self.trigger_ports.len()
    }

    pub fn sidecar(&self) -> TemplateSpec {
        TemplateSpec {
            id: self.id.clone(),
            trigger_ports: self.trigger_ports.clone(),
            trigger_active: Some(self.trigger_active.clone()),
            final_trigger_net: self.final_trigger_net.clone(),
            payload_in: self.payload_in.clone(),
            payload_out: self.payload_out.clone(),
            clock_port: self.clock_port.clone(),
            reset_port: self.reset_port.clone(),
            kind: self.kind,
        }
    }

    /// Adapts the body so the trigger arms when port `i` is at `values[i]`:
    /// ports whose active level differs get an inverter. Without a host
    /// reset the reset port is tied off.
    pub fn specialize(&self, values: &[bool], host_has_reset: bool) -> Result<TrojanTemplate> {
        if values.len() != self.r() {
            return Err(Error::InvalidBinding(format!(
                "{} trigger values for a {}-trigger template",
                values.len(),
                self.r()
            )));
        }
        let flip: Vec<&str> = self
            .trigger_ports
            .iter()
            .zip(values.iter().zip(&self.trigger_active))
            .filter(|(_, (v, a))| v != a)
            .map(|(p, _)| p.as_str())
            .collect();
        let tie_reset = if host_has_reset { None } else { self.reset_port.as_deref() };
        let body = &self.body;
        let fresh = |base: &str| -> String {
            let mut s = base.to_string();
            while body.net_id(&s).is_some() || body.cells().iter().any(|c| c.name == s) {
                s.push('_');
            }
            s
        };
        let mut b = NetlistBuilder::new(body.name());
        let mut rename = std::collections::BTreeMap::new();
        for &i in body.inputs() {
            let name = body.net_name(i);
            if Some(name) == tie_reset {
                rename.insert(name.to_string(), "1'b1".to_string());
                continue;
            }
            b.add_input(name)?;
            if flip.contains(&name) {
                let inv = fresh(&format!("{name}_inv"));
                b.add_cell(&fresh(&format!("pol_{name}")), CellKind::Not, &[name], &inv)?;
                rename.insert(name.to_string(), inv);
            }
        }
        for c in body.cells() {
            let ins: Vec<String> = c
                .inputs
                .iter()
                .map(|&n| {
                    let name = body.net_name(n);
                    rename.get(name).cloned().unwrap_or_else(|| name.to_string())
                })
                .collect();
            let refs: Vec<&str> = ins.iter().map(String::as_str).collect();
            b.add_cell(&c.name, c.kind, &refs, body.net_name(c.output))?;
        }
        for &o in body.outputs() {
            b.add_output(body.net_name(o));
        }
        if let Some(c) = &self.clock_port {
            b.set_clock(c);
        }
        if let Some(r) = self.reset_port.as_deref().filter(|_| host_has_reset) {
            b.set_reset(r);
        }
        Ok(TrojanTemplate {
            body: b.finish()?,
            trigger_active: values.to_vec(),
            reset_port: if host_has_reset { self.reset_port.clone() } else { None },
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::sim::eval_pattern;

    #[test]
    fn builtins_are_well_formed() {
        let r: Vec<usize> = BUILTIN_IDS.iter().map(|id| TrojanTemplate::builtin(id).unwrap().r()).collect();
        assert_eq!(r, vec![6, 5, 5, 4]);
        assert_eq!(TrojanTemplate::builtin("s2").unwrap().kind, TemplateKind::Sequential);
        assert!(TrojanTemplate::builtin("x9").is_err());
    }

    #[test]
    fn polarity_adapter() {
        let t = TrojanTemplate::builtin("c1").unwrap();
        let want = [true, false, true, true, false, true];
        let s = t.specialize(&want, false).unwrap();
        let b = &s.body;
        let trig = b.net_id("trig").unwrap();
        // trig is 1 exactly on the requested assignment
        for bits in 0..64u32 {
            let v = eval_pattern(b, |id| {
                let name = b.net_name(id);
                t.trigger_ports.iter().position(|p| p == name).is_some_and(|i| bits >> i & 1 == 1)
            });
            let hit = (0..6).all(|i| (bits >> i & 1 == 1) == want[i]);
            assert_eq!(v[trig.index()], hit);
        }
    }

    #[test]
    fn reset_tied_without_host_reset() {
        let t = TrojanTemplate::builtin("s1").unwrap();
        let s = t.specialize(&[true; 5], false).unwrap();
        assert!(s.body.net_id("rstn").is_none());
        assert!(s.reset_port.is_none());
        let s = t.specialize(&[true; 5], true).unwrap();
        assert!(s.body.net_id("rstn").is_some());
    }

    #[test]
    fn sidecar_round_trip() {
        let t = TrojanTemplate::builtin("c2").unwrap();
        let j = serde_json::to_string(&t.sidecar()).unwrap();
        let back: TemplateSpec = serde_json::from_str(&j).unwrap();
        let t2 = TrojanTemplate::from_parts(t.body.clone(), back).unwrap();
        assert_eq!(t2.trigger_active, t.trigger_active);
    }
}
