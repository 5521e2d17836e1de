// SPDX-License-Identifier: Apache-2.0

//! The fixed cell library.
//!
//! Combinational kinds evaluate on 64-bit words so a single call simulates
//! 64 independent input patterns. Pin order for each kind:
//!
//! - `Not`, `Buf`: `[A]`
//! - `And(n)` .. `Xnor(n)`: `[A, B, C, ...]`, `2 <= n <= 8`
//! - `Mux2`: `[A, B, S]`, output is `S ? B : A`
//! - `Dff`: `[D, CLK]` or `[D, CLK, RSTN]` (active-low reset)

use serde::{Deserialize, Serialize};
use std::fmt;

pub const MAX_ARITY: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CellKind {
    Not,
    Buf,
    And(u8),
    Nand(u8),
    Or(u8),
    Nor(u8),
    Xor(u8),
    Xnor(u8),
    Mux2,
    Dff { reset: bool },
}

impl CellKind {
    /// Builds a multi-input kind from its family name, checking the arity.
    pub fn gate(family: &str, arity: usize) -> Option<CellKind> {
        let fam = family.to_ascii_lowercase();
        match fam.as_str() {
            "not" | "inv" if arity == 1 => Some(CellKind::Not),
            "buf" if arity == 1 => Some(CellKind::Buf),
            "mux2" | "mux" if arity == 3 => Some(CellKind::Mux2),
            _ => {
                if !(2..=MAX_ARITY as usize).contains(&arity) {
                    return None;
                }
                let n = arity as u8;
                Some(match fam.as_str() {
                    "and" => CellKind::And(n),
                    "nand" => CellKind::Nand(n),
                    "or" => CellKind::Or(n),
                    "nor" => CellKind::Nor(n),
                    "xor" => CellKind::Xor(n),
                    "xnor" => CellKind::Xnor(n),
                    _ => return None,
                })
            }
        }
    }

    pub fn arity(self) -> usize {
        match self {
            CellKind::Not | CellKind::Buf => 1,
            CellKind::And(n)
            | CellKind::Nand(n)
            | CellKind::Or(n)
            | CellKind::Nor(n)
            | CellKind::Xor(n)
            | CellKind::Xnor(n) => n as usize,
            CellKind::Mux2 => 3,
            CellKind::Dff { reset } => 2 + reset as usize,
        }
    }

    pub fn is_sequential(self) -> bool {
        matches!(self, CellKind::Dff { .. })
    }

    /// Lower-case family name, as used for Verilog primitives.
    pub fn family(self) -> &'static str {
        match self {
            CellKind::Not => "not",
            CellKind::Buf => "buf",
            CellKind::And(_) => "and",
            CellKind::Nand(_) => "nand",
            CellKind::Or(_) => "or",
            CellKind::Nor(_) => "nor",
            CellKind::Xor(_) => "xor",
            CellKind::Xnor(_) => "xnor",
            CellKind::Mux2 => "mux2",
            CellKind::Dff { reset: false } => "dff",
            CellKind::Dff { reset: true } => "dffr",
        }
    }

    /// Evaluates the cell on 64 patterns at once. Panics for `Dff`.
    pub fn eval_words(self, ins: &[u64]) -> u64 {
        debug_assert_eq!(ins.len(), self.arity());
        match self {
            CellKind::Not => !ins[0],
            CellKind::Buf => ins[0],
            CellKind::And(_) => ins.iter().fold(!0, |a, &b| a & b),
            CellKind::Nand(_) => !ins.iter().fold(!0, |a, &b| a & b),
            CellKind::Or(_) => ins.iter().fold(0, |a, &b| a | b),
            CellKind::Nor(_) => !ins.iter().fold(0, |a, &b| a | b),
            CellKind::Xor(_) => ins.iter().fold(0, |a, &b| a ^ b),
            CellKind::Xnor(_) => !ins.iter().fold(0, |a, &b| a ^ b),
            CellKind::Mux2 => (ins[0] & !ins[2]) | (ins[1] & ins[2]),
            CellKind::Dff { .. } => panic!("eval_words called on a flip-flop"),
        }
    }

    pub fn eval(self, ins: &[bool]) -> bool {
        let words: Vec<u64> = ins.iter().map(|&b| if b { !0 } else { 0 }).collect();
        self.eval_words(&words) & 1 == 1
    }

    /// Output column over all `2^arity` input assignments; input `i` is bit
    /// `i` of the row index. `None` for flip-flops.
    pub fn truth_table(self) -> Option<Vec<bool>> {
        if self.is_sequential() {
            return None;
        }
        let n = self.arity();
        let mut ins = vec![false; n];
        let rows = (0..1usize << n)
            .map(|row| {
                for (i, v) in ins.iter_mut().enumerate() {
                    *v = row >> i & 1 == 1;
                }
                self.eval(&ins)
            })
            .collect();
        Some(rows)
    }

    /// Every supported kind, for exhaustive tests.
    pub fn all() -> Vec<CellKind> {
        let mut v = vec![CellKind::Not, CellKind::Buf, CellKind::Mux2];
        for n in 2..=MAX_ARITY {
            v.extend([
                CellKind::And(n),
                CellKind::Nand(n),
                CellKind::Or(n),
                CellKind::Nor(n),
                CellKind::Xor(n),
                CellKind::Xnor(n),
            ]);
        }
        v.push(CellKind::Dff { reset: false });
        v.push(CellKind::Dff { reset: true });
        v
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellKind::And(n)
            | CellKind::Nand(n)
            | CellKind::Or(n)
            | CellKind::Nor(n)
            | CellKind::Xor(n)
            | CellKind::Xnor(n) => write!(f, "{}{}", self.family().to_uppercase(), n),
            _ => write!(f, "{}", self.family().to_uppercase()),
        }
    }
}
