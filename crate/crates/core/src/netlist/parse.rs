// SPDX-License-Identifier: Apache-2.0

//! Structural Verilog reader.
//!
//! Accepts one flattened module with scalar `input`/`output`/`wire`
//! declarations and gate instances. Gates may be Verilog primitives
//! (`and g (y, a, b);`, output first) or library-style cells with named
//! ports (`NAND2 u1 (.A(a), .B(b), .Y(y));`). Flip-flops use `DFF`/`DFFR`
//! with named ports or the positional ISCAS89 order `dff r (CK, Q, D)`.

use super::{const_value, CellKind, Netlist, NetlistBuilder};
use crate::error::{Error, Result};
use std::collections::HashSet;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Literal(String),
    Punct(char),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1 }
    }

    fn peek_byte(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn skip_trivia(&mut self) -> Result<()> {
        loop {
            match self.peek_byte(0) {
                Some(b'\n') => {
                    self.line += 1;
                    self.pos += 1;
                }
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                Some(b'/') if self.peek_byte(1) == Some(b'/') => {
                    while let Some(c) = self.peek_byte(0) {
                        if c == b'\n' {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                Some(b'/') if self.peek_byte(1) == Some(b'*') => {
                    self.pos += 2;
                    self.skip_until(b"*/")?;
                }
                Some(b'(') if self.peek_byte(1) == Some(b'*') && self.peek_byte(2) != Some(b')') => {
                    self.pos += 2;
                    self.skip_until(b"*)")?;
                }
                Some(b'`') => {
                    // compiler directives such as `timescale: skip the line
                    while let Some(c) = self.peek_byte(0) {
                        if c == b'\n' {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn skip_until(&mut self, end: &[u8]) -> Result<()> {
        let start = self.line;
        while self.pos < self.src.len() {
            if self.src[self.pos..].starts_with(end) {
                self.pos += end.len();
                return Ok(());
            }
            if self.src[self.pos] == b'\n' {
                self.line += 1;
            }
            self.pos += 1;
        }
        Err(Error::Syntax { line: start, msg: "unterminated comment".into() })
    }

    fn next(&mut self) -> Result<Option<(Tok, usize)>> {
        self.skip_trivia()?;
        let Some(c) = self.peek_byte(0) else {
            return Ok(None);
        };
        let line = self.line;
        let start = self.pos;
        let text = |l: &Self, s: usize| String::from_utf8_lossy(&l.src[s..l.pos]).into_owned();
        if c.is_ascii_alphabetic() || c == b'_' {
            while let Some(c) = self.peek_byte(0) {
                if c.is_ascii_alphanumeric() || c == b'_' || c == b'$' {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            return Ok(Some((Tok::Ident(text(self, start)), line)));
        }
        if c == b'\\' {
            self.pos += 1;
            let s = self.pos;
            while let Some(c) = self.peek_byte(0) {
                if c.is_ascii_whitespace() {
                    break;
                }
                self.pos += 1;
            }
            if self.pos == s {
                return Err(Error::Syntax { line, msg: "empty escaped identifier".into() });
            }
            return Ok(Some((Tok::Ident(text(self, s)), line)));
        }
        if c.is_ascii_digit() || c == b'\'' {
            while let Some(c) = self.peek_byte(0) {
                if c.is_ascii_alphanumeric() || c == b'\'' || c == b'_' {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            return Ok(Some((Tok::Literal(text(self, start)), line)));
        }
        if b"(),;.#=[]:".contains(&c) {
            self.pos += 1;
            return Ok(Some((Tok::Punct(c as char), line)));
        }
        Err(Error::Syntax { line, msg: format!("unexpected character `{}`", c as char) })
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| t.1)
            .unwrap_or(1)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { line: self.line(), msg: msg.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Punct(c))
    }

    fn expect_punct(&mut self, c: char) -> Result<()> {
        match self.bump() {
            Some(Tok::Punct(p)) if p == c => Ok(()),
            other => {
                self.pos -= 1;
                self.err(format!("expected `{c}`, found {}", describe(other.as_ref())))
            }
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.bump() {
            Some(Tok::Ident(s)) => Ok(s),
            other => {
                self.pos -= 1;
                self.err(format!("expected identifier, found {}", describe(other.as_ref())))
            }
        }
    }

    /// A net reference: identifier or one-bit constant.
    fn net_ref(&mut self) -> Result<String> {
        match self.bump() {
            Some(Tok::Ident(s)) => {
                if self.is_punct('[') {
                    return self.err("bit-selects are not supported; flatten buses first");
                }
                Ok(s)
            }
            Some(Tok::Literal(s)) => {
                if const_value(&s).is_some() {
                    Ok(s)
                } else {
                    self.pos -= 1;
                    self.err(format!("unsupported literal `{s}`"))
                }
            }
            other => {
                self.pos -= 1;
                self.err(format!("expected net, found {}", describe(other.as_ref())))
            }
        }
    }
}

fn describe(t: Option<&Tok>) -> String {
    match t {
        None => "end of input".into(),
        Some(Tok::Ident(s)) | Some(Tok::Literal(s)) => format!("`{s}`"),
        Some(Tok::Punct(c)) => format!("`{c}`"),
    }
}

enum Conns {
    Positional(Vec<String>),
    Named(Vec<(String, String)>),
}

#[derive(Clone, Copy, PartialEq)]
enum Dir {
    Input,
    Output,
    Wire,
}

/// Parses a flattened structural Verilog module.
pub fn parse_netlist(text: &str) -> Result<Netlist> {
    let mut lex = Lexer::new(text);
    let mut toks = Vec::new();
    while let Some(t) = lex.next()? {
        toks.push(t);
    }
    let mut p = Parser { toks, pos: 0 };

    match p.bump() {
        Some(Tok::Ident(k)) if k == "module" => {}
        other => {
            p.pos = 0;
            return p.err(format!("expected `module`, found {}", describe(other.as_ref())));
        }
    }
    let name = p.ident()?;
    let mut b = NetlistBuilder::new(&name);
    let mut declared: HashSet<String> = HashSet::new();
    let mut header_ports: Vec<String> = Vec::new();
    let mut inputs: Vec<String> = Vec::new();
    let mut outputs: Vec<String> = Vec::new();

    if p.is_punct('#') {
        return p.err("parameterized modules are not supported");
    }
    if p.is_punct('(') {
        p.bump();
        let mut dir: Option<Dir> = None;
        while !p.is_punct(')') {
            match p.peek() {
                Some(Tok::Ident(k)) if k == "input" || k == "output" || k == "wire" => {
                    let k = k.clone();
                    p.bump();
                    if k == "wire" {
                        continue;
                    }
                    dir = Some(if k == "input" { Dir::Input } else { Dir::Output });
                    if p.is_punct('[') {
                        return p.err("vector ports are not supported; flatten buses first");
                    }
                    continue;
                }
                _ => {}
            }
            let port = p.ident()?;
            match dir {
                Some(Dir::Input) => {
                    declared.insert(port.clone());
                    inputs.push(port.clone());
                }
                Some(Dir::Output) => {
                    declared.insert(port.clone());
                    outputs.push(port.clone());
                }
                _ => {}
            }
            b.declare(&port);
            header_ports.push(port);
            if p.is_punct(',') {
                p.bump();
            }
        }
        p.expect_punct(')')?;
    }
    p.expect_punct(';')?;

    let mut auto = 0usize;
    loop {
        let line = p.line();
        let Some(tok) = p.bump() else {
            return p.err("missing `endmodule`");
        };
        let word = match tok {
            Tok::Ident(w) => w,
            other => {
                p.pos -= 1;
                return p.err(format!("unexpected {}", describe(Some(&other))));
            }
        };
        match word.as_str() {
            "endmodule" => break,
            "input" | "output" | "wire" => {
                let dir = match word.as_str() {
                    "input" => Dir::Input,
                    "output" => Dir::Output,
                    _ => Dir::Wire,
                };
                if matches!(p.peek(), Some(Tok::Ident(k)) if k == "wire") {
                    p.bump();
                }
                if p.is_punct('[') {
                    return p.err("vector declarations are not supported; flatten buses first");
                }
                loop {
                    let n = p.ident()?;
                    b.declare(&n);
                    declared.insert(n.clone());
                    match dir {
                        Dir::Input => inputs.push(n),
                        Dir::Output => outputs.push(n),
                        Dir::Wire => {}
                    }
                    if p.is_punct(',') {
                        p.bump();
                    } else {
                        break;
                    }
                }
                p.expect_punct(';')?;
            }
            "assign" => return p.err("continuous assignments are not supported"),
            "reg" | "always" | "initial" | "parameter" | "localparam" => {
                return p.err(format!("behavioral construct `{word}` is not supported"))
            }
            _ => {
                if p.is_punct('#') {
                    return p.err("parameterized instances are not supported");
                }
                let inst = if p.is_punct('(') {
                    auto += 1;
                    format!("_g{auto}")
                } else {
                    p.ident()?
                };
                p.expect_punct('(')?;
                let conns = parse_conns(&mut p)?;
                p.expect_punct(')')?;
                p.expect_punct(';')?;
                let (kind, ins, out) = resolve_cell(&word, conns, line)?;
                for n in ins.iter().chain(std::iter::once(&out)) {
                    if const_value(n).is_none() && !declared.contains(n) {
                        return Err(Error::UndeclaredNet { net: n.clone() });
                    }
                }
                if const_value(&out).is_some() {
                    return Err(Error::MultipleDrivers { net: out });
                }
                let refs: Vec<&str> = ins.iter().map(|s| s.as_str()).collect();
                b.add_cell(&inst, kind, &refs, &out).map_err(|e| match e {
                    Error::NameCollision { name } => Error::Syntax {
                        line,
                        msg: format!("duplicate instance name `{name}`"),
                    },
                    other => other,
                })?;
            }
        }
    }

    for port in &header_ports {
        if !inputs.contains(port) && !outputs.contains(port) {
            return Err(Error::Syntax {
                line: 1,
                msg: format!("port `{port}` has no direction declaration"),
            });
        }
    }
    // Declare in order so net numbering follows the source.
    for i in &inputs {
        b.add_input(i)?;
    }
    for o in &outputs {
        b.add_output(o);
    }
    b.finish()
}

fn parse_conns(p: &mut Parser) -> Result<Conns> {
    if p.is_punct(')') {
        return Ok(Conns::Positional(Vec::new()));
    }
    if p.is_punct('.') {
        let mut named = Vec::new();
        loop {
            p.expect_punct('.')?;
            let port = p.ident()?;
            p.expect_punct('(')?;
            if p.is_punct(')') {
                return p.err(format!("port `{port}` is unconnected"));
            }
            let net = p.net_ref()?;
            p.expect_punct(')')?;
            named.push((port, net));
            if p.is_punct(',') {
                p.bump();
            } else {
                break;
            }
        }
        Ok(Conns::Named(named))
    } else {
        let mut pos = Vec::new();
        loop {
            pos.push(p.net_ref()?);
            if p.is_punct(',') {
                p.bump();
            } else {
                break;
            }
        }
        Ok(Conns::Positional(pos))
    }
}

/// Splits `NAND3` into (`nand`, Some(3)).
fn split_family(cell: &str) -> (String, Option<usize>) {
    let lower = cell.to_ascii_lowercase();
    let alpha_end = lower
        .find(|c: char| !c.is_ascii_alphabetic())
        .unwrap_or(lower.len());
    let (fam, rest) = lower.split_at(alpha_end);
    if rest.is_empty() {
        (fam.to_string(), None)
    } else if rest.chars().all(|c| c.is_ascii_digit()) {
        (fam.to_string(), rest.parse().ok())
    } else {
        (lower.clone(), None)
    }
}

/// Natural order for pin names: `A2 < A10`, `A < B`.
fn pin_key(name: &str) -> (String, u64) {
    let upper = name.to_ascii_uppercase();
    let split = upper
        .find(|c: char| c.is_ascii_digit())
        .unwrap_or(upper.len());
    let num = upper[split..].parse().unwrap_or(0);
    (upper[..split].to_string(), num)
}

const OUTPUT_PINS: &[&str] = &["Y", "Z", "ZN", "O", "OUT", "Q"];

fn resolve_cell(cell: &str, conns: Conns, line: usize) -> Result<(CellKind, Vec<String>, String)> {
    let unsupported = || Error::UnsupportedCell { line, cell: cell.to_string() };
    let bad = |msg: String| Error::Syntax { line, msg };
    let (fam, hint) = split_family(cell);

    if fam == "dff" || fam == "dffr" {
        return match conns {
            Conns::Positional(v) => {
                // ISCAS89 order: (CK, Q, D[, RSTN])
                let reset = match (fam.as_str(), v.len()) {
                    ("dff", 3) => false,
                    ("dffr", 4) | ("dff", 4) => true,
                    _ => return Err(bad(format!("`{cell}` expects (CK, Q, D[, RSTN])"))),
                };
                let mut ins = vec![v[2].clone(), v[0].clone()];
                if reset {
                    ins.push(v[3].clone());
                }
                Ok((CellKind::Dff { reset }, ins, v[1].clone()))
            }
            Conns::Named(v) => {
                let mut d = None;
                let mut q = None;
                let mut clk = None;
                let mut rst = None;
                for (port, net) in v {
                    match port.to_ascii_uppercase().as_str() {
                        "D" => d = Some(net),
                        "Q" => q = Some(net),
                        "CLK" | "CK" | "C" | "CLOCK" => clk = Some(net),
                        "RSTN" | "RN" | "RST_N" | "RESETN" | "RESET_N" => rst = Some(net),
                        _ => return Err(bad(format!("unknown flip-flop port `{port}`"))),
                    }
                }
                let (Some(d), Some(q), Some(clk)) = (d, q, clk) else {
                    return Err(bad(format!("`{cell}` needs D, Q and CLK connections")));
                };
                let reset = rst.is_some();
                let mut ins = vec![d, clk];
                ins.extend(rst);
                Ok((CellKind::Dff { reset }, ins, q))
            }
        };
    }

    match conns {
        Conns::Positional(mut v) => {
            if v.len() < 2 {
                return Err(bad(format!("`{cell}` needs an output and at least one input")));
            }
            let out = v.remove(0);
            let kind = CellKind::gate(&fam, v.len()).ok_or_else(unsupported)?;
            if hint.is_some_and(|h| h != v.len() && fam != "mux") {
                return Err(bad(format!("`{cell}` connected with {} inputs", v.len())));
            }
            Ok((kind, v, out))
        }
        Conns::Named(v) => {
            let mut out = None;
            let mut ins: Vec<(String, String)> = Vec::new();
            for (port, net) in v {
                if OUTPUT_PINS.contains(&port.to_ascii_uppercase().as_str()) {
                    if out.replace(net).is_some() {
                        return Err(bad(format!("`{cell}` has more than one output")));
                    }
                } else {
                    ins.push((port, net));
                }
            }
            let out = out.ok_or_else(|| bad(format!("`{cell}` has no output connection")))?;
            if fam == "mux" {
                let mut a = None;
                let mut bb = None;
                let mut s = None;
                for (port, net) in ins {
                    match port.to_ascii_uppercase().as_str() {
                        "A" | "I0" | "D0" | "A0" => a = Some(net),
                        "B" | "I1" | "D1" | "A1" => bb = Some(net),
                        "S" | "SEL" | "S0" => s = Some(net),
                        _ => return Err(bad(format!("unknown mux port `{port}`"))),
                    }
                }
                let (Some(a), Some(bb), Some(s)) = (a, bb, s) else {
                    return Err(bad(format!("`{cell}` needs A, B and S connections")));
                };
                return Ok((CellKind::Mux2, vec![a, bb, s], out));
            }
            ins.sort_by_key(|(p, _)| pin_key(p));
            let kind = CellKind::gate(&fam, ins.len()).ok_or_else(unsupported)?;
            if hint.is_some_and(|h| h != ins.len()) {
                return Err(bad(format!("`{cell}` connected with {} inputs", ins.len())));
            }
            Ok((kind, ins.into_iter().map(|(_, n)| n).collect(), out))
        }
    }
}
