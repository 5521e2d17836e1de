// SPDX-License-Identifier: Apache-2.0

//! Synthetic host designs: random gate-level DAGs and the c17 topology.

use crate::error::{Error, Result};
use crate::netlist::{parse_netlist, CellKind, Netlist, NetlistBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const C17: &str = "\
module c17 (N1, N2, N3, N6, N7, N22, N23);
  input N1, N2, N3, N6, N7;
  output N22, N23;
  wire N10, N11, N16, N19;
  nand NAND2_1 (N10, N1, N3);
  nand NAND2_2 (N11, N3, N6);
  nand NAND2_3 (N16, N2, N11);
  nand NAND2_4 (N19, N11, N7);
  nand NAND2_5 (N22, N10, N16);
  nand NAND2_6 (N23, N16, N19);
endmodule
";

pub fn c17() -> Netlist {
    parse_netlist(C17).expect("c17 fixture parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub name: String,
    /// Combinational gates.
    pub gates: usize,
    pub inputs: usize,
    /// Flip-flops as a fraction of `gates`.
    pub dff_fraction: f64,
    /// Probability of fanin 2, 3 and 4 (normalized).
    pub fanin: [f64; 3],
    /// Fraction of gate inputs drawn from the most recent `window` nets.
    pub locality: f64,
    pub window: usize,
    /// Chance of keeping a gate whose sampled signal probability falls
    /// outside [0.05, 0.95]; constant gates are always redrawn.
    pub skew_accept: f64,
    /// Address-decoder motifs: AND trees over `decoder_width` balanced nets
    /// anywhere upstream. Their gates count toward `gates`.
    pub decoders: usize,
    pub decoder_width: usize,
    /// Flip-flops get an active-low reset when true.
    pub reset: bool,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            name: "synth".into(),
            gates: 400,
            inputs: 64,
            dff_fraction: 0.05,
            fanin: [0.55, 0.3, 0.15],
            locality: 0.7,
            window: 24,
            skew_accept: 0.6,
            decoders: 24,
            decoder_width: 10,
            reset: true,
            seed: 1,
        }
    }
}

fn pick_kind(rng: &mut ChaCha8Rng, k: u8) -> CellKind {
    let r: f64 = rng.random();
    match r {
        x if x < 0.30 => CellKind::And(k),
        x if x < 0.45 => CellKind::Nand(k),
        x if x < 0.62 => CellKind::Or(k),
        x if x < 0.82 => CellKind::Nor(k),
        x if x < 0.87 => CellKind::Xor(2),
        x if x < 0.89 => CellKind::Xnor(2),
        x if x < 0.95 => CellKind::Not,
        _ => CellKind::Mux2,
    }
}

const SAMPLE_WORDS: usize = 64;
const MAX_PICKS: usize = 32;

fn pick_gate(rng: &mut ChaCha8Rng, cfg: &GeneratorConfig, total: f64, used: &[usize]) -> (CellKind, Vec<usize>) {
    let u = rng.random::<f64>() * total;
    let k = if u < cfg.fanin[0] {
        2
    } else if u < cfg.fanin[0] + cfg.fanin[1] {
        3
    } else {
        4
    };
    let kind = pick_kind(rng, k);
    let k = kind.arity();
    let n = used.len();
    let mut ins: Vec<usize> = Vec::with_capacity(k);
    while ins.len() < k {
        let j = if rng.random::<f64>() < cfg.locality {
            n - 1 - rng.random_range(0..cfg.window.min(n))
        } else if rng.random::<f64>() < 0.5 {
            // favour nets nothing reads yet
            let unused: Vec<usize> = (0..n).filter(|&j| used[j] == 0).collect();
            if unused.is_empty() {
                rng.random_range(0..n)
            } else {
                unused[rng.random_range(0..unused.len())]
            }
        } else {
            rng.random_range(0..n)
        };
        if !ins.contains(&j) {
            ins.push(j);
        }
    }
    (kind, ins)
}

fn simulate_gate(kind: CellKind, ins: &[usize], words: &[[u64; SAMPLE_WORDS]]) -> [u64; SAMPLE_WORDS] {
    let mut buf = vec![0u64; ins.len()];
    std::array::from_fn(|w| {
        for (b, &j) in buf.iter_mut().zip(ins) {
            *b = words[j][w];
        }
        kind.eval_words(&buf)
    })
}

/// Distinct nets with sampled probability in [0.3, 0.7] whose conjunction
/// still occurs in the sample.
fn decoder_leaves(rng: &mut ChaCha8Rng, width: usize, words: &[[u64; SAMPLE_WORDS]]) -> Option<Vec<usize>> {
    let balanced: Vec<usize> = (0..words.len())
        .filter(|&j| {
            let p = words[j].iter().map(|w| w.count_ones()).sum::<u32>() as f64 / (64 * SAMPLE_WORDS) as f64;
            (0.3..=0.7).contains(&p)
        })
        .collect();
    if balanced.len() < width {
        return None;
    }
    for _ in 0..MAX_PICKS {
        let mut leaves: Vec<usize> =
            rand::seq::index::sample(rng, balanced.len(), width).into_iter().map(|i| balanced[i]).collect();
        leaves.sort();
        let hit = (0..SAMPLE_WORDS).any(|w| leaves.iter().fold(!0u64, |a, &j| a & words[j][w]) != 0);
        if hit {
            return Some(leaves);
        }
    }
    None
}

struct State {
    b: NetlistBuilder,
    avail: Vec<String>,
    used: Vec<usize>,
    words: Vec<[u64; SAMPLE_WORDS]>,
    gates: usize,
}

impl State {
    fn add(&mut self, kind: CellKind, ins: Vec<usize>, out_words: [u64; SAMPLE_WORDS]) -> Result<()> {
        let out = format!("n{}", self.gates);
        let names: Vec<&str> = ins.iter().map(|&j| self.avail[j].as_str()).collect();
        self.b.add_cell(&format!("g{}", self.gates), kind, &names, &out)?;
        for &j in &ins {
            self.used[j] += 1;
        }
        self.avail.push(out);
        self.used.push(0);
        self.words.push(out_words);
        self.gates += 1;
        Ok(())
    }
}

/// Random DAG in the scan-cut sense: combinational logic over primary
/// inputs and flip-flop outputs; every flip-flop samples some gate output
/// and every sinkless gate output becomes a primary output. Gates are drawn
/// against a sample of random patterns so that no gate is constant on it.
pub fn generate(cfg: &GeneratorConfig) -> Result<Netlist> {
    if !(1..=100_000).contains(&cfg.gates) || cfg.inputs < 4 || !(0.0..1.0).contains(&cfg.dff_fraction) {
        return Err(Error::Config("generator: need gates >= 1, inputs >= 4, dff fraction in [0,1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut b = NetlistBuilder::new(&cfg.name);
    let flops = (cfg.gates as f64 * cfg.dff_fraction).round() as usize;
    let mut avail: Vec<String> = Vec::new();
    for i in 0..cfg.inputs {
        let name = format!("pi{i}");
        b.add_input(&name)?;
        avail.push(name);
    }
    if flops > 0 {
        b.add_input("clk")?;
        if cfg.reset {
            b.add_input("rst_n")?;
        }
    }
    for i in 0..flops {
        avail.push(format!("q{i}"));
    }
    let used = vec![0usize; avail.len()];
    let words: Vec<[u64; SAMPLE_WORDS]> =
        (0..avail.len()).map(|_| std::array::from_fn(|_| rng.random())).collect();
    let total: f64 = cfg.fanin.iter().sum();
    let every = (cfg.decoders > 0).then(|| (cfg.gates / (cfg.decoders + 1)).max(1));
    let mut st = State { b, avail, used, words, gates: 0 };
    while st.gates < cfg.gates {
        let g = st.gates;
        if let Some(e) = every {
            let tree = cfg.decoder_width.div_ceil(4) + 1;
            if g > 0 && g.is_multiple_of(e) && g / e <= cfg.decoders && g + tree <= cfg.gates {
                if let Some(leaves) = decoder_leaves(&mut rng, cfg.decoder_width, &st.words) {
                    let mut tops = Vec::new();
                    for grp in leaves.chunks(4) {
                        let kind = if grp.len() == 1 { CellKind::Buf } else { CellKind::And(grp.len() as u8) };
                        let w = simulate_gate(kind, grp, &st.words);
                        st.add(kind, grp.to_vec(), w)?;
                        tops.push(st.avail.len() - 1);
                    }
                    if tops.len() > 1 {
                        let kind = CellKind::And(tops.len() as u8);
                        let w = simulate_gate(kind, &tops, &st.words);
                        st.add(kind, tops, w)?;
                    }
                    continue;
                }
            }
        }
        let mut pick = None;
        for attempt in 0..MAX_PICKS {
            let (kind, ins) = pick_gate(&mut rng, cfg, total, &st.used);
            let out = simulate_gate(kind, &ins, &st.words);
            let ones: u32 = out.iter().map(|w| w.count_ones()).sum();
            let p = ones as f64 / (64 * SAMPLE_WORDS) as f64;
            let constant = ones == 0 || ones == (64 * SAMPLE_WORDS) as u32;
            let skewed = !(0.05..=0.95).contains(&p);
            let last = attempt + 1 == MAX_PICKS;
            if !constant && (!skewed || rng.random::<f64>() < cfg.skew_accept) || last && !constant {
                pick = Some((kind, ins, out));
                break;
            }
            if last {
                pick = Some((kind, ins, out));
            }
        }
        let (kind, ins, out_words) = pick.expect("at least one pick");
        st.add(kind, ins, out_words)?;
    }
    let State { mut b, avail, mut used, .. } = st;
    let first_gate = cfg.inputs + flops;
    for i in 0..flops {
        let j = first_gate + rng.random_range(cfg.gates / 3..cfg.gates);
        let d = avail[j].clone();
        used[j] += 1;
        let kind = CellKind::Dff { reset: cfg.reset };
        let q = format!("q{i}");
        if cfg.reset {
            b.add_cell(&format!("ff{i}"), kind, &[&d, "clk", "rst_n"], &q)?;
        } else {
            b.add_cell(&format!("ff{i}"), kind, &[&d, "clk"], &q)?;
        }
    }
    for j in first_gate..avail.len() {
        if used[j] == 0 {
            b.add_output(&avail[j]);
        }
    }
    if flops > 0 {
        b.set_clock("clk");
        if cfg.reset {
            b.set_reset("rst_n");
        }
    }
    b.finish()
}
