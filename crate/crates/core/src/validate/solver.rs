// SPDX-License-Identifier: Apache-2.0

//! Conflict-driven clause-learning SAT solver.
//!
//! Two watched literals, first-UIP learning, activity-ordered decisions
//! with phase saving, Luby restarts. Complete: returns `Unsat` only on a
//! level-0 conflict.

use super::cnf::Cnf;
use std::collections::BinaryHeap;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    /// Model indexed by variable (entry 0 unused).
    Sat(Vec<bool>),
    Unsat,
    Timeout,
}

type Lit = u32;

#[inline]
fn lit_of(l: i32) -> Lit {
    let v = l.unsigned_abs() - 1;
    2 * v + (l < 0) as u32
}

#[inline]
fn var(l: Lit) -> usize {
    (l >> 1) as usize
}

#[inline]
fn neg(l: Lit) -> Lit {
    l ^ 1
}

const UNDEF: u8 = 2;

struct Solver {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    value: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: BinaryHeap<(u64, std::cmp::Reverse<usize>)>,
    phase: Vec<bool>,
    seen: Vec<bool>,
}

fn luby(mut i: u64) -> u64 {
    // 1 1 2 1 1 2 4 ...
    let mut size = 1;
    let mut seq = 0;
    while size < i + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != i {
        size = (size - 1) >> 1;
        seq -= 1;
        i %= size;
    }
    1 << seq
}

impl Solver {
    fn lit_value(&self, l: Lit) -> u8 {
        let v = self.value[var(l)];
        if v == UNDEF {
            UNDEF
        } else {
            v ^ (l & 1) as u8
        }
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = var(l);
        self.value[v] = 1 ^ (l & 1) as u8;
        self.level[v] = self.trail_lim.len() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn attach(&mut self, ci: usize) {
        let c = &self.clauses[ci];
        let (a, b) = (c[0], c[1]);
        self.watches[neg(a) as usize].push(ci);
        self.watches[neg(b) as usize].push(ci);
    }

    /// Returns a conflicting clause, if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = neg(p);
            let mut ws = std::mem::take(&mut self.watches[p as usize]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                let c = &mut self.clauses[ci];
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                let first = c[0];
                if self.value[var(first)] != UNDEF && (self.value[var(first)] ^ (first & 1) as u8) == 1 {
                    ws[j] = ci;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..c.len() {
                    let l = c[k];
                    let lv = self.value[var(l)];
                    if lv == UNDEF || (lv ^ (l & 1) as u8) == 1 {
                        c.swap(1, k);
                        let w = neg(c[1]) as usize;
                        self.watches[w].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = ci;
                j += 1;
                if self.lit_value(first) == 0 {
                    conflict = Some(ci);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(ci));
                }
            }
            ws.truncate(j);
            self.watches[p as usize] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
            self.rebuild_heap();
        }
        self.heap.push((self.activity[v].to_bits(), std::cmp::Reverse(v)));
    }

    fn rebuild_heap(&mut self) {
        self.heap = (0..self.value.len())
            .filter(|&v| self.value[v] == UNDEF)
            .map(|v| (self.activity[v].to_bits(), std::cmp::Reverse(v)))
            .collect();
    }

    fn analyze(&mut self, mut confl: usize) -> (Vec<Lit>, u32) {
        let mut learnt = vec![0];
        let mut counter = 0;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let cur = self.trail_lim.len() as u32;
        loop {
            let start = usize::from(p.is_some());
            let lits: Vec<Lit> = self.clauses[confl][start..].to_vec();
            for q in lits {
                let v = var(q);
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v);
                    if self.level[v] >= cur {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[var(self.trail[idx])] {
                    break;
                }
            }
            let pl = self.trail[idx];
            self.seen[var(pl)] = false;
            counter -= 1;
            p = Some(pl);
            if counter == 0 {
                break;
            }
            confl = self.reason[var(pl)].expect("implied literal has a reason");
        }
        learnt[0] = neg(p.expect("uip"));
        for &l in &learnt[1..] {
            self.seen[var(l)] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut mi = 1;
            for k in 2..learnt.len() {
                if self.level[var(learnt[k])] > self.level[var(learnt[mi])] {
                    mi = k;
                }
            }
            learnt.swap(1, mi);
            bt = self.level[var(learnt[1])];
        }
        self.var_inc /= 0.95;
        (learnt, bt)
    }

    fn backtrack(&mut self, lvl: u32) {
        if self.trail_lim.len() as u32 <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for k in (lim..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = var(l);
            self.phase[v] = l & 1 == 0;
            self.value[v] = UNDEF;
            self.reason[v] = None;
            self.heap.push((self.activity[v].to_bits(), std::cmp::Reverse(v)));
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = lim;
        if self.heap.len() > 8 * self.value.len() + 64 {
            self.rebuild_heap();
        }
    }

    fn pick(&mut self) -> Option<usize> {
        while let Some((_, std::cmp::Reverse(v))) = self.heap.pop() {
            if self.value[v] == UNDEF {
                return Some(v);
            }
        }
        None
    }
}

/// Decides `cnf`, giving up at `deadline`.
pub fn solve(cnf: &Cnf, deadline: Option<Instant>) -> SatResult {
    let nv = cnf.num_vars as usize;
    let mut s = Solver {
        clauses: Vec::new(),
        watches: vec![Vec::new(); 2 * nv],
        value: vec![UNDEF; nv],
        level: vec![0; nv],
        reason: vec![None; nv],
        trail: Vec::new(),
        trail_lim: Vec::new(),
        qhead: 0,
        activity: vec![0.0; nv],
        var_inc: 1.0,
        heap: BinaryHeap::new(),
        phase: vec![false; nv],
        seen: vec![false; nv],
    };
    for raw in &cnf.clauses {
        let mut c: Vec<Lit> = raw.iter().map(|&l| lit_of(l)).collect();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] ^ 1 == w[1]) {
            continue;
        }
        match c.len() {
            0 => return SatResult::Unsat,
            1 => match s.lit_value(c[0]) {
                0 => return SatResult::Unsat,
                1 => {}
                _ => s.enqueue(c[0], None),
            },
            _ => {
                s.clauses.push(c);
                s.attach(s.clauses.len() - 1);
            }
        }
    }
    s.rebuild_heap();
    let mut conflicts: u64 = 0;
    let mut restart = 0;
    let mut budget = 100 * luby(0);
    let mut since_restart = 0;
    let mut steps: u64 = 0;
    loop {
        steps += 1;
        if steps.is_multiple_of(256) && deadline.is_some_and(|d| Instant::now() >= d) {
            return SatResult::Timeout;
        }
        if let Some(confl) = s.propagate() {
            conflicts += 1;
            since_restart += 1;
            if s.trail_lim.is_empty() {
                return SatResult::Unsat;
            }
            let (learnt, bt) = s.analyze(confl);
            s.backtrack(bt);
            if learnt.len() == 1 {
                s.enqueue(learnt[0], None);
            } else {
                let first = learnt[0];
                s.clauses.push(learnt);
                let ci = s.clauses.len() - 1;
                s.attach(ci);
                s.enqueue(first, Some(ci));
            }
            continue;
        }
        if since_restart >= budget {
            restart += 1;
            budget = 100 * luby(restart);
            since_restart = 0;
            s.backtrack(0);
            continue;
        }
        match s.pick() {
            None => {
                let mut model = vec![false; nv + 1];
                for v in 0..nv {
                    model[v + 1] = s.value[v] == 1;
                }
                let _ = conflicts;
                return SatResult::Sat(model);
            }
            Some(v) => {
                s.trail_lim.push(s.trail.len());
                let l = 2 * v as u32 + u32::from(!s.phase[v]);
                s.enqueue(l, None);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cnf(nv: u32, cl: &[&[i32]]) -> Cnf {
        Cnf { num_vars: nv, clauses: cl.iter().map(|c| c.to_vec()).collect() }
    }

    fn check(c: &Cnf, m: &[bool]) -> bool {
        c.clauses.iter().all(|cl| cl.iter().any(|&l| m[l.unsigned_abs() as usize] == (l > 0)))
    }

    #[test]
    fn luby_sequence() {
        let v: Vec<u64> = (0..9).map(luby).collect();
        assert_eq!(v, vec![1, 1, 2, 1, 1, 2, 4, 1, 1]);
    }

    #[test]
    fn small_instances() {
        let c = cnf(2, &[&[1, 2], &[-1], &[-2]]);
        assert_eq!(solve(&c, None), SatResult::Unsat);
        let c = cnf(3, &[&[1, 2], &[-1, 3], &[-3]]);
        match solve(&c, None) {
            SatResult::Sat(m) => assert!(check(&c, &m)),
            r => panic!("{r:?}"),
        }
        assert_eq!(solve(&cnf(1, &[&[]]), None), SatResult::Unsat);
    }

    #[test]
    fn pigeonhole_is_unsat() {
        // 4 pigeons, 3 holes
        let (p, h) = (4, 3);
        let v = |i: i32, j: i32| i * h + j + 1;
        let mut c = Cnf { num_vars: (p * h) as u32, clauses: vec![] };
        for i in 0..p {
            c.clauses.push((0..h).map(|j| v(i, j)).collect());
        }
        for j in 0..h {
            for a in 0..p {
                for b in a + 1..p {
                    c.clauses.push(vec![-v(a, j), -v(b, j)]);
                }
            }
        }
        assert_eq!(solve(&c, None), SatResult::Unsat);
    }

    #[test]
    fn random_3sat_against_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..300 {
            let nv = rng.random_range(3..=10u32);
            let nc = rng.random_range(1..=45);
            let c = Cnf {
                num_vars: nv,
                clauses: (0..nc)
                    .map(|_| {
                        (0..3)
                            .map(|_| {
                                let x = rng.random_range(1..=nv as i32);
                                if rng.random() { x } else { -x }
                            })
                            .collect()
                    })
                    .collect(),
            };
            let brute = (0..1u32 << nv).any(|a| {
                let m: Vec<bool> = (0..=nv).map(|v| v > 0 && a >> (v - 1) & 1 == 1).collect();
                check(&c, &m)
            });
            match solve(&c, None) {
                SatResult::Sat(m) => assert!(brute && check(&c, &m)),
                SatResult::Unsat => assert!(!brute),
                SatResult::Timeout => unreachable!(),
            }
        }
    }
}
