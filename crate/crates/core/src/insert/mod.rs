// SPDX-License-Identifier: Apache-2.0

//! Learned Trojan insertion: score nets, enumerate trigger sets, validate,
//! pair payloads, evaluate virtual Trojans against a sampled reference and
//! splice the closest ones.

pub mod template;

pub use template::{TemplateKind, TemplateSpec, TrojanTemplate, BUILTIN_IDS};

use crate::error::{Error, Result};
use crate::features::sim::derive_seed;
use crate::features::{extract_features, FeatureTable, TrojanFeatureVector, DEFAULT_VECTORS, NUM_TROJAN_FEATURES};
use crate::ml::{sample_reference, ModelBundle};
use crate::netlist::{emit_netlist, splice_subcircuit, NetId, Netlist, PortBinding, TopoOrder};
use crate::validate::{
    check_no_comb_loop, justify_activation, justify_within, verify_inserted, TriggerCondition,
    VerifyReport, Witness,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Duration;

pub const DEFAULT_POOL_FACTOR: usize = 20;
/// Trigger sets enumerated per requested Trojan before giving up.
pub const ENUMERATION_FACTOR: usize = 1000;

/// How trigger and payload nets are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// By the bundle's trigger and payload classifiers.
    Model,
    /// By a seeded random permutation.
    Random,
}

/// How the virtual pool is ordered before binding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    Distance,
    /// Pool order, as enumerated.
    Unsorted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InsertionConfig {
    pub num_trojans: usize,
    pub pool_factor: usize,
    pub weights: [f64; NUM_TROJAN_FEATURES],
    pub candidate_cap: usize,
    /// Payload nets tried (activation checks) per trigger set.
    pub payload_cap: usize,
    pub seed: u64,
    pub vectors: usize,
    pub verify_vectors: usize,
    pub timeout_ms: u64,
    pub diversity: bool,
    pub selection: Selection,
    pub ranking: Ranking,
}

impl Default for InsertionConfig {
    fn default() -> Self {
        InsertionConfig {
            num_trojans: 1,
            pool_factor: DEFAULT_POOL_FACTOR,
            weights: [1.0; NUM_TROJAN_FEATURES],
            candidate_cap: 64,
            payload_cap: 16,
            seed: 0,
            vectors: DEFAULT_VECTORS,
            verify_vectors: 10_000,
            timeout_ms: 10_000,
            diversity: true,
            selection: Selection::Model,
            ranking: Ranking::Distance,
        }
    }
}

impl InsertionConfig {
    pub fn check(&self) -> Result<()> {
        if self.pool_factor < 1 {
            return Err(Error::Config("pool factor must be at least 1".into()));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || self.weights.iter().all(|&w| w == 0.0) {
            return Err(Error::Config("weights must be non-negative and not all zero".into()));
        }
        if self.candidate_cap == 0 || self.payload_cap == 0 {
            return Err(Error::Config("caps must be positive".into()));
        }
        Ok(())
    }

    fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

/// Sorts scored nets by descending fitness (name breaks ties) and keeps at
/// most `cap`. Nets above 0.5 therefore come first; the rest only fill in.
pub fn select_trigger_candidates(scored: &[(String, f64)], cap: usize) -> Result<Vec<(String, f64)>> {
    if scored.is_empty() {
        return Err(Error::NoCandidates);
    }
    let mut v = scored.to_vec();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(cap);
    Ok(v)
}

/// Lazy enumeration of index sets into a fitness-sorted candidate list.
///
/// Sets come out in lexicographic index order. With diversity on, a pick
/// may not repeat the previous pick's score while a differently scored
/// candidate is still ahead of it. An optional prefix check prunes every
/// extension of a rejected partial set.
pub struct TriggerSets<'a> {
    scores: Vec<f64>,
    r: usize,
    diversity: bool,
    stack: Vec<usize>,
    next: usize,
    yielded: usize,
    max: usize,
    relaxed: bool,
    done: bool,
    check: Option<Box<dyn FnMut(&[usize]) -> bool + 'a>>,
}

pub fn enumerate_trigger_sets<'a>(
    candidates: &[(String, f64)],
    r: usize,
    diversity: bool,
    max_sets: usize,
) -> Result<TriggerSets<'a>> {
    if r == 0 || candidates.len() < r {
        return Err(Error::InsufficientCandidates { need: r, got: candidates.len() });
    }
    Ok(TriggerSets {
        scores: candidates.iter().map(|c| c.1).collect(),
        r,
        diversity,
        stack: Vec::with_capacity(r),
        next: 0,
        yielded: 0,
        max: max_sets,
        relaxed: false,
        done: false,
        check: None,
    })
}

impl<'a> TriggerSets<'a> {
    /// Only extends partial sets (and yields full ones) accepted by `f`.
    pub fn with_prefix_check(mut self, f: impl FnMut(&[usize]) -> bool + 'a) -> Self {
        self.check = Some(Box::new(f));
        self
    }

    fn allowed(&mut self, i: usize) -> bool {
        if !self.diverse(i) {
            return false;
        }
        match &mut self.check {
            Some(f) => {
                let mut prefix = self.stack.clone();
                prefix.push(i);
                f(&prefix)
            }
            None => true,
        }
    }

    fn diverse(&mut self, i: usize) -> bool {
        let Some(&p) = self.stack.last() else { return true };
        if !self.diversity || self.scores[i] != self.scores[p] {
            return true;
        }
        // scores are sorted, so a different one remains iff the last differs
        let other_remains = *self.scores.last().expect("non-empty") != self.scores[p];
        if !other_remains && !self.relaxed {
            self.relaxed = true;
            log::info!("all remaining candidates share one score; diversity relaxed");
        }
        !other_remains
    }
}

impl Iterator for TriggerSets<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let n = self.scores.len();
        while !self.done && self.yielded < self.max {
            let depth = self.stack.len();
            if depth == self.r {
                let out = self.stack.clone();
                self.next = self.stack.pop().expect("r >= 1") + 1;
                self.yielded += 1;
                return Some(out);
            }
            let last = n - (self.r - depth);
            let mut found = None;
            let mut i = self.next;
            while i <= last {
                if self.allowed(i) {
                    found = Some(i);
                    break;
                }
                i += 1;
            }
            match found {
                Some(i) => {
                    self.stack.push(i);
                    self.next = i + 1;
                }
                None => match self.stack.pop() {
                    Some(p) => self.next = p + 1,
                    None => self.done = true,
                },
            }
        }
        None
    }
}

/// Distinct uniformly drawn `r`-subsets of `0..n`, at most `max_sets` draws.
pub fn random_trigger_sets(n: usize, r: usize, max_sets: usize, seed: u64) -> Result<impl Iterator<Item = Vec<usize>>> {
    if r == 0 || n < r {
        return Err(Error::InsufficientCandidates { need: r, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::BTreeSet::new();
    Ok((0..max_sets).filter_map(move |_| {
        let mut s = rand::seq::index::sample(&mut rng, n, r).into_vec();
        s.sort_unstable();
        seen.insert(s.clone()).then_some(s)
    }))
}

/// Picks the highest-ranked payload that sits above every trigger net and
/// whose inversion is observable while the trigger condition holds.
pub fn pair_payload(
    n: &Netlist,
    triggers: &[NetId],
    cond: &TriggerCondition,
    ranked: &[NetId],
    order: &TopoOrder,
    attempts: usize,
    timeout: Duration,
) -> Result<(NetId, Witness)> {
    let mut tried = 0;
    for &p in ranked {
        if triggers.contains(&p) || !check_no_comb_loop(n, triggers, p, order) {
            continue;
        }
        if tried == attempts {
            break;
        }
        tried += 1;
        let j = justify_activation(n, cond, p, timeout)?;
        if let Some(w) = j.witness {
            return Ok((p, w));
        }
    }
    Err(Error::NoLegalPayload)
}

/// Prefix for Trojan-internal names that no host net or cell starts with.
pub fn choose_prefix(host: &Netlist) -> String {
    (0..)
        .map(|i| if i == 0 { "ht_".to_string() } else { format!("ht{i}_") })
        .find(|p| {
            !host.nets().iter().any(|x| x.name.starts_with(p.as_str()))
                && !host.cells().iter().any(|c| c.name.starts_with(p.as_str()))
        })
        .expect("some prefix is free")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerNet {
    pub net: String,
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualTrojan {
    pub trigger_nets: Vec<TriggerNet>,
    pub payload_net: String,
    pub features: TrojanFeatureVector,
    pub distance: f64,
    pub valid: bool,
    /// Activation witness over host sources.
    pub witness: Witness,
}

impl VirtualTrojan {
    pub fn condition(&self) -> TriggerCondition {
        TriggerCondition {
            assignments: self.trigger_nets.iter().map(|t| (t.net.clone(), t.value)).collect(),
        }
    }

    fn key(&self) -> String {
        let mut s: Vec<&str> = self.trigger_nets.iter().map(|t| t.net.as_str()).collect();
        s.push(&self.payload_net);
        s.join(",")
    }
}

/// Splices `t` (specialized to the trigger values) into a copy of `host`.
pub fn splice_template(
    host: &Netlist,
    t: &TrojanTemplate,
    triggers: &[TriggerNet],
    payload: &str,
    prefix: &str,
) -> Result<(Netlist, String)> {
    let values: Vec<bool> = triggers.iter().map(|t| t.value).collect();
    let st = t.specialize(&values, host.reset().is_some())?;
    let mut inputs: std::collections::BTreeMap<String, String> = st
        .trigger_ports
        .iter()
        .zip(triggers)
        .map(|(p, tn)| (p.clone(), tn.net.clone()))
        .collect();
    if let Some(c) = &st.clock_port {
        let hc = host.clock().ok_or(Error::MissingClock)?;
        inputs.insert(c.clone(), host.net_name(hc).to_string());
    }
    if let (Some(r), Some(hr)) = (&st.reset_port, host.reset()) {
        inputs.insert(r.clone(), host.net_name(hr).to_string());
    }
    let binding = PortBinding {
        inputs,
        payload_in: st.payload_in.clone(),
        payload_out: st.payload_out.clone(),
        victim: payload.to_string(),
    };
    let res = splice_subcircuit(host, &st.body, &binding, prefix)?;
    let fin = res.net_map[&st.final_trigger_net].clone();
    Ok((res.netlist, fin))
}

/// Computes the Trojan features as if the binding were inserted; the
/// spliced copy is dropped.
pub fn build_virtual(
    host: &Netlist,
    t: &TrojanTemplate,
    triggers: &[TriggerNet],
    payload: &str,
    witness: Witness,
    vectors: usize,
    seed: u64,
) -> Result<VirtualTrojan> {
    let prefix = choose_prefix(host);
    let (spliced, fin) = splice_template(host, t, triggers, payload, &prefix)?;
    let table = extract_features(&spliced, vectors, seed);
    let features = table.trojan(spliced.require_net(&fin)?);
    Ok(VirtualTrojan {
        trigger_nets: triggers.to_vec(),
        payload_net: payload.to_string(),
        features,
        distance: 0.0,
        valid: true,
        witness,
    })
}

/// Counts kept while filling the virtual pool.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolLedger {
    pub requested: usize,
    pub target: usize,
    pub sets_enumerated: usize,
    pub unsatisfiable: usize,
    pub timeouts: usize,
    pub no_payload: usize,
    pub splice_failures: usize,
    pub valid: usize,
    pub exhausted: bool,
}

enum SetOutcome {
    Unsat,
    Timeout,
    NoPayload,
    SpliceFailure,
    Valid(VirtualTrojan),
}

/// Host-side inputs shared by pool construction.
pub struct HostView<'a> {
    pub netlist: &'a Netlist,
    pub table: &'a FeatureTable,
    /// Ranked trigger candidates (name, score).
    pub candidates: Vec<(String, f64)>,
    /// Payload nets, best first.
    pub payloads: Vec<NetId>,
}

/// Eligible trigger nets: internal, not constant, not clock or reset.
pub fn trigger_eligible(n: &Netlist) -> Vec<NetId> {
    n.net_ids().filter(|&id| n.is_internal(id)).collect()
}

/// Eligible payload nets: internal and driven by a combinational cell.
pub fn payload_eligible(n: &Netlist) -> Vec<NetId> {
    n.net_ids()
        .filter(|&id| n.is_internal(id) && n.driver_cell(id).is_some_and(|c| !c.kind.is_sequential()))
        .collect()
}

fn trigger_nets(host: &HostView, set: &[usize]) -> Result<Vec<TriggerNet>> {
    set.iter()
        .map(|&i| {
            let name = &host.candidates[i].0;
            let (value, _) = host.table.rare(host.netlist.require_net(name)?);
            Ok(TriggerNet { net: name.clone(), value })
        })
        .collect()
}

/// Whether a partial trigger set can still be justified; timeouts count as
/// possible.
fn prefix_justifiable(host: &HostView, prefix: &[usize], cfg: &InsertionConfig) -> bool {
    let Ok(triggers) = trigger_nets(host, prefix) else { return false };
    let cond = TriggerCondition { assignments: triggers.into_iter().map(|t| (t.net, t.value)).collect() };
    justify_within(host.netlist, &cond, cfg.timeout()).is_ok_and(|j| j.satisfiable || j.timed_out)
}

fn evaluate_set(
    host: &HostView,
    t: &TrojanTemplate,
    set: &[usize],
    cfg: &InsertionConfig,
) -> Result<SetOutcome> {
    let n = host.netlist;
    let triggers = trigger_nets(host, set)?;
    let cond = TriggerCondition { assignments: triggers.iter().map(|t| (t.net.clone(), t.value)).collect() };
    let j = justify_within(n, &cond, cfg.timeout())?;
    if j.timed_out {
        return Ok(SetOutcome::Timeout);
    }
    if !j.satisfiable {
        return Ok(SetOutcome::Unsat);
    }
    let ids: Vec<NetId> = triggers.iter().map(|t| n.require_net(&t.net)).collect::<Result<_>>()?;
    let (payload, witness) =
        match pair_payload(n, &ids, &cond, &host.payloads, n.topo(), cfg.payload_cap, cfg.timeout()) {
            Ok(x) => x,
            Err(Error::NoLegalPayload) => return Ok(SetOutcome::NoPayload),
            Err(e) => return Err(e),
        };
    match build_virtual(n, t, &triggers, n.net_name(payload), witness, cfg.vectors, cfg.seed) {
        Ok(v) => Ok(SetOutcome::Valid(v)),
        Err(e @ (Error::MissingClock | Error::Config(_))) => Err(e),
        Err(e) => {
            log::debug!("splice failed: {e}");
            Ok(SetOutcome::SpliceFailure)
        }
    }
}

/// Fills the virtual pool with up to `num_trojans * pool_factor` valid
/// virtual Trojans, in enumeration order.
pub fn build_pool(
    host: &HostView,
    t: &TrojanTemplate,
    cfg: &InsertionConfig,
) -> Result<(Vec<VirtualTrojan>, PoolLedger)> {
    let target = cfg.num_trojans * cfg.pool_factor;
    let mut ledger = PoolLedger { requested: cfg.num_trojans, target, ..Default::default() };
    let mut pool = Vec::new();
    let max_sets = ENUMERATION_FACTOR * cfg.num_trojans.max(1);
    let mut sets: Box<dyn Iterator<Item = Vec<usize>>> = match cfg.selection {
        Selection::Model => Box::new(
            enumerate_trigger_sets(&host.candidates, t.r(), cfg.diversity, max_sets)?
                .with_prefix_check(|p| prefix_justifiable(host, p, cfg)),
        ),
        Selection::Random => Box::new(random_trigger_sets(
            host.candidates.len(),
            t.r(),
            max_sets,
            derive_seed(cfg.seed, "random-sets"),
        )?),
    };
    let chunk = rayon::current_num_threads().max(1) * 2;
    'outer: while pool.len() < target {
        let batch: Vec<Vec<usize>> = sets.by_ref().take(chunk.min(2 * (target - pool.len())).max(1)).collect();
        if batch.is_empty() {
            ledger.exhausted = true;
            break;
        }
        let outcomes: Vec<Result<SetOutcome>> = batch.par_iter().map(|s| evaluate_set(host, t, s, cfg)).collect();
        for o in outcomes {
            ledger.sets_enumerated += 1;
            match o? {
                SetOutcome::Unsat => ledger.unsatisfiable += 1,
                SetOutcome::Timeout => ledger.timeouts += 1,
                SetOutcome::NoPayload => ledger.no_payload += 1,
                SetOutcome::SpliceFailure => ledger.splice_failures += 1,
                SetOutcome::Valid(v) => {
                    pool.push(v);
                    if pool.len() == target {
                        break 'outer;
                    }
                }
            }
        }
    }
    ledger.valid = pool.len();
    Ok((pool, ledger))
}

/// Sets distances to `reference` and orders the pool per `ranking`.
pub fn rank_pool(
    mut pool: Vec<VirtualTrojan>,
    reference: &TrojanFeatureVector,
    weights: &[f64; NUM_TROJAN_FEATURES],
    ranking: Ranking,
) -> Vec<VirtualTrojan> {
    pool.retain(|v| v.valid);
    for v in &mut pool {
        v.distance = v.features.distance(reference, weights);
    }
    if ranking == Ranking::Distance {
        pool.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.key().cmp(&b.key())));
    }
    pool
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionReport {
    pub index: usize,
    pub template: String,
    pub seed: u64,
    pub trigger_nets: Vec<TriggerNet>,
    pub payload_net: String,
    pub final_trigger_net: String,
    pub features: TrojanFeatureVector,
    pub reference: TrojanFeatureVector,
    pub distance: f64,
    pub witness: Witness,
    pub verify: VerifyReport,
}

/// Splices the `k` best pool members into independent host copies; each is
/// checked with [`verify_inserted`] and dropped (with a warning) if it fails.
#[allow(clippy::too_many_arguments)]
pub fn rank_and_bind(
    host: &Netlist,
    t: &TrojanTemplate,
    pool: Vec<VirtualTrojan>,
    reference: &TrojanFeatureVector,
    k: usize,
    cfg: &InsertionConfig,
) -> Result<Vec<(Netlist, InsertionReport)>> {
    let ranked = rank_pool(pool, reference, &cfg.weights, cfg.ranking);
    if ranked.is_empty() {
        return Err(Error::PoolEmpty);
    }
    let prefix = choose_prefix(host);
    let picked: Vec<(usize, &VirtualTrojan)> = ranked.iter().take(k).enumerate().collect();
    let bound: Vec<Result<Option<(Netlist, InsertionReport)>>> = picked
        .par_iter()
        .map(|&(index, v)| {
            let (net, fin) = splice_template(host, t, &v.trigger_nets, &v.payload_net, &prefix)?;
            let verify = verify_inserted(
                host,
                &net,
                &v.condition(),
                Some(&v.witness),
                cfg.verify_vectors,
                derive_seed(cfg.seed, "verify"),
            )?;
            if !verify.passed() {
                log::warn!("binding {} failed verification: {verify:?}", v.key());
                return Ok(None);
            }
            let report = InsertionReport {
                index,
                template: t.id.clone(),
                seed: cfg.seed,
                trigger_nets: v.trigger_nets.clone(),
                payload_net: v.payload_net.clone(),
                final_trigger_net: fin,
                features: v.features,
                reference: *reference,
                distance: v.distance,
                witness: v.witness.clone(),
                verify,
            };
            Ok(Some((net, report)))
        })
        .collect();
    let mut out = Vec::new();
    for b in bound {
        if let Some(x) = b? {
            out.push(x);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct InsertOutcome {
    pub netlists: Vec<Netlist>,
    pub reports: Vec<InsertionReport>,
    pub ledger: PoolLedger,
    pub shortfall: Option<String>,
}

/// Net scores from the bundle's classifiers (or a seeded shuffle).
pub fn score_host(
    n: &Netlist,
    table: &FeatureTable,
    bundle: &ModelBundle,
    selection: Selection,
    seed: u64,
) -> Result<(Vec<(String, f64)>, Vec<NetId>)> {
    let trig = trigger_eligible(n);
    let pay = payload_eligible(n);
    let rows = |ids: &[NetId]| -> Vec<Vec<f64>> { ids.iter().map(|&id| bundle.mask.apply(&table.scaled(id))).collect() };
    let (ts, ps) = match selection {
        Selection::Model => (bundle.trigger.score(&rows(&trig))?, bundle.payload.score(&rows(&pay))?),
        Selection::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "random-selection"));
            let ts: Vec<f64> = trig.iter().map(|_| rng.random()).collect();
            let ps: Vec<f64> = pay.iter().map(|_| rng.random()).collect();
            (ts, ps)
        }
    };
    let scored: Vec<(String, f64)> = trig.iter().map(|&id| n.net_name(id).to_string()).zip(ts).collect();
    let mut pr: Vec<(NetId, f64)> = pay.into_iter().zip(ps).collect();
    pr.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| n.net_name(a.0).cmp(n.net_name(b.0))));
    Ok((scored, pr.into_iter().map(|p| p.0).collect()))
}

/// Prepares the host view (features, scores, ranked candidates).
pub fn host_view<'a>(
    n: &'a Netlist,
    table: &'a FeatureTable,
    bundle: &ModelBundle,
    cfg: &InsertionConfig,
) -> Result<HostView<'a>> {
    let (scored, payloads) = score_host(n, table, bundle, cfg.selection, cfg.seed)?;
    let candidates = select_trigger_candidates(&scored, cfg.candidate_cap)?;
    Ok(HostView { netlist: n, table, candidates, payloads })
}

/// Runs the whole insertion flow for one host and template.
pub fn insert(n: &Netlist, t: &TrojanTemplate, bundle: &ModelBundle, cfg: &InsertionConfig) -> Result<InsertOutcome> {
    cfg.check()?;
    bundle.check()?;
    if t.kind == TemplateKind::Sequential && n.clock().is_none() {
        return Err(Error::MissingClock);
    }
    if bundle.template != t.id {
        let kind = |id: &str| id.starts_with('s');
        if kind(&bundle.template) != kind(&t.id) {
            log::warn!(
                "models trained on template {} applied to {}: flip-flops change the feature space",
                bundle.template,
                t.id
            );
        }
    }
    let table = extract_features(n, cfg.vectors, cfg.seed);
    let view = host_view(n, &table, bundle, cfg)?;
    let (pool, ledger) = build_pool(&view, t, cfg)?;
    log::info!("virtual pool: {ledger:?}");
    let reference = sample_reference(&bundle.trojan, derive_seed(cfg.seed, "reference"));
    let bound = if pool.is_empty() {
        Vec::new()
    } else {
        rank_and_bind(n, t, pool, &reference, cfg.num_trojans, cfg)?
    };
    let (netlists, reports): (Vec<Netlist>, Vec<InsertionReport>) = bound.into_iter().unzip();
    let shortfall = (reports.len() < cfg.num_trojans).then(|| {
        format!(
            "emitted {} of {} requested: {} valid virtual Trojans from {} trigger sets ({} unsatisfiable, {} timed out, {} without a legal payload, {} splice failures){}",
            reports.len(),
            cfg.num_trojans,
            ledger.valid,
            ledger.sets_enumerated,
            ledger.unsatisfiable,
            ledger.timeouts,
            ledger.no_payload,
            ledger.splice_failures,
            if ledger.exhausted { "; enumeration exhausted" } else { "" }
        )
    });
    Ok(InsertOutcome { netlists, reports, ledger, shortfall })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteIndex {
    pub template: String,
    pub seed: u64,
    pub requested: usize,
    pub emitted: usize,
    pub shortfall: Option<String>,
    pub pool: PoolLedger,
    pub files: Vec<String>,
}

/// Writes `trojan_NNN.v` / `.json` per insertion and `index.json`.
pub fn write_outputs(dir: &Path, t: &TrojanTemplate, cfg: &InsertionConfig, out: &InsertOutcome) -> Result<SuiteIndex> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (net, rep) in out.netlists.iter().zip(&out.reports) {
        let stem = format!("trojan_{:03}", rep.index);
        std::fs::write(dir.join(format!("{stem}.v")), emit_netlist(net))?;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(rep)? + "\n")?;
        files.push(stem);
    }
    let index = SuiteIndex {
        template: t.id.clone(),
        seed: cfg.seed,
        requested: cfg.num_trojans,
        emitted: out.reports.len(),
        shortfall: out.shortfall.clone(),
        pool: out.ledger.clone(),
        files,
    };
    std::fs::write(dir.join("index.json"), serde_json::to_string_pretty(&index)? + "\n")?;
    Ok(index)
}

/// Seeded shuffle, used by callers that need a random but reproducible
/// order.
pub fn shuffled<T: Clone>(v: &[T], seed: u64) -> Vec<T> {
    let mut out = v.to_vec();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}
