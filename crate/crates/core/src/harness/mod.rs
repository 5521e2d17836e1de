// SPDX-License-Identifier: Apache-2.0

//! Training-data generation, per-cluster model training and the Top-N
//! cluster-hit evaluation with its four ablation arms.

pub mod corpus;

pub use corpus::{c17, generate, GeneratorConfig, C17};

use crate::error::{Error, Result};
use crate::features::sim::derive_seed;
use crate::features::{extract_features, FeatureMask, FeatureTable, TrojanFeatureVector, DEFAULT_VECTORS};
use crate::insert::{
    build_pool, choose_prefix, host_view, pair_payload, payload_eligible, rank_pool, splice_template,
    trigger_eligible, InsertionConfig, PoolLedger, Ranking, Selection, TemplateKind, TrojanTemplate, TriggerNet,
};
use crate::ml::{
    affinity_propagation, fit_mixture, neg_sq_euclidean, sample_reference, train_classifier, ClusterAssignment,
    ForestParams, ModelBundle,
};
use crate::netlist::{emit_netlist, parse_netlist, NetId, Netlist};
use crate::validate::{justify_within, verify_inserted, TriggerCondition, VerifyReport, Witness};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub theta: f64,
    pub r: usize,
    pub count: usize,
    pub seed: u64,
    pub vectors: usize,
    pub verify_vectors: usize,
    pub payload_cap: usize,
    pub timeout_ms: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            theta: 0.01,
            r: 4,
            count: 100,
            seed: 0,
            vectors: DEFAULT_VECTORS,
            verify_vectors: 10_000,
            payload_cap: 16,
            timeout_ms: 10_000,
        }
    }
}

impl BaselineConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 0.5) {
            return Err(Error::Config(format!("theta must lie in (0, 0.5], got {}", self.theta)));
        }
        if self.r == 0 || self.count == 0 {
            return Err(Error::Config("r and count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub index: usize,
    pub template: String,
    pub seed: u64,
    pub theta: f64,
    pub trigger_nets: Vec<TriggerNet>,
    /// Rare-side probability of each trigger net, in trigger order.
    pub trigger_probability: Vec<f64>,
    pub payload_net: String,
    pub final_trigger_net: String,
    pub witness: Witness,
    pub verify: VerifyReport,
}

impl BaselineReport {
    pub fn condition(&self) -> TriggerCondition {
        TriggerCondition { assignments: self.trigger_nets.iter().map(|t| (t.net.clone(), t.value)).collect() }
    }
}

/// Nets whose rare-side probability is at most `theta`, by name.
pub fn rare_nets(n: &Netlist, table: &FeatureTable, theta: f64) -> Vec<NetId> {
    let mut v: Vec<NetId> = trigger_eligible(n).into_iter().filter(|&id| table.rare(id).1 <= theta).collect();
    v.sort_by(|a, b| n.net_name(*a).cmp(n.net_name(*b)));
    v
}

fn baseline_one(
    n: &Netlist,
    t: &TrojanTemplate,
    table: &FeatureTable,
    set: &[NetId],
    payloads: &[NetId],
    cfg: &BaselineConfig,
    prefix: &str,
    seed: u64,
) -> Result<Option<(Netlist, BaselineReport)>> {
    let timeout = Duration::from_millis(cfg.timeout_ms);
    let triggers: Vec<TriggerNet> =
        set.iter().map(|&id| TriggerNet { net: n.net_name(id).to_string(), value: table.rare(id).0 }).collect();
    let cond = TriggerCondition { assignments: triggers.iter().map(|t| (t.net.clone(), t.value)).collect() };
    let j = justify_within(n, &cond, timeout)?;
    if !j.satisfiable {
        return Ok(None);
    }
    let mut order = payloads.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, "payload")));
    let (payload, witness) = match pair_payload(n, set, &cond, &order, n.topo(), cfg.payload_cap, timeout) {
        Ok(x) => x,
        Err(Error::NoLegalPayload) => return Ok(None),
        Err(e) => return Err(e),
    };
    let (net, fin) = splice_template(n, t, &triggers, n.net_name(payload), prefix)?;
    let verify = verify_inserted(n, &net, &cond, Some(&witness), cfg.verify_vectors, derive_seed(seed, "verify"))?;
    let report = BaselineReport {
        index: 0,
        template: t.id.clone(),
        seed,
        theta: cfg.theta,
        trigger_probability: set.iter().map(|&id| table.rare(id).1).collect(),
        trigger_nets: triggers,
        payload_net: n.net_name(payload).to_string(),
        final_trigger_net: fin,
        witness,
        verify,
    };
    Ok(Some((net, report)))
}

/// Inserts `cfg.count` Trojans whose trigger nets are drawn uniformly from
/// the nets with rare-side probability at most `theta`; each set must be
/// justifiable and is paired with a random legal payload.
///
/// Returns fewer than `count` Trojans (with a warning) when the attempt
/// budget runs out.
pub fn baseline_insert(n: &Netlist, t: &TrojanTemplate, cfg: &BaselineConfig) -> Result<Vec<(Netlist, BaselineReport)>> {
    cfg.check()?;
    if cfg.r != t.r() {
        return Err(Error::Config(format!("template {} has {} trigger ports, r = {}", t.id, t.r(), cfg.r)));
    }
    if t.kind == TemplateKind::Sequential && n.clock().is_none() {
        return Err(Error::MissingClock);
    }
    let table = extract_features(n, cfg.vectors, cfg.seed);
    let rare = rare_nets(n, &table, cfg.theta);
    if rare.len() < cfg.r {
        return Err(Error::InsufficientRareNets { theta: cfg.theta, need: cfg.r, got: rare.len() });
    }
    let payloads = payload_eligible(n);
    let prefix = choose_prefix(n);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "baseline"));
    let mut seen = BTreeSet::new();
    let budget = cfg.count * 1000;
    let mut drawn = 0;
    let mut out = Vec::new();
    let chunk = rayon::current_num_threads().max(1) * 2;
    while out.len() < cfg.count && drawn < budget {
        let mut batch = Vec::new();
        while batch.len() < chunk && drawn < budget {
            drawn += 1;
            let mut set: Vec<NetId> = index::sample(&mut rng, rare.len(), cfg.r).into_iter().map(|i| rare[i]).collect();
            set.sort();
            if seen.insert(set.clone()) {
                batch.push((set, rng.random::<u64>()));
            }
        }
        let results: Vec<Result<Option<(Netlist, BaselineReport)>>> = batch
            .par_iter()
            .map(|(set, s)| baseline_one(n, t, &table, set, &payloads, cfg, &prefix, *s))
            .collect();
        for r in results {
            if let Some((net, mut rep)) = r? {
                rep.index = out.len();
                out.push((net, rep));
                if out.len() == cfg.count {
                    break;
                }
            }
        }
    }
    if out.len() < cfg.count {
        log::warn!("baseline: {} of {} Trojans after {drawn} draws", out.len(), cfg.count);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineIndex {
    pub template: String,
    pub config: BaselineConfig,
    pub emitted: usize,
    pub files: Vec<String>,
}

/// Writes `baseline_NNN.v` / `.json` per Trojan and `index.json`.
pub fn write_baseline_suite(
    dir: &Path,
    t: &TrojanTemplate,
    cfg: &BaselineConfig,
    suite: &[(Netlist, BaselineReport)],
) -> Result<BaselineIndex> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (net, rep) in suite {
        let stem = format!("baseline_{:03}", rep.index);
        std::fs::write(dir.join(format!("{stem}.v")), emit_netlist(net))?;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(rep)? + "\n")?;
        files.push(stem);
    }
    let index = BaselineIndex { template: t.id.clone(), config: cfg.clone(), emitted: suite.len(), files };
    std::fs::write(dir.join("index.json"), serde_json::to_string_pretty(&index)? + "\n")?;
    Ok(index)
}

/// Reads a suite written by [`write_baseline_suite`].
pub fn read_baseline_suite(dir: &Path) -> Result<(BaselineIndex, Vec<(Netlist, BaselineReport)>)> {
    let index: BaselineIndex = serde_json::from_str(&std::fs::read_to_string(dir.join("index.json"))?)?;
    let suite = index
        .files
        .iter()
        .map(|stem| {
            let net = parse_netlist(&std::fs::read_to_string(dir.join(format!("{stem}.v")))?)?;
            let rep: BaselineReport = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
            Ok((net, rep))
        })
        .collect::<Result<_>>()?;
    Ok((index, suite))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub forest: ForestParams,
    pub mask: FeatureMask,
    pub max_components: usize,
    pub damping: f64,
    pub vectors: usize,
    /// Negatives kept per classifier (seeded subsample); `None` keeps all.
    pub max_negatives: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            forest: ForestParams::default(),
            mask: FeatureMask::All,
            max_components: 3,
            damping: 0.8,
            vectors: DEFAULT_VECTORS,
            max_negatives: None,
            seed: 0,
        }
    }
}

/// A Trojaned copy of the training host with what was inserted.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub netlist: Netlist,
    pub trigger_nets: Vec<String>,
    pub payload_net: String,
    pub final_trigger_net: String,
}

impl From<(Netlist, BaselineReport)> for TrainingSample {
    fn from((netlist, r): (Netlist, BaselineReport)) -> Self {
        TrainingSample {
            netlist,
            trigger_nets: r.trigger_nets.into_iter().map(|t| t.net).collect(),
            payload_net: r.payload_net,
            final_trigger_net: r.final_trigger_net,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub template: String,
    /// Trojan vector per training sample.
    pub vectors: Vec<TrojanFeatureVector>,
    pub clustering: ClusterAssignment,
    /// One bundle per cluster with at least two members.
    pub bundles: Vec<ModelBundle>,
}

fn subsample(mut v: Vec<Vec<f64>>, cap: Option<usize>, seed: u64) -> Vec<Vec<f64>> {
    if let Some(c) = cap {
        if v.len() > c {
            v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            v.truncate(c);
        }
    }
    v
}

/// Trojan vector of each sample, read at its final trigger net.
pub fn trojan_vectors(samples: &[TrainingSample], vectors: usize, seed: u64) -> Result<Vec<TrojanFeatureVector>> {
    samples
        .par_iter()
        .map(|s| {
            let table = extract_features(&s.netlist, vectors, seed);
            Ok(table.trojan(s.netlist.require_net(&s.final_trigger_net)?))
        })
        .collect()
}

/// Clusters the samples' Trojan vectors and trains one bundle per cluster.
pub fn build_training_set(
    host: &Netlist,
    template: &str,
    samples: &[TrainingSample],
    cfg: &TrainConfig,
) -> Result<TrainingSet> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples { need: 2, got: samples.len() });
    }
    let vectors = trojan_vectors(samples, cfg.vectors, cfg.seed)?;
    let points: Vec<[f64; 5]> = vectors.iter().map(|v| v.to_array()).collect();
    let clustering = affinity_propagation(&neg_sq_euclidean(&points), cfg.damping)?;
    let table = extract_features(host, cfg.vectors, cfg.seed);
    let row = |id: NetId| cfg.mask.apply(&table.scaled(id));
    let trig_all = trigger_eligible(host);
    let pay_all = payload_eligible(host);
    let mut bundles = Vec::new();
    for c in 0..clustering.num_clusters() {
        let members: Vec<usize> = (0..samples.len()).filter(|&i| clustering.labels[i] == c).collect();
        if members.len() < 2 {
            log::warn!("cluster {c} has a single member; skipped");
            continue;
        }
        let mut tpos = BTreeSet::new();
        let mut ppos = BTreeSet::new();
        for &i in &members {
            for name in &samples[i].trigger_nets {
                tpos.insert(host.require_net(name)?);
            }
            ppos.insert(host.require_net(&samples[i].payload_net)?);
        }
        let split = |all: &[NetId], pos: &BTreeSet<NetId>, label: &str| {
            let p: Vec<Vec<f64>> = pos.iter().map(|&id| row(id)).collect();
            let q: Vec<Vec<f64>> = all.iter().filter(|id| !pos.contains(id)).map(|&id| row(id)).collect();
            (p, subsample(q, cfg.max_negatives, derive_seed(cfg.seed, &format!("neg/{c}/{label}"))))
        };
        let (tp, tn) = split(&trig_all, &tpos, "trigger");
        let (pp, pn) = split(&pay_all, &ppos, "payload");
        let params = |label: &str| ForestParams {
            seed: derive_seed(cfg.forest.seed, &format!("{label}/{c}")),
            ..cfg.forest
        };
        let trigger = train_classifier(&tp, &tn, &params("trigger"))?;
        let payload = train_classifier(&pp, &pn, &params("payload"))?;
        let data: Vec<Vec<f64>> = members.iter().map(|&i| points[i].to_vec()).collect();
        let mixture = fit_mixture(&data, cfg.max_components.min(data.len()), derive_seed(cfg.seed, &format!("mixture/{c}")))?;
        bundles.push(ModelBundle::new(
            cfg.mask,
            template,
            c,
            members.iter().map(|&i| vectors[i]).collect(),
            trigger,
            payload,
            mixture,
        ));
    }
    Ok(TrainingSet { template: template.to_string(), vectors, clustering, bundles })
}

/// Cluster of the exemplar nearest to `v`; the lower index wins ties.
pub fn classify_output(v: &TrojanFeatureVector, clustering: &ClusterAssignment, training: &[TrojanFeatureVector]) -> usize {
    let x = v.to_array();
    let mut best = (f64::INFINITY, 0);
    for (c, &e) in clustering.exemplars.iter().enumerate() {
        let d: f64 = x.iter().zip(training[e].to_array()).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.0 {
            best = (d, c);
        }
    }
    best.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    None,
    TrojanOnly,
    TrigPayOnly,
    Both,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::None, Arm::TrojanOnly, Arm::TrigPayOnly, Arm::Both];

    pub fn selection(self) -> Selection {
        match self {
            Arm::None | Arm::TrojanOnly => Selection::Random,
            Arm::TrigPayOnly | Arm::Both => Selection::Model,
        }
    }

    pub fn ranking(self) -> Ranking {
        match self {
            Arm::None | Arm::TrigPayOnly => Ranking::Unsorted,
            Arm::TrojanOnly | Arm::Both => Ranking::Distance,
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            Arm::None => "no_ml",
            Arm::TrojanOnly => "troj_ml_a",
            Arm::TrigPayOnly => "trig_pay_ml_b",
            Arm::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub arms: Vec<Arm>,
    pub top_n: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    /// Base insertion settings; seed, selection and ranking are set per run.
    pub insertion: InsertionConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            arms: Arm::ALL.to_vec(),
            top_n: vec![1, 5, 10],
            runs: 5,
            seed: 0,
            insertion: InsertionConfig::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn check(&self) -> Result<()> {
        if self.top_n.is_empty() || self.top_n.contains(&0) || self.runs == 0 || self.arms.is_empty() {
            return Err(Error::Config("experiment needs runs >= 1, arms, and top-N values >= 1".into()));
        }
        self.insertion.check()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cluster: usize,
    pub run: usize,
    pub arm: Arm,
    pub seed: u64,
    /// Classified cluster per pool entry, in ranked order.
    pub classes: Vec<usize>,
    pub ledger: PoolLedger,
}

impl RunRecord {
    pub fn hit(&self, n: usize) -> bool {
        self.classes.iter().take(n).any(|&c| c == self.cluster)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub arms: Vec<Arm>,
    pub top_n: Vec<usize>,
    /// `rates[i][j]`: hit rate at `top_n[i]` for `arms[j]`.
    pub rates: Vec<Vec<f64>>,
    pub records: Vec<RunRecord>,
}

impl AccuracyTable {
    pub fn rate(&self, arm: Arm, n: usize) -> Option<f64> {
        let i = self.top_n.iter().position(|&x| x == n)?;
        let j = self.arms.iter().position(|&a| a == arm)?;
        Some(self.rates[i][j])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("top_n");
        for a in &self.arms {
            s.push(',');
            s.push_str(a.column());
        }
        s.push('\n');
        for (i, n) in self.top_n.iter().enumerate() {
            let _ = write!(s, "{n}");
            for r in &self.rates[i] {
                let _ = write!(s, ",{:.4}", r * 100.0);
            }
            s.push('\n');
        }
        s
    }
}

/// Evaluates every bundle of `training` on `host` with `template`: per
/// cluster, run and arm, a pool of virtual Trojans is built and ranked, and
/// each entry is classified against the training exemplars.
pub fn run_experiment(
    host: &Netlist,
    template: &TrojanTemplate,
    training: &TrainingSet,
    spec: &ExperimentSpec,
) -> Result<AccuracyTable> {
    spec.check()?;
    if training.bundles.is_empty() {
        return Err(Error::Config("training set has no bundles".into()));
    }
    let jobs: Vec<(usize, usize)> =
        (0..training.bundles.len()).flat_map(|b| (0..spec.runs).map(move |r| (b, r))).collect();
    let per_job: Vec<Result<Vec<RunRecord>>> = jobs
        .par_iter()
        .map(|&(b, run)| {
            let bundle = &training.bundles[b];
            let seed = derive_seed(spec.seed, &format!("cluster{}/run{run}", bundle.cluster));
            let reference = sample_reference(&bundle.trojan, derive_seed(seed, "reference"));
            let table = extract_features(host, spec.insertion.vectors, seed);
            spec.arms
                .iter()
                .map(|&arm| {
                    let cfg = InsertionConfig {
                        seed,
                        selection: arm.selection(),
                        ranking: arm.ranking(),
                        ..spec.insertion.clone()
                    };
                    let view = host_view(host, &table, bundle, &cfg)?;
                    let (pool, ledger) = build_pool(&view, template, &cfg)?;
                    let ranked = rank_pool(pool, &reference, &cfg.weights, cfg.ranking);
                    let classes = ranked
                        .iter()
                        .map(|v| classify_output(&v.features, &training.clustering, &training.vectors))
                        .collect();
                    Ok(RunRecord { cluster: bundle.cluster, run, arm, seed, classes, ledger })
                })
                .collect()
        })
        .collect();
    let mut records = Vec::new();
    for r in per_job {
        records.extend(r?);
    }
    let rates = spec
        .top_n
        .iter()
        .map(|&n| {
            spec.arms
                .iter()
                .map(|&arm| {
                    let rs: Vec<&RunRecord> = records.iter().filter(|r| r.arm == arm).collect();
                    rs.iter().filter(|r| r.hit(n)).count() as f64 / rs.len() as f64
                })
                .collect()
        })
        .collect();
    Ok(AccuracyTable { arms: spec.arms.clone(), top_n: spec.top_n.clone(), rates, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tv(a: [f64; 5]) -> TrojanFeatureVector {
        TrojanFeatureVector::from_array(a)
    }

    #[test]
    fn classify_ties_go_to_lower_exemplar() {
        let training = vec![tv([0.0; 5]), tv([1.0, 0.0, 0.0, 0.0, 0.0])];
        let cl = ClusterAssignment {
            exemplars: vec![0, 1],
            labels: vec![0, 1],
            damping: 0.8,
            iterations: 1,
            converged: true,
        };
        assert_eq!(classify_output(&tv([0.5, 0.0, 0.0, 0.0, 0.0]), &cl, &training), 0);
        assert_eq!(classify_output(&tv([0.5 + 1e-9, 0.0, 0.0, 0.0, 0.0]), &cl, &training), 1);
        assert_eq!(classify_output(&training[1], &cl, &training), 1);
    }

    #[test]
    fn baseline_config_bounds() {
        assert!(BaselineConfig { theta: 0.5, ..Default::default() }.check().is_ok());
        assert!(BaselineConfig { theta: 0.6, ..Default::default() }.check().is_err());
        assert!(BaselineConfig { theta: 0.0, ..Default::default() }.check().is_err());
        assert!(BaselineConfig::default().check().is_ok());
    }

    #[test]
    fn csv_shape() {
        let t = AccuracyTable {
            arms: Arm::ALL.to_vec(),
            top_n: vec![1, 5],
            rates: vec![vec![0.0, 0.25, 0.5, 1.0], vec![0.2, 0.4, 0.6, 1.0]],
            records: vec![],
        };
        let csv = t.to_csv();
        assert_eq!(csv.lines().next().unwrap(), "top_n,no_ml,troj_ml_a,trig_pay_ml_b,both");
        assert_eq!(csv.lines().nth(2).unwrap(), "5,20.0000,40.0000,60.0000,100.0000");
    }
}
