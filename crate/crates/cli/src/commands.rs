// SPDX-License-Identifier: Apache-2.0

use crate::{init_logging, Cli, Command, Format, HostArgs, Mask};
use anyhow::{bail, Context, Result};
use htgen::features::{extract_features, FeatureMask};
use htgen::harness::{
    baseline_insert, build_training_set, read_baseline_suite, run_experiment, write_baseline_suite, BaselineConfig,
    ExperimentSpec, TrainConfig, TrainingSample, TrainingSet,
};
use htgen::insert::{insert, write_outputs, InsertionConfig, TrojanTemplate};
use htgen::ml::ModelBundle;
use htgen::netlist::{dump_edges, parse_netlist, Netlist};
use htgen::validate::{condition_cnf, justify_within, verify_inserted, TriggerCondition};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Duration;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_netlist(path: &Path) -> Result<Netlist> {
    parse_netlist(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_host(h: &HostArgs) -> Result<Netlist> {
    let n = load_netlist(&h.netlist)?;
    Ok(n.with_clock_reset(h.clock.as_deref(), h.reset.as_deref())?)
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&PathBuf>) -> Result<T> {
    match path {
        Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("config {}", p.display())),
        None => Ok(T::default()),
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Features(a) => {
            init_logging(cli, "features", a.seed, &format!("{{\"vectors\":{}}}", a.vectors))?;
            let n = load_host(&a.host)?;
            let table = extract_features(&n, a.vectors, a.seed);
            let text = match a.format {
                Format::Csv => table.to_csv(),
                Format::Json => serde_json::to_string_pretty(&table.to_json())? + "\n",
            };
            match &a.out {
                Some(p) => write(p, &text)?,
                None => print!("{text}"),
            }
            if let Some(p) = &a.dump_edges {
                write(p, &dump_edges(&n))?;
            }
            Ok(())
        }
        Command::Baseline(a) => {
            let mut cfg: BaselineConfig = load_config(a.config.as_ref())?;
            set(&mut cfg.theta, a.theta);
            set(&mut cfg.count, a.count);
            set(&mut cfg.seed, a.seed);
            set(&mut cfg.vectors, a.vectors);
            let t = TrojanTemplate::load(&a.template)?;
            cfg.r = t.r();
            init_logging(cli, "baseline", cfg.seed, &json(&cfg))?;
            let n = load_host(&a.host)?;
            let suite = baseline_insert(&n, &t, &cfg)?;
            let index = write_baseline_suite(&a.out_dir, &t, &cfg, &suite)?;
            log::info!("wrote {} baseline Trojans to {}", index.emitted, a.out_dir.display());
            if index.emitted < cfg.count {
                log::warn!("requested {}, emitted {}", cfg.count, index.emitted);
            }
            Ok(())
        }
        Command::Train(a) => {
            let mut cfg: TrainConfig = load_config(a.config.as_ref())?;
            if let Some(m) = a.mask {
                cfg.mask = match m {
                    Mask::All => FeatureMask::All,
                    Mask::Functional => FeatureMask::Functional,
                };
            }
            set(&mut cfg.forest.trees, a.trees);
            if a.max_negatives.is_some() {
                cfg.max_negatives = a.max_negatives;
            }
            set(&mut cfg.seed, a.seed);
            set(&mut cfg.vectors, a.vectors);
            init_logging(cli, "train", cfg.seed, &json(&cfg))?;
            let n = load_host(&a.host)?;
            let (index, suite) = read_baseline_suite(&a.suite)?;
            let samples: Vec<TrainingSample> = suite.into_iter().map(Into::into).collect();
            let ts = build_training_set(&n, &index.template, &samples, &cfg)?;
            std::fs::create_dir_all(&a.out_dir)?;
            for b in &ts.bundles {
                b.save(&a.out_dir.join(format!("cluster_{:03}.json", b.cluster)))?;
            }
            write(&a.out_dir.join("training.json"), &(serde_json::to_string_pretty(&ts)? + "\n"))?;
            log::info!(
                "{} samples, {} clusters, {} bundles",
                samples.len(),
                ts.clustering.num_clusters(),
                ts.bundles.len()
            );
            Ok(())
        }
        Command::Insert(a) => {
            let mut cfg: InsertionConfig = load_config(a.config.as_ref())?;
            set(&mut cfg.num_trojans, a.num);
            set(&mut cfg.pool_factor, a.pool_factor);
            set(&mut cfg.weights, a.weights);
            set(&mut cfg.seed, a.seed);
            set(&mut cfg.vectors, a.vectors);
            init_logging(cli, "insert", cfg.seed, &json(&cfg))?;
            let n = load_host(&a.host)?;
            let t = TrojanTemplate::load(&a.template)?;
            let bundle = ModelBundle::load(&a.models).with_context(|| format!("loading {}", a.models.display()))?;
            let out = insert(&n, &t, &bundle, &cfg)?;
            let index = write_outputs(&a.out_dir, &t, &cfg, &out)?;
            if a.dump_cnf {
                for r in &out.reports {
                    let cond = TriggerCondition::new(r.trigger_nets.iter().map(|t| (t.net.clone(), t.value)).collect())?;
                    write(&a.out_dir.join(format!("trojan_{:03}.cnf", r.index)), &condition_cnf(&n, &cond)?.to_dimacs())?;
                }
            }
            if let Some(s) = &out.shortfall {
                log::warn!("{s}");
            }
            log::info!("wrote {} Trojans to {}", index.emitted, a.out_dir.display());
            Ok(())
        }
        Command::Eval(a) => {
            let mut spec: ExperimentSpec = load_config(a.config.as_ref())?;
            set(&mut spec.runs, a.runs);
            set(&mut spec.top_n, a.top_n.clone());
            set(&mut spec.seed, a.seed);
            set(&mut spec.insertion.vectors, a.vectors);
            init_logging(cli, "eval", spec.seed, &json(&spec))?;
            let n = load_host(&a.host)?;
            let t = TrojanTemplate::load(&a.template)?;
            let ts: TrainingSet = serde_json::from_str(&read(&a.training)?)?;
            if ts.template != t.id {
                log::info!("cross-template evaluation: trained on {}, inserting {}", ts.template, t.id);
            }
            let table = run_experiment(&n, &t, &ts, &spec)?;
            write(&a.out, &table.to_csv())?;
            if let Some(p) = &a.records {
                write(p, &(serde_json::to_string_pretty(&table.records)? + "\n"))?;
            }
            print!("{}", table.to_csv());
            Ok(())
        }
        Command::Validate(a) => {
            init_logging(cli, "validate", a.seed, &format!("{{\"vectors\":{},\"timeout_ms\":{}}}", a.vectors, a.timeout_ms))?;
            let n = load_netlist(&a.netlist)?;
            let cond = match &a.condition {
                Some(c) => parse_condition(c)?,
                None => {
                    let path = a.report.clone().unwrap_or_else(|| a.netlist.with_extension("json"));
                    condition_from_report(&path)?
                }
            };
            if let Some(p) = &a.dimacs {
                write(p, &condition_cnf(&n, &cond)?.to_dimacs())?;
            }
            let j = justify_within(&n, &cond, Duration::from_millis(a.timeout_ms))?;
            let Some(w) = j.witness else {
                if j.timed_out {
                    bail!("justification timed out after {} ms", a.timeout_ms);
                }
                bail!("trigger condition is unsatisfiable");
            };
            println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "witness": w }))?);
            if let Some(orig) = &a.original {
                let host = load_netlist(orig)?;
                let rep = verify_inserted(&host, &n, &cond, None, a.vectors, a.seed)?;
                println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "verify": rep }))?);
                if !rep.passed() {
                    bail!("verification failed");
                }
            }
            Ok(())
        }
    }
}

fn parse_condition(s: &str) -> Result<TriggerCondition> {
    let mut v = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let Some((net, val)) = part.split_once('=') else { bail!("condition term `{part}` is not net=value") };
        let b = match val.trim() {
            "0" => false,
            "1" => true,
            other => bail!("condition value `{other}` is not 0 or 1"),
        };
        v.push((net.trim().to_string(), b));
    }
    Ok(TriggerCondition::new(v)?)
}

fn condition_from_report(path: &Path) -> Result<TriggerCondition> {
    let v: serde_json::Value = serde_json::from_str(&read(path)?)?;
    let Some(list) = v.get("trigger_nets").and_then(|t| t.as_array()) else {
        bail!("{} has no trigger_nets", path.display())
    };
    let mut out = Vec::new();
    for t in list {
        match (t.get("net").and_then(|n| n.as_str()), t.get("value").and_then(|b| b.as_bool())) {
            (Some(n), Some(b)) => out.push((n.to_string(), b)),
            _ => bail!("malformed trigger net in {}", path.display()),
        }
    }
    Ok(TriggerCondition::new(out)?)
}
