use std::collections::BTreeMap;
use std::path::Path;

use log::{info, warn};
use serde::Serialize;

use privmine_core::anonymize::{
    individual_models, k_pppm, pseudonymize, u_pppm, KpppmConfig, PseudonymMap, Representative,
    UpppmConfig,
};
use privmine_core::attack::{distribution_attack, modelling_attack};
use privmine_core::clustering::ClusterAssignment;
use privmine_core::discovery::{
    discover_dfg, edgefil, model_to_dot, model_to_json, nodefil_log, skip_miner,
    structural_metrics, SkipConfig, StructuralMetrics,
};
use privmine_core::evaluate::{
    run_experiment, score, MethodConfig, MetricsReport, OriginalSide, Scores,
};
use privmine_core::synth::{generate_log, SynthConfig};
use privmine_core::{EventLog, GroupAssignment, SCHEMA_VERSION};

use crate::args::{
    AnonymizeArgs, AnonymizeMethod, AttackArgs, AttackMode, DiscoverArgs, EvaluateArgs,
    ExperimentMethod, GenerateArgs, KeyArgs,
};
use crate::failure::{CliResult, Failure};
use crate::io::{
    ensure_dir, guess_format, read_input, read_log_at, serialize_log, write_bytes, write_json,
};
use crate::mapfile;

/// Pseudonym key from the configured environment variable; empty counts as unset.
fn key_from_env(args: &KeyArgs) -> Option<Vec<u8>> {
    std::env::var_os(&args.key_env)
        .map(|v| v.to_string_lossy().into_owned().into_bytes())
        .filter(|k| !k.is_empty())
}

fn require_key(args: &KeyArgs) -> CliResult<Vec<u8>> {
    key_from_env(args).ok_or_else(|| {
        Failure::parameter(format!(
            "environment variable {} must hold the pseudonym key",
            args.key_env
        ))
    })
}

#[derive(Serialize)]
struct DiscoveryMetrics {
    schema_version: u32,
    los: usize,
    alpha: Option<f64>,
    beta: Option<f64>,
    seed: u64,
    #[serde(flatten)]
    metrics: StructuralMetrics,
}

pub fn discover(args: &DiscoverArgs) -> CliResult<()> {
    let mut log = read_input(&args.input)?;
    if let Some(beta) = args.beta {
        log = nodefil_log(&log, beta)?;
    }
    let mut model = if args.los == 0 {
        discover_dfg(&log)?
    } else {
        skip_miner(
            &log,
            &SkipConfig {
                los: args.los,
                seed: args.seed,
            },
        )?
    };
    if let Some(alpha) = args.alpha {
        model = edgefil(&model, alpha)?;
    }
    let metrics = structural_metrics(&model);
    info!("model: {} nodes, {} edges", metrics.nodes, metrics.edges);

    ensure_dir(&args.out)?;
    write_bytes(&args.out.join("model.dot"), model_to_dot(&model).as_bytes())?;
    write_json(&args.out.join("model.json"), &model_to_json(&model))?;
    write_json(
        &args.out.join("metrics.json"),
        &DiscoveryMetrics {
            schema_version: SCHEMA_VERSION,
            los: args.los,
            alpha: args.alpha,
            beta: args.beta,
            seed: args.seed,
            metrics,
        },
    )
}

#[derive(Serialize)]
#[serde(tag = "method", rename_all = "lowercase")]
enum Audit {
    Upppm {
        schema_version: u32,
        seed: u64,
        #[serde(flatten)]
        groups: GroupAssignment,
    },
    Kpppm {
        schema_version: u32,
        seed: u64,
        k: usize,
        measure: privmine_core::Measure,
        clusters: ClusterAssignment,
        representatives: Vec<Representative>,
    },
    Pseudonymize {
        schema_version: u32,
        individuals: usize,
    },
}

fn pseudonymize_members(members: &mut [String], map: &PseudonymMap) {
    for m in members {
        if let Some(p) = map.pseudonym_of(m) {
            *m = p.to_string();
        }
    }
}

pub fn anonymize(args: &AnonymizeArgs) -> CliResult<()> {
    let key = require_key(&args.key)?;
    let needs_k = matches!(args.method, AnonymizeMethod::Upppm | AnonymizeMethod::Kpppm);
    if needs_k && args.k.is_none() {
        return Err(Failure::parameter("--k is required for this method"));
    }
    let log = read_input(&args.input)?;
    let include_unknown = args.input.include_unknown;

    let (protected, audit, map) = match args.method {
        AnonymizeMethod::Upppm => {
            let config = UpppmConfig {
                k: args.k.unwrap_or_default(),
                strategy: args.strategy,
                seed: args.seed,
                include_unknown,
            };
            let out = u_pppm(&log, &config, &key)?;
            let audit = Audit::Upppm {
                schema_version: SCHEMA_VERSION,
                seed: args.seed,
                groups: out.groups.pseudonymized(&out.pseudonyms),
            };
            (out.log, audit, out.pseudonyms)
        }
        AnonymizeMethod::Kpppm => {
            let config = KpppmConfig {
                k: args.k.unwrap_or_default(),
                clustering: args.clustering,
                measure: args.measure,
                seed: args.seed,
                include_unknown,
            };
            let out = k_pppm(&log, &config, &key)?;
            let mut clusters = out.clusters.clone();
            for c in &mut clusters.clusters {
                pseudonymize_members(c, &out.pseudonyms);
            }
            let mut representatives = out.representatives.clone();
            for r in &mut representatives {
                pseudonymize_members(&mut r.members, &out.pseudonyms);
            }
            let audit = Audit::Kpppm {
                schema_version: SCHEMA_VERSION,
                seed: args.seed,
                k: config.k,
                measure: config.measure,
                clusters,
                representatives,
            };
            (out.log, audit, out.pseudonyms)
        }
        AnonymizeMethod::Pseudonymize => {
            let (protected, map) = pseudonymize(&log, &key, include_unknown)?;
            let audit = Audit::Pseudonymize {
                schema_version: SCHEMA_VERSION,
                individuals: map.len(),
            };
            (protected, audit, map)
        }
    };

    let format = match args.output_format {
        Some(f) => f,
        None => guess_format(&args.input.input, args.input.format)?,
    };
    ensure_dir(&args.out)?;
    let name = format!("protected.{}", format.extension());
    write_bytes(&args.out.join(name), &serialize_log(&protected, format))?;
    write_json(&args.out.join("audit.json"), &audit)?;
    if args.emit_map {
        write_bytes(
            &args.out.join("pseudonym-map.enc"),
            &mapfile::seal(&map, &key, args.seed)?,
        )?;
    }
    Ok(())
}

/// How identities in `original` are named in `protected`: an explicit map
/// file, the raw identities, or pseudonyms derived from the key.
fn resolve_linkage(
    individuals: &[String],
    protected: &EventLog,
    key_args: &KeyArgs,
    map: Option<&Path>,
) -> CliResult<PseudonymMap> {
    if let Some(path) = map {
        let key = require_key(key_args)?;
        let bytes =
            std::fs::read(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        return mapfile::open(&bytes, &key);
    }
    let present = protected.case_counts();
    if individuals.iter().all(|id| present.contains_key(id)) {
        return Ok(PseudonymMap::identity(individuals));
    }
    match key_from_env(key_args) {
        Some(key) => Ok(PseudonymMap::derive(&key, individuals)?),
        None => Err(Failure::parameter(format!(
            "the protected log is pseudonymized; set {} or pass --map",
            key_args.key_env
        ))),
    }
}

#[derive(Serialize)]
struct SingleReport {
    schema_version: u32,
    protected: String,
    #[serde(flatten)]
    scores: Scores,
}

#[derive(Serialize)]
struct GridReport {
    schema_version: u32,
    reports: Vec<MetricsReport>,
}

const REPORT_HEADER: [&str; 12] = [
    "method",
    "k",
    "strategy",
    "clustering",
    "measure",
    "qs_mean",
    "qs_sd",
    "ils_mean",
    "ils_sd",
    "cs_mean",
    "cs_sd",
    "seeds",
];

fn csv_text(rows: Vec<Vec<String>>) -> CliResult<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(REPORT_HEADER)
        .map_err(|e| Failure::internal(e.to_string()))?;
    for row in rows {
        writer
            .write_record(&row)
            .map_err(|e| Failure::internal(e.to_string()))?;
    }
    writer
        .into_inner()
        .map_err(|e| Failure::internal(e.to_string()))
}

fn report_row(r: &MetricsReport) -> Vec<String> {
    let (strategy, clustering, measure) = match r.config {
        MethodConfig::Upppm { strategy, .. } => {
            (strategy.to_string(), String::new(), String::new())
        }
        MethodConfig::Kpppm {
            clustering,
            measure,
            ..
        } => (String::new(), clustering.to_string(), measure.to_string()),
    };
    let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
    vec![
        r.config.name().to_string(),
        r.config.k().to_string(),
        strategy,
        clustering,
        measure,
        r.qs.mean.to_string(),
        r.qs.sd.to_string(),
        r.ils.mean.to_string(),
        r.ils.sd.to_string(),
        r.cs.mean.to_string(),
        r.cs.sd.to_string(),
        seeds.join(" "),
    ]
}

fn grid(args: &EvaluateArgs) -> Vec<MethodConfig> {
    let mut out = Vec::new();
    for &k in &args.k {
        match args.method {
            ExperimentMethod::Upppm => {
                for &strategy in &args.strategy {
                    out.push(MethodConfig::Upppm { k, strategy });
                }
            }
            ExperimentMethod::Kpppm => {
                for &clustering in &args.clustering {
                    for &measure in &args.measure {
                        out.push(MethodConfig::Kpppm {
                            k,
                            clustering,
                            measure,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Key used for experiment runs when none is configured. Scores do not
/// depend on the pseudonyms, and none are written.
const EXPERIMENT_FALLBACK_KEY: &[u8] = b"privmine-experiment";

pub fn evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let log = read_input(&args.input)?;
    let individuals = log.participants(args.input.include_unknown);
    let original = OriginalSide::new(&log, individuals.clone())?;
    ensure_dir(&args.out)?;

    if let Some(path) = &args.protected {
        let protected = read_log_at(path, None, &args.input)?;
        let linkage = resolve_linkage(&individuals, &protected, &args.key, args.map.as_deref())?;
        let scores = score(&original, &protected, &linkage)?;
        let row = vec![
            "protected".to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            scores.qs.to_string(),
            "0".into(),
            scores.ils.to_string(),
            "0".into(),
            scores.cs.to_string(),
            "0".into(),
            String::new(),
        ];
        let report = SingleReport {
            schema_version: SCHEMA_VERSION,
            protected: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            scores,
        };
        write_json(&args.out.join("report.json"), &report)?;
        return write_bytes(&args.out.join("report.csv"), &csv_text(vec![row])?);
    }

    let key = key_from_env(&args.key).unwrap_or_else(|| {
        warn!(
            "{} is not set; using a fixed experiment key",
            args.key.key_env
        );
        EXPERIMENT_FALLBACK_KEY.to_vec()
    });
    let mut reports = Vec::new();
    for config in grid(args) {
        info!("running {config:?} for {} seeds", args.runs);
        reports.push(run_experiment(
            &log, &original, config, args.runs, args.seed, &key,
        )?);
    }
    let rows = reports.iter().map(report_row).collect();
    write_json(
        &args.out.join("report.json"),
        &GridReport {
            schema_version: SCHEMA_VERSION,
            reports,
        },
    )?;
    write_bytes(&args.out.join("report.csv"), &csv_text(rows)?)
}

pub fn attack(args: &AttackArgs) -> CliResult<()> {
    let log = read_input(&args.input)?;
    let protected = read_log_at(&args.protected, None, &args.input)?;
    let individuals = log.participants(args.input.include_unknown);
    let linkage = resolve_linkage(&individuals, &protected, &args.key, args.map.as_deref())?;
    let result = match args.attack {
        AttackMode::Distribution => {
            let observed: BTreeMap<String, usize> = individuals
                .iter()
                .map(|id| (id.clone(), log.case_counts()[id]))
                .collect();
            distribution_attack(&protected, &observed, &linkage)?
        }
        AttackMode::Modelling => {
            let victims = individual_models(&log, &individuals)?;
            modelling_attack(&protected, &victims, args.measure, &linkage)?
        }
    };
    info!("success rate {:.4}", result.success_rate);
    ensure_dir(&args.out)?;
    write_json(&args.out.join("attack.json"), &result)
}

pub fn generate(args: &GenerateArgs) -> CliResult<()> {
    if args.individuals < 2 {
        return Err(Failure::parameter("--individuals must be at least 2"));
    }
    let log = generate_log(&SynthConfig {
        individuals: args.individuals,
        seed: args.seed,
        ..SynthConfig::default()
    });
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    write_bytes(&args.out, &serialize_log(&log, args.format))
}
