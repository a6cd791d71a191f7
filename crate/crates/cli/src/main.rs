//! `coordnet` — coordination-aware analysis of retweet networks.
//!
//! Stages persist their outputs as documented CSV/JSONL artifacts so each
//! subcommand can resume from a previous stage's files; `run` executes the
//! whole pipeline in memory. Exit codes: 0 success, 2 config error, 3 input
//! error, 4 stage failure. All diagnostics go to stderr; stdout stays clean.

mod artifacts;
mod config;
mod error;
mod gexf;
mod pipeline;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process;
use std::time::Instant;

use clap::{Parser, Subcommand};
use coordnet::ingest::{load_annotations, AnnotationKind, AnnotationTable};
use coordnet::netmetrics::community_curves_annotated;
use coordnet::polarity::SeedSet;
use coordnet::sweep::node_coordination;
use coordnet::synth::{generate, write_groundtruth_jsonl, write_records_jsonl, GroupSpec, SynthConfig};
use coordnet::{InteractionRecord, TracedCommunities};

use crate::artifacts::{
    read_graph, read_population, read_records, read_stopwords, require_file, write_artifact,
};
use crate::config::FileConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "coordnet",
    version,
    about = "Coordination-aware analysis of retweet networks"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, default_value = "coordnet.toml")]
    config: PathBuf,

    /// Output directory; overrides [output] dir from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker-thread cap; outputs are identical for every value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// RNG seed; overrides [sweep] rng_seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select the superspreader population from interaction records.
    Ingest,
    /// Build the TF-IDF cosine user-similarity network.
    Network,
    /// Extract the multiscale backbone of the similarity network.
    Backbone,
    /// Run the coordination-aware community-detection sweep.
    Sweep,
    /// Compute per-community network-measure curves.
    Metrics,
    /// Score hashtag valences and user polarities.
    Polarity,
    /// Export word shifts and hashtag clouds for traced communities.
    Shift,
    /// Apply fixed similarity thresholds to the unfiltered network.
    Baseline {
        /// Threshold to apply; repeat the flag to apply several.
        #[arg(long = "threshold", required = true)]
        thresholds: Vec<f64>,
    },
    /// Generate a synthetic dataset with planted coordinated groups.
    Synth,
    /// Execute the full pipeline end to end.
    Run,
    /// Export the backbone network with analysis attributes as GEXF.
    ExportGexf,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        process::exit(e.code);
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let config = FileConfig::load(&cli.config)?;
    let out = cli.out.clone().unwrap_or_else(|| config.output.dir.clone());
    match cli.threads {
        None => execute(&cli, &config, &out),
        Some(0) => Err(CliError::config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::config(format!("cannot build a {n}-thread pool: {e}")))?;
            pool.install(|| execute(&cli, &config, &out))
        }
    }
}

fn execute(cli: &Cli, config: &FileConfig, out: &Path) -> Result<(), CliError> {
    match &cli.command {
        Command::Ingest => {
            let records = load_records(config)?;
            ensure_out(out)?;
            pipeline::stage_ingest(&records, config.population.fraction, out)?;
            Ok(())
        }
        Command::Network => {
            let records = load_records(config)?;
            let population = read_population(&out.join("population.csv"))?;
            ensure_out(out)?;
            pipeline::stage_network(&records, &population, out)?;
            Ok(())
        }
        Command::Backbone => {
            let graph = read_graph(&out.join("similarity_edges.csv"), "similarity network")?;
            ensure_out(out)?;
            pipeline::stage_backbone(&graph, &pipeline::backbone_config(config), out)?;
            Ok(())
        }
        Command::Sweep => {
            let backbone = read_graph(&out.join("backbone_edges.csv"), "backbone network")?;
            let seed = resolve_seed(cli, config)?;
            ensure_out(out)?;
            pipeline::stage_sweep(&backbone, &pipeline::sweep_config(config, seed), out)?;
            Ok(())
        }
        Command::Metrics => {
            let backbone = read_graph(&out.join("backbone_edges.csv"), "backbone network")?;
            let view = load_trace(out)?;
            let annotations = load_annotations_opt(config)?;
            ensure_out(out)?;
            pipeline::stage_metrics(
                &view,
                &backbone,
                annotations.as_ref(),
                pipeline::clustering_mode(config),
                out,
            )?;
            Ok(())
        }
        Command::Polarity => {
            let records = load_records(config)?;
            let seeds = load_seeds_required(config)?;
            ensure_out(out)?;
            pipeline::stage_polarity(&records, &seeds, config.polarity.rounds, out)?;
            Ok(())
        }
        Command::Shift => {
            let records = load_records(config)?;
            let backbone = read_graph(&out.join("backbone_edges.csv"), "backbone network")?;
            let view = load_trace(out)?;
            let stopwords = load_stopwords_opt(config)?;
            ensure_out(out)?;
            // The elbow needs only the coordination/size curve, so the
            // profiles are recomputed here without annotations.
            let profiles = community_curves_annotated(
                &view,
                &backbone,
                None,
                pipeline::clustering_mode(config),
            );
            let coordination = node_coordination(&backbone);
            pipeline::stage_shift(
                &records,
                &view,
                &profiles,
                &coordination,
                &stopwords,
                config.shift.top_k,
                out,
            )
        }
        Command::Baseline { thresholds } => {
            for &t in thresholds {
                if !t.is_finite() || t < 0.0 {
                    return Err(CliError::config(format!(
                        "baseline thresholds must be finite and non-negative, got {t}"
                    )));
                }
            }
            let sim_path = out.join("similarity_edges.csv");
            let graph = if sim_path.is_file() {
                read_graph(&sim_path, "similarity network")?
            } else {
                let records = load_records(config)?;
                ensure_out(out)?;
                let population =
                    pipeline::stage_ingest(&records, config.population.fraction, out)?;
                pipeline::stage_network(&records, &population, out)?
            };
            ensure_out(out)?;
            pipeline::stage_baseline(&graph, thresholds, out)
        }
        Command::Synth => {
            let section = config.synth.as_ref().ok_or_else(|| {
                CliError::config("the synth command needs a [synth] config section".into())
            })?;
            let seed = resolve_seed(cli, config)?;
            let synth_config = SynthConfig {
                n_background_users: section.n_background_users,
                n_tweets: section.n_tweets,
                popularity_exponent: section.popularity_exponent,
                groups: section
                    .groups
                    .iter()
                    .map(|g| GroupSpec {
                        size: g.size,
                        pool_size: g.pool_size,
                        coretweet_prob: g.coretweet_prob,
                    })
                    .collect(),
                retweets_per_user: section.retweets_per_user,
                contamination: section.contamination,
                rng_seed: seed,
            };
            ensure_out(out)?;
            let start = Instant::now();
            // generate() fails only on invalid parameters, a config problem.
            let (records, truth) =
                generate(&synth_config).map_err(|e| CliError::config(e.to_string()))?;
            write_artifact(out, "records.jsonl", |w| {
                write_records_jsonl(&records, w).map_err(|e| CliError::stage("synth", e))
            })?;
            write_artifact(out, "groundtruth.jsonl", |w| {
                write_groundtruth_jsonl(&truth, w).map_err(|e| CliError::stage("synth", e))
            })?;
            eprintln!(
                "[synth] records={} groups={} ms={}",
                records.len(),
                truth.group_members.len(),
                start.elapsed().as_millis()
            );
            Ok(())
        }
        Command::Run => cmd_run(cli, config, out),
        Command::ExportGexf => pipeline::export_gexf(out),
    }
}

/// The full pipeline, in memory, persisting every stage's artifacts.
fn cmd_run(cli: &Cli, config: &FileConfig, out: &Path) -> Result<(), CliError> {
    let total = Instant::now();
    // Validate every configured input before creating any output.
    let records_path = records_path(config)?;
    require_file(records_path, "records file")?;
    if let Some(p) = &config.input.seeds {
        require_file(p, "seed file")?;
    }
    if let Some(p) = &config.input.scores {
        require_file(p, "score annotations")?;
    }
    if let Some(p) = &config.input.flags {
        require_file(p, "flag annotations")?;
    }
    if let Some(p) = &config.input.stopwords {
        require_file(p, "stopword file")?;
    }
    let seed = resolve_seed(cli, config)?;
    ensure_out(out)?;

    let step = match (config.sweep.delta_w, config.sweep.step_count) {
        (Some(d), _) => format!("delta_w={d}"),
        (None, Some(c)) => format!("step_count={c}"),
        (None, None) => "step_count=100".to_string(),
    };
    eprintln!(
        "[run] out={} seed={seed} fraction={} alpha={} keep_rule={} {step} resolution={} \
         min_size={} rounds={} top_k={} clustering={}",
        out.display(),
        config.population.fraction,
        config.backbone.alpha,
        config.backbone.keep_rule,
        config.sweep.resolution,
        config.sweep.min_size,
        config.polarity.rounds,
        config.shift.top_k,
        config.metrics.clustering,
    );

    let records = read_records(records_path)?;
    let population = pipeline::stage_ingest(&records, config.population.fraction, out)?;
    let similarity = pipeline::stage_network(&records, &population, out)?;
    let backbone =
        pipeline::stage_backbone(&similarity, &pipeline::backbone_config(config), out)?;
    let (trace, coordination) =
        pipeline::stage_sweep(&backbone, &pipeline::sweep_config(config, seed), out)?;
    let view = trace.traced_view();
    let annotations = load_annotations_opt(config)?;
    let profiles = pipeline::stage_metrics(
        &view,
        &backbone,
        annotations.as_ref(),
        pipeline::clustering_mode(config),
        out,
    )?;
    match &config.input.seeds {
        Some(_) => {
            let seeds = load_seeds_required(config)?;
            pipeline::stage_polarity(&records, &seeds, config.polarity.rounds, out)?;
        }
        None => eprintln!("[polarity] no seed file configured, stage skipped"),
    }
    let stopwords = load_stopwords_opt(config)?;
    pipeline::stage_shift(
        &records,
        &view,
        &profiles,
        &coordination,
        &stopwords,
        config.shift.top_k,
        out,
    )?;
    eprintln!("[run] ok ms={}", total.elapsed().as_millis());
    Ok(())
}

fn records_path(config: &FileConfig) -> Result<&PathBuf, CliError> {
    config.input.records.as_ref().ok_or_else(|| {
        CliError::config("input.records must point at an interaction-record JSONL file".into())
    })
}

fn load_records(config: &FileConfig) -> Result<Vec<InteractionRecord>, CliError> {
    read_records(records_path(config)?)
}

fn load_trace(out: &Path) -> Result<TracedCommunities, CliError> {
    let path = out.join("sweep_trace.jsonl");
    require_file(&path, "sweep trace")?;
    let file = File::open(&path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    TracedCommunities::read_jsonl(BufReader::new(file))
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn load_annotations_opt(config: &FileConfig) -> Result<Option<AnnotationTable>, CliError> {
    let (path, kind) = match (&config.input.scores, &config.input.flags) {
        (Some(p), None) => (p, AnnotationKind::Score),
        (None, Some(p)) => (p, AnnotationKind::Flag),
        (None, None) => return Ok(None),
        // validate() rejects configs with both.
        (Some(_), Some(_)) => unreachable!("config validation rejects scores+flags"),
    };
    require_file(path, "annotation file")?;
    let file = File::open(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    load_annotations(BufReader::new(file), kind)
        .map(Some)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn load_seeds_required(config: &FileConfig) -> Result<SeedSet, CliError> {
    let path = config.input.seeds.as_ref().ok_or_else(|| {
        CliError::config("input.seeds must point at a hashtag,polarity CSV".into())
    })?;
    require_file(path, "seed file")?;
    let file = File::open(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    SeedSet::from_csv(BufReader::new(file))
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn load_stopwords_opt(config: &FileConfig) -> Result<BTreeSet<String>, CliError> {
    match &config.input.stopwords {
        Some(path) => read_stopwords(path),
        None => Ok(BTreeSet::new()),
    }
}

fn resolve_seed(cli: &Cli, config: &FileConfig) -> Result<u64, CliError> {
    cli.seed.or(config.sweep.rng_seed).ok_or_else(|| {
        CliError::config("an RNG seed is required: pass --seed or set sweep.rng_seed".into())
    })
}

fn ensure_out(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::config(format!("cannot create output dir {}: {e}", out.display())))
}
