//! Pipeline stages: each computes one step, writes its artifacts, and
//! reports counts and timings on the diagnostic stream.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use coordnet::backbone::{disparity_filter, fixed_threshold_filter, BackboneConfig, KeepRule};
use coordnet::ingest::select_superspreaders;
use coordnet::netmetrics::{
    community_curves_annotated, elbow_coordination, write_metrics_csv, ClusteringMode,
    CommunityProfile,
};
use coordnet::polarity::{hashtag_valence, user_polarities, SeedSet, ValenceTable};
use coordnet::simnet::{build_similarity_graph, build_user_vectors};
use coordnet::sweep::{node_coordination, run_sweep};
use coordnet::textshift::{
    build_corpus, community_hashtag_clouds, word_shift, write_cloud_csv, write_shift_csv,
};
use coordnet::{
    AnnotationTable, InteractionRecord, Population, SimilarityGraph, StepRule, SweepConfig,
    SweepTrace, TracedCommunities,
};

use crate::artifacts::{write_artifact, write_graph, write_node_coordination, write_population};
use crate::config::FileConfig;
use crate::error::CliError;

fn ms(start: Instant) -> u128 {
    start.elapsed().as_millis()
}

pub fn stage_ingest(
    records: &[InteractionRecord],
    fraction: f64,
    dir: &Path,
) -> Result<Population, CliError> {
    let start = Instant::now();
    let population =
        select_superspreaders(records, fraction).map_err(|e| CliError::stage("ingest", e))?;
    write_population(dir, &population)?;
    eprintln!(
        "[ingest] records={} population={} ms={}",
        records.len(),
        population.len(),
        ms(start)
    );
    Ok(population)
}

pub fn stage_network(
    records: &[InteractionRecord],
    population: &Population,
    dir: &Path,
) -> Result<SimilarityGraph, CliError> {
    let start = Instant::now();
    let vectors = build_user_vectors(records, population);
    let graph = build_similarity_graph(&vectors).map_err(|e| CliError::stage("network", e))?;
    write_graph(dir, "similarity_edges.csv", &graph)?;
    eprintln!(
        "[network] nodes={} edges={} ms={}",
        graph.node_count(),
        graph.edge_count(),
        ms(start)
    );
    Ok(graph)
}

pub fn backbone_config(config: &FileConfig) -> BackboneConfig {
    BackboneConfig {
        alpha: config.backbone.alpha,
        keep_rule: match config.backbone.keep_rule.as_str() {
            "both" => KeepRule::BothEndpoints,
            _ => KeepRule::EitherEndpoint,
        },
    }
}

pub fn stage_backbone(
    graph: &SimilarityGraph,
    config: &BackboneConfig,
    dir: &Path,
) -> Result<SimilarityGraph, CliError> {
    let start = Instant::now();
    let backbone = disparity_filter(graph, config).map_err(|e| CliError::stage("backbone", e))?;
    write_graph(dir, "backbone_edges.csv", &backbone)?;
    eprintln!(
        "nodes={} edges={} alpha={}",
        backbone.node_count(),
        backbone.edge_count(),
        config.alpha
    );
    eprintln!("[backbone] ms={}", ms(start));
    Ok(backbone)
}

pub fn sweep_config(config: &FileConfig, seed: u64) -> SweepConfig {
    let step = match (config.sweep.delta_w, config.sweep.step_count) {
        (Some(d), _) => StepRule::Delta(d),
        (None, Some(c)) => StepRule::Count(c),
        (None, None) => StepRule::Count(100),
    };
    SweepConfig {
        step,
        resolution: config.sweep.resolution,
        min_size: config.sweep.min_size,
        rng_seed: seed,
    }
}

pub fn stage_sweep(
    backbone: &SimilarityGraph,
    config: &SweepConfig,
    dir: &Path,
) -> Result<(SweepTrace, BTreeMap<String, f64>), CliError> {
    let start = Instant::now();
    let trace = run_sweep(backbone, config).map_err(|e| CliError::stage("sweep", e))?;
    let coordination = node_coordination(backbone);
    write_artifact(dir, "sweep_trace.jsonl", |w| {
        trace.write_jsonl(w).map_err(|e| CliError::stage("sweep", e))
    })?;
    write_node_coordination(dir, &coordination)?;
    eprintln!(
        "[sweep] iterations={} traced={} ms={}",
        trace.iterations.len(),
        trace.traced_roots().len(),
        ms(start)
    );
    Ok((trace, coordination))
}

pub fn clustering_mode(config: &FileConfig) -> ClusteringMode {
    match config.metrics.clustering.as_str() {
        "global" => ClusteringMode::Transitivity,
        _ => ClusteringMode::AverageLocal,
    }
}

pub fn stage_metrics(
    view: &TracedCommunities,
    backbone: &SimilarityGraph,
    annotations: Option<&AnnotationTable>,
    mode: ClusteringMode,
    dir: &Path,
) -> Result<Vec<CommunityProfile>, CliError> {
    let start = Instant::now();
    let profiles = community_curves_annotated(view, backbone, annotations, mode);
    write_artifact(dir, "community_metrics.csv", |w| {
        write_metrics_csv(&profiles, w).map_err(|e| CliError::stage("metrics", e))
    })?;
    let points: usize = profiles.iter().map(|p| p.points.len()).sum();
    eprintln!(
        "[metrics] communities={} points={} ms={}",
        profiles.len(),
        points,
        ms(start)
    );
    Ok(profiles)
}

pub fn stage_polarity(
    records: &[InteractionRecord],
    seeds: &SeedSet,
    rounds: u32,
    dir: &Path,
) -> Result<(ValenceTable, BTreeMap<String, f64>), CliError> {
    let start = Instant::now();
    let valences =
        hashtag_valence(records, seeds, rounds).map_err(|e| CliError::stage("polarity", e))?;
    let users = user_polarities(records, &valences);
    write_artifact(dir, "hashtag_valence.csv", |w| {
        valences
            .write_csv(w)
            .map_err(|e| CliError::stage("polarity", e))
    })?;
    write_artifact(dir, "user_polarity.csv", |w| {
        coordnet::polarity::write_user_polarity_csv(&users, w)
            .map_err(|e| CliError::stage("polarity", e))
    })?;
    eprintln!(
        "[polarity] hashtags={} users={} ms={}",
        valences.len(),
        users.len(),
        ms(start)
    );
    Ok((valences, users))
}

/// Word shifts (coordinated core vs full membership) and TF-IDF hashtag
/// clouds for every traced community. Communities without an elbow value or
/// without comparable text are skipped with a diagnostic note.
pub fn stage_shift(
    records: &[InteractionRecord],
    view: &TracedCommunities,
    profiles: &[CommunityProfile],
    coordination: &BTreeMap<String, f64>,
    stopwords: &BTreeSet<String>,
    top_k: usize,
    dir: &Path,
) -> Result<(), CliError> {
    let start = Instant::now();
    let Some(first) = view.iterations.first() else {
        eprintln!("[shift] communities=0 exported=0 skipped=0 ms={}", ms(start));
        return Ok(());
    };
    let communities = &first.communities;
    let clouds = community_hashtag_clouds(records, communities, top_k);
    for (root, cloud) in &clouds {
        write_artifact(dir, &format!("cloud_{root}.csv"), |w| {
            write_cloud_csv(cloud, w).map_err(|e| CliError::stage("shift", e))
        })?;
    }
    let mut exported = 0usize;
    let mut skipped = 0usize;
    for (root, members) in communities {
        let profile = profiles.iter().find(|p| p.community_id == *root);
        let elbow = profile.and_then(elbow_coordination);
        let Some(elbow) = elbow else {
            eprintln!("[shift] community {root}: no elbow value, skipped");
            skipped += 1;
            continue;
        };
        let core: BTreeSet<String> = members
            .iter()
            .filter(|m| coordination.get(*m).copied().unwrap_or(0.0) >= elbow)
            .cloned()
            .collect();
        let reference = build_corpus(records, members, stopwords);
        let comparison = build_corpus(records, &core, stopwords);
        match (reference, comparison) {
            (Ok(reference), Ok(comparison)) => {
                let shift = word_shift(&reference, &comparison, top_k);
                write_artifact(dir, &format!("shift_{root}.csv"), |w| {
                    write_shift_csv(&shift, w).map_err(|e| CliError::stage("shift", e))
                })?;
                exported += 1;
            }
            _ => {
                eprintln!("[shift] community {root}: no comparable text, skipped");
                skipped += 1;
            }
        }
    }
    eprintln!(
        "[shift] communities={} exported={exported} skipped={skipped} ms={}",
        communities.len(),
        ms(start)
    );
    Ok(())
}

/// Fixed-threshold baselines on the unfiltered similarity network: for each
/// threshold, exports surviving edges and connected components.
pub fn stage_baseline(
    graph: &SimilarityGraph,
    thresholds: &[f64],
    dir: &Path,
) -> Result<(), CliError> {
    for &t in thresholds {
        if !t.is_finite() || t < 0.0 {
            return Err(CliError::config(format!(
                "baseline thresholds must be finite and non-negative, got {t}"
            )));
        }
    }
    for &t in thresholds {
        let start = Instant::now();
        let filtered = fixed_threshold_filter(graph, t);
        write_graph(dir, &format!("baseline_{t}_edges.csv"), &filtered)?;
        let components = filtered.connected_components();
        write_artifact(dir, &format!("baseline_{t}_components.csv"), |w| {
            writeln!(w, "component_id,user_id").map_err(|e| CliError::stage("baseline", e))?;
            for (i, component) in components.iter().enumerate() {
                for &v in component {
                    writeln!(w, "{i},{}", filtered.node_name(v))
                        .map_err(|e| CliError::stage("baseline", e))?;
                }
            }
            Ok(())
        })?;
        eprintln!(
            "[baseline] t={t} nodes={} edges={} components={} ms={}",
            filtered.node_count(),
            filtered.edge_count(),
            components.len(),
            ms(start)
        );
    }
    Ok(())
}

/// Re-exports a completed run's backbone as GEXF with `community_id`,
/// `node_coordination`, and (when the polarity stage ran) `polarity` node
/// attributes. Community ids are the traced roots at the first sweep
/// iteration.
pub fn export_gexf(dir: &Path) -> Result<(), CliError> {
    let start = Instant::now();
    let backbone = crate::artifacts::read_graph(&dir.join("backbone_edges.csv"), "backbone network")?;
    let trace_path = dir.join("sweep_trace.jsonl");
    crate::artifacts::require_file(&trace_path, "sweep trace")?;
    let file = std::fs::File::open(&trace_path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", trace_path.display())))?;
    let view = TracedCommunities::read_jsonl(std::io::BufReader::new(file))
        .map_err(|e| CliError::input(format!("{}: {e}", trace_path.display())))?;
    let coordination = crate::artifacts::read_user_value_csv(
        &dir.join("node_coordination.csv"),
        "node coordination table",
    )?;
    let polarity_path = dir.join("user_polarity.csv");
    let polarity = if polarity_path.is_file() {
        Some(crate::artifacts::read_user_value_csv(&polarity_path, "user polarity table")?)
    } else {
        None
    };
    let mut community: BTreeMap<String, u32> = BTreeMap::new();
    if let Some(first) = view.iterations.first() {
        for (&root, members) in &first.communities {
            for m in members {
                community.insert(m.clone(), root);
            }
        }
    }
    write_artifact(dir, "graph.gexf", |w| {
        crate::gexf::write_gexf(&backbone, &community, &coordination, polarity.as_ref(), w)
            .map_err(|e| CliError::stage("export-gexf", e))
    })?;
    eprintln!(
        "[export-gexf] nodes={} edges={} communities={} ms={}",
        backbone.node_count(),
        backbone.edge_count(),
        community.values().collect::<std::collections::BTreeSet<_>>().len(),
        ms(start)
    );
    Ok(())
}
