//! Coordination-aware community detection: an iterative sweep that raises an
//! edge-weight threshold over the filtered similarity network, re-running
//! warm-started Louvain at each step and tracing community lineages.

mod louvain;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SimilarityGraph;

/// A node-to-community assignment with dense integer community ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    assignment: BTreeMap<String, u32>,
}

impl Partition {
    pub fn from_assignment(assignment: BTreeMap<String, u32>) -> Self {
        Partition { assignment }
    }

    pub fn get(&self, node: &str) -> Option<u32> {
        self.assignment.get(node).copied()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.assignment.iter().map(|(n, &c)| (n.as_str(), c))
    }

    /// Communities as sorted member sets keyed by community id.
    pub fn blocks(&self) -> BTreeMap<u32, BTreeSet<String>> {
        let mut blocks: BTreeMap<u32, BTreeSet<String>> = BTreeMap::new();
        for (node, &c) in &self.assignment {
            blocks.entry(c).or_default().insert(node.clone());
        }
        blocks
    }

    /// The assignment restricted to the given nodes.
    pub fn restricted_to<'a, I: IntoIterator<Item = &'a str>>(&self, nodes: I) -> Partition {
        let assignment = nodes
            .into_iter()
            .filter_map(|n| self.assignment.get(n).map(|&c| (n.to_string(), c)))
            .collect();
        Partition { assignment }
    }
}

/// How the sweep advances its threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// A fixed positive increment.
    Delta(f64),
    /// Divide the weight range into this many equal steps.
    Count(u32),
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub step: StepRule,
    /// Louvain resolution.
    pub resolution: f64,
    /// Communities smaller than this at the first iteration are not traced.
    pub min_size: usize,
    /// Seed for the node-visitation permutation; there is no default.
    pub rng_seed: u64,
}

impl SweepConfig {
    /// Standard parameters: 100 threshold steps, resolution 1.5, minimum
    /// traced size 20.
    pub fn new(rng_seed: u64) -> Self {
        SweepConfig { step: StepRule::Count(100), resolution: 1.5, min_size: 20, rng_seed }
    }
}

/// One sweep iteration: the thresholded subnetwork, its partition, and the
/// lineage links back to the previous iteration.
#[derive(Debug, Clone)]
pub struct SweepIteration {
    pub threshold: f64,
    /// Percentile rank of the threshold within the full weight multiset.
    pub coordination: f64,
    pub node_count: usize,
    pub edge_count: usize,
    /// Full assignment of every surviving node.
    pub partition: Partition,
    /// Child community id -> parent community id at the previous iteration
    /// (empty at iteration zero). Covers every community of this iteration.
    pub lineage: BTreeMap<u32, u32>,
    /// Traced communities: community id -> root community id at iteration
    /// zero.
    pub traced: BTreeMap<u32, u32>,
    /// The warm-start assignment passed to community detection (`None` at
    /// iteration zero). Always the previous partition restricted to this
    /// iteration's surviving nodes.
    pub warm_start: Option<Partition>,
}

/// The full sweep result.
#[derive(Debug, Clone)]
pub struct SweepTrace {
    pub iterations: Vec<SweepIteration>,
    /// Ascending multiset of the filtered network's edge weights.
    sorted_weights: Vec<f64>,
}

/// Percentile rank of `t` within the weight multiset: the proportion of
/// weights less than or equal to `t`. Returns 0 for an empty multiset.
pub fn coordination_score(t: f64, weights: &[f64]) -> f64 {
    if weights.is_empty() {
        return 0.0;
    }
    let count = weights.iter().filter(|&&w| w <= t).count();
    count as f64 / weights.len() as f64
}

fn coordination_sorted(t: f64, sorted: &[f64]) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    sorted.partition_point(|&w| w <= t) as f64 / sorted.len() as f64
}

/// Coordination score of each node: the percentile rank of its strongest
/// incident edge (0 for isolated nodes). Equivalently, the last threshold
/// percentile at which the node would survive the sweep.
pub fn node_coordination(graph: &SimilarityGraph) -> BTreeMap<String, f64> {
    let mut sorted: Vec<f64> = graph.weights().collect();
    sorted.sort_unstable_by(f64::total_cmp);
    (0..graph.node_count() as u32)
        .map(|v| {
            let best = graph
                .neighbors(v)
                .iter()
                .map(|&(_, w)| w)
                .fold(f64::NEG_INFINITY, f64::max);
            let score = if best.is_finite() {
                coordination_sorted(best, &sorted)
            } else {
                0.0
            };
            (graph.node_name(v).to_string(), score)
        })
        .collect()
}

/// Louvain community detection over a similarity graph.
///
/// Nodes are visited in ascending user-id order permuted by a seeded RNG;
/// tie-breaking prefers the smallest community id; `seed_partition`
/// warm-starts the assignment (nodes it does not cover start as
/// singletons). An empty graph yields an empty partition.
pub fn detect_communities(
    graph: &SimilarityGraph,
    resolution: f64,
    seed_partition: Option<&Partition>,
    rng_seed: u64,
) -> Partition {
    let n = graph.node_count();
    if n == 0 {
        return Partition::default();
    }
    let adj: Vec<Vec<(u32, f64)>> = (0..n as u32)
        .map(|v| graph.neighbors(v).to_vec())
        .collect();
    let seed_vec: Option<Vec<u32>> = seed_partition.map(|part| {
        let mut next_fresh = part
            .assignment
            .values()
            .copied()
            .max()
            .map_or(0, |m| m + 1);
        (0..n as u32)
            .map(|v| match part.get(graph.node_name(v)) {
                Some(c) => c,
                None => {
                    let c = next_fresh;
                    next_fresh += 1;
                    c
                }
            })
            .collect()
    });
    let assignment = louvain::louvain(&adj, resolution, seed_vec.as_deref(), rng_seed);
    Partition {
        assignment: assignment
            .into_iter()
            .enumerate()
            .map(|(v, c)| (graph.node_name(v as u32).to_string(), c))
            .collect(),
    }
}

/// Exact-rational Jaccard comparison: `i1/u1` vs `i2/u2` without division.
fn jaccard_cmp(i1: usize, u1: usize, i2: usize, u2: usize) -> std::cmp::Ordering {
    ((i1 as u128) * (u2 as u128)).cmp(&((i2 as u128) * (u1 as u128)))
}

/// Runs the coordination sweep.
///
/// Iteration zero detects communities on the full graph at threshold
/// `min(W)`; afterwards the threshold advances by the step rule, edges below
/// it and then degree-zero nodes are removed, and detection re-runs
/// warm-started from the previous partition. Communities smaller than
/// `min_size` at iteration zero are not traced. Lineage links each community
/// to its maximum-Jaccard predecessor (ties: larger intersection, then
/// smaller id); a traced lineage continues through its best-matching child.
pub fn run_sweep(graph: &SimilarityGraph, config: &SweepConfig) -> Result<SweepTrace> {
    if graph.edge_count() == 0 {
        return Err(Error::Graph("cannot sweep a graph with no edges".into()));
    }
    let mut sorted_weights: Vec<f64> = graph.weights().collect();
    sorted_weights.sort_unstable_by(f64::total_cmp);
    let min_w = sorted_weights[0];
    let max_w = *sorted_weights.last().unwrap();
    let delta = match config.step {
        StepRule::Delta(d) => {
            if !(d > 0.0) {
                return Err(Error::Config(format!("delta_w must be positive, got {d}")));
            }
            d
        }
        StepRule::Count(c) => {
            if c == 0 {
                return Err(Error::Config("step count must be at least 1".into()));
            }
            (max_w - min_w) / c as f64
        }
    };

    let c0 = detect_communities(graph, config.resolution, None, config.rng_seed);
    let blocks0 = c0.blocks();
    let traced0: BTreeMap<u32, u32> = blocks0
        .iter()
        .filter(|(_, members)| members.len() >= config.min_size)
        .map(|(&c, _)| (c, c))
        .collect();
    let mut iterations = vec![SweepIteration {
        threshold: min_w,
        coordination: coordination_sorted(min_w, &sorted_weights),
        node_count: graph.node_count(),
        edge_count: graph.edge_count(),
        partition: c0,
        lineage: BTreeMap::new(),
        traced: traced0,
        warm_start: None,
    }];

    // A single distinct weight (delta zero) means the loop body never runs.
    if delta <= 0.0 {
        return Ok(SweepTrace { iterations, sorted_weights });
    }

    let mut current = graph.clone();
    let mut threshold = min_w;
    while threshold + delta <= max_w {
        threshold += delta;
        current = current
            .retain_edges(|_, _, w| w >= threshold)
            .drop_isolated();
        let prev = iterations.last().unwrap();
        let warm = prev
            .partition
            .restricted_to(current.nodes().iter().map(String::as_str));
        let part = detect_communities(
            &current,
            config.resolution,
            Some(&warm),
            config.rng_seed,
        );

        // Parent of each community: maximum Jaccard against the previous
        // partition, ties by larger intersection then smaller parent id.
        let prev_blocks = prev.partition.blocks();
        let prev_sizes: BTreeMap<u32, usize> =
            prev_blocks.iter().map(|(&c, m)| (c, m.len())).collect();
        let blocks = part.blocks();
        let mut lineage: BTreeMap<u32, u32> = BTreeMap::new();
        for (&cid, members) in &blocks {
            let mut inter: BTreeMap<u32, usize> = BTreeMap::new();
            for node in members {
                if let Some(p) = prev.partition.get(node) {
                    *inter.entry(p).or_insert(0) += 1;
                }
            }
            let mut best: Option<(u32, usize, usize)> = None; // (parent, inter, union)
            for (&p, &i) in &inter {
                let union = members.len() + prev_sizes[&p] - i;
                let better = match best {
                    None => true,
                    Some((_, bi, bu)) => match jaccard_cmp(i, union, bi, bu) {
                        std::cmp::Ordering::Greater => true,
                        std::cmp::Ordering::Less => false,
                        std::cmp::Ordering::Equal => i > bi, // ids ascend, so first wins ties
                    },
                };
                if better {
                    best = Some((p, i, union));
                }
            }
            if let Some((p, _, _)) = best {
                lineage.insert(cid, p);
            }
        }

        // Continue each traced lineage through the best-matching child.
        let mut children: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (&child, &parent) in &lineage {
            children.entry(parent).or_default().push(child);
        }
        let mut traced: BTreeMap<u32, u32> = BTreeMap::new();
        for (&parent, &root) in &prev.traced {
            let Some(cands) = children.get(&parent) else { continue };
            let parent_members = &prev_blocks[&parent];
            let mut best: Option<(u32, usize, usize)> = None;
            for &child in cands {
                let members = &blocks[&child];
                let i = members.intersection(parent_members).count();
                let union = members.len() + parent_members.len() - i;
                let better = match best {
                    None => true,
                    Some((_, bi, bu)) => match jaccard_cmp(i, union, bi, bu) {
                        std::cmp::Ordering::Greater => true,
                        std::cmp::Ordering::Less => false,
                        std::cmp::Ordering::Equal => i > bi,
                    },
                };
                if better {
                    best = Some((child, i, union));
                }
            }
            if let Some((child, _, _)) = best {
                traced.insert(child, root);
            }
        }

        iterations.push(SweepIteration {
            threshold,
            coordination: coordination_sorted(threshold, &sorted_weights),
            node_count: current.node_count(),
            edge_count: current.edge_count(),
            partition: part,
            lineage,
            traced,
            warm_start: Some(warm),
        });
    }

    Ok(SweepTrace { iterations, sorted_weights })
}

impl SweepTrace {
    /// The ascending weight multiset the coordination scores refer to.
    pub fn weights(&self) -> &[f64] {
        &self.sorted_weights
    }

    /// Roots (iteration-zero community ids) of all traced lineages.
    pub fn traced_roots(&self) -> BTreeSet<u32> {
        self.iterations
            .first()
            .map(|it| it.traced.values().copied().collect())
            .unwrap_or_default()
    }

    /// Collapses the trace to traced communities keyed by root id.
    pub fn traced_view(&self) -> TracedCommunities {
        let iterations = self
            .iterations
            .iter()
            .map(|it| {
                let blocks = it.partition.blocks();
                let communities: BTreeMap<u32, BTreeSet<String>> = it
                    .traced
                    .iter()
                    .map(|(&cid, &root)| (root, blocks[&cid].clone()))
                    .collect();
                TracedIteration {
                    threshold: it.threshold,
                    coordination: it.coordination,
                    node_count: it.node_count,
                    edge_count: it.edge_count,
                    communities,
                }
            })
            .collect();
        TracedCommunities { iterations }
    }

    /// Writes one JSON object per iteration:
    /// `{"t": ..., "coordination": ..., "nodes": ..., "edges": ...,
    ///   "communities": {"<cid>": ["user", ...]}, "lineage": {"<cid>": "<parent>"}}`.
    /// Only traced communities are listed; member arrays are sorted.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for it in &self.iterations {
            let blocks = it.partition.blocks();
            let communities: BTreeMap<String, Vec<&str>> = it
                .traced
                .keys()
                .map(|&cid| {
                    (
                        cid.to_string(),
                        blocks[&cid].iter().map(String::as_str).collect(),
                    )
                })
                .collect();
            let lineage: BTreeMap<String, String> = it
                .traced
                .keys()
                .filter_map(|&cid| {
                    it.lineage
                        .get(&cid)
                        .map(|&p| (cid.to_string(), p.to_string()))
                })
                .collect();
            let line = TraceLine {
                t: it.threshold,
                coordination: it.coordination,
                nodes: it.node_count,
                edges: it.edge_count,
                communities,
                lineage,
            };
            serde_json::to_writer(&mut out, &line)
                .map_err(|e| Error::Format(format!("trace serialization: {e}")))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TraceLine<'a> {
    t: f64,
    coordination: f64,
    nodes: usize,
    edges: usize,
    #[serde(borrow)]
    communities: BTreeMap<String, Vec<&'a str>>,
    lineage: BTreeMap<String, String>,
}

/// One sweep iteration reduced to its traced communities, keyed by the root
/// community id each lineage started from.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedIteration {
    pub threshold: f64,
    pub coordination: f64,
    pub node_count: usize,
    pub edge_count: usize,
    pub communities: BTreeMap<u32, BTreeSet<String>>,
}

/// Trace reduced to traced lineages; obtainable from a live [`SweepTrace`]
/// or by re-reading an exported trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedCommunities {
    pub iterations: Vec<TracedIteration>,
}

impl TracedCommunities {
    /// Root community ids (iteration-zero communities that were traced).
    pub fn roots(&self) -> BTreeSet<u32> {
        self.iterations
            .first()
            .map(|it| it.communities.keys().copied().collect())
            .unwrap_or_default()
    }

    /// Reads a trace written by [`SweepTrace::write_jsonl`], resolving each
    /// community's root through the lineage links.
    pub fn read_jsonl<R: Read>(input: R) -> Result<Self> {
        let reader = BufReader::new(input);
        let mut iterations: Vec<TracedIteration> = Vec::new();
        // Maps this iteration's exported community id to its root.
        let mut roots: HashMap<u32, u32> = HashMap::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TraceLine = serde_json::from_str(&line)
                .map_err(|e| Error::Format(format!("trace line {}: {e}", lineno + 1)))?;
            let mut next_roots: HashMap<u32, u32> = HashMap::new();
            let mut communities: BTreeMap<u32, BTreeSet<String>> = BTreeMap::new();
            for (cid_str, members) in &parsed.communities {
                let cid: u32 = cid_str
                    .parse()
                    .map_err(|_| Error::Format(format!("bad community id {cid_str:?}")))?;
                let root = if iterations.is_empty() {
                    cid
                } else {
                    let parent_str = parsed.lineage.get(cid_str).ok_or_else(|| {
                        Error::Format(format!(
                            "community {cid} at line {} lacks a lineage entry",
                            lineno + 1
                        ))
                    })?;
                    let parent: u32 = parent_str.parse().map_err(|_| {
                        Error::Format(format!("bad parent id {parent_str:?}"))
                    })?;
                    *roots.get(&parent).ok_or_else(|| {
                        Error::Format(format!(
                            "community {cid} references unknown parent {parent}"
                        ))
                    })?
                };
                next_roots.insert(cid, root);
                communities.insert(
                    root,
                    members.iter().map(|s| s.to_string()).collect(),
                );
            }
            roots = next_roots;
            iterations.push(TracedIteration {
                threshold: parsed.t,
                coordination: parsed.coordination,
                node_count: parsed.nodes,
                edge_count: parsed.edges,
                communities,
            });
        }
        Ok(TracedCommunities { iterations })
    }
}
