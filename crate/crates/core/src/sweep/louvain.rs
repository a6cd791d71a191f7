//! Weighted Louvain community detection with a resolution parameter,
//! deterministic tie-breaking, and optional warm starts.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Moves and level repetitions must improve modularity by more than this.
const MIN_GAIN: f64 = 1e-9;

/// Runs Louvain on an adjacency structure (`adj[v]` sorted by neighbor; no
/// self-loops) and returns one community id per node, renumbered densely in
/// order of each community's smallest member index.
///
/// Determinism: nodes are visited in index order permuted by a ChaCha8 RNG
/// seeded with `rng_seed`; candidate communities are scanned in ascending id
/// with strict improvement, so equal gains resolve to the smallest id.
/// `seed` optionally warm-starts the first level with an initial assignment.
pub(crate) fn louvain(
    adj: &[Vec<(u32, f64)>],
    resolution: f64,
    seed: Option<&[u32]>,
    rng_seed: u64,
) -> Vec<u32> {
    let n = adj.len();
    if n == 0 {
        return Vec::new();
    }
    let m2: f64 = adj
        .iter()
        .flat_map(|list| list.iter().map(|&(_, w)| w))
        .sum();
    if m2 <= 0.0 {
        // No edges: every node is its own community.
        return (0..n as u32).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    // `membership[original] = node index in the current level graph`.
    let mut membership: Vec<u32> = (0..n as u32).collect();
    let mut level_adj: Vec<Vec<(u32, f64)>> = adj.to_vec();
    let mut comm: Vec<u32> = match seed {
        Some(assignment) => relabel_dense(assignment),
        None => (0..n as u32).collect(),
    };

    let flat =
        |membership: &[u32], comm: &[u32]| -> Vec<u32> {
            membership.iter().map(|&s| comm[s as usize]).collect()
        };
    let mut best_q = weighted_modularity(adj, &flat(&membership, &comm), resolution, m2);

    loop {
        let moved = local_moves(&level_adj, &mut comm, resolution, m2, &mut rng);
        if !moved {
            break;
        }
        let flat_now = flat(&membership, &comm);
        let q = weighted_modularity(adj, &flat_now, resolution, m2);
        if q - best_q <= MIN_GAIN {
            break;
        }
        best_q = q;
        let (new_adj, remap) = aggregate(&level_adj, &comm);
        if new_adj.len() == level_adj.len() {
            break;
        }
        for slot in membership.iter_mut() {
            *slot = remap[comm[*slot as usize] as usize];
        }
        level_adj = new_adj;
        comm = (0..level_adj.len() as u32).collect();
    }

    relabel_by_min_member(&flat(&membership, &comm))
}

/// One phase of local moves; returns whether any node changed community.
fn local_moves(
    adj: &[Vec<(u32, f64)>],
    comm: &mut [u32],
    resolution: f64,
    m2: f64,
    rng: &mut ChaCha8Rng,
) -> bool {
    let n = adj.len();
    // Node strength; self-loop entries (stored as their full aggregated
    // weight) count once.
    let strength: Vec<f64> = adj
        .iter()
        .map(|list| list.iter().map(|&(_, w)| w).sum())
        .collect();
    let mut comm_strength: Vec<f64> = vec![0.0; n];
    for v in 0..n {
        comm_strength[comm[v] as usize] += strength[v];
    }

    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(rng);

    let inv_m2 = 1.0 / m2;
    let mut any_moved = false;
    loop {
        let mut moves = 0usize;
        for &node in &order {
            let v = node as usize;
            let cur = comm[v];
            let k_v = strength[v];

            // Weight from v to each adjacent community, accumulated in
            // sorted neighbor order; self-loops stay with the node wherever
            // it goes, so they cancel out of the comparison and are skipped.
            let mut weight_to: BTreeMap<u32, f64> = BTreeMap::new();
            for &(u, w) in &adj[v] {
                if u != node {
                    *weight_to.entry(comm[u as usize]).or_insert(0.0) += w;
                }
            }

            comm_strength[cur as usize] -= k_v;
            let w_cur = weight_to.get(&cur).copied().unwrap_or(0.0);
            let removal_cost = -(w_cur * inv_m2)
                + resolution * comm_strength[cur as usize] * k_v * inv_m2 * inv_m2;

            let mut best_comm = cur;
            let mut best_gain = MIN_GAIN;
            for (&cand, &w_cand) in &weight_to {
                if cand == cur {
                    continue;
                }
                let gain = removal_cost + w_cand * inv_m2
                    - resolution * comm_strength[cand as usize] * k_v * inv_m2 * inv_m2;
                if gain > best_gain {
                    best_gain = gain;
                    best_comm = cand;
                }
            }
            comm_strength[best_comm as usize] += k_v;
            if best_comm != cur {
                comm[v] = best_comm;
                moves += 1;
                any_moved = true;
            }
        }
        if moves == 0 {
            break;
        }
    }
    any_moved
}

/// Collapses communities into supernodes. Returns the new adjacency (with
/// intra-community weight kept as a self-loop entry carrying twice the
/// internal edge weight, preserving total strength) and the map from old
/// community id to new node index.
fn aggregate(adj: &[Vec<(u32, f64)>], comm: &[u32]) -> (Vec<Vec<(u32, f64)>>, Vec<u32>) {
    let max_comm = comm.iter().copied().max().unwrap_or(0) as usize;
    let mut remap: Vec<u32> = vec![u32::MAX; max_comm + 1];
    let mut next = 0u32;
    // Renumber communities in ascending id order for determinism.
    let mut used: Vec<bool> = vec![false; max_comm + 1];
    for &c in comm {
        used[c as usize] = true;
    }
    for (c, &u) in used.iter().enumerate() {
        if u {
            remap[c] = next;
            next += 1;
        }
    }

    let mut new_adj: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); next as usize];
    for (v, list) in adj.iter().enumerate() {
        let cv = remap[comm[v] as usize];
        for &(u, w) in list {
            let cu = remap[comm[u as usize] as usize];
            *new_adj[cv as usize].entry(cu).or_insert(0.0) += w;
        }
    }
    let new_adj: Vec<Vec<(u32, f64)>> = new_adj
        .into_iter()
        .map(|m| m.into_iter().collect())
        .collect();
    (new_adj, remap)
}

/// Weighted modularity of an assignment over the original graph:
/// `Q = sum_c [ L_c / m - gamma * (k_c / 2m)^2 ]`.
pub(crate) fn weighted_modularity(
    adj: &[Vec<(u32, f64)>],
    assignment: &[u32],
    resolution: f64,
    m2: f64,
) -> f64 {
    if m2 <= 0.0 {
        return 0.0;
    }
    let max_comm = assignment.iter().copied().max().unwrap_or(0) as usize;
    let mut internal = vec![0.0f64; max_comm + 1];
    let mut comm_strength = vec![0.0f64; max_comm + 1];
    for (v, list) in adj.iter().enumerate() {
        let cv = assignment[v];
        for &(u, w) in list {
            comm_strength[cv as usize] += w;
            if assignment[u as usize] == cv && (u as usize) > v {
                internal[cv as usize] += w;
            }
        }
    }
    let m = m2 / 2.0;
    let mut q = 0.0;
    for c in 0..=max_comm {
        let frac = comm_strength[c] / m2;
        q += internal[c] / m - resolution * frac * frac;
    }
    q
}

/// Relabels arbitrary community ids to dense `0..K`, preserving their
/// ascending order.
fn relabel_dense(assignment: &[u32]) -> Vec<u32> {
    let mut distinct: Vec<u32> = assignment.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let remap: BTreeMap<u32, u32> = distinct
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c, i as u32))
        .collect();
    assignment.iter().map(|c| remap[c]).collect()
}

/// Relabels communities to dense `0..K` ordered by each community's
/// smallest member node index.
fn relabel_by_min_member(assignment: &[u32]) -> Vec<u32> {
    let mut remap: BTreeMap<u32, u32> = BTreeMap::new();
    let mut next = 0u32;
    let mut out = Vec::with_capacity(assignment.len());
    for &c in assignment {
        let id = *remap.entry(c).or_insert_with(|| {
            let id = next;
            next += 1;
            id
        });
        out.push(id);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Builds sorted adjacency from an undirected edge list.
    fn adjacency(n: usize, edges: &[(u32, u32, f64)]) -> Vec<Vec<(u32, f64)>> {
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            adj[a as usize].push((b, w));
            adj[b as usize].push((a, w));
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|&(v, _)| v);
        }
        adj
    }

    /// Two triangles joined by one weak bridge.
    fn two_triangles() -> (usize, Vec<(u32, u32, f64)>) {
        let edges = vec![
            (0, 1, 1.0),
            (0, 2, 1.0),
            (1, 2, 1.0),
            (3, 4, 1.0),
            (3, 5, 1.0),
            (4, 5, 1.0),
            (2, 3, 0.01),
        ];
        (6, edges)
    }

    /// Enumerates every set partition of `n` items (restricted-growth
    /// strings) and returns the modularity-optimal one.
    fn exhaustive_optimum(
        adj: &[Vec<(u32, f64)>],
        resolution: f64,
    ) -> (Vec<u32>, f64) {
        let n = adj.len();
        let m2: f64 = adj.iter().flat_map(|l| l.iter().map(|&(_, w)| w)).sum();
        let mut best: (Vec<u32>, f64) = (vec![0; n], f64::NEG_INFINITY);
        let mut rgs = vec![0u32; n];
        loop {
            let q = weighted_modularity(adj, &rgs, resolution, m2);
            if q > best.1 {
                best = (rgs.clone(), q);
            }
            // Advance to the next restricted-growth string.
            let mut i = n as i64 - 1;
            loop {
                if i <= 0 {
                    return best;
                }
                let max_prefix = rgs[..i as usize].iter().copied().max().unwrap();
                if rgs[i as usize] <= max_prefix {
                    rgs[i as usize] += 1;
                    for j in (i as usize + 1)..n {
                        rgs[j] = 0;
                    }
                    break;
                }
                i -= 1;
            }
        }
    }

    fn blocks(assignment: &[u32]) -> Vec<Vec<u32>> {
        let mut map: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (v, &c) in assignment.iter().enumerate() {
            map.entry(c).or_default().push(v as u32);
        }
        map.into_values().collect()
    }

    #[test]
    fn recovers_exhaustive_optimum_on_two_triangles() {
        let (n, edges) = two_triangles();
        let adj = adjacency(n, &edges);
        let (opt, opt_q) = exhaustive_optimum(&adj, 1.0);
        let found = louvain(&adj, 1.0, None, 42);
        assert_eq!(blocks(&found), blocks(&opt), "partition must match the optimum");
        assert_eq!(
            blocks(&found),
            vec![vec![0, 1, 2], vec![3, 4, 5]],
            "optimum is the two triangles"
        );
        let m2: f64 = adj.iter().flat_map(|l| l.iter().map(|&(_, w)| w)).sum();
        let q = weighted_modularity(&adj, &found, 1.0, m2);
        assert!((q - opt_q).abs() < 1e-12);
    }

    #[test]
    fn two_cliques_with_weak_bridge() {
        // Two 5-cliques at weight 1.0 joined by a 0.01 bridge.
        let mut edges = Vec::new();
        for base in [0u32, 5] {
            for i in 0..5 {
                for j in i + 1..5 {
                    edges.push((base + i, base + j, 1.0));
                }
            }
        }
        edges.push((4, 5, 0.01));
        let adj = adjacency(10, &edges);
        let found = louvain(&adj, 1.0, None, 7);
        assert_eq!(
            blocks(&found),
            vec![vec![0, 1, 2, 3, 4], vec![5, 6, 7, 8, 9]]
        );
    }

    #[test]
    fn single_clique_is_one_community() {
        let mut edges = Vec::new();
        for i in 0..6u32 {
            for j in i + 1..6 {
                edges.push((i, j, 0.5));
            }
        }
        let adj = adjacency(6, &edges);
        let found = louvain(&adj, 1.0, None, 1);
        assert_eq!(blocks(&found).len(), 1);
    }

    #[test]
    fn optimal_seed_is_a_fixed_point() {
        let (n, edges) = two_triangles();
        let adj = adjacency(n, &edges);
        let seed = vec![0, 0, 0, 1, 1, 1];
        for rng_seed in [0u64, 1, 99] {
            let found = louvain(&adj, 1.0, Some(&seed), rng_seed);
            assert_eq!(found, seed, "no improving move may exist from the optimum");
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let n = 40;
        let mut edges = Vec::new();
        for i in 0..n as u32 {
            for j in i + 1..n as u32 {
                if rng.gen_bool(0.15) {
                    edges.push((i, j, rng.gen_range(0.05..1.0)));
                }
            }
        }
        let adj = adjacency(n, &edges);
        let a = louvain(&adj, 1.5, None, 5);
        let b = louvain(&adj, 1.5, None, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn empty_and_edgeless_graphs() {
        assert!(louvain(&[], 1.0, None, 0).is_empty());
        let adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); 3];
        assert_eq!(louvain(&adj, 1.0, None, 0), vec![0, 1, 2]);
    }

    #[test]
    fn higher_resolution_splits_weakly_joined_cliques() {
        // Two triangles with a strong bridge merge at low resolution but
        // split at high resolution.
        let (n, mut edges) = two_triangles();
        for e in &mut edges {
            if e.2 < 1.0 {
                e.2 = 0.9;
            }
        }
        let adj = adjacency(n, &edges);
        let merged = louvain(&adj, 0.2, None, 3);
        let split = louvain(&adj, 2.5, None, 3);
        assert!(blocks(&merged).len() <= blocks(&split).len());
    }
}
