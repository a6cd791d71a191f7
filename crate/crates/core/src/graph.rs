//! Weighted undirected user graph shared by every pipeline stage.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::fmt::fmt_sig9;

/// An undirected weighted graph over opaque user identifiers.
///
/// Nodes are stored in ascending identifier order and edges in canonical
/// `(a, b)` order with `a < b`, so every traversal and export is
/// deterministic. Weights must be finite and positive; graphs produced from
/// cosine similarities additionally stay within `(0, 1]`.
#[derive(Debug, Clone)]
pub struct SimilarityGraph {
    nodes: Vec<String>,
    index: HashMap<String, u32>,
    /// Canonical edge list: `(a, b, weight)` with `a < b`, sorted by `(a, b)`.
    edges: Vec<(u32, u32, f64)>,
    /// Per-node adjacency, each list sorted by neighbor index.
    adj: Vec<Vec<(u32, f64)>>,
}

impl SimilarityGraph {
    /// Builds a graph from explicit nodes plus weighted edges. Nodes that
    /// appear only as edge endpoints are added automatically; extra entries in
    /// `nodes` become isolated nodes.
    pub fn new<I, E>(nodes: I, edges: E) -> Result<Self>
    where
        I: IntoIterator<Item = String>,
        E: IntoIterator<Item = (String, String, f64)>,
    {
        let edges: Vec<(String, String, f64)> = edges.into_iter().collect();
        let mut names: BTreeSet<String> = nodes.into_iter().collect();
        for (a, b, _) in &edges {
            names.insert(a.clone());
            names.insert(b.clone());
        }
        let nodes: Vec<String> = names.into_iter().collect();
        let index: HashMap<String, u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();

        let mut canonical: Vec<(u32, u32, f64)> = Vec::with_capacity(edges.len());
        for (a, b, w) in &edges {
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::Graph(format!(
                    "edge ({a}, {b}) has non-positive or non-finite weight {w}"
                )));
            }
            let ia = index[a];
            let ib = index[b];
            if ia == ib {
                return Err(Error::Graph(format!("self-loop on node {a}")));
            }
            canonical.push((ia.min(ib), ia.max(ib), *w));
        }
        canonical.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        if canonical.windows(2).any(|p| (p[0].0, p[0].1) == (p[1].0, p[1].1)) {
            return Err(Error::Graph("duplicate edge".into()));
        }
        Ok(Self::from_canonical(nodes, index, canonical))
    }

    /// Builds a graph from edges alone; the node set is the set of endpoints.
    pub fn from_edges<E>(edges: E) -> Result<Self>
    where
        E: IntoIterator<Item = (String, String, f64)>,
    {
        Self::new(std::iter::empty(), edges)
    }

    fn from_canonical(
        nodes: Vec<String>,
        index: HashMap<String, u32>,
        edges: Vec<(u32, u32, f64)>,
    ) -> Self {
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nodes.len()];
        for &(a, b, w) in &edges {
            adj[a as usize].push((b, w));
            adj[b as usize].push((a, w));
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|&(v, _)| v);
        }
        Self { nodes, index, edges, adj }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node identifiers in ascending order.
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_name(&self, idx: u32) -> &str {
        &self.nodes[idx as usize]
    }

    pub fn node_index(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    /// Canonical edge list `(a, b, weight)` with `a < b`, sorted by `(a, b)`.
    pub fn edges(&self) -> &[(u32, u32, f64)] {
        &self.edges
    }

    /// Neighbors of a node with edge weights, sorted by neighbor index.
    pub fn neighbors(&self, idx: u32) -> &[(u32, f64)] {
        &self.adj[idx as usize]
    }

    pub fn degree(&self, idx: u32) -> usize {
        self.adj[idx as usize].len()
    }

    /// Sum of weights incident to a node.
    pub fn strength(&self, idx: u32) -> f64 {
        self.adj[idx as usize].iter().map(|&(_, w)| w).sum()
    }

    /// The multiset of edge weights in canonical edge order.
    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.iter().map(|&(_, _, w)| w)
    }

    /// Keeps the edges selected by `keep` (called with endpoint indices and
    /// weight); all nodes are retained, including any left isolated.
    pub fn retain_edges<F>(&self, mut keep: F) -> Self
    where
        F: FnMut(u32, u32, f64) -> bool,
    {
        let edges: Vec<(u32, u32, f64)> = self
            .edges
            .iter()
            .copied()
            .filter(|&(a, b, w)| keep(a, b, w))
            .collect();
        Self::from_canonical(self.nodes.clone(), self.index.clone(), edges)
    }

    /// Removes every node of degree zero, renumbering the survivors.
    pub fn drop_isolated(&self) -> Self {
        let keep: Vec<u32> = (0..self.nodes.len() as u32)
            .filter(|&i| !self.adj[i as usize].is_empty())
            .collect();
        self.restrict_to_indices(&keep)
    }

    /// The subgraph induced on `members`; member identifiers absent from the
    /// graph are ignored. All matched members are kept as nodes even if they
    /// have no internal edge.
    pub fn induced_subgraph(&self, members: &BTreeSet<String>) -> Self {
        let keep: Vec<u32> = members.iter().filter_map(|m| self.node_index(m)).collect();
        self.restrict_to_indices(&keep)
    }

    /// `keep` must be sorted ascending and duplicate-free.
    fn restrict_to_indices(&self, keep: &[u32]) -> Self {
        let mut remap: HashMap<u32, u32> = HashMap::with_capacity(keep.len());
        let mut nodes = Vec::with_capacity(keep.len());
        for (new, &old) in keep.iter().enumerate() {
            remap.insert(old, new as u32);
            nodes.push(self.nodes[old as usize].clone());
        }
        let index: HashMap<String, u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        let edges: Vec<(u32, u32, f64)> = self
            .edges
            .iter()
            .filter_map(|&(a, b, w)| match (remap.get(&a), remap.get(&b)) {
                (Some(&na), Some(&nb)) => Some((na, nb, w)),
                _ => None,
            })
            .collect();
        Self::from_canonical(nodes, index, edges)
    }

    /// Connected components; returns one sorted member list per component,
    /// components ordered by their smallest node index.
    pub fn connected_components(&self) -> Vec<Vec<u32>> {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        for start in 0..n as u32 {
            if seen[start as usize] {
                continue;
            }
            let mut stack = vec![start];
            let mut comp = Vec::new();
            seen[start as usize] = true;
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &(u, _) in &self.adj[v as usize] {
                    if !seen[u as usize] {
                        seen[u as usize] = true;
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }

    /// Writes the canonical edge list as header-less CSV
    /// `user_id_a,user_id_b,weight` with weights at nine significant digits,
    /// rows sorted by `(user_id_a, user_id_b)`.
    pub fn write_edge_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut rows: Vec<(&str, &str, f64)> = self
            .edges
            .iter()
            .map(|&(a, b, w)| {
                let (na, nb) = (self.node_name(a), self.node_name(b));
                if na <= nb { (na, nb, w) } else { (nb, na, w) }
            })
            .collect();
        // Node indices are in identifier order, so this is already sorted;
        // sort again defensively in case identifiers compare differently.
        rows.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for (a, b, w) in rows {
            wtr.write_record([a, b, fmt_sig9(w).as_str()])
                .map_err(csv_error)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a header-less `user_id_a,user_id_b,weight` CSV edge list.
    pub fn read_edge_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(input);
        let mut edges = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(csv_error)?;
            if row.len() != 3 {
                return Err(Error::Format(format!(
                    "edge row has {} fields, expected 3",
                    row.len()
                )));
            }
            let w: f64 = row[2]
                .parse()
                .map_err(|_| Error::Format(format!("bad edge weight {:?}", &row[2])))?;
            edges.push((row[0].to_string(), row[1].to_string(), w));
        }
        Self::from_edges(edges)
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("csv error: {other:?}")),
    }
}
