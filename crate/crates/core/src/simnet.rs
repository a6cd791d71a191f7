//! TF-IDF user vectors over co-retweeted content and the cosine-similarity
//! network built from them.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::Result;
use crate::graph::SimilarityGraph;
use crate::ingest::{InteractionRecord, Population};

/// A sparse TF-IDF vector describing which tweets a user retweeted.
///
/// Components map retweeted tweet ids to `tf * idf` weights; zero components
/// are never stored. The Euclidean norm is precomputed.
#[derive(Debug, Clone)]
pub struct UserVector {
    user_id: String,
    components: BTreeMap<String, f64>,
    norm: f64,
}

impl UserVector {
    /// Builds a vector, dropping non-positive components.
    pub fn new(user_id: String, components: BTreeMap<String, f64>) -> Self {
        let components: BTreeMap<String, f64> =
            components.into_iter().filter(|&(_, w)| w > 0.0).collect();
        let norm = components.values().map(|w| w * w).sum::<f64>().sqrt();
        UserVector { user_id, components, norm }
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn components(&self) -> &BTreeMap<String, f64> {
        &self.components
    }

    pub fn get(&self, tweet_id: &str) -> Option<f64> {
        self.components.get(tweet_id).copied()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }
}

/// Builds one TF-IDF vector per population member from retweet events.
///
/// `tf(u, t)` counts the retweet events of tweet `t` by user `u`;
/// `idf(t) = ln(N / df(t))` with `N` the population size and `df(t)` the
/// number of population members who retweeted `t` (no smoothing). Tweets
/// retweeted by the whole population get `idf = 0` and are dropped. Members
/// with no retweets keep an empty vector. Vectors come back in population
/// (ascending user id) order.
pub fn build_user_vectors(
    records: &[InteractionRecord],
    population: &Population,
) -> Vec<UserVector> {
    let member_index: HashMap<&str, usize> = population
        .user_ids()
        .iter()
        .enumerate()
        .map(|(i, u)| (u.as_str(), i))
        .collect();
    let n_members = population.len();

    let mut tf: Vec<HashMap<&str, u64>> = vec![HashMap::new(); n_members];
    for rec in records {
        let Some(tweet) = rec.retweeted_tweet_id.as_deref() else { continue };
        let Some(&idx) = member_index.get(rec.user_id.as_str()) else { continue };
        *tf[idx].entry(tweet).or_insert(0) += 1;
    }

    let mut df: HashMap<&str, u64> = HashMap::new();
    for counts in &tf {
        for &tweet in counts.keys() {
            *df.entry(tweet).or_insert(0) += 1;
        }
    }

    let n = n_members as f64;
    population
        .user_ids()
        .iter()
        .enumerate()
        .map(|(idx, user)| {
            let components: BTreeMap<String, f64> = tf[idx]
                .iter()
                .map(|(&tweet, &count)| {
                    let idf = (n / df[tweet] as f64).ln();
                    (tweet.to_string(), count as f64 * idf)
                })
                .collect();
            UserVector::new(user.clone(), components)
        })
        .collect()
}

/// Cosine similarity of two sparse vectors; `0.0` when either is a zero
/// vector. Exactly symmetric in its arguments.
pub fn cosine_similarity(a: &UserVector, b: &UserVector) -> f64 {
    if a.norm == 0.0 || b.norm == 0.0 {
        return 0.0;
    }
    let dot = sparse_dot(&a.components, &b.components);
    dot / (a.norm * b.norm)
}

/// Dot product by ordered merge join; term order depends only on the key
/// order, so the result is bitwise independent of argument order.
fn sparse_dot(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let mut ia = a.iter().peekable();
    let mut ib = b.iter().peekable();
    let mut dot = 0.0;
    while let (Some(&(ka, &va)), Some(&(kb, &vb))) = (ia.peek(), ib.peek()) {
        match ka.cmp(kb) {
            std::cmp::Ordering::Less => {
                ia.next();
            }
            std::cmp::Ordering::Greater => {
                ib.next();
            }
            std::cmp::Ordering::Equal => {
                dot += va * vb;
                ia.next();
                ib.next();
            }
        }
    }
    dot
}

/// Builds the user-similarity network: nodes are all vector owners (users
/// with empty vectors stay as isolated nodes) and an edge joins every pair
/// with positive cosine similarity.
///
/// Construction goes through an inverted index from tweet id to the users
/// weighting it, accumulating pair dot products in deterministic tweet order,
/// parallelized over the lower-index endpoint. The result is independent of
/// thread count and of the input ordering of `vectors`, and matches the dense
/// all-pairs computation within 1e-9.
pub fn build_similarity_graph(vectors: &[UserVector]) -> Result<SimilarityGraph> {
    // Canonical user order regardless of caller ordering.
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    order.sort_unstable_by(|&i, &j| vectors[i].user_id.cmp(&vectors[j].user_id));
    if order
        .windows(2)
        .any(|p| vectors[p[0]].user_id == vectors[p[1]].user_id)
    {
        return Err(crate::error::Error::Graph("duplicate user id among vectors".into()));
    }
    let sorted: Vec<&UserVector> = order.iter().map(|&i| &vectors[i]).collect();

    // Inverted index: tweet id -> (user position, component weight), user
    // positions ascending because we insert in sorted user order.
    let mut postings: HashMap<&str, Vec<(u32, f64)>> = HashMap::new();
    for (pos, vec) in sorted.iter().enumerate() {
        for (tweet, &w) in &vec.components {
            postings.entry(tweet.as_str()).or_default().push((pos as u32, w));
        }
    }

    let edges: Vec<Vec<(u32, u32, f64)>> = (0..sorted.len())
        .into_par_iter()
        .map(|u| {
            let vu = sorted[u];
            // Accumulate dot products against every higher-index user in
            // ascending tweet order (BTreeMap iteration), which pins the
            // floating-point summation order.
            let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
            for (tweet, &wu) in &vu.components {
                let post = &postings[tweet.as_str()];
                let start = post.partition_point(|&(v, _)| v <= u as u32);
                for &(v, wv) in &post[start..] {
                    *acc.entry(v).or_insert(0.0) += wu * wv;
                }
            }
            acc.into_iter()
                .filter(|&(_, dot)| dot > 0.0)
                .map(|(v, dot)| {
                    let w = dot / (vu.norm * sorted[v as usize].norm);
                    (u as u32, v, w.min(1.0))
                })
                .collect()
        })
        .collect();

    let nodes: Vec<String> = sorted.iter().map(|v| v.user_id.clone()).collect();
    let edge_list: Vec<(String, String, f64)> = edges
        .into_iter()
        .flatten()
        .map(|(u, v, w)| (nodes[u as usize].clone(), nodes[v as usize].clone(), w))
        .collect();
    SimilarityGraph::new(nodes, edge_list)
}
