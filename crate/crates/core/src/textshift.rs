//! Corpus comparison for coordinated communities: TF-IDF hashtag clouds and
//! Shannon-entropy word shifts between a coordinated core and the full
//! membership.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::InteractionRecord;

/// Token probabilities of one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusDistribution {
    token_probs: BTreeMap<String, f64>,
    total_tokens: u64,
}

impl CorpusDistribution {
    pub fn probability(&self, token: &str) -> Option<f64> {
        self.token_probs.get(token).copied()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn tokens(&self) -> impl Iterator<Item = (&str, f64)> {
        self.token_probs.iter().map(|(t, &p)| (t.as_str(), p))
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.token_probs.values().map(|&p| -p * p.log2()).sum()
    }
}

/// One token's signed contribution to the entropy shift; positive values
/// characterize the comparison corpus, negative the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftResult {
    /// `(token, contribution)` ranked by |contribution| descending, ties by
    /// token; truncated to the requested length.
    pub entries: Vec<(String, f64)>,
    /// H(comparison) − H(reference), over the full distributions.
    pub total_shift: f64,
}

/// Splits on Unicode whitespace, lowercases, strips URLs and @-mentions,
/// removes a leading '#', and drops stopwords.
pub fn tokenize(text: &str, stopwords: &BTreeSet<String>) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let token = raw.to_lowercase();
            if token.starts_with('@')
                || token.starts_with("http://")
                || token.starts_with("https://")
                || token.starts_with("www.")
            {
                return None;
            }
            let token = token.strip_prefix('#').map(str::to_string).unwrap_or(token);
            if token.is_empty() || stopwords.contains(&token) {
                return None;
            }
            Some(token)
        })
        .collect()
}

/// Token distribution of all text written by the given users.
pub fn build_corpus(
    records: &[InteractionRecord],
    users: &BTreeSet<String>,
    stopwords: &BTreeSet<String>,
) -> Result<CorpusDistribution> {
    let counts: BTreeMap<String, u64> = records
        .par_iter()
        .filter(|r| users.contains(&r.user_id))
        .fold(BTreeMap::<String, u64>::new, |mut counts, record| {
            for token in tokenize(&record.text, stopwords) {
                *counts.entry(token).or_insert(0) += 1;
            }
            counts
        })
        .reduce(BTreeMap::new, |mut left, right| {
            for (token, n) in right {
                *left.entry(token).or_insert(0) += n;
            }
            left
        });
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(CorpusDistribution {
        token_probs: counts
            .into_iter()
            .map(|(t, n)| (t, n as f64 / total as f64))
            .collect(),
        total_tokens: total,
    })
}

fn entropy_term(p: Option<f64>) -> f64 {
    match p {
        Some(p) if p > 0.0 => -p * p.log2(),
        _ => 0.0,
    }
}

/// Per-token entropy contributions of the comparison corpus against the
/// reference: δ_w = (−p²log₂p²) − (−p¹log₂p¹), with absent tokens
/// contributing 0 on their side.
pub fn word_shift(
    reference: &CorpusDistribution,
    comparison: &CorpusDistribution,
    top_k: usize,
) -> ShiftResult {
    let vocabulary: BTreeSet<&str> = reference
        .token_probs
        .keys()
        .chain(comparison.token_probs.keys())
        .map(String::as_str)
        .collect();
    let mut entries: Vec<(String, f64)> = vocabulary
        .into_iter()
        .map(|token| {
            let delta = entropy_term(comparison.probability(token))
                - entropy_term(reference.probability(token));
            (token.to_string(), delta)
        })
        .collect();
    let total_shift = comparison.entropy() - reference.entropy();
    entries.sort_by(|a, b| {
        b.1.abs()
            .total_cmp(&a.1.abs())
            .then_with(|| a.0.cmp(&b.0))
    });
    entries.truncate(top_k);
    ShiftResult { entries, total_shift }
}

/// TF-IDF hashtag cloud of every community: tf counts hashtag uses by the
/// community's members, idf = ln(C / cf) over the given communities.
/// Hashtags with non-positive weight (used by every community) are excluded;
/// entries rank by weight descending, ties by hashtag, truncated to `top_k`.
pub fn community_hashtag_clouds(
    records: &[InteractionRecord],
    communities: &BTreeMap<u32, BTreeSet<String>>,
    top_k: usize,
) -> BTreeMap<u32, Vec<(String, f64)>> {
    let c = communities.len();
    // tf per community.
    let tf: BTreeMap<u32, BTreeMap<&str, u64>> = communities
        .par_iter()
        .map(|(&cid, members)| {
            let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
            for record in records.iter().filter(|r| members.contains(&r.user_id)) {
                for tag in &record.hashtags {
                    *counts.entry(tag.as_str()).or_insert(0) += 1;
                }
            }
            (cid, counts)
        })
        .collect();
    // cf: number of communities using each hashtag.
    let mut cf: BTreeMap<&str, u32> = BTreeMap::new();
    for counts in tf.values() {
        for &tag in counts.keys() {
            *cf.entry(tag).or_insert(0) += 1;
        }
    }
    tf.iter()
        .map(|(&cid, counts)| {
            let mut cloud: Vec<(String, f64)> = counts
                .iter()
                .filter_map(|(&tag, &count)| {
                    let idf = (c as f64 / cf[tag] as f64).ln();
                    let weight = count as f64 * idf;
                    (weight > 0.0).then(|| (tag.to_string(), weight))
                })
                .collect();
            cloud.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            cloud.truncate(top_k);
            (cid, cloud)
        })
        .collect()
}

/// Writes `rank,token,contribution` CSV (contributions signed, 6 decimals).
pub fn write_shift_csv<W: Write>(result: &ShiftResult, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(["rank", "token", "contribution"])
        .map_err(crate::graph::csv_error)?;
    for (rank, (token, delta)) in result.entries.iter().enumerate() {
        writer
            .write_record([&(rank + 1).to_string(), token, &format!("{delta:+.6}")])
            .map_err(crate::graph::csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes `rank,hashtag,weight` CSV (weights at 6 decimals).
pub fn write_cloud_csv<W: Write>(cloud: &[(String, f64)], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(["rank", "hashtag", "weight"])
        .map_err(crate::graph::csv_error)?;
    for (rank, (tag, weight)) in cloud.iter().enumerate() {
        writer
            .write_record([&(rank + 1).to_string(), tag, &format!("{weight:.6}")])
            .map_err(crate::graph::csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn no_stopwords() -> BTreeSet<String> {
        BTreeSet::new()
    }

    fn record(user: &str, text: &str, tags: &[&str]) -> InteractionRecord {
        use std::sync::atomic::{AtomicU64, Ordering};
        static NEXT: AtomicU64 = AtomicU64::new(0);
        let n = NEXT.fetch_add(1, Ordering::Relaxed);
        InteractionRecord {
            tweet_id: format!("s{n}"),
            user_id: user.to_string(),
            timestamp: 0,
            text: text.to_string(),
            hashtags: tags.iter().map(|t| t.to_string()).collect(),
            retweeted_tweet_id: None,
            retweeted_user_id: None,
        }
    }

    fn users(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    fn dist(counts: &[(&str, u64)]) -> CorpusDistribution {
        let total: u64 = counts.iter().map(|&(_, n)| n).sum();
        CorpusDistribution {
            token_probs: counts
                .iter()
                .map(|&(t, n)| (t.to_string(), n as f64 / total as f64))
                .collect(),
            total_tokens: total,
        }
    }

    #[test]
    fn tokenizer_rules() {
        assert_eq!(
            tokenize("Vote NOW #GE2019", &no_stopwords()),
            vec!["vote", "now", "ge2019"]
        );
        assert_eq!(
            tokenize("see https://example.org and WWW.site.com @Someone #", &no_stopwords()),
            vec!["see", "and"]
        );
        let stop: BTreeSet<String> = ["the".to_string(), "and".to_string()].into();
        assert_eq!(tokenize("The cat AND the hat", &stop), vec!["cat", "hat"]);
        // Hashtag stopwords are matched after '#' stripping.
        assert_eq!(tokenize("#The hat", &stop), vec!["hat"]);
        assert!(tokenize("http://only.example", &no_stopwords()).is_empty());
    }

    #[test]
    fn corpus_probabilities_normalize() {
        let records = vec![
            record("u", "vote vote now", &[]),
            record("v", "ignored text", &[]),
        ];
        let corpus = build_corpus(&records, &users(&["u"]), &no_stopwords()).unwrap();
        assert_eq!(corpus.total_tokens(), 3);
        assert_eq!(corpus.probability("vote"), Some(2.0 / 3.0));
        assert_eq!(corpus.probability("now"), Some(1.0 / 3.0));
        assert_eq!(corpus.probability("ignored"), None);
        let sum: f64 = corpus.tokens().map(|(_, p)| p).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn duplicated_corpus_has_identical_distribution() {
        let one = vec![record("u", "a b b", &[])];
        let twice = vec![record("u", "a b b", &[]), record("u", "a b b", &[])];
        let c1 = build_corpus(&one, &users(&["u"]), &no_stopwords()).unwrap();
        let c2 = build_corpus(&twice, &users(&["u"]), &no_stopwords()).unwrap();
        assert_eq!(c1.token_probs, c2.token_probs);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let records = vec![record("u", "https://url.only", &[])];
        assert!(matches!(
            build_corpus(&records, &users(&["u"]), &no_stopwords()),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            build_corpus(&records, &users(&["nobody"]), &no_stopwords()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn shift_of_identical_corpora_is_zero() {
        let d = dist(&[("a", 2), ("b", 1)]);
        let shift = word_shift(&d, &d, 10);
        assert_eq!(shift.total_shift, 0.0);
        assert!(shift.entries.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn entropy_loss_fixture() {
        // Reference {a,a,b,b} (H = 1 bit) vs comparison {a,a,a,a} (H = 0).
        let reference = dist(&[("a", 2), ("b", 2)]);
        let comparison = dist(&[("a", 4)]);
        let shift = word_shift(&reference, &comparison, 10);
        assert!((shift.total_shift + 1.0).abs() < 1e-12);
        let by_token: BTreeMap<&str, f64> = shift
            .entries
            .iter()
            .map(|(t, v)| (t.as_str(), *v))
            .collect();
        assert!((by_token["a"] + 0.5).abs() < 1e-12);
        assert!((by_token["b"] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn entropy_gain_fixture() {
        // Reference {old} at p=1 (H = 0); comparison splits old/new 50:50.
        let reference = dist(&[("old", 3)]);
        let comparison = dist(&[("old", 2), ("new", 2)]);
        let shift = word_shift(&reference, &comparison, 10);
        assert!((shift.total_shift - 1.0).abs() < 1e-12);
        let by_token: BTreeMap<&str, f64> = shift
            .entries
            .iter()
            .map(|(t, v)| (t.as_str(), *v))
            .collect();
        assert!((by_token["new"] - 0.5).abs() < 1e-12);
        assert!((by_token["old"] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn contributions_conserve_total_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let vocab: Vec<String> = (0..rng.gen_range(2..40))
                .map(|i| format!("w{i}"))
                .collect();
            let sample = |rng: &mut ChaCha8Rng| {
                let counts: Vec<(&str, u64)> = vocab
                    .iter()
                    .filter_map(|t| {
                        let n = rng.gen_range(0..20);
                        (n > 0).then_some((t.as_str(), n))
                    })
                    .collect();
                counts
            };
            let (mut c1, mut c2) = (sample(&mut rng), sample(&mut rng));
            if c1.is_empty() {
                c1.push(("w0", 1));
            }
            if c2.is_empty() {
                c2.push(("w1", 1));
            }
            let (d1, d2) = (dist(&c1), dist(&c2));
            let shift = word_shift(&d1, &d2, usize::MAX);
            let sum: f64 = shift.entries.iter().map(|&(_, v)| v).sum();
            assert!(
                (sum - shift.total_shift).abs() < 1e-9,
                "sum {sum} vs total {}",
                shift.total_shift
            );
        }
    }

    #[test]
    fn ranking_and_truncation() {
        let reference = dist(&[("a", 1), ("b", 1), ("c", 2)]);
        let comparison = dist(&[("a", 2), ("b", 1), ("d", 1)]);
        let shift = word_shift(&reference, &comparison, 2);
        assert_eq!(shift.entries.len(), 2);
        let full = word_shift(&reference, &comparison, usize::MAX);
        for pair in full.entries.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            assert!(
                a.1.abs() > b.1.abs() || (a.1.abs() == b.1.abs() && a.0 < b.0),
                "order violated: {a:?} then {b:?}"
            );
        }
        assert_eq!(shift.entries, full.entries[..2].to_vec());
    }

    #[test]
    fn cloud_weights_and_exclusions() {
        // Seven communities; "unique" appears 10 times in community 0 only;
        // "common" is used by every community.
        let mut records = Vec::new();
        for _ in 0..10 {
            records.push(record("m0", "", &["unique"]));
        }
        for k in 0..7u32 {
            records.push(record(&format!("m{k}"), "", &["common"]));
        }
        let communities: BTreeMap<u32, BTreeSet<String>> = (0..7u32)
            .map(|k| (k, users(&[&format!("m{k}")])))
            .collect();
        let clouds = community_hashtag_clouds(&records, &communities, 10);
        let c0 = &clouds[&0];
        assert_eq!(c0.len(), 1);
        assert_eq!(c0[0].0, "unique");
        assert!((c0[0].1 - 10.0 * 7.0f64.ln()).abs() < 1e-9); // ≈ 19.4591
        // Ubiquitous hashtag excluded everywhere; other communities empty.
        for k in 1..7u32 {
            assert!(clouds[&k].is_empty());
        }
    }

    #[test]
    fn cloud_ties_break_lexicographically() {
        let records = vec![
            record("m0", "", &["zeta"]),
            record("m0", "", &["alpha"]),
            record("m1", "", &["other"]),
        ];
        let communities: BTreeMap<u32, BTreeSet<String>> =
            [(0, users(&["m0"])), (1, users(&["m1"]))].into();
        let clouds = community_hashtag_clouds(&records, &communities, 10);
        let tags: Vec<&str> = clouds[&0].iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(tags, vec!["alpha", "zeta"]);
    }

    #[test]
    fn shift_csv_format() {
        let result = ShiftResult {
            entries: vec![("down".to_string(), -0.25), ("up".to_string(), 0.125)],
            total_shift: -0.125,
        };
        let mut buf = Vec::new();
        write_shift_csv(&result, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "rank,token,contribution\n1,down,-0.250000\n2,up,+0.125000\n"
        );
        let mut buf = Vec::new();
        write_cloud_csv(&[("tag".to_string(), 2.5)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "rank,hashtag,weight\n1,tag,2.500000\n"
        );
    }
}
