//! Hashtag polarity by valence propagation from seed hashtags, and per-user
//! leaning as the term-frequency-weighted mean of scored hashtags.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::InteractionRecord;

/// Seed hashtags with known polarity (−1, 0, or +1).
#[derive(Debug, Clone, Default)]
pub struct SeedSet {
    seeds: BTreeMap<String, i8>,
}

impl SeedSet {
    /// Builds a seed set, normalizing hashtags to lowercase. Rejects empty
    /// or '#'-prefixed hashtags, polarities outside {−1, 0, +1}, and
    /// duplicates.
    pub fn new<I: IntoIterator<Item = (String, i8)>>(seeds: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (tag, polarity) in seeds {
            let tag = tag.to_lowercase();
            if tag.is_empty() || tag.starts_with('#') || tag.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("invalid seed hashtag {tag:?}")));
            }
            if !(-1..=1).contains(&polarity) {
                return Err(Error::Config(format!(
                    "seed polarity for {tag:?} must be -1, 0, or 1, got {polarity}"
                )));
            }
            if map.insert(tag.clone(), polarity).is_some() {
                return Err(Error::Config(format!("duplicate seed hashtag {tag:?}")));
            }
        }
        Ok(SeedSet { seeds: map })
    }

    /// Loads a header-less `hashtag,polarity` CSV.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(input);
        let mut pairs = Vec::new();
        for row in reader.records() {
            let row = row.map_err(crate::graph::csv_error)?;
            if row.len() != 2 {
                return Err(Error::Format(format!(
                    "seed rows need 2 fields, got {}",
                    row.len()
                )));
            }
            let polarity: i8 = row[1]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad seed polarity {:?}", &row[1])))?;
            pairs.push((row[0].to_string(), polarity));
        }
        SeedSet::new(pairs)
    }

    pub fn polarity(&self, hashtag: &str) -> Option<i8> {
        self.seeds.get(hashtag).copied()
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i8)> {
        self.seeds.iter().map(|(t, &p)| (t.as_str(), p))
    }
}

/// Hashtag → valence in [−1, +1]; seeds always carry their exact polarity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValenceTable {
    values: BTreeMap<String, f64>,
}

impl ValenceTable {
    pub fn get(&self, hashtag: &str) -> Option<f64> {
        self.values.get(hashtag).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(t, &v)| (t.as_str(), v))
    }

    /// Writes `hashtag,valence` CSV with a header, hashtags sorted.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer
            .write_record(["hashtag", "valence"])
            .map_err(crate::graph::csv_error)?;
        for (tag, v) in &self.values {
            writer
                .write_record([tag.as_str(), &format!("{v:.6}")])
                .map_err(crate::graph::csv_error)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Record-level co-occurrence counts: `co[h][g]` is the number of records
/// whose hashtag list contains both `h` and `g` (h ≠ g; duplicates within a
/// record count once).
fn cooccurrences(records: &[InteractionRecord]) -> BTreeMap<&str, BTreeMap<&str, u32>> {
    records
        .par_iter()
        .fold(
            BTreeMap::<&str, BTreeMap<&str, u32>>::new,
            |mut co, record| {
                let distinct: BTreeSet<&str> =
                    record.hashtags.iter().map(String::as_str).collect();
                let tags: Vec<&str> = distinct.into_iter().collect();
                for (i, &a) in tags.iter().enumerate() {
                    for &b in &tags[i + 1..] {
                        *co.entry(a).or_default().entry(b).or_insert(0) += 1;
                        *co.entry(b).or_default().entry(a).or_insert(0) += 1;
                    }
                }
                co
            },
        )
        .reduce(BTreeMap::new, |mut left, right| {
            for (tag, neighbors) in right {
                let entry = left.entry(tag).or_default();
                for (other, count) in neighbors {
                    *entry.entry(other).or_insert(0) += count;
                }
            }
            left
        })
}

/// Propagates polarity from the seeds through hashtag co-occurrences.
///
/// Round 1 scores each hashtag as the co-occurrence-weighted mean of the
/// seed polarities it co-occurs with; later rounds repeat with every scored
/// hashtag acting as a soft seed at its previous-round valence. Seeds are
/// pinned to their exact polarity in every round, and hashtags with no
/// co-occurrence against the current seed set stay unscored.
pub fn hashtag_valence(
    records: &[InteractionRecord],
    seeds: &SeedSet,
    rounds: u32,
) -> Result<ValenceTable> {
    if seeds.is_empty() {
        return Err(Error::Config("the seed set must not be empty".into()));
    }
    if rounds == 0 {
        return Err(Error::Config("valence propagation needs at least 1 round".into()));
    }
    let co = cooccurrences(records);

    // Round 1 sources: the seeds at their hard polarity.
    let mut sources: BTreeMap<&str, f64> = seeds
        .iter()
        .map(|(tag, polarity)| (tag, polarity as f64))
        .collect();
    let mut values: BTreeMap<&str, f64> = BTreeMap::new();
    for _ in 0..rounds {
        let mut next: BTreeMap<&str, f64> = BTreeMap::new();
        for (&tag, neighbors) in &co {
            let mut weighted = 0.0;
            let mut total = 0u64;
            for (&other, &count) in neighbors {
                if let Some(&valence) = sources.get(other) {
                    weighted += count as f64 * valence;
                    total += count as u64;
                }
            }
            if total > 0 {
                next.insert(tag, weighted / total as f64);
            }
        }
        // Pin the seeds, present whether or not they appear in any record.
        for (tag, polarity) in seeds.iter() {
            next.insert(tag, polarity as f64);
        }
        values = next;
        sources = values.clone();
    }
    Ok(ValenceTable {
        values: values
            .into_iter()
            .map(|(t, v)| (t.to_string(), v))
            .collect(),
    })
}

/// Term-frequency-weighted mean valence of the hashtags `user_id` used;
/// `None` when the user used no scored hashtag. Term frequency counts every
/// hashtag occurrence across the user's records.
pub fn user_polarity(
    records: &[InteractionRecord],
    user_id: &str,
    valences: &ValenceTable,
) -> Option<f64> {
    let mut weighted = 0.0;
    let mut total = 0u64;
    // Per-user tf in sorted hashtag order for a deterministic float sum.
    let mut tf: BTreeMap<&str, u64> = BTreeMap::new();
    for record in records.iter().filter(|r| r.user_id == user_id) {
        for tag in &record.hashtags {
            *tf.entry(tag).or_insert(0) += 1;
        }
    }
    for (tag, count) in tf {
        if let Some(valence) = valences.get(tag) {
            weighted += count as f64 * valence;
            total += count;
        }
    }
    (total > 0).then(|| weighted / total as f64)
}

/// Polarity of every user with at least one scored hashtag.
pub fn user_polarities(
    records: &[InteractionRecord],
    valences: &ValenceTable,
) -> BTreeMap<String, f64> {
    let mut tf: BTreeMap<&str, BTreeMap<&str, u64>> = BTreeMap::new();
    for record in records {
        let user = tf.entry(record.user_id.as_str()).or_default();
        for tag in &record.hashtags {
            *user.entry(tag).or_insert(0) += 1;
        }
    }
    tf.into_iter()
        .filter_map(|(user, counts)| {
            let mut weighted = 0.0;
            let mut total = 0u64;
            for (tag, count) in counts {
                if let Some(valence) = valences.get(tag) {
                    weighted += count as f64 * valence;
                    total += count;
                }
            }
            (total > 0).then(|| (user.to_string(), weighted / total as f64))
        })
        .collect()
}

/// Writes `user_id,polarity` CSV with a header, users sorted.
pub fn write_user_polarity_csv<W: Write>(
    polarities: &BTreeMap<String, f64>,
    out: W,
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(["user_id", "polarity"])
        .map_err(crate::graph::csv_error)?;
    for (user, v) in polarities {
        writer
            .write_record([user.as_str(), &format!("{v:.6}")])
            .map_err(crate::graph::csv_error)?;
    }
    writer.flush()?;
    Ok(())
}
