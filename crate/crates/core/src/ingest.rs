//! Ingestion of interaction records, population selection, and annotation
//! tables.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::csv_error;

/// One interaction event, parsed from a line-delimited JSON stream.
///
/// `retweeted_tweet_id` and `retweeted_user_id` are either both present
/// (a retweet) or both absent (an original tweet).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub tweet_id: String,
    pub user_id: String,
    pub timestamp: i64,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweeted_tweet_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweeted_user_id: Option<String>,
}

impl InteractionRecord {
    pub fn is_retweet(&self) -> bool {
        self.retweeted_tweet_id.is_some()
    }

    /// Normalizes hashtags to lowercase and checks the record invariants.
    fn validate(&mut self) -> std::result::Result<(), String> {
        if self.tweet_id.is_empty() {
            return Err("empty tweet_id".into());
        }
        if self.user_id.is_empty() {
            return Err("empty user_id".into());
        }
        match (&self.retweeted_tweet_id, &self.retweeted_user_id) {
            (Some(t), Some(u)) => {
                if t.is_empty() || u.is_empty() {
                    return Err("empty retweet reference".into());
                }
            }
            (None, None) => {}
            _ => return Err("retweeted_tweet_id and retweeted_user_id must come together".into()),
        }
        for tag in &mut self.hashtags {
            *tag = tag.to_lowercase();
            if tag.is_empty() {
                return Err("empty hashtag".into());
            }
            if tag.starts_with('#') {
                return Err(format!("hashtag {tag:?} carries a leading '#'"));
            }
            if tag.chars().any(char::is_whitespace) {
                return Err(format!("hashtag {tag:?} contains whitespace"));
            }
        }
        Ok(())
    }
}

/// Result of parsing a record stream: the valid records plus the number of
/// malformed lines that were skipped.
#[derive(Debug)]
pub struct ParsedRecords {
    pub records: Vec<InteractionRecord>,
    pub skipped: usize,
}

/// Parses line-delimited JSON interaction records.
///
/// Malformed lines (bad JSON or invariant violations) are counted and
/// skipped; blank lines are ignored. If more than half of the non-blank
/// lines are malformed the whole stream is rejected as a format error.
pub fn parse_records<R: Read>(input: R) -> Result<ParsedRecords> {
    let reader = BufReader::new(input);
    let mut records = Vec::new();
    let mut skipped = 0usize;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<InteractionRecord>(&line) {
            Ok(mut rec) => {
                if rec.validate().is_ok() {
                    records.push(rec);
                } else {
                    skipped += 1;
                }
            }
            Err(_) => skipped += 1,
        }
    }
    let total = records.len() + skipped;
    if skipped * 2 > total {
        return Err(Error::Format(format!(
            "{skipped} of {total} lines malformed; refusing stream"
        )));
    }
    Ok(ParsedRecords { records, skipped })
}

/// How a population was selected.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectionRule {
    /// Top `fraction` of users ranked by retweet-event count.
    TopRetweeters(f64),
    /// An explicitly supplied user list.
    Explicit,
}

/// The set of users under analysis, kept distinct and in ascending
/// identifier order.
#[derive(Debug, Clone)]
pub struct Population {
    user_ids: Vec<String>,
    selection_rule: SelectionRule,
}

impl Population {
    pub fn explicit<I: IntoIterator<Item = String>>(ids: I) -> Self {
        let mut user_ids: Vec<String> = ids.into_iter().collect();
        user_ids.sort_unstable();
        user_ids.dedup();
        Population { user_ids, selection_rule: SelectionRule::Explicit }
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn len(&self) -> usize {
        self.user_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.user_ids.is_empty()
    }

    pub fn selection_rule(&self) -> &SelectionRule {
        &self.selection_rule
    }

    pub fn contains(&self, user: &str) -> bool {
        self.user_ids.binary_search_by(|u| u.as_str().cmp(user)).is_ok()
    }
}

/// Ceiling of `fraction * count` robust to floating-point noise on exact
/// products (e.g. `0.01 * 100` must give 1, not 2).
fn frac_ceil(fraction: f64, count: usize) -> usize {
    let raw = fraction * count as f64;
    let k = (raw - 1e-9).ceil() as usize;
    k.clamp(1, count)
}

/// Selects the superspreader population: the top `ceil(fraction * U)` users
/// by retweet-event count, where `U` is the number of users with at least
/// one retweet. Ties in the count are broken by ascending user id.
pub fn select_superspreaders(
    records: &[InteractionRecord],
    fraction: f64,
) -> Result<Population> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!(
            "population fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for rec in records {
        if rec.is_retweet() {
            *counts.entry(rec.user_id.as_str()).or_insert(0) += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let k = frac_ceil(fraction, counts.len());
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(k);
    let mut user_ids: Vec<String> = ranked.into_iter().map(|(u, _)| u.to_string()).collect();
    user_ids.sort_unstable();
    Ok(Population { user_ids, selection_rule: SelectionRule::TopRetweeters(fraction) })
}

/// What an annotation table's values mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationKind {
    /// Real-valued score in `[0, 1]` (e.g. an automation likelihood).
    Score,
    /// Boolean flag encoded as `0`/`1` (e.g. account suspension).
    Flag,
}

/// Per-user annotations loaded from a header-less `user_id,value` CSV.
#[derive(Debug, Clone)]
pub struct AnnotationTable {
    kind: AnnotationKind,
    values: BTreeMap<String, f64>,
    /// Lines dropped for unparseable or out-of-domain values.
    pub rejected: usize,
    /// Duplicate user ids seen; the last occurrence wins.
    pub duplicates: usize,
}

impl AnnotationTable {
    pub fn kind(&self) -> AnnotationKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Score lookup; `None` when the user is unannotated.
    pub fn score(&self, user: &str) -> Option<f64> {
        self.values.get(user).copied()
    }

    /// Flag lookup; `None` when the user is unannotated.
    pub fn flagged(&self, user: &str) -> Option<bool> {
        self.values.get(user).map(|&v| v != 0.0)
    }

    #[cfg(test)]
    pub(crate) fn from_pairs(kind: AnnotationKind, pairs: &[(&str, f64)]) -> Self {
        AnnotationTable {
            kind,
            values: pairs.iter().map(|&(u, v)| (u.to_string(), v)).collect(),
            rejected: 0,
            duplicates: 0,
        }
    }
}

/// Loads a header-less `user_id,value` annotation CSV. Scores must lie in
/// `[0, 1]`; flags must be exactly `0` or `1`. Bad lines are rejected and
/// counted; duplicate users keep the last value and are counted as warnings.
pub fn load_annotations<R: Read>(input: R, kind: AnnotationKind) -> Result<AnnotationTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut values: BTreeMap<String, f64> = BTreeMap::new();
    let mut rejected = 0usize;
    let mut duplicates = 0usize;
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        if row.len() != 2 {
            rejected += 1;
            continue;
        }
        let value: f64 = match row[1].trim().parse() {
            Ok(v) => v,
            Err(_) => {
                rejected += 1;
                continue;
            }
        };
        let ok = match kind {
            AnnotationKind::Score => (0.0..=1.0).contains(&value),
            AnnotationKind::Flag => value == 0.0 || value == 1.0,
        };
        if !ok {
            rejected += 1;
            continue;
        }
        if values.insert(row[0].to_string(), value).is_some() {
            duplicates += 1;
        }
    }
    Ok(AnnotationTable { kind, values, rejected, duplicates })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn retweet_line(user: &str, tweet: &str) -> String {
        format!(
            r#"{{"tweet_id": "rt-{user}-{tweet}", "user_id": "{user}", "timestamp": 1575331200, "text": "rt", "hashtags": ["ge2019"], "retweeted_tweet_id": "{tweet}", "retweeted_user_id": "author"}}"#
        )
    }

    #[test]
    fn parses_single_retweet_record() {
        let line = r#"{"tweet_id": "1", "user_id": "u1", "timestamp": 1575331200, "text": "Vote", "hashtags": ["ge2019"], "retweeted_tweet_id": "9", "retweeted_user_id": "u9"}"#;
        let parsed = parse_records(line.as_bytes()).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.skipped, 0);
        let rec = &parsed.records[0];
        assert!(rec.is_retweet());
        assert_eq!(rec.retweeted_tweet_id.as_deref(), Some("9"));
        assert_eq!(rec.hashtags, vec!["ge2019"]);
    }

    #[test]
    fn empty_input_is_fine() {
        let parsed = parse_records(&b""[..]).unwrap();
        assert!(parsed.records.is_empty());
        assert_eq!(parsed.skipped, 0);
    }

    #[test]
    fn truncated_line_is_skipped_and_counted() {
        let mut lines = vec![
            retweet_line("u1", "t1"),
            retweet_line("u2", "t1"),
            retweet_line("u3", "t2"),
        ];
        lines.push(r#"{"tweet_id": "x", "user_id""#.to_string());
        let input = lines.join("\n");
        let parsed = parse_records(input.as_bytes()).unwrap();
        assert_eq!(parsed.records.len(), 3);
        assert_eq!(parsed.skipped, 1);
    }

    #[test]
    fn mostly_malformed_stream_is_rejected() {
        let input = format!("{}\nnot json\nalso bad\n", retweet_line("u1", "t1"));
        let err = parse_records(input.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn invariant_violations_count_as_malformed() {
        // One-sided retweet reference and a '#'-prefixed hashtag.
        let bad1 = r#"{"tweet_id": "1", "user_id": "u", "timestamp": 0, "text": "", "hashtags": [], "retweeted_tweet_id": "9", "retweeted_user_id": null}"#;
        let bad2 = r##"{"tweet_id": "2", "user_id": "u", "timestamp": 0, "text": "", "hashtags": ["#tag"], "retweeted_tweet_id": null, "retweeted_user_id": null}"##;
        let good = retweet_line("u1", "t1");
        let input = format!("{good}\n{bad1}\n{good}\n{bad2}\n{good}\n");
        let parsed = parse_records(input.as_bytes()).unwrap();
        assert_eq!(parsed.records.len(), 3);
        assert_eq!(parsed.skipped, 2);
    }

    #[test]
    fn hashtags_are_lowercased() {
        let line = r#"{"tweet_id": "1", "user_id": "u", "timestamp": 0, "text": "", "hashtags": ["GE2019"], "retweeted_tweet_id": null, "retweeted_user_id": null}"#;
        let parsed = parse_records(line.as_bytes()).unwrap();
        assert_eq!(parsed.records[0].hashtags, vec!["ge2019"]);
    }

    #[test]
    fn superspreaders_top_one_of_hundred() {
        // 100 users with one retweet each except u042 with two.
        let mut lines: Vec<String> = (0..100)
            .map(|i| retweet_line(&format!("u{i:03}"), "t"))
            .collect();
        lines.push(retweet_line("u042", "t2"));
        let parsed = parse_records(lines.join("\n").as_bytes()).unwrap();
        let pop = select_superspreaders(&parsed.records, 0.01).unwrap();
        assert_eq!(pop.user_ids(), &["u042"]);
        assert_eq!(*pop.selection_rule(), SelectionRule::TopRetweeters(0.01));
    }

    #[test]
    fn ties_break_by_ascending_user_id() {
        // u1..u4 all have exactly one retweet; fraction 0.5 keeps two.
        let lines: Vec<String> = ["u3", "u1", "u4", "u2"]
            .iter()
            .map(|u| retweet_line(u, "t"))
            .collect();
        let parsed = parse_records(lines.join("\n").as_bytes()).unwrap();
        let pop = select_superspreaders(&parsed.records, 0.5).unwrap();
        assert_eq!(pop.user_ids(), &["u1", "u2"]);
    }

    #[test]
    fn selection_ignores_record_order() {
        let mut lines: Vec<String> = Vec::new();
        for i in 0..30 {
            for _ in 0..(i % 7 + 1) {
                lines.push(retweet_line(&format!("u{i:02}"), &format!("t{i}")));
            }
        }
        let parsed_fwd = parse_records(lines.join("\n").as_bytes()).unwrap();
        lines.reverse();
        let parsed_rev = parse_records(lines.join("\n").as_bytes()).unwrap();
        let a = select_superspreaders(&parsed_fwd.records, 0.2).unwrap();
        let b = select_superspreaders(&parsed_rev.records, 0.2).unwrap();
        assert_eq!(a.user_ids(), b.user_ids());
    }

    #[test]
    fn no_retweets_is_an_error() {
        let line = r#"{"tweet_id": "1", "user_id": "u", "timestamp": 0, "text": "hi", "hashtags": [], "retweeted_tweet_id": null, "retweeted_user_id": null}"#;
        let parsed = parse_records(line.as_bytes()).unwrap();
        let err = select_superspreaders(&parsed.records, 0.01).unwrap_err();
        assert!(matches!(err, Error::EmptyPopulation));
    }

    #[test]
    fn bad_fraction_is_config_error() {
        let parsed = parse_records(retweet_line("u", "t").as_bytes()).unwrap();
        assert!(matches!(
            select_superspreaders(&parsed.records, 0.0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            select_superspreaders(&parsed.records, 1.5),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn frac_ceil_is_exact_on_awkward_products() {
        assert_eq!(frac_ceil(0.01, 100), 1);
        assert_eq!(frac_ceil(0.2, 10), 2);
        assert_eq!(frac_ceil(0.15, 10), 2); // ceil(1.5)
        assert_eq!(frac_ceil(1.0, 7), 7);
        assert_eq!(frac_ceil(0.3, 2150), 645);
    }

    #[test]
    fn annotations_score_and_flag() {
        let table = load_annotations(&b"u1,0.7\nu2,0.2\n"[..], AnnotationKind::Score).unwrap();
        assert_eq!(table.score("u1"), Some(0.7));
        assert_eq!(table.score("u3"), None);
        assert_eq!(table.rejected, 0);

        let table = load_annotations(&b"u1,1\nu2,0\n"[..], AnnotationKind::Flag).unwrap();
        assert_eq!(table.flagged("u1"), Some(true));
        assert_eq!(table.flagged("u2"), Some(false));
        assert_eq!(table.flagged("u3"), None);
    }

    #[test]
    fn annotations_reject_and_dedupe() {
        let input = b"u1,0.5\nu1,0.9\nu2,1.5\nu3,abc\n";
        let table = load_annotations(&input[..], AnnotationKind::Score).unwrap();
        assert_eq!(table.score("u1"), Some(0.9)); // last wins
        assert_eq!(table.duplicates, 1);
        assert_eq!(table.rejected, 2);

        let flags = load_annotations(&b"u1,0.5\n"[..], AnnotationKind::Flag).unwrap();
        assert_eq!(flags.len(), 0);
        assert_eq!(flags.rejected, 1);
    }
}
