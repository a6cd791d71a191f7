//! Synthetic interaction datasets with planted coordinated groups and known
//! ground truth.
//!
//! Background users retweet tweets whose popularity follows a Zipf law; each
//! planted group shares a private pool of tweets that every member retweets
//! independently with a fixed probability, on top of ordinary background
//! behavior. Generation is single-threaded and byte-deterministic for a
//! fixed seed.

use std::collections::BTreeSet;
use std::io::Write;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Poisson, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::InteractionRecord;

/// One planted group: `size` members sharing a pool of `pool_size` tweets,
/// each member retweeting each pool tweet with probability `coretweet_prob`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    pub size: usize,
    pub pool_size: usize,
    pub coretweet_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_background_users: usize,
    /// Number of distinct background tweets available for retweeting.
    pub n_tweets: usize,
    /// Zipf exponent of the tweet popularity distribution.
    pub popularity_exponent: f64,
    pub groups: Vec<GroupSpec>,
    /// Mean of the per-user Poisson background retweet count.
    pub retweets_per_user: f64,
    /// Probability that a background retweet targets a random pool tweet
    /// instead of a background tweet.
    pub contamination: f64,
    pub rng_seed: u64,
}

impl SynthConfig {
    /// A plain background-plus-groups setup with no contamination.
    pub fn new(n_background_users: usize, n_tweets: usize, rng_seed: u64) -> Self {
        SynthConfig {
            n_background_users,
            n_tweets,
            popularity_exponent: 1.2,
            groups: Vec::new(),
            retweets_per_user: 8.0,
            contamination: 0.0,
            rng_seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Config(msg));
        if self.n_background_users == 0 {
            return err("n_background_users must be positive".into());
        }
        if self.n_background_users > 10_000_000 {
            return err("n_background_users exceeds the u-id budget of 10^7".into());
        }
        if self.n_tweets == 0 {
            return err("n_tweets must be positive".into());
        }
        if self.n_tweets > 1_000_000 {
            return err("n_tweets exceeds the t-id budget of 10^6".into());
        }
        if !(self.popularity_exponent > 0.0) {
            return err(format!(
                "popularity_exponent must be positive, got {}",
                self.popularity_exponent
            ));
        }
        if !(self.retweets_per_user > 0.0) {
            return err(format!(
                "retweets_per_user must be positive, got {}",
                self.retweets_per_user
            ));
        }
        if !(0.0..=1.0).contains(&self.contamination) {
            return err(format!("contamination must lie in [0,1], got {}", self.contamination));
        }
        if self.groups.len() > 100 {
            return err("at most 100 groups fit the g-id budget".into());
        }
        for (k, group) in self.groups.iter().enumerate() {
            if group.size == 0 || group.pool_size == 0 {
                return err(format!("group {k} needs positive size and pool_size"));
            }
            if group.size > 1000 || group.pool_size > 1000 {
                return err(format!("group {k} exceeds the per-group id budget of 10^3"));
            }
            if !(0.0..=1.0).contains(&group.coretweet_prob) {
                return err(format!(
                    "group {k} coretweet_prob must lie in [0,1], got {}",
                    group.coretweet_prob
                ));
            }
        }
        Ok(())
    }
}

/// The planted groups: member sets (disjoint by construction) and each
/// group's co-retweet probability.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub group_members: Vec<BTreeSet<String>>,
    pub group_strengths: Vec<f64>,
}

const EPOCH: i64 = 1_575_331_200;

fn background_user(i: usize) -> String {
    format!("u{i:07}")
}

fn group_member(k: usize, i: usize) -> String {
    format!("g{k:02}m{i:03}")
}

fn background_tweet(j: u64) -> String {
    format!("t{j:06}")
}

fn pool_tweet(k: usize, j: usize) -> String {
    format!("g{k:02}p{j:03}")
}

/// Generates the dataset. Records come out in a canonical order — all
/// original tweets first (background, then pools), then every user's
/// retweets with background users before group members — with sequential
/// record ids and timestamps.
pub fn generate(config: &SynthConfig) -> Result<(Vec<InteractionRecord>, GroundTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let zipf = Zipf::new(config.n_tweets as u64, config.popularity_exponent)
        .map_err(|e| Error::Config(format!("bad Zipf parameters: {e}")))?;
    let poisson = Poisson::new(config.retweets_per_user)
        .map_err(|e| Error::Config(format!("bad Poisson mean: {e}")))?;

    let all_pool_tweets: Vec<(String, String)> = config
        .groups
        .iter()
        .enumerate()
        .flat_map(|(k, group)| {
            (0..group.pool_size).map(move |j| (pool_tweet(k, j), group_member(k, 0)))
        })
        .collect();

    struct Emitter {
        records: Vec<InteractionRecord>,
        counter: u64,
    }

    impl Emitter {
        fn push(
            &mut self,
            user: String,
            text: String,
            hashtags: Vec<String>,
            retweet: Option<(String, String)>,
        ) {
            let (retweeted_tweet_id, retweeted_user_id) = match retweet {
                Some((t, u)) => (Some(t), Some(u)),
                None => (None, None),
            };
            self.records.push(InteractionRecord {
                tweet_id: format!("r{:09}", self.counter),
                user_id: user,
                timestamp: EPOCH + self.counter as i64,
                text,
                hashtags,
                retweeted_tweet_id,
                retweeted_user_id,
            });
            self.counter += 1;
        }
    }

    let mut emit = Emitter { records: Vec::new(), counter: 0 };

    // Original background tweets, each by a random background author.
    let mut background_authors = Vec::with_capacity(config.n_tweets);
    for j in 0..config.n_tweets as u64 {
        let author = background_user(rng.gen_range(0..config.n_background_users));
        background_authors.push(author.clone());
        emit.push(
            author,
            format!("post {j} about #topic{}", j % 20),
            vec![format!("topic{}", j % 20)],
            None,
        );
    }
    // Original pool tweets, authored by each group's first member.
    for (k, group) in config.groups.iter().enumerate() {
        for j in 0..group.pool_size {
            emit.push(
                group_member(k, 0),
                format!("rally {k}-{j} behind #cause{k} #election"),
                vec![format!("cause{k}"), "election".to_string()],
                None,
            );
        }
    }

    // One user's background retweets: Zipf-ranked tweets, or a random pool
    // tweet when contaminating.
    fn background_retweets(
        emit: &mut Emitter,
        user: &str,
        rng: &mut ChaCha8Rng,
        config: &SynthConfig,
        zipf: &Zipf<f64>,
        poisson: &Poisson<f64>,
        background_authors: &[String],
        all_pool_tweets: &[(String, String)],
    ) {
        let n = rng.sample(poisson) as u64;
        for _ in 0..n {
            let contaminate = config.contamination > 0.0
                && !all_pool_tweets.is_empty()
                && rng.gen_bool(config.contamination);
            if contaminate {
                let (tweet, author) =
                    all_pool_tweets[rng.gen_range(0..all_pool_tweets.len())].clone();
                let k: usize = tweet[1..3].parse().unwrap();
                emit.push(
                    user.to_string(),
                    format!("rt rally behind #cause{k} #election"),
                    vec![format!("cause{k}"), "election".to_string()],
                    Some((tweet, author)),
                );
            } else {
                let rank = rng.sample(zipf) as u64 - 1;
                emit.push(
                    user.to_string(),
                    format!("rt post {rank} about #topic{}", rank % 20),
                    vec![format!("topic{}", rank % 20)],
                    Some((
                        background_tweet(rank),
                        background_authors[rank as usize].clone(),
                    )),
                );
            }
        }
    }

    for i in 0..config.n_background_users {
        let user = background_user(i);
        background_retweets(
            &mut emit,
            &user,
            &mut rng,
            config,
            &zipf,
            &poisson,
            &background_authors,
            &all_pool_tweets,
        );
    }

    let mut group_members = Vec::new();
    for (k, group) in config.groups.iter().enumerate() {
        let mut members = BTreeSet::new();
        for i in 0..group.size {
            let member = group_member(k, i);
            members.insert(member.clone());
            background_retweets(
                &mut emit,
                &member,
                &mut rng,
                config,
                &zipf,
                &poisson,
                &background_authors,
                &all_pool_tweets,
            );
            for j in 0..group.pool_size {
                if rng.gen_bool(group.coretweet_prob) {
                    emit.push(
                        member.clone(),
                        format!("rt rally {k}-{j} behind #cause{k} #election"),
                        vec![format!("cause{k}"), "election".to_string()],
                        Some((pool_tweet(k, j), group_member(k, 0))),
                    );
                }
            }
        }
        group_members.push(members);
    }
    let records = emit.records;

    let truth = GroundTruth {
        group_members,
        group_strengths: config.groups.iter().map(|g| g.coretweet_prob).collect(),
    };
    Ok((records, truth))
}

/// Writes records as line-delimited JSON in the ingest format.
pub fn write_records_jsonl<W: Write>(records: &[InteractionRecord], mut out: W) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)
            .map_err(|e| Error::Format(format!("record serialization: {e}")))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct GroundTruthLine {
    group: usize,
    members: Vec<String>,
}

/// Writes ground truth as line-delimited JSON: `{"group": k, "members": [...]}`.
pub fn write_groundtruth_jsonl<W: Write>(truth: &GroundTruth, mut out: W) -> Result<()> {
    for (group, members) in truth.group_members.iter().enumerate() {
        let line = GroundTruthLine {
            group,
            members: members.iter().cloned().collect(),
        };
        serde_json::to_writer(&mut out, &line)
            .map_err(|e| Error::Format(format!("ground-truth serialization: {e}")))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
