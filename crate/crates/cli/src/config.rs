//! TOML pipeline configuration with CLI-flag overrides.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub input: InputSection,
    #[serde(default)]
    pub population: PopulationSection,
    #[serde(default)]
    pub backbone: BackboneSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub polarity: PolaritySection,
    #[serde(default)]
    pub shift: ShiftSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub synth: Option<SynthSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    /// Line-delimited JSON interaction records.
    pub records: Option<PathBuf>,
    /// Annotation CSV of scores in [0,1] (e.g. automation scores).
    pub scores: Option<PathBuf>,
    /// Annotation CSV of 0/1 flags (e.g. suspensions).
    pub flags: Option<PathBuf>,
    /// Polarity seed CSV `hashtag,polarity`.
    pub seeds: Option<PathBuf>,
    /// Stopword list, one token per line.
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSection {
    /// Top fraction of retweeters selected as the analysis population.
    #[serde(default = "default_fraction")]
    pub fraction: f64,
}

impl Default for PopulationSection {
    fn default() -> Self {
        PopulationSection { fraction: default_fraction() }
    }
}

fn default_fraction() -> f64 {
    0.01
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackboneSection {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// "either" (default) or "both": which endpoints must find the edge
    /// significant.
    #[serde(default = "default_keep_rule")]
    pub keep_rule: String,
}

impl Default for BackboneSection {
    fn default() -> Self {
        BackboneSection { alpha: default_alpha(), keep_rule: default_keep_rule() }
    }
}

fn default_alpha() -> f64 {
    0.05
}

fn default_keep_rule() -> String {
    "either".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Number of equal threshold steps (ignored when `delta_w` is set).
    pub step_count: Option<u32>,
    /// Explicit threshold increment; mutually exclusive with `step_count`.
    pub delta_w: Option<f64>,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default = "default_min_size")]
    pub min_size: usize,
    /// RNG seed; the `--seed` flag overrides it.
    pub rng_seed: Option<u64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            step_count: None,
            delta_w: None,
            resolution: default_resolution(),
            min_size: default_min_size(),
            rng_seed: None,
        }
    }
}

fn default_resolution() -> f64 {
    1.5
}

fn default_min_size() -> usize {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolaritySection {
    #[serde(default = "default_rounds")]
    pub rounds: u32,
}

impl Default for PolaritySection {
    fn default() -> Self {
        PolaritySection { rounds: default_rounds() }
    }
}

fn default_rounds() -> u32 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSection {
    #[serde(default = "default_top_k")]
    pub top_k: usize,
}

impl Default for ShiftSection {
    fn default() -> Self {
        ShiftSection { top_k: default_top_k() }
    }
}

fn default_top_k() -> usize {
    50
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    /// "local" (average local clustering, default) or "global"
    /// (transitivity).
    #[serde(default = "default_clustering")]
    pub clustering: String,
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection { clustering: default_clustering() }
    }
}

fn default_clustering() -> String {
    "local".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_out_dir() }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub n_background_users: usize,
    pub n_tweets: usize,
    #[serde(default = "default_exponent")]
    pub popularity_exponent: f64,
    #[serde(default = "default_retweets_per_user")]
    pub retweets_per_user: f64,
    #[serde(default)]
    pub contamination: f64,
    #[serde(default)]
    pub groups: Vec<SynthGroup>,
}

fn default_exponent() -> f64 {
    1.2
}

fn default_retweets_per_user() -> f64 {
    8.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthGroup {
    pub size: usize,
    pub pool_size: usize,
    pub coretweet_prob: f64,
}

impl FileConfig {
    /// Loads and validates a TOML config file.
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::input(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::config(format!("bad config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.population.fraction > 0.0 && self.population.fraction <= 1.0) {
            return Err(CliError::config(format!(
                "population.fraction must lie in (0,1], got {}",
                self.population.fraction
            )));
        }
        if !(self.backbone.alpha > 0.0 && self.backbone.alpha < 1.0) {
            return Err(CliError::config(format!(
                "backbone.alpha must lie in (0,1), got {}",
                self.backbone.alpha
            )));
        }
        if !matches!(self.backbone.keep_rule.as_str(), "either" | "both") {
            return Err(CliError::config(format!(
                "backbone.keep_rule must be \"either\" or \"both\", got {:?}",
                self.backbone.keep_rule
            )));
        }
        if self.sweep.step_count.is_some() && self.sweep.delta_w.is_some() {
            return Err(CliError::config(
                "sweep.step_count and sweep.delta_w are mutually exclusive".into(),
            ));
        }
        if let Some(d) = self.sweep.delta_w {
            if !(d > 0.0) {
                return Err(CliError::config(format!(
                    "sweep.delta_w must be positive, got {d}"
                )));
            }
        }
        if self.sweep.step_count == Some(0) {
            return Err(CliError::config("sweep.step_count must be at least 1".into()));
        }
        if !(self.sweep.resolution > 0.0) {
            return Err(CliError::config(format!(
                "sweep.resolution must be positive, got {}",
                self.sweep.resolution
            )));
        }
        if self.polarity.rounds == 0 {
            return Err(CliError::config("polarity.rounds must be at least 1".into()));
        }
        if self.shift.top_k == 0 {
            return Err(CliError::config("shift.top_k must be at least 1".into()));
        }
        if !matches!(self.metrics.clustering.as_str(), "local" | "global") {
            return Err(CliError::config(format!(
                "metrics.clustering must be \"local\" or \"global\", got {:?}",
                self.metrics.clustering
            )));
        }
        if self.input.scores.is_some() && self.input.flags.is_some() {
            return Err(CliError::config(
                "input.scores and input.flags are mutually exclusive".into(),
            ));
        }
        Ok(())
    }
}
