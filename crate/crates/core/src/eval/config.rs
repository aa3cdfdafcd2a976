//! Flat `key = value` pipeline configuration.

use super::EvalError;
use crate::linker::{LinkerMode, DEFAULT_K, DEFAULT_THRESHOLD};
use crate::passage::{DEFAULT_BUDGET_WORDS, DEFAULT_FUZZY_THRESHOLD};
use crate::reader::ReaderMode;
use crate::subgraph::DEFAULT_MAX_TRIPLES;
use crate::verbalizer::VerbalizerMode;
use crate::Score;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityMode {
    Lexical,
    Remote,
}

impl FromStr for SimilarityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lexical" => Ok(SimilarityMode::Lexical),
            "remote" => Ok(SimilarityMode::Remote),
            other => Err(format!("unknown similarity backend '{other}'")),
        }
    }
}

impl std::fmt::Display for SimilarityMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SimilarityMode::Lexical => "lexical",
            SimilarityMode::Remote => "remote",
        })
    }
}

/// Everything a pipeline run needs besides the KB and the questions.
///
/// `training_fraction` and `training_stages` are carried into reports as
/// labels; they do not change what this crate computes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub name: String,
    pub verbalizer: VerbalizerMode,
    pub reader: ReaderMode,
    pub linker: LinkerMode,
    pub linker_k: usize,
    pub linker_threshold: Score,
    pub links_file: Option<PathBuf>,
    pub similarity: SimilarityMode,
    pub budget_words: usize,
    pub fuzzy_threshold: Score,
    pub hops: usize,
    pub max_triples: usize,
    pub endpoint: Option<String>,
    pub remote_timeout_ms: u64,
    pub remote_max_in_flight: usize,
    pub workers: usize,
    pub training_fraction: Option<String>,
    pub training_stages: Option<String>,
    /// Extra stopwords per language tag.
    pub stopwords: BTreeMap<String, Vec<String>>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            name: "full".into(),
            verbalizer: VerbalizerMode::Template,
            reader: ReaderMode::Lexical,
            linker: LinkerMode::Golden,
            linker_k: DEFAULT_K,
            linker_threshold: DEFAULT_THRESHOLD,
            links_file: None,
            similarity: SimilarityMode::Lexical,
            budget_words: DEFAULT_BUDGET_WORDS,
            fuzzy_threshold: DEFAULT_FUZZY_THRESHOLD,
            hops: 2,
            max_triples: DEFAULT_MAX_TRIPLES,
            endpoint: None,
            remote_timeout_ms: 30_000,
            remote_max_in_flight: 4,
            workers: 4,
            training_fraction: None,
            training_stages: None,
            stopwords: BTreeMap::new(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, EvalError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| EvalError::Config(format!("{key}: {e}")))
}

fn positive(key: &str, value: usize) -> Result<usize, EvalError> {
    if value == 0 {
        Err(EvalError::Config(format!("{key} must be positive")))
    } else {
        Ok(value)
    }
}

impl PipelineConfig {
    /// Parses `key = value` lines. `#` starts a comment line; unknown keys
    /// are rejected.
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut cfg = PipelineConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| EvalError::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Applies one setting, as if it appeared in a config file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), EvalError> {
        match key {
            "config.name" => self.name = value.to_string(),
            "verbalizer.mode" => self.verbalizer = parse_value(key, value)?,
            "reader.mode" => self.reader = parse_value(key, value)?,
            "linker.mode" => self.linker = parse_value(key, value)?,
            "linker.k" => self.linker_k = positive(key, parse_value(key, value)?)?,
            "linker.threshold" => self.linker_threshold = parse_value(key, value)?,
            "linker.links_file" => self.links_file = Some(PathBuf::from(value)),
            "similarity.backend" => self.similarity = parse_value(key, value)?,
            "passage.budget_words" => self.budget_words = positive(key, parse_value(key, value)?)?,
            "fuzzy.threshold" => {
                let t: Score = parse_value(key, value)?;
                if !(0.0..=100.0).contains(&t) {
                    return Err(EvalError::Config(format!("{key} must be within [0, 100]")));
                }
                self.fuzzy_threshold = t;
            }
            "subgraph.hops" => self.hops = positive(key, parse_value(key, value)?)?,
            "subgraph.max_triples" => self.max_triples = positive(key, parse_value(key, value)?)?,
            "endpoints.model_server" => self.endpoint = Some(value.to_string()),
            "remote.timeout_ms" => self.remote_timeout_ms = parse_value(key, value)?,
            "remote.max_in_flight" => self.remote_max_in_flight = positive(key, parse_value(key, value)?)?,
            "runner.workers" => self.workers = positive(key, parse_value(key, value)?)?,
            "training.fraction" => self.training_fraction = Some(value.to_string()),
            "training.stages" => self.training_stages = Some(value.to_string()),
            _ => match key.strip_prefix("stopwords.") {
                Some(lang) if !lang.is_empty() => {
                    self.stopwords.entry(lang.to_string()).or_default().extend(
                        value
                            .split(',')
                            .map(str::trim)
                            .filter(|w| !w.is_empty())
                            .map(String::from),
                    );
                }
                _ => return Err(EvalError::Config(format!("unknown key '{key}'"))),
            },
        }
        Ok(())
    }

    /// Serializes back to the file format; `parse(to_text())` round-trips.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("config.name", &self.name);
        kv("verbalizer.mode", &self.verbalizer);
        kv("reader.mode", &self.reader);
        kv("linker.mode", &self.linker);
        kv("linker.k", &self.linker_k);
        kv("linker.threshold", &self.linker_threshold);
        if let Some(p) = &self.links_file {
            kv("linker.links_file", &p.display());
        }
        kv("similarity.backend", &self.similarity);
        kv("passage.budget_words", &self.budget_words);
        kv("fuzzy.threshold", &self.fuzzy_threshold);
        kv("subgraph.hops", &self.hops);
        kv("subgraph.max_triples", &self.max_triples);
        if let Some(e) = &self.endpoint {
            kv("endpoints.model_server", e);
        }
        kv("remote.timeout_ms", &self.remote_timeout_ms);
        kv("remote.max_in_flight", &self.remote_max_in_flight);
        kv("runner.workers", &self.workers);
        if let Some(f) = &self.training_fraction {
            kv("training.fraction", f);
        }
        if let Some(t) = &self.training_stages {
            kv("training.stages", t);
        }
        for (lang, words) in &self.stopwords {
            kv(&format!("stopwords.{lang}"), &words.join(", "));
        }
        s
    }
}

/// Ablation row names, in report order.
pub const ABLATIONS: [&str; 5] = [
    "full",
    "w/o KB to text",
    "w/o xMRC data",
    "w/o SQuAD",
    "w/o xMRC data, SQuAD",
];

/// One config per ablation row, derived from `base`. Dropping KB-to-text
/// switches the verbalizer to concatenation; the training-data rows only
/// relabel `training.stages`, since finetuning happens outside this crate.
pub fn ablation_configs(base: &PipelineConfig) -> Vec<PipelineConfig> {
    ABLATIONS
        .iter()
        .map(|&name| {
            let mut cfg = base.clone();
            cfg.name = name.to_string();
            match name {
                "w/o KB to text" => cfg.verbalizer = VerbalizerMode::Concat,
                "w/o xMRC data" => cfg.training_stages = Some("mlm,squad".into()),
                "w/o SQuAD" => cfg.training_stages = Some("mlm,xmrc".into()),
                "w/o xMRC data, SQuAD" => cfg.training_stages = Some("mlm".into()),
                _ => {}
            }
            cfg
        })
        .collect()
}
