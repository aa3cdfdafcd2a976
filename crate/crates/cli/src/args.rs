use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::collections::BTreeSet;
use std::path::PathBuf;
use xkbqa_core::kb::{CvtPolicy, PreprocessFilter, Relation};
use xkbqa_core::PipelineConfig;

#[derive(Parser, Debug)]
#[command(name = "xkbqa", version, about = "Cross-lingual KBQA as reading comprehension")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build, inspect and prune KB snapshots.
    #[command(subcommand)]
    Kb(KbCommand),
    /// Link topic entities for each question.
    Link(Common),
    /// Extract question subgraphs.
    #[command(subcommand)]
    Subgraph(SubgraphCommand),
    /// Turn subgraph facts into sentences.
    Verbalize(Common),
    /// Build reading passages.
    #[command(subcommand)]
    Passage(PassageCommand),
    /// Pick an answer span from each passage.
    Answer(Common),
    /// Score answered records and print an evaluation report.
    Evaluate(Common),
    /// Run every stage over a dataset and print the evaluation report.
    E2e(E2eArgs),
}

#[derive(Subcommand, Debug)]
pub enum KbCommand {
    /// Parse an N-Triples dump (optionally gzipped) into a snapshot.
    Load(LoadArgs),
    Stats(Common),
    /// Keep only the listed relations.
    Prune(PruneArgs),
}

#[derive(Subcommand, Debug)]
pub enum SubgraphCommand {
    /// Extract the k-hop subgraph around the linked entities.
    Dump(Common),
}

#[derive(Subcommand, Debug)]
pub enum PassageCommand {
    /// Rank, trim and ground verbalized sentences into a passage.
    Build(Common),
}

#[derive(ValueEnum, Clone, Copy, Debug, Default)]
pub enum Preset {
    /// No relation filtering; `rdfs:label` gives names.
    #[default]
    Raw,
    Freebase,
    Dbpedia,
}

impl Preset {
    pub fn filter(self) -> PreprocessFilter {
        match self {
            Preset::Raw => PreprocessFilter {
                name_relation: Some("http://www.w3.org/2000/01/rdf-schema#label".into()),
                ..PreprocessFilter::default()
            },
            Preset::Freebase => PreprocessFilter::freebase(),
            Preset::Dbpedia => PreprocessFilter::dbpedia(),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cvt {
    /// Unnamed nodes with enough outgoing triples.
    Heuristic,
    /// Tails of the relations given in `--cvt-relations`.
    Relations,
    /// Keep whatever markers the KB already has.
    None,
}

impl Cvt {
    pub fn policy(self, min_out: usize, relations: &[String]) -> Option<CvtPolicy> {
        match self {
            Cvt::Heuristic => Some(CvtPolicy::UnnamedFanout { min_out }),
            Cvt::Relations => Some(CvtPolicy::Relations(relations.iter().map(Relation::new).collect())),
            Cvt::None => None,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Format {
    WebqspZh,
    QaldM,
}

/// Options shared by the stage commands. Flags override `--config`.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// KB snapshot or N-Triples file.
    #[arg(long)]
    pub kb: Option<PathBuf>,
    /// Input JSON Lines; standard input when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Validate input as a dataset split.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_enum, default_value = "raw")]
    pub preset: Preset,
    #[arg(long, value_enum, default_value = "none")]
    pub cvt: Cvt,
    #[arg(long, default_value_t = 2)]
    pub cvt_min_out: usize,
    #[arg(long, value_delimiter = ',')]
    pub cvt_relations: Vec<String>,

    /// Pipeline config file (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub budget_words: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub hops: Option<usize>,
    #[arg(long)]
    pub max_triples: Option<usize>,
    #[arg(long)]
    pub reader: Option<String>,
    #[arg(long)]
    pub verbalizer: Option<String>,
    #[arg(long)]
    pub linker: Option<String>,
    #[arg(long)]
    pub links_file: Option<PathBuf>,
    #[arg(long)]
    pub similarity: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Reserved; every stage is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Common {
    pub fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        let overrides: [(&str, Option<String>); 12] = [
            ("config.name", self.name.clone()),
            ("passage.budget_words", self.budget_words.map(|v| v.to_string())),
            ("fuzzy.threshold", self.threshold.map(|v| v.to_string())),
            ("subgraph.hops", self.hops.map(|v| v.to_string())),
            ("subgraph.max_triples", self.max_triples.map(|v| v.to_string())),
            ("reader.mode", self.reader.clone()),
            ("verbalizer.mode", self.verbalizer.clone()),
            ("linker.mode", self.linker.clone()),
            (
                "linker.links_file",
                self.links_file.as_ref().map(|p| p.display().to_string()),
            ),
            ("similarity.backend", self.similarity.clone()),
            ("endpoints.model_server", self.endpoint.clone()),
            ("runner.workers", self.workers.map(|v| v.to_string())),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
pub struct LoadArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "raw")]
    pub preset: Preset,
    #[arg(long, value_enum, default_value = "heuristic")]
    pub cvt: Cvt,
    #[arg(long, default_value_t = 2)]
    pub cvt_min_out: usize,
    #[arg(long, value_delimiter = ',')]
    pub cvt_relations: Vec<String>,
}

#[derive(Args, Debug)]
pub struct PruneArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated relation ids, or `@file` with one id per line.
    #[arg(long)]
    pub relations: String,
}

impl PruneArgs {
    pub fn relations(&self) -> Result<BTreeSet<Relation>> {
        let text = match self.relations.strip_prefix('@') {
            Some(path) => std::fs::read_to_string(path)?,
            None => self.relations.replace(',', "\n"),
        };
        Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(Relation::new)
            .collect())
    }
}

#[derive(Args, Debug)]
pub struct E2eArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Also write every question's stage artifacts to this file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}
