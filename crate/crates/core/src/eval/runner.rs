use super::{prediction_correct, EvalError, PipelineConfig, Question, SimilarityMode};
use crate::kb::{KbObject, KnowledgeBase};
use crate::linker::{load_links, LinkError, LinkResult, Linker, LinkerMode};
use crate::passage::similarity::SimilarityBackend;
use crate::passage::{self, Passage, PassageError, PassageOptions};
use crate::reader::{Prediction, ReadError, Reader, ReaderMode};
use crate::remote::{ClientOptions, ModelClient, RemoteError};
use crate::subgraph::{self, Subgraph, SubgraphError};
use crate::text::Stopwords;
use crate::verbalizer::{VerbalizeError, VerbalizedUnit, Verbalizer, VerbalizerMode};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StageError {
    #[error("link: {0}")]
    Link(String),
    #[error("link: question {0} has no topic entity annotation")]
    MissingGold(String),
    #[error("subgraph: {0}")]
    Subgraph(SubgraphError),
    #[error("verbalize: {0}")]
    Verbalize(VerbalizeError),
    #[error("passage: {0}")]
    Passage(PassageError),
    #[error("read: {0}")]
    Read(ReadError),
}

impl From<LinkError> for StageError {
    fn from(e: LinkError) -> Self {
        match e {
            LinkError::MissingGold(id) => StageError::MissingGold(id),
            other => StageError::Link(other.to_string()),
        }
    }
}

impl From<SubgraphError> for StageError {
    fn from(e: SubgraphError) -> Self {
        StageError::Subgraph(e)
    }
}

impl From<VerbalizeError> for StageError {
    fn from(e: VerbalizeError) -> Self {
        StageError::Verbalize(e)
    }
}

impl From<PassageError> for StageError {
    fn from(e: PassageError) -> Self {
        StageError::Passage(e)
    }
}

impl From<ReadError> for StageError {
    fn from(e: ReadError) -> Self {
        StageError::Read(e)
    }
}

impl StageError {
    fn remote(&self) -> Option<&RemoteError> {
        match self {
            StageError::Verbalize(VerbalizeError::Remote(r))
            | StageError::Passage(PassageError::Remote(r))
            | StageError::Read(ReadError::Remote(r)) => Some(r),
            _ => None,
        }
    }

    pub fn kind(&self) -> FailureKind {
        if matches!(self.remote(), Some(RemoteError::Unavailable(_))) {
            return FailureKind::RemoteUnavailable;
        }
        match self {
            StageError::MissingGold(_) => FailureKind::MissingGold,
            // Nothing to answer from: no topic entity left after linking, an
            // empty subgraph or passage, or no grounded span.
            StageError::Passage(PassageError::NoCandidates | PassageError::NoUnits)
            | StageError::Read(ReadError::NoCandidates)
            | StageError::Subgraph(SubgraphError::EmptyTopics) => FailureKind::NoCandidates,
            _ => FailureKind::Other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    NoCandidates,
    MissingGold,
    RemoteUnavailable,
    Other,
}

/// A stage failure in serializable form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
}

impl From<&StageError> for Failure {
    fn from(e: &StageError) -> Self {
        Failure {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

/// Artifacts of one question's run, up to the stage that failed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub question_id: String,
    pub link: Option<LinkResult>,
    pub subgraph: Option<Subgraph>,
    pub units: Option<Vec<VerbalizedUnit>>,
    pub passage: Option<Passage>,
    pub prediction: Option<Prediction>,
    pub error: Option<Failure>,
}

/// A pipeline assembled from a [`PipelineConfig`].
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub linker: Linker,
    pub verbalizer: Verbalizer,
    pub reader: Reader,
    pub similarity: SimilarityBackend,
    pub passage: PassageOptions,
}

impl Pipeline {
    pub fn new(config: &PipelineConfig) -> Result<Self, EvalError> {
        let needs_remote = config.verbalizer == VerbalizerMode::Remote
            || config.reader == ReaderMode::Remote
            || config.similarity == SimilarityMode::Remote;
        let client = match (&config.endpoint, needs_remote) {
            (Some(e), true) => Some(ModelClient::new(
                e,
                ClientOptions {
                    timeout: Duration::from_millis(config.remote_timeout_ms),
                    max_in_flight: config.remote_max_in_flight,
                    ..ClientOptions::default()
                },
            )),
            (None, true) => {
                return Err(EvalError::Config(
                    "a remote mode is selected but endpoints.model_server is not set".into(),
                ))
            }
            _ => None,
        };
        let linker = match config.linker {
            LinkerMode::Golden => Linker::Golden,
            LinkerMode::Surface => Linker::Surface {
                k: config.linker_k,
                threshold: config.linker_threshold,
            },
            LinkerMode::Precomputed => {
                let path = config
                    .links_file
                    .as_ref()
                    .ok_or_else(|| EvalError::Config("linker.mode = precomputed needs linker.links_file".into()))?;
                let links = load_links(path).map_err(|e| EvalError::Config(format!("{}: {e}", path.display())))?;
                Linker::Precomputed {
                    links,
                    k: config.linker_k,
                }
            }
        };
        let verbalizer = match config.verbalizer {
            VerbalizerMode::Concat => Verbalizer::Concat,
            VerbalizerMode::Template => Verbalizer::Template,
            VerbalizerMode::Remote => Verbalizer::Remote {
                client: client.clone().expect("client built for remote modes"),
                threshold: config.fuzzy_threshold,
            },
        };
        let reader = match config.reader {
            ReaderMode::Lexical => {
                let mut sw = Stopwords::default();
                for (lang, words) in &config.stopwords {
                    sw.extend(lang, words);
                }
                Reader::Lexical(sw)
            }
            ReaderMode::Remote => Reader::Remote(client.clone().expect("client built for remote modes")),
        };
        let similarity = match config.similarity {
            SimilarityMode::Lexical => SimilarityBackend::Lexical,
            SimilarityMode::Remote => SimilarityBackend::Remote(client.expect("client built for remote modes")),
        };
        Ok(Pipeline {
            config: config.clone(),
            linker,
            verbalizer,
            reader,
            similarity,
            passage: PassageOptions {
                budget_words: config.budget_words,
                threshold: config.fuzzy_threshold,
            },
        })
    }

    pub fn link(&self, question: &Question, kb: &KnowledgeBase) -> Result<LinkResult, StageError> {
        let mut r = self.linker.link(question, kb)?;
        if self.linker.mode() != LinkerMode::Golden {
            r.candidates.retain(|c| kb.contains(&c.entity));
        }
        Ok(r)
    }

    pub fn subgraph(&self, link: &LinkResult, kb: &KnowledgeBase) -> Result<Subgraph, StageError> {
        Ok(subgraph::extract(
            kb,
            &link.entities(),
            self.config.hops,
            self.config.max_triples,
        )?)
    }

    pub fn verbalize(&self, sg: &Subgraph, kb: &KnowledgeBase) -> Result<Vec<VerbalizedUnit>, StageError> {
        Ok(self.verbalizer.verbalize_subgraph(sg, kb)?.0)
    }

    pub fn build_passage(&self, question: &Question, units: &[VerbalizedUnit]) -> Result<Passage, StageError> {
        Ok(passage::build(question, units, &self.passage, &self.similarity)?)
    }

    pub fn read(&self, question: &Question, passage: &Passage) -> Result<Prediction, StageError> {
        Ok(self.reader.read(question, passage)?)
    }

    /// Runs every stage for one question, keeping what was produced before
    /// any failure.
    pub fn run_question(&self, question: &Question, kb: &KnowledgeBase) -> Outcome {
        let mut out = Outcome {
            question_id: question.id.clone(),
            ..Outcome::default()
        };
        if let Err(e) = self.run_stages(question, kb, &mut out) {
            out.error = Some(Failure::from(&e));
        }
        out
    }

    fn run_stages(&self, question: &Question, kb: &KnowledgeBase, out: &mut Outcome) -> Result<(), StageError> {
        let link = out.link.insert(self.link(question, kb)?);
        let sg = out.subgraph.insert(self.subgraph(link, kb)?);
        let units = out.units.insert(self.verbalize(sg, kb)?);
        let passage = out.passage.insert(self.build_passage(question, units)?);
        out.prediction = Some(self.read(question, passage)?);
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub no_candidates: usize,
    pub missing_gold: usize,
    pub remote_unavailable: usize,
    /// Questions with no gold answer among the passage's candidate spans,
    /// failed questions included. `1 - answer_not_in_passage / n` bounds
    /// hits@1 from above.
    pub answer_not_in_passage: usize,
    pub other_errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub top: Option<KbObject>,
    pub surface: Option<String>,
    pub correct: bool,
    pub answer_in_passage: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: String,
    pub hits_at_1: f64,
    pub n: usize,
    pub diagnostics: Diagnostics,
    pub rows: Vec<ReportRow>,
}

fn answer_in_passage(passage: Option<&Passage>, question: &Question) -> bool {
    passage.is_some_and(|p| {
        p.spans.iter().any(|s| {
            question
                .answers
                .iter()
                .any(|a| super::answer_matches(&s.object, &s.surface, a))
        })
    })
}

/// Scores one outcome against its question.
pub fn score_outcome(outcome: &Outcome, question: &Question) -> ReportRow {
    let top = outcome.prediction.as_ref().map(|p| p.top_answer());
    ReportRow {
        id: question.id.clone(),
        top: top.map(|t| t.object.clone()),
        surface: top.map(|t| t.surface.clone()),
        correct: outcome
            .prediction
            .as_ref()
            .is_some_and(|p| prediction_correct(p, question)),
        answer_in_passage: answer_in_passage(outcome.passage.as_ref(), question),
        error: outcome.error.as_ref().map(|e| e.message.clone()),
    }
}

/// Builds the report from per-question outcomes, paired with `questions` by
/// position. Rows come out sorted by id whatever the input order.
pub fn assemble_report(config: &str, questions: &[Question], outcomes: &[Outcome]) -> EvalReport {
    let mut diagnostics = Diagnostics::default();
    let mut rows: Vec<ReportRow> = questions
        .iter()
        .zip(outcomes)
        .map(|(q, o)| {
            if let Some(e) = &o.error {
                *match e.kind {
                    FailureKind::NoCandidates => &mut diagnostics.no_candidates,
                    FailureKind::MissingGold => &mut diagnostics.missing_gold,
                    FailureKind::RemoteUnavailable => &mut diagnostics.remote_unavailable,
                    FailureKind::Other => &mut diagnostics.other_errors,
                } += 1;
            }
            let row = score_outcome(o, q);
            if !row.answer_in_passage {
                diagnostics.answer_not_in_passage += 1;
            }
            row
        })
        .collect();
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    let correct = rows.iter().filter(|r| r.correct).count();
    EvalReport {
        config: config.to_string(),
        hits_at_1: crate::num::ratio(correct, rows.len()),
        n: rows.len(),
        diagnostics,
        rows,
    }
}

/// Runs the configured pipeline over `questions` on a pool of
/// `config.workers` threads.
pub fn run_config(
    config: &PipelineConfig,
    questions: &[Question],
    kb: &KnowledgeBase,
) -> Result<EvalReport, EvalError> {
    if questions.is_empty() {
        return Err(EvalError::Config("empty question list".into()));
    }
    let pipeline = Pipeline::new(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| EvalError::Config(format!("worker pool: {e}")))?;
    let outcomes: Vec<Outcome> = pool.install(|| questions.par_iter().map(|q| pipeline.run_question(q, kb)).collect());
    Ok(assemble_report(&config.name, questions, &outcomes))
}

/// Published full-data hits@1 for each ablation row, for side-by-side
/// display only.
pub const ABLATION_REFERENCE: [(&str, f64); 5] = [
    ("full", 0.7437),
    ("w/o KB to text", 0.7224),
    ("w/o xMRC data", 0.7181),
    ("w/o SQuAD", 0.7102),
    ("w/o xMRC data, SQuAD", 0.6669),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub config: String,
    pub verbalizer: VerbalizerMode,
    pub training_stages: Option<String>,
    pub hits_at_1: f64,
    pub n: usize,
    pub delta_vs_full: f64,
    pub reference_hits_at_1: f64,
    pub diagnostics: Diagnostics,
}

/// One report row per ablation name, all over the same questions.
pub fn run_ablations(
    base: &PipelineConfig,
    questions: &[Question],
    kb: &KnowledgeBase,
) -> Result<Vec<AblationRow>, EvalError> {
    let mut rows: Vec<AblationRow> = Vec::new();
    for (cfg, (_, reference)) in super::ablation_configs(base).iter().zip(ABLATION_REFERENCE) {
        let report = run_config(cfg, questions, kb)?;
        let full = rows.first().map_or(report.hits_at_1, |r| r.hits_at_1);
        rows.push(AblationRow {
            config: report.config,
            verbalizer: cfg.verbalizer,
            training_stages: cfg.training_stages.clone(),
            hits_at_1: report.hits_at_1,
            n: report.n,
            delta_vs_full: report.hits_at_1 - full,
            reference_hits_at_1: reference,
            diagnostics: report.diagnostics,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{AnswerRef, EntityRef};

    fn kb() -> KnowledgeBase {
        KnowledgeBase::builder()
            .entity_triple("m.ford", "government.us_president.vice_president", "m.rock")
            .entity_triple("m.gergen", "government.political_appointer.appointed_by", "m.ford")
            .name("m.ford", "Gerald Ford")
            .name("m.rock", "Nelson Rockefeller")
            .name("m.gergen", "David Gergen")
            .build()
    }

    fn question(id: &str, gold: &str) -> Question {
        let mut q = Question::new(id, "Who was the vice president of Gerald Ford?", "en");
        q.topic_entities = vec![EntityRef::new("m.ford", "Gerald Ford")];
        q.answers = vec![AnswerRef::entity(gold, "")];
        q
    }

    #[test]
    fn runs_and_scores() {
        let qs = vec![question("b", "m.rock"), question("a", "m.gergen")];
        let report = run_config(&PipelineConfig::default(), &qs, &kb()).unwrap();
        assert_eq!(report.n, 2);
        assert_eq!(report.rows[0].id, "a");
        assert_eq!(report.rows[1].top, Some(KbObject::entity("m.rock")));
        assert_eq!(report.hits_at_1, 0.5);
        assert_eq!(report.diagnostics, Diagnostics::default());
    }

    #[test]
    fn failures_are_counted_and_scored_zero() {
        let mut no_gold = question("x", "m.rock");
        no_gold.topic_entities.clear();
        let mut isolated = question("y", "m.rock");
        isolated.answers = vec![AnswerRef::surface("nobody")];
        let report = run_config(&PipelineConfig::default(), &[no_gold, isolated], &kb()).unwrap();
        assert_eq!(report.hits_at_1, 0.0);
        assert_eq!(report.diagnostics.missing_gold, 1);
        assert_eq!(report.diagnostics.answer_not_in_passage, 2);
    }

    #[test]
    fn empty_questions_and_remote_without_endpoint() {
        assert!(matches!(
            run_config(&PipelineConfig::default(), &[], &kb()),
            Err(EvalError::Config(_))
        ));
        let cfg = PipelineConfig::parse("reader.mode = remote").unwrap();
        assert!(matches!(Pipeline::new(&cfg), Err(EvalError::Config(_))));
    }

    #[test]
    fn concat_and_template_rows_are_comparable() {
        let qs = vec![question("a", "m.rock")];
        let rows = run_ablations(&PipelineConfig::default(), &qs, &kb()).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| r.n == 1));
        assert_eq!(rows[0].delta_vs_full, 0.0);
        assert_eq!(rows[1].verbalizer, VerbalizerMode::Concat);
    }
}
