//! `xkbqa`: run the pipeline stage by stage over JSON Lines, or end to end.

mod args;
mod records;

use anyhow::{bail, Context, Result};
use args::{Cli, Command, Common, KbCommand, PassageCommand, SubgraphCommand};
use clap::Parser;
use records::{read_records, write_json, write_records, StageRecord};
use std::collections::BTreeSet;
use std::io::Write;
use std::process::ExitCode;
use xkbqa_core::eval::{
    assemble_report, load_dataset, run_config, DatasetFormat, Failure, Outcome, Pipeline, StageError,
};
use xkbqa_core::kb::snapshot::{open_kb, write_snapshot};
use xkbqa_core::kb::{load_ntriples, Relation};
use xkbqa_core::KnowledgeBase;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("xkbqa: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn open(common: &Common) -> Result<KnowledgeBase> {
    let path = common.kb.as_ref().context("--kb is required for this command")?;
    let kb = open_kb(path, &common.preset.filter()).with_context(|| format!("opening {}", path.display()))?;
    Ok(match common.cvt.policy(common.cvt_min_out, &common.cvt_relations) {
        Some(p) => kb.mark_cvt(&p),
        None => kb,
    })
}

/// Applies `f` to every record that has not failed yet. Returns whether all
/// output records are free of errors.
fn stage<F>(common: &Common, mut f: F) -> Result<bool>
where
    F: FnMut(&mut StageRecord) -> Result<(), StageError>,
{
    let mut records = read_records(common.input.as_deref(), common.format)?;
    for r in &mut records {
        if r.outcome.error.is_none() {
            if let Err(e) = f(r) {
                r.outcome.error = Some(Failure::from(&e));
            }
        }
    }
    write_records(common.out.as_deref(), &records)?;
    let failed = records.iter().filter(|r| r.outcome.error.is_some()).count();
    if failed > 0 {
        eprintln!("xkbqa: {failed} of {} records failed", records.len());
    }
    Ok(failed == 0)
}

fn missing(what: &str) -> StageError {
    StageError::Link(format!("record has no {what}; run the previous stage first"))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Kb(KbCommand::Load(a)) => {
            let (kb, report) = load_ntriples(&a.input, &a.preset.filter())
                .with_context(|| format!("loading {}", a.input.display()))?;
            let kb = match a.cvt.policy(a.cvt_min_out, &a.cvt_relations) {
                Some(p) => kb.mark_cvt(&p),
                None => kb,
            };
            let file = std::fs::File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
            let mut w = std::io::BufWriter::new(file);
            write_snapshot(&kb, &mut w)?;
            w.flush()?;
            write_json(None, &serde_json::json!({ "load": report, "stats": kb.stats() }))?;
            Ok(true)
        }
        Command::Kb(KbCommand::Stats(c)) => {
            let kb = open(&c)?;
            write_json(c.out.as_deref(), &kb.stats())?;
            Ok(true)
        }
        Command::Kb(KbCommand::Prune(a)) => {
            let kb = open(&a.common)?;
            let keep: BTreeSet<Relation> = a.relations().with_context(|| "reading --relations")?;
            let pruned = kb.prune_to_relations(&keep)?;
            let out = a.common.out.as_ref().context("kb prune needs --out")?;
            let mut w = std::io::BufWriter::new(std::fs::File::create(out)?);
            write_snapshot(&pruned, &mut w)?;
            w.flush()?;
            write_json(None, &pruned.stats())?;
            Ok(true)
        }
        Command::Link(c) => {
            let kb = open(&c)?;
            let p = Pipeline::new(&c.config()?)?;
            stage(&c, |r| {
                r.outcome.link = Some(p.link(&r.question, &kb)?);
                Ok(())
            })
        }
        Command::Subgraph(SubgraphCommand::Dump(c)) => {
            let kb = open(&c)?;
            let p = Pipeline::new(&c.config()?)?;
            stage(&c, |r| {
                if r.outcome.link.is_none() {
                    r.outcome.link = Some(p.link(&r.question, &kb)?);
                }
                let link = r.outcome.link.as_ref().expect("set above");
                r.outcome.subgraph = Some(p.subgraph(link, &kb)?);
                Ok(())
            })
        }
        Command::Verbalize(c) => {
            let kb = open(&c)?;
            let p = Pipeline::new(&c.config()?)?;
            stage(&c, |r| {
                let sg = r.outcome.subgraph.as_ref().ok_or_else(|| missing("subgraph"))?;
                r.outcome.units = Some(p.verbalize(sg, &kb)?);
                Ok(())
            })
        }
        Command::Passage(PassageCommand::Build(c)) => {
            let p = Pipeline::new(&c.config()?)?;
            stage(&c, |r| {
                let units = r.outcome.units.as_ref().ok_or_else(|| missing("units"))?;
                r.outcome.passage = Some(p.build_passage(&r.question, units)?);
                Ok(())
            })
        }
        Command::Answer(c) => {
            let p = Pipeline::new(&c.config()?)?;
            stage(&c, |r| {
                let passage = r.outcome.passage.as_ref().ok_or_else(|| missing("passage"))?;
                r.outcome.prediction = Some(p.read(&r.question, passage)?);
                Ok(())
            })
        }
        Command::Evaluate(c) => {
            let cfg = c.config()?;
            let records = read_records(c.input.as_deref(), c.format)?;
            if records.is_empty() {
                bail!("no records to evaluate");
            }
            let (questions, outcomes): (Vec<_>, Vec<Outcome>) =
                records.into_iter().map(|r| (r.question, r.outcome)).unzip();
            write_json(c.out.as_deref(), &assemble_report(&cfg.name, &questions, &outcomes))?;
            Ok(true)
        }
        Command::E2e(a) => {
            let cfg = a.common.config()?;
            let kb = open(&a.common)?;
            let questions = match a.common.format {
                Some(f) => load_dataset(&a.dataset, f.into())?,
                None => read_records(Some(&a.dataset), None)?
                    .into_iter()
                    .map(|r| r.question)
                    .collect(),
            };
            if let Some(trace) = &a.trace {
                let p = Pipeline::new(&cfg)?;
                let records: Vec<StageRecord> = questions
                    .iter()
                    .map(|q| StageRecord {
                        question: q.clone(),
                        outcome: p.run_question(q, &kb),
                    })
                    .collect();
                write_records(Some(trace), &records)?;
            }
            let report = run_config(&cfg, &questions, &kb)?;
            write_json(a.common.out.as_deref(), &report)?;
            Ok(true)
        }
    }
}

impl From<args::Format> for DatasetFormat {
    fn from(f: args::Format) -> Self {
        match f {
            args::Format::WebqspZh => DatasetFormat::WebQspZh,
            args::Format::QaldM => DatasetFormat::QaldM,
        }
    }
}
