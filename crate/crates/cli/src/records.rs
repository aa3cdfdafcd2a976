//! The JSON Lines record passed between stages: the question plus whatever
//! the stages so far produced.

use crate::args::Format;
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use xkbqa_core::eval::{read_dataset, Outcome};
use xkbqa_core::Question;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub question: Question,
    #[serde(flatten)]
    pub outcome: Outcome,
}

fn input(path: Option<&Path>) -> Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(
            File::open(p).with_context(|| format!("opening {}", p.display()))?,
        )),
        None => Box::new(BufReader::new(std::io::stdin())),
    })
}

/// Reads stage records. A line whose `question` is a plain string is a
/// dataset record and starts a fresh stage record. With `format` set, the
/// whole input must be a dataset split of that format.
pub fn read_records(path: Option<&Path>, format: Option<Format>) -> Result<Vec<StageRecord>> {
    let mut reader = input(path)?;
    if let Some(f) = format {
        let mut buf = Vec::new();
        reader.read_to_end(&mut buf)?;
        return Ok(read_dataset(buf.as_slice(), f.into())?.into_iter().map(fresh).collect());
    }
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).with_context(|| format!("input line {}", i + 1))?;
        let record = match value.get("question") {
            Some(serde_json::Value::String(_)) => fresh(serde_json::from_value(value)?),
            Some(serde_json::Value::Object(_)) => serde_json::from_value(value)?,
            _ => bail!("input line {}: no `question` field", i + 1),
        };
        out.push(record);
    }
    Ok(out)
}

fn fresh(question: Question) -> StageRecord {
    StageRecord {
        outcome: Outcome {
            question_id: question.id.clone(),
            ..Outcome::default()
        },
        question,
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

pub fn write_records(path: Option<&Path>, records: &[StageRecord]) -> Result<()> {
    let mut w = output(path)?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
