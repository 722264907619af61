use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{ConversationRecord, PersonaEntry, Split};
use crate::error::{Error, Result};

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// A split dataset plus its persona store, stored as
/// `train.jsonl`, `valid.jsonl`, `test.jsonl` and `personas.jsonl`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub train: Vec<ConversationRecord>,
    pub valid: Vec<ConversationRecord>,
    pub test: Vec<ConversationRecord>,
    pub personas: BTreeMap<String, Vec<String>>,
}

impl Dataset {
    pub const PERSONA_FILE: &'static str = "personas.jsonl";

    pub fn file_name(split: Split) -> String {
        format!("{}.jsonl", split.name())
    }

    pub fn split(&self, split: Split) -> &[ConversationRecord] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn all(&self) -> impl Iterator<Item = &ConversationRecord> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }

    /// Partitions records by their split tag, keeping input order.
    pub fn from_records(records: Vec<ConversationRecord>, personas: BTreeMap<String, Vec<String>>) -> Self {
        let mut ds = Dataset { personas, ..Dataset::default() };
        for r in records {
            match r.split {
                Split::Train => ds.train.push(r),
                Split::Valid => ds.valid.push(r),
                Split::Test => ds.test.push(r),
            }
        }
        ds
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for s in Split::ALL {
            write_jsonl(&dir.join(Self::file_name(s)), self.split(s))?;
        }
        let entries: Vec<PersonaEntry> =
            self.personas.iter().map(|(a, p)| PersonaEntry { author: a.clone(), persona: p.clone() }).collect();
        write_jsonl(&dir.join(Self::PERSONA_FILE), &entries)
    }

    /// Loads a dataset directory. Missing split or persona files read as empty.
    pub fn load(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::InvalidInput(format!("{} is not a dataset directory", dir.display())));
        }
        let read = |name: &str| -> Result<Vec<ConversationRecord>> {
            let p = dir.join(name);
            if p.exists() {
                read_jsonl(&p)
            } else {
                Ok(Vec::new())
            }
        };
        let mut ds = Dataset {
            train: read(&Self::file_name(Split::Train))?,
            valid: read(&Self::file_name(Split::Valid))?,
            test: read(&Self::file_name(Split::Test))?,
            personas: BTreeMap::new(),
        };
        for s in Split::ALL {
            if let Some(bad) = ds.split(s).iter().find(|r| r.split != s) {
                return Err(Error::InvalidInput(format!("record {} tagged {:?} in {}", bad.id, bad.split, s.name())));
            }
        }
        let p = dir.join(Self::PERSONA_FILE);
        if p.exists() {
            let entries: Vec<PersonaEntry> = read_jsonl(&p)?;
            ds.personas = entries.into_iter().map(|e| (e.author, e.persona)).collect();
        }
        Ok(ds)
    }
}

/// All responses grouped by respondent.
pub fn responses_by_speaker<'a>(records: impl IntoIterator<Item = &'a ConversationRecord>) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for r in records {
        out.entry(r.respondent.clone()).or_default().push(r.response.clone());
    }
    out
}
