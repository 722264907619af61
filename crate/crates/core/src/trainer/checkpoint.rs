//! Checkpoint container.
//!
//! Byte layout:
//! 1. the magic line `COBERT-CHECKPOINT\n`;
//! 2. one line of compact JSON (the header) terminated by `\n`, holding the
//!    format version, encoder and ablation configs, training config, step and
//!    epoch counters, the vocabulary tokens, and each parameter's name and shape;
//! 3. the parameter payload: every parameter's values in header order,
//!    row-major, as little-endian IEEE-754 `f32`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Featurizer, TrainConfig};
use crate::corpus::ConversationRecord;
use crate::encoder::{EncoderConfig, PersonaOrder, Vocabulary};
use crate::error::{Error, Result};
use crate::matcher::{AblationConfig, CoBert};
use crate::numerics::{Matrix, ParamStore};

pub const CHECKPOINT_MAGIC: &str = "COBERT-CHECKPOINT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub encoder: EncoderConfig,
    pub ablation: AblationConfig,
    pub train: TrainConfig,
    pub vocab: Vocabulary,
    pub params: ParamStore<f32>,
    pub steps: u64,
    pub epoch: usize,
}

#[derive(Serialize, Deserialize)]
struct ParamMeta {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    encoder: EncoderConfig,
    ablation: AblationConfig,
    train: TrainConfig,
    steps: u64,
    epoch: usize,
    vocab: Vec<String>,
    params: Vec<ParamMeta>,
}

impl Checkpoint {
    pub fn model(&self) -> Result<CoBert> {
        CoBert::bind(self.encoder.clone(), self.ablation, &self.params)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            format_version: CHECKPOINT_VERSION,
            encoder: self.encoder.clone(),
            ablation: self.ablation,
            train: self.train.clone(),
            steps: self.steps,
            epoch: self.epoch,
            vocab: self.vocab.tokens().to_vec(),
            params: self
                .params
                .iter()
                .map(|(_, name, m)| ParamMeta { name: name.to_string(), rows: m.rows(), cols: m.cols() })
                .collect(),
        };
        let mut out = Vec::with_capacity(self.params.scalar_count() * 4 + 4096);
        writeln!(out, "{CHECKPOINT_MAGIC}")?;
        serde_json::to_writer(&mut out, &header)?;
        out.push(b'\n');
        for (_, _, m) in self.params.iter() {
            for v in m.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: String| Error::Checkpoint(m);
        let mut lines = bytes.splitn(3, |&b| b == b'\n');
        if lines.next() != Some(CHECKPOINT_MAGIC.as_bytes()) {
            return Err(bad("missing magic line".into()));
        }
        let header: Header = serde_json::from_slice(lines.next().ok_or_else(|| bad("missing header".into()))?)
            .map_err(|e| bad(format!("header: {e}")))?;
        if header.format_version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported format version {}", header.format_version)));
        }
        let payload = lines.next().unwrap_or_default();
        let expected: usize = header.params.iter().map(|p| p.rows * p.cols * 4).sum();
        if payload.len() != expected {
            return Err(bad(format!("payload has {} bytes, header describes {expected}", payload.len())));
        }
        let mut params = ParamStore::new();
        let mut offset = 0;
        for p in &header.params {
            let n = p.rows * p.cols;
            let data = payload[offset..offset + n * 4]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
                .collect();
            offset += n * 4;
            params.register(p.name.clone(), Matrix::from_vec(p.rows, p.cols, data)?);
        }
        let vocab = Vocabulary::from_text(&header.vocab.join("\n"))?;
        if vocab.len() != header.encoder.vocab_size {
            return Err(bad(format!("vocabulary has {} tokens, encoder expects {}", vocab.len(), header.encoder.vocab_size)));
        }
        let ckpt = Checkpoint {
            encoder: header.encoder,
            ablation: header.ablation,
            train: header.train,
            vocab,
            params,
            steps: header.steps,
            epoch: header.epoch,
        };
        ckpt.model()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// A scorer using the given context and persona caps.
    pub fn scorer(&self, context_cap: usize, persona_cap: usize) -> Result<Scorer<'_>> {
        Ok(Scorer {
            model: self.model()?,
            params: &self.params,
            featurizer: Featurizer {
                vocab: &self.vocab,
                max_positions: self.encoder.max_positions,
                context_cap,
                persona_cap,
            },
        })
    }
}

/// Read-only scoring view over a model's parameters.
#[derive(Clone, Debug)]
pub struct Scorer<'a> {
    pub model: CoBert,
    pub params: &'a ParamStore<f32>,
    pub featurizer: Featurizer<'a>,
}

impl Scorer<'_> {
    /// Scores `candidates` as responses to `record`'s context, using `persona`
    /// in the given order (capped by the featurizer).
    pub fn score<S: AsRef<str>>(&self, record: &ConversationRecord, persona: &[String], candidates: &[S]) -> Result<Vec<f32>> {
        let context = self.featurizer.context(record)?;
        let persona = self.featurizer.persona(persona, PersonaOrder::Given);
        let responses = self.featurizer.responses(candidates)?;
        self.model.score_candidates(self.params, &context, &persona, &responses)
    }
}
