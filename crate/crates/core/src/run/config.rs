//! Run configuration: a flat `key = value` text format.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are validated
//! against [`RunConfig::KEYS`]; later assignments win, so command-line flags
//! applied after the file take precedence. The fingerprint is the SHA-256 of
//! the canonical form (sorted `key=value` lines) excluding `jobs`, which never
//! changes results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::corpus::SyntheticConfig;
use crate::error::{Error, Result};
use crate::matcher::AblationConfig;
use crate::trainer::TrainConfig;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Every accepted key with its default (empty means unset).
    pub const KEYS: &'static [(&'static str, &'static str)] = &[
        ("seed", "0"),
        ("jobs", ""),
        ("threads", ""),
        ("data", ""),
        ("checkpoint", ""),
        ("out", ""),
        ("context", ""),
        ("persona", ""),
        ("pool", ""),
        ("top_k", "10"),
        ("domain", "default"),
        ("persona_store_cap", "100"),
        ("np", "10"),
        ("nx", "6"),
        ("neg", "15"),
        ("candidates", "100"),
        ("valid_candidates", "20"),
        ("epochs", "30"),
        ("batch_size", "16"),
        ("learning_rate", "0.001"),
        ("clip_norm", "1.0"),
        ("d_model", "32"),
        ("layers", "1"),
        ("heads", "2"),
        ("ff_width", "64"),
        ("max_positions", "64"),
        ("min_freq", "1"),
        ("ablation", "full"),
        ("configs", "full,-hop1,-hop2,+hop3,-max+mean,+mean,biencoder"),
        ("np_sweep", "0,1,2,5,10,20"),
        ("runs", "5"),
        ("permutation_rounds", "10000"),
        ("n_train", "1000"),
        ("n_valid", "200"),
        ("n_test", "200"),
        ("speakers", "40"),
        ("topics", "20"),
        ("filler_words", "30"),
        ("filler_min", "5"),
        ("filler_max", "8"),
        ("styles_per_speaker", "2"),
        ("persona_sentences", "4"),
        ("coupling", "1.0"),
        ("max_context_turns", "3"),
    ];

    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_string(),
                line: i + 1,
                reason: "expected key = value".into(),
            })?;
            cfg.set(k.trim(), v.trim()).map_err(|e| Error::Parse {
                path: origin.to_string(),
                line: i + 1,
                reason: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !Self::KEYS.iter().any(|(k, _)| *k == key) {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    /// Explicit value, else the default; `None` when both are empty.
    pub fn raw(&self, key: &str) -> Option<&str> {
        let v = self.values.get(key).map(String::as_str).or_else(|| {
            Self::KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| *d)
        });
        v.filter(|s| !s.is_empty())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key).ok_or_else(|| Error::Config(format!("{key} is required")))?;
        raw.parse().map_err(|e| Error::Config(format!("{key} = {raw:?}: {e}")))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        self.get::<String>(key).map(PathBuf::from)
    }

    pub fn optional_path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get::<String>(key)?;
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| Error::Config(format!("{key} entry {s:?}: {e}"))))
            .collect()
    }

    /// Sorted `key=value` lines of every key, defaults included.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (k, _) in Self::KEYS.iter().filter(|(k, _)| *k != "jobs") {
            let _ = writeln!(s, "{k}={}", self.raw(k).unwrap_or(""));
        }
        let mut lines: Vec<&str> = s.lines().collect();
        lines.sort_unstable();
        lines.join("\n") + "\n"
    }

    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            negatives: self.get("neg")?,
            batch_size: self.get("batch_size")?,
            learning_rate: self.get("learning_rate")?,
            epochs: self.get("epochs")?,
            seed: self.get("seed")?,
            ablation: self.get::<AblationConfig>("ablation")?,
            context_cap: self.get("nx")?,
            persona_cap: self.get("np")?,
            clip_norm: self.get("clip_norm")?,
            valid_candidates: self.get("valid_candidates")?,
            d_model: self.get("d_model")?,
            layers: self.get("layers")?,
            heads: self.get("heads")?,
            ff_width: self.get("ff_width")?,
            max_positions: self.get("max_positions")?,
            min_freq: self.get("min_freq")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn synthetic_config(&self) -> Result<SyntheticConfig> {
        let cfg = SyntheticConfig {
            n_train: self.get("n_train")?,
            n_valid: self.get("n_valid")?,
            n_test: self.get("n_test")?,
            speakers: self.get("speakers")?,
            topics: self.get("topics")?,
            filler_words: self.get("filler_words")?,
            filler_per_sentence: (self.get("filler_min")?, self.get("filler_max")?),
            styles_per_speaker: self.get("styles_per_speaker")?,
            persona_sentences: self.get("persona_sentences")?,
            coupling: self.get("coupling")?,
            max_context_turns: self.get("max_context_turns")?,
            domain: self.get("domain")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

}
