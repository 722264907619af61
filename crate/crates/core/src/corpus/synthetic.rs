//! Seeded generator for small persona-coupled corpora.
//!
//! Every conversation has one topic word that appears in each context
//! utterance and in the response. Every speaker owns a disjoint set of style
//! words that appear in their persona sentences. A response carries one style
//! word: with probability `coupling` it is one of the respondent's own,
//! otherwise any style word uniformly.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ConversationRecord, Dataset, Split};
use crate::error::{Error, Result};
use crate::seed;

const PERSONA_TEMPLATES: [&str; 4] = ["i really like {}", "i often talk about {}", "i have a {} at home", "i love my {} a lot"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub speakers: usize,
    pub topics: usize,
    pub filler_words: usize,
    /// Inclusive range of filler words per utterance.
    pub filler_per_sentence: (usize, usize),
    pub styles_per_speaker: usize,
    pub persona_sentences: usize,
    pub coupling: f64,
    pub max_context_turns: usize,
    pub domain: String,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_train: 1000,
            n_valid: 200,
            n_test: 200,
            speakers: 40,
            topics: 20,
            filler_words: 30,
            filler_per_sentence: (5, 8),
            styles_per_speaker: 2,
            persona_sentences: 4,
            coupling: 1.0,
            max_context_turns: 3,
            domain: "synthetic".into(),
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic: {m}")));
        if self.speakers < 2 {
            return bad("need at least 2 speakers");
        }
        if self.topics == 0 || self.filler_words == 0 || self.styles_per_speaker == 0 {
            return bad("topics, filler_words and styles_per_speaker must be positive");
        }
        if self.filler_per_sentence.0 > self.filler_per_sentence.1 {
            return bad("filler_per_sentence range is empty");
        }
        if self.persona_sentences == 0 {
            return bad("persona_sentences must be positive");
        }
        if !(0.0..=1.0).contains(&self.coupling) {
            return bad("coupling must lie in [0, 1]");
        }
        if self.max_context_turns == 0 {
            return bad("max_context_turns must be positive");
        }
        if self.n_train + self.n_valid + self.n_test == 0 {
            return bad("no conversations requested");
        }
        Ok(())
    }

    pub fn speaker_name(i: usize) -> String {
        format!("user{i:03}")
    }

    pub fn style_word(&self, speaker: usize, k: usize) -> String {
        format!("style{}", speaker * self.styles_per_speaker + k)
    }

    pub fn persona_of(&self, speaker: usize) -> Vec<String> {
        (0..self.persona_sentences)
            .map(|j| {
                let template = PERSONA_TEMPLATES[j % PERSONA_TEMPLATES.len()];
                template.replace("{}", &self.style_word(speaker, j % self.styles_per_speaker))
            })
            .collect()
    }
}

fn filler(cfg: &SyntheticConfig, rng: &mut ChaCha8Rng) -> String {
    format!("w{}", rng.gen_range(0..cfg.filler_words))
}

/// A few filler words with `keyword` at a random position.
fn sentence(cfg: &SyntheticConfig, rng: &mut ChaCha8Rng, keywords: &[String]) -> String {
    let n = rng.gen_range(cfg.filler_per_sentence.0..=cfg.filler_per_sentence.1);
    let mut words: Vec<String> = (0..n).map(|_| filler(cfg, rng)).collect();
    for k in keywords {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, k.clone());
    }
    words.join(" ")
}

fn conversation(cfg: &SyntheticConfig, seed: u64, split: Split, index: usize) -> ConversationRecord {
    let mut rng = seed::rng(seed, "synthetic", &[split as u64, index as u64]);
    let topic = format!("topic{}", rng.gen_range(0..cfg.topics));
    let respondent = rng.gen_range(0..cfg.speakers);
    let first = (respondent + rng.gen_range(1..cfg.speakers)) % cfg.speakers;
    let turns = rng.gen_range(1..=cfg.max_context_turns);
    let mut speakers = vec![first];
    for _ in 1..turns {
        speakers.push(rng.gen_range(0..cfg.speakers));
    }
    let context = speakers.iter().map(|_| sentence(cfg, &mut rng, std::slice::from_ref(&topic))).collect();
    let style = if rng.gen_bool(cfg.coupling) {
        cfg.style_word(respondent, rng.gen_range(0..cfg.styles_per_speaker))
    } else {
        let s = rng.gen_range(0..cfg.speakers);
        cfg.style_word(s, rng.gen_range(0..cfg.styles_per_speaker))
    };
    let mut keys = [topic, style];
    keys.shuffle(&mut rng);
    let response = sentence(cfg, &mut rng, &keys);
    let id = format!("syn-{}-{index:05}", split.name());
    ConversationRecord {
        thread_id: id.clone(),
        id,
        domain: cfg.domain.clone(),
        context,
        context_speakers: speakers.into_iter().map(SyntheticConfig::speaker_name).collect(),
        persona: cfg.persona_of(respondent),
        response,
        respondent: SyntheticConfig::speaker_name(respondent),
        split,
    }
}

pub fn generate_synthetic(cfg: &SyntheticConfig, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    let make = |split, n| (0..n).map(|i| conversation(cfg, seed, split, i)).collect();
    Ok(Dataset {
        train: make(Split::Train, cfg.n_train),
        valid: make(Split::Valid, cfg.n_valid),
        test: make(Split::Test, cfg.n_test),
        personas: (0..cfg.speakers).map(|s| (SyntheticConfig::speaker_name(s), cfg.persona_of(s))).collect(),
    })
}
