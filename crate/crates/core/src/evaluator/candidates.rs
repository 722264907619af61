use std::collections::HashMap;

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::ConversationRecord;
use crate::error::{Error, Result};
use crate::seed;

/// Distinct response strings in first-seen order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResponsePool {
    texts: Vec<String>,
    index: HashMap<String, usize>,
}

impl ResponsePool {
    pub fn new<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut pool = ResponsePool::default();
        for t in texts {
            if !pool.index.contains_key(t) {
                pool.index.insert(t.to_string(), pool.texts.len());
                pool.texts.push(t.to_string());
            }
        }
        pool
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a ConversationRecord>) -> Self {
        Self::new(records.into_iter().map(|r| r.response.as_str()))
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    pub fn position(&self, text: &str) -> Option<usize> {
        self.index.get(text).copied()
    }

    /// `k` distinct pool indices, none holding `exclude`, in sampling order.
    pub fn sample_excluding(&self, exclude: &str, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        let skip = self.position(exclude);
        let available = self.len() - usize::from(skip.is_some());
        if available < k {
            return Err(Error::Config(format!(
                "response pool has {available} usable negatives, {k} requested"
            )));
        }
        Ok(index::sample(rng, available, k)
            .into_iter()
            .map(|i| match skip {
                Some(s) if i >= s => i + 1,
                _ => i,
            })
            .collect())
    }
}

/// The gold response and `C − 1` sampled negatives.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub example_id: String,
    pub candidates: Vec<String>,
    pub gold: usize,
}

/// Samples `c − 1` distinct negatives different from the gold response and
/// inserts the gold at a seeded position. Deterministic per (example id, seed).
pub fn build_candidates(example: &ConversationRecord, pool: &ResponsePool, c: usize, seed: u64) -> Result<CandidateSet> {
    if c == 0 {
        return Err(Error::Config("candidate set size must be positive".into()));
    }
    let mut rng = seed::rng(seed, "candidates", &[seed::key(&example.id)]);
    let mut candidates: Vec<String> =
        pool.sample_excluding(&example.response, c - 1, &mut rng)?.into_iter().map(|i| pool.texts[i].clone()).collect();
    let gold = rng.gen_range(0..c);
    candidates.insert(gold, example.response.clone());
    Ok(CandidateSet { example_id: example.id.clone(), candidates, gold })
}

pub fn build_candidate_sets(records: &[ConversationRecord], pool: &ResponsePool, c: usize, seed: u64) -> Result<Vec<CandidateSet>> {
    records.iter().map(|r| build_candidates(r, pool, c, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;

    fn rec(id: &str, response: &str) -> ConversationRecord {
        ConversationRecord {
            id: id.into(),
            thread_id: id.into(),
            domain: "d".into(),
            context: vec!["x".into()],
            context_speakers: vec!["a".into()],
            persona: vec![],
            response: response.into(),
            respondent: "b".into(),
            split: Split::Test,
        }
    }

    #[test]
    fn two_candidates_from_three() {
        let pool = ResponsePool::new(["gold", "r1", "r2"]);
        let set = build_candidates(&rec("e", "gold"), &pool, 2, 5).unwrap();
        assert_eq!(set.candidates.len(), 2);
        assert_eq!(set.candidates[set.gold], "gold");
        assert!(["r1", "r2"].contains(&set.candidates[1 - set.gold].as_str()));
        assert_eq!(build_candidates(&rec("e", "gold"), &pool, 2, 5).unwrap(), set);
    }

    #[test]
    fn hundred_distinct_candidates() {
        let texts: Vec<String> = (0..150).map(|i| format!("r{i}")).collect();
        let pool = ResponsePool::new(texts.iter().map(String::as_str).chain(["r3", "r3"]));
        let set = build_candidates(&rec("e", "r3"), &pool, 100, 1).unwrap();
        let mut sorted = set.candidates.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
        assert_eq!(set.candidates.iter().filter(|c| *c == "r3").count(), 1);
    }

    #[test]
    fn pool_too_small() {
        let pool = ResponsePool::new(["gold", "r1"]);
        assert!(matches!(build_candidates(&rec("e", "gold"), &pool, 3, 0), Err(Error::Config(_))));
    }
}
