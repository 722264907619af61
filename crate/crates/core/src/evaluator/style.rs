//! TF-IDF style similarity between speakers.
//!
//! A document is the concatenation of a set of responses. Term weight is raw
//! count times `ln((1 + N) / (1 + df)) + 1`, with `N` and `df` taken over the
//! per-speaker documents. The same weights serve the random-split control so
//! both similarities live in one vector space.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::encoder::tokenize;
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_STYLE_RUNS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StyleSimilarity {
    /// Mean cosine over all speaker pairs.
    pub cross_speaker: f64,
    /// Cosine between two random halves of the pooled responses, per run.
    pub random_runs: Vec<f64>,
    pub random_mean: f64,
    pub random_sd: f64,
}

type Counts = HashMap<String, f64>;

fn counts<'a>(texts: impl IntoIterator<Item = &'a String>) -> Counts {
    let mut c = Counts::new();
    for t in texts {
        for tok in tokenize(t) {
            *c.entry(tok).or_default() += 1.0;
        }
    }
    c
}

struct Idf {
    weights: HashMap<String, f64>,
    unseen: f64,
}

impl Idf {
    fn fit(docs: &[Counts]) -> Self {
        let n = docs.len() as f64;
        let mut df: HashMap<&str, f64> = HashMap::new();
        for d in docs {
            for term in d.keys() {
                *df.entry(term).or_default() += 1.0;
            }
        }
        let weights = df.into_iter().map(|(t, f)| (t.to_string(), ((1.0 + n) / (1.0 + f)).ln() + 1.0)).collect();
        Idf { weights, unseen: (1.0 + n).ln() + 1.0 }
    }

    fn vector(&self, c: &Counts) -> BTreeMap<String, f64> {
        c.iter().map(|(t, &n)| (t.clone(), n * self.weights.get(t).copied().unwrap_or(self.unseen))).collect()
    }
}

pub fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(t, x)| b.get(t).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

/// Cross-speaker similarity and a `runs`-fold random-split control.
pub fn tfidf_style_similarity(
    responses_by_speaker: &BTreeMap<String, Vec<String>>,
    runs: usize,
    seed: u64,
) -> Result<StyleSimilarity> {
    let speakers: Vec<&Vec<String>> = responses_by_speaker.values().filter(|r| !r.is_empty()).collect();
    if speakers.len() < 2 {
        return Err(Error::Config("style similarity needs at least two speakers with responses".into()));
    }
    if runs == 0 {
        return Err(Error::Config("style similarity needs at least one run".into()));
    }
    let docs: Vec<Counts> = speakers.iter().map(|r| counts(r.iter())).collect();
    let idf = Idf::fit(&docs);
    let vecs: Vec<_> = docs.iter().map(|d| idf.vector(d)).collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..vecs.len() {
        for j in i + 1..vecs.len() {
            total += cosine(&vecs[i], &vecs[j]);
            pairs += 1;
        }
    }
    let cross_speaker = total / pairs as f64;

    let mut pooled: Vec<&String> = speakers.iter().flat_map(|r| r.iter()).collect();
    pooled.sort();
    let random_runs: Vec<f64> = (0..runs)
        .map(|run| {
            let mut shuffled = pooled.clone();
            shuffled.shuffle(&mut seed::rng(seed, "style-split", &[run as u64]));
            let (a, b) = shuffled.split_at(shuffled.len() / 2);
            cosine(&idf.vector(&counts(a.iter().copied())), &idf.vector(&counts(b.iter().copied())))
        })
        .collect();
    let random_mean = random_runs.iter().sum::<f64>() / runs as f64;
    let random_sd = if runs > 1 {
        (random_runs.iter().map(|x| (x - random_mean).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(StyleSimilarity { cross_speaker, random_runs, random_mean, random_sd })
}
