use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1-based rank of the gold candidate: one plus the number of candidates
/// scoring higher, plus the number tying with it at a lower index.
pub fn gold_rank<S: PartialOrd + Copy>(scores: &[S], gold: usize) -> usize {
    let g = scores[gold];
    1 + scores.iter().enumerate().filter(|&(j, &s)| s > g || (s == g && j < gold)).count()
}

pub fn recall_at(ranks: &[usize], k: usize) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64
}

pub fn mean_reciprocal_rank(ranks: &[usize]) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub r1: f64,
    pub r10: f64,
    pub r50: f64,
    pub mrr: f64,
    pub count: usize,
    pub fingerprint: String,
}

impl MetricsReport {
    pub fn from_ranks(ranks: &[usize], fingerprint: impl Into<String>) -> Result<Self> {
        if ranks.iter().any(|&r| r == 0) {
            return Err(Error::InvalidInput("ranks are 1-based".into()));
        }
        Ok(MetricsReport {
            r1: recall_at(ranks, 1),
            r10: recall_at(ranks, 10),
            r50: recall_at(ranks, 50),
            mrr: mean_reciprocal_rank(ranks),
            count: ranks.len(),
            fingerprint: fingerprint.into(),
        })
    }

    pub fn to_key_values(&self) -> String {
        format!(
            "r1={:.6}\nr10={:.6}\nr50={:.6}\nmrr={:.6}\ncount={}\nfingerprint={}\n",
            self.r1, self.r10, self.r50, self.mrr, self.count, self.fingerprint
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize") + "\n"
    }

    pub const TSV_HEADER: &'static str = "name\tr1\tr10\tr50\tmrr\tcount";

    pub fn tsv_row(&self, name: &str) -> String {
        format!("{name}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}", self.r1, self.r10, self.r50, self.mrr, self.count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_and_ties() {
        assert_eq!(gold_rank(&[0.1, 0.9, 0.5], 1), 1);
        assert_eq!(gold_rank(&[0.1, 0.9, 0.5], 2), 2);
        assert_eq!(gold_rank(&[0.5, 0.5, 0.5], 0), 1);
        assert_eq!(gold_rank(&[0.5, 0.5, 0.5], 2), 3);
    }

    #[test]
    fn closed_forms() {
        let m = MetricsReport::from_ranks(&[1, 1, 1], "x").unwrap();
        assert_eq!((m.r1, m.mrr), (1.0, 1.0));
        let m = MetricsReport::from_ranks(&[2, 2], "x").unwrap();
        assert_eq!((m.r1, m.r10, m.mrr), (0.0, 1.0, 0.5));
        assert!(MetricsReport::from_ranks(&[0], "x").is_err());
    }
}
