use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::ConversationRecord;
use crate::error::{Error, Result};
use crate::seed;

/// Paired sign-flip permutation test on per-example differences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationTest {
    pub observed: f64,
    /// 2.5th and 97.5th percentiles of the null distribution of the mean difference.
    pub band: (f64, f64),
    /// Two-sided p-value with the observed statistic counted in the null.
    pub p_value: f64,
    pub rounds: usize,
}

impl PermutationTest {
    pub fn within_band(&self) -> bool {
        self.band.0 <= self.observed && self.observed <= self.band.1
    }
}

pub fn sign_flip_test(diffs: &[f64], rounds: usize, seed: u64) -> Result<PermutationTest> {
    if diffs.is_empty() || rounds == 0 {
        return Err(Error::InvalidInput("permutation test needs differences and rounds".into()));
    }
    let n = diffs.len() as f64;
    let observed = diffs.iter().sum::<f64>() / n;
    let mut rng = seed::rng(seed, "sign-flip", &[]);
    let mut null: Vec<f64> = (0..rounds)
        .map(|_| diffs.iter().map(|&d| if rng.gen_bool(0.5) { d } else { -d }).sum::<f64>() / n)
        .collect();
    null.sort_by(f64::total_cmp);
    let pick = |q: f64| null[((q * (rounds - 1) as f64).round() as usize).min(rounds - 1)];
    let extreme = null.iter().filter(|x| x.abs() >= observed.abs() - 1e-12).count();
    Ok(PermutationTest {
        observed,
        band: (pick(0.025), pick(0.975)),
        p_value: (extreme + 1) as f64 / (rounds + 1) as f64,
        rounds,
    })
}

/// Test example indices split by whether the respondent also responds in training.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeenUnseen {
    pub seen: Vec<usize>,
    pub unseen: Vec<usize>,
}

pub fn seen_unseen_partition(test: &[ConversationRecord], train: &[ConversationRecord]) -> SeenUnseen {
    let known: HashSet<&str> = train.iter().map(|r| r.respondent.as_str()).collect();
    let mut out = SeenUnseen::default();
    for (i, r) in test.iter().enumerate() {
        if known.contains(r.respondent.as_str()) {
            out.seen.push(i);
        } else {
            out.unseen.push(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_differences_sit_in_band() {
        let diffs: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let t = sign_flip_test(&diffs, 2000, 3).unwrap();
        assert!(t.within_band());
        assert!(t.p_value > 0.5);
    }

    #[test]
    fn strong_effect_leaves_band() {
        let diffs: Vec<f64> = (0..200).map(|i| if i % 4 == 0 { 0.0 } else { 1.0 }).collect();
        let t = sign_flip_test(&diffs, 2000, 3).unwrap();
        assert!(!t.within_band());
        assert!(t.p_value < 0.01);
    }
}
