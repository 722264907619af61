//! Candidate sets, ranking metrics and corpus analyses.

mod candidates;
mod metrics;
mod stats;
mod style;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use candidates::{build_candidate_sets, build_candidates, CandidateSet, ResponsePool};
pub use metrics::{gold_rank, mean_reciprocal_rank, recall_at, MetricsReport};
pub use stats::{seen_unseen_partition, sign_flip_test, PermutationTest, SeenUnseen};
pub use style::{cosine, tfidf_style_similarity, StyleSimilarity, DEFAULT_STYLE_RUNS};

use crate::corpus::ConversationRecord;
use crate::error::{Error, Result};
use crate::trainer::{Checkpoint, Scorer};

/// Gold rank for each (record, candidate set) pair, scored in parallel, plus the summary report.
pub fn rank_and_score(
    scorer: &Scorer<'_>,
    records: &[ConversationRecord],
    sets: &[CandidateSet],
    fingerprint: &str,
) -> Result<(MetricsReport, Vec<usize>)> {
    if records.len() != sets.len() {
        return Err(Error::InvalidInput(format!("{} records but {} candidate sets", records.len(), sets.len())));
    }
    let ranks = records
        .par_iter()
        .zip(sets)
        .map(|(r, set)| {
            if r.id != set.example_id {
                return Err(Error::InvalidInput(format!("candidate set {} paired with record {}", set.example_id, r.id)));
            }
            let scores = scorer.score(r, &r.persona, &set.candidates)?;
            Ok(gold_rank(&scores, set.gold))
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok((MetricsReport::from_ranks(&ranks, fingerprint)?, ranks))
}

/// One evaluation per persona cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersonaSweepRow {
    pub persona_cap: usize,
    pub report: MetricsReport,
    pub ranks: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersonaImprovement {
    pub rows: Vec<PersonaSweepRow>,
    /// R@1 at the largest cap minus R@1 at the smallest.
    pub delta: f64,
}

impl PersonaImprovement {
    pub fn row(&self, persona_cap: usize) -> Option<&PersonaSweepRow> {
        self.rows.iter().find(|r| r.persona_cap == persona_cap)
    }

    /// Plot-ready table: persona cap, R@1, binomial standard error of R@1.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("n_p\tr1\tr1_se\n");
        for r in &self.rows {
            let p = r.report.r1;
            let se = (p * (1.0 - p) / r.report.count.max(1) as f64).sqrt();
            s.push_str(&format!("{}\t{p:.6}\t{se:.6}\n", r.persona_cap));
        }
        s
    }
}

/// Evaluates one model under each persona cap in `caps` on fixed candidate sets.
pub fn persona_improvement(
    checkpoint: &Checkpoint,
    records: &[ConversationRecord],
    sets: &[CandidateSet],
    caps: &[usize],
    context_cap: usize,
    fingerprint: &str,
) -> Result<PersonaImprovement> {
    if caps.is_empty() {
        return Err(Error::Config("persona sweep needs at least one cap".into()));
    }
    let mut caps = caps.to_vec();
    caps.sort_unstable();
    caps.dedup();
    let rows = caps
        .iter()
        .map(|&cap| {
            let scorer = checkpoint.scorer(context_cap, cap)?;
            let (report, ranks) = rank_and_score(&scorer, records, sets, fingerprint)?;
            Ok(PersonaSweepRow { persona_cap: cap, report, ranks })
        })
        .collect::<Result<Vec<_>>>()?;
    let delta = rows[rows.len() - 1].report.r1 - rows[0].report.r1;
    Ok(PersonaImprovement { rows, delta })
}

/// Per-example hit@1 differences `a − b`, for paired tests.
pub fn hit_differences(a: &[usize], b: &[usize]) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| f64::from(u8::from(x == 1)) - f64::from(u8::from(y == 1))).collect()
}

/// Metrics over a subset of examples given their ranks.
pub fn subset_report(ranks: &[usize], indices: &[usize], fingerprint: &str) -> Result<MetricsReport> {
    let sub: Vec<usize> = indices.iter().map(|&i| ranks[i]).collect();
    MetricsReport::from_ranks(&sub, fingerprint)
}
