use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{clip_global_norm, Adam, Checkpoint, Featurizer, TrainConfig};
use crate::corpus::{ConversationRecord, Dataset};
use crate::encoder::{PersonaOrder, PreparedSequence, Vocabulary};
use crate::error::{Error, Result};
use crate::evaluator::{build_candidate_sets, rank_and_score, MetricsReport, ResponsePool};
use crate::matcher::CoBert;
use crate::numerics::{Gradients, ParamStore, Tape, Var};
use crate::scalar::Scalar;
use crate::seed;

/// `k` distinct responses from `pool`, none equal to the example's gold
/// response. Deterministic per (example id, seed, step).
pub fn sample_negatives(
    example: &ConversationRecord,
    pool: &ResponsePool,
    k: usize,
    seed: u64,
    step: u64,
) -> Result<Vec<String>> {
    let idx = negative_indices(example, pool, k, seed, step)?;
    Ok(idx.into_iter().map(|i| pool.texts()[i].clone()).collect())
}

fn negative_indices(example: &ConversationRecord, pool: &ResponsePool, k: usize, seed: u64, step: u64) -> Result<Vec<usize>> {
    let mut rng = seed::rng(seed, "negatives", &[seed::key(&example.id), step]);
    pool.sample_excluding(&example.response, k, &mut rng)
}

/// Cross-entropy of the gold candidate under a softmax over all candidate scores.
pub fn batch_loss<T: Scalar>(
    model: &CoBert,
    tape: &mut Tape<T>,
    store: &ParamStore<T>,
    context: &PreparedSequence,
    persona: &PreparedSequence,
    candidates: &[PreparedSequence],
    gold: usize,
) -> Result<Var> {
    if gold >= candidates.len() {
        return Err(Error::InvalidInput(format!("gold index {gold} outside {} candidates", candidates.len())));
    }
    let logits = model.logits(tape, store, context, persona, candidates)?;
    tape.cross_entropy(logits, gold)
}

/// Per-epoch training record.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_r1: f64,
    pub valid_mrr: f64,
    /// Mean loss of every optimizer step in the epoch, in order.
    pub step_losses: Vec<f64>,
}

impl EpochMetrics {
    pub fn log_line(&self) -> String {
        format!(
            "epoch={} train_loss={:.6} valid_r1={:.6} valid_mrr={:.6}",
            self.epoch, self.train_loss, self.valid_r1, self.valid_mrr
        )
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters with the best validation R@1 (the initialization on ties with it).
    pub checkpoint: Checkpoint,
    pub best_epoch: usize,
    pub initial_valid: MetricsReport,
    pub history: Vec<EpochMetrics>,
}

/// Builds the word vocabulary from every training-split text.
pub fn build_vocabulary(train: &[ConversationRecord], min_freq: usize) -> Vocabulary {
    let texts = train.iter().flat_map(|r| {
        r.context.iter().chain(&r.persona).chain(std::iter::once(&r.response)).map(String::as_str)
    });
    Vocabulary::build(texts, min_freq)
}

struct Example<'a> {
    record: &'a ConversationRecord,
    context: PreparedSequence,
    gold: usize,
}

pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(dataset, config, |_| {})
}

/// Trains with per-epoch negative resampling and keeps the parameters with
/// the best validation R@1. `progress` sees every epoch's metrics.
pub fn train_with_progress(
    dataset: &Dataset,
    config: &TrainConfig,
    mut progress: impl FnMut(&EpochMetrics),
) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::InvalidInput("training split is empty".into()));
    }
    if dataset.valid.is_empty() {
        return Err(Error::InvalidInput("validation split is empty".into()));
    }
    let vocab = build_vocabulary(&dataset.train, config.min_freq);
    let encoder = config.encoder_config(vocab.len());
    let mut store = ParamStore::<f32>::new();
    let model = CoBert::init(encoder.clone(), config.ablation, &mut store, seed::derive(config.seed, "init", &[]))?;
    let featurizer = Featurizer {
        vocab: &vocab,
        max_positions: encoder.max_positions,
        context_cap: config.context_cap,
        persona_cap: config.persona_cap,
    };

    let pool = ResponsePool::from_records(&dataset.train);
    if pool.len() <= config.negatives {
        return Err(Error::Config(format!(
            "{} distinct training responses cannot supply {} negatives",
            pool.len(),
            config.negatives
        )));
    }
    let pool_seqs = featurizer.responses(pool.texts())?;
    let examples: Vec<Example> = dataset
        .train
        .iter()
        .map(|r| {
            Ok(Example {
                record: r,
                context: featurizer.context(r)?,
                gold: pool.position(&r.response).expect("response in pool"),
            })
        })
        .collect::<Result<_>>()?;

    let valid_pool = ResponsePool::from_records(&dataset.valid);
    let valid_sets = build_candidate_sets(
        &dataset.valid,
        &valid_pool,
        config.valid_candidates,
        seed::derive(config.seed, "valid-candidates", &[]),
    )?;
    let validate = |store: &ParamStore<f32>| -> Result<MetricsReport> {
        let scorer = super::Scorer { model: model.clone(), params: store, featurizer };
        Ok(rank_and_score(&scorer, &dataset.valid, &valid_sets, "")?.0)
    };

    let snapshot = |store: &ParamStore<f32>, steps: u64, epoch: usize| Checkpoint {
        encoder: encoder.clone(),
        ablation: config.ablation,
        train: config.clone(),
        vocab: vocab.clone(),
        params: store.clone(),
        steps,
        epoch,
    };

    let initial_valid = validate(&store)?;
    let mut best = (initial_valid.r1, snapshot(&store, 0, 0));
    let mut adam = Adam::new(&store);
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..examples.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut seed::rng(config.seed, "shuffle", &[epoch as u64]));
        let mut step_losses = Vec::new();
        for batch in order.chunks(config.batch_size) {
            let step = adam.steps() + 1;
            let results: Vec<Result<(f64, Gradients<f32>)>> = batch
                .par_iter()
                .map(|&i| {
                    let ex = &examples[i];
                    let negs = negative_indices(ex.record, &pool, config.negatives, config.seed, epoch as u64)?;
                    let mut cands = Vec::with_capacity(negs.len() + 1);
                    cands.push(pool_seqs[ex.gold].clone());
                    cands.extend(negs.iter().map(|&j| pool_seqs[j].clone()));
                    let order = PersonaOrder::Shuffled(seed::derive(
                        config.seed,
                        "persona",
                        &[seed::key(&ex.record.id), epoch as u64],
                    ));
                    let persona = featurizer.persona(&ex.record.persona, order);
                    let mut tape = Tape::new();
                    let loss = batch_loss(&model, &mut tape, &store, &ex.context, &persona, &cands, 0)?;
                    Ok((tape.scalar(loss).widen(), tape.backward(loss)?))
                })
                .collect();
            let mut total = 0.0;
            let mut grads = Gradients::empty(store.len());
            for r in results {
                let (loss, g) = r.map_err(|e| match e {
                    Error::Numeric(_) => Error::Diverged { epoch, step: step as usize, loss: f64::NAN },
                    other => other,
                })?;
                total += loss;
                grads.merge(g);
            }
            let mean = total / batch.len() as f64;
            if !mean.is_finite() || !grads.is_finite() {
                return Err(Error::Diverged { epoch, step: step as usize, loss: mean });
            }
            grads.scale(1.0 / batch.len() as f32);
            clip_global_norm(&mut grads, config.clip_norm);
            adam.step(&mut store, &grads, config.learning_rate);
            step_losses.push(mean);
        }
        let valid = validate(&store)?;
        let metrics = EpochMetrics {
            epoch,
            train_loss: step_losses.iter().sum::<f64>() / step_losses.len() as f64,
            valid_r1: valid.r1,
            valid_mrr: valid.mrr,
            step_losses,
        };
        if valid.r1 > best.0 {
            best = (valid.r1, snapshot(&store, adam.steps(), epoch));
        }
        progress(&metrics);
        history.push(metrics);
    }
    let best_epoch = best.1.epoch;
    Ok(TrainOutcome { checkpoint: best.1, best_epoch, initial_valid, history })
}
