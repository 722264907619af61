use cobert::corpus::{generate_synthetic, ConversationRecord, Split, SyntheticConfig};
use cobert::encoder::{EncoderConfig, PersonaOrder, Vocabulary};
use cobert::evaluator::ResponsePool;
use cobert::matcher::{AblationConfig, CoBert};
use cobert::numerics::{grad_check, Gradients, Matrix, ParamStore, Tape};
use cobert::trainer::{batch_loss, sample_negatives, train, Adam, Checkpoint, Featurizer, TrainConfig};
use cobert::{seed, Error};

fn record(id: &str, response: &str) -> ConversationRecord {
    ConversationRecord {
        id: id.into(),
        thread_id: id.into(),
        domain: "d".into(),
        context: vec!["how was the hike today".into(), "it rained a lot".into()],
        context_speakers: vec!["a".into(), "b".into()],
        persona: vec!["i love hiking with my dog".into(), "i live near the mountains".into()],
        response: response.into(),
        respondent: "c".into(),
        split: Split::Train,
    }
}

fn small_data(coupling: f64, seed: u64) -> cobert::corpus::Dataset {
    let cfg = SyntheticConfig { n_train: 80, n_valid: 30, n_test: 30, coupling, ..SyntheticConfig::default() };
    generate_synthetic(&cfg, seed).unwrap()
}

fn tiny_train_config(seed: u64, epochs: usize) -> TrainConfig {
    TrainConfig { epochs, seed, d_model: 8, heads: 2, ff_width: 16, negatives: 5, batch_size: 8, ..TrainConfig::default() }
}

#[test]
fn negatives_are_distinct_non_gold_and_deterministic() {
    let texts: Vec<String> = (0..40).map(|i| format!("reply {i}")).collect();
    let pool = ResponsePool::new(texts.iter().map(String::as_str));
    let ex = record("e1", "reply 7");
    let negs = sample_negatives(&ex, &pool, 15, 3, 1).unwrap();
    assert_eq!(negs.len(), 15);
    assert!(!negs.contains(&"reply 7".to_string()));
    let mut d = negs.clone();
    d.sort();
    d.dedup();
    assert_eq!(d.len(), 15);
    assert_eq!(sample_negatives(&ex, &pool, 15, 3, 1).unwrap(), negs);
    assert_ne!(sample_negatives(&ex, &pool, 15, 3, 2).unwrap(), negs);

    let two = ResponsePool::new(["gold", "r1"]);
    assert_eq!(sample_negatives(&record("e", "gold"), &two, 1, 0, 0).unwrap(), ["r1"]);
    assert!(matches!(sample_negatives(&record("e", "gold"), &two, 2, 0, 0), Err(Error::Config(_))));
}

fn toy_model<T: cobert::Scalar>(store: &mut ParamStore<T>, seed: u64, vocab: usize) -> CoBert {
    let enc = EncoderConfig { vocab_size: vocab, d_model: 4, layers: 1, heads: 2, ff_width: 8, max_positions: 16, segments: 2 };
    CoBert::init(enc, AblationConfig::full(), store, seed).unwrap()
}

#[test]
fn identical_candidates_give_uniform_loss() {
    let vocab = Vocabulary::build(["how was the hike today it rained a lot i love hiking with my dog great fun"], 1);
    let mut store = ParamStore::<f64>::new();
    let model = toy_model(&mut store, 1, vocab.len());
    let f = Featurizer { vocab: &vocab, max_positions: 16, context_cap: 6, persona_cap: 10 };
    let ex = record("e", "great fun");
    let ctx = f.context(&ex).unwrap();
    let persona = f.persona(&ex.persona, PersonaOrder::Given);
    let cands = vec![f.response("great fun").unwrap(); 16];
    let mut tape = Tape::new();
    let loss = batch_loss(&model, &mut tape, &store, &ctx, &persona, &cands, 3).unwrap();
    assert!((tape.scalar(loss) - 16f64.ln()).abs() < 1e-12);
    assert!(batch_loss(&model, &mut Tape::new(), &store, &ctx, &persona, &cands, 16).is_err());
}

#[test]
fn loss_falls_monotonically_as_gold_score_rises() {
    let mut last = f64::INFINITY;
    for s in [0.0, 1.0, 2.0, 5.0, 10.0, 30.0] {
        let mut tape = Tape::<f64>::new();
        let logits = tape.constant(Matrix::row_vector(vec![s, 0.0, 0.0, 0.0])).unwrap();
        let l = tape.cross_entropy(logits, 0).unwrap();
        let v = tape.scalar(l);
        assert!(v < last && v >= 0.0);
        last = v;
    }
    assert!(last < 1e-12);
}

#[test]
fn batch_loss_gradients_match_finite_differences() {
    let vocab = Vocabulary::build(["how was the hike today it rained a lot i love hiking with my dog great fun sounds wet"], 1);
    let f = Featurizer { vocab: &vocab, max_positions: 16, context_cap: 6, persona_cap: 10 };
    let ex = record("e", "great fun");
    let ctx = f.context(&ex).unwrap();
    let persona = f.persona(&ex.persona, PersonaOrder::Given);
    let cands = f.responses(&["great fun", "sounds wet", "my dog"]).unwrap();
    for s in 0..3 {
        let mut store = ParamStore::<f64>::new();
        let model = toy_model(&mut store, s, vocab.len());
        let report = grad_check(|tape, st| batch_loss(&model, tape, st, &ctx, &persona, &cands, 1), &store, 1e-5).unwrap();
        assert!(report.max_rel_error < 1e-4, "seed {s}: {report:?}");
    }
}

#[test]
fn zero_learning_rate_leaves_parameters() {
    let mut store = ParamStore::<f32>::new();
    let model = toy_model(&mut store, 2, 20);
    let before = store.clone();
    let mut grads = Gradients::empty(store.len());
    let vocab = Vocabulary::build(["how was the hike today it rained a lot i love hiking with my dog great fun"], 1);
    let f = Featurizer { vocab: &vocab, max_positions: 16, context_cap: 6, persona_cap: 10 };
    let ex = record("e", "great fun");
    let mut tape = Tape::new();
    let cands = f.responses(&["great fun", "my dog"]).unwrap();
    let loss = batch_loss(&model, &mut tape, &store, &f.context(&ex).unwrap(), &f.persona(&ex.persona, PersonaOrder::Given), &cands, 0).unwrap();
    grads.merge(tape.backward(loss).unwrap());
    assert!(grads.global_norm() > 0.0);
    let mut adam = Adam::new(&store);
    adam.step(&mut store, &grads, 0.0);
    assert_eq!(store, before);
    adam.step(&mut store, &grads, 1e-3);
    assert_ne!(store, before);
}

#[test]
fn zero_epochs_returns_initialization() {
    let ds = small_data(1.0, 3);
    let cfg = tiny_train_config(5, 0);
    let out = train(&ds, &cfg).unwrap();
    assert!(out.history.is_empty());
    assert_eq!(out.checkpoint.steps, 0);
    let mut fresh = ParamStore::<f32>::new();
    CoBert::init(out.checkpoint.encoder.clone(), cfg.ablation, &mut fresh, seed::derive(cfg.seed, "init", &[])).unwrap();
    assert_eq!(out.checkpoint.params, fresh);
}

#[test]
fn same_seed_same_parameters_and_checkpoint_round_trip() {
    let ds = small_data(1.0, 4);
    let cfg = tiny_train_config(9, 2);
    let a = train(&ds, &cfg).unwrap();
    let b = train(&ds, &cfg).unwrap();
    assert_eq!(a.checkpoint.to_bytes().unwrap(), b.checkpoint.to_bytes().unwrap());
    assert_eq!(a.history.len(), 2);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    a.checkpoint.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    assert_eq!(loaded, a.checkpoint);
    let ex = &ds.test[0];
    let cands: Vec<&str> = ds.test.iter().take(5).map(|r| r.response.as_str()).collect();
    let s1 = a.checkpoint.scorer(6, 10).unwrap().score(ex, &ex.persona, &cands).unwrap();
    let s2 = loaded.scorer(6, 10).unwrap().score(ex, &ex.persona, &cands).unwrap();
    assert_eq!(s1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), s2.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
}

#[test]
fn corrupted_checkpoints_are_rejected() {
    let ds = small_data(1.0, 4);
    let ckpt = train(&ds, &tiny_train_config(1, 0)).unwrap().checkpoint;
    let bytes = ckpt.to_bytes().unwrap();
    assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    assert!(Checkpoint::from_bytes(b"not a checkpoint").is_err());
    let mut other = bytes.clone();
    other[0] = b'X';
    assert!(Checkpoint::from_bytes(&other).is_err());
}

#[test]
fn first_epoch_loss_decreases() {
    for s in [1u64, 2, 3] {
        let ds = generate_synthetic(&SyntheticConfig::default(), s).unwrap();
        let out = train(&ds, &TrainConfig { epochs: 1, seed: s, ..TrainConfig::default() }).unwrap();
        let steps = &out.history[0].step_losses;
        let k = steps.len() / 5;
        let head = steps[..k].iter().sum::<f64>() / k as f64;
        let tail = steps[steps.len() - k..].iter().sum::<f64>() / k as f64;
        assert!(tail < head, "seed {s}: {head} -> {tail}");
    }
}

#[test]
fn invalid_configs_and_inputs() {
    let ds = small_data(1.0, 1);
    assert!(matches!(train(&ds, &TrainConfig { negatives: 0, ..tiny_train_config(0, 1) }), Err(Error::Config(_))));
    assert!(matches!(train(&ds, &TrainConfig { negatives: 500, ..tiny_train_config(0, 1) }), Err(Error::Config(_))));
    let mut no_valid = ds.clone();
    no_valid.valid.clear();
    assert!(matches!(train(&no_valid, &tiny_train_config(0, 1)), Err(Error::InvalidInput(_))));
}

#[test]
fn divergence_is_reported() {
    let ds = small_data(1.0, 2);
    let cfg = TrainConfig { learning_rate: 1e30, clip_norm: 1e30, ..tiny_train_config(3, 3) };
    match train(&ds, &cfg) {
        Err(Error::Diverged { .. }) => {}
        other => panic!("expected divergence, got {:?}", other.map(|o| o.history)),
    }
}
