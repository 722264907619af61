use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::RunConfig;
use crate::corpus::{build_corpus, generate_synthetic, read_jsonl, responses_by_speaker, ConversationRecord, Dataset, Split, ThreadNode};
use crate::error::{Error, Result};
use crate::evaluator::{
    build_candidate_sets, hit_differences, persona_improvement, rank_and_score, seen_unseen_partition, sign_flip_test,
    subset_report, tfidf_style_similarity, CandidateSet, MetricsReport, ResponsePool,
};
use crate::matcher::AblationConfig;
use crate::seed;
use crate::trainer::{train_with_progress, Checkpoint};

/// Progress sink for human-readable status lines.
pub type Log<'a> = &'a mut dyn FnMut(&str);

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let out = cfg.path("out")?;
    fs::create_dir_all(&out)?;
    Ok(out)
}

/// Writes the canonical configuration and its fingerprint next to a run's outputs.
fn write_run_config(cfg: &RunConfig, dir: &Path) -> Result<()> {
    fs::write(dir.join("run_config.txt"), format!("{}fingerprint={}\n", cfg.canonical(), cfg.fingerprint()))?;
    Ok(())
}

/// Candidate sets over the test split, sampled from test responses.
fn test_candidates(cfg: &RunConfig, test: &[ConversationRecord]) -> Result<Vec<CandidateSet>> {
    if test.is_empty() {
        return Err(Error::InvalidInput("test split is empty".into()));
    }
    let pool = ResponsePool::from_records(test);
    build_candidate_sets(test, &pool, cfg.get("candidates")?, seed::derive(cfg.get("seed")?, "eval-candidates", &[]))
}

/// `corpus`: thread file → dataset directory plus a rejection summary.
pub fn corpus(cfg: &RunConfig, log: Log<'_>) -> Result<String> {
    let threads = cfg.path("threads")?;
    let out = out_dir(cfg)?;
    let nodes: Vec<ThreadNode> = read_jsonl(&threads)?;
    log(&format!("read {} nodes from {}", nodes.len(), threads.display()));
    let (ds, report) = build_corpus(nodes, &cfg.get::<String>("domain")?, cfg.get("persona_store_cap")?, cfg.get("seed")?)?;
    ds.save(&out)?;
    let text = format!("{}fingerprint={}\n", report.to_key_values(), cfg.fingerprint());
    fs::write(out.join("corpus_report.txt"), &text)?;
    write_run_config(cfg, &out)?;
    Ok(text)
}

/// `synth`: generator settings → dataset directory.
pub fn synth(cfg: &RunConfig, log: Log<'_>) -> Result<String> {
    let out = out_dir(cfg)?;
    let ds = generate_synthetic(&cfg.synthetic_config()?, cfg.get("seed")?)?;
    ds.save(&out)?;
    write_run_config(cfg, &out)?;
    log(&format!("wrote synthetic dataset to {}", out.display()));
    Ok(format!(
        "train={}\nvalid={}\ntest={}\nspeakers={}\nfingerprint={}\n",
        ds.train.len(),
        ds.valid.len(),
        ds.test.len(),
        ds.personas.len(),
        cfg.fingerprint()
    ))
}

fn checkpoint_path(cfg: &RunConfig) -> Result<PathBuf> {
    match cfg.optional_path("checkpoint") {
        Some(p) => Ok(p),
        None => Ok(out_dir(cfg)?.join("model.ckpt")),
    }
}

/// `train`: dataset → checkpoint and per-epoch log.
pub fn train(cfg: &RunConfig, log: Log<'_>) -> Result<String> {
    let ds = Dataset::load(&cfg.path("data")?)?;
    let tc = cfg.train_config()?;
    let outcome = train_with_progress(&ds, &tc, |m| log(&m.log_line()))?;
    let ckpt_path = checkpoint_path(cfg)?;
    if let Some(parent) = ckpt_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    outcome.checkpoint.save(&ckpt_path)?;
    let mut text = format!("fingerprint={}\ninitial_valid_r1={:.6}\n", cfg.fingerprint(), outcome.initial_valid.r1);
    for m in &outcome.history {
        let _ = writeln!(text, "{}", m.log_line());
    }
    let _ = writeln!(text, "best_epoch={}", outcome.best_epoch);
    if let Some(out) = cfg.optional_path("out") {
        fs::create_dir_all(&out)?;
        fs::write(out.join("train_log.txt"), &text)?;
        write_run_config(cfg, &out)?;
    }
    log(&format!("saved checkpoint to {}", ckpt_path.display()));
    Ok(text)
}

#[derive(Serialize)]
struct EvalFile<'a> {
    overall: &'a MetricsReport,
    seen: Option<MetricsReport>,
    unseen: Option<MetricsReport>,
    seen_count: usize,
    unseen_count: usize,
    config: String,
}

/// `eval`: checkpoint + test split → metrics (overall and by seen/unseen respondent).
pub fn eval(cfg: &RunConfig, log: Log<'_>) -> Result<String> {
    let ckpt = Checkpoint::load(&cfg.path("checkpoint")?)?;
    let ds = Dataset::load(&cfg.path("data")?)?;
    let sets = test_candidates(cfg, &ds.test)?;
    let scorer = ckpt.scorer(cfg.get("nx")?, cfg.get("np")?)?;
    let fp = cfg.fingerprint();
    log(&format!("scoring {} test examples", ds.test.len()));
    let (report, ranks) = rank_and_score(&scorer, &ds.test, &sets, &fp)?;
    let part = seen_unseen_partition(&ds.test, &ds.train);
    let sub = |idx: &[usize]| if idx.is_empty() { Ok(None) } else { subset_report(&ranks, idx, &fp).map(Some) };
    let (seen, unseen) = (sub(&part.seen)?, sub(&part.unseen)?);
    let mut text = report.to_key_values();
    let _ = writeln!(text, "seen_count={}\nunseen_count={}", part.seen.len(), part.unseen.len());
    for (name, r) in [("seen", &seen), ("unseen", &unseen)] {
        if let Some(r) = r {
            let _ = writeln!(text, "{name}.r1={:.6}\n{name}.mrr={:.6}", r.r1, r.mrr);
        }
    }
    if let Some(out) = cfg.optional_path("out") {
        fs::create_dir_all(&out)?;
        fs::write(out.join("metrics.txt"), &text)?;
        let file = EvalFile {
            overall: &report,
            seen,
            unseen,
            seen_count: part.seen.len(),
            unseen_count: part.unseen.len(),
            config: cfg.canonical(),
        };
        fs::write(out.join("metrics.json"), serde_json::to_string_pretty(&file)? + "\n")?;
        write_run_config(cfg, &out)?;
    }
    Ok(text)
}

/// `ablate`: trains and evaluates one model per configuration.
pub fn ablate(cfg: &RunConfig, log: Log<'_>) -> Result<String> {
    let ds = Dataset::load(&cfg.path("data")?)?;
    let sets = test_candidates(cfg, &ds.test)?;
    let names: Vec<String> = cfg.list("configs")?;
    if names.is_empty() {
        return Err(Error::Config("configs lists no ablations".into()));
    }
    let fp = cfg.fingerprint();
    let mut rows = Vec::new();
    for name in &names {
        let mut tc = cfg.train_config()?;
        tc.ablation = name.parse::<AblationConfig>()?;
        log(&format!("training {name} ({})", tc.ablation));
        let outcome = train_with_progress(&ds, &tc, |m| log(&format!("{name}: {}", m.log_line())))?;
        let scorer = outcome.checkpoint.scorer(tc.context_cap, tc.persona_cap)?;
        let (report, _) = rank_and_score(&scorer, &ds.test, &sets, &fp)?;
        rows.push((name.clone(), report));
    }
    let mut tsv = format!("{}\n", MetricsReport::TSV_HEADER.replacen("name", "config", 1));
    for (name, r) in &rows {
        let _ = writeln!(tsv, "{}", r.tsv_row(name));
    }
    if let Some(out) = cfg.optional_path("out") {
        fs::create_dir_all(&out)?;
        fs::write(out.join("ablation.tsv"), &tsv)?;
        let json: Vec<_> = rows.iter().map(|(n, r)| serde_json::json!({ "config": n, "metrics": r })).collect();
        fs::write(out.join("ablation.json"), serde_json::to_string_pretty(&json)? + "\n")?;
        write_run_config(cfg, &out)?;
    }
    Ok(tsv + &format!("fingerprint={fp}\n"))
}

/// `analyze`: TF-IDF style similarity over the dataset and, with a
/// checkpoint, the persona-cap sweep with a paired permutation test.
pub fn analyze(cfg: &RunConfig, log: Log<'_>) -> Result<String> {
    let ds = Dataset::load(&cfg.path("data")?)?;
    let seed: u64 = cfg.get("seed")?;
    let style = tfidf_style_similarity(&responses_by_speaker(ds.all()), cfg.get("runs")?, seed)?;
    let mut text = format!(
        "style.cross_speaker={:.6}\nstyle.random_mean={:.6}\nstyle.random_sd={:.6}\n",
        style.cross_speaker, style.random_mean, style.random_sd
    );
    let style_tsv = format!(
        "measure\tsimilarity\tsd\ncross_speaker\t{:.6}\t0.000000\nrandom_split\t{:.6}\t{:.6}\n",
        style.cross_speaker, style.random_mean, style.random_sd
    );
    let mut sweep_tsv = None;
    if let Some(path) = cfg.optional_path("checkpoint") {
        let ckpt = Checkpoint::load(&path)?;
        let sets = test_candidates(cfg, &ds.test)?;
        let caps: Vec<usize> = cfg.list("np_sweep")?;
        log(&format!("persona sweep over {caps:?}"));
        let sweep = persona_improvement(&ckpt, &ds.test, &sets, &caps, cfg.get("nx")?, &cfg.fingerprint())?;
        let (lo, hi) = (&sweep.rows[0], &sweep.rows[sweep.rows.len() - 1]);
        let test = sign_flip_test(&hit_differences(&hi.ranks, &lo.ranks), cfg.get("permutation_rounds")?, seed)?;
        for row in &sweep.rows {
            let _ = writeln!(text, "persona.np{}.r1={:.6}", row.persona_cap, row.report.r1);
        }
        let _ = writeln!(
            text,
            "persona.delta={:.6}\npersona.band_low={:.6}\npersona.band_high={:.6}\npersona.p_value={:.6}",
            sweep.delta, test.band.0, test.band.1, test.p_value
        );
        sweep_tsv = Some(sweep.to_tsv());
    }
    let _ = writeln!(text, "fingerprint={}", cfg.fingerprint());
    if let Some(out) = cfg.optional_path("out") {
        fs::create_dir_all(&out)?;
        fs::write(out.join("analysis.txt"), &text)?;
        fs::write(out.join("style.tsv"), &style_tsv)?;
        if let Some(tsv) = &sweep_tsv {
            fs::write(out.join("persona_sweep.tsv"), tsv)?;
        }
        write_run_config(cfg, &out)?;
    }
    Ok(text)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(fs::read_to_string(path)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

/// `respond`: ranks a response pool for one context and persona.
///
/// The context file holds one utterance per line, oldest first; lines
/// starting with `> ` are the respondent's own earlier turns. The persona
/// file holds one sentence per line and the pool file one candidate per line.
pub fn respond(cfg: &RunConfig, _log: Log<'_>) -> Result<String> {
    let ckpt = Checkpoint::load(&cfg.path("checkpoint")?)?;
    let pool = read_lines(&cfg.path("pool")?)?;
    if pool.is_empty() {
        return Err(Error::Usage("response pool is empty".into()));
    }
    let lines = read_lines(&cfg.path("context")?)?;
    if lines.is_empty() {
        return Err(Error::Usage("context is empty".into()));
    }
    let persona = match cfg.optional_path("persona") {
        Some(p) => read_lines(&p)?,
        None => Vec::new(),
    };
    let (context, speakers): (Vec<String>, Vec<String>) = lines
        .iter()
        .map(|l| match l.strip_prefix("> ") {
            Some(own) => (own.to_string(), "respondent".to_string()),
            None => (l.clone(), "speaker".to_string()),
        })
        .unzip();
    let record = ConversationRecord {
        id: "respond".into(),
        thread_id: "respond".into(),
        domain: String::new(),
        context,
        context_speakers: speakers,
        persona: persona.clone(),
        response: String::new(),
        respondent: "respondent".into(),
        split: Split::Test,
    };
    let scorer = ckpt.scorer(cfg.get("nx")?, cfg.get("np")?)?;
    let scores = scorer.score(&record, &persona, &pool)?;
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut text = String::from("rank\tscore\tresponse\n");
    for (rank, &i) in order.iter().take(cfg.get::<usize>("top_k")?.max(1)).enumerate() {
        let _ = writeln!(text, "{}\t{:.6}\t{}", rank + 1, scores[i], pool[i]);
    }
    Ok(text)
}
