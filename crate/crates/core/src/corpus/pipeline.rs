use std::collections::BTreeMap;

use super::{
    clean_and_filter, flatten_thread, group_threads, split_by_thread, Dataset, PersonaIndex, Rejection, ThreadNode,
};
use crate::error::Result;

/// Counts reported by [`build_corpus`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusReport {
    pub threads: usize,
    pub malformed_threads: usize,
    pub conversations: usize,
    pub kept: usize,
    pub redacted_persona_sentences: usize,
    pub rejections: BTreeMap<Rejection, usize>,
}

impl CorpusReport {
    pub fn to_key_values(&self) -> String {
        let mut s = format!(
            "threads={}\nmalformed_threads={}\nconversations={}\nkept={}\nredacted_persona_sentences={}\n",
            self.threads, self.malformed_threads, self.conversations, self.kept, self.redacted_persona_sentences
        );
        for r in [Rejection::PostLength, Rejection::CommentLength, Rejection::SameSpeaker, Rejection::MissingPersona] {
            s.push_str(&format!("rejected.{r}={}\n", self.rejections.get(&r).copied().unwrap_or(0)));
        }
        s
    }
}

/// Runs the full thread-to-dataset pipeline: group and flatten threads
/// (skipping malformed ones), build the persona store from every body,
/// redact persona sentences equal to any response, filter, and split by thread 8:1:1.
pub fn build_corpus(nodes: Vec<ThreadNode>, domain: &str, persona_cap: usize, seed: u64) -> Result<(Dataset, CorpusReport)> {
    let mut report = CorpusReport::default();
    let mut personas = PersonaIndex::build(&nodes, persona_cap);
    let mut flat = Vec::new();
    for (_, thread) in group_threads(nodes) {
        report.threads += 1;
        match flatten_thread(&thread, domain) {
            Ok(records) => flat.extend(records),
            Err(_) => report.malformed_threads += 1,
        }
    }
    report.conversations = flat.len();
    report.redacted_persona_sentences = personas.redact(flat.iter().map(|r| r.response.as_str()));

    let mut kept = Vec::new();
    for r in &flat {
        match clean_and_filter(r, &personas) {
            Ok(r) => kept.push(r),
            Err(why) => *report.rejections.entry(why).or_default() += 1,
        }
    }
    report.kept = kept.len();
    split_by_thread(&mut kept, [8, 1, 1], seed);
    let store = personas.entries().filter(|(_, p)| !p.is_empty()).map(|(a, p)| (a.to_string(), p.to_vec())).collect();
    Ok((Dataset::from_records(kept, store), report))
}
