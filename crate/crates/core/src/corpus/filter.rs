use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use super::normalize::{normalize, split_sentences, word_count};
use super::persona::extract_persona_sentences;
use super::ConversationRecord;
use super::ThreadNode;

pub const MAX_CONTEXT_TURNS: usize = 6;
pub const POST_WORDS: (usize, usize) = (2, 90);
pub const COMMENT_WORDS: (usize, usize) = (2, 30);

/// Accepted persona sentences per author.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PersonaIndex {
    by_author: BTreeMap<String, Vec<String>>,
}

impl PersonaIndex {
    /// Collects persona sentences from everything each author wrote, in input
    /// order, dropping exact duplicates and keeping at most `cap` per author.
    pub fn build(nodes: &[ThreadNode], cap: usize) -> Self {
        let mut texts: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for n in nodes {
            texts.entry(n.author.clone()).or_default().extend(split_sentences(&n.body));
        }
        let by_author = texts
            .into_iter()
            .map(|(author, sentences)| {
                let mut seen = HashSet::new();
                let unique: Vec<String> = sentences.into_iter().filter(|s| seen.insert(s.clone())).collect();
                (author, extract_persona_sentences(&unique, cap).0)
            })
            .collect();
        PersonaIndex { by_author }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (String, Vec<String>)>) -> Self {
        PersonaIndex { by_author: entries.into_iter().collect() }
    }

    pub fn get(&self, author: &str) -> &[String] {
        self.by_author.get(author).map_or(&[], Vec::as_slice)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.by_author.iter().map(|(a, p)| (a.as_str(), p.as_slice()))
    }

    /// Removes every persona sentence that equals a sentence of one of
    /// `responses` after normalization. Returns how many sentences were removed.
    pub fn redact<'a>(&mut self, responses: impl IntoIterator<Item = &'a str>) -> usize {
        let banned: HashSet<String> = responses.into_iter().flat_map(split_sentences).collect();
        let mut removed = 0;
        for sentences in self.by_author.values_mut() {
            let before = sentences.len();
            sentences.retain(|s| !banned.contains(s));
            removed += before - sentences.len();
        }
        removed
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rejection {
    PostLength,
    CommentLength,
    SameSpeaker,
    MissingPersona,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rejection::PostLength => "post_length",
            Rejection::CommentLength => "comment_length",
            Rejection::SameSpeaker => "same_speaker",
            Rejection::MissingPersona => "missing_persona",
        })
    }
}

/// Normalizes, truncates and filters one flattened conversation.
///
/// The context keeps its [`MAX_CONTEXT_TURNS`] most recent utterances. Length
/// bounds apply to every kept utterance and the response: the root post (only
/// present when nothing was truncated) must have 2–90 words, comments 2–30.
/// The first kept speaker must differ from the respondent, and every speaker
/// must have at least one persona sentence. The respondent's persona is attached.
pub fn clean_and_filter(
    record: &ConversationRecord,
    personas: &PersonaIndex,
) -> Result<ConversationRecord, Rejection> {
    let start = record.context.len().saturating_sub(MAX_CONTEXT_TURNS);
    let context: Vec<String> = record.context[start..].iter().map(|u| normalize(u)).collect();
    let speakers: Vec<String> = record.context_speakers[start..].to_vec();
    let response = normalize(&record.response);

    let within = |text: &str, (lo, hi): (usize, usize)| (lo..=hi).contains(&word_count(text));
    for (i, u) in context.iter().enumerate() {
        if start == 0 && i == 0 {
            if !within(u, POST_WORDS) {
                return Err(Rejection::PostLength);
            }
        } else if !within(u, COMMENT_WORDS) {
            return Err(Rejection::CommentLength);
        }
    }
    if !within(&response, COMMENT_WORDS) {
        return Err(Rejection::CommentLength);
    }
    if speakers.first().is_some_and(|s| *s == record.respondent) {
        return Err(Rejection::SameSpeaker);
    }
    if speakers.iter().chain(std::iter::once(&record.respondent)).any(|s| personas.get(s).is_empty()) {
        return Err(Rejection::MissingPersona);
    }
    Ok(ConversationRecord {
        context,
        context_speakers: speakers,
        response,
        persona: personas.get(&record.respondent).to_vec(),
        ..record.clone()
    })
}

/// Thread ids that appear in more than one split.
pub fn thread_split_leaks(records: &[ConversationRecord]) -> Vec<String> {
    let mut splits: HashMap<&str, HashSet<super::Split>> = HashMap::new();
    for r in records {
        splits.entry(r.thread_id.as_str()).or_default().insert(r.split);
    }
    let mut leaks: Vec<String> = splits.into_iter().filter(|(_, s)| s.len() > 1).map(|(t, _)| t.to_string()).collect();
    leaks.sort();
    leaks
}

/// Persona sentences (across all records) that equal a whole response or
/// one of its sentences.
pub fn persona_leaks(records: &[ConversationRecord]) -> Vec<String> {
    let responses: HashSet<String> = records
        .iter()
        .flat_map(|r| std::iter::once(r.response.clone()).chain(split_sentences(&r.response)))
        .collect();
    let mut leaks: Vec<String> = records
        .iter()
        .flat_map(|r| r.persona.iter())
        .filter(|p| responses.contains(p.as_str()))
        .cloned()
        .collect();
    leaks.sort();
    leaks.dedup();
    leaks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;

    fn index(authors: &[&str]) -> PersonaIndex {
        PersonaIndex::from_entries(authors.iter().map(|a| (a.to_string(), vec![format!("i love my dog {a}")])))
    }

    fn record(turns: &[(&str, &str)], response: (&str, &str)) -> ConversationRecord {
        ConversationRecord {
            id: "t/x".into(),
            thread_id: "t".into(),
            domain: "d".into(),
            context: turns.iter().map(|t| t.1.to_string()).collect(),
            context_speakers: turns.iter().map(|t| t.0.to_string()).collect(),
            persona: vec![],
            response: response.1.into(),
            respondent: response.0.into(),
            split: Split::Train,
        }
    }

    #[test]
    fn rejects_long_post() {
        let post = vec!["word"; 95].join(" ");
        let r = record(&[("a", &post)], ("b", "nice one"));
        assert_eq!(clean_and_filter(&r, &index(&["a", "b"])), Err(Rejection::PostLength));
        let ok_post = vec!["word"; 90].join(" ");
        let r = record(&[("a", &ok_post)], ("b", "nice one"));
        assert!(clean_and_filter(&r, &index(&["a", "b"])).is_ok());
    }

    #[test]
    fn rejects_long_comment_and_short_response() {
        let long = vec!["w"; 31].join(" ");
        let r = record(&[("a", "my post here")], ("b", &long));
        assert_eq!(clean_and_filter(&r, &index(&["a", "b"])), Err(Rejection::CommentLength));
        let r = record(&[("a", "my post here")], ("b", "wow"));
        assert_eq!(clean_and_filter(&r, &index(&["a", "b"])), Err(Rejection::CommentLength));
    }

    #[test]
    fn rejects_same_speaker_and_missing_persona() {
        let r = record(&[("a", "my post here"), ("b", "a reply")], ("a", "thanks friend"));
        assert_eq!(clean_and_filter(&r, &index(&["a", "b"])), Err(Rejection::SameSpeaker));
        let r = record(&[("a", "my post here")], ("b", "thanks friend"));
        assert_eq!(clean_and_filter(&r, &index(&["b"])), Err(Rejection::MissingPersona));
    }

    #[test]
    fn truncates_to_six_turns() {
        let turns: Vec<(String, String)> =
            (0..8).map(|i| (format!("s{}", i % 3), format!("turn number {i}"))).collect();
        let refs: Vec<(&str, &str)> = turns.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let r = record(&refs, ("z", "good point"));
        let out = clean_and_filter(&r, &index(&["s0", "s1", "s2", "z"])).unwrap();
        assert_eq!(out.context.len(), 6);
        assert_eq!(out.context[0], "turn number 2");
        assert_eq!(out.context_speakers[0], "s2");
        assert_eq!(out.persona, ["i love my dog z"]);
    }

    #[test]
    fn redaction_and_audits() {
        let mut idx = PersonaIndex::from_entries([("a".to_string(), vec!["i love my dog".to_string(), "i own a big car".to_string()])]);
        assert_eq!(idx.redact(["I love my dog a lot"].into_iter()), 0);
        assert_eq!(idx.redact(["Wow. I love my DOG!"].into_iter()), 1);
        assert_eq!(idx.get("a"), ["i own a big car"]);

        let mut r1 = record(&[("a", "x y")], ("b", "i own a big car"));
        r1.persona = vec!["i own a big car".into()];
        assert_eq!(persona_leaks(&[r1.clone()]), ["i own a big car"]);
        let mut r2 = r1.clone();
        r2.split = Split::Test;
        assert_eq!(thread_split_leaks(&[r1, r2]), ["t"]);
    }
}
