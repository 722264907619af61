//! Persona sentence extraction rules.
//!
//! A sentence is accepted when all five rules pass:
//! 1. it has between 4 and 20 whitespace words;
//! 2. its first word is `i` (or one of `i'm`, `i've`, `i'd`, `i'll`);
//! 3. it has at least one verb;
//! 4. it has at least one noun or adjective;
//! 5. it has at least one content word (a word absent from the stop-word list).
//!
//! Parts of speech come from the bundled lexicon (`data/lexicon.tsv`). Words
//! missing from it are tagged by suffix: `-ing`, `-ed`, `-ize`, `-ise`, `-ify`
//! mark verbs; `-ful`, `-ous`, `-ive`, `-able`, `-ible`, `-less`, `-ish`, `-ical`
//! mark adjectives; any other alphabetic non-stop-word of three or more letters
//! is taken as a noun.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use super::normalize::word_count;

pub const STOPWORDS: &str = include_str!("../../data/stopwords.txt");
pub const LEXICON: &str = include_str!("../../data/lexicon.tsv");

pub const MIN_WORDS: usize = 4;
pub const MAX_WORDS: usize = 20;
pub const DEFAULT_PERSONA_CAP: usize = 100;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PosTags {
    pub verb: bool,
    pub noun: bool,
    pub adjective: bool,
}

struct Lexicon {
    stop: HashSet<&'static str>,
    pos: HashMap<&'static str, PosTags>,
}

fn lexicon() -> &'static Lexicon {
    static L: OnceLock<Lexicon> = OnceLock::new();
    L.get_or_init(|| {
        let stop = data_lines(STOPWORDS).collect();
        let pos = data_lines(LEXICON)
            .filter_map(|l| l.split_once('\t'))
            .map(|(w, tags)| {
                let t = PosTags { verb: tags.contains('V'), noun: tags.contains('N'), adjective: tags.contains('A') };
                (w, t)
            })
            .collect();
        Lexicon { stop, pos }
    })
}

fn data_lines(src: &'static str) -> impl Iterator<Item = &'static str> {
    src.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn strip(word: &str) -> &str {
    word.trim_matches(|c: char| matches!(c, '.' | ',' | '!' | '?' | '\''))
}

pub fn is_stopword(word: &str) -> bool {
    lexicon().stop.contains(strip(word))
}

pub fn pos_tags(word: &str) -> PosTags {
    let w = strip(word);
    let lex = lexicon();
    if let Some(&t) = lex.pos.get(w) {
        return t;
    }
    if lex.stop.contains(w) || !w.chars().all(|c| c.is_ascii_alphabetic()) {
        return PosTags::default();
    }
    let ends = |sfx: &[&str]| sfx.iter().any(|s| w.len() > s.len() + 1 && w.ends_with(s));
    if ends(&["ing", "ed", "ize", "ise", "ify"]) {
        PosTags { verb: true, ..PosTags::default() }
    } else if ends(&["ful", "ous", "ive", "able", "ible", "less", "ish", "ical"]) {
        PosTags { adjective: true, ..PosTags::default() }
    } else if w.len() >= 3 {
        PosTags { noun: true, ..PosTags::default() }
    } else {
        PosTags::default()
    }
}

/// Outcome of each rule for one candidate sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PersonaRuleReport {
    pub sentence: String,
    pub word_count: bool,
    pub first_word_i: bool,
    pub has_verb: bool,
    pub has_noun_or_adjective: bool,
    pub has_content_word: bool,
}

impl PersonaRuleReport {
    pub fn accepted(&self) -> bool {
        self.word_count && self.first_word_i && self.has_verb && self.has_noun_or_adjective && self.has_content_word
    }

    /// 1-based index of the first failing rule.
    pub fn first_failure(&self) -> Option<usize> {
        [self.word_count, self.first_word_i, self.has_verb, self.has_noun_or_adjective, self.has_content_word]
            .iter()
            .position(|ok| !ok)
            .map(|i| i + 1)
    }
}

pub fn check_sentence(sentence: &str) -> PersonaRuleReport {
    let words: Vec<&str> = sentence.split_whitespace().collect();
    let n = word_count(sentence);
    let tags: Vec<PosTags> = words.iter().map(|w| pos_tags(w)).collect();
    PersonaRuleReport {
        sentence: sentence.to_string(),
        word_count: (MIN_WORDS..=MAX_WORDS).contains(&n),
        first_word_i: words.first().is_some_and(|w| matches!(*w, "i" | "i'm" | "i've" | "i'd" | "i'll")),
        has_verb: tags.iter().any(|t| t.verb),
        has_noun_or_adjective: tags.iter().any(|t| t.noun || t.adjective),
        has_content_word: words.iter().any(|w| !strip(w).is_empty() && !is_stopword(w)),
    }
}

/// Applies the five rules to already split and normalized sentences, keeping
/// at most `cap` accepted sentences in document order.
pub fn extract_persona_sentences(sentences: &[String], cap: usize) -> (Vec<String>, Vec<PersonaRuleReport>) {
    let reports: Vec<PersonaRuleReport> = sentences.iter().map(|s| check_sentence(s)).collect();
    let accepted = reports.iter().filter(|r| r.accepted()).map(|r| r.sentence.clone()).take(cap).collect();
    (accepted, reports)
}
