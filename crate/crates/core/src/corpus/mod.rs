//! Thread flattening, persona extraction, filtering, splitting and synthetic corpora.

mod filter;
mod io;
mod normalize;
mod persona;
mod pipeline;
mod record;
mod split;
mod synthetic;
mod thread;

pub use filter::{
    clean_and_filter, persona_leaks, thread_split_leaks, PersonaIndex, Rejection, COMMENT_WORDS, MAX_CONTEXT_TURNS,
    POST_WORDS,
};
pub use io::{read_jsonl, responses_by_speaker, write_jsonl, Dataset};
pub use normalize::{normalize, split_sentences, word_count};
pub use persona::{
    check_sentence, extract_persona_sentences, is_stopword, pos_tags, PersonaRuleReport, PosTags,
    DEFAULT_PERSONA_CAP, LEXICON, MAX_WORDS, MIN_WORDS, STOPWORDS,
};
pub use pipeline::{build_corpus, CorpusReport};
pub use record::{ConversationRecord, PersonaEntry, Split, ThreadNode};
pub use split::split_by_thread;
pub use synthetic::{generate_synthetic, SyntheticConfig};
pub use thread::{flatten_thread, group_threads};
