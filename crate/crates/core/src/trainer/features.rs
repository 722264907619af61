use crate::corpus::ConversationRecord;
use crate::encoder::{prepare_context, prepare_persona, prepare_response, PersonaOrder, PreparedSequence, Role, Vocabulary};
use crate::error::Result;

/// Turns records into encoder inputs under fixed context and persona caps.
#[derive(Clone, Copy, Debug)]
pub struct Featurizer<'a> {
    pub vocab: &'a Vocabulary,
    pub max_positions: usize,
    pub context_cap: usize,
    pub persona_cap: usize,
}

impl Featurizer<'_> {
    pub fn context(&self, record: &ConversationRecord) -> Result<PreparedSequence> {
        let roles: Vec<Role> = record
            .context_speakers
            .iter()
            .map(|s| if *s == record.respondent { Role::Respondent } else { Role::Speaker })
            .collect();
        prepare_context(&record.context, &roles, self.context_cap, self.vocab, self.max_positions)
    }

    pub fn persona(&self, sentences: &[String], order: PersonaOrder) -> PreparedSequence {
        prepare_persona(sentences, self.persona_cap, order, self.vocab, self.max_positions)
    }

    pub fn response(&self, text: &str) -> Result<PreparedSequence> {
        prepare_response(text, self.vocab, self.max_positions)
    }

    pub fn responses<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<PreparedSequence>> {
        texts.iter().map(|t| self.response(t.as_ref())).collect()
    }
}
