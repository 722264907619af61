use rand::seq::SliceRandom;

use super::Vocabulary;
use crate::error::{Error, Result};
use crate::numerics::Mask;
use crate::seed;

/// Who produced a context utterance, relative to the respondent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Speaker,
    Respondent,
}

impl Role {
    pub fn segment(self) -> usize {
        match self {
            Role::Speaker => 0,
            Role::Respondent => 1,
        }
    }
}

/// Persona sentence order: corpus-given for evaluation, seeded shuffle for training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PersonaOrder {
    Given,
    Shuffled(u64),
}

/// Encoder input. A zero-length sequence is the empty-persona marker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreparedSequence {
    pub token_ids: Vec<usize>,
    pub segment_ids: Vec<usize>,
    pub position_ids: Vec<usize>,
    pub mask: Mask,
}

impl PreparedSequence {
    pub fn empty() -> Self {
        PreparedSequence {
            token_ids: Vec::new(),
            segment_ids: Vec::new(),
            position_ids: Vec::new(),
            mask: Mask::all_valid(0),
        }
    }

    fn from_tokens(token_ids: Vec<usize>, segment_ids: Vec<usize>) -> Self {
        let n = token_ids.len();
        PreparedSequence {
            token_ids,
            segment_ids,
            position_ids: (0..n).collect(),
            mask: Mask::all_valid(n),
        }
    }

    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    /// Appends padding positions up to `len`.
    pub fn padded_to(&self, len: usize) -> Self {
        let mut out = self.clone();
        let mut flags = self.mask.flags().to_vec();
        for p in self.len()..len {
            out.token_ids.push(Vocabulary::PAD_ID);
            out.segment_ids.push(0);
            out.position_ids.push(p);
            flags.push(false);
        }
        out.mask = Mask::from_flags(flags);
        out
    }
}

/// Joins the `cap` most recent utterances with separators.
///
/// Speaker utterances get segment 0 and respondent utterances segment 1; a
/// separator carries the segment of the utterance it closes. When the result
/// exceeds `max_positions` the oldest tokens are dropped.
pub fn prepare_context(
    utterances: &[String],
    roles: &[Role],
    cap: usize,
    vocab: &Vocabulary,
    max_positions: usize,
) -> Result<PreparedSequence> {
    if utterances.is_empty() {
        return Err(Error::InvalidInput("context has no utterances".into()));
    }
    if roles.len() != utterances.len() {
        return Err(Error::InvalidInput(format!(
            "{} roles for {} utterances",
            roles.len(),
            utterances.len()
        )));
    }
    let start = utterances.len().saturating_sub(cap);
    let kept = &utterances[start..];
    let mut ids = Vec::new();
    let mut segs = Vec::new();
    for (i, (u, role)) in kept.iter().zip(&roles[start..]).enumerate() {
        let toks = vocab.encode(u);
        segs.extend(std::iter::repeat(role.segment()).take(toks.len()));
        ids.extend(toks);
        if i + 1 < kept.len() {
            ids.push(Vocabulary::SEP_ID);
            segs.push(role.segment());
        }
    }
    if ids.len() > max_positions {
        let drop = ids.len() - max_positions;
        ids.drain(..drop);
        segs.drain(..drop);
    }
    if ids.is_empty() {
        return Err(Error::InvalidInput("context has no tokens".into()));
    }
    Ok(PreparedSequence::from_tokens(ids, segs))
}

/// Selects up to `cap` persona sentences and joins them with separators.
///
/// `Given` keeps the first `cap` sentences in corpus order; `Shuffled` samples
/// `cap` sentences in a seeded random order. No sentences yields the empty marker.
pub fn prepare_persona(
    sentences: &[String],
    cap: usize,
    order: PersonaOrder,
    vocab: &Vocabulary,
    max_positions: usize,
) -> PreparedSequence {
    let chosen: Vec<&String> = match order {
        PersonaOrder::Given => sentences.iter().take(cap).collect(),
        PersonaOrder::Shuffled(s) => {
            let mut all: Vec<&String> = sentences.iter().collect();
            all.shuffle(&mut seed::rng(s, "persona-order", &[]));
            all.truncate(cap);
            all
        }
    };
    let mut ids = Vec::new();
    for (i, s) in chosen.iter().enumerate() {
        if i > 0 {
            ids.push(Vocabulary::SEP_ID);
        }
        ids.extend(vocab.encode(s));
    }
    ids.truncate(max_positions);
    if ids.is_empty() {
        return PreparedSequence::empty();
    }
    let segs = vec![0; ids.len()];
    PreparedSequence::from_tokens(ids, segs)
}

pub fn prepare_response(text: &str, vocab: &Vocabulary, max_positions: usize) -> Result<PreparedSequence> {
    let mut ids = vocab.encode(text);
    ids.truncate(max_positions);
    if ids.is_empty() {
        return Err(Error::InvalidInput(format!("response {text:?} has no tokens")));
    }
    let segs = vec![0; ids.len()];
    Ok(PreparedSequence::from_tokens(ids, segs))
}
