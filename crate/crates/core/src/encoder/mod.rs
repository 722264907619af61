//! Tokenization, vocabulary, sequence preparation and the shared encoder.

mod model;
mod prepare;
mod tokenize;
mod vocab;

pub use model::{EncodedVar, Encoder, EncoderConfig};
pub use prepare::{prepare_context, prepare_persona, prepare_response, PersonaOrder, PreparedSequence, Role};
pub use tokenize::tokenize;
pub use vocab::{Vocabulary, PAD, SEP, UNK};
