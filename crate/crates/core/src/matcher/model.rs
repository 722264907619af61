use super::{coattention, AblationConfig};
use crate::encoder::{EncodedVar, Encoder, EncoderConfig, PreparedSequence};
use crate::error::{Error, Result};
use crate::numerics::{ParamStore, Tape, Var};
use crate::scalar::Scalar;

/// Shared encoder plus the co-attention matching head.
#[derive(Clone, Debug)]
pub struct CoBert {
    pub encoder: Encoder,
    pub ablation: AblationConfig,
}

impl CoBert {
    pub fn init<T: Scalar>(
        encoder: EncoderConfig,
        ablation: AblationConfig,
        store: &mut ParamStore<T>,
        init_seed: u64,
    ) -> Result<Self> {
        ablation.validate()?;
        Ok(CoBert { encoder: Encoder::init(encoder, store, init_seed)?, ablation })
    }

    pub fn bind<T: Scalar>(encoder: EncoderConfig, ablation: AblationConfig, store: &ParamStore<T>) -> Result<Self> {
        ablation.validate()?;
        Ok(CoBert { encoder: Encoder::bind(encoder, store)?, ablation })
    }

    /// Scores every response against one (context, persona) pair, returning a
    /// 1×C row of logits. Context and persona are encoded once.
    pub fn logits<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        context: &PreparedSequence,
        persona: &PreparedSequence,
        responses: &[PreparedSequence],
    ) -> Result<Var> {
        if responses.is_empty() {
            return Err(Error::InvalidInput("no candidate responses".into()));
        }
        let c = self.encoder.forward(tape, store, context)?;
        let c = EncodedVar { var: c, mask: &context.mask };
        let p = if persona.is_empty() {
            None
        } else {
            let v = self.encoder.forward(tape, store, persona)?;
            Some(EncodedVar { var: v, mask: &persona.mask })
        };
        let mut scores = Vec::with_capacity(responses.len());
        for r in responses {
            let rv = self.encoder.forward(tape, store, r)?;
            let rv = EncodedVar { var: rv, mask: &r.mask };
            let fused = coattention::fuse(tape, c, p, rv, &self.ablation)?;
            scores.push(coattention::score(tape, &fused)?);
        }
        if scores.len() == 1 {
            Ok(scores[0])
        } else {
            tape.concat_cols(&scores)
        }
    }

    pub fn score_candidates<T: Scalar>(
        &self,
        store: &ParamStore<T>,
        context: &PreparedSequence,
        persona: &PreparedSequence,
        responses: &[PreparedSequence],
    ) -> Result<Vec<T>> {
        let mut tape = Tape::new();
        let l = self.logits(&mut tape, store, context, persona, responses)?;
        Ok(tape.value(l).data().to_vec())
    }

    /// `f(X, P, y)` for a single response.
    pub fn score_pair<T: Scalar>(
        &self,
        store: &ParamStore<T>,
        context: &PreparedSequence,
        persona: &PreparedSequence,
        response: &PreparedSequence,
    ) -> Result<T> {
        Ok(self.score_candidates(store, context, persona, std::slice::from_ref(response))?[0])
    }
}
