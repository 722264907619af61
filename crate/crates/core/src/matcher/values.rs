//! Value-level entry points over plain matrices. Each call records a private
//! tape and returns the computed values.

use super::coattention::{self, Attention};
use super::{AblationConfig, Pooling};
use crate::encoder::EncodedVar;
use crate::error::Result;
use crate::numerics::{Mask, Matrix, Tape};
use crate::scalar::Scalar;

/// An encoded sequence with its validity mask.
#[derive(Clone, Copy, Debug)]
pub struct Encoded<'a, T> {
    pub rows: &'a Matrix<T>,
    pub mask: &'a Mask,
}

impl<'a, T: Scalar> Encoded<'a, T> {
    pub fn new(rows: &'a Matrix<T>, mask: &'a Mask) -> Self {
        Encoded { rows, mask }
    }
}

fn load<'m, T: Scalar>(tape: &mut Tape<T>, e: &Encoded<'m, T>) -> Result<EncodedVar<'m>> {
    Ok(EncodedVar { var: tape.constant(e.rows.clone())?, mask: e.mask })
}

/// Every attention matrix for one (source, target) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionBundle<T> {
    pub affinity: Matrix<T>,
    pub source_to_target: Matrix<T>,
    pub target_to_source: Matrix<T>,
    /// Second-order weights over the source (1×m).
    pub source_weights: Matrix<T>,
    /// Second-order weights over the target (1×n).
    pub target_weights: Matrix<T>,
}

pub fn affinity<T: Scalar>(x: &Matrix<T>, y: &Matrix<T>) -> Result<Matrix<T>> {
    let mut tape = Tape::new();
    let (xv, yv) = (tape.constant(x.clone())?, tape.constant(y.clone())?);
    let a = coattention::affinity(&mut tape, xv, yv)?;
    Ok(tape.value(a).clone())
}

pub fn attention_bundle<T: Scalar>(x: Encoded<'_, T>, y: Encoded<'_, T>) -> Result<AttentionBundle<T>> {
    let mut tape = Tape::new();
    let (xv, yv) = (load(&mut tape, &x)?, load(&mut tape, &y)?);
    let attn = coattention::attention(&mut tape, xv, yv)?;
    let h2 = coattention::hop2(&mut tape, &attn, xv, yv)?;
    Ok(bundle(&tape, &attn, Some(&h2)))
}

fn bundle<T: Scalar>(tape: &Tape<T>, attn: &Attention, h2: Option<&coattention::Hop2>) -> AttentionBundle<T> {
    let empty = Matrix::zeros(0, 0);
    AttentionBundle {
        affinity: tape.value(attn.affinity).clone(),
        source_to_target: tape.value(attn.source_to_target).clone(),
        target_to_source: tape.value(attn.target_to_source).clone(),
        source_weights: h2.map_or(empty.clone(), |h| tape.value(h.source_weights).clone()),
        target_weights: h2.map_or(empty, |h| tape.value(h.target_weights).clone()),
    }
}

/// Hop-1 pooled vectors for source and target, plus the first-order attention.
/// The returned bundle's second-order fields are empty.
pub fn hop1<T: Scalar>(
    x: Encoded<'_, T>,
    y: Encoded<'_, T>,
    pooling: Pooling,
) -> Result<(Vec<T>, Vec<T>, AttentionBundle<T>)> {
    let mut tape = Tape::new();
    let (xv, yv) = (load(&mut tape, &x)?, load(&mut tape, &y)?);
    let attn = coattention::attention(&mut tape, xv, yv)?;
    let h1 = coattention::hop1(&mut tape, &attn, xv, yv, pooling)?;
    Ok((
        tape.value(h1.source).data().to_vec(),
        tape.value(h1.target).data().to_vec(),
        bundle(&tape, &attn, None),
    ))
}

/// Hop-2 vectors computed from the first-order attention in `bundle`.
pub fn hop2<T: Scalar>(bundle: &AttentionBundle<T>, x: Encoded<'_, T>, y: Encoded<'_, T>) -> Result<(Vec<T>, Vec<T>)> {
    let mut tape = Tape::new();
    let (xv, yv) = (load(&mut tape, &x)?, load(&mut tape, &y)?);
    let attn = Attention {
        affinity: tape.constant(bundle.affinity.clone())?,
        source_to_target: tape.constant(bundle.source_to_target.clone())?,
        target_to_source: tape.constant(bundle.target_to_source.clone())?,
    };
    let h2 = coattention::hop2(&mut tape, &attn, xv, yv)?;
    Ok((tape.value(h2.source).data().to_vec(), tape.value(h2.target).data().to_vec()))
}

/// Final feature vectors and the blocks they were concatenated from.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchFeatures<T> {
    pub context: Vec<T>,
    pub response: Vec<T>,
    pub context_pair: Vec<(Vec<T>, Vec<T>)>,
    pub persona_pair: Vec<(Vec<T>, Vec<T>)>,
}

impl<T: Scalar> MatchFeatures<T> {
    pub fn score(&self) -> T {
        score(&self.context, &self.response)
    }
}

/// `⟨context, response⟩`, accumulated in f64.
pub fn score<T: Scalar>(context: &[T], response: &[T]) -> T {
    T::narrow(crate::numerics::dot_wide(context, response))
}

pub fn fuse<T: Scalar>(
    context: Encoded<'_, T>,
    persona: Option<Encoded<'_, T>>,
    response: Encoded<'_, T>,
    config: &AblationConfig,
) -> Result<MatchFeatures<T>> {
    let mut tape = Tape::new();
    let c = load(&mut tape, &context)?;
    let p = persona.as_ref().map(|p| load(&mut tape, p)).transpose()?;
    let r = load(&mut tape, &response)?;
    let fused = coattention::fuse(&mut tape, c, p, r, config)?;
    let vals = |pairs: &[(crate::numerics::Var, crate::numerics::Var)]| {
        pairs
            .iter()
            .map(|&(a, b)| (tape.value(a).data().to_vec(), tape.value(b).data().to_vec()))
            .collect()
    };
    Ok(MatchFeatures {
        context: tape.value(fused.context).data().to_vec(),
        response: tape.value(fused.response).data().to_vec(),
        context_pair: vals(&fused.context_pair),
        persona_pair: vals(&fused.persona_pair),
    })
}
