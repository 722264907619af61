//! Tape-level co-attention between a source sequence (context or persona)
//! and a response.

use super::{AblationConfig, Interaction, Pooling};
use crate::encoder::EncodedVar;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Tape, Var};
use crate::scalar::Scalar;

/// Word-word affinity `X·Yᵀ` (m×n).
pub fn affinity<T: Scalar>(tape: &mut Tape<T>, x: Var, y: Var) -> Result<Var> {
    let (dx, dy) = (tape.value(x).cols(), tape.value(y).cols());
    if dx != dy {
        return Err(Error::InvalidInput(format!("embedding widths differ: {dx} vs {dy}")));
    }
    tape.matmul_bt(x, y)
}

/// First-order attention between two sequences.
#[derive(Clone, Copy, Debug)]
pub struct Attention {
    pub affinity: Var,
    /// Softmax of the affinity over response positions (m×n).
    pub source_to_target: Var,
    /// Softmax of the transposed affinity over source positions (n×m).
    pub target_to_source: Var,
}

pub fn attention<T: Scalar>(tape: &mut Tape<T>, x: EncodedVar<'_>, y: EncodedVar<'_>) -> Result<Attention> {
    let a = affinity(tape, x.var, y.var)?;
    let source_to_target = tape.masked_softmax(a, y.mask)?;
    let at = tape.transpose(a)?;
    let target_to_source = tape.masked_softmax(at, x.mask)?;
    Ok(Attention { affinity: a, source_to_target, target_to_source })
}

/// Hop-1 outputs: attended sequences reduced along the sequence axis.
#[derive(Clone, Copy, Debug)]
pub struct Hop1 {
    pub source: Var,
    pub target: Var,
}

pub fn hop1<T: Scalar>(
    tape: &mut Tape<T>,
    attn: &Attention,
    x: EncodedVar<'_>,
    y: EncodedVar<'_>,
    pooling: Pooling,
) -> Result<Hop1> {
    let x_att = tape.matmul(attn.source_to_target, y.var)?;
    let y_att = tape.matmul(attn.target_to_source, x.var)?;
    Ok(Hop1 {
        source: pool(tape, x_att, x, pooling)?,
        target: pool(tape, y_att, y, pooling)?,
    })
}

fn pool<T: Scalar>(tape: &mut Tape<T>, m: Var, seq: EncodedVar<'_>, pooling: Pooling) -> Result<Var> {
    match pooling {
        Pooling::Max => tape.masked_max_pool(m, seq.mask),
        Pooling::Mean => tape.mean_pool_rows(m, seq.mask),
        Pooling::MaxMean => {
            let mx = tape.masked_max_pool(m, seq.mask)?;
            let mn = tape.mean_pool_rows(m, seq.mask)?;
            tape.concat_cols(&[mx, mn])
        }
    }
}

/// Hop-2 outputs: second-order weights over each sequence and the vectors they select.
#[derive(Clone, Copy, Debug)]
pub struct Hop2 {
    /// 1×m weights over source positions.
    pub source_weights: Var,
    /// 1×n weights over response positions.
    pub target_weights: Var,
    pub source: Var,
    pub target: Var,
}

pub fn hop2<T: Scalar>(tape: &mut Tape<T>, attn: &Attention, x: EncodedVar<'_>, y: EncodedVar<'_>) -> Result<Hop2> {
    let mean_x2y = tape.mean_pool_rows(attn.source_to_target, x.mask)?;
    let source_weights = tape.matmul(mean_x2y, attn.target_to_source)?;
    let mean_y2x = tape.mean_pool_rows(attn.target_to_source, y.mask)?;
    let target_weights = tape.matmul(mean_y2x, attn.source_to_target)?;
    Ok(Hop2 {
        source_weights,
        target_weights,
        source: tape.matmul(source_weights, x.var)?,
        target: tape.matmul(target_weights, y.var)?,
    })
}

/// One more round of the hop-2 recursion: the response weights are pushed back
/// through response→source attention and vice versa.
pub fn hop3<T: Scalar>(
    tape: &mut Tape<T>,
    attn: &Attention,
    h2: &Hop2,
    x: EncodedVar<'_>,
    y: EncodedVar<'_>,
) -> Result<Hop2> {
    let source_weights = tape.matmul(h2.target_weights, attn.target_to_source)?;
    let target_weights = tape.matmul(h2.source_weights, attn.source_to_target)?;
    Ok(Hop2 {
        source_weights,
        target_weights,
        source: tape.matmul(source_weights, x.var)?,
        target: tape.matmul(target_weights, y.var)?,
    })
}

/// Enabled feature blocks for one (source, response) pair, in concatenation order.
pub(crate) fn pair_parts<T: Scalar>(
    tape: &mut Tape<T>,
    x: EncodedVar<'_>,
    y: EncodedVar<'_>,
    config: &AblationConfig,
) -> Result<Vec<(Var, Var)>> {
    let attn = attention(tape, x, y)?;
    let mut parts = Vec::with_capacity(3);
    if config.use_hop1 {
        let h1 = hop1(tape, &attn, x, y, config.pooling)?;
        parts.push((h1.source, h1.target));
    }
    if config.use_hop2 || config.use_hop3 {
        let h2 = hop2(tape, &attn, x, y)?;
        if config.use_hop2 {
            parts.push((h2.source, h2.target));
        }
        if config.use_hop3 {
            let h3 = hop3(tape, &attn, &h2, x, y)?;
            parts.push((h3.source, h3.target));
        }
    }
    Ok(parts)
}

/// Per-pair blocks of a fused feature vector, for inspection.
#[derive(Clone, Debug)]
pub struct FusedVars {
    /// 1×F persona-aware context representation.
    pub context: Var,
    /// 1×F response representation.
    pub response: Var,
    /// (context-side, response-side) blocks from the context/response pair.
    pub context_pair: Vec<(Var, Var)>,
    /// Same for persona/response; empty persona yields zero blocks.
    pub persona_pair: Vec<(Var, Var)>,
}

/// Builds the final context and response feature vectors.
pub fn fuse<T: Scalar>(
    tape: &mut Tape<T>,
    context: EncodedVar<'_>,
    persona: Option<EncodedVar<'_>>,
    response: EncodedVar<'_>,
    config: &AblationConfig,
) -> Result<FusedVars> {
    config.validate()?;
    let d = tape.value(context.var).cols();
    if config.interaction == Interaction::None {
        let c = tape.mean_pool_rows(context.var, context.mask)?;
        let x = match persona {
            Some(p) => {
                let pm = tape.mean_pool_rows(p.var, p.mask)?;
                let s = tape.add(c, pm)?;
                tape.scale(s, T::narrow(0.5))?
            }
            None => c,
        };
        let y = tape.mean_pool_rows(response.var, response.mask)?;
        return Ok(FusedVars { context: x, response: y, context_pair: vec![(x, y)], persona_pair: Vec::new() });
    }

    let context_pair = pair_parts(tape, context, response, config)?;
    let persona_pair = match persona {
        Some(p) => pair_parts(tape, p, response, config)?,
        None => {
            let mut zeros = Vec::new();
            for &(a, b) in &context_pair {
                let za = tape.constant(Matrix::zeros(1, tape.value(a).cols()))?;
                let zb = tape.constant(Matrix::zeros(1, tape.value(b).cols()))?;
                zeros.push((za, zb));
            }
            zeros
        }
    };
    let xs: Vec<Var> = context_pair.iter().chain(&persona_pair).map(|p| p.0).collect();
    let ys: Vec<Var> = context_pair.iter().chain(&persona_pair).map(|p| p.1).collect();
    let x = tape.concat_cols(&xs)?;
    let y = tape.concat_cols(&ys)?;
    debug_assert_eq!(tape.value(x).cols(), config.feature_width(d));
    Ok(FusedVars { context: x, response: y, context_pair, persona_pair })
}

/// Dot-product matching score (1×1).
pub fn score<T: Scalar>(tape: &mut Tape<T>, fused: &FusedVars) -> Result<Var> {
    tape.matmul_bt(fused.context, fused.response)
}
