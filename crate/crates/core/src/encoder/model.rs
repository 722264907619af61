use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::PreparedSequence;
use crate::error::{Error, Result};
use crate::numerics::{Mask, Matrix, ParamId, ParamStore, Tape, Var};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub layers: usize,
    pub heads: usize,
    pub ff_width: usize,
    pub max_positions: usize,
    pub segments: usize,
}

impl EncoderConfig {
    /// Desk-scale defaults for a given vocabulary.
    pub fn desk(vocab_size: usize) -> Self {
        EncoderConfig {
            vocab_size,
            d_model: 64,
            layers: 2,
            heads: 4,
            ff_width: 128,
            max_positions: 128,
            segments: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.heads == 0 || self.d_model % self.heads != 0 {
            return Err(Error::Config(format!(
                "d_model {} must be a positive multiple of heads {}",
                self.d_model, self.heads
            )));
        }
        if self.segments < 2 {
            return Err(Error::Config("at least two segments are required".into()));
        }
        if self.vocab_size < 3 || self.max_positions == 0 || self.ff_width == 0 {
            return Err(Error::Config("vocab_size, max_positions and ff_width must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Linear {
    weight: ParamId,
    bias: ParamId,
}

#[derive(Clone, Debug)]
struct Norm {
    gain: ParamId,
    bias: ParamId,
}

#[derive(Clone, Debug)]
struct Layer {
    query: Linear,
    key: Linear,
    value: Linear,
    output: Linear,
    attn_norm: Norm,
    ff_in: Linear,
    ff_out: Linear,
    ff_norm: Norm,
}

/// Post-norm transformer encoder with learned token, segment and absolute
/// position embeddings. One instance is shared by context, persona and response.
#[derive(Clone, Debug)]
pub struct Encoder {
    config: EncoderConfig,
    token_embedding: ParamId,
    segment_embedding: ParamId,
    position_embedding: ParamId,
    layers: Vec<Layer>,
}

/// Encoder output on a tape: one row per input position, with the input's mask.
#[derive(Clone, Copy, Debug)]
pub struct EncodedVar<'m> {
    pub var: Var,
    pub mask: &'m Mask,
}

struct Init<'a, T> {
    store: &'a mut ParamStore<T>,
    rng: ChaCha8Rng,
}

impl<T: Scalar> Init<'_, T> {
    fn normal(&mut self, name: String, rows: usize, cols: usize, std: f64) -> ParamId {
        let dist = Normal::new(0.0, std).expect("positive std");
        let rng = &mut self.rng;
        let m = Matrix::from_fn(rows, cols, |_, _| T::narrow(dist.sample(rng)));
        self.store.register(name, m)
    }

    fn filled(&mut self, name: String, cols: usize, v: f64) -> ParamId {
        self.store.register(name, Matrix::from_fn(1, cols, |_, _| T::narrow(v)))
    }

    fn linear(&mut self, prefix: &str, fan_in: usize, fan_out: usize) -> Linear {
        let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
        Linear {
            weight: self.normal(format!("{prefix}.weight"), fan_in, fan_out, std),
            bias: self.filled(format!("{prefix}.bias"), fan_out, 0.0),
        }
    }

    fn norm(&mut self, prefix: &str, d: usize) -> Norm {
        Norm {
            gain: self.filled(format!("{prefix}.gain"), d, 1.0),
            bias: self.filled(format!("{prefix}.bias"), d, 0.0),
        }
    }
}

impl Encoder {
    /// Registers freshly initialized parameters in `store`.
    pub fn init<T: Scalar>(config: EncoderConfig, store: &mut ParamStore<T>, init_seed: u64) -> Result<Self> {
        config.validate()?;
        let d = config.d_model;
        let emb_std = 1.0 / (d as f64).sqrt();
        let mut init = Init { store, rng: seed::rng(init_seed, "encoder-init", &[]) };
        let token_embedding = init.normal("encoder.token_embedding".into(), config.vocab_size, d, emb_std);
        let segment_embedding = init.normal("encoder.segment_embedding".into(), config.segments, d, emb_std);
        let position_embedding =
            init.normal("encoder.position_embedding".into(), config.max_positions, d, emb_std);
        let layers = (0..config.layers)
            .map(|l| {
                let p = format!("encoder.layer{l}");
                Layer {
                    query: init.linear(&format!("{p}.attn.query"), d, d),
                    key: init.linear(&format!("{p}.attn.key"), d, d),
                    value: init.linear(&format!("{p}.attn.value"), d, d),
                    output: init.linear(&format!("{p}.attn.output"), d, d),
                    attn_norm: init.norm(&format!("{p}.attn.norm"), d),
                    ff_in: init.linear(&format!("{p}.ff.in"), d, config.ff_width),
                    ff_out: init.linear(&format!("{p}.ff.out"), config.ff_width, d),
                    ff_norm: init.norm(&format!("{p}.ff.norm"), d),
                }
            })
            .collect();
        Ok(Encoder { config, token_embedding, segment_embedding, position_embedding, layers })
    }

    /// Rebinds an encoder to parameters already present in `store` (e.g. a
    /// loaded checkpoint), checking every name and shape.
    pub fn bind<T: Scalar>(config: EncoderConfig, store: &ParamStore<T>) -> Result<Self> {
        config.validate()?;
        let d = config.d_model;
        let find = |name: String, rows: usize, cols: usize| -> Result<ParamId> {
            let id = store
                .find(&name)
                .ok_or_else(|| Error::Checkpoint(format!("missing parameter {name}")))?;
            if store.get(id).shape() != (rows, cols) {
                return Err(Error::Checkpoint(format!(
                    "parameter {name} has shape {:?}, expected {:?}",
                    store.get(id).shape(),
                    (rows, cols)
                )));
            }
            Ok(id)
        };
        let linear = |p: String, i: usize, o: usize| -> Result<Linear> {
            Ok(Linear { weight: find(format!("{p}.weight"), i, o)?, bias: find(format!("{p}.bias"), 1, o)? })
        };
        let norm = |p: String| -> Result<Norm> {
            Ok(Norm { gain: find(format!("{p}.gain"), 1, d)?, bias: find(format!("{p}.bias"), 1, d)? })
        };
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let p = format!("encoder.layer{l}");
            layers.push(Layer {
                query: linear(format!("{p}.attn.query"), d, d)?,
                key: linear(format!("{p}.attn.key"), d, d)?,
                value: linear(format!("{p}.attn.value"), d, d)?,
                output: linear(format!("{p}.attn.output"), d, d)?,
                attn_norm: norm(format!("{p}.attn.norm"))?,
                ff_in: linear(format!("{p}.ff.in"), d, config.ff_width)?,
                ff_out: linear(format!("{p}.ff.out"), config.ff_width, d)?,
                ff_norm: norm(format!("{p}.ff.norm"))?,
            });
        }
        Ok(Encoder {
            token_embedding: find("encoder.token_embedding".into(), config.vocab_size, d)?,
            segment_embedding: find("encoder.segment_embedding".into(), config.segments, d)?,
            position_embedding: find("encoder.position_embedding".into(), config.max_positions, d)?,
            layers,
            config,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    /// Encodes one prepared sequence into a `len × d` node on `tape`.
    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, seq: &PreparedSequence) -> Result<Var> {
        let n = seq.len();
        if n == 0 {
            return Err(Error::InvalidInput("cannot encode an empty sequence".into()));
        }
        if seq.segment_ids.len() != n || seq.position_ids.len() != n || seq.mask.len() != n {
            return Err(Error::InvalidInput("prepared sequence fields are not aligned".into()));
        }
        if let Some(&p) = seq.position_ids.iter().find(|&&p| p >= self.config.max_positions) {
            return Err(Error::InvalidInput(format!(
                "position {p} exceeds max positions {}",
                self.config.max_positions
            )));
        }
        if seq.segment_ids.iter().any(|&s| s >= self.config.segments) {
            return Err(Error::InvalidInput("segment id out of range".into()));
        }
        let tok = tape.param(store, self.token_embedding);
        let seg = tape.param(store, self.segment_embedding);
        let pos = tape.param(store, self.position_embedding);
        let t = tape.gather(tok, &seq.token_ids)?;
        let s = tape.gather(seg, &seq.segment_ids)?;
        let p = tape.gather(pos, &seq.position_ids)?;
        let ts = tape.add(t, s)?;
        let mut x = tape.add(ts, p)?;
        for layer in &self.layers {
            x = self.layer_forward(tape, store, layer, x, &seq.mask)?;
        }
        Ok(x)
    }

    fn layer_forward<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        layer: &Layer,
        x: Var,
        mask: &Mask,
    ) -> Result<Var> {
        let d = self.config.d_model;
        let dh = d / self.config.heads;
        let scale = T::narrow(1.0 / (dh as f64).sqrt());
        let q = linear(tape, store, &layer.query, x)?;
        let k = linear(tape, store, &layer.key, x)?;
        let v = linear(tape, store, &layer.value, x)?;
        let mut heads = Vec::with_capacity(self.config.heads);
        for h in 0..self.config.heads {
            let (qh, kh, vh) = if self.config.heads == 1 {
                (q, k, v)
            } else {
                (
                    tape.slice_cols(q, h * dh, dh)?,
                    tape.slice_cols(k, h * dh, dh)?,
                    tape.slice_cols(v, h * dh, dh)?,
                )
            };
            let logits = tape.matmul_bt(qh, kh)?;
            let logits = tape.scale(logits, scale)?;
            let attn = tape.masked_softmax(logits, mask)?;
            heads.push(tape.matmul(attn, vh)?);
        }
        let merged = if heads.len() == 1 { heads[0] } else { tape.concat_cols(&heads)? };
        let attended = linear(tape, store, &layer.output, merged)?;
        let res = tape.add(x, attended)?;
        let x = norm(tape, store, &layer.attn_norm, res)?;
        let hidden = linear(tape, store, &layer.ff_in, x)?;
        let hidden = tape.gelu(hidden)?;
        let ff = linear(tape, store, &layer.ff_out, hidden)?;
        let res = tape.add(x, ff)?;
        norm(tape, store, &layer.ff_norm, res)
    }

    /// Forward pass without gradient bookkeeping beyond a throwaway tape.
    pub fn encode<T: Scalar>(&self, store: &ParamStore<T>, seq: &PreparedSequence) -> Result<Matrix<T>> {
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, store, seq)?;
        Ok(tape.value(out).clone())
    }
}

fn linear<T: Scalar>(tape: &mut Tape<T>, store: &ParamStore<T>, l: &Linear, x: Var) -> Result<Var> {
    let w = tape.param(store, l.weight);
    let b = tape.param(store, l.bias);
    let xw = tape.matmul(x, w)?;
    tape.add_row(xw, b)
}

fn norm<T: Scalar>(tape: &mut Tape<T>, store: &ParamStore<T>, n: &Norm, x: Var) -> Result<Var> {
    let g = tape.param(store, n.gain);
    let b = tape.param(store, n.bias);
    tape.layer_norm(x, g, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::Vocabulary;

    fn toy(layers: usize) -> (Encoder, ParamStore<f64>) {
        let config = EncoderConfig {
            vocab_size: 12,
            d_model: 8,
            layers,
            heads: 2,
            ff_width: 16,
            max_positions: 16,
            segments: 2,
        };
        let mut store = ParamStore::new();
        let enc = Encoder::init(config, &mut store, 3).unwrap();
        (enc, store)
    }

    fn seq(ids: &[usize]) -> PreparedSequence {
        PreparedSequence {
            token_ids: ids.to_vec(),
            segment_ids: vec![0; ids.len()],
            position_ids: (0..ids.len()).collect(),
            mask: Mask::all_valid(ids.len()),
        }
    }

    #[test]
    fn output_shape() {
        let (enc, store) = toy(2);
        let out = enc.encode(&store, &seq(&[3, 4, 5])).unwrap();
        assert_eq!(out.shape(), (3, 8));
    }

    #[test]
    fn position_sensitive() {
        let (enc, store) = toy(1);
        let a = enc.encode(&store, &seq(&[3, 4])).unwrap();
        let b = enc.encode(&store, &seq(&[4, 3])).unwrap();
        assert_ne!(a.row(0), b.row(1));
    }

    #[test]
    fn zero_layers_is_embedding_sum() {
        let (enc, store) = toy(0);
        let mut s = seq(&[5, 7]);
        s.segment_ids = vec![1, 0];
        let out = enc.encode(&store, &s).unwrap();
        let tok = store.get(store.find("encoder.token_embedding").unwrap());
        let segm = store.get(store.find("encoder.segment_embedding").unwrap());
        let pos = store.get(store.find("encoder.position_embedding").unwrap());
        for (r, (&t, &sg)) in [5usize, 7].iter().zip(&[1usize, 0]).enumerate() {
            for j in 0..8 {
                let expect = tok.get(t, j) + segm.get(sg, j) + pos.get(r, j);
                assert_eq!(out.get(r, j), expect);
            }
        }
    }

    #[test]
    fn padding_does_not_leak() {
        let (enc, store) = toy(2);
        let base = seq(&[3, 4, 5]);
        let mut padded = base.padded_to(5);
        let clean = enc.encode(&store, &padded).unwrap();
        padded.token_ids[3] = 9;
        padded.token_ids[4] = 10;
        let noisy = enc.encode(&store, &padded).unwrap();
        for i in 0..3 {
            assert_eq!(clean.row(i), noisy.row(i));
        }
        let unpadded = enc.encode(&store, &base).unwrap();
        for i in 0..3 {
            assert_eq!(clean.row(i), unpadded.row(i));
        }
        let _ = Vocabulary::PAD_ID;
    }

    #[test]
    fn rejects_overlong_and_empty() {
        let (enc, store) = toy(1);
        assert!(enc.encode(&store, &seq(&[])).is_err());
        let long: Vec<usize> = (0..17).map(|i| i % 12).collect();
        assert!(enc.encode(&store, &seq(&long)).is_err());
    }

    #[test]
    fn bind_matches_init() {
        let (enc, store) = toy(2);
        let bound = Encoder::bind(enc.config().clone(), &store).unwrap();
        let s = seq(&[1, 2, 3]);
        assert_eq!(enc.encode(&store, &s).unwrap(), bound.encode(&store, &s).unwrap());
    }
}
