//! Shared pre-norm transformer building blocks over the autodiff tape.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::numerics::{Graph, Init, NodeId, ParamBundle};
use crate::Result;

use super::ModelConfig;

/// Training-time dropout source; `None` disables dropout (inference).
pub struct DropoutState<'a> {
    pub rate: f32,
    pub rng: Option<&'a mut ChaCha8Rng>,
}

impl<'a> DropoutState<'a> {
    pub fn inference() -> DropoutState<'static> {
        DropoutState { rate: 0.0, rng: None }
    }

    pub fn training(rate: f32, rng: &'a mut ChaCha8Rng) -> Self {
        DropoutState { rate, rng: Some(rng) }
    }

    fn apply(&mut self, g: &mut Graph, x: NodeId) -> Result<NodeId> {
        let Some(rng) = self.rng.as_deref_mut() else { return Ok(x) };
        if self.rate <= 0.0 {
            return Ok(x);
        }
        let (r, c) = g.shape(x);
        let keep = 1.0 - self.rate;
        let inv = 1.0 / keep;
        let mask: Vec<f32> =
            (0..r * c).map(|_| if rng.gen::<f32>() < keep { inv } else { 0.0 }).collect();
        g.dropout(x, mask)
    }
}

fn p(bundle: &ParamBundle, g: &mut Graph, name: &str) -> NodeId {
    let idx = bundle.lookup(name).unwrap_or_else(|| panic!("missing parameter {name:?}"));
    g.param(bundle, idx)
}

fn register_layer_norm(b: &mut ParamBundle, name: &str, d: usize, rng: &mut ChaCha8Rng) -> Result<()> {
    b.add(&format!("{name}.g"), 1, d, Init::Ones, rng)?;
    b.add(&format!("{name}.b"), 1, d, Init::Zeros, rng)?;
    Ok(())
}

fn register_attention(b: &mut ParamBundle, name: &str, d: usize, rng: &mut ChaCha8Rng) -> Result<()> {
    for w in ["wq", "wk", "wv", "wo"] {
        b.add(&format!("{name}.{w}"), d, d, Init::Xavier, rng)?;
    }
    for bias in ["bq", "bk", "bv", "bo"] {
        b.add(&format!("{name}.{bias}"), 1, d, Init::Zeros, rng)?;
    }
    Ok(())
}

fn register_ffn(b: &mut ParamBundle, name: &str, d: usize, f: usize, rng: &mut ChaCha8Rng) -> Result<()> {
    b.add(&format!("{name}.w1"), d, f, Init::Xavier, rng)?;
    b.add(&format!("{name}.b1"), 1, f, Init::Zeros, rng)?;
    b.add(&format!("{name}.w2"), f, d, Init::Xavier, rng)?;
    b.add(&format!("{name}.b2"), 1, d, Init::Zeros, rng)?;
    Ok(())
}

/// Token/position embeddings plus the encoder stack (and marker vector when
/// enabled).
pub fn register_encoder(b: &mut ParamBundle, cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> Result<()> {
    b.add("tok_emb", cfg.vocab_size, cfg.d_model, Init::Normal(0.02), rng)?;
    b.add("pos_emb", cfg.max_len, cfg.d_model, Init::Normal(0.02), rng)?;
    for l in 0..cfg.n_encoder_layers {
        register_layer_norm(b, &format!("enc{l}.ln1"), cfg.d_model, rng)?;
        register_attention(b, &format!("enc{l}.attn"), cfg.d_model, rng)?;
        register_layer_norm(b, &format!("enc{l}.ln2"), cfg.d_model, rng)?;
        register_ffn(b, &format!("enc{l}.ffn"), cfg.d_model, cfg.ffn_dim, rng)?;
    }
    register_layer_norm(b, "enc.lnf", cfg.d_model, rng)?;
    if cfg.marker_enabled {
        b.add("marker", 1, cfg.d_model, Init::Normal(0.02), rng)?;
    }
    Ok(())
}

/// Decoder stack with cross-attention and the vocabulary projection.
/// Embeddings are shared with the encoder.
pub fn register_decoder(b: &mut ParamBundle, cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> Result<()> {
    for l in 0..cfg.n_decoder_layers {
        register_layer_norm(b, &format!("dec{l}.ln1"), cfg.d_model, rng)?;
        register_attention(b, &format!("dec{l}.self"), cfg.d_model, rng)?;
        register_layer_norm(b, &format!("dec{l}.ln2"), cfg.d_model, rng)?;
        register_attention(b, &format!("dec{l}.cross"), cfg.d_model, rng)?;
        register_layer_norm(b, &format!("dec{l}.ln3"), cfg.d_model, rng)?;
        register_ffn(b, &format!("dec{l}.ffn"), cfg.d_model, cfg.ffn_dim, rng)?;
    }
    register_layer_norm(b, "dec.lnf", cfg.d_model, rng)?;
    b.add("out_w", cfg.d_model, cfg.vocab_size, Init::Xavier, rng)?;
    b.add("out_b", 1, cfg.vocab_size, Init::Zeros, rng)?;
    Ok(())
}

/// Per-token classification head.
pub fn register_head(b: &mut ParamBundle, cfg: &ModelConfig, n_labels: usize, rng: &mut ChaCha8Rng) -> Result<()> {
    b.add("head_w", cfg.d_model, n_labels, Init::Xavier, rng)?;
    b.add("head_b", 1, n_labels, Init::Zeros, rng)?;
    Ok(())
}

/// Multi-head attention; `kv` may differ from `q_in` (cross-attention).
fn attention(
    g: &mut Graph,
    b: &ParamBundle,
    name: &str,
    q_in: NodeId,
    kv_in: NodeId,
    n_heads: usize,
    causal: bool,
    drop: &mut DropoutState,
) -> Result<NodeId> {
    let (_, d) = g.shape(q_in);
    let dh = d / n_heads;
    let scale = 1.0 / (dh as f32).sqrt();

    let wq = p(b, g, &format!("{name}.wq"));
    let wk = p(b, g, &format!("{name}.wk"));
    let wv = p(b, g, &format!("{name}.wv"));
    let wo = p(b, g, &format!("{name}.wo"));
    let bq = p(b, g, &format!("{name}.bq"));
    let bk = p(b, g, &format!("{name}.bk"));
    let bv = p(b, g, &format!("{name}.bv"));
    let bo = p(b, g, &format!("{name}.bo"));

    let q = g.matmul(q_in, wq)?;
    let q = g.add_row(q, bq)?;
    let k = g.matmul(kv_in, wk)?;
    let k = g.add_row(k, bk)?;
    let v = g.matmul(kv_in, wv)?;
    let v = g.add_row(v, bv)?;

    let mut heads = Vec::with_capacity(n_heads);
    for h in 0..n_heads {
        let qh = g.slice_cols(q, h * dh, dh)?;
        let kh = g.slice_cols(k, h * dh, dh)?;
        let vh = g.slice_cols(v, h * dh, dh)?;
        let scores = g.matmul_nt(qh, kh)?;
        let scores = g.scale(scores, scale);
        let attn = g.softmax_rows(scores, causal)?;
        heads.push(g.matmul(attn, vh)?);
    }
    let ctx = g.concat_cols(&heads)?;
    let out = g.matmul(ctx, wo)?;
    let out = g.add_row(out, bo)?;
    drop.apply(g, out)
}

fn layer_norm(g: &mut Graph, b: &ParamBundle, name: &str, x: NodeId) -> Result<NodeId> {
    let gain = p(b, g, &format!("{name}.g"));
    let bias = p(b, g, &format!("{name}.b"));
    g.layer_norm(x, gain, bias)
}

fn ffn(g: &mut Graph, b: &ParamBundle, name: &str, x: NodeId, drop: &mut DropoutState) -> Result<NodeId> {
    let w1 = p(b, g, &format!("{name}.w1"));
    let b1 = p(b, g, &format!("{name}.b1"));
    let w2 = p(b, g, &format!("{name}.w2"));
    let b2 = p(b, g, &format!("{name}.b2"));
    let h = g.matmul(x, w1)?;
    let h = g.add_row(h, b1)?;
    let h = g.relu(h);
    let out = g.matmul(h, w2)?;
    let out = g.add_row(out, b2)?;
    drop.apply(g, out)
}

fn embed_tokens(g: &mut Graph, b: &ParamBundle, ids: &[usize], drop: &mut DropoutState) -> Result<NodeId> {
    let tok = p(b, g, "tok_emb");
    let pos = p(b, g, "pos_emb");
    let te = g.embed(tok, ids)?;
    let positions: Vec<usize> = (0..ids.len()).collect();
    let pe = g.embed(pos, &positions)?;
    let x = g.add(te, pe)?;
    drop.apply(g, x)
}

/// Encoder forward pass. When the config enables markers and
/// `marker_positions` is given, the shared marker vector is added to the
/// final hidden states at those positions (after the final layer norm by
/// default).
pub fn encoder_forward(
    g: &mut Graph,
    b: &ParamBundle,
    cfg: &ModelConfig,
    ids: &[usize],
    marker_positions: Option<&[usize]>,
    drop: &mut DropoutState,
) -> Result<NodeId> {
    let mut x = embed_tokens(g, b, ids, drop)?;
    for l in 0..cfg.n_encoder_layers {
        let normed = layer_norm(g, b, &format!("enc{l}.ln1"), x)?;
        let att = attention(g, b, &format!("enc{l}.attn"), normed, normed, cfg.n_heads, false, drop)?;
        x = g.add(x, att)?;
        let normed = layer_norm(g, b, &format!("enc{l}.ln2"), x)?;
        let f = ffn(g, b, &format!("enc{l}.ffn"), normed, drop)?;
        x = g.add(x, f)?;
    }
    let positions = match (cfg.marker_enabled, marker_positions) {
        (true, Some(pos)) if !pos.is_empty() => Some(pos),
        _ => None,
    };
    if cfg.marker_before_final_norm {
        if let Some(pos) = positions {
            let m = p(b, g, "marker");
            x = g.add_rows_at(x, m, pos)?;
        }
        layer_norm(g, b, "enc.lnf", x)
    } else {
        let mut out = layer_norm(g, b, "enc.lnf", x)?;
        if let Some(pos) = positions {
            let m = p(b, g, "marker");
            out = g.add_rows_at(out, m, pos)?;
        }
        Ok(out)
    }
}

/// Decoder forward pass over teacher-forced input ids; returns vocabulary
/// logits per position.
pub fn decoder_forward(
    g: &mut Graph,
    b: &ParamBundle,
    cfg: &ModelConfig,
    dec_ids: &[usize],
    enc_states: NodeId,
    drop: &mut DropoutState,
) -> Result<NodeId> {
    let mut x = embed_tokens(g, b, dec_ids, drop)?;
    for l in 0..cfg.n_decoder_layers {
        let normed = layer_norm(g, b, &format!("dec{l}.ln1"), x)?;
        let att = attention(g, b, &format!("dec{l}.self"), normed, normed, cfg.n_heads, true, drop)?;
        x = g.add(x, att)?;
        let normed = layer_norm(g, b, &format!("dec{l}.ln2"), x)?;
        let cross = attention(g, b, &format!("dec{l}.cross"), normed, enc_states, cfg.n_heads, false, drop)?;
        x = g.add(x, cross)?;
        let normed = layer_norm(g, b, &format!("dec{l}.ln3"), x)?;
        let f = ffn(g, b, &format!("dec{l}.ffn"), normed, drop)?;
        x = g.add(x, f)?;
    }
    let x = layer_norm(g, b, "dec.lnf", x)?;
    let w = p(b, g, "out_w");
    let bias = p(b, g, "out_b");
    let logits = g.matmul(x, w)?;
    g.add_row(logits, bias)
}

/// Classification head over (a subset of) encoder states.
pub fn head_forward(g: &mut Graph, b: &ParamBundle, states: NodeId) -> Result<NodeId> {
    let w = p(b, g, "head_w");
    let bias = p(b, g, "head_b");
    let logits = g.matmul(states, w)?;
    g.add_row(logits, bias)
}
