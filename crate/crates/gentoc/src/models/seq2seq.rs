//! Encoder-decoder model shared by the attribute-list generator, the
//! single-stage `attr:value` generator and the rescorer; they differ only in
//! how targets are built and outputs parsed.

use rand_chacha::ChaCha8Rng;

use crate::numerics::{seeded_rng, Graph, NodeId, ParamBundle, ParamSpec};
use crate::text::{MarkerMask, Vocab};
use crate::{GentocError, Result};

use super::transformer::{decoder_forward, encoder_forward, register_decoder, register_encoder, DropoutState};
use super::ModelConfig;

pub struct Seq2Seq {
    pub cfg: ModelConfig,
    pub vocab: Vocab,
    pub bundle: ParamBundle,
}

impl Seq2Seq {
    pub fn new(mut cfg: ModelConfig, vocab: Vocab, seed: u64) -> Result<Self> {
        cfg.vocab_size = vocab.len();
        cfg.validate()?;
        let mut rng = seeded_rng(seed);
        let mut bundle = ParamBundle::new();
        register_encoder(&mut bundle, &cfg, &mut rng)?;
        register_decoder(&mut bundle, &cfg, &mut rng)?;
        Ok(Seq2Seq { cfg, vocab, bundle })
    }

    pub fn from_parts(cfg: ModelConfig, vocab: Vocab, bundle: ParamBundle) -> Result<Self> {
        cfg.validate()?;
        Ok(Seq2Seq { cfg, vocab, bundle })
    }

    pub fn param_specs(&self) -> Vec<ParamSpec> {
        self.bundle
            .iter()
            .map(|p| ParamSpec { name: p.name.clone(), rows: p.rows, cols: p.cols })
            .collect()
    }

    fn check_src(&self, ids: &[usize], mask: &MarkerMask) -> Result<()> {
        if ids.is_empty() {
            return Err(GentocError::InvalidInput("empty source sequence".into()));
        }
        if ids.len() > self.cfg.max_len {
            return Err(GentocError::InvalidInput(format!(
                "source length {} exceeds max length {}",
                ids.len(),
                self.cfg.max_len
            )));
        }
        if mask.flags.len() != ids.len() {
            return Err(GentocError::InvalidInput(format!(
                "marker mask length {} does not match sequence length {}",
                mask.flags.len(),
                ids.len()
            )));
        }
        Ok(())
    }

    /// Encoder states with the marker vector added at flagged positions
    /// (ignored when markers are disabled in the config).
    pub fn encode(
        &self,
        g: &mut Graph,
        ids: &[usize],
        mask: &MarkerMask,
        drop: &mut DropoutState,
    ) -> Result<NodeId> {
        self.check_src(ids, mask)?;
        let positions = mask.positions();
        encoder_forward(g, &self.bundle, &self.cfg, ids, Some(&positions), drop)
    }

    /// Teacher-forced token-level cross entropy against `target_ids` wrapped
    /// in `<bos>`/`<eos>`. Returns the graph so callers can run backward.
    pub fn loss(
        &self,
        ids: &[usize],
        mask: &MarkerMask,
        target_ids: &[usize],
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(Graph, NodeId)> {
        if target_ids.len() + 1 > self.cfg.max_len {
            return Err(GentocError::InvalidInput(format!(
                "target length {} exceeds max length {}",
                target_ids.len() + 1,
                self.cfg.max_len
            )));
        }
        let mut drop = match rng {
            Some(r) => DropoutState::training(self.cfg.dropout, r),
            None => DropoutState::inference(),
        };
        let mut g = Graph::new();
        let enc = self.encode(&mut g, ids, mask, &mut drop)?;

        let mut dec_in = Vec::with_capacity(target_ids.len() + 1);
        dec_in.push(self.vocab.bos_id());
        dec_in.extend_from_slice(target_ids);
        let mut labels = target_ids.to_vec();
        labels.push(self.vocab.eos_id());

        let logits = decoder_forward(&mut g, &self.bundle, &self.cfg, &dec_in, enc, &mut drop)?;
        let loss = g.cross_entropy_rows(logits, &labels)?;
        Ok((g, loss))
    }

    /// Greedy decode until `<eos>` or max length; returns emitted ids
    /// (without `<bos>`/`<eos>`).
    pub fn greedy_decode(&self, ids: &[usize], mask: &MarkerMask) -> Result<Vec<usize>> {
        self.check_src(ids, mask)?;
        let mut drop = DropoutState::inference();
        let mut g = Graph::new();
        let enc = self.encode(&mut g, ids, mask, &mut drop)?;

        let mut dec_in = vec![self.vocab.bos_id()];
        let mut out = Vec::new();
        while dec_in.len() < self.cfg.max_len {
            let logits = decoder_forward(&mut g, &self.bundle, &self.cfg, &dec_in, enc, &mut drop)?;
            let (rows, v) = g.shape(logits);
            let last = &g.value(logits)[(rows - 1) * v..rows * v];
            let next = argmax(last);
            if next == self.vocab.eos_id() {
                break;
            }
            out.push(next);
            dec_in.push(next);
        }
        Ok(out)
    }

    /// Teacher-forced log-probability of each target token (plus `<eos>`),
    /// used by the rescorer to score extractions.
    pub fn target_log_probs(
        &self,
        ids: &[usize],
        mask: &MarkerMask,
        target_ids: &[usize],
    ) -> Result<Vec<f64>> {
        if target_ids.len() + 1 > self.cfg.max_len {
            return Err(GentocError::InvalidInput(format!(
                "target length {} exceeds max length {}",
                target_ids.len() + 1,
                self.cfg.max_len
            )));
        }
        let mut drop = DropoutState::inference();
        let mut g = Graph::new();
        let enc = self.encode(&mut g, ids, mask, &mut drop)?;
        let mut dec_in = Vec::with_capacity(target_ids.len() + 1);
        dec_in.push(self.vocab.bos_id());
        dec_in.extend_from_slice(target_ids);
        let mut labels = target_ids.to_vec();
        labels.push(self.vocab.eos_id());
        let logits = decoder_forward(&mut g, &self.bundle, &self.cfg, &dec_in, enc, &mut drop)?;
        let (rows, v) = g.shape(logits);
        let values = g.value(logits);
        let mut lps = Vec::with_capacity(labels.len());
        for (i, &t) in labels.iter().enumerate() {
            debug_assert!(i < rows);
            let row = &values[i * v..(i + 1) * v];
            let max = row.iter().fold(f32::NEG_INFINITY, |a, &b| a.max(b)) as f64;
            let lse: f64 = max + row.iter().map(|&z| ((z as f64) - max).exp()).sum::<f64>().ln();
            lps.push(row[t] as f64 - lse);
        }
        Ok(lps)
    }
}

pub(crate) fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = i;
        }
    }
    best
}
