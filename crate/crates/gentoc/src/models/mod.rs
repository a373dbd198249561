//! The four architectures: the two-stage pair (generative attribute proposer
//! + per-attribute YES/NO value extractor) and the single-stage baselines
//! (seq2seq `attr:value` emitter, closed-set per-token tagger), plus the
//! rescoring seq2seq. All are tiny transformers over the numerics tape.

mod genave;
mod seq2seq;
mod token_classifier;
mod transformer;

pub use genave::{genave_decode, ground_value};
pub use seq2seq::Seq2Seq;
pub use token_classifier::{
    merge_token_labels, tocave_loss, tocave_predict, tocve_loss, tocve_predict, TokenClassifier,
    NO_LABEL, O_LABEL, YES_LABEL,
};
pub use transformer::DropoutState;

use serde::{Deserialize, Serialize};

use crate::{GentocError, Result};

/// Which architecture a checkpoint holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// Stage 1: marker-augmented attribute-list generator.
    #[serde(rename = "genae")]
    GenAe,
    /// Stage 2: per-attribute YES/NO token classifier.
    #[serde(rename = "tocve")]
    TocVe,
    /// Single-stage seq2seq emitting `attr:value` strings.
    #[serde(rename = "genave")]
    GenAve,
    /// Single-stage closed-label-set per-token tagger.
    #[serde(rename = "tocave")]
    TocAve,
    /// Independent seq2seq used to score extractions for PR curves.
    #[serde(rename = "rescorer")]
    Rescorer,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::GenAe => "genae",
            ModelKind::TocVe => "tocve",
            ModelKind::GenAve => "genave",
            ModelKind::TocAve => "tocave",
            ModelKind::Rescorer => "rescorer",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "genae" => Ok(ModelKind::GenAe),
            "tocve" => Ok(ModelKind::TocVe),
            "genave" => Ok(ModelKind::GenAve),
            "tocave" => Ok(ModelKind::TocAve),
            "rescorer" => Ok(ModelKind::Rescorer),
            other => Err(GentocError::InvalidInput(format!("unknown model kind {other:?}"))),
        }
    }

    pub fn is_seq2seq(self) -> bool {
        matches!(self, ModelKind::GenAe | ModelKind::GenAve | ModelKind::Rescorer)
    }
}

/// Architecture hyperparameters. Defaults are desk-scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_encoder_layers: usize,
    pub n_decoder_layers: usize,
    pub ffn_dim: usize,
    pub max_len: usize,
    pub vocab_size: usize,
    pub dropout: f32,
    pub marker_enabled: bool,
    /// Add the marker vector before instead of after the encoder's final
    /// layer norm.
    pub marker_before_final_norm: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_model: 64,
            n_heads: 2,
            n_encoder_layers: 2,
            n_decoder_layers: 2,
            ffn_dim: 128,
            max_len: 64,
            vocab_size: 0,
            dropout: 0.1,
            marker_enabled: true,
            marker_before_final_norm: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.n_heads == 0 || self.d_model % self.n_heads != 0 {
            return Err(GentocError::InvalidInput(format!(
                "d_model {} must be a positive multiple of n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.vocab_size == 0 {
            return Err(GentocError::InvalidInput("vocab_size not set".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(GentocError::InvalidInput(format!("dropout {} outside [0,1)", self.dropout)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::AVPair;
    use crate::numerics::{Adam, Graph};
    use crate::text::{
        all_true_mask, build_marker_mask, build_tocve_input, encode_target, tokenize, MarkerMask,
        Vocab,
    };

    fn tiny_cfg() -> ModelConfig {
        ModelConfig {
            d_model: 16,
            n_heads: 2,
            n_encoder_layers: 1,
            n_decoder_layers: 1,
            ffn_dim: 32,
            max_len: 32,
            dropout: 0.0,
            ..ModelConfig::default()
        }
    }

    fn table_vocab() -> Vocab {
        Vocab::build(
            [
                "boat", "rockerz", "255", "pro", "raging", "red", "bluetooth", "neckband",
                "brand", "model", "name", "color",
            ]
            .into_iter(),
        )
    }

    fn table_pairs() -> Vec<AVPair> {
        vec![
            AVPair::new("brand", vec![0]),
            AVPair::new("model name", vec![1, 2, 3]),
            AVPair::new("color", vec![4, 5]),
        ]
    }

    fn encode_states(model: &Seq2Seq, ids: &[usize], mask: &MarkerMask) -> Vec<f32> {
        let mut g = Graph::new();
        let mut drop = DropoutState::inference();
        let states = model.encode(&mut g, ids, mask, &mut drop).unwrap();
        g.value(states).to_vec()
    }

    #[test]
    fn marker_additivity_over_flagged_positions() {
        let vocab = table_vocab();
        let model = Seq2Seq::new(tiny_cfg(), vocab.clone(), 3).unwrap();
        let seq = tokenize(&vocab, "boat rockerz 255 pro raging red bluetooth neckband").unwrap();
        let d = model.cfg.d_model;
        let marker = model.bundle.get(model.bundle.lookup("marker").unwrap()).value.clone();

        let none = encode_states(&model, &seq.ids, &MarkerMask { flags: vec![false; 8] });
        let all = encode_states(&model, &seq.ids, &all_true_mask(&seq));
        for i in 0..8 {
            for j in 0..d {
                let diff = all[i * d + j] - none[i * d + j];
                assert!((diff - marker[j]).abs() < 1e-5, "row {i} col {j}: {diff} vs {}", marker[j]);
            }
        }

        // Training mask of the worked example: exactly the 6 value-covered
        // words shift; the two uncovered words are bitwise untouched.
        let mask = build_marker_mask(&seq, &table_pairs()).unwrap();
        let partial = encode_states(&model, &seq.ids, &mask);
        for i in 0..8 {
            for j in 0..d {
                if mask.flags[i] {
                    let diff = partial[i * d + j] - none[i * d + j];
                    assert!((diff - marker[j]).abs() < 1e-5);
                } else {
                    assert_eq!(partial[i * d + j].to_bits(), none[i * d + j].to_bits());
                }
            }
        }
    }

    #[test]
    fn disabled_marker_ignores_mask() {
        let vocab = table_vocab();
        let with = Seq2Seq::new(tiny_cfg(), vocab.clone(), 3).unwrap();
        let mut cfg_off = with.cfg.clone();
        cfg_off.marker_enabled = false;
        let without = Seq2Seq::from_parts(cfg_off, vocab.clone(), {
            let mut b = crate::numerics::ParamBundle::new();
            for p in with.bundle.iter() {
                b.add_raw(&p.name, p.rows, p.cols, p.value.clone()).unwrap();
            }
            b
        })
        .unwrap();
        let seq = tokenize(&vocab, "boat raging red").unwrap();
        let all = all_true_mask(&seq);
        let none = MarkerMask { flags: vec![false; 3] };
        // All-false mask on the marker model equals the marker-free encode.
        assert_eq!(encode_states(&with, &seq.ids, &none), encode_states(&without, &seq.ids, &all));
        // With markers disabled the mask is irrelevant, bitwise.
        assert_eq!(
            encode_states(&without, &seq.ids, &all),
            encode_states(&without, &seq.ids, &none)
        );
    }

    #[test]
    fn encode_rejects_mask_length_mismatch() {
        let vocab = table_vocab();
        let model = Seq2Seq::new(tiny_cfg(), vocab.clone(), 3).unwrap();
        let seq = tokenize(&vocab, "boat raging red").unwrap();
        let mut g = Graph::new();
        let mut drop = DropoutState::inference();
        assert!(model
            .encode(&mut g, &seq.ids, &MarkerMask { flags: vec![true; 2] }, &mut drop)
            .is_err());
    }

    #[test]
    fn genae_loss_handles_empty_target() {
        let vocab = table_vocab();
        let model = Seq2Seq::new(tiny_cfg(), vocab.clone(), 3).unwrap();
        let seq = tokenize(&vocab, "boat raging red").unwrap();
        let (g, loss) = model.loss(&seq.ids, &all_true_mask(&seq), &[], None).unwrap();
        let v = g.value(loss)[0];
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn marker_grad_zero_iff_mask_all_false() {
        let vocab = table_vocab();
        let mut model = Seq2Seq::new(tiny_cfg(), vocab.clone(), 3).unwrap();
        let seq = tokenize(&vocab, "boat raging red").unwrap();
        let target = encode_target(&vocab, "brand,color");
        let midx = model.bundle.lookup("marker").unwrap();

        let (mut g, loss) =
            model.loss(&seq.ids, &MarkerMask { flags: vec![false; 3] }, &target, None).unwrap();
        g.backward(loss).unwrap();
        g.accumulate_param_grads(&mut model.bundle);
        assert!(model.bundle.get(midx).grad.iter().all(|&x| x == 0.0));
        model.bundle.zero_grads();

        let (mut g, loss) = model.loss(&seq.ids, &all_true_mask(&seq), &target, None).unwrap();
        g.backward(loss).unwrap();
        g.accumulate_param_grads(&mut model.bundle);
        assert!(model.bundle.get(midx).grad.iter().any(|&x| x != 0.0));
    }

    #[test]
    fn decode_terminates_for_untrained_model() {
        let vocab = table_vocab();
        let model = Seq2Seq::new(tiny_cfg(), vocab.clone(), 3).unwrap();
        let seq = tokenize(&vocab, "boat raging red").unwrap();
        let out = model.greedy_decode(&seq.ids, &all_true_mask(&seq)).unwrap();
        assert!(out.len() < model.cfg.max_len);
    }

    #[test]
    fn tocve_loss_depends_only_on_name_rows() {
        let vocab = table_vocab();
        let model =
            TokenClassifier::new(tiny_cfg(), vocab.clone(), TokenClassifier::binary_labels(), 5)
                .unwrap();
        let seq = tokenize(&vocab, "boat raging red").unwrap();
        let (g_ref, loss_ref) = tocve_loss(&model, "color", &seq, &[1, 2], None).unwrap();
        let reference = g_ref.value(loss_ref)[0];

        // Recompute manually, perturbing the encoder states at the attribute
        // prefix and <sep> rows; the loss must not move.
        let (input, offset) = build_tocve_input(&vocab, "color", &seq).unwrap();
        let mut g = Graph::new();
        let mut drop = DropoutState::inference();
        let states = model.encode(&mut g, &input.ids, None, &mut drop).unwrap();
        let bump = g.input(1, model.cfg.d_model, vec![7.5; model.cfg.d_model]).unwrap();
        let prefix: Vec<usize> = (0..offset).collect();
        let perturbed = g.add_rows_at(states, bump, &prefix).unwrap();
        let name_rows: Vec<usize> = (offset..offset + seq.len()).collect();
        let logits = model.logits_over_rows(&mut g, perturbed, &name_rows).unwrap();
        let loss = g.cross_entropy_rows(logits, &[0, 1, 1]).unwrap();
        assert_eq!(g.value(loss)[0].to_bits(), reference.to_bits());
    }

    #[test]
    fn tocve_loss_accepts_empty_gold_and_rejects_bad_index() {
        let vocab = table_vocab();
        let model =
            TokenClassifier::new(tiny_cfg(), vocab.clone(), TokenClassifier::binary_labels(), 5)
                .unwrap();
        let seq = tokenize(&vocab, "boat raging red").unwrap();
        let (g, loss) = tocve_loss(&model, "brand", &seq, &[], None).unwrap();
        assert!(g.value(loss)[0].is_finite());
        assert!(tocve_loss(&model, "brand", &seq, &[3], None).is_err());
    }

    #[test]
    fn tocve_predict_is_total_and_in_range() {
        let vocab = table_vocab();
        let model =
            TokenClassifier::new(tiny_cfg(), vocab.clone(), TokenClassifier::binary_labels(), 5)
                .unwrap();
        let seq = tokenize(&vocab, "boat raging red").unwrap();
        let yes = tocve_predict(&model, "color", &seq).unwrap();
        assert!(yes.iter().all(|&i| i < 3));
        assert!(yes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn merge_rule_examples() {
        let names: Vec<String> = ["O", "brand", "color"].iter().map(|s| s.to_string()).collect();
        assert_eq!(merge_token_labels(&[0, 0, 0], &names), []);
        let pairs = merge_token_labels(&[1, 0, 2, 2], &names);
        assert_eq!(
            pairs,
            [AVPair::new("brand", vec![0]), AVPair::new("color", vec![2, 3])]
        );
        // A label change without an O gap still splits runs.
        let pairs = merge_token_labels(&[1, 2], &names);
        assert_eq!(pairs.len(), 2);
    }

    #[test]
    fn ground_value_takes_leftmost_unused_span() {
        let words: Vec<String> =
            ["red", "boat", "red", "mug"].iter().map(|s| s.to_string()).collect();
        let mut used = vec![false; 4];
        let red = vec!["red".to_string()];
        assert_eq!(ground_value(&words, &red, &mut used), Some(vec![0]));
        assert_eq!(ground_value(&words, &red, &mut used), Some(vec![2]));
        assert_eq!(ground_value(&words, &red, &mut used), None);
        assert_eq!(ground_value(&words, &["green".to_string()], &mut used), None);
        assert_eq!(ground_value(&words, &[], &mut used), None);
    }

    #[test]
    fn genave_decode_is_total_with_disjoint_pairs() {
        let vocab = table_vocab();
        let model = Seq2Seq::new(tiny_cfg(), vocab.clone(), 9).unwrap();
        let seq = tokenize(&vocab, "boat raging red").unwrap();
        let (pairs, _malformed) = genave_decode(&model, &seq).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for p in &pairs {
            for &i in &p.value_indices {
                assert!(i < 3);
                assert!(seen.insert(i), "word {i} claimed twice");
            }
        }
    }

    #[test]
    fn tocave_predict_merges_and_respects_marker_flag() {
        let vocab = table_vocab();
        let labels: Vec<String> =
            ["O", "brand", "color"].iter().map(|s| s.to_string()).collect();
        let mut cfg = tiny_cfg();
        cfg.marker_enabled = false;
        let model = TokenClassifier::new(cfg, vocab.clone(), labels, 5).unwrap();
        let seq = tokenize(&vocab, "boat raging red").unwrap();
        let pairs = tocave_predict(&model, &seq).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for p in &pairs {
            assert!(!p.value_indices.is_empty());
            assert_ne!(p.attribute, "O");
            for &i in &p.value_indices {
                assert!(seen.insert(i));
            }
        }
    }

    #[test]
    fn genae_fixture_loss_decreases() {
        let vocab = table_vocab();
        let mut model = Seq2Seq::new(tiny_cfg(), vocab.clone(), 7).unwrap();
        let seq = tokenize(&vocab, "boat rockerz 255 pro raging red bluetooth neckband").unwrap();
        let mask = build_marker_mask(&seq, &table_pairs()).unwrap();
        let target = encode_target(&vocab, "brand,model name,color");
        let mut opt = Adam::new(&model.bundle, 3e-3);
        let mut first = f32::NAN;
        let mut last = f32::NAN;
        for step in 0..50 {
            let (mut g, loss) = model.loss(&seq.ids, &mask, &target, None).unwrap();
            let v = g.value(loss)[0];
            if step == 0 {
                first = v;
            }
            last = v;
            g.backward(loss).unwrap();
            g.accumulate_param_grads(&mut model.bundle);
            opt.step(&mut model.bundle).unwrap();
        }
        assert!(last < 0.5 * first, "loss {first} -> {last}");
    }

    #[test]
    fn model_kind_serde_matches_short_names() {
        for kind in [
            ModelKind::GenAe,
            ModelKind::TocVe,
            ModelKind::GenAve,
            ModelKind::TocAve,
            ModelKind::Rescorer,
        ] {
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.as_str()));
            assert_eq!(ModelKind::parse(kind.as_str()).unwrap(), kind);
        }
        assert!(ModelKind::parse("bogus").is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = tiny_cfg();
        cfg.vocab_size = 10;
        cfg.validate().unwrap();
        cfg.n_heads = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = tiny_cfg();
        cfg.vocab_size = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = tiny_cfg();
        cfg.vocab_size = 10;
        cfg.dropout = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn seeded_models_are_deterministic() {
        let vocab = table_vocab();
        let a = Seq2Seq::new(tiny_cfg(), vocab.clone(), 11).unwrap();
        let b = Seq2Seq::new(tiny_cfg(), vocab.clone(), 11).unwrap();
        for (pa, pb) in a.bundle.iter().zip(b.bundle.iter()) {
            assert_eq!(pa.value, pb.value);
        }
    }
}
