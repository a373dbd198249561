//! Encoder-only per-token classifiers: the YES/NO value extractor and the
//! closed-label-set single-stage tagger.

use rand_chacha::ChaCha8Rng;

use crate::corpus::AVPair;
use crate::numerics::{seeded_rng, Graph, NodeId, ParamBundle, ParamSpec};
use crate::text::{build_tocve_input, TokenSeq, Vocab};
use crate::{GentocError, Result};

use super::seq2seq::argmax;
use super::transformer::{encoder_forward, head_forward, register_encoder, register_head, DropoutState};
use super::ModelConfig;

pub const NO_LABEL: usize = 0;
pub const YES_LABEL: usize = 1;
/// Index of the outside label in the single-stage tagger's label space.
pub const O_LABEL: usize = 0;

pub struct TokenClassifier {
    pub cfg: ModelConfig,
    pub vocab: Vocab,
    /// Closed label set. `["no", "yes"]` for the value extractor; `"O"`
    /// followed by the attribute set for the single-stage tagger.
    pub labels: Vec<String>,
    pub bundle: ParamBundle,
}

impl TokenClassifier {
    pub fn new(mut cfg: ModelConfig, vocab: Vocab, labels: Vec<String>, seed: u64) -> Result<Self> {
        cfg.vocab_size = vocab.len();
        cfg.validate()?;
        if labels.len() < 2 {
            return Err(GentocError::InvalidInput("need at least two labels".into()));
        }
        let mut rng = seeded_rng(seed);
        let mut bundle = ParamBundle::new();
        register_encoder(&mut bundle, &cfg, &mut rng)?;
        register_head(&mut bundle, &cfg, labels.len(), &mut rng)?;
        Ok(TokenClassifier { cfg, vocab, labels, bundle })
    }

    pub fn binary_labels() -> Vec<String> {
        vec!["no".into(), "yes".into()]
    }

    pub fn from_parts(cfg: ModelConfig, vocab: Vocab, labels: Vec<String>, bundle: ParamBundle) -> Result<Self> {
        cfg.validate()?;
        Ok(TokenClassifier { cfg, vocab, labels, bundle })
    }

    pub fn param_specs(&self) -> Vec<ParamSpec> {
        self.bundle
            .iter()
            .map(|p| ParamSpec { name: p.name.clone(), rows: p.rows, cols: p.cols })
            .collect()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == 0 {
            return Err(GentocError::InvalidInput("empty input sequence".into()));
        }
        if len > self.cfg.max_len {
            return Err(GentocError::InvalidInput(format!(
                "input length {len} exceeds max length {}",
                self.cfg.max_len
            )));
        }
        Ok(())
    }

    /// Encoder states, optionally with the marker vector added (tagger
    /// marker-ablation variant).
    pub fn encode(
        &self,
        g: &mut Graph,
        ids: &[usize],
        marker_positions: Option<&[usize]>,
        drop: &mut DropoutState,
    ) -> Result<NodeId> {
        self.check_len(ids.len())?;
        encoder_forward(g, &self.bundle, &self.cfg, ids, marker_positions, drop)
    }

    /// Label logits over the rows of `states` selected by `rows`.
    pub fn logits_over_rows(&self, g: &mut Graph, states: NodeId, rows: &[usize]) -> Result<NodeId> {
        let picked = g.gather_rows(states, rows)?;
        head_forward(g, &self.bundle, picked)
    }

    fn softmax_labels(&self, logits: &[f32]) -> Vec<f64> {
        let max = logits.iter().fold(f32::NEG_INFINITY, |a, &b| a.max(b)) as f64;
        let exps: Vec<f64> = logits.iter().map(|&z| ((z as f64) - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / sum).collect()
    }
}

/// Mean cross entropy over the product-name positions only; the attribute
/// prefix and `<sep>` are excluded from the loss.
pub fn tocve_loss(
    model: &TokenClassifier,
    attribute: &str,
    seq: &TokenSeq,
    gold_yes: &[usize],
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(Graph, NodeId)> {
    if let Some(&bad) = gold_yes.iter().find(|&&i| i >= seq.len()) {
        return Err(GentocError::InvalidInput(format!(
            "gold index {bad} out of range for {}-word name",
            seq.len()
        )));
    }
    let (input, offset) = build_tocve_input(&model.vocab, attribute, seq)?;
    let mut drop = match rng {
        Some(r) => DropoutState::training(model.cfg.dropout, r),
        None => DropoutState::inference(),
    };
    let mut g = Graph::new();
    let states = model.encode(&mut g, &input.ids, None, &mut drop)?;
    let name_rows: Vec<usize> = (offset..offset + seq.len()).collect();
    let logits = model.logits_over_rows(&mut g, states, &name_rows)?;
    let mut targets = vec![NO_LABEL; seq.len()];
    for &i in gold_yes {
        targets[i] = YES_LABEL;
    }
    let loss = g.cross_entropy_rows(logits, &targets)?;
    Ok((g, loss))
}

/// Word indices whose YES probability exceeds 0.5.
pub fn tocve_predict(model: &TokenClassifier, attribute: &str, seq: &TokenSeq) -> Result<Vec<usize>> {
    let (input, offset) = build_tocve_input(&model.vocab, attribute, seq)?;
    let mut drop = DropoutState::inference();
    let mut g = Graph::new();
    let states = model.encode(&mut g, &input.ids, None, &mut drop)?;
    let name_rows: Vec<usize> = (offset..offset + seq.len()).collect();
    let logits = model.logits_over_rows(&mut g, states, &name_rows)?;
    let values = g.value(logits);
    let n_labels = model.labels.len();
    let mut yes = Vec::new();
    for i in 0..seq.len() {
        let probs = model.softmax_labels(&values[i * n_labels..(i + 1) * n_labels]);
        if probs[YES_LABEL] > 0.5 {
            yes.push(i);
        }
    }
    Ok(yes)
}

/// Per-token cross entropy for the single-stage tagger. `targets` holds a
/// label index per name word (`O_LABEL` for uncovered words);
/// `marker_positions`, when given, adds the marker vector there.
pub fn tocave_loss(
    model: &TokenClassifier,
    seq: &TokenSeq,
    targets: &[usize],
    marker_positions: Option<&[usize]>,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(Graph, NodeId)> {
    if targets.len() != seq.len() {
        return Err(GentocError::InvalidInput(format!(
            "{} targets for {}-word name",
            targets.len(),
            seq.len()
        )));
    }
    let mut drop = match rng {
        Some(r) => DropoutState::training(model.cfg.dropout, r),
        None => DropoutState::inference(),
    };
    let mut g = Graph::new();
    let states = model.encode(&mut g, &seq.ids, marker_positions, &mut drop)?;
    let rows: Vec<usize> = (0..seq.len()).collect();
    let logits = model.logits_over_rows(&mut g, states, &rows)?;
    let loss = g.cross_entropy_rows(logits, targets)?;
    Ok((g, loss))
}

/// Per-token argmax over the label space, then merge consecutive words with
/// the same non-O label into one pair. When the model was trained with
/// markers, the marker is applied to every word at inference.
pub fn tocave_predict(model: &TokenClassifier, seq: &TokenSeq) -> Result<Vec<AVPair>> {
    let mut drop = DropoutState::inference();
    let mut g = Graph::new();
    let all: Vec<usize> = (0..seq.len()).collect();
    let marker = model.cfg.marker_enabled.then_some(all.as_slice());
    let states = model.encode(&mut g, &seq.ids, marker, &mut drop)?;
    let logits = model.logits_over_rows(&mut g, states, &all)?;
    let values = g.value(logits);
    let n_labels = model.labels.len();
    let labels: Vec<usize> =
        (0..seq.len()).map(|i| argmax(&values[i * n_labels..(i + 1) * n_labels])).collect();
    Ok(merge_token_labels(&labels, &model.labels))
}

/// Merge rule: consecutive tokens sharing the same non-O label index become a
/// single pair whose value is that token run.
pub fn merge_token_labels(labels: &[usize], label_names: &[String]) -> Vec<AVPair> {
    let mut pairs = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        if labels[i] == O_LABEL {
            i += 1;
            continue;
        }
        let label = labels[i];
        let start = i;
        while i < labels.len() && labels[i] == label {
            i += 1;
        }
        pairs.push(AVPair::new(label_names[label].clone(), (start..i).collect()));
    }
    pairs
}
