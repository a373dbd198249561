//! Training plans, the training loop, value pruning, two-stage inference and
//! dataset bootstrapping.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{stats, AVPair, CorpusStats, ProductExample};
use crate::models::{
    genave_decode, tocave_loss, tocve_loss, tocve_predict, ModelConfig, ModelKind, Seq2Seq,
    TokenClassifier, O_LABEL,
};
use crate::numerics::{seeded_rng, Adam};
use crate::text::{
    all_true_mask, build_genae_target, build_genave_target, build_marker_mask,
    build_rescorer_target, encode_target, parse_genae_output, render_target, MarkerMask, TokenSeq,
    Vocab,
};
use crate::{GentocError, Result};

fn default_epochs() -> usize {
    10
}
fn default_batch_size() -> usize {
    16
}
fn default_lr() -> f64 {
    3e-4
}
fn default_vp_rate() -> f64 {
    0.3
}

/// Everything needed to train one model from a dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainPlan {
    pub kind: ModelKind,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_lr")]
    pub lr: f64,
    /// Fraction of observed pairs turned into all-NO value-pruning negatives
    /// when training the value extractor.
    #[serde(default = "default_vp_rate")]
    pub value_pruning_rate: f64,
}

impl TrainPlan {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(GentocError::InvalidInput("epochs and batch_size must be >= 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(GentocError::InvalidInput(format!("learning rate {} must be positive", self.lr)));
        }
        if !(0.0..=1.0).contains(&self.value_pruning_rate) {
            return Err(GentocError::InvalidInput(format!(
                "value_pruning_rate {} outside [0, 1]",
                self.value_pruning_rate
            )));
        }
        Ok(())
    }
}

/// A trained model of either family.
pub enum TrainedModel {
    Seq2Seq(Seq2Seq),
    Classifier(TokenClassifier),
}

pub struct TrainOutcome {
    pub model: TrainedModel,
    /// Mean training loss per epoch.
    pub loss_history: Vec<f64>,
}

/// Delete the value words of `pairs[pair_idx]` from `words`, yielding a name
/// on which that pair's attribute has no value. Returns `None` when the
/// negative would be unsound: the deletion empties the name, or the same
/// attribute has another value elsewhere in the example.
pub fn value_pruning_negative(words: &[String], pairs: &[AVPair], pair_idx: usize) -> Option<Vec<String>> {
    let target = &pairs[pair_idx];
    let elsewhere = pairs
        .iter()
        .enumerate()
        .any(|(i, p)| i != pair_idx && p.attribute == target.attribute);
    if elsewhere {
        return None;
    }
    let kept: Vec<String> = words
        .iter()
        .enumerate()
        .filter(|(i, _)| !target.value_indices.contains(i))
        .map(|(_, w)| w.clone())
        .collect();
    if kept.is_empty() {
        None
    } else {
        Some(kept)
    }
}

enum Record {
    Seq2Seq { src: Vec<usize>, mask: MarkerMask, target: Vec<usize> },
    TocVe { attribute: String, seq: TokenSeq, yes: Vec<usize> },
    TocAve { seq: TokenSeq, targets: Vec<usize>, marker: Option<Vec<usize>> },
}

fn seq2seq_records(
    plan: &TrainPlan,
    dataset: &[ProductExample],
    vocab: &Vocab,
) -> Result<Vec<Record>> {
    let mut records = Vec::new();
    for ex in dataset {
        if ex.observed_pairs.is_empty() {
            continue;
        }
        let seq = ex.seq(vocab);
        let mask = build_marker_mask(&seq, &ex.observed_pairs)?;
        match plan.kind {
            ModelKind::GenAe => {
                let target = build_genae_target(&ex.observed_pairs);
                records.push(Record::Seq2Seq { src: seq.ids, mask, target: encode_target(vocab, &target) });
            }
            ModelKind::GenAve => {
                let target = build_genave_target(&seq, &ex.observed_pairs);
                records.push(Record::Seq2Seq { src: seq.ids, mask, target: encode_target(vocab, &target) });
            }
            ModelKind::Rescorer => {
                // One record per pair: the rescorer learns p(attr: value | name).
                for p in &ex.observed_pairs {
                    let target = build_rescorer_target(&seq, p);
                    records.push(Record::Seq2Seq {
                        src: seq.ids.clone(),
                        mask: mask.clone(),
                        target: encode_target(vocab, &target),
                    });
                }
            }
            _ => unreachable!("seq2seq_records called for classifier kind"),
        }
    }
    Ok(records)
}

fn tocve_records(plan: &TrainPlan, dataset: &[ProductExample], vocab: &Vocab) -> Vec<Record> {
    let mut rng = seeded_rng(plan.seed ^ 0x5651);
    let mut records = Vec::new();
    for ex in dataset {
        let seq = ex.seq(vocab);
        for (i, p) in ex.observed_pairs.iter().enumerate() {
            records.push(Record::TocVe {
                attribute: p.attribute.clone(),
                seq: seq.clone(),
                yes: p.value_indices.clone(),
            });
            if rng.gen::<f64>() < plan.value_pruning_rate {
                if let Some(words) = value_pruning_negative(&ex.words, &ex.observed_pairs, i) {
                    let ids = words.iter().map(|w| vocab.id(w)).collect();
                    records.push(Record::TocVe {
                        attribute: p.attribute.clone(),
                        seq: TokenSeq { words, ids },
                        yes: Vec::new(),
                    });
                }
            }
        }
    }
    records
}

/// Closed label set for the single-stage tagger: `"O"` plus the observed
/// attributes in sorted order.
pub fn tocave_labels(dataset: &[ProductExample]) -> Vec<String> {
    let attrs: std::collections::BTreeSet<&str> = dataset
        .iter()
        .flat_map(|ex| ex.observed_pairs.iter().map(|p| p.attribute.as_str()))
        .collect();
    std::iter::once("O".to_string()).chain(attrs.into_iter().map(str::to_string)).collect()
}

fn tocave_records(
    dataset: &[ProductExample],
    vocab: &Vocab,
    labels: &[String],
    marker_enabled: bool,
) -> Result<Vec<Record>> {
    let index: std::collections::HashMap<&str, usize> =
        labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut records = Vec::new();
    for ex in dataset {
        let seq = ex.seq(vocab);
        let mut targets = vec![O_LABEL; seq.len()];
        let mut marked = Vec::new();
        for p in &ex.observed_pairs {
            let label = *index.get(p.attribute.as_str()).ok_or_else(|| {
                GentocError::InvalidInput(format!("attribute {:?} missing from label set", p.attribute))
            })?;
            for &i in &p.value_indices {
                targets[i] = label;
                marked.push(i);
            }
        }
        marked.sort_unstable();
        let marker = (marker_enabled && !marked.is_empty()).then_some(marked);
        records.push(Record::TocAve { seq, targets, marker });
    }
    Ok(records)
}

fn record_loss(
    record: &Record,
    model: &TrainedModel,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<(crate::numerics::Graph, crate::numerics::NodeId)> {
    match (record, model) {
        (Record::Seq2Seq { src, mask, target }, TrainedModel::Seq2Seq(m)) => {
            m.loss(src, mask, target, Some(rng))
        }
        (Record::TocVe { attribute, seq, yes }, TrainedModel::Classifier(m)) => {
            tocve_loss(m, attribute, seq, yes, Some(rng))
        }
        (Record::TocAve { seq, targets, marker }, TrainedModel::Classifier(m)) => {
            tocave_loss(m, seq, targets, marker.as_deref(), Some(rng))
        }
        _ => unreachable!("record/model kind mismatch"),
    }
}

/// Train a model per `plan`. Records are shuffled each epoch; gradients are
/// averaged over each batch before the optimizer step.
pub fn train(plan: &TrainPlan, dataset: &[ProductExample], vocab: &Vocab) -> Result<TrainOutcome> {
    plan.validate()?;
    if dataset.is_empty() {
        return Err(GentocError::InvalidInput("empty training dataset".into()));
    }

    let mut records = match plan.kind {
        ModelKind::GenAe | ModelKind::GenAve | ModelKind::Rescorer => {
            seq2seq_records(plan, dataset, vocab)?
        }
        ModelKind::TocVe => tocve_records(plan, dataset, vocab),
        ModelKind::TocAve => {
            let labels = tocave_labels(dataset);
            tocave_records(dataset, vocab, &labels, plan.model.marker_enabled)?
        }
    };
    if records.is_empty() {
        return Err(GentocError::InvalidInput("no trainable records in dataset".into()));
    }

    let mut model = match plan.kind {
        ModelKind::GenAe | ModelKind::GenAve | ModelKind::Rescorer => {
            TrainedModel::Seq2Seq(Seq2Seq::new(plan.model.clone(), vocab.clone(), plan.seed)?)
        }
        ModelKind::TocVe => TrainedModel::Classifier(TokenClassifier::new(
            plan.model.clone(),
            vocab.clone(),
            TokenClassifier::binary_labels(),
            plan.seed,
        )?),
        ModelKind::TocAve => TrainedModel::Classifier(TokenClassifier::new(
            plan.model.clone(),
            vocab.clone(),
            tocave_labels(dataset),
            plan.seed,
        )?),
    };

    let mut opt = {
        let bundle = match &model {
            TrainedModel::Seq2Seq(m) => &m.bundle,
            TrainedModel::Classifier(m) => &m.bundle,
        };
        Adam::new(bundle, plan.lr as f32)
    };

    let mut shuffle_rng = seeded_rng(plan.seed ^ 0x51f7);
    let mut drop_rng = seeded_rng(plan.seed ^ 0xd209);
    let mut history = Vec::with_capacity(plan.epochs);
    for epoch in 0..plan.epochs {
        records.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in records.chunks(plan.batch_size) {
            let inv = 1.0 / batch.len() as f32;
            for record in batch {
                let (mut g, loss) = record_loss(record, &model, &mut drop_rng)?;
                let value = g.value(loss)[0];
                if !value.is_finite() {
                    return Err(GentocError::Diverged(format!(
                        "non-finite loss at epoch {epoch}"
                    )));
                }
                epoch_loss += value as f64;
                let scaled = g.scale(loss, inv);
                g.backward(scaled)?;
                let bundle = match &mut model {
                    TrainedModel::Seq2Seq(m) => &mut m.bundle,
                    TrainedModel::Classifier(m) => &mut m.bundle,
                };
                g.accumulate_param_grads(bundle);
            }
            let bundle = match &mut model {
                TrainedModel::Seq2Seq(m) => &mut m.bundle,
                TrainedModel::Classifier(m) => &mut m.bundle,
            };
            bundle.mark_grads_ready();
            opt.step(bundle)?;
        }
        history.push(epoch_loss / records.len() as f64);
    }
    Ok(TrainOutcome { model, loss_history: history })
}

/// Resolve stage-1 attribute proposals and stage-2 value predictions into a
/// disjoint pair set: duplicates keep their first occurrence, empty values are
/// pruned, and already-claimed words are dropped from later pairs (a pair left
/// with no words is dropped too).
pub fn assemble_pairs(proposals: Vec<(String, Vec<usize>)>, n_words: usize) -> Vec<AVPair> {
    let mut seen: std::collections::HashSet<String> = std::collections::HashSet::new();
    let mut claimed = vec![false; n_words];
    let mut out = Vec::new();
    for (attr, indices) in proposals {
        if !seen.insert(attr.clone()) {
            continue;
        }
        let free: Vec<usize> = indices.into_iter().filter(|&i| i < n_words && !claimed[i]).collect();
        if free.is_empty() {
            continue;
        }
        for &i in &free {
            claimed[i] = true;
        }
        out.push(AVPair::new(attr, free));
    }
    out
}

/// Full two-stage inference: propose attributes with the generator (every
/// word marked), extract each value with the classifier, then assemble.
/// Returns the pairs and the malformed-segment tally from decoding.
pub fn gentoc_infer(genae: &Seq2Seq, tocve: &TokenClassifier, seq: &TokenSeq) -> Result<(Vec<AVPair>, usize)> {
    let mask = all_true_mask(seq);
    let out_ids = genae.greedy_decode(&seq.ids, &mask)?;
    let rendered = render_target(&genae.vocab, &out_ids);
    let (attrs, malformed) = parse_genae_output(&rendered);
    let mut proposals = Vec::with_capacity(attrs.len());
    for attr in attrs {
        // A degenerate stage-1 proposal can overflow the classifier's input
        // budget; treat it as having no value rather than failing inference.
        let attr_words = attr.split_whitespace().count();
        if attr_words + 1 + seq.len() > tocve.cfg.max_len {
            proposals.push((attr, Vec::new()));
            continue;
        }
        let yes = tocve_predict(tocve, &attr, seq)?;
        proposals.push((attr, yes));
    }
    Ok((assemble_pairs(proposals, seq.len()), malformed))
}

/// Single-stage seq2seq inference, re-exported here for symmetry.
pub fn genave_infer(model: &Seq2Seq, seq: &TokenSeq) -> Result<(Vec<AVPair>, usize)> {
    genave_decode(model, seq)
}

pub struct BootstrapOutcome {
    pub dataset: Vec<ProductExample>,
    pub before: CorpusStats,
    pub after: CorpusStats,
}

/// Re-annotate a dataset with two-stage predictions: `observed_pairs` is
/// replaced, the hidden full gold is untouched.
pub fn bootstrap(
    genae: &Seq2Seq,
    tocve: &TokenClassifier,
    dataset: Vec<ProductExample>,
    vocab: &Vocab,
) -> Result<BootstrapOutcome> {
    let before = stats(&dataset)?;
    let mut out = Vec::with_capacity(dataset.len());
    for mut ex in dataset {
        let seq = ex.seq(vocab);
        let (pairs, _) = gentoc_infer(genae, tocve, &seq)?;
        ex.observed_pairs = pairs;
        out.push(ex);
    }
    let after = stats(&out)?;
    Ok(BootstrapOutcome { dataset: out, before, after })
}
