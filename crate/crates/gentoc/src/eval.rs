//! Pair-set metrics, confidence rescoring with precision-recall curves, and a
//! latency microbenchmark.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{AVPair, ProductExample};
use crate::models::{genave_decode, tocave_predict, Seq2Seq, TokenClassifier};
use crate::pipeline::gentoc_infer;
use crate::text::{all_true_mask, build_rescorer_target, encode_target, TokenSeq, Vocab};
use crate::{GentocError, Result};

/// Minimum word count for the long-name slice.
pub const LONG_NAME_MIN_WORDS: usize = 9;

fn canon<'a>(attr: &'a str, synonyms: Option<&'a HashMap<String, String>>) -> &'a str {
    synonyms
        .and_then(|m| m.get(attr))
        .map(String::as_str)
        .unwrap_or(attr)
}

fn match_count(pred: &[AVPair], gold: &[AVPair], synonyms: Option<&HashMap<String, String>>) -> usize {
    let mut gold_keys: Vec<(&str, &[usize])> = gold
        .iter()
        .map(|p| (canon(&p.attribute, synonyms), p.value_indices.as_slice()))
        .collect();
    let mut matched = 0usize;
    for p in pred {
        let key = (canon(&p.attribute, synonyms), p.value_indices.as_slice());
        if let Some(pos) = gold_keys.iter().position(|&k| k == key) {
            gold_keys.swap_remove(pos);
            matched += 1;
        }
    }
    matched
}

/// Per-example precision, recall and F1. A predicted pair is correct iff its
/// (canonicalized) attribute and exact value-index set match a gold pair;
/// each gold pair matches at most once. Empty prediction sets score precision
/// 1 only against empty gold; empty gold sets score recall 1; F1 is 0 when
/// P + R is 0.
pub fn pair_set_metrics(
    pred: &[AVPair],
    gold: &[AVPair],
    synonyms: Option<&HashMap<String, String>>,
) -> (f64, f64, f64) {
    let matched = match_count(pred, gold, synonyms);
    let precision = if pred.is_empty() {
        if gold.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        matched as f64 / pred.len() as f64
    };
    let recall = if gold.is_empty() { 1.0 } else { matched as f64 / gold.len() as f64 };
    (precision, recall, f1(precision, recall))
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Macro-averaged metrics over one slice of the test set.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SliceMetrics {
    pub name: String,
    pub n_examples: usize,
    /// Mean per-example precision.
    pub precision: f64,
    /// Mean per-example recall.
    pub recall: f64,
    /// Mean of per-example F1 scores.
    pub f1_mean: f64,
    /// Harmonic mean of the averaged precision and recall.
    pub f1_of_means: f64,
    /// Mean fraction of name words covered by predicted pairs.
    pub tagged_ratio: f64,
}

/// Evaluation result: the full set plus the long-name slice, aggregate pair
/// counts, and the count of malformed decoder segments seen while predicting.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricsReport {
    pub slices: Vec<SliceMetrics>,
    pub predicted_pairs: usize,
    pub gold_pairs: usize,
    pub correct_pairs: usize,
    pub malformed_segments: usize,
}

impl MetricsReport {
    pub fn slice(&self, name: &str) -> Option<&SliceMetrics> {
        self.slices.iter().find(|s| s.name == name)
    }
}

/// Anything that maps a product name to attribute-value pairs plus a
/// malformed-output tally.
pub trait Extractor {
    fn extract(&self, seq: &TokenSeq) -> Result<(Vec<AVPair>, usize)>;
}

/// The two-stage pipeline.
pub struct GenTocExtractor<'a> {
    pub genae: &'a Seq2Seq,
    pub tocve: &'a TokenClassifier,
}

impl Extractor for GenTocExtractor<'_> {
    fn extract(&self, seq: &TokenSeq) -> Result<(Vec<AVPair>, usize)> {
        gentoc_infer(self.genae, self.tocve, seq)
    }
}

/// Single-stage seq2seq baseline.
pub struct GenAveExtractor<'a>(pub &'a Seq2Seq);

impl Extractor for GenAveExtractor<'_> {
    fn extract(&self, seq: &TokenSeq) -> Result<(Vec<AVPair>, usize)> {
        genave_decode(self.0, seq)
    }
}

/// Single-stage tagger baseline; tagging never produces malformed output.
pub struct TaggerExtractor<'a>(pub &'a TokenClassifier);

impl Extractor for TaggerExtractor<'_> {
    fn extract(&self, seq: &TokenSeq) -> Result<(Vec<AVPair>, usize)> {
        Ok((tocave_predict(self.0, seq)?, 0))
    }
}

struct Tally {
    n: usize,
    p: f64,
    r: f64,
    f1: f64,
    tagged: f64,
}

impl Tally {
    fn new() -> Self {
        Tally { n: 0, p: 0.0, r: 0.0, f1: 0.0, tagged: 0.0 }
    }

    fn push(&mut self, p: f64, r: f64, tagged: f64) {
        self.n += 1;
        self.p += p;
        self.r += r;
        self.f1 += f1(p, r);
        self.tagged += tagged;
    }

    fn finish(self, name: &str) -> SliceMetrics {
        let n = self.n.max(1) as f64;
        let p = self.p / n;
        let r = self.r / n;
        SliceMetrics {
            name: name.to_string(),
            n_examples: self.n,
            precision: p,
            recall: r,
            f1_mean: self.f1 / n,
            f1_of_means: f1(p, r),
            tagged_ratio: self.tagged / n,
        }
    }
}

/// Run an extractor over a dataset and score against the gold pairs (the
/// hidden full set when present). Attribute surface forms on both sides are
/// canonicalized through `synonyms` when given.
pub fn evaluate(
    extractor: &dyn Extractor,
    dataset: &[ProductExample],
    vocab: &Vocab,
    synonyms: Option<&HashMap<String, String>>,
) -> Result<MetricsReport> {
    if dataset.is_empty() {
        return Err(GentocError::InvalidInput("empty evaluation dataset".into()));
    }
    let mut all = Tally::new();
    let mut long = Tally::new();
    let mut malformed = 0;
    let (mut n_pred, mut n_gold, mut n_correct) = (0, 0, 0);
    for ex in dataset {
        let seq = ex.seq(vocab);
        let (pred, bad) = extractor.extract(&seq)?;
        malformed += bad;
        let gold = ex.gold_pairs();
        let (p, r, _) = pair_set_metrics(&pred, gold, synonyms);
        n_pred += pred.len();
        n_gold += gold.len();
        n_correct += match_count(&pred, gold, synonyms);
        let covered: HashSet<usize> =
            pred.iter().flat_map(|pr| pr.value_indices.iter().copied()).collect();
        let tagged = covered.len() as f64 / seq.len() as f64;
        all.push(p, r, tagged);
        if seq.len() >= LONG_NAME_MIN_WORDS {
            long.push(p, r, tagged);
        }
    }
    Ok(MetricsReport {
        slices: vec![all.finish("all"), long.finish("long_names")],
        predicted_pairs: n_pred,
        gold_pairs: n_gold,
        correct_pairs: n_correct,
        malformed_segments: malformed,
    })
}

/// Confidence of one extraction under the rescorer: the geometric mean of the
/// per-token probabilities of `attr: value` (plus end-of-sequence) given the
/// product name.
pub fn score_pair(rescorer: &Seq2Seq, seq: &TokenSeq, pair: &AVPair) -> Result<f64> {
    let target = build_rescorer_target(seq, pair);
    let target_ids = encode_target(&rescorer.vocab, &target);
    let mask = all_true_mask(seq);
    let lps = rescorer.target_log_probs(&seq.ids, &mask, &target_ids)?;
    let mean = lps.iter().sum::<f64>() / lps.len() as f64;
    Ok(mean.exp())
}

/// One predicted pair with its rescorer confidence.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScoredPair {
    pub pair: AVPair,
    pub confidence: f64,
}

/// One example's gold pairs and scored predictions.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScoredExample {
    pub gold: Vec<AVPair>,
    pub preds: Vec<ScoredPair>,
}

/// Extract over the dataset and score every predicted pair, keeping the
/// per-example structure so thresholded metrics stay macro-averaged.
pub fn score_predictions(
    extractor: &dyn Extractor,
    rescorer: &Seq2Seq,
    dataset: &[ProductExample],
    vocab: &Vocab,
) -> Result<Vec<ScoredExample>> {
    let mut scored = Vec::with_capacity(dataset.len());
    for ex in dataset {
        let seq = ex.seq(vocab);
        let (pred, _) = extractor.extract(&seq)?;
        let mut preds = Vec::with_capacity(pred.len());
        for p in pred {
            let confidence = score_pair(rescorer, &seq, &p)?;
            preds.push(ScoredPair { pair: p, confidence });
        }
        scored.push(ScoredExample { gold: ex.gold_pairs().to_vec(), preds });
    }
    Ok(scored)
}

/// One point of a precision-recall curve.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Macro-averaged precision/recall at uniformly spaced confidence thresholds;
/// predictions with confidence >= threshold are kept. The t=0 point keeps
/// everything and so reproduces the unthresholded metrics exactly.
pub fn pr_curve(
    scored: &[ScoredExample],
    synonyms: Option<&HashMap<String, String>>,
    n_thresholds: usize,
) -> Result<Vec<PrPoint>> {
    if n_thresholds < 2 {
        return Err(GentocError::InvalidInput("need at least two thresholds".into()));
    }
    if scored.is_empty() {
        return Err(GentocError::InvalidInput("no scored examples".into()));
    }
    let mut points = Vec::with_capacity(n_thresholds);
    for i in 0..n_thresholds {
        let t = i as f64 / (n_thresholds - 1) as f64;
        let (mut psum, mut rsum) = (0.0, 0.0);
        for ex in scored {
            let kept: Vec<AVPair> = ex
                .preds
                .iter()
                .filter(|s| s.confidence >= t)
                .map(|s| s.pair.clone())
                .collect();
            let (p, r, _) = pair_set_metrics(&kept, &ex.gold, synonyms);
            psum += p;
            rsum += r;
        }
        let n = scored.len() as f64;
        points.push(PrPoint { threshold: t, precision: psum / n, recall: rsum / n });
    }
    Ok(points)
}

/// Wall-clock summary of per-query extraction latency.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LatencyReport {
    pub hardware: String,
    pub n_queries: usize,
    pub mean_ms: f64,
    pub stddev_ms: f64,
}

fn hardware_descriptor() -> String {
    let cpus = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    format!("{}-{} {} cpus", std::env::consts::ARCH, std::env::consts::OS, cpus)
}

/// Time an extractor at batch size one over at least 100 measured queries
/// (cycling through the dataset as needed) after `warmup` unmeasured ones;
/// single-threaded, one measurement per query.
pub fn latency_bench(
    extractor: &dyn Extractor,
    dataset: &[ProductExample],
    vocab: &Vocab,
    n_queries: usize,
    warmup: usize,
) -> Result<LatencyReport> {
    if n_queries < 100 {
        return Err(GentocError::InvalidInput(format!(
            "latency benchmark needs at least 100 queries, got {n_queries}"
        )));
    }
    if dataset.is_empty() {
        return Err(GentocError::InvalidInput("empty benchmark dataset".into()));
    }
    let seqs: Vec<TokenSeq> = dataset.iter().map(|ex| ex.seq(vocab)).collect();
    for i in 0..warmup {
        let _ = extractor.extract(&seqs[i % seqs.len()])?;
    }
    let mut times = Vec::with_capacity(n_queries);
    for i in 0..n_queries {
        let seq = &seqs[i % seqs.len()];
        let start = Instant::now();
        let _ = extractor.extract(seq)?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    Ok(LatencyReport {
        hardware: hardware_descriptor(),
        n_queries,
        mean_ms: mean,
        stddev_ms: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, default_grammar, generate_catalog};
    use crate::models::ModelConfig;

    fn pair(attr: &str, idx: &[usize]) -> AVPair {
        AVPair::new(attr, idx.to_vec())
    }

    #[test]
    fn pair_set_metrics_worked_examples() {
        let gold = vec![pair("brand", &[0]), pair("color", &[4, 5])];
        assert_eq!(pair_set_metrics(&gold.clone(), &gold, None), (1.0, 1.0, 1.0));

        // pred {a, b} vs gold {a, c}: one of two correct on each side.
        let pred = vec![pair("brand", &[0]), pair("material", &[2])];
        assert_eq!(pair_set_metrics(&pred, &gold, None), (0.5, 0.5, 0.5));

        // Exact index-set match: {4,5} vs {4} is incorrect.
        let near = vec![pair("color", &[4, 5])];
        let tight = vec![pair("color", &[4])];
        let (p, r, f) = pair_set_metrics(&near, &tight, None);
        assert_eq!((p, r, f), (0.0, 0.0, 0.0));
    }

    #[test]
    fn empty_set_conventions() {
        let some = vec![pair("brand", &[0])];
        assert_eq!(pair_set_metrics(&[], &[], None), (1.0, 1.0, 1.0));
        assert_eq!(pair_set_metrics(&[], &some, None), (0.0, 0.0, 0.0));
        let (p, r, f) = pair_set_metrics(&some, &[], None);
        assert_eq!((p, r), (0.0, 1.0));
        assert!((f - 0.0).abs() < 1e-12);
    }

    #[test]
    fn synonyms_canonicalize_both_sides() {
        let mut map = HashMap::new();
        map.insert("model no.".to_string(), "model number".to_string());
        map.insert("model number".to_string(), "model number".to_string());
        let pred = vec![pair("model no.", &[1, 2])];
        let gold = vec![pair("model number", &[1, 2])];
        assert_eq!(pair_set_metrics(&pred, &gold, Some(&map)), (1.0, 1.0, 1.0));
        assert_eq!(pair_set_metrics(&pred, &gold, None).2, 0.0);
    }

    #[test]
    fn metrics_symmetric_under_permutation() {
        let pred = vec![pair("a", &[0]), pair("b", &[1]), pair("c", &[2])];
        let gold = vec![pair("b", &[1]), pair("d", &[3]), pair("a", &[0])];
        let base = pair_set_metrics(&pred, &gold, None);
        let mut pred2 = pred.clone();
        pred2.reverse();
        let mut gold2 = gold.clone();
        gold2.swap(0, 2);
        assert_eq!(pair_set_metrics(&pred2, &gold2, None), base);
    }

    #[test]
    fn duplicate_gold_pairs_match_at_most_once() {
        let pred = vec![pair("a", &[0]), pair("a", &[0])];
        let gold = vec![pair("a", &[0])];
        let (p, r, _) = pair_set_metrics(&pred, &gold, None);
        assert_eq!((p, r), (0.5, 1.0));
    }

    /// Replays a fixed answer per name; `extract` only sees the tokens.
    struct FixedExtractor(HashMap<String, Vec<AVPair>>);

    impl Extractor for FixedExtractor {
        fn extract(&self, seq: &TokenSeq) -> Result<(Vec<AVPair>, usize)> {
            Ok((self.0.get(&seq.words.join(" ")).cloned().unwrap_or_default(), 0))
        }
    }

    struct NullExtractor;

    impl Extractor for NullExtractor {
        fn extract(&self, _seq: &TokenSeq) -> Result<(Vec<AVPair>, usize)> {
            Ok((Vec::new(), 0))
        }
    }

    struct TagEverythingExtractor;

    impl Extractor for TagEverythingExtractor {
        fn extract(&self, seq: &TokenSeq) -> Result<(Vec<AVPair>, usize)> {
            Ok((vec![AVPair::new("stuff", (0..seq.len()).collect())], 0))
        }
    }

    fn small_dataset() -> Vec<ProductExample> {
        generate_catalog(&default_grammar(), 40, 77).unwrap()
    }

    #[test]
    fn gold_replay_scores_perfectly() {
        let ds = small_dataset();
        let vocab = build_vocab(&ds);
        let map: HashMap<String, Vec<AVPair>> =
            ds.iter().map(|e| (e.name(), e.gold_pairs().to_vec())).collect();
        let report = evaluate(&FixedExtractor(map), &ds, &vocab, None).unwrap();
        let all = report.slice("all").unwrap();
        assert_eq!((all.precision, all.recall, all.f1_mean, all.f1_of_means), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(report.predicted_pairs, report.gold_pairs);
        assert_eq!(report.correct_pairs, report.gold_pairs);
        assert_eq!(report.malformed_segments, 0);
    }

    #[test]
    fn null_extractor_has_zero_recall_on_labeled_examples() {
        let ds = small_dataset();
        let vocab = build_vocab(&ds);
        let report = evaluate(&NullExtractor, &ds, &vocab, None).unwrap();
        let all = report.slice("all").unwrap();
        assert_eq!(all.recall, 0.0, "every generated example has gold pairs");
        assert_eq!(report.predicted_pairs, 0);
        assert_eq!(all.tagged_ratio, 0.0);
    }

    #[test]
    fn tag_everything_extractor_has_full_tagged_ratio() {
        let ds = small_dataset();
        let vocab = build_vocab(&ds);
        let report = evaluate(&TagEverythingExtractor, &ds, &vocab, None).unwrap();
        assert!(report.slice("all").unwrap().tagged_ratio >= 0.99);
    }

    #[test]
    fn long_name_slice_filters_by_length() {
        let ds = small_dataset();
        let vocab = build_vocab(&ds);
        let report = evaluate(&NullExtractor, &ds, &vocab, None).unwrap();
        let expect = ds.iter().filter(|e| e.words.len() >= LONG_NAME_MIN_WORDS).count();
        assert_eq!(report.slice("long_names").unwrap().n_examples, expect);
        assert_eq!(report.slice("all").unwrap().n_examples, ds.len());
    }

    #[test]
    fn evaluate_rejects_empty_dataset() {
        let vocab = Vocab::build(["boat"].into_iter());
        assert!(evaluate(&NullExtractor, &[], &vocab, None).is_err());
    }

    fn uniform_rescorer(vocab: &Vocab) -> Seq2Seq {
        let cfg = ModelConfig {
            d_model: 16,
            n_heads: 2,
            n_encoder_layers: 1,
            n_decoder_layers: 1,
            ffn_dim: 32,
            max_len: 48,
            dropout: 0.0,
            ..ModelConfig::default()
        };
        let mut model = Seq2Seq::new(cfg, vocab.clone(), 1).unwrap();
        // Zeroed vocabulary projection makes every next-token distribution
        // uniform regardless of the encoder states.
        for name in ["out_w", "out_b"] {
            let idx = model.bundle.lookup(name).unwrap();
            model.bundle.params_mut()[idx].value.iter_mut().for_each(|v| *v = 0.0);
        }
        model
    }

    #[test]
    fn uniform_model_confidence_is_one_over_vocab() {
        let ds = small_dataset();
        let vocab = build_vocab(&ds);
        let rescorer = uniform_rescorer(&vocab);
        let ex = &ds[0];
        let seq = ex.seq(&vocab);
        let c = score_pair(&rescorer, &seq, &ex.gold_pairs()[0]).unwrap();
        let expect = 1.0 / vocab.len() as f64;
        assert!((c - expect).abs() < 1e-9, "confidence {c} vs 1/V {expect}");
    }

    #[test]
    fn confidence_is_in_unit_interval_for_any_model() {
        let ds = small_dataset();
        let vocab = build_vocab(&ds);
        let rescorer = Seq2Seq::new(
            ModelConfig {
                d_model: 16,
                n_heads: 2,
                n_encoder_layers: 1,
                n_decoder_layers: 1,
                ffn_dim: 32,
                max_len: 48,
                dropout: 0.0,
                ..ModelConfig::default()
            },
            vocab.clone(),
            9,
        )
        .unwrap();
        for ex in ds.iter().take(5) {
            let seq = ex.seq(&vocab);
            for p in ex.gold_pairs() {
                let c = score_pair(&rescorer, &seq, p).unwrap();
                assert!(c > 0.0 && c <= 1.0, "confidence {c} outside (0, 1]");
            }
        }
    }

    fn synthetic_scored() -> Vec<ScoredExample> {
        vec![
            ScoredExample {
                gold: vec![pair("a", &[0]), pair("b", &[1])],
                preds: vec![
                    ScoredPair { pair: pair("a", &[0]), confidence: 0.9 },
                    ScoredPair { pair: pair("x", &[2]), confidence: 0.2 },
                ],
            },
            ScoredExample {
                gold: vec![pair("c", &[0])],
                preds: vec![ScoredPair { pair: pair("c", &[0]), confidence: 0.55 }],
            },
            ScoredExample { gold: vec![pair("d", &[3])], preds: vec![] },
        ]
    }

    #[test]
    fn pr_curve_recall_is_nonincreasing() {
        let points = pr_curve(&synthetic_scored(), None, 21).unwrap();
        assert_eq!(points.len(), 21);
        assert_eq!(points[0].threshold, 0.0);
        assert_eq!(points[20].threshold, 1.0);
        for w in points.windows(2) {
            assert!(w[1].recall <= w[0].recall + 1e-12, "recall rose at t={}", w[1].threshold);
        }
    }

    #[test]
    fn pr_curve_zero_threshold_equals_unthresholded_metrics() {
        let scored = synthetic_scored();
        let points = pr_curve(&scored, None, 11).unwrap();
        let (mut psum, mut rsum) = (0.0, 0.0);
        for ex in &scored {
            let kept: Vec<AVPair> = ex.preds.iter().map(|s| s.pair.clone()).collect();
            let (p, r, _) = pair_set_metrics(&kept, &ex.gold, None);
            psum += p;
            rsum += r;
        }
        let n = scored.len() as f64;
        assert_eq!(points[0].precision.to_bits(), (psum / n).to_bits());
        assert_eq!(points[0].recall.to_bits(), (rsum / n).to_bits());
    }

    #[test]
    fn pr_curve_threshold_one_keeps_only_certainty() {
        let mut scored = synthetic_scored();
        scored[1].preds[0].confidence = 1.0;
        let points = pr_curve(&scored, None, 11).unwrap();
        let last = points.last().unwrap();
        // Only the confidence-1.0 pair survives; examples 0 and 2 lose all
        // predictions (recall 0), example 1 keeps its correct pair (recall 1).
        assert!((last.recall - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pr_curve_input_validation() {
        assert!(pr_curve(&synthetic_scored(), None, 1).is_err());
        assert!(pr_curve(&[], None, 11).is_err());
    }

    #[test]
    fn pr_curve_t0_matches_evaluate_bitwise() {
        let ds = small_dataset();
        let vocab = build_vocab(&ds);
        let map: HashMap<String, Vec<AVPair>> = ds
            .iter()
            .map(|e| {
                // Predict a strict subset so precision/recall are nontrivial.
                (e.name(), e.gold_pairs().iter().take(1).cloned().collect())
            })
            .collect();
        let extractor = FixedExtractor(map);
        let rescorer = uniform_rescorer(&vocab);
        let report = evaluate(&extractor, &ds, &vocab, None).unwrap();
        let scored = score_predictions(&extractor, &rescorer, &ds, &vocab).unwrap();
        let points = pr_curve(&scored, None, 5).unwrap();
        let all = report.slice("all").unwrap();
        assert_eq!(points[0].precision.to_bits(), all.precision.to_bits());
        assert_eq!(points[0].recall.to_bits(), all.recall.to_bits());
    }

    #[test]
    fn latency_bench_validates_inputs_and_reports() {
        let ds = small_dataset();
        let vocab = build_vocab(&ds);
        assert!(latency_bench(&NullExtractor, &ds, &vocab, 99, 0).is_err());
        assert!(latency_bench(&NullExtractor, &[], &vocab, 100, 0).is_err());
        let report = latency_bench(&NullExtractor, &ds, &vocab, 100, 5).unwrap();
        assert_eq!(report.n_queries, 100);
        assert!(report.mean_ms >= 0.0 && report.stddev_ms >= 0.0);
        assert!(!report.hardware.is_empty());
    }
}
