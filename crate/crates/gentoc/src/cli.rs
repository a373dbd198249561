//! Command-line interface: dataset synthesis, training, inference,
//! evaluation, bootstrapping, PR curves and latency benchmarks.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{
    build_vocab, default_grammar, generate_catalog, load_jsonl, partial_labeling, save_jsonl, stats,
    DropScheme,
};
use crate::eval::{
    evaluate, latency_bench, pr_curve, score_predictions, Extractor, GenAveExtractor,
    GenTocExtractor, TaggerExtractor,
};
use crate::models::{ModelConfig, ModelKind, Seq2Seq, TokenClassifier};
use crate::numerics::{load_checkpoint, save_checkpoint, CheckpointManifest};
use crate::pipeline::{bootstrap, train, TrainPlan, TrainedModel};
use crate::text::{tokenize, Vocab};
use crate::{GentocError, Result};

#[derive(Parser)]
#[command(name = "gentoc", about = "Two-stage attribute-value extraction from product titles")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic partially-labeled catalog.
    Synth(SynthArgs),
    /// Train a model from a JSON plan.
    Train(TrainArgs),
    /// Extract pairs from one product name.
    Infer(InferArgs),
    /// Score an extractor against a dataset's gold pairs.
    Eval(EvalArgs),
    /// Re-annotate a dataset with two-stage predictions.
    Bootstrap(BootstrapArgs),
    /// Precision-recall curve under a rescorer.
    Prcurve(PrCurveArgs),
    /// Per-query latency benchmark.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target mean token coverage of the observed pairs.
    #[arg(long, default_value_t = 0.4)]
    coverage: f64,
    /// uniform | propensity | per_attribute_type
    #[arg(long, default_value = "propensity")]
    scheme: String,
    /// Also write the surface-to-canonical attribute map here.
    #[arg(long)]
    synonyms_out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// JSON training plan (kind, model, epochs, batch_size, seed, lr).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Checkpoint output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InferArgs {
    /// Checkpoint(s): one for a single-stage model, genae + tocve for the
    /// two-stage pipeline.
    #[arg(long = "checkpoint", required = true)]
    checkpoints: Vec<PathBuf>,
    #[arg(long)]
    name: String,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long = "checkpoint", required = true)]
    checkpoints: Vec<PathBuf>,
    #[arg(long)]
    dataset: PathBuf,
    /// JSON surface-to-canonical attribute map.
    #[arg(long)]
    synonyms: Option<PathBuf>,
}

#[derive(Args)]
struct BootstrapArgs {
    #[arg(long = "checkpoint", required = true)]
    checkpoints: Vec<PathBuf>,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PrCurveArgs {
    #[arg(long = "checkpoint", required = true)]
    checkpoints: Vec<PathBuf>,
    #[arg(long)]
    rescorer: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    synonyms: Option<PathBuf>,
    #[arg(long, default_value_t = 101)]
    thresholds: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long = "checkpoint", required = true)]
    checkpoints: Vec<PathBuf>,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    warmup: usize,
}

/// A model loaded from a checkpoint, tagged with its kind.
pub enum LoadedModel {
    Seq2Seq(ModelKind, Seq2Seq),
    Classifier(ModelKind, TokenClassifier),
}

impl LoadedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            LoadedModel::Seq2Seq(k, _) => *k,
            LoadedModel::Classifier(k, _) => *k,
        }
    }

    pub fn vocab(&self) -> &Vocab {
        match self {
            LoadedModel::Seq2Seq(_, m) => &m.vocab,
            LoadedModel::Classifier(_, m) => &m.vocab,
        }
    }
}

/// Write a trained model; the manifest embeds kind, config, vocabulary and
/// (for classifiers) the label set.
pub fn save_model(path: &Path, kind: ModelKind, model: &TrainedModel) -> Result<()> {
    match model {
        TrainedModel::Seq2Seq(m) => {
            let manifest = CheckpointManifest {
                kind: kind.as_str().to_string(),
                config: serde_json::to_value(&m.cfg)?,
                vocab: m.vocab.tokens().to_vec(),
                labels: None,
                params: m.param_specs(),
            };
            save_checkpoint(path, &manifest, &m.bundle)
        }
        TrainedModel::Classifier(m) => {
            let manifest = CheckpointManifest {
                kind: kind.as_str().to_string(),
                config: serde_json::to_value(&m.cfg)?,
                vocab: m.vocab.tokens().to_vec(),
                labels: Some(m.labels.clone()),
                params: m.param_specs(),
            };
            save_checkpoint(path, &manifest, &m.bundle)
        }
    }
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let (manifest, bundle) = load_checkpoint(path)?;
    let kind = ModelKind::parse(&manifest.kind)?;
    let cfg: ModelConfig = serde_json::from_value(manifest.config)?;
    let vocab = Vocab::from_tokens(manifest.vocab)?;
    if kind.is_seq2seq() {
        Ok(LoadedModel::Seq2Seq(kind, Seq2Seq::from_parts(cfg, vocab, bundle)?))
    } else {
        let labels = manifest.labels.ok_or_else(|| {
            GentocError::Checkpoint(format!("{}: classifier checkpoint lacks labels", path.display()))
        })?;
        Ok(LoadedModel::Classifier(kind, TokenClassifier::from_parts(cfg, vocab, labels, bundle)?))
    }
}

/// Models that together form one extractor: either a single-stage model or
/// the genae + tocve pair (order-insensitive, vocabularies must match).
pub enum ExtractorModels {
    GenToc { genae: Seq2Seq, tocve: TokenClassifier },
    GenAve(Seq2Seq),
    TocAve(TokenClassifier),
}

impl ExtractorModels {
    pub fn load(paths: &[PathBuf]) -> Result<ExtractorModels> {
        let mut models: Vec<LoadedModel> = paths.iter().map(|p| load_model(p)).collect::<Result<_>>()?;
        match models.len() {
            1 => match models.pop().unwrap() {
                LoadedModel::Seq2Seq(ModelKind::GenAve, m) => Ok(ExtractorModels::GenAve(m)),
                LoadedModel::Classifier(ModelKind::TocAve, m) => Ok(ExtractorModels::TocAve(m)),
                other => Err(GentocError::InvalidInput(format!(
                    "cannot build an extractor from a single {} checkpoint",
                    other.kind().as_str()
                ))),
            },
            2 => {
                models.sort_by_key(|m| m.kind().as_str());
                let kinds: Vec<ModelKind> = models.iter().map(|m| m.kind()).collect();
                if kinds != [ModelKind::GenAe, ModelKind::TocVe] {
                    return Err(GentocError::InvalidInput(format!(
                        "two checkpoints must be genae + tocve, got {} + {}",
                        kinds[0].as_str(),
                        kinds[1].as_str()
                    )));
                }
                if models[0].vocab() != models[1].vocab() {
                    return Err(GentocError::InvalidInput(
                        "genae and tocve checkpoints have different vocabularies".into(),
                    ));
                }
                let LoadedModel::Classifier(_, tocve) = models.pop().unwrap() else {
                    unreachable!("tocve is a classifier")
                };
                let LoadedModel::Seq2Seq(_, genae) = models.pop().unwrap() else {
                    unreachable!("genae is a seq2seq")
                };
                Ok(ExtractorModels::GenToc { genae, tocve })
            }
            n => Err(GentocError::InvalidInput(format!("expected 1 or 2 checkpoints, got {n}"))),
        }
    }

    pub fn vocab(&self) -> &Vocab {
        match self {
            ExtractorModels::GenToc { genae, .. } => &genae.vocab,
            ExtractorModels::GenAve(m) => &m.vocab,
            ExtractorModels::TocAve(m) => &m.vocab,
        }
    }

    pub fn as_extractor(&self) -> Box<dyn Extractor + '_> {
        match self {
            ExtractorModels::GenToc { genae, tocve } => Box::new(GenTocExtractor { genae, tocve }),
            ExtractorModels::GenAve(m) => Box::new(GenAveExtractor(m)),
            ExtractorModels::TocAve(m) => Box::new(TaggerExtractor(m)),
        }
    }
}

fn parse_scheme(s: &str) -> Result<DropScheme> {
    match s {
        "uniform" => Ok(DropScheme::Uniform),
        "propensity" => Ok(DropScheme::Propensity),
        "per_attribute_type" => Ok(DropScheme::PerAttributeType),
        other => Err(GentocError::InvalidInput(format!("unknown drop scheme {other:?}"))),
    }
}

fn load_synonyms(path: Option<&PathBuf>) -> Result<Option<HashMap<String, String>>> {
    match path {
        None => Ok(None),
        Some(p) => {
            let data = fs::read_to_string(p)?;
            Ok(Some(serde_json::from_str(&data)?))
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => {
            let grammar = default_grammar();
            let scheme = parse_scheme(&a.scheme)?;
            let full = generate_catalog(&grammar, a.n, a.seed)?;
            let dataset = partial_labeling(full, a.coverage, a.seed ^ 0x9e37, scheme, &grammar.propensity_map())?;
            save_jsonl(&dataset, &a.out)?;
            if let Some(p) = &a.synonyms_out {
                fs::write(p, serde_json::to_string_pretty(&grammar.synonym_map())?)?;
            }
            print_json(&stats(&dataset)?)
        }
        Command::Train(a) => {
            let plan: TrainPlan = serde_json::from_str(&fs::read_to_string(&a.config)?)?;
            let dataset = load_jsonl(&a.dataset)?;
            let vocab = build_vocab(&dataset);
            let outcome = train(&plan, &dataset, &vocab)?;
            save_model(&a.out, plan.kind, &outcome.model)?;
            print_json(&serde_json::json!({
                "kind": plan.kind.as_str(),
                "checkpoint": a.out,
                "loss_history": outcome.loss_history,
            }))
        }
        Command::Infer(a) => {
            let models = ExtractorModels::load(&a.checkpoints)?;
            let seq = tokenize(models.vocab(), &a.name)?;
            let (pairs, malformed) = models.as_extractor().extract(&seq)?;
            let rendered: Vec<serde_json::Value> = pairs
                .iter()
                .map(|p| {
                    let value: Vec<&str> =
                        p.value_indices.iter().map(|&i| seq.words[i].as_str()).collect();
                    serde_json::json!({
                        "attribute": p.attribute,
                        "value": value.join(" "),
                        "value_indices": p.value_indices,
                    })
                })
                .collect();
            print_json(&serde_json::json!({ "pairs": rendered, "malformed_segments": malformed }))
        }
        Command::Eval(a) => {
            let models = ExtractorModels::load(&a.checkpoints)?;
            let dataset = load_jsonl(&a.dataset)?;
            let synonyms = load_synonyms(a.synonyms.as_ref())?;
            let report =
                evaluate(models.as_extractor().as_ref(), &dataset, models.vocab(), synonyms.as_ref())?;
            print_json(&report)
        }
        Command::Bootstrap(a) => {
            let models = ExtractorModels::load(&a.checkpoints)?;
            let ExtractorModels::GenToc { genae, tocve } = &models else {
                return Err(GentocError::InvalidInput(
                    "bootstrap needs genae + tocve checkpoints".into(),
                ));
            };
            let dataset = load_jsonl(&a.dataset)?;
            let outcome = bootstrap(genae, tocve, dataset, models.vocab())?;
            save_jsonl(&outcome.dataset, &a.out)?;
            print_json(&serde_json::json!({ "before": outcome.before, "after": outcome.after }))
        }
        Command::Prcurve(a) => {
            let models = ExtractorModels::load(&a.checkpoints)?;
            let rescorer = match load_model(&a.rescorer)? {
                LoadedModel::Seq2Seq(ModelKind::Rescorer, m) => m,
                other => {
                    return Err(GentocError::InvalidInput(format!(
                        "--rescorer must be a rescorer checkpoint, got {}",
                        other.kind().as_str()
                    )))
                }
            };
            let dataset = load_jsonl(&a.dataset)?;
            let synonyms = load_synonyms(a.synonyms.as_ref())?;
            let extractor = models.as_extractor();
            let scored = score_predictions(extractor.as_ref(), &rescorer, &dataset, models.vocab())?;
            let points = pr_curve(&scored, synonyms.as_ref(), a.thresholds)?;
            println!("threshold,precision,recall");
            for pt in points {
                println!("{},{},{}", pt.threshold, pt.precision, pt.recall);
            }
            Ok(())
        }
        Command::Bench(a) => {
            let models = ExtractorModels::load(&a.checkpoints)?;
            let dataset = load_jsonl(&a.dataset)?;
            let extractor = models.as_extractor();
            print_json(&latency_bench(extractor.as_ref(), &dataset, models.vocab(), a.n, a.warmup)?)
        }
    }
}
