//! Synthetic product catalogs with full ground truth and a simulated
//! partial-label view.
//!
//! Generation walks a category/template grammar; partial labeling drops pairs
//! independently with a retention scale calibrated by bisection against a
//! target mean token coverage. The full pair set survives as a hidden oracle
//! under its own JSONL key.

mod grammar;

pub use grammar::{default_grammar, AttributeSlot, CatalogGrammar, Category, Template, TemplateItem};

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::seeded_rng;
use crate::text::{TokenSeq, Vocab};
use crate::{GentocError, Result};

/// Attribute bound to an ordered set of word indices into the product name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AVPair {
    pub attribute: String,
    pub value_indices: Vec<usize>,
}

impl AVPair {
    pub fn new(attribute: impl Into<String>, value_indices: Vec<usize>) -> Self {
        AVPair { attribute: attribute.into(), value_indices }
    }
}

/// One catalog entry: the tokenized name words, the partial training view,
/// and (when generated synthetically) the hidden full gold pair set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductExample {
    pub words: Vec<String>,
    pub category: String,
    pub observed_pairs: Vec<AVPair>,
    pub full_pairs: Option<Vec<AVPair>>,
}

impl ProductExample {
    pub fn name(&self) -> String {
        self.words.join(" ")
    }

    pub fn seq(&self, vocab: &Vocab) -> TokenSeq {
        TokenSeq {
            words: self.words.clone(),
            ids: self.words.iter().map(|w| vocab.id(w)).collect(),
        }
    }

    /// Gold pairs for scoring: full oracle when present, else observed.
    pub fn gold_pairs(&self) -> &[AVPair] {
        self.full_pairs.as_deref().unwrap_or(&self.observed_pairs)
    }

    fn validate(&self, line: usize) -> Result<()> {
        for pairs in [Some(&self.observed_pairs), self.full_pairs.as_ref()].into_iter().flatten() {
            let mut claimed = vec![false; self.words.len()];
            for p in pairs {
                if p.attribute.trim().is_empty() {
                    return Err(GentocError::DatasetLine { line, detail: "empty attribute".into() });
                }
                if p.value_indices.is_empty() {
                    return Err(GentocError::DatasetLine {
                        line,
                        detail: format!("pair {:?} has no value indices", p.attribute),
                    });
                }
                if !p.value_indices.windows(2).all(|w| w[0] < w[1]) {
                    return Err(GentocError::DatasetLine {
                        line,
                        detail: format!("value indices of {:?} not strictly increasing", p.attribute),
                    });
                }
                for &i in &p.value_indices {
                    if i >= self.words.len() {
                        return Err(GentocError::DatasetLine {
                            line,
                            detail: format!("value index {i} out of range"),
                        });
                    }
                    if claimed[i] {
                        return Err(GentocError::DatasetLine {
                            line,
                            detail: format!("word {i} claimed by two pairs"),
                        });
                    }
                    claimed[i] = true;
                }
            }
        }
        // Note: observed ⊆ full is a property of partial labeling, not of the
        // file format — bootstrapped datasets carry model predictions in
        // observed_pairs alongside the untouched oracle.
        Ok(())
    }
}

/// Generate `n` fully-labeled examples; `observed_pairs == full_pairs`.
pub fn generate_catalog(grammar: &CatalogGrammar, n: usize, seed: u64) -> Result<Vec<ProductExample>> {
    grammar.validate()?;
    if n == 0 {
        return Err(GentocError::InvalidInput("catalog size must be >= 1".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let cat = &grammar.categories[rng.gen_range(0..grammar.categories.len())];
        let tpl = &cat.templates[rng.gen_range(0..cat.templates.len())];
        let mut words: Vec<String> = Vec::new();
        let mut pairs: Vec<AVPair> = Vec::new();
        for item in &tpl.items {
            match item {
                TemplateItem::Filler => {
                    words.push(cat.fillers[rng.gen_range(0..cat.fillers.len())].clone());
                }
                TemplateItem::Slot(i) => {
                    let slot = &cat.slots[*i];
                    if rng.gen_bool(slot.inclusion_prob) {
                        let value = &slot.values[rng.gen_range(0..slot.values.len())];
                        let surface = if !slot.synonyms.is_empty() && rng.gen_bool(grammar.synonym_rate)
                        {
                            slot.synonyms[rng.gen_range(0..slot.synonyms.len())].clone()
                        } else {
                            slot.canonical.clone()
                        };
                        let start = words.len();
                        words.extend(value.split_whitespace().map(str::to_string));
                        pairs.push(AVPair::new(surface, (start..words.len()).collect()));
                    }
                }
            }
        }
        out.push(ProductExample {
            words,
            category: cat.name.clone(),
            observed_pairs: pairs.clone(),
            full_pairs: Some(pairs),
        });
    }
    Ok(out)
}

/// How incompleteness is distributed across pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DropScheme {
    /// Same retention probability for every pair.
    Uniform,
    /// Retention scaled by each attribute's annotation propensity, mirroring
    /// vendors who reliably list some attributes and rarely others.
    #[default]
    Propensity,
    /// All pairs of an attribute within an example kept or dropped together.
    PerAttributeType,
}

/// Subsample `observed_pairs` so the realized mean token coverage lands near
/// `target` (within ±0.02 where attainable). `full_pairs` is untouched.
pub fn partial_labeling(
    mut dataset: Vec<ProductExample>,
    target: f64,
    seed: u64,
    scheme: DropScheme,
    propensities: &HashMap<String, f64>,
) -> Result<Vec<ProductExample>> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(GentocError::InvalidInput(format!(
            "coverage target {target} outside (0, 1]"
        )));
    }
    for ex in &dataset {
        if ex.full_pairs.is_none() {
            return Err(GentocError::InvalidInput(
                "partial_labeling requires full_pairs on every example".into(),
            ));
        }
    }

    // One uniform draw per pair (or per attribute type), fixed up front, so a
    // pair's fate is monotone in the retention scale and bisection is exact.
    let mut rng = seeded_rng(seed);
    let mut draws: Vec<Vec<f64>> = Vec::with_capacity(dataset.len());
    for ex in &dataset {
        let full = ex.full_pairs.as_ref().unwrap();
        let mut per_attr: HashMap<&str, f64> = HashMap::new();
        let pair_draws = full
            .iter()
            .map(|p| match scheme {
                DropScheme::PerAttributeType => *per_attr
                    .entry(p.attribute.as_str())
                    .or_insert_with(|| rng.gen::<f64>()),
                _ => rng.gen::<f64>(),
            })
            .collect();
        draws.push(pair_draws);
    }

    let retention = |attr: &str, scale: f64| -> f64 {
        match scheme {
            DropScheme::Propensity => {
                (scale * propensities.get(attr).copied().unwrap_or(1.0)).min(1.0)
            }
            _ => scale.min(1.0),
        }
    };
    let coverage_at = |scale: f64| -> f64 {
        let mut total = 0.0;
        for (ex, pair_draws) in dataset.iter().zip(&draws) {
            let full = ex.full_pairs.as_ref().unwrap();
            let covered: usize = full
                .iter()
                .zip(pair_draws)
                .filter(|(p, &u)| u < retention(&p.attribute, scale))
                .map(|(p, _)| p.value_indices.len())
                .sum();
            total += covered as f64 / ex.words.len() as f64;
        }
        total / dataset.len() as f64
    };

    let max_scale = match scheme {
        DropScheme::Propensity => {
            let min_p = propensities.values().copied().fold(1.0f64, f64::min).max(1e-6);
            1.0 / min_p
        }
        _ => 1.0,
    };
    let scale = if coverage_at(max_scale) <= target {
        max_scale
    } else {
        let (mut lo, mut hi) = (0.0f64, max_scale);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if coverage_at(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };

    for (ex, pair_draws) in dataset.iter_mut().zip(&draws) {
        let full = ex.full_pairs.as_ref().unwrap();
        ex.observed_pairs = full
            .iter()
            .zip(pair_draws)
            .filter(|(p, &u)| u < retention(&p.attribute, scale))
            .map(|(p, _)| p.clone())
            .collect();
    }
    Ok(dataset)
}

/// Aggregate statistics over the observed (training-view) pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CorpusStats {
    /// Mean over examples of covered words / total words (tagged ratio).
    pub mean_token_coverage: f64,
    pub pair_count: usize,
    pub distinct_attributes: usize,
    pub mean_name_length: f64,
}

pub fn stats(dataset: &[ProductExample]) -> Result<CorpusStats> {
    if dataset.is_empty() {
        return Err(GentocError::InvalidInput("empty dataset".into()));
    }
    let mut coverage = 0.0;
    let mut pair_count = 0;
    let mut length = 0.0;
    let mut attrs: BTreeSet<&str> = BTreeSet::new();
    for ex in dataset {
        let covered: usize = ex.observed_pairs.iter().map(|p| p.value_indices.len()).sum();
        coverage += covered as f64 / ex.words.len() as f64;
        pair_count += ex.observed_pairs.len();
        length += ex.words.len() as f64;
        attrs.extend(ex.observed_pairs.iter().map(|p| p.attribute.as_str()));
    }
    let n = dataset.len() as f64;
    Ok(CorpusStats {
        mean_token_coverage: coverage / n,
        pair_count,
        distinct_attributes: attrs.len(),
        mean_name_length: length / n,
    })
}

#[derive(Serialize, Deserialize)]
struct Record {
    name: String,
    category: String,
    observed_pairs: Vec<AVPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    full_pairs: Option<Vec<AVPair>>,
}

/// One JSON record per line; the hidden oracle rides under `full_pairs`.
pub fn save_jsonl(dataset: &[ProductExample], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for ex in dataset {
        let rec = Record {
            name: ex.name(),
            category: ex.category.clone(),
            observed_pairs: ex.observed_pairs.clone(),
            full_pairs: ex.full_pairs.clone(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_jsonl(path: &Path) -> Result<Vec<ProductExample>> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| GentocError::DatasetLine {
            line: i + 1,
            detail: e.to_string(),
        })?;
        let words: Vec<String> = rec.name.split_whitespace().map(str::to_lowercase).collect();
        if words.is_empty() {
            return Err(GentocError::DatasetLine { line: i + 1, detail: "empty product name".into() });
        }
        let ex = ProductExample {
            words,
            category: rec.category,
            observed_pairs: rec.observed_pairs,
            full_pairs: rec.full_pairs,
        };
        ex.validate(i + 1)?;
        out.push(ex);
    }
    Ok(out)
}

/// Vocabulary over every word appearing in names, attribute surface forms and
/// target-string delimiters of a dataset.
pub fn build_vocab(dataset: &[ProductExample]) -> Vocab {
    let mut words: BTreeSet<String> = BTreeSet::new();
    for ex in dataset {
        words.extend(ex.words.iter().cloned());
        for p in &ex.observed_pairs {
            words.extend(p.attribute.split_whitespace().map(str::to_lowercase));
        }
    }
    Vocab::build(words.iter().map(String::as_str))
}
