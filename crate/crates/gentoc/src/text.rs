//! Tokenization, vocabulary, marker masks and the target-string formats used
//! by the generative models.
//!
//! Word-level tokenization over a closed synthetic vocabulary stands in for
//! subword tokenizers. The pair delimiter `","` and the attribute-value
//! separator `":"` are reserved single-character tokens; parsers are lenient
//! and tally malformed segments instead of failing.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::corpus::AVPair;
use crate::{GentocError, Result};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";
pub const SEP: &str = "<sep>";
pub const PAIR_DELIM: &str = ",";
pub const AV_DELIM: &str = ":";

/// Reserved tokens, in fixed id order `0..7`.
pub const RESERVED: [&str; 7] = [PAD, UNK, BOS, EOS, SEP, PAIR_DELIM, AV_DELIM];

/// Token to dense-id bijection with the reserved tokens at the front.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: std::collections::HashMap<String, usize>,
}

impl Vocab {
    /// Build from an iterator of corpus words; reserved tokens are prepended
    /// and the remainder sorted for determinism.
    pub fn build<'a>(words: impl IntoIterator<Item = &'a str>) -> Vocab {
        let extra: BTreeSet<String> = words
            .into_iter()
            .map(|w| w.to_lowercase())
            .filter(|w| !RESERVED.contains(&w.as_str()))
            .collect();
        let tokens: Vec<String> =
            RESERVED.iter().map(|s| s.to_string()).chain(extra).collect();
        Self::from_tokens(tokens).expect("reserved-first token list is always valid")
    }

    pub fn from_tokens(tokens: Vec<String>) -> Result<Vocab> {
        for (i, r) in RESERVED.iter().enumerate() {
            if tokens.get(i).map(String::as_str) != Some(*r) {
                return Err(GentocError::InvalidInput(format!(
                    "vocabulary must start with reserved token {:?} at id {}",
                    r, i
                )));
            }
        }
        let mut index = std::collections::HashMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(GentocError::InvalidInput(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Vocab { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(1) // <unk>
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn pad_id(&self) -> usize {
        0
    }
    pub fn unk_id(&self) -> usize {
        1
    }
    pub fn bos_id(&self) -> usize {
        2
    }
    pub fn eos_id(&self) -> usize {
        3
    }
    pub fn sep_id(&self) -> usize {
        4
    }
    pub fn pair_delim_id(&self) -> usize {
        5
    }
    pub fn av_delim_id(&self) -> usize {
        6
    }

    /// Newline-delimited token file, line number = id.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = self.tokens.join("\n");
        out.push('\n');
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Vocab> {
        let data = fs::read_to_string(path)?;
        Self::from_tokens(data.lines().map(str::to_string).collect())
    }
}

/// Product-name token sequence: word strings and their vocab ids, 1:1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    pub words: Vec<String>,
    pub ids: Vec<usize>,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// One boolean per word of a paired [`TokenSeq`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkerMask {
    pub flags: Vec<bool>,
}

impl MarkerMask {
    pub fn popcount(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Indices of set flags.
    pub fn positions(&self) -> Vec<usize> {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
            .collect()
    }
}

/// Lowercase and whitespace-split; unknown words keep their string but map to
/// the `<unk>` id.
pub fn tokenize(vocab: &Vocab, raw: &str) -> Result<TokenSeq> {
    let words: Vec<String> = raw.split_whitespace().map(str::to_lowercase).collect();
    if words.is_empty() {
        return Err(GentocError::InvalidInput("empty product name".into()));
    }
    let ids = words.iter().map(|w| vocab.id(w)).collect();
    Ok(TokenSeq { words, ids })
}

/// Flag word `i` iff it is covered by some pair's value.
pub fn build_marker_mask(seq: &TokenSeq, pairs: &[AVPair]) -> Result<MarkerMask> {
    let mut flags = vec![false; seq.len()];
    for pair in pairs {
        for &i in &pair.value_indices {
            if i >= seq.len() {
                return Err(GentocError::InvalidInput(format!(
                    "value index {} out of range for {}-word name",
                    i,
                    seq.len()
                )));
            }
            flags[i] = true;
        }
    }
    Ok(MarkerMask { flags })
}

/// Inference-time mask: every word marked.
pub fn all_true_mask(seq: &TokenSeq) -> MarkerMask {
    MarkerMask { flags: vec![true; seq.len()] }
}

/// Attribute names joined by `","` in ascending order of first value index.
/// Duplicates are preserved as given after ordering.
pub fn build_genae_target(pairs: &[AVPair]) -> String {
    let mut ordered: Vec<&AVPair> = pairs.iter().collect();
    ordered.sort_by_key(|p| p.value_indices.first().copied().unwrap_or(usize::MAX));
    ordered
        .iter()
        .map(|p| p.attribute.as_str())
        .collect::<Vec<_>>()
        .join(PAIR_DELIM)
}

/// `attr:value words` entries joined by `","`, same ordering rule as the
/// attribute-list target.
pub fn build_genave_target(seq: &TokenSeq, pairs: &[AVPair]) -> String {
    let mut ordered: Vec<&AVPair> = pairs.iter().collect();
    ordered.sort_by_key(|p| p.value_indices.first().copied().unwrap_or(usize::MAX));
    ordered
        .iter()
        .map(|p| {
            let value = p
                .value_indices
                .iter()
                .map(|&i| seq.words[i].as_str())
                .collect::<Vec<_>>()
                .join(" ");
            format!("{}{}{}", p.attribute, AV_DELIM, value)
        })
        .collect::<Vec<_>>()
        .join(PAIR_DELIM)
}

/// `attr: value` string for one pair, the rescorer's training target.
/// Tokenizes identically to the `attr:value` format since `":"` is a
/// standalone token either way.
pub fn build_rescorer_target(seq: &TokenSeq, pair: &AVPair) -> String {
    let value = pair
        .value_indices
        .iter()
        .map(|&i| seq.words[i].as_str())
        .collect::<Vec<_>>()
        .join(" ");
    format!("{}{} {}", pair.attribute, AV_DELIM, value)
}

/// Lenient inverse of [`build_genae_target`]: split on `","`, trim, drop
/// empty segments. Returns the attributes and the malformed-segment tally.
pub fn parse_genae_output(s: &str) -> (Vec<String>, usize) {
    let mut attrs = Vec::new();
    let mut malformed = 0;
    if s.trim().is_empty() {
        return (attrs, malformed);
    }
    for seg in s.split(PAIR_DELIM) {
        let seg = seg.trim();
        if seg.is_empty() {
            malformed += 1;
        } else {
            attrs.push(seg.to_string());
        }
    }
    (attrs, malformed)
}

/// Lenient inverse of [`build_genave_target`]: split on `","`, then each
/// segment on its first `":"`. Segments lacking `":"` or with an empty
/// attribute are dropped and tallied.
pub fn parse_genave_output(s: &str) -> (Vec<(String, String)>, usize) {
    let mut pairs = Vec::new();
    let mut malformed = 0;
    if s.trim().is_empty() {
        return (pairs, malformed);
    }
    for seg in s.split(PAIR_DELIM) {
        let seg = seg.trim();
        if seg.is_empty() {
            malformed += 1;
            continue;
        }
        match seg.split_once(AV_DELIM) {
            Some((attr, value)) if !attr.trim().is_empty() => {
                pairs.push((attr.trim().to_string(), value.trim().to_string()));
            }
            _ => malformed += 1,
        }
    }
    (pairs, malformed)
}

/// `attribute <sep> product-name` input for the value extractor, plus the
/// offset of the first product-name word (labels align to name words only).
pub fn build_tocve_input(vocab: &Vocab, attribute: &str, seq: &TokenSeq) -> Result<(TokenSeq, usize)> {
    if attribute.trim().is_empty() {
        return Err(GentocError::InvalidInput("empty attribute".into()));
    }
    let attr_seq = tokenize(vocab, attribute)?;
    let offset = attr_seq.len() + 1;
    let mut words = attr_seq.words;
    words.push(SEP.to_string());
    words.extend(seq.words.iter().cloned());
    let ids = words.iter().map(|w| vocab.id(w)).collect();
    Ok((TokenSeq { words, ids }, offset))
}

/// Encode a target string into vocab ids, treating `","` and `":"` as
/// standalone tokens.
pub fn encode_target(vocab: &Vocab, target: &str) -> Vec<usize> {
    target_tokens(target).iter().map(|t| vocab.id(t)).collect()
}

/// Split a target string into word and delimiter tokens.
pub fn target_tokens(target: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for ch in target.chars() {
        if ch == ',' || ch == ':' {
            if !word.trim().is_empty() {
                tokens.push(word.trim().to_lowercase());
            }
            word.clear();
            tokens.push(ch.to_string());
        } else if ch.is_whitespace() {
            if !word.is_empty() {
                tokens.push(word.to_lowercase());
                word.clear();
            }
        } else {
            word.push(ch);
        }
    }
    if !word.trim().is_empty() {
        tokens.push(word.trim().to_lowercase());
    }
    tokens
}

/// Render decoded ids back into a parseable target string. Delimiter tokens
/// attach without surrounding spaces; other tokens are space-separated.
pub fn render_target(vocab: &Vocab, ids: &[usize]) -> String {
    let mut out = String::new();
    let mut need_space = false;
    for &id in ids {
        let tok = vocab.token(id);
        if tok == PAIR_DELIM || tok == AV_DELIM {
            out.push_str(tok);
            need_space = false;
        } else {
            if need_space {
                out.push(' ');
            }
            out.push_str(tok);
            need_space = true;
        }
    }
    out
}
