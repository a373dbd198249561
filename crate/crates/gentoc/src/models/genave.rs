//! Decoding for the single-stage `attr:value` seq2seq baseline: parse the
//! emitted string and ground each value back to word indices in the name.

use crate::corpus::AVPair;
use crate::text::{all_true_mask, parse_genave_output, render_target, TokenSeq};
use crate::Result;

use super::seq2seq::Seq2Seq;

/// Leftmost contiguous occurrence of `value_words` in `name_words` whose
/// positions are all still unclaimed; claims and returns them.
pub fn ground_value(name_words: &[String], value_words: &[String], used: &mut [bool]) -> Option<Vec<usize>> {
    if value_words.is_empty() || value_words.len() > name_words.len() {
        return None;
    }
    'starts: for start in 0..=name_words.len() - value_words.len() {
        for (k, vw) in value_words.iter().enumerate() {
            if used[start + k] || name_words[start + k] != *vw {
                continue 'starts;
            }
        }
        let indices: Vec<usize> = (start..start + value_words.len()).collect();
        for &i in &indices {
            used[i] = true;
        }
        return Some(indices);
    }
    None
}

/// Greedy decode, parse into `attr:value` items, then ground each value in
/// the name. Items whose value cannot be grounded count as malformed, as do
/// parse failures. Markers (when the model has them) are applied to every
/// word at inference.
pub fn genave_decode(model: &Seq2Seq, seq: &TokenSeq) -> Result<(Vec<AVPair>, usize)> {
    let mask = all_true_mask(seq);
    let out_ids = model.greedy_decode(&seq.ids, &mask)?;
    let rendered = render_target(&model.vocab, &out_ids);
    let (items, mut malformed) = parse_genave_output(&rendered);
    let mut used = vec![false; seq.len()];
    let mut pairs = Vec::new();
    for (attr, value) in items {
        let value_words: Vec<String> = value.split_whitespace().map(str::to_string).collect();
        match ground_value(&seq.words, &value_words, &mut used) {
            Some(indices) => pairs.push(AVPair::new(attr, indices)),
            None => malformed += 1,
        }
    }
    Ok((pairs, malformed))
}
