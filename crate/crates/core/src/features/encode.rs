use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::bundle::FeatureBundle;
use super::context::ContextWindows;
use super::vocab::{Vocab, PAD};
use crate::corpus::{LabeledMention, TypeSet};
use crate::error::{Error, Result};

pub const DEFAULT_CONTEXT_LEN: usize = 21;
pub const DEFAULT_FEATURE_LEN: usize = 30;

/// Fixed-length index sequences for the network.
///
/// `before_ids` is left-padded, `after_ids` right-padded and `feature_ids`
/// tail-padded with PAD (0), so both context windows keep the tokens nearest
/// the mention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedExample {
    pub before_ids: Vec<u32>,
    pub after_ids: Vec<u32>,
    pub feature_ids: Vec<u32>,
    /// Canonical class index of the gold type.
    pub label: usize,
    pub candidates: TypeSet,
}

pub fn encode(
    mention: &LabeledMention,
    windows: &ContextWindows,
    bundle: &FeatureBundle,
    vocab: &Vocab,
    context_len: usize,
    feature_len: usize,
) -> EncodedExample {
    let before: Vec<u32> = windows.before.iter().map(|t| vocab.word_id(t)).collect();
    let kept = &before[before.len().saturating_sub(context_len)..];
    let mut before_ids = vec![PAD; context_len - kept.len()];
    before_ids.extend_from_slice(kept);

    let mut after_ids: Vec<u32> = windows.after.iter().take(context_len).map(|t| vocab.word_id(t)).collect();
    after_ids.resize(context_len, PAD);

    let mut feature_ids: Vec<u32> = bundle.tokens().take(feature_len).map(|t| vocab.feature_id(t)).collect();
    feature_ids.resize(feature_len, PAD);

    EncodedExample {
        before_ids,
        after_ids,
        feature_ids,
        label: mention.gold_type.index(),
        candidates: mention.candidate_types,
    }
}

/// Encoded-corpus cache, one JSON object per line.
pub fn write_encoded<W: Write>(examples: &[EncodedExample], mut writer: W) -> Result<()> {
    for e in examples {
        serde_json::to_writer(&mut writer, e)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_encoded<R: BufRead>(reader: R) -> Result<Vec<EncodedExample>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(idx + 1, None, e.to_string()))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ConceptType, Pmid};
    use crate::features::{TokenSeq, VocabBuilder, UNK};

    fn windows(before: usize, after: usize) -> ContextWindows {
        ContextWindows {
            before: TokenSeq((0..before).map(|i| format!("b{i}")).collect()),
            after: TokenSeq((0..after).map(|i| format!("a{i}")).collect()),
            window: 10,
            mention_len: 1,
            aligned_outward: false,
        }
    }

    fn setup(before: usize, after: usize, features: usize) -> (LabeledMention, ContextWindows, FeatureBundle, Vocab) {
        let w = windows(before, after);
        let bundle = FeatureBundle { semantic: (0..features).map(|i| format!("F{i}")).collect(), word: vec![] };
        let mut b = VocabBuilder::new();
        b.add_windows(&w);
        b.add_bundle(&bundle);
        let mention = LabeledMention {
            pmid: Pmid::new(1).unwrap(),
            start: 0,
            end: 1,
            surface: "x".into(),
            gold_type: ConceptType::Species,
            candidate_types: [ConceptType::Species, ConceptType::Disease].into_iter().collect(),
            candidate_ids: Default::default(),
            source: "t".into(),
        };
        (mention, w, bundle, b.build(1).unwrap())
    }

    #[test]
    fn left_pads_before_window() {
        let (m, w, f, v) = setup(6, 3, 2);
        let e = encode(&m, &w, &f, &v, 21, 30);
        assert_eq!(e.before_ids.len(), 21);
        assert!(e.before_ids[..15].iter().all(|i| *i == PAD));
        assert!(e.before_ids[15..].iter().all(|i| *i > UNK));
        assert_eq!(e.after_ids[..3].iter().filter(|i| **i > UNK).count(), 3);
        assert!(e.after_ids[3..].iter().all(|i| *i == PAD));
        assert_eq!(e.label, 3);
        assert_eq!(e.feature_ids.len(), 30);
    }

    #[test]
    fn full_feature_list_needs_no_padding() {
        let (m, w, f, v) = setup(1, 1, 30);
        let e = encode(&m, &w, &f, &v, 21, 30);
        assert!(e.feature_ids.iter().all(|i| *i != PAD));
    }

    #[test]
    fn truncation_keeps_tokens_nearest_the_mention() {
        let (m, w, f, v) = setup(25, 25, 35);
        let e = encode(&m, &w, &f, &v, 21, 30);
        // before: b4..b24 kept (the last 21), b0..b3 dropped.
        let kept: Vec<&str> = e.before_ids.iter().map(|i| v.words.token(*i).unwrap()).collect();
        assert_eq!(kept.first(), Some(&"b4"));
        assert_eq!(kept.last(), Some(&"b24"));
        // after: a0..a20 kept.
        let kept: Vec<&str> = e.after_ids.iter().map(|i| v.words.token(*i).unwrap()).collect();
        assert_eq!(kept.first(), Some(&"a0"));
        assert_eq!(kept.last(), Some(&"a20"));
        assert_eq!(v.features.token(*e.feature_ids.last().unwrap()), Some("F29"));
    }

    #[test]
    fn cache_round_trip() {
        let (m, w, f, v) = setup(4, 4, 4);
        let e = encode(&m, &w, &f, &v, 5, 6);
        let mut buf = Vec::new();
        write_encoded(&[e.clone(), e.clone()], &mut buf).unwrap();
        assert_eq!(read_encoded(&buf[..]).unwrap(), vec![e.clone(), e]);
    }
}
