use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::abbrev::AbbrevDefinition;
use super::tokenize::tokenize;
use crate::corpus::{LabeledMention, TaggedSpan};

/// Feature tokens for one mention.
///
/// `semantic` holds `TYPE=`, `ID=`, `FULLTYPE=` and `FULLID=` tokens sorted
/// lexicographically; `word` holds `PRE<k>=`/`SUF<k>=` tokens in mention
/// token order, `k` ascending, prefix before suffix.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureBundle {
    pub semantic: Vec<String>,
    pub word: Vec<String>,
}

impl FeatureBundle {
    /// Semantic tokens followed by word tokens.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.semantic.iter().chain(&self.word).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.semantic.len() + self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Prefix/suffix tokens of lengths 1..=min(3, n) for one token.
pub fn affix_features(token: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = token.chars().collect();
    for k in 1..=chars.len().min(3) {
        let prefix: String = chars[..k].iter().collect();
        let suffix: String = chars[chars.len() - k..].iter().collect();
        out.push(format!("PRE{k}={prefix}"));
        out.push(format!("SUF{k}={suffix}"));
    }
}

/// Builds the feature bundle of `mention`. `spans` and `abbrevs` should be
/// those of the mention's document; entries for other documents are ignored.
pub fn extract_features(mention: &LabeledMention, spans: &[TaggedSpan], abbrevs: &[AbbrevDefinition]) -> FeatureBundle {
    let mut semantic = BTreeSet::new();
    for t in mention.candidate_types.iter() {
        semantic.insert(format!("TYPE={t}"));
    }
    for id in mention.candidate_ids.values() {
        semantic.insert(format!("ID={id}"));
    }
    for abbrev in abbrevs.iter().filter(|a| a.pmid == mention.pmid && a.short_form == mention.surface) {
        for span in spans.iter().filter(|s| s.pmid == mention.pmid && s.surface == abbrev.long_form) {
            semantic.insert(format!("FULLTYPE={}", span.concept_type));
            let id = span.concept_id.trim();
            if !id.is_empty() {
                semantic.insert(format!("FULLID={id}"));
            }
        }
    }

    let mut word = Vec::new();
    for token in tokenize(&mention.surface).iter() {
        affix_features(token, &mut word);
    }
    FeatureBundle { semantic: semantic.into_iter().collect(), word }
}
