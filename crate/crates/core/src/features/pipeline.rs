use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::abbrev::{detect_abbreviations, AbbrevDefinition};
use super::bundle::{extract_features, FeatureBundle};
use super::context::{ContextWindows, DocumentTokens, DEFAULT_WINDOW};
use super::encode::{encode, EncodedExample, DEFAULT_CONTEXT_LEN, DEFAULT_FEATURE_LEN};
use super::vocab::{Vocab, VocabBuilder};
use crate::corpus::{Document, LabeledMention, Pmid, TaggedSpan};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    /// Context tokens on each side of the mention.
    pub window: usize,
    pub context_len: usize,
    pub feature_len: usize,
    pub min_count: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            window: DEFAULT_WINDOW,
            context_len: DEFAULT_CONTEXT_LEN,
            feature_len: DEFAULT_FEATURE_LEN,
            min_count: 1,
        }
    }
}

/// Windows and feature tokens of one mention, before vocabulary lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreparedMention {
    pub windows: ContextWindows,
    pub bundle: FeatureBundle,
}

struct DocContext {
    tokens: DocumentTokens,
    spans: Vec<TaggedSpan>,
    abbrevs: Vec<AbbrevDefinition>,
}

/// Per-document tokens, spans and abbreviations, shared by every mention of
/// the document.
pub struct FeaturePipeline {
    docs: HashMap<Pmid, DocContext>,
    config: FeatureConfig,
}

impl FeaturePipeline {
    pub fn new(documents: &[Document], spans: &[TaggedSpan], config: FeatureConfig) -> Self {
        let mut docs: HashMap<Pmid, DocContext> = documents
            .iter()
            .map(|d| {
                (
                    d.pmid(),
                    DocContext { tokens: DocumentTokens::new(d), spans: Vec::new(), abbrevs: detect_abbreviations(d) },
                )
            })
            .collect();
        for s in spans {
            if let Some(ctx) = docs.get_mut(&s.pmid) {
                ctx.spans.push(s.clone());
            }
        }
        FeaturePipeline { docs, config }
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn prepare(&self, mention: &LabeledMention) -> Result<PreparedMention> {
        let ctx = self
            .docs
            .get(&mention.pmid)
            .ok_or_else(|| Error::InvalidInput(format!("no document for pmid {}", mention.pmid)))?;
        let windows = ctx.tokens.windows(mention.start, mention.end, self.config.window)?;
        let bundle = extract_features(mention, &ctx.spans, &ctx.abbrevs);
        Ok(PreparedMention { windows, bundle })
    }

    pub fn prepare_all(&self, mentions: &[LabeledMention]) -> Result<Vec<PreparedMention>> {
        mentions.iter().map(|m| self.prepare(m)).collect()
    }

    /// Vocabulary over training mentions only.
    pub fn build_vocab(&self, prepared: &[PreparedMention]) -> Result<Vocab> {
        let mut builder = VocabBuilder::new();
        for p in prepared {
            builder.add_windows(&p.windows);
            builder.add_bundle(&p.bundle);
        }
        builder.build(self.config.min_count)
    }

    pub fn encode(&self, mention: &LabeledMention, prepared: &PreparedMention, vocab: &Vocab) -> EncodedExample {
        encode(mention, &prepared.windows, &prepared.bundle, vocab, self.config.context_len, self.config.feature_len)
    }

    pub fn encode_all(
        &self,
        mentions: &[LabeledMention],
        prepared: &[PreparedMention],
        vocab: &Vocab,
    ) -> Vec<EncodedExample> {
        mentions.iter().zip(prepared).map(|(m, p)| self.encode(m, p, vocab)).collect()
    }
}
