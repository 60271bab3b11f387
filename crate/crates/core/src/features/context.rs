use serde::{Deserialize, Serialize};

use super::tokenize::{tokenize_with_offsets, OffsetToken, TokenSeq};
use crate::corpus::{Document, LabeledMention};
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 10;

/// Tokens around a mention. `before` ends with the mention tokens and
/// `after` starts with them; each holds at most `window` context tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextWindows {
    pub before: TokenSeq,
    pub after: TokenSeq,
    pub window: usize,
    pub mention_len: usize,
    /// The mention offsets cut through a token and were widened to it.
    pub aligned_outward: bool,
}

/// Offset tokens of one document, computed once and reused for each of its
/// mentions.
#[derive(Debug, Clone)]
pub struct DocumentTokens {
    tokens: Vec<OffsetToken>,
    char_len: usize,
}

impl DocumentTokens {
    pub fn new(doc: &Document) -> Self {
        DocumentTokens { tokens: tokenize_with_offsets(doc.full_text()), char_len: doc.char_len() }
    }

    pub fn windows(&self, start: usize, end: usize, window: usize) -> Result<ContextWindows> {
        if start >= end || end > self.char_len {
            return Err(Error::InvalidInput(format!(
                "mention offsets {start}..{end} invalid for text of length {}",
                self.char_len
            )));
        }
        let first = self.tokens.partition_point(|t| t.end <= start);
        let last = self.tokens.partition_point(|t| t.start < end);
        let mention = &self.tokens[first..last.max(first)];
        let aligned_outward = match (mention.first(), mention.last()) {
            (Some(a), Some(b)) => a.start < start || b.end > end,
            _ => false,
        };
        let texts = |ts: &[OffsetToken]| ts.iter().map(|t| t.text.clone()).collect::<Vec<_>>();

        let before_ctx = &self.tokens[first.saturating_sub(window)..first];
        let after_end = (last.max(first) + window).min(self.tokens.len());
        let after_ctx = &self.tokens[last.max(first)..after_end];

        let mut before = texts(before_ctx);
        before.extend(texts(mention));
        let mut after = texts(mention);
        after.extend(texts(after_ctx));
        Ok(ContextWindows {
            before: TokenSeq(before),
            after: TokenSeq(after),
            window,
            mention_len: mention.len(),
            aligned_outward,
        })
    }
}

/// Context windows of `window` tokens on each side of `mention`.
pub fn extract_context(doc: &Document, mention: &LabeledMention, window: usize) -> Result<ContextWindows> {
    DocumentTokens::new(doc).windows(mention.start, mention.end, window)
}
