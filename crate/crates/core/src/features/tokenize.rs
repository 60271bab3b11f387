use serde::{Deserialize, Serialize};

/// Ordered tokens; none is empty or contains whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(pub Vec<String>);

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

/// A token with its `[start, end)` character offsets in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffsetToken {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Splits on whitespace and strips leading and trailing characters that are
/// neither letters nor digits. Internal punctuation ("HER-2/neu") and case
/// are kept; tokens that strip to nothing are dropped.
pub fn tokenize_with_offsets(text: &str) -> Vec<OffsetToken> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map_or(text.len(), |(b, _)| *b);
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].1.is_whitespace() {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && !chars[j].1.is_whitespace() {
            j += 1;
        }
        let mut a = i;
        while a < j && !chars[a].1.is_alphanumeric() {
            a += 1;
        }
        let mut b = j;
        while b > a && !chars[b - 1].1.is_alphanumeric() {
            b -= 1;
        }
        if a < b {
            tokens.push(OffsetToken { text: text[byte_at(a)..byte_at(b)].to_string(), start: a, end: b });
        }
        i = j;
    }
    tokens
}

pub fn tokenize(text: &str) -> TokenSeq {
    TokenSeq(tokenize_with_offsets(text).into_iter().map(|t| t.text).collect())
}
