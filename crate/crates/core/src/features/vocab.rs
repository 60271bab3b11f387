use std::collections::HashMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bundle::FeatureBundle;
use super::context::ContextWindows;
use crate::error::{Error, Result};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
const PAD_TOKEN: &str = "<PAD>";
const UNK_TOKEN: &str = "<UNK>";

/// Dense token → index map with PAD at 0 and UNK at 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct TokenIndex {
    tokens: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl From<Vec<String>> for TokenIndex {
    fn from(tokens: Vec<String>) -> Self {
        let lookup = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        TokenIndex { tokens, lookup }
    }
}

impl From<TokenIndex> for Vec<String> {
    fn from(index: TokenIndex) -> Self {
        index.tokens
    }
}

impl TokenIndex {
    fn with_reserved<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let all: Vec<String> = [PAD_TOKEN, UNK_TOKEN].into_iter().chain(tokens).map(str::to_string).collect();
        all.into()
    }

    /// UNK for unseen tokens.
    pub fn get(&self, token: &str) -> u32 {
        self.lookup.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, index: u32) -> Option<&str> {
        self.tokens.get(index as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Frozen word and feature vocabularies. Window tokens are looked up
/// lowercased; feature tokens are case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    pub words: TokenIndex,
    pub features: TokenIndex,
    pub min_count: usize,
}

impl Vocab {
    pub fn word_id(&self, token: &str) -> u32 {
        self.words.get(&token.to_lowercase())
    }

    pub fn feature_id(&self, token: &str) -> u32 {
        self.features.get(token)
    }

    /// Hex SHA-256 of the serialized vocabulary.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("vocab serializes");
        format!("{:x}", Sha256::digest(bytes))
    }
}

/// Counts tokens in first-occurrence order. Shards can count separately and
/// [`merge`](VocabBuilder::merge) in a fixed order before [`build`](VocabBuilder::build).
#[derive(Debug, Clone, Default)]
pub struct VocabBuilder {
    words: IndexMap<String, usize>,
    features: IndexMap<String, usize>,
}

impl VocabBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_word(&mut self, token: &str) {
        *self.words.entry(token.to_lowercase()).or_default() += 1;
    }

    pub fn add_feature(&mut self, token: &str) {
        *self.features.entry(token.to_string()).or_default() += 1;
    }

    pub fn add_windows(&mut self, windows: &ContextWindows) {
        for t in windows.before.iter().chain(windows.after.iter()) {
            self.add_word(t);
        }
    }

    pub fn add_bundle(&mut self, bundle: &FeatureBundle) {
        for t in bundle.tokens() {
            self.add_feature(t);
        }
    }

    pub fn merge(&mut self, other: VocabBuilder) {
        for (t, c) in other.words {
            *self.words.entry(t).or_default() += c;
        }
        for (t, c) in other.features {
            *self.features.entry(t).or_default() += c;
        }
    }

    /// Freezes the vocabulary; tokens seen fewer than `min_count` times are
    /// left out and will map to UNK.
    pub fn build(self, min_count: usize) -> Result<Vocab> {
        if self.words.is_empty() && self.features.is_empty() {
            return Err(Error::InvalidInput("cannot build a vocabulary from an empty corpus".into()));
        }
        let keep = |m: &IndexMap<String, usize>| {
            TokenIndex::with_reserved(
                m.iter().filter(|(_, c)| **c >= min_count).map(|(t, _)| t.as_str()).collect::<Vec<_>>(),
            )
        };
        Ok(Vocab { words: keep(&self.words), features: keep(&self.features), min_count })
    }
}
