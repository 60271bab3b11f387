//! Mention features: tokenization, context windows, abbreviation-aware
//! semantic features, affix features, vocabularies, word vectors and the
//! fixed-length encoding fed to the classifiers.

mod abbrev;
mod bundle;
mod context;
mod embeddings;
mod encode;
mod pipeline;
mod tokenize;
mod vocab;

pub use abbrev::{detect_abbreviations, AbbrevDefinition};
pub use bundle::{affix_features, extract_features, FeatureBundle};
pub use context::{extract_context, ContextWindows, DocumentTokens, DEFAULT_WINDOW};
pub use embeddings::{
    hashed_vector, load_embeddings, synthesize_embeddings, token_hash, EmbeddingTable, EMBEDDING_DIM,
};
pub use encode::{encode, read_encoded, write_encoded, EncodedExample, DEFAULT_CONTEXT_LEN, DEFAULT_FEATURE_LEN};
pub use pipeline::{FeatureConfig, FeaturePipeline, PreparedMention};
pub use tokenize::{tokenize, tokenize_with_offsets, OffsetToken, TokenSeq};
pub use vocab::{TokenIndex, Vocab, VocabBuilder, PAD, UNK};
