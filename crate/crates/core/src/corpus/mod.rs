//! Corpus construction: PubTator and repository-record ingestion, the
//! record/span join, ambiguity filtering and train/test splits.

mod join;
mod labeled;
mod pubtator;
mod records;
mod split;
mod stats;
mod types;

pub use join::{
    canonicalize, explode_to_individual_spans, filter_ambiguous, join_records_with_spans, merge_shards, JoinOutcome,
};
pub use labeled::{read_labeled_corpus, write_labeled_corpus};
pub use pubtator::{parse_pubtator, write_pubtator, PubTatorCorpus};
pub use records::{parse_repository_records, write_repository_records};
pub use split::{normalize_surface, split, test_target, CorpusSplit, SplitStrategy};
pub use stats::{build_corpus, verify_against_documents, CorpusBuild, CorpusStats, TypeStats};
pub use types::{
    ConceptType, Document, LabeledMention, MatchedRecord, MentionKey, Pmid, RepositoryRecord, TaggedSpan, TypeSet,
};
