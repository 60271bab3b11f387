//! End-to-end corpus construction and its per-type statistics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::join::{canonicalize, explode_to_individual_spans, filter_ambiguous, join_records_with_spans};
use super::types::{ConceptType, Document, LabeledMention, Pmid, RepositoryRecord, TaggedSpan};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeStats {
    /// Distinct repository records of this type.
    pub records: usize,
    /// Records paired with at least one span.
    pub matched_records: usize,
    /// Mentions after splitting matched records into single spans.
    pub individual_mentions: usize,
    /// Mentions whose span was tagged with two or more types.
    pub ambiguous_mentions: usize,
}

impl TypeStats {
    fn add(&mut self, other: &TypeStats) {
        self.records += other.records;
        self.matched_records += other.matched_records;
        self.individual_mentions += other.individual_mentions;
        self.ambiguous_mentions += other.ambiguous_mentions;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub per_type: BTreeMap<ConceptType, TypeStats>,
    pub total: TypeStats,
    pub unmatched_records: usize,
    pub duplicate_records: usize,
    pub duplicate_mentions: usize,
    pub articles_with_mentions: usize,
    pub articles_with_ambiguous: usize,
}

impl CorpusStats {
    /// Aligned text table, one row per type plus totals.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>12} {:>12} {:>12} {:>12}",
            "Bioconcept", "Records", "Matched", "Individual", "Ambiguous"
        );
        let row = |out: &mut String, name: &str, s: &TypeStats| {
            let _ = writeln!(
                out,
                "{:<10} {:>12} {:>12} {:>12} {:>12}",
                name, s.records, s.matched_records, s.individual_mentions, s.ambiguous_mentions
            );
        };
        for (t, s) in &self.per_type {
            row(&mut out, t.as_str(), s);
        }
        row(&mut out, "Total", &self.total);
        let _ = writeln!(
            out,
            "{:<10} {:>12} {:>12} {:>12} {:>12}",
            "Articles", "", "", self.articles_with_mentions, self.articles_with_ambiguous
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusBuild {
    /// Ambiguous labeled mentions sorted by (pmid, start, end, gold_type).
    pub mentions: Vec<LabeledMention>,
    pub stats: CorpusStats,
}

/// join → explode → filter → sort/dedup.
pub fn build_corpus(spans: &[TaggedSpan], records: &[RepositoryRecord]) -> CorpusBuild {
    let joined = join_records_with_spans(records, spans);
    let exploded = explode_to_individual_spans(&joined.matched);
    let mut ambiguous = filter_ambiguous(&exploded, spans);
    let duplicate_mentions = canonicalize(&mut ambiguous);

    let mut per_type: BTreeMap<ConceptType, TypeStats> =
        ConceptType::ALL.iter().map(|t| (*t, TypeStats::default())).collect();
    let mut distinct = HashSet::new();
    for r in records {
        if distinct.insert((r.pmid, r.concept_type, r.concept_id.trim())) {
            per_type.get_mut(&r.concept_type).expect("all types").records += 1;
        }
    }
    for m in &joined.matched {
        per_type.get_mut(&m.record.concept_type).expect("all types").matched_records += 1;
    }
    for m in &exploded {
        per_type.get_mut(&m.gold_type).expect("all types").individual_mentions += 1;
    }
    for m in &ambiguous {
        per_type.get_mut(&m.gold_type).expect("all types").ambiguous_mentions += 1;
    }
    let mut total = TypeStats::default();
    for s in per_type.values() {
        total.add(s);
    }
    let pmids = |ms: &[LabeledMention]| ms.iter().map(|m| m.pmid).collect::<HashSet<Pmid>>().len();

    CorpusBuild {
        stats: CorpusStats {
            per_type,
            total,
            unmatched_records: joined.unmatched,
            duplicate_records: joined.duplicate_records,
            duplicate_mentions,
            articles_with_mentions: pmids(&exploded),
            articles_with_ambiguous: pmids(&ambiguous),
        },
        mentions: ambiguous,
    }
}

/// Checks every mention's offsets and surface against its document.
pub fn verify_against_documents(documents: &[Document], mentions: &[LabeledMention]) -> Result<()> {
    let by_pmid: HashMap<Pmid, &Document> = documents.iter().map(|d| (d.pmid(), d)).collect();
    for m in mentions {
        let doc =
            by_pmid.get(&m.pmid).ok_or_else(|| Error::InvalidInput(format!("no document for pmid {}", m.pmid)))?;
        if doc.slice(m.start, m.end) != Some(m.surface.as_str()) {
            return Err(Error::InvalidInput(format!(
                "pmid {}: surface {:?} does not match text at {}..{}",
                m.pmid, m.surface, m.start, m.end
            )));
        }
    }
    Ok(())
}
