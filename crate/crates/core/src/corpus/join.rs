//! Pairing repository records with tagger spans.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::types::{ConceptType, LabeledMention, MatchedRecord, Pmid, RepositoryRecord, TaggedSpan, TypeSet};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JoinOutcome {
    /// One entry per distinct record that matched at least one span, in
    /// record input order.
    pub matched: Vec<MatchedRecord>,
    /// Records with no span carrying their (pmid, type, id).
    pub unmatched: usize,
    /// Records repeating an earlier (pmid, type, id); the first source wins.
    pub duplicate_records: usize,
}

/// Matches each record with every span of equal pmid, type and concept id
/// (exact comparison after trimming).
pub fn join_records_with_spans(records: &[RepositoryRecord], spans: &[TaggedSpan]) -> JoinOutcome {
    let mut index: HashMap<(Pmid, ConceptType, &str), Vec<&TaggedSpan>> = HashMap::new();
    for span in spans {
        let id = span.concept_id.trim();
        if id.is_empty() {
            continue;
        }
        index.entry((span.pmid, span.concept_type, id)).or_default().push(span);
    }

    let mut out = JoinOutcome::default();
    let mut seen = HashSet::new();
    for record in records {
        let key = (record.pmid, record.concept_type, record.concept_id.trim());
        if !seen.insert(key) {
            out.duplicate_records += 1;
            continue;
        }
        match index.get(&key) {
            Some(found) => out
                .matched
                .push(MatchedRecord { record: record.clone(), spans: found.iter().map(|s| (*s).clone()).collect() }),
            None => out.unmatched += 1,
        }
    }
    out
}

/// One mention per (record, span) pair, labeled with the record's type.
pub fn explode_to_individual_spans(matched: &[MatchedRecord]) -> Vec<LabeledMention> {
    matched
        .iter()
        .flat_map(|m| {
            m.spans.iter().map(move |span| LabeledMention {
                pmid: span.pmid,
                start: span.start,
                end: span.end,
                surface: span.surface.clone(),
                gold_type: m.record.concept_type,
                candidate_types: TypeSet::single(m.record.concept_type),
                candidate_ids: BTreeMap::from([(m.record.concept_type, m.record.concept_id.trim().to_string())]),
                source: m.record.source.clone(),
            })
        })
        .collect()
}

/// Keeps mentions whose exact offsets were tagged with two or more types,
/// setting `candidate_types` to those types and `candidate_ids` to the first
/// non-empty id seen for each type.
pub fn filter_ambiguous(mentions: &[LabeledMention], spans: &[TaggedSpan]) -> Vec<LabeledMention> {
    type Tags = (TypeSet, BTreeMap<ConceptType, String>);
    let mut tags: HashMap<(Pmid, usize, usize), Tags> = HashMap::new();
    for span in spans {
        let (types, ids) = tags.entry((span.pmid, span.start, span.end)).or_default();
        types.insert(span.concept_type);
        let id = span.concept_id.trim();
        if !id.is_empty() {
            ids.entry(span.concept_type).or_insert_with(|| id.to_string());
        }
    }

    mentions
        .iter()
        .filter_map(|m| {
            let (types, ids) = tags.get(&(m.pmid, m.start, m.end))?;
            if types.len() < 2 || !types.contains(m.gold_type) {
                return None;
            }
            let mut kept = m.clone();
            kept.candidate_types = *types;
            kept.candidate_ids = ids.clone();
            Some(kept)
        })
        .collect()
}

/// Sorts by (pmid, start, end, gold_type) and drops repeated identities,
/// keeping the first occurrence. Returns the number dropped.
pub fn canonicalize(mentions: &mut Vec<LabeledMention>) -> usize {
    let before = mentions.len();
    mentions.sort_by_key(LabeledMention::key);
    mentions.dedup_by_key(|m| m.key());
    before - mentions.len()
}

/// Merges independently built shards (e.g. one per pmid range) into the
/// same order a serial run produces.
pub fn merge_shards(shards: Vec<Vec<LabeledMention>>) -> Vec<LabeledMention> {
    let mut merged: Vec<LabeledMention> = shards.into_iter().flatten().collect();
    canonicalize(&mut merged);
    merged
}
