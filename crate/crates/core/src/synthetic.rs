//! Generated corpus with a known answer, for end-to-end checks without the
//! real annotation dumps.
//!
//! Each document holds one ambiguous mention tagged with its gold type and
//! one distractor type, plus a repository record for the gold concept. The
//! gold type is fully determined by two things: the cue word right before
//! the mention, and the first three letters of the mention itself (which
//! become a `PRE3=` feature token). Everything else is class-independent
//! filler. Distractors cycle through the other five types within each
//! class, so the accuracy of any fixed priority order has a closed form.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ConceptType, Document, Pmid, RepositoryRecord, TaggedSpan};
use crate::error::{Error, Result};
use crate::models::PriorityOrder;
use crate::nn::rng::seeded;

const FIRST_PMID: u64 = 9_000_001;

/// Cue words by canonical type index.
pub const CUE_WORDS: [&str; ConceptType::COUNT] =
    ["encodes", "diagnosed", "dosed", "infects", "substitution", "cultured"];

/// Surface prefixes by canonical type index.
pub const SURFACE_PREFIXES: [&str; ConceptType::COUNT] = ["kel", "mov", "tar", "pil", "dru", "sen"];

const FILLER: [&str; 40] = [
    "we",
    "report",
    "that",
    "the",
    "observed",
    "levels",
    "were",
    "measured",
    "in",
    "a",
    "cohort",
    "of",
    "samples",
    "and",
    "results",
    "show",
    "significant",
    "changes",
    "across",
    "groups",
    "this",
    "study",
    "suggests",
    "further",
    "analysis",
    "is",
    "required",
    "for",
    "data",
    "from",
    "patients",
    "controls",
    "was",
    "compared",
    "with",
    "baseline",
    "values",
    "under",
    "standard",
    "conditions",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    /// Documents (and mentions) per type, canonical order.
    pub class_counts: [usize; ConceptType::COUNT],
    pub seed: u64,
    /// Filler tokens on each side of the cue + mention pair.
    pub min_filler: usize,
    pub max_filler: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig { class_counts: [700, 700, 600, 600, 200, 200], seed: 7, min_filler: 3, max_filler: 14 }
    }
}

impl SyntheticConfig {
    pub fn total(&self) -> usize {
        self.class_counts.iter().sum()
    }

    /// Distractor of the `k`-th mention of type `gold`.
    pub fn distractor(gold: ConceptType, k: usize) -> ConceptType {
        let others: Vec<ConceptType> = ConceptType::ALL.into_iter().filter(|t| *t != gold).collect();
        others[k % others.len()]
    }

    /// Mentions a rule with `order` gets right, counted from the
    /// construction alone: for each gold type, how many of its mentions
    /// have a distractor ranked after it.
    pub fn rule_correct(&self, order: &PriorityOrder) -> usize {
        let mut correct = 0;
        for (gold, &n) in ConceptType::ALL.iter().zip(&self.class_counts) {
            let others: Vec<ConceptType> = ConceptType::ALL.into_iter().filter(|t| t != gold).collect();
            for (j, d) in others.iter().enumerate() {
                // k in 0..n with k % 5 == j
                let with_d = n / 5 + usize::from(j < n % 5);
                if order.rank(*gold) < order.rank(*d) {
                    correct += with_d;
                }
            }
        }
        correct
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticCorpus {
    pub documents: Vec<Document>,
    pub spans: Vec<TaggedSpan>,
    pub records: Vec<RepositoryRecord>,
}

/// Generates the corpus. Documents are interleaved across types in a seeded
/// order; the same config always gives the same bytes.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    if config.min_filler > config.max_filler {
        return Err(Error::Config("min_filler exceeds max_filler".into()));
    }
    let mut rng = seeded(config.seed);
    let mut plan: Vec<(ConceptType, usize)> = Vec::with_capacity(config.total());
    for (t, &n) in ConceptType::ALL.iter().zip(&config.class_counts) {
        plan.extend((0..n).map(|k| (*t, k)));
    }
    plan.shuffle(&mut rng);

    let mut out = SyntheticCorpus { documents: Vec::new(), spans: Vec::new(), records: Vec::new() };
    for (i, (gold, k)) in plan.into_iter().enumerate() {
        let pmid = Pmid::new(FIRST_PMID + i as u64).expect("positive");
        let distractor = SyntheticConfig::distractor(gold, k);
        let filler = |rng: &mut crate::nn::Rng| -> Vec<&str> {
            let n = rng.gen_range(config.min_filler..=config.max_filler);
            (0..n).map(|_| *FILLER.choose(rng).expect("non-empty")).collect()
        };
        let suffix: String = (0..4)
            .map(|_| {
                let c = rng.gen_range(0..36u32);
                char::from_digit(c, 36).expect("base 36")
            })
            .collect();
        let surface = format!("{}{suffix}", SURFACE_PREFIXES[gold.index()]);

        let before = filler(&mut rng).join(" ");
        let after = filler(&mut rng).join(" ");
        let title = format!("Synthetic report {}", i + 1);
        let lead = format!("{before} {} ", CUE_WORDS[gold.index()]);
        let abstract_text = format!("{lead}{surface} {after}.");
        let doc = Document::new(pmid, title.clone(), abstract_text);
        let start = title.chars().count() + 1 + lead.chars().count();
        let end = start + surface.chars().count();
        debug_assert_eq!(doc.slice(start, end), Some(surface.as_str()));

        let id = |t: ConceptType| format!("SYN:{}:{}", t.as_str(), i + 1);
        for t in [gold, distractor] {
            out.spans.push(TaggedSpan {
                pmid,
                start,
                end,
                surface: surface.clone(),
                concept_type: t,
                concept_id: id(t),
            });
        }
        out.records.push(RepositoryRecord {
            source: "synthetic".into(),
            pmid,
            concept_type: gold,
            concept_id: id(gold),
        });
        out.documents.push(doc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_corpus;
    use crate::models::rule_predict;

    fn small() -> SyntheticConfig {
        SyntheticConfig { class_counts: [13, 11, 7, 6, 5, 3], ..Default::default() }
    }

    #[test]
    fn every_document_yields_one_ambiguous_mention() {
        let c = small();
        let corpus = generate(&c).unwrap();
        let built = build_corpus(&corpus.spans, &corpus.records);
        assert_eq!(built.mentions.len(), c.total());
        for (t, &n) in ConceptType::ALL.iter().zip(&c.class_counts) {
            assert_eq!(built.mentions.iter().filter(|m| m.gold_type == *t).count(), n);
        }
        for m in &built.mentions {
            assert_eq!(m.candidate_types.len(), 2);
            assert!(m.surface.starts_with(SURFACE_PREFIXES[m.gold_type.index()]));
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        assert_eq!(generate(&small()).unwrap(), generate(&small()).unwrap());
        let other = SyntheticConfig { seed: 8, ..small() };
        assert_ne!(generate(&small()).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn closed_form_rule_accuracy_matches_enumeration() {
        let c = small();
        let corpus = generate(&c).unwrap();
        let built = build_corpus(&corpus.spans, &corpus.records);
        for order in [PriorityOrder::default(), PriorityOrder::new(&ConceptType::ALL).unwrap()] {
            let hits = built
                .mentions
                .iter()
                .filter(|m| rule_predict(m.candidate_types, &order).unwrap() == m.gold_type)
                .count();
            assert_eq!(hits, c.rule_correct(&order));
        }
    }

    #[test]
    fn default_size() {
        let c = SyntheticConfig::default();
        assert_eq!(c.total(), 3000);
        // Default order: Mutation > Species > Gene > Chemical > Disease > CellLine.
        // Gene beats 3 of its 5 distractors, Disease 1, Chemical 2, Species 4,
        // Mutation all, CellLine none.
        let expected = 700 * 3 / 5 + 700 / 5 + 600 * 2 / 5 + 600 * 4 / 5 + 200;
        assert_eq!(expected, 1480);
        assert_eq!(c.rule_correct(&PriorityOrder::default()), expected);
    }
}
