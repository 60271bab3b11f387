use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// PubMed identifier. Always positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Pmid(u64);

impl Pmid {
    pub fn new(value: u64) -> Option<Pmid> {
        (value > 0).then_some(Pmid(value))
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Pmid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for Pmid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let value: u64 = s.trim().parse().map_err(|_| format!("pmid {s:?} is not a positive integer"))?;
        Pmid::new(value).ok_or_else(|| "pmid must be positive".to_string())
    }
}

impl<'de> Deserialize<'de> for Pmid {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = u64::deserialize(deserializer)?;
        Pmid::new(value).ok_or_else(|| serde::de::Error::custom("pmid must be positive"))
    }
}

/// The six bioconcept types. The declaration order is the canonical class
/// index used by every classifier and report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConceptType {
    Gene,
    Disease,
    Chemical,
    Species,
    Mutation,
    CellLine,
}

impl ConceptType {
    pub const COUNT: usize = 6;

    pub const ALL: [ConceptType; ConceptType::COUNT] = [
        ConceptType::Gene,
        ConceptType::Disease,
        ConceptType::Chemical,
        ConceptType::Species,
        ConceptType::Mutation,
        ConceptType::CellLine,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<ConceptType> {
        ConceptType::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConceptType::Gene => "Gene",
            ConceptType::Disease => "Disease",
            ConceptType::Chemical => "Chemical",
            ConceptType::Species => "Species",
            ConceptType::Mutation => "Mutation",
            ConceptType::CellLine => "CellLine",
        }
    }
}

impl fmt::Display for ConceptType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConceptType {
    type Err = Error;

    /// Case-insensitive; spaces and underscores are ignored, so "Cell line",
    /// "cell_line" and "CellLine" are the same type. tmVar's fine-grained
    /// variant labels fold into `Mutation`.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.trim().chars().filter(|c| *c != ' ' && *c != '_').flat_map(char::to_lowercase).collect();
        match key.as_str() {
            "gene" => Ok(ConceptType::Gene),
            "disease" => Ok(ConceptType::Disease),
            "chemical" => Ok(ConceptType::Chemical),
            "species" => Ok(ConceptType::Species),
            "mutation" | "variation" | "variant" | "dnamutation" | "proteinmutation" | "snp" => {
                Ok(ConceptType::Mutation)
            }
            "cellline" => Ok(ConceptType::CellLine),
            _ => Err(Error::UnknownConceptType(s.to_string())),
        }
    }
}

impl Serialize for ConceptType {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ConceptType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A set of concept types stored as a 6-bit mask. Iteration follows the
/// canonical type order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeSet(u8);

impl TypeSet {
    pub const EMPTY: TypeSet = TypeSet(0);
    pub const FULL: TypeSet = TypeSet(0b11_1111);

    pub fn from_bits(bits: u8) -> Option<TypeSet> {
        (bits & !Self::FULL.0 == 0).then_some(TypeSet(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn single(t: ConceptType) -> TypeSet {
        TypeSet(1 << t.index())
    }

    pub fn insert(&mut self, t: ConceptType) {
        self.0 |= 1 << t.index();
    }

    pub fn contains(self, t: ConceptType) -> bool {
        self.0 & (1 << t.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = ConceptType> {
        ConceptType::ALL.into_iter().filter(move |t| self.contains(*t))
    }
}

impl FromIterator<ConceptType> for TypeSet {
    fn from_iter<I: IntoIterator<Item = ConceptType>>(iter: I) -> Self {
        let mut set = TypeSet::EMPTY;
        for t in iter {
            set.insert(t);
        }
        set
    }
}

impl Serialize for TypeSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for TypeSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let types = Vec::<ConceptType>::deserialize(deserializer)?;
        Ok(types.into_iter().collect())
    }
}

/// One article. Offsets of every span index `full_text`, which is the title,
/// a single space, then the abstract. Offsets count Unicode scalar values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pmid: Pmid,
    title: String,
    abstract_text: String,
    full_text: String,
    char_len: usize,
}

impl Document {
    pub fn new(pmid: Pmid, title: impl Into<String>, abstract_text: impl Into<String>) -> Self {
        let title = title.into();
        let abstract_text = abstract_text.into();
        let full_text = format!("{title} {abstract_text}");
        let char_len = full_text.chars().count();
        Document { pmid, title, abstract_text, full_text, char_len }
    }

    pub fn pmid(&self) -> Pmid {
        self.pmid
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn abstract_text(&self) -> &str {
        &self.abstract_text
    }

    pub fn full_text(&self) -> &str {
        &self.full_text
    }

    /// Length of `full_text` in characters.
    pub fn char_len(&self) -> usize {
        self.char_len
    }

    /// The `[start, end)` character range of `full_text`, or `None` when the
    /// range is empty, reversed or out of bounds.
    pub fn slice(&self, start: usize, end: usize) -> Option<&str> {
        if start >= end || end > self.char_len {
            return None;
        }
        if self.full_text.len() == self.char_len {
            return Some(&self.full_text[start..end]);
        }
        let begin = self.byte_offset(start);
        let finish = self.byte_offset(end);
        Some(&self.full_text[begin..finish])
    }

    fn byte_offset(&self, char_idx: usize) -> usize {
        self.full_text.char_indices().nth(char_idx).map_or(self.full_text.len(), |(b, _)| b)
    }
}

/// A mention produced by an upstream tagger.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaggedSpan {
    pub pmid: Pmid,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub concept_type: ConceptType,
    /// May be empty when the tagger did not normalize the mention.
    pub concept_id: String,
}

/// A curated (document, concept) association without offsets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RepositoryRecord {
    pub source: String,
    pub pmid: Pmid,
    pub concept_type: ConceptType,
    pub concept_id: String,
}

/// A repository record paired with every span that carries its concept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchedRecord {
    pub record: RepositoryRecord,
    pub spans: Vec<TaggedSpan>,
}

/// Identity of a labeled mention inside a corpus.
pub type MentionKey = (Pmid, usize, usize, ConceptType);

/// A gold-labeled mention, the unit of classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledMention {
    pub pmid: Pmid,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub gold_type: ConceptType,
    pub candidate_types: TypeSet,
    pub candidate_ids: BTreeMap<ConceptType, String>,
    pub source: String,
}

impl LabeledMention {
    pub fn key(&self) -> MentionKey {
        (self.pmid, self.start, self.end, self.gold_type)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concept_type_aliases() {
        for (text, expected) in [
            ("Gene", ConceptType::Gene),
            ("DISEASE", ConceptType::Disease),
            ("chemical", ConceptType::Chemical),
            ("Species", ConceptType::Species),
            ("Variation", ConceptType::Mutation),
            ("variant", ConceptType::Mutation),
            ("Mutation", ConceptType::Mutation),
            ("ProteinMutation", ConceptType::Mutation),
            ("CellLine", ConceptType::CellLine),
            ("Cell line", ConceptType::CellLine),
            ("cell_line", ConceptType::CellLine),
        ] {
            assert_eq!(text.parse::<ConceptType>().unwrap(), expected, "{text}");
        }
        assert!("Protein".parse::<ConceptType>().is_err());
    }

    #[test]
    fn concept_type_round_trip() {
        for t in ConceptType::ALL {
            assert_eq!(t.to_string().parse::<ConceptType>().unwrap(), t);
            assert_eq!(ConceptType::from_index(t.index()), Some(t));
        }
    }

    #[test]
    fn type_set_iterates_in_canonical_order() {
        let set: TypeSet = [ConceptType::CellLine, ConceptType::Gene, ConceptType::Disease].into_iter().collect();
        assert_eq!(set.len(), 3);
        assert_eq!(
            set.iter().collect::<Vec<_>>(),
            vec![ConceptType::Gene, ConceptType::Disease, ConceptType::CellLine]
        );
        assert_eq!(serde_json::to_string(&set).unwrap(), r#"["Gene","Disease","CellLine"]"#);
        assert!(TypeSet::from_bits(0b100_0000).is_none());
    }

    #[test]
    fn document_full_text_and_slices() {
        let doc = Document::new(Pmid::new(1).unwrap(), "Title", "Abstract text.");
        assert_eq!(doc.full_text(), "Title Abstract text.");
        assert_eq!(doc.char_len(), "Title".len() + 1 + "Abstract text.".len());
        assert_eq!(doc.slice(6, 14), Some("Abstract"));
        assert_eq!(doc.slice(3, 3), None);
        assert_eq!(doc.slice(0, 100), None);

        let doc = Document::new(Pmid::new(2).unwrap(), "Behçet's disease", "β-catenin");
        assert_eq!(doc.slice(0, 8), Some("Behçet's"));
        assert_eq!(doc.slice(17, 26), Some("β-catenin"));
    }

    #[test]
    fn pmid_must_be_positive() {
        assert!("0".parse::<Pmid>().is_err());
        assert!("abc".parse::<Pmid>().is_err());
        assert_eq!("10021333".parse::<Pmid>().unwrap().get(), 10021333);
        assert!(serde_json::from_str::<Pmid>("0").is_err());
    }
}
