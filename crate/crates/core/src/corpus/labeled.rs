//! Labeled-mention corpus as JSON Lines.

use std::io::{BufRead, Write};

use super::types::LabeledMention;
use crate::error::{Error, Result};

pub fn write_labeled_corpus<W: Write>(mentions: &[LabeledMention], mut writer: W) -> Result<()> {
    for m in mentions {
        serde_json::to_writer(&mut writer, m)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads one mention per non-blank line. A mention whose gold type is not
/// among its candidates is rejected.
pub fn read_labeled_corpus<R: BufRead>(reader: R) -> Result<Vec<LabeledMention>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let m: LabeledMention = serde_json::from_str(&line).map_err(|e| Error::parse(idx + 1, None, e.to_string()))?;
        if m.start >= m.end {
            return Err(Error::parse(idx + 1, Some(m.pmid), "empty or reversed offsets"));
        }
        if !m.candidate_types.contains(m.gold_type) {
            return Err(Error::parse(idx + 1, Some(m.pmid), format!("gold type {} is not a candidate", m.gold_type)));
        }
        out.push(m);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use proptest::prelude::*;

    use super::*;
    use crate::corpus::{ConceptType, Pmid, TypeSet};

    fn sample() -> LabeledMention {
        LabeledMention {
            pmid: Pmid::new(23378296).unwrap(),
            start: 5,
            end: 9,
            surface: "XPID".into(),
            gold_type: ConceptType::Gene,
            candidate_types: [ConceptType::Gene, ConceptType::Disease].into_iter().collect(),
            candidate_ids: BTreeMap::from([
                (ConceptType::Gene, "7508".to_string()),
                (ConceptType::Disease, "D014983".to_string()),
            ]),
            source: "MeSH".into(),
        }
    }

    #[test]
    fn empty_round_trip() {
        let mut buf = Vec::new();
        write_labeled_corpus(&[], &mut buf).unwrap();
        assert!(buf.is_empty());
        assert!(read_labeled_corpus(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn line_format() {
        let mut buf = Vec::new();
        write_labeled_corpus(&[sample()], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "{\"pmid\":23378296,\"start\":5,\"end\":9,\"surface\":\"XPID\",\"gold_type\":\"Gene\",\
\"candidate_types\":[\"Gene\",\"Disease\"],\"candidate_ids\":{\"Gene\":\"7508\",\"Disease\":\"D014983\"},\
\"source\":\"MeSH\"}\n"
        );
        assert_eq!(read_labeled_corpus(&buf[..]).unwrap(), vec![sample()]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let mut buf = Vec::new();
        write_labeled_corpus(&[sample()], &mut buf).unwrap();
        buf.extend_from_slice(b"{not json}\n");
        assert!(matches!(read_labeled_corpus(&buf[..]).unwrap_err(), Error::Parse { line: 2, .. }));
    }

    #[test]
    fn gold_outside_candidates_rejected() {
        let mut m = sample();
        m.gold_type = ConceptType::Species;
        let mut buf = Vec::new();
        write_labeled_corpus(&[m], &mut buf).unwrap();
        assert!(read_labeled_corpus(&buf[..]).is_err());
    }

    fn arb_mention() -> impl Strategy<Value = LabeledMention> {
        (
            1u64..100_000_000,
            0usize..5000,
            1usize..40,
            "\\PC{1,20}",
            0usize..6,
            1u8..64,
            proptest::collection::btree_map(0usize..6, "[A-Za-z0-9:_ \"\\\\]{0,12}", 0..6),
            "[a-zA-Z0-9_]{1,12}",
        )
            .prop_map(|(pmid, start, len, surface, gold, extra, ids, source)| {
                let gold = ConceptType::from_index(gold).unwrap();
                let mut candidates = TypeSet::from_bits(extra & 0b11_1111).unwrap();
                candidates.insert(gold);
                LabeledMention {
                    pmid: Pmid::new(pmid).unwrap(),
                    start,
                    end: start + len,
                    surface,
                    gold_type: gold,
                    candidate_types: candidates,
                    candidate_ids: ids.into_iter().map(|(t, id)| (ConceptType::from_index(t).unwrap(), id)).collect(),
                    source,
                }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip(mentions in proptest::collection::vec(arb_mention(), 0..40)) {
            let mut buf = Vec::new();
            write_labeled_corpus(&mentions, &mut buf).unwrap();
            prop_assert_eq!(read_labeled_corpus(&buf[..]).unwrap(), mentions);
        }
    }
}
