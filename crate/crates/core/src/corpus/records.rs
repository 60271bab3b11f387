//! Normalized repository records: `SOURCE<TAB>PMID<TAB>TYPE<TAB>CONCEPT_ID`.
//!
//! Each curated source (gene2pubmed, MeSH, CTD, ...) is converted to this
//! four-column form before ingestion. For gene2pubmed, whose columns are
//! `tax_id GeneID PubMed_ID`, the conversion is
//!
//! ```text
//! awk -F'\t' '!/^#/ {print "gene2pubmed\t" $3 "\tGene\t" $2}' gene2pubmed
//! ```

use std::io::{BufRead, Write};

use super::types::{ConceptType, Pmid, RepositoryRecord};
use crate::error::{Error, Result};

/// Parses normalized records. Blank lines and lines starting with `#` are
/// skipped; type aliases are canonicalized.
pub fn parse_repository_records<R: BufRead>(reader: R) -> Result<Vec<RepositoryRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                line_no,
                None,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let pmid: Pmid = fields[1].parse().map_err(|e: String| Error::parse(line_no, None, e))?;
        let concept_type: ConceptType =
            fields[2].parse().map_err(|e: Error| Error::parse(line_no, Some(pmid), e.to_string()))?;
        let concept_id = fields[3].trim();
        if concept_id.is_empty() {
            return Err(Error::parse(line_no, Some(pmid), "empty concept id"));
        }
        records.push(RepositoryRecord {
            source: fields[0].trim().to_string(),
            pmid,
            concept_type,
            concept_id: concept_id.to_string(),
        });
    }
    Ok(records)
}

pub fn write_repository_records<W: Write>(records: &[RepositoryRecord], mut writer: W) -> Result<()> {
    for r in records {
        writeln!(writer, "{}\t{}\t{}\t{}", r.source, r.pmid, r.concept_type, r.concept_id)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gene2pubmed_record() {
        let records = parse_repository_records("gene2pubmed\t10021333\tGene\t41066\n".as_bytes()).unwrap();
        assert_eq!(
            records,
            vec![RepositoryRecord {
                source: "gene2pubmed".into(),
                pmid: Pmid::new(10021333).unwrap(),
                concept_type: ConceptType::Gene,
                concept_id: "41066".into(),
            }]
        );
    }

    #[test]
    fn comments_and_aliases() {
        let text = "# source\tpmid\ttype\tid\n\nClinVar\t1\tVariation\trs123\nCellosaurus\t2\tCell line\tCVCL_0030\n";
        let records = parse_repository_records(text.as_bytes()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].concept_type, ConceptType::Mutation);
        assert_eq!(records[1].concept_type, ConceptType::CellLine);
    }

    #[test]
    fn malformed_lines() {
        for (text, line) in [
            ("x\tabc\tGene\t1\n", 1),
            ("ok\t1\tGene\t1\nx\t2\tGene\n", 2),
            ("x\t1\tProtein\t1\n", 1),
            ("x\t1\tGene\t \n", 1),
        ] {
            match parse_repository_records(text.as_bytes()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
