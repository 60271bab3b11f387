//! Reader and writer for the PubTator exchange format.
//!
//! ```text
//! 23262785|t|Title text
//! 23262785|a|Abstract text
//! 23262785<TAB>START<TAB>END<TAB>SURFACE<TAB>TYPE<TAB>ID
//!
//! ```
//!
//! Offsets index `title + " " + abstract`. The ID column is optional.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use log::warn;

use super::types::{ConceptType, Document, Pmid, TaggedSpan};
use crate::error::{Error, Result};

/// Everything read from one PubTator stream.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PubTatorCorpus {
    pub documents: Vec<Document>,
    pub spans: Vec<TaggedSpan>,
    /// Annotation lines dropped because their type is not one of the six.
    pub skipped_unknown_type: usize,
}

struct Pending {
    pmid: Pmid,
    title: String,
    abstract_text: Option<String>,
    doc: Option<Document>,
}

impl Pending {
    fn seal(&mut self) -> &Document {
        let (pmid, title, abstract_text) = (self.pmid, &self.title, &self.abstract_text);
        self.doc.get_or_insert_with(|| Document::new(pmid, title.clone(), abstract_text.clone().unwrap_or_default()))
    }

    fn finish(mut self) -> Document {
        self.seal();
        self.doc.expect("sealed")
    }
}

enum LineKind {
    Text,
    Annotation,
}

fn classify(line: &str) -> Option<LineKind> {
    let first_non_digit = line.find(|c: char| !c.is_ascii_digit())?;
    if first_non_digit == 0 {
        return None;
    }
    match line.as_bytes()[first_non_digit] {
        b'|' => Some(LineKind::Text),
        b'\t' => Some(LineKind::Annotation),
        _ => None,
    }
}

fn parse_pmid(field: &str, line: usize) -> Result<Pmid> {
    field.parse().map_err(|e: String| Error::parse(line, None, e))
}

/// Parses a PubTator stream. Documents and spans keep input order.
pub fn parse_pubtator<R: BufRead>(reader: R) -> Result<PubTatorCorpus> {
    let mut out = PubTatorCorpus::default();
    let mut seen = HashSet::new();
    let mut pending: Option<Pending> = None;

    let finish = |pending: &mut Option<Pending>, out: &mut PubTatorCorpus| {
        if let Some(p) = pending.take() {
            out.documents.push(p.finish());
        }
    };

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            finish(&mut pending, &mut out);
            continue;
        }
        match classify(line) {
            Some(LineKind::Text) => {
                let mut parts = line.splitn(3, '|');
                let pmid = parse_pmid(parts.next().unwrap_or_default(), line_no)?;
                let kind = parts.next().unwrap_or_default();
                let text = parts.next().ok_or_else(|| Error::parse(line_no, Some(pmid), "missing text field"))?;
                match kind {
                    "t" => {
                        finish(&mut pending, &mut out);
                        if !seen.insert(pmid) {
                            return Err(Error::parse(line_no, Some(pmid), "duplicate pmid"));
                        }
                        pending = Some(Pending { pmid, title: text.to_string(), abstract_text: None, doc: None });
                    }
                    "a" => match pending.as_mut() {
                        Some(p) if p.pmid == pmid && p.abstract_text.is_none() && p.doc.is_none() => {
                            p.abstract_text = Some(text.to_string());
                        }
                        _ => {
                            return Err(Error::parse(
                                line_no,
                                Some(pmid),
                                "abstract line does not follow its title line",
                            ))
                        }
                    },
                    other => return Err(Error::parse(line_no, Some(pmid), format!("unknown text section {other:?}"))),
                }
            }
            Some(LineKind::Annotation) => {
                let fields: Vec<&str> = line.split('\t').collect();
                let pmid = parse_pmid(fields[0], line_no)?;
                if fields.len() != 5 && fields.len() != 6 {
                    return Err(Error::parse(
                        line_no,
                        Some(pmid),
                        format!("expected 5 or 6 tab-separated fields, found {}", fields.len()),
                    ));
                }
                let doc = match pending.as_mut() {
                    Some(p) if p.pmid == pmid => p.seal(),
                    _ => {
                        return Err(Error::parse(
                            line_no,
                            Some(pmid),
                            "annotation does not belong to the current document",
                        ))
                    }
                };
                let offset = |s: &str, what: &str| {
                    s.parse::<usize>().map_err(|_| {
                        Error::parse(line_no, Some(pmid), format!("{what} offset {s:?} is not an integer"))
                    })
                };
                let start = offset(fields[1], "start")?;
                let end = offset(fields[2], "end")?;
                let surface = fields[3];
                let concept_type = match fields[4].parse::<ConceptType>() {
                    Ok(t) => t,
                    Err(_) => {
                        warn!("line {line_no}: skipping annotation with unknown type {:?}", fields[4]);
                        out.skipped_unknown_type += 1;
                        continue;
                    }
                };
                if start >= end || end > doc.char_len() {
                    return Err(Error::parse(
                        line_no,
                        Some(pmid),
                        format!("offsets {start}..{end} out of range for text of length {}", doc.char_len()),
                    ));
                }
                let slice = doc.slice(start, end).unwrap_or_default();
                if slice != surface {
                    return Err(Error::parse(
                        line_no,
                        Some(pmid),
                        format!("surface {surface:?} does not match text {slice:?}"),
                    ));
                }
                out.spans.push(TaggedSpan {
                    pmid,
                    start,
                    end,
                    surface: surface.to_string(),
                    concept_type,
                    concept_id: fields.get(5).map(|s| s.trim()).unwrap_or_default().to_string(),
                });
            }
            None => return Err(Error::parse(line_no, pending.as_ref().map(|p| p.pmid), "malformed line")),
        }
    }
    finish(&mut pending, &mut out);
    Ok(out)
}

/// Writes documents in order, each followed by its spans (in input order)
/// and one blank line. An empty concept id drops the ID column.
pub fn write_pubtator<W: Write>(documents: &[Document], spans: &[TaggedSpan], mut writer: W) -> Result<()> {
    let mut by_pmid: HashMap<Pmid, Vec<&TaggedSpan>> = HashMap::new();
    for span in spans {
        by_pmid.entry(span.pmid).or_default().push(span);
    }
    for doc in documents {
        let pmid = doc.pmid();
        writeln!(writer, "{pmid}|t|{}", doc.title())?;
        writeln!(writer, "{pmid}|a|{}", doc.abstract_text())?;
        for span in by_pmid.get(&pmid).into_iter().flatten() {
            write!(writer, "{pmid}\t{}\t{}\t{}\t{}", span.start, span.end, span.surface, span.concept_type)?;
            if !span.concept_id.is_empty() {
                write!(writer, "\t{}", span.concept_id)?;
            }
            writeln!(writer)?;
        }
        writeln!(writer)?;
    }
    Ok(())
}
