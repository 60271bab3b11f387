use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::metrics::{confusion, micro_macro, per_class_prf, Averages, ClassMetrics, ConfusionMatrix};
use crate::corpus::{ConceptType, Pmid, TypeSet};
use crate::error::{Error, Result};
use crate::features::TokenSeq;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub matrix: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
    pub micro: Averages,
    #[serde(rename = "macro")]
    pub macro_avg: Averages,
    /// Whether predictions were restricted to each mention's candidate types.
    pub candidate_restriction: bool,
}

/// Full evaluation of paired gold and predicted types.
pub fn evaluate(gold: &[ConceptType], predicted: &[ConceptType], candidate_restriction: bool) -> Result<EvalSummary> {
    let matrix = confusion(gold, predicted)?;
    let per_class = per_class_prf(&matrix);
    let (micro, macro_avg) = micro_macro(&per_class, &matrix);
    let accuracy = matrix.trace() as f64 / matrix.total() as f64;
    assert!(
        micro.precision == accuracy && micro.recall == accuracy && micro.f1 == accuracy,
        "single-label identity violated"
    );
    Ok(EvalSummary { matrix, per_class, micro, macro_avg, candidate_restriction })
}

fn pct(v: f64) -> String {
    format!("{:.2}%", 100.0 * v)
}

impl EvalSummary {
    /// Aligned text table: one row per type, then micro and macro rows,
    /// then the confusion matrix.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "candidate restriction: {}", if self.candidate_restriction { "on" } else { "off" });
        let _ = writeln!(s, "{:<16}{:>10}{:>10}{:>10}{:>9}", "Type", "P", "R", "F1", "Support");
        for m in &self.per_class {
            let flag = if m.precision_undefined || m.recall_undefined || m.f1_undefined { " *" } else { "" };
            let _ = writeln!(
                s,
                "{:<16}{:>10}{:>10}{:>10}{:>9}{flag}",
                m.concept_type.to_string(),
                pct(m.precision),
                pct(m.recall),
                pct(m.f1),
                m.support
            );
        }
        for (name, a) in [("Micro average", &self.micro), ("Macro average", &self.macro_avg)] {
            let _ = writeln!(s, "{:<16}{:>10}{:>10}{:>10}", name, pct(a.precision), pct(a.recall), pct(a.f1));
        }
        if self.per_class.iter().any(|m| m.precision_undefined || m.recall_undefined || m.f1_undefined) {
            let _ = writeln!(s, "* a zero denominator; the metric is reported as 0");
        }
        let _ = writeln!(s);
        let _ = write!(s, "{:<16}", "gold \\ pred");
        for t in ConceptType::ALL {
            let _ = write!(s, "{:>10}", t.to_string());
        }
        let _ = writeln!(s);
        for g in ConceptType::ALL {
            let _ = write!(s, "{:<16}", g.to_string());
            for p in ConceptType::ALL {
                let _ = write!(s, "{:>10}", self.matrix.get(g, p));
            }
            let _ = writeln!(s);
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// One line of a predictions file. `probs` follows canonical type order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub pmid: Pmid,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub gold_type: ConceptType,
    pub predicted_type: ConceptType,
    pub probs: Vec<f64>,
}

pub fn write_predictions<W: Write>(records: &[PredictionRecord], mut writer: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(idx + 1, None, e.to_string()))?);
    }
    Ok(out)
}

/// A misclassified mention with the context the classifier saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub pmid: Pmid,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub gold_type: ConceptType,
    pub predicted_type: ConceptType,
    pub candidate_types: TypeSet,
    pub probs: Vec<f64>,
    pub before: TokenSeq,
    pub after: TokenSeq,
}

/// Writes only the records whose prediction is wrong; returns how many.
pub fn export_errors<W: Write>(records: &[ErrorRecord], mut writer: W) -> Result<usize> {
    let mut n = 0;
    for r in records.iter().filter(|r| r.gold_type != r.predicted_type) {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
        n += 1;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ConceptType::*;

    fn err(gold: ConceptType, pred: ConceptType) -> ErrorRecord {
        ErrorRecord {
            pmid: Pmid::new(1).unwrap(),
            start: 0,
            end: 3,
            surface: "abc".into(),
            gold_type: gold,
            predicted_type: pred,
            candidate_types: [gold, pred].into_iter().collect(),
            probs: vec![0.0; 6],
            before: TokenSeq(vec!["x".into(), "abc".into()]),
            after: TokenSeq(vec!["abc".into()]),
        }
    }

    #[test]
    fn export_counts() {
        let mut buf = Vec::new();
        assert_eq!(export_errors(&[err(Gene, Gene)], &mut buf).unwrap(), 0);
        assert!(buf.is_empty());
        assert_eq!(export_errors(&[err(Gene, Gene), err(Gene, Disease)], &mut buf).unwrap(), 1);
        let line = String::from_utf8(buf).unwrap();
        assert!(line.contains("\"Gene\"") && line.contains("\"Disease\""));
    }

    #[test]
    fn table_mentions_mode_and_rows() {
        let s = evaluate(&[Gene, Disease], &[Gene, Gene], true).unwrap();
        let table = s.render_table();
        assert!(table.contains("candidate restriction: on"));
        assert!(table.contains("Macro average"));
        assert!(table.contains("Gene"));
        let json: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        assert_eq!(json["micro"]["f1"], 0.5);
        assert_eq!(json["candidate_restriction"], true);
    }

    #[test]
    fn predictions_round_trip() {
        let r = PredictionRecord {
            pmid: Pmid::new(9).unwrap(),
            start: 1,
            end: 4,
            surface: "x y".into(),
            gold_type: Species,
            predicted_type: Gene,
            probs: vec![0.1, 0.2, 0.3, 0.15, 0.05, 0.2],
        };
        let mut buf = Vec::new();
        write_predictions(std::slice::from_ref(&r), &mut buf).unwrap();
        assert_eq!(read_predictions(&buf[..]).unwrap(), vec![r]);
    }
}
