use serde::{Deserialize, Serialize};

use crate::corpus::ConceptType;
use crate::error::{Error, Result};

const C: usize = ConceptType::COUNT;

/// Counts by (gold, predicted); rows are gold.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: [[u64; C]; C],
}

impl ConfusionMatrix {
    pub fn add(&mut self, gold: ConceptType, predicted: ConceptType) {
        self.counts[gold.index()][predicted.index()] += 1;
    }

    pub fn get(&self, gold: ConceptType, predicted: ConceptType) -> u64 {
        self.counts[gold.index()][predicted.index()]
    }

    pub fn counts(&self) -> &[[u64; C]; C] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..C).map(|i| self.counts[i][i]).sum()
    }

    /// Gold support of class `i`.
    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    /// Number of predictions of class `i`.
    pub fn col_sum(&self, i: usize) -> u64 {
        self.counts.iter().map(|r| r[i]).sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            *a += *b;
        }
    }
}

pub fn confusion(gold: &[ConceptType], predicted: &[ConceptType]) -> Result<ConfusionMatrix> {
    if gold.len() != predicted.len() {
        return Err(Error::InvalidInput(format!("{} gold labels but {} predictions", gold.len(), predicted.len())));
    }
    if gold.is_empty() {
        return Err(Error::InvalidInput("nothing to evaluate".into()));
    }
    let mut m = ConfusionMatrix::default();
    for (g, p) in gold.iter().zip(predicted) {
        m.add(*g, *p);
    }
    Ok(m)
}

/// Precision, recall and F1 of one class. A metric whose denominator is 0
/// is reported as 0 and flagged as undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub concept_type: ConceptType,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub predicted: u64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Harmonic mean `2PR / (P + R)`, 0 and flagged when `P + R = 0`.
pub fn f1_score(precision: f64, recall: f64) -> (f64, bool) {
    if precision + recall == 0.0 {
        (0.0, true)
    } else if precision == recall {
        (precision, false)
    } else {
        (2.0 * precision * recall / (precision + recall), false)
    }
}

impl ClassMetrics {
    /// Metrics from already-known precision and recall (no counts).
    pub fn from_precision_recall(concept_type: ConceptType, precision: f64, recall: f64) -> Self {
        let (f1, f1_undefined) = f1_score(precision, recall);
        ClassMetrics {
            concept_type,
            precision,
            recall,
            f1,
            support: 0,
            predicted: 0,
            precision_undefined: false,
            recall_undefined: false,
            f1_undefined,
        }
    }
}

pub fn per_class_prf(matrix: &ConfusionMatrix) -> Vec<ClassMetrics> {
    ConceptType::ALL
        .iter()
        .map(|&t| {
            let i = t.index();
            let tp = matrix.counts[i][i];
            let (support, predicted) = (matrix.row_sum(i), matrix.col_sum(i));
            let (precision, precision_undefined) = ratio(tp, predicted);
            let (recall, recall_undefined) = ratio(tp, support);
            let (f1, f1_undefined) = f1_score(precision, recall);
            ClassMetrics {
                concept_type: t,
                precision,
                recall,
                f1,
                support,
                predicted,
                precision_undefined,
                recall_undefined,
                f1_undefined,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Unweighted means of the per-class values. Macro F1 is the mean of the
/// class F1s, not the harmonic mean of macro P and macro R.
pub fn macro_average(per_class: &[ClassMetrics]) -> Averages {
    let n = per_class.len().max(1) as f64;
    Averages {
        precision: per_class.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: per_class.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: per_class.iter().map(|m| m.f1).sum::<f64>() / n,
    }
}

/// Micro averages collapse to accuracy when every example gets exactly one
/// prediction, so all three equal `trace / total`.
pub fn micro_average(matrix: &ConfusionMatrix) -> Averages {
    let (acc, _) = ratio(matrix.trace(), matrix.total());
    Averages { precision: acc, recall: acc, f1: acc }
}

pub fn micro_macro(per_class: &[ClassMetrics], matrix: &ConfusionMatrix) -> (Averages, Averages) {
    (micro_average(matrix), macro_average(per_class))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ConceptType::*;

    #[test]
    fn perfect_is_diagonal() {
        let g = [Gene, Disease, Chemical, Gene];
        let m = confusion(&g, &g).unwrap();
        assert_eq!(m.trace(), 4);
        assert_eq!(m.total(), 4);
    }

    #[test]
    fn single_off_diagonal() {
        let m = confusion(&[Gene], &[Disease]).unwrap();
        assert_eq!(m.get(Gene, Disease), 1);
        assert_eq!(m.trace(), 0);
    }

    #[test]
    fn bad_inputs() {
        assert!(confusion(&[], &[]).is_err());
        assert!(confusion(&[Gene], &[]).is_err());
    }

    #[test]
    fn empty_class_is_flagged_zero() {
        let m = confusion(&[Gene, Disease], &[Gene, Gene]).unwrap();
        let pc = per_class_prf(&m);
        let cl = &pc[CellLine.index()];
        assert_eq!((cl.precision, cl.recall, cl.f1), (0.0, 0.0, 0.0));
        assert!(cl.precision_undefined && cl.recall_undefined && cl.f1_undefined);
        let d = &pc[Disease.index()];
        assert!(d.precision_undefined && !d.recall_undefined);
    }

    #[test]
    fn equal_precision_recall() {
        let m = ClassMetrics::from_precision_recall(Gene, 0.42, 0.42);
        assert_eq!(m.f1, 0.42);
    }

    #[test]
    fn one_class_predictions_give_its_frequency() {
        let gold: Vec<ConceptType> = (0..100).map(|i| ConceptType::ALL[i % 4]).collect();
        let pred = vec![Gene; 100];
        let m = confusion(&gold, &pred).unwrap();
        let (micro, _) = micro_macro(&per_class_prf(&m), &m);
        let freq = gold.iter().filter(|g| **g == Gene).count() as f64 / 100.0;
        assert_eq!(micro.precision, freq);
    }
}
