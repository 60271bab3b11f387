//! Confusion matrices, per-class and averaged precision/recall/F1, reports
//! and misclassification export.

mod metrics;
mod report;

pub use metrics::{
    confusion, f1_score, macro_average, micro_average, micro_macro, per_class_prf, Averages, ClassMetrics,
    ConfusionMatrix,
};
pub use report::{
    evaluate, export_errors, read_predictions, write_predictions, ErrorRecord, EvalSummary, PredictionRecord,
};
