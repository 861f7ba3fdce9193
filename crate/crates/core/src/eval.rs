//! Classification metrics at segment and document level.
//!
//! All ratio metrics use the 0/0 -> 0 convention, so a class with no
//! predicted or true members contributes zero rather than poisoning the
//! macro average with NaN.

use thiserror::Error;

use crate::corpus::{Document, Label};
use crate::textproc::Scheme;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{truths} truth labels but {predictions} predictions")]
    LengthMismatch { truths: usize, predictions: usize },
    #[error("document `{doc_id}`: scheme yields {expected} segments, got {got} predictions")]
    SegmentCountMismatch {
        doc_id: String,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct ConfusionMatrix {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl ConfusionMatrix {
    /// Tallies `(truth, prediction)` pairs; the stereotype class is
    /// positive.
    pub fn from_pairs<I>(pairs: I) -> ConfusionMatrix
    where
        I: IntoIterator<Item = (Label, Label)>,
    {
        let mut cm = ConfusionMatrix::default();
        for (truth, pred) in pairs {
            match (truth.is_stereotypical(), pred.is_stereotypical()) {
                (true, true) => cm.true_positive += 1,
                (false, true) => cm.false_positive += 1,
                (false, false) => cm.true_negative += 1,
                (true, false) => cm.false_negative += 1,
            }
        }
        cm
    }

    pub fn total(&self) -> usize {
        self.true_positive + self.false_positive + self.true_negative + self.false_negative
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.true_positive + self.true_negative, self.total())
    }

    /// Precision/recall/F1 for one side of the matrix.
    pub fn class_metrics(&self, class: Label) -> ClassMetrics {
        let (tp, fp, fn_) = match class {
            Label::Stereotypical => (self.true_positive, self.false_positive, self.false_negative),
            Label::NonStereotypical => {
                (self.true_negative, self.false_negative, self.false_positive)
            }
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        ClassMetrics {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Confusion matrix plus accuracy and macro-averaged metrics over both
/// classes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub positive: ClassMetrics,
    pub negative: ClassMetrics,
}

impl MetricsReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> MetricsReport {
        let positive = confusion.class_metrics(Label::Stereotypical);
        let negative = confusion.class_metrics(Label::NonStereotypical);
        MetricsReport {
            confusion,
            accuracy: confusion.accuracy(),
            macro_precision: (positive.precision + negative.precision) / 2.0,
            macro_recall: (positive.recall + negative.recall) / 2.0,
            macro_f1: (positive.f1 + negative.f1) / 2.0,
            positive,
            negative,
        }
    }
}

/// Scores predictions against truths; order must correspond.
pub fn evaluate(truths: &[Label], predictions: &[Label]) -> Result<MetricsReport, EvalError> {
    if truths.len() != predictions.len() {
        return Err(EvalError::LengthMismatch {
            truths: truths.len(),
            predictions: predictions.len(),
        });
    }
    Ok(MetricsReport::from_confusion(ConfusionMatrix::from_pairs(
        truths.iter().copied().zip(predictions.iter().copied()),
    )))
}

/// Lifts segment predictions to a document verdict: the document is flagged
/// iff any of its segments is. `segment_predictions` must hold exactly one
/// label per segment the scheme produces for this document.
pub fn aggregate_document_prediction(
    doc: &Document,
    scheme: Scheme,
    segment_predictions: &[Label],
) -> Result<Label, EvalError> {
    let expected = scheme.segment_count(doc.lines.len());
    if segment_predictions.len() != expected {
        return Err(EvalError::SegmentCountMismatch {
            doc_id: doc.id.clone(),
            expected,
            got: segment_predictions.len(),
        });
    }
    Ok(segment_predictions
        .iter()
        .copied()
        .fold(Label::NonStereotypical, Label::or))
}
