//! Critic detection scores over roll-out datapoints.

use serde::{Deserialize, Serialize};

use super::scores::Rate;
use super::MetricsError;
use crate::category::ErrorCategory;

/// Row/column of the confusion matrix used for "no error".
pub const NO_ERROR_INDEX: usize = 8;

/// Names of the confusion matrix axes, in index order.
pub fn confusion_labels() -> [&'static str; 9] {
    let mut out = ["no-error"; 9];
    for c in ErrorCategory::ALL {
        out[c.index()] = c.name();
    }
    out
}

fn slot(c: Option<ErrorCategory>) -> usize {
    c.map_or(NO_ERROR_INDEX, ErrorCategory::index)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionScore {
    pub precision: Rate,
    pub recall: Rate,
    /// Rows are ground truth, columns are predictions.
    pub confusion: [[u64; 9]; 9],
}

impl DetectionScore {
    /// Builds the score from aligned `(predicted, truth)` categories, where
    /// `None` means no error. 0/0 rates are reported as 1.
    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (Option<ErrorCategory>, Option<ErrorCategory>)>,
    {
        let mut confusion = [[0u64; 9]; 9];
        for (pred, truth) in pairs {
            confusion[slot(truth)][slot(pred)] += 1;
        }
        let (precision, recall) = rates_from_confusion(&confusion);
        Self { precision, recall, confusion }
    }

    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn row_sum(&self, truth: Option<ErrorCategory>) -> u64 {
        self.confusion[slot(truth)].iter().sum()
    }

    /// Comma-separated matrix with a header row and a label column.
    pub fn confusion_csv(&self) -> String {
        let labels = confusion_labels();
        let mut out = String::from("truth\\predicted");
        for l in labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (i, row) in self.confusion.iter().enumerate() {
            out.push_str(labels[i]);
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Detection-level precision and recall (category-agnostic) read off a
/// confusion matrix.
pub fn rates_from_confusion(m: &[[u64; 9]; 9]) -> (Rate, Rate) {
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for (t, row) in m.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            match (t == NO_ERROR_INDEX, p == NO_ERROR_INDEX) {
                (false, false) => tp += n,
                (true, false) => fp += n,
                (false, true) => fn_ += n,
                (true, true) => {}
            }
        }
    }
    let rate = |num: u64, den: u64| if den == 0 { Rate::from_integer(1) } else { Rate::new(num, den) };
    (rate(tp, tp + fp), rate(tp, tp + fn_))
}

/// Scores aligned predicted and true categories.
pub fn detection_metrics(predicted: &[Option<ErrorCategory>], truth: &[Option<ErrorCategory>]) -> Result<DetectionScore, MetricsError> {
    if predicted.len() != truth.len() {
        return Err(MetricsError::LengthMismatch { predicted: predicted.len(), truth: truth.len() });
    }
    Ok(DetectionScore::from_pairs(predicted.iter().copied().zip(truth.iter().copied())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_all_negative() {
        let s = detection_metrics(&[None, None], &[None, None]).unwrap();
        assert_eq!(s.precision, Rate::from_integer(1));
        assert_eq!(s.recall, Rate::from_integer(1));
    }

    #[test]
    fn one_fp_one_tp() {
        let mut pred = vec![None; 11];
        let mut truth = vec![None; 11];
        pred[0] = Some(ErrorCategory::ToolPrediction);
        pred[10] = Some(ErrorCategory::PrematureInvocation);
        truth[10] = Some(ErrorCategory::PrematureInvocation);
        let s = detection_metrics(&pred, &truth).unwrap();
        assert_eq!(s.precision, Rate::new(1, 2));
        assert_eq!(s.recall, Rate::from_integer(1));
        assert_eq!(s.row_sum(None), 10);
        assert_eq!(s.confusion[0][0], 1);
    }

    #[test]
    fn wrong_category_still_detects() {
        let s = detection_metrics(&[Some(ErrorCategory::ToolPrediction)], &[Some(ErrorCategory::RequiredArguments)]).unwrap();
        assert_eq!(s.recall, Rate::from_integer(1));
        assert_eq!(s.confusion[2][1], 1);
    }

    #[test]
    fn length_mismatch() {
        assert!(detection_metrics(&[None], &[]).is_err());
    }

    #[test]
    fn csv_shape() {
        let s = detection_metrics(&[None], &[None]).unwrap();
        let csv = s.confusion_csv();
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.lines().last().unwrap().starts_with("no-error,0,0,0,0,0,0,0,0,1"));
    }
}
