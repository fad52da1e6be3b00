use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-class precision and recall plus overall accuracy, as fractions in [0, 1].
/// A class whose denominator is zero has no value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: Vec<Option<f64>>,
    pub recall: Vec<Option<f64>>,
    pub accuracy: f64,
}

/// Counts with rows indexed by ground truth and columns by prediction.
pub fn confusion_matrix(truth: &[usize], predicted: &[usize], num_classes: usize) -> Result<Vec<Vec<u64>>> {
    if truth.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "{} truths for {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let mut m = vec![vec![0u64; num_classes]; num_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= num_classes || p >= num_classes {
            return Err(Error::Shape(format!("class {} out of range", t.max(p))));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

pub fn compute_metrics(confusion: &[Vec<u64>]) -> Result<Metrics> {
    let k = confusion.len();
    if confusion.iter().any(|r| r.len() != k) {
        return Err(Error::Shape("confusion matrix must be square".into()));
    }
    let total: u64 = confusion.iter().flatten().sum();
    if total == 0 {
        return Err(Error::ZeroConfusion);
    }
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let diag: Vec<u64> = (0..k).map(|i| confusion[i][i]).collect();
    let precision = (0..k)
        .map(|c| ratio(diag[c], confusion.iter().map(|r| r[c]).sum()))
        .collect();
    let recall = (0..k)
        .map(|r| ratio(diag[r], confusion[r].iter().sum()))
        .collect();
    Ok(Metrics {
        precision,
        recall,
        accuracy: diag.iter().sum::<u64>() as f64 / total as f64,
    })
}

/// Plain-text confusion table with ground truth down the side, followed by the metrics.
pub fn format_report(confusion: &[Vec<u64>], class_names: &[&str], metrics: &Metrics) -> String {
    let width = class_names
        .iter()
        .map(|s| s.len())
        .chain(confusion.iter().flatten().map(|v| v.to_string().len()))
        .max()
        .unwrap_or(1)
        .max(9)
        + 2;
    let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{:.2}%", 100.0 * v));
    let mut s = String::new();
    let _ = write!(s, "{:>width$}", "GT \\ Pred");
    for name in class_names {
        let _ = write!(s, "{name:>width$}");
    }
    let _ = writeln!(s, "{:>width$}", "Recall");
    for (i, row) in confusion.iter().enumerate() {
        let _ = write!(s, "{:>width$}", class_names.get(i).copied().unwrap_or("?"));
        for v in row {
            let _ = write!(s, "{v:>width$}");
        }
        let _ = writeln!(s, "{:>width$}", pct(metrics.recall[i]));
    }
    let _ = write!(s, "{:>width$}", "Precision");
    for p in &metrics.precision {
        let _ = write!(s, "{:>width$}", pct(*p));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Accuracy: {:.2}%", 100.0 * metrics.accuracy);
    s
}
