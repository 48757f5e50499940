//! Confusion matrix, per-class precision/recall/F1 and accuracy.
//!
//! Rows of the confusion matrix are true classes, columns predicted classes.
//! Ratios with an empty denominator are reported as 0 and flagged.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    /// `cells[true][predicted]`
    pub cells: Vec<Vec<u64>>,
}

pub fn confusion_matrix(truth: &[usize], predicted: &[usize], k: usize) -> Result<ConfusionMatrix> {
    let names = (0..k).map(|i| i.to_string()).collect();
    ConfusionMatrix::from_labels(truth, predicted, names)
}

impl ConfusionMatrix {
    pub fn from_labels(truth: &[usize], predicted: &[usize], class_names: Vec<String>) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Input(format!(
                "{} true labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let k = class_names.len();
        let mut cells = vec![vec![0u64; k]; k];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= k || p >= k {
                return Err(Error::Input(format!(
                    "label pair ({t}, {p}) out of range for {k} classes"
                )));
            }
            cells[t][p] += 1;
        }
        Ok(ConfusionMatrix { class_names, cells })
    }

    pub fn k(&self) -> usize {
        self.cells.len()
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn row_sum(&self, k: usize) -> u64 {
        self.cells[k].iter().sum()
    }

    pub fn column_sum(&self, k: usize) -> u64 {
        self.cells.iter().map(|r| r[k]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.cells[i][i]).sum()
    }

    /// Header row of predicted class names, then one row per true class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for name in &self.class_names {
            out.push(',');
            out.push_str(&csv_field(name));
        }
        out.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.cells) {
            out.push_str(&csv_field(name));
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Nothing was predicted as this class.
    pub precision_undefined: bool,
    /// The class has no true samples.
    pub recall_undefined: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn class_metrics(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    (0..cm.k())
        .map(|k| {
            let tp = cm.cells[k][k];
            let (precision, precision_undefined) = ratio(tp, cm.column_sum(k));
            let (recall, recall_undefined) = ratio(tp, cm.row_sum(k));
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support: cm.row_sum(k),
                precision_undefined,
                recall_undefined,
            }
        })
        .collect()
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Domain("accuracy of an empty confusion matrix".into()));
    }
    Ok(cm.trace() as f64 / total as f64)
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Machine-readable evaluation summary; every ratio rounded to 4 decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub class_names: Vec<String>,
    pub confusion_matrix: Vec<Vec<u64>>,
    pub classes: Vec<ClassReport>,
    pub accuracy: f64,
    pub samples: u64,
}

impl EvaluationReport {
    pub fn new(cm: &ConfusionMatrix, metrics: &[ClassMetrics]) -> Result<Self> {
        if metrics.len() != cm.k() {
            return Err(Error::Input(format!(
                "{} class metrics for a {}-class matrix",
                metrics.len(),
                cm.k()
            )));
        }
        let classes = cm
            .class_names
            .iter()
            .zip(metrics)
            .map(|(name, m)| {
                let mut notes = Vec::new();
                if m.precision_undefined {
                    notes.push("no predictions for this class; precision set to 0".to_string());
                }
                if m.recall_undefined {
                    notes.push("no samples of this class; recall set to 0".to_string());
                }
                ClassReport {
                    class: name.clone(),
                    precision: round4(m.precision),
                    recall: round4(m.recall),
                    f1: round4(m.f1),
                    support: m.support,
                    notes,
                }
            })
            .collect();
        Ok(EvaluationReport {
            class_names: cm.class_names.clone(),
            confusion_matrix: cm.cells.clone(),
            classes,
            accuracy: round4(accuracy(cm)?),
            samples: cm.total(),
        })
    }

    /// Aligned confusion matrix followed by a precision/recall/F1 table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let name_w = self
            .class_names
            .iter()
            .map(|n| n.chars().count())
            .chain(["true \\ predicted".len(), "Class".len()])
            .max()
            .unwrap_or(5);
        let col_w = |name: &str| name.chars().count().max(6);

        out.push_str("Confusion matrix (rows: true class, columns: predicted class)\n");
        let _ = write!(out, "{:<name_w$}", "true \\ predicted");
        for n in &self.class_names {
            let _ = write!(out, "  {:>w$}", n, w = col_w(n));
        }
        out.push('\n');
        for (n, row) in self.class_names.iter().zip(&self.confusion_matrix) {
            let _ = write!(out, "{n:<name_w$}");
            for (c, col) in row.iter().zip(&self.class_names) {
                let _ = write!(out, "  {:>w$}", c, w = col_w(col));
            }
            out.push('\n');
        }
        out.push('\n');
        let _ = writeln!(
            out,
            "{:<name_w$}  {:>9}  {:>9}  {:>9}  {:>7}",
            "Class", "Precision", "Recall", "F1 score", "Support"
        );
        for c in &self.classes {
            let _ = writeln!(
                out,
                "{:<name_w$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
                c.class, c.precision, c.recall, c.f1, c.support
            );
        }
        let _ = writeln!(out, "\nAccuracy: {:.4} ({} samples)", self.accuracy, self.samples);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Text and structured renderings of one evaluation.
pub struct RenderedReport {
    pub text: String,
    pub report: EvaluationReport,
}

pub fn render_report(cm: &ConfusionMatrix, metrics: &[ClassMetrics]) -> Result<RenderedReport> {
    let report = EvaluationReport::new(cm, metrics)?;
    Ok(RenderedReport {
        text: report.to_text(),
        report,
    })
}
