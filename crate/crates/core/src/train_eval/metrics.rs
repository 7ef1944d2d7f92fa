use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `counts[actual][predicted]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

/// One-vs-rest counts for a single class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_predictions(classes: usize, actual: &[usize], predicted: &[usize]) -> Result<Self> {
        if actual.len() != predicted.len() {
            return Err(Error::Shape("label and prediction counts differ".into()));
        }
        let mut m = Self::new(classes);
        for (&a, &p) in actual.iter().zip(predicted) {
            if a >= classes || p >= classes {
                return Err(Error::Validation(format!("class {} outside {classes} classes", a.max(p))));
            }
            m.counts[a][p] += 1;
        }
        Ok(m)
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn class_counts(&self, c: usize) -> ClassCounts {
        let tp = self.counts[c][c];
        let actual: u64 = self.counts[c].iter().sum();
        let predicted: u64 = self.counts.iter().map(|row| row[c]).sum();
        let fn_ = actual - tp;
        let fp = predicted - tp;
        ClassCounts {
            tp,
            fp,
            tn: self.total() - tp - fp - fn_,
            fn_,
        }
    }
}

/// Metric values, with the names of any that hit a zero division (reported as 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub classes: usize,
    pub support: u64,
    pub accuracy: f64,
    /// Positive-class precision for two classes, macro average otherwise.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Unweighted mean of one-vs-rest F1; only reported for more than two classes.
    pub macro_f1: Option<f64>,
    pub per_class_f1: Vec<f64>,
    pub undefined: Vec<String>,
}

fn ratio(num: u64, den: u64, name: String, undefined: &mut Vec<String>) -> f64 {
    if den == 0 {
        undefined.push(name);
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_of(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl MetricsReport {
    /// For two classes, class 1 is the positive class.
    pub fn from_confusion(m: &ConfusionMatrix) -> Result<Self> {
        let total = m.total();
        if total == 0 {
            return Err(Error::Validation("cannot compute metrics on an empty set".into()));
        }
        let classes = m.classes();
        let mut undefined = Vec::new();
        let correct: u64 = (0..classes).map(|c| m.counts[c][c]).sum();
        let accuracy = correct as f64 / total as f64;

        let mut precisions = Vec::with_capacity(classes);
        let mut recalls = Vec::with_capacity(classes);
        let mut f1s = Vec::with_capacity(classes);
        for c in 0..classes {
            let k = m.class_counts(c);
            let p = ratio(k.tp, k.tp + k.fp, format!("precision[{c}]"), &mut undefined);
            let r = ratio(k.tp, k.tp + k.fn_, format!("recall[{c}]"), &mut undefined);
            precisions.push(p);
            recalls.push(r);
            f1s.push(f1_of(p, r));
        }

        let (precision, recall, f1, macro_f1) = if classes == 2 {
            (precisions[1], recalls[1], f1s[1], None)
        } else {
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let macro_f1 = mean(&f1s);
            (mean(&precisions), mean(&recalls), macro_f1, Some(macro_f1))
        };
        if classes == 2 {
            undefined.retain(|n| n.ends_with("[1]"));
        }
        Ok(MetricsReport {
            classes,
            support: total,
            accuracy,
            precision,
            recall,
            f1,
            macro_f1,
            per_class_f1: f1s,
            undefined,
        })
    }

    /// The checkpoint-selection score: F1, or macro-F1 with more than two classes.
    pub fn selection_score(&self) -> f64 {
        self.macro_f1.unwrap_or(self.f1)
    }

    /// Flat `key = value` lines.
    pub fn to_text(&self, confusion: &ConfusionMatrix) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "classes = {}", self.classes);
        let _ = writeln!(s, "support = {}", self.support);
        let _ = writeln!(s, "accuracy = {:.6}", self.accuracy);
        let averaging = if self.classes == 2 { "positive_class" } else { "macro" };
        let _ = writeln!(s, "averaging = {averaging}");
        let _ = writeln!(s, "precision = {:.6}", self.precision);
        let _ = writeln!(s, "recall = {:.6}", self.recall);
        let _ = writeln!(s, "f1 = {:.6}", self.f1);
        if let Some(m) = self.macro_f1 {
            let _ = writeln!(s, "macro_f1 = {m:.6}");
        }
        for (c, f) in self.per_class_f1.iter().enumerate() {
            let _ = writeln!(s, "f1.class_{c} = {f:.6}");
        }
        for c in 0..confusion.classes() {
            let k = confusion.class_counts(c);
            let _ = writeln!(s, "class_{c}.tp = {}", k.tp);
            let _ = writeln!(s, "class_{c}.fp = {}", k.fp);
            let _ = writeln!(s, "class_{c}.tn = {}", k.tn);
            let _ = writeln!(s, "class_{c}.fn = {}", k.fn_);
        }
        for (a, row) in confusion.counts.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(s, "confusion.actual_{a} = {}", cells.join(","));
        }
        let _ = writeln!(s, "undefined = {}", self.undefined.join(","));
        s
    }
}
