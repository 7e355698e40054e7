use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    /// Samples whose true label is this class.
    pub support: usize,
    /// False when the class was never predicted; precision is then 0.
    pub precision_defined: bool,
    /// False when the class never occurs; recall is then 0.
    pub recall_defined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

pub fn classification_report(predictions: &[usize], labels: &[usize], classes: usize) -> Result<ClassificationReport> {
    if predictions.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Config("classification report over zero samples".into()));
    }
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&p, &y) in predictions.iter().zip(labels) {
        if p >= classes || y >= classes {
            return Err(Error::Config(format!("class index {} out of range", p.max(y))));
        }
        confusion[y][p] += 1;
    }
    let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
    let per_class = (0..classes)
        .map(|c| {
            let tp = confusion[c][c];
            let predicted: usize = (0..classes).map(|t| confusion[t][c]).sum();
            let support: usize = confusion[c].iter().sum();
            ClassMetrics {
                class: c,
                precision: if predicted > 0 { tp as f64 / predicted as f64 } else { 0.0 },
                recall: if support > 0 { tp as f64 / support as f64 } else { 0.0 },
                support,
                precision_defined: predicted > 0,
                recall_defined: support > 0,
            }
        })
        .collect();
    Ok(ClassificationReport {
        per_class,
        accuracy: correct as f64 / labels.len() as f64,
        confusion,
    })
}
