//! Binary classification metrics with the ironic class (label 1) positive.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    /// Set when a 0/0 metric case was defined as 0.
    pub degenerate: bool,
}

/// 2pr/(p+r), with the 0/0 case defined as 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub fn compute_metrics(predicted: &[u8], gold: &[u8]) -> Result<MetricsReport> {
    if predicted.is_empty() {
        return Err(Error::Invalid("no instances to score".into()));
    }
    if predicted.len() != gold.len() {
        return Err(Error::Invalid(format!(
            "{} predictions for {} gold labels",
            predicted.len(),
            gold.len()
        )));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &g) in predicted.iter().zip(gold) {
        match (p, g) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fn_ += 1,
            (0, 0) => tn += 1,
            _ => return Err(Error::Invalid(format!("label not in {{0,1}}: ({p}, {g})"))),
        }
    }
    let n = predicted.len() as f64;
    let accuracy = (tp + tn) as f64 / n;
    let mut degenerate = false;
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        degenerate = true;
        0.0
    };
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        degenerate = true;
        0.0
    };
    if precision + recall == 0.0 {
        degenerate = true;
    }
    Ok(MetricsReport {
        accuracy,
        precision,
        recall,
        f1: f1_score(precision, recall),
        tp,
        fp,
        fn_,
        tn,
        degenerate,
    })
}

impl MetricsReport {
    /// Aligned text rendering, 4 decimal places.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("accuracy   {:.4}\n", self.accuracy));
        s.push_str(&format!("precision  {:.4}\n", self.precision));
        s.push_str(&format!("recall     {:.4}\n", self.recall));
        s.push_str(&format!("f1         {:.4}\n", self.f1));
        s.push_str(&format!(
            "counts     tp={} fp={} fn={} tn={}\n",
            self.tp, self.fp, self.fn_, self.tn
        ));
        if self.degenerate {
            s.push_str("warning    0/0 metric case reported as 0\n");
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
