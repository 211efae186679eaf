use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts and derived rates.
///
/// Undefined ratios (zero denominator) are reported as 0 with the
/// matching `*_defined` flag cleared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub false_positive_rate: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub flagged: usize,
}

impl Metrics {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, false)
    } else {
        (num as f64 / den as f64, true)
    }
}

pub fn evaluate(flags: &[bool], truth: &[bool]) -> Result<Metrics> {
    if flags.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: flags.len(),
            right: truth.len(),
        });
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&f, &t) in flags.iter().zip(truth) {
        match (f, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let (precision, precision_defined) = ratio(tp, tp + fp);
    let (recall, recall_defined) = ratio(tp, tp + fn_);
    let (false_positive_rate, _) = ratio(fp, fp + tn);
    Ok(Metrics {
        tp,
        fp,
        tn,
        fn_,
        precision,
        recall,
        false_positive_rate,
        precision_defined,
        recall_defined,
        flagged: tp + fp,
    })
}
