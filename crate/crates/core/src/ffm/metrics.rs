use super::{sigmoid, FfmModel};
use crate::error::Result;
use crate::schema::{EventDataset, CRASH};

/// Classification quality with crash as the positive class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub auc: f64,
    pub acc: f64,
    pub f1: f64,
    pub threshold: f64,
}

/// Rank-statistic AUC with midranks for tied scores. Returns 0.5 when one
/// of the classes is absent.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> f64 {
    assert_eq!(scores.len(), positive.len());
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return 0.5;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let np = n_pos as f64;
    (rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64)
}

pub(crate) fn metrics_from_scores(probs: &[f64], positive: &[bool], threshold: f64) -> Metrics {
    let (mut tp, mut fp, mut fneg, mut correct) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &y) in probs.iter().zip(positive) {
        let pred = p >= threshold;
        match (pred, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
        if pred == y {
            correct += 1;
        }
    }
    let denom = 2 * tp + fp + fneg;
    let f1 = if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    };
    let acc = if probs.is_empty() {
        0.0
    } else {
        correct as f64 / probs.len() as f64
    };
    Metrics {
        auc: roc_auc(probs, positive),
        acc,
        f1,
        threshold,
    }
}

/// ACC, F1 and AUC of `model` on a labeled dataset. A case is predicted
/// crash when its probability is at least `threshold`.
pub fn evaluate(model: &FfmModel, dataset: &EventDataset, threshold: f64) -> Result<Metrics> {
    let labels = dataset.labels()?;
    let probs: Vec<f64> = dataset
        .rows
        .iter()
        .map(|r| sigmoid(model.score_codes(&r.codes())))
        .collect();
    let positive: Vec<bool> = labels.iter().map(|&l| l == CRASH).collect();
    Ok(metrics_from_scores(&probs, &positive, threshold))
}

impl Metrics {
    pub fn to_report(&self) -> String {
        format!(
            "auc={:.6}\nacc={:.6}\nf1={:.6}\nthreshold={}\n",
            self.auc, self.acc, self.f1, self.threshold
        )
    }
}
