//! Score-versus-label metrics.

use serde::{Deserialize, Serialize};

/// One swept threshold: claims with `score >= threshold` count as predicted true.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedMetricReport {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub threshold: f64,
    pub aupr: f64,
    pub auroc: f64,
    /// Only one label class was present; auroc is then 0.5 and aupr the
    /// positive rate.
    pub degenerate: bool,
    /// Descending thresholds, so recall is nondecreasing.
    pub pr_curve: Vec<PrPoint>,
}

/// P(score_pos > score_neg) + P(tie)/2 over all positive/negative pairs,
/// from tie-averaged ranks. 0.5 without both classes.
pub fn auroc(scores: &[f64], labels: &[bool]) -> f64 {
    let n_pos = labels.iter().filter(|l| **l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return 0.5;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1 share their mean.
        let mean_rank = (i + j + 2) as f64 / 2.0;
        rank_sum += mean_rank * idx[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    u / (n_pos as f64 * n_neg as f64)
}

/// Precision and recall at every distinct score, highest first.
pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Vec<PrPoint> {
    let n_pos = labels.iter().filter(|l| **l).count();
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < idx.len() {
        let t = scores[idx[i]];
        while i < idx.len() && scores[idx[i]] == t {
            if labels[idx[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push(PrPoint {
            threshold: t,
            precision: tp as f64 / (tp + fp) as f64,
            recall: if n_pos == 0 { 0.0 } else { tp as f64 / n_pos as f64 },
        });
    }
    out
}

/// Area under the step curve of interpolated precision (the best precision
/// at any recall at least as high).
pub fn aupr(curve: &[PrPoint]) -> f64 {
    let mut best_after = vec![0.0; curve.len()];
    let mut best: f64 = 0.0;
    for (i, p) in curve.iter().enumerate().rev() {
        best = best.max(p.precision);
        best_after[i] = best;
    }
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    for (p, interp) in curve.iter().zip(best_after) {
        area += (p.recall - prev_recall) * interp;
        prev_recall = p.recall;
    }
    area
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Full report. Balanced F1 is read at the threshold where precision and
/// recall are closest; ties go to the higher F1, then the higher threshold.
pub fn ranking_metrics(scores: &[f64], labels: &[bool]) -> RankedMetricReport {
    assert_eq!(scores.len(), labels.len(), "scores and labels must align");
    let n_pos = labels.iter().filter(|l| **l).count();
    let degenerate = n_pos == 0 || n_pos == labels.len();
    let curve = pr_curve(scores, labels);
    let mut best: Option<PrPoint> = None;
    for p in &curve {
        let better = match best {
            None => true,
            Some(b) => {
                let (gap, bgap) = ((p.precision - p.recall).abs(), (b.precision - b.recall).abs());
                gap < bgap || (gap == bgap && f1(p.precision, p.recall) > f1(b.precision, b.recall))
            }
        };
        if better {
            best = Some(*p);
        }
    }
    let b = best.unwrap_or(PrPoint {
        threshold: 0.0,
        precision: 0.0,
        recall: 0.0,
    });
    RankedMetricReport {
        f1: f1(b.precision, b.recall),
        precision: b.precision,
        recall: b.recall,
        threshold: b.threshold,
        aupr: aupr(&curve),
        auroc: auroc(scores, labels),
        degenerate,
        pr_curve: curve,
    }
}
