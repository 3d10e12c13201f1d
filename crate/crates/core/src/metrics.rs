//! Evaluation metrics: joint-label variable-selection scores for the
//! simulation study and internal cluster-separation indices for projected
//! real data.
//!
//! The joint-label scheme collapses the `q` planted signal variables of a
//! view into a single positive label (positive prediction if any of them is
//! selected) and keeps each noise variable as its own negative label; counts
//! are pooled over the views before computing the scores.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pooled confusion counts and the derived selection scores.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SelectionReport {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub f1: f64,
    pub mcc: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    /// True iff every view selects at least one signal variable and no noise
    /// variable.
    pub success: bool,
}

/// Builds the pooled joint-label confusion for selected index sets over
/// views with `p` variables of which the first `q` carry signal.
pub fn joint_label_confusion(selected: &[Vec<usize>], p: usize, q: usize) -> SelectionReport {
    let mut tp = 0;
    let mut fp = 0;
    let mut tn = 0;
    let mut fn_ = 0;
    let mut success = !selected.is_empty();
    for view in selected {
        let signal_hit = view.iter().any(|&j| j < q);
        let noise_hits = view.iter().filter(|&&j| j >= q && j < p).count();
        if q > 0 {
            if signal_hit {
                tp += 1;
            } else {
                fn_ += 1;
            }
        }
        fp += noise_hits;
        tn += (p - q) - noise_hits;
        if !(signal_hit && noise_hits == 0) || q == 0 {
            success = false;
        }
    }
    let (tp_f, fp_f, tn_f, fn_f) = (tp as f64, fp as f64, tn as f64, fn_ as f64);
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let mcc_den =
        ((tp_f + fp_f) * (tp_f + fn_f) * (tn_f + fp_f) * (tn_f + fn_f)).sqrt();
    SelectionReport {
        tp,
        fp,
        tn,
        fn_,
        f1: ratio(2.0 * tp_f, 2.0 * tp_f + fp_f + fn_f),
        mcc: ratio(tp_f * tn_f - fp_f * fn_f, mcc_den),
        precision: ratio(tp_f, tp_f + fp_f),
        recall: ratio(tp_f, tp_f + fn_f),
        specificity: ratio(tn_f, tn_f + fp_f),
        success,
    }
}

/// Fraction of reports flagged successful.
pub fn success_rate(reports: &[SelectionReport]) -> f64 {
    if reports.is_empty() {
        return 0.0;
    }
    reports.iter().filter(|r| r.success).count() as f64 / reports.len() as f64
}

/// The four internal cluster-separation indices.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClusterScore {
    /// Within-class sum of squares over total sum of squares; lower is
    /// better separated.
    pub swiss: f64,
    pub davies_bouldin: f64,
    pub silhouette: f64,
    pub calinski_harabasz: f64,
    /// True if any class is a singleton, whose points score 0 in the
    /// silhouette by convention.
    pub has_singleton_class: bool,
}

/// Computes all four indices for `features` (one row per sample) under the
/// given class labels. Requires at least two distinct classes.
pub fn cluster_scores(features: &DMatrix<f64>, labels: &[usize]) -> Result<ClusterScore> {
    let n = features.nrows();
    if labels.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} samples",
            labels.len(),
            n
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 samples".into()));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let k = classes.len();
    if k < 2 {
        return Err(Error::InvalidInput("need at least 2 distinct classes".into()));
    }
    let d = features.ncols();
    let class_index: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).unwrap())
        .collect();
    let mut counts = vec![0usize; k];
    for &c in &class_index {
        counts[c] += 1;
    }

    // Centroids, grand mean, and the sum-of-squares decomposition.
    let mut centroids: DMatrix<f64> = DMatrix::zeros(k, d);
    for (i, &c) in class_index.iter().enumerate() {
        for j in 0..d {
            centroids[(c, j)] += features[(i, j)];
        }
    }
    for c in 0..k {
        for j in 0..d {
            centroids[(c, j)] /= counts[c] as f64;
        }
    }
    let grand: Vec<f64> = (0..d)
        .map(|j| features.column(j).iter().sum::<f64>() / n as f64)
        .collect();
    let mut within_ss = 0.0;
    let mut total_ss = 0.0;
    for (i, &c) in class_index.iter().enumerate() {
        for j in 0..d {
            let v: f64 = features[(i, j)];
            within_ss += (v - centroids[(c, j)]).powi(2);
            total_ss += (v - grand[j]).powi(2);
        }
    }
    let between_ss = (total_ss - within_ss).max(0.0);
    let swiss = if total_ss > 0.0 { within_ss / total_ss } else { 0.0 };
    let calinski_harabasz = if within_ss > 0.0 && n > k {
        (between_ss / (k - 1) as f64) / (within_ss / (n - k) as f64)
    } else {
        f64::INFINITY
    };

    // Davies-Bouldin from mean centroid distances.
    let mut scatter = vec![0.0f64; k];
    for (i, &c) in class_index.iter().enumerate() {
        let dist: f64 = (0..d)
            .map(|j| (features[(i, j)] - centroids[(c, j)]).powi(2))
            .sum::<f64>()
            .sqrt();
        scatter[c] += dist;
    }
    for c in 0..k {
        scatter[c] /= counts[c] as f64;
    }
    let mut db = 0.0;
    for a in 0..k {
        let mut worst = 0.0f64;
        for b in 0..k {
            if a == b {
                continue;
            }
            let sep: f64 = (0..d)
                .map(|j| (centroids[(a, j)] - centroids[(b, j)]).powi(2))
                .sum::<f64>()
                .sqrt();
            if sep > 0.0 {
                worst = worst.max((scatter[a] + scatter[b]) / sep);
            }
        }
        db += worst;
    }
    let davies_bouldin = db / k as f64;

    // Silhouette with Euclidean distances; singleton classes score 0.
    let has_singleton_class = counts.iter().any(|&c| c == 1);
    let mut sil_sum = 0.0;
    for i in 0..n {
        if counts[class_index[i]] == 1 {
            continue;
        }
        let mut class_dist = vec![0.0f64; k];
        for j in 0..n {
            if i == j {
                continue;
            }
            let dist: f64 = (0..d)
                .map(|col| (features[(i, col)] - features[(j, col)]).powi(2))
                .sum::<f64>()
                .sqrt();
            class_dist[class_index[j]] += dist;
        }
        let own = class_index[i];
        let a = class_dist[own] / (counts[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| class_dist[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            sil_sum += (b - a) / denom;
        }
    }
    let silhouette = sil_sum / n as f64;

    Ok(ClusterScore {
        swiss,
        davies_bouldin,
        silhouette,
        calinski_harabasz,
        has_singleton_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn perfect_selection_pools_to_f1_one() {
        let selected = vec![vec![0], vec![2], vec![1]];
        let r = joint_label_confusion(&selected, 10, 3);
        assert_eq!((r.tp, r.fp, r.fn_, r.tn), (3, 0, 0, 21));
        assert_relative_eq!(r.f1, 1.0);
        assert!(r.success);
    }

    #[test]
    fn nothing_selected() {
        let selected = vec![vec![], vec![], vec![]];
        let r = joint_label_confusion(&selected, 8, 2);
        assert_eq!(r.recall, 0.0);
        assert_relative_eq!(r.specificity, 1.0);
        assert!(!r.success);
        assert_eq!(r.f1, 0.0);
    }

    #[test]
    fn everything_selected_precision() {
        let p = 7;
        let q = 2;
        let all: Vec<usize> = (0..p).collect();
        let selected = vec![all.clone(), all.clone(), all];
        let r = joint_label_confusion(&selected, p, q);
        // tp = 3, fp = 3 (p - q).
        assert_relative_eq!(r.precision, 3.0 / (3.0 + 3.0 * (p - q) as f64));
        assert_relative_eq!(r.recall, 1.0);
        assert!(!r.success);
    }

    #[test]
    fn joint_label_indifferent_to_which_signal() {
        let p = 9;
        let q = 4;
        let a = joint_label_confusion(&vec![vec![0], vec![0], vec![0]], p, q);
        let b = joint_label_confusion(&vec![vec![3], vec![1], vec![2]], p, q);
        assert_eq!((a.tp, a.fp, a.tn, a.fn_), (b.tp, b.fp, b.tn, b.fn_));
    }

    #[test]
    fn mcc_and_f1_ranges() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..100 {
            let p = rng.gen_range(2..10);
            let q = rng.gen_range(1..=p);
            let selected: Vec<Vec<usize>> = (0..3)
                .map(|_| (0..p).filter(|_| rng.gen_bool(0.4)).collect())
                .collect();
            let r = joint_label_confusion(&selected, p, q);
            assert!((0.0..=1.0).contains(&r.f1));
            assert!((-1.0..=1.0).contains(&r.mcc));
            assert!((0.0..=1.0).contains(&r.precision));
            if r.success {
                assert_relative_eq!(r.f1, 1.0);
            }
        }
    }

    #[test]
    fn success_rate_cases() {
        let good = joint_label_confusion(&vec![vec![0], vec![0], vec![0]], 5, 1);
        let bad = joint_label_confusion(&vec![vec![], vec![], vec![]], 5, 1);
        assert_eq!(success_rate(&[good, good, good]), 1.0);
        assert_eq!(success_rate(&[bad, bad]), 0.0);
        let mixed = vec![good, bad, bad, good, bad, bad, bad, good, bad, bad];
        assert_relative_eq!(success_rate(&mixed), 0.3);
    }

    #[test]
    fn cluster_scores_hand_instance() {
        // 1-D: class 0 = {0, 0.1}, class 1 = {10, 10.1}.
        let features = DMatrix::from_column_slice(4, 1, &[0.0, 0.1, 10.0, 10.1]);
        let labels = [0, 0, 1, 1];
        let s = cluster_scores(&features, &labels).unwrap();
        assert_relative_eq!(s.swiss, 0.01 / 100.01, max_relative = 1e-12);
        assert_relative_eq!(s.davies_bouldin, 0.01, max_relative = 1e-12);
        assert_relative_eq!(s.calinski_harabasz, 20000.0, max_relative = 1e-10);
        let expected_sil = (9.95 / 10.05 + 9.85 / 9.95) / 2.0;
        assert_relative_eq!(s.silhouette, expected_sil, max_relative = 1e-12);
        assert!(!s.has_singleton_class);
    }

    #[test]
    fn separated_masses_limits() {
        let features = DMatrix::from_column_slice(4, 1, &[0.0, 0.0, 100.0, 100.0]);
        let s = cluster_scores(&features, &[0, 0, 1, 1]).unwrap();
        assert!(s.swiss < 1e-12);
        assert_relative_eq!(s.silhouette, 1.0);
        assert!(s.calinski_harabasz.is_infinite());
    }

    #[test]
    fn random_labels_silhouette_near_zero() {
        let mut rng = StdRng::seed_from_u64(17);
        let features = DMatrix::from_fn(200, 5, |_, _| rng.gen_range(-1.0..1.0f64));
        let labels: Vec<usize> = (0..200).map(|_| rng.gen_range(0..2)).collect();
        let s = cluster_scores(&features, &labels).unwrap();
        assert!(s.silhouette.abs() < 0.05, "silhouette = {}", s.silhouette);
    }

    #[test]
    fn invariant_to_rotation_and_relabeling() {
        let mut rng = StdRng::seed_from_u64(23);
        let features = DMatrix::from_fn(30, 2, |_, _| rng.gen_range(-1.0..1.0f64));
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let base = cluster_scores(&features, &labels).unwrap();

        let theta: f64 = 0.7;
        let rot =
            DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
        let rotated = &features * rot.transpose();
        let r = cluster_scores(&rotated, &labels).unwrap();
        assert_relative_eq!(base.swiss, r.swiss, max_relative = 1e-10);
        assert_relative_eq!(base.silhouette, r.silhouette, max_relative = 1e-10);
        assert_relative_eq!(base.davies_bouldin, r.davies_bouldin, max_relative = 1e-10);
        assert_relative_eq!(base.calinski_harabasz, r.calinski_harabasz, max_relative = 1e-10);

        let relabeled: Vec<usize> = labels.iter().map(|&l| 9 - l).collect();
        let p = cluster_scores(&features, &relabeled).unwrap();
        assert_relative_eq!(base.swiss, p.swiss, max_relative = 1e-12);
        assert_relative_eq!(base.silhouette, p.silhouette, max_relative = 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        let features = DMatrix::zeros(4, 2);
        assert!(cluster_scores(&features, &[1, 1, 1, 1]).is_err());
    }

    #[test]
    fn singleton_class_flagged() {
        let features = DMatrix::from_column_slice(3, 1, &[0.0, 0.1, 5.0]);
        let s = cluster_scores(&features, &[0, 0, 1]).unwrap();
        assert!(s.has_singleton_class);
        assert!(s.silhouette.is_finite());
    }
}
