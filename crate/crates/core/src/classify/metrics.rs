//! Confusion matrix, Cohen's kappa, probability errors, and per-class
//! one-vs-rest rates with ROC AUC.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub tpr: f64,
    pub fpr: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub tpr: f64,
    pub fpr: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<String>,
    /// Rows are the true class, columns the prediction.
    pub confusion: Vec<Vec<u64>>,
    pub total: u64,
    pub accuracy: f64,
    pub kappa: f64,
    pub mae: f64,
    pub rmse: f64,
    pub per_class: Vec<ClassMetrics>,
    pub mean: MeanMetrics,
}

/// Column headers of the per-class table.
pub const TABLE_COLUMNS: [&str; 9] = [
    "Kappa",
    "MAE",
    "RMSE",
    "TPR",
    "FPR",
    "Precision",
    "Recall",
    "F-measure",
    "AUC",
];

/// One table line. Kappa, MAE and RMSE are aggregate-only and appear on the mean row.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub name: String,
    pub cells: [Option<f64>; 9],
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Mann-Whitney form of the one-vs-rest ROC area, tied scores counted half.
/// Equals the trapezoidal area under the ROC traced by sweeping a threshold.
fn one_vs_rest_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average ranks over runs of equal scores, 1-based
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return 0.5;
    }
    let rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg)
}

/// Builds the full report. `truth` and `predicted` hold class indices into
/// `classes`; `probabilities[s]` is sample `s`'s per-class distribution.
pub fn evaluate(
    truth: &[usize],
    predicted: &[usize],
    probabilities: &[Vec<f64>],
    classes: &[String],
) -> Result<EvalReport> {
    let n_classes = classes.len();
    if truth.len() != predicted.len() || truth.len() != probabilities.len() {
        return Err(invalid(format!(
            "length mismatch: {} truths, {} predictions, {} probability rows",
            truth.len(),
            predicted.len(),
            probabilities.len()
        )));
    }
    if truth.is_empty() || n_classes == 0 {
        return Err(invalid("nothing to evaluate"));
    }
    if truth.iter().chain(predicted).any(|&c| c >= n_classes) {
        return Err(invalid("class index out of range"));
    }
    if probabilities.iter().any(|p| p.len() != n_classes) {
        return Err(invalid("probability rows must have one entry per class"));
    }

    let mut confusion = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        confusion[t][p] += 1;
    }
    let total = truth.len() as u64;
    let trace: u64 = (0..n_classes).map(|c| confusion[c][c]).sum();
    let row_sums: Vec<u64> = confusion.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..n_classes).map(|c| confusion.iter().map(|r| r[c]).sum()).collect();

    let accuracy = trace as f64 / total as f64;
    let tf = total as f64;
    // kappa = (N trace - sum r_c c_c) / (N^2 - sum r_c c_c), one rounding at the end
    let chance: u128 = row_sums
        .iter()
        .zip(&col_sums)
        .map(|(&r, &c)| u128::from(r) * u128::from(c))
        .sum();
    let n = u128::from(total);
    let den = n * n - chance;
    let kappa = if den == 0 {
        // truth and prediction both put every sample in one class
        1.0
    } else {
        let num = (n * u128::from(trace)) as i128 - chance as i128;
        num as f64 / den as f64
    };

    let (mut abs_err, mut sq_err) = (0.0, 0.0);
    for (&t, probs) in truth.iter().zip(probabilities) {
        for (c, &p) in probs.iter().enumerate() {
            let d = p - if c == t { 1.0 } else { 0.0 };
            abs_err += d.abs();
            sq_err += d * d;
        }
    }
    let cells = tf * n_classes as f64;
    let mae = abs_err / cells;
    let rmse = libm::sqrt(sq_err / cells);

    let per_class: Vec<ClassMetrics> = (0..n_classes)
        .map(|c| {
            let tp = confusion[c][c];
            let fn_ = row_sums[c] - tp;
            let fp = col_sums[c] - tp;
            let tn = total - tp - fn_ - fp;
            let tpr = ratio(tp, tp + fn_);
            let precision = ratio(tp, tp + fp);
            let f_measure = if precision + tpr == 0.0 {
                0.0
            } else {
                2.0 * precision * tpr / (precision + tpr)
            };
            let scores: Vec<f64> = probabilities.iter().map(|p| p[c]).collect();
            let positive: Vec<bool> = truth.iter().map(|&t| t == c).collect();
            ClassMetrics {
                label: classes[c].clone(),
                tpr,
                fpr: ratio(fp, fp + tn),
                precision,
                recall: tpr,
                f_measure,
                auc: one_vs_rest_auc(&scores, &positive),
            }
        })
        .collect();

    let k = n_classes as f64;
    let mean_of = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k;
    let mean = MeanMetrics {
        tpr: mean_of(|m| m.tpr),
        fpr: mean_of(|m| m.fpr),
        precision: mean_of(|m| m.precision),
        recall: mean_of(|m| m.recall),
        f_measure: mean_of(|m| m.f_measure),
        auc: mean_of(|m| m.auc),
    };

    Ok(EvalReport {
        classes: classes.to_vec(),
        confusion,
        total,
        accuracy,
        kappa,
        mae,
        rmse,
        per_class,
        mean,
    })
}

impl EvalReport {
    /// One row per class followed by the mean row.
    pub fn table_rows(&self) -> Vec<TableRow> {
        let mut rows: Vec<TableRow> = self
            .per_class
            .iter()
            .map(|m| TableRow {
                name: m.label.clone(),
                cells: [
                    None,
                    None,
                    None,
                    Some(m.tpr),
                    Some(m.fpr),
                    Some(m.precision),
                    Some(m.recall),
                    Some(m.f_measure),
                    Some(m.auc),
                ],
            })
            .collect();
        let m = &self.mean;
        rows.push(TableRow {
            name: "Mean".into(),
            cells: [
                Some(self.kappa),
                Some(self.mae),
                Some(self.rmse),
                Some(m.tpr),
                Some(m.fpr),
                Some(m.precision),
                Some(m.recall),
                Some(m.f_measure),
                Some(m.auc),
            ],
        });
        rows
    }

    /// Plain-text table with the class column followed by [`TABLE_COLUMNS`].
    pub fn render_table(&self) -> String {
        let rows = self.table_rows();
        let name_width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(5);
        let mut out = String::new();
        let _ = write!(out, "{:<name_width$}", "Class");
        for c in TABLE_COLUMNS {
            let _ = write!(out, "  {c:>9}");
        }
        out.push('\n');
        for row in &rows {
            let _ = write!(out, "{:<name_width$}", row.name);
            for cell in row.cells {
                match cell {
                    Some(v) => {
                        let _ = write!(out, "  {v:>9.4}");
                    }
                    None => {
                        let _ = write!(out, "  {:>9}", "");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    /// Samples reproducing a confusion matrix, with one-hot probabilities.
    fn from_confusion(m: &[Vec<u64>]) -> (Vec<usize>, Vec<usize>, Vec<Vec<f64>>) {
        let (mut t, mut p, mut pr) = (Vec::new(), Vec::new(), Vec::new());
        for (i, row) in m.iter().enumerate() {
            for (j, &n) in row.iter().enumerate() {
                for _ in 0..n {
                    t.push(i);
                    p.push(j);
                    let mut probs = vec![0.0; m.len()];
                    probs[j] = 1.0;
                    pr.push(probs);
                }
            }
        }
        (t, p, pr)
    }

    #[test]
    fn hand_computed_two_class() {
        let (t, p, pr) = from_confusion(&[vec![40, 10], vec![20, 30]]);
        let r = evaluate(&t, &p, &pr, &names(2)).unwrap();
        assert_eq!(r.confusion, vec![vec![40, 10], vec![20, 30]]);
        assert!((r.accuracy - 0.7).abs() < 1e-15);
        assert_eq!(r.kappa, 0.4);
        assert!((r.per_class[0].precision - 40.0 / 60.0).abs() < 1e-15);
        assert!((r.per_class[0].tpr - 0.8).abs() < 1e-15);
        assert!((r.per_class[0].fpr - 0.4).abs() < 1e-15);
    }

    #[test]
    fn perfect_predictions() {
        let (t, p, pr) = from_confusion(&[vec![5, 0, 0], vec![0, 3, 0], vec![0, 0, 7]]);
        let r = evaluate(&t, &p, &pr, &names(3)).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.kappa, 1.0);
        assert_eq!(r.mae, 0.0);
        assert_eq!(r.rmse, 0.0);
        for m in &r.per_class {
            assert_eq!((m.tpr, m.fpr, m.auc), (1.0, 0.0, 1.0));
        }
    }

    #[test]
    fn probability_errors() {
        let t = vec![0, 1];
        let pr = vec![vec![0.75, 0.25], vec![0.5, 0.5]];
        let r = evaluate(&t, &[0, 0], &pr, &names(2)).unwrap();
        assert!((r.mae - (0.25 + 0.25 + 0.5 + 0.5) / 4.0).abs() < 1e-15);
        assert!((r.rmse - ((0.0625 * 2.0 + 0.25 * 2.0) / 4.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        assert!(evaluate(&[0, 1], &[0], &[vec![1.0, 0.0]], &names(2)).is_err());
        assert!(evaluate(&[0], &[2], &[vec![1.0, 0.0]], &names(2)).is_err());
    }

    #[test]
    fn table_columns_and_mean_row() {
        let (t, p, pr) = from_confusion(&[vec![4, 1], vec![2, 3]]);
        let r = evaluate(&t, &p, &pr, &names(2)).unwrap();
        let rows = r.table_rows();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].name, "Mean");
        assert!(rows[0].cells[..3].iter().all(Option::is_none));
        assert!(rows[2].cells.iter().all(Option::is_some));
        let text = r.render_table();
        let header: Vec<&str> = text.lines().next().unwrap().split_whitespace().collect();
        assert_eq!(header[0], "Class");
        assert_eq!(&header[1..], &TABLE_COLUMNS);
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn auc_extremes() {
        // class 0's probability strictly higher on exactly its own samples
        let t = vec![0, 0, 1, 1, 1];
        let pr = vec![
            vec![0.9, 0.1],
            vec![0.6, 0.4],
            vec![0.5, 0.5],
            vec![0.2, 0.8],
            vec![0.55, 0.45],
        ];
        let r = evaluate(&t, &[0, 0, 1, 1, 0], &pr, &names(2)).unwrap();
        assert_eq!(r.per_class[0].auc, 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 1000;
        let t: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let pr: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let a: f64 = rng.random();
                vec![a, 1.0 - a]
            })
            .collect();
        let p: Vec<usize> = pr.iter().map(|v| usize::from(v[1] > v[0])).collect();
        let r = evaluate(&t, &p, &pr, &names(2)).unwrap();
        assert!((r.per_class[0].auc - 0.5).abs() < 0.05);
    }

    /// Pairwise definition: P(score_pos > score_neg) + 0.5 P(equal).
    fn pairwise_auc(scores: &[f64], positive: &[bool]) -> f64 {
        let (mut wins, mut pairs) = (0.0, 0.0);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if positive[i] && !positive[j] {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    proptest! {
        #[test]
        fn rates_match_definitions(cells in proptest::collection::vec(0u64..30, 16), n in 2usize..=4) {
            let m: Vec<Vec<u64>> = (0..n).map(|i| cells[i * 4..i * 4 + n].to_vec()).collect();
            let total: u64 = m.iter().flatten().sum();
            prop_assume!(total > 0);
            let (t, p, pr) = from_confusion(&m);
            let r = evaluate(&t, &p, &pr, &names(n)).unwrap();

            let tf = total as f64;
            let po = (0..n).map(|i| m[i][i]).sum::<u64>() as f64 / tf;
            let pe: f64 = (0..n)
                .map(|i| {
                    let row: u64 = m[i].iter().sum();
                    let col: u64 = (0..n).map(|j| m[j][i]).sum();
                    (row as f64 / tf) * (col as f64 / tf)
                })
                .sum();
            if pe < 1.0 {
                prop_assert!((r.kappa - (po - pe) / (1.0 - pe)).abs() < 1e-12);
            }
            for (c, row) in m.iter().enumerate() {
                let tp = row[c] as f64;
                let fn_: f64 = (0..n).filter(|&j| j != c).map(|j| row[j] as f64).sum();
                let fp: f64 = (0..n).filter(|&i| i != c).map(|i| m[i][c] as f64).sum();
                let tn = tf - tp - fn_ - fp;
                let safe = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
                let (tpr, fpr, prec) = (safe(tp, tp + fn_), safe(fp, fp + tn), safe(tp, tp + fp));
                let f = if prec + tpr == 0.0 { 0.0 } else { 2.0 * prec * tpr / (prec + tpr) };
                let got = &r.per_class[c];
                prop_assert!((got.tpr - tpr).abs() < 1e-12);
                prop_assert!((got.fpr - fpr).abs() < 1e-12);
                prop_assert!((got.precision - prec).abs() < 1e-12);
                prop_assert!((got.recall - got.tpr).abs() == 0.0);
                prop_assert!((got.f_measure - f).abs() < 1e-12);
            }
            prop_assert_eq!(r.confusion.iter().flatten().sum::<u64>(), total);
            prop_assert!((-1.0..=1.0).contains(&r.kappa));
        }

        #[test]
        fn auc_matches_pairwise(scores in proptest::collection::vec(0u8..6, 2..40), labels in proptest::collection::vec(any::<bool>(), 40)) {
            let s: Vec<f64> = scores.iter().map(|&v| f64::from(v) / 5.0).collect();
            let pos = &labels[..s.len()];
            prop_assume!(pos.iter().any(|&p| p) && pos.iter().any(|&p| !p));
            prop_assert!((one_vs_rest_auc(&s, pos) - pairwise_auc(&s, pos)).abs() < 1e-12);
        }
    }
}
