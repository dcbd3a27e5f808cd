use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::MinMaxScaler;
use crate::error::{invalid, Error, Result};
use crate::features::{Dataset, FeatureVector};

/// k-nearest-neighbour baseline over min-max scaled features.
#[derive(Debug, Clone)]
pub struct KnnModel {
    classes: Vec<String>,
    scaler: MinMaxScaler,
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    k: usize,
}

impl KnnModel {
    pub fn fit(train: &Dataset, k: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(invalid("k-NN needs a non-empty training set"));
        }
        if k == 0 || k > train.len() {
            return Err(invalid(format!("k must be in [1, {}], got {k}", train.len())));
        }
        train.validate()?;
        let raw: Vec<&[f64]> = train.samples.iter().map(|s| s.features.values()).collect();
        let scaler = MinMaxScaler::fit(&raw);
        Ok(Self {
            classes: train.classes.clone(),
            points: raw.iter().map(|r| scaler.transform(r, false)).collect(),
            scaler,
            labels: train.label_indices(),
            k,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// Class index and per-class vote fractions.
    ///
    /// Neighbours are sorted by distance, ties by training order. A tied vote
    /// goes to the tied class whose first member appears earliest in that order.
    pub fn predict_values(&self, values: &[f64]) -> Result<(usize, Vec<f64>)> {
        if values.len() != self.scaler.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.scaler.dim(),
                actual: values.len(),
            });
        }
        let q = self.scaler.transform(values, false);
        let mut order: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut votes = vec![0usize; self.classes.len()];
        for &(_, i) in &order[..self.k] {
            votes[self.labels[i]] += 1;
        }
        let top = *votes.iter().max().expect("at least one class");
        let winner = order[..self.k]
            .iter()
            .map(|&(_, i)| self.labels[i])
            .find(|&c| votes[c] == top)
            .expect("a voted class");
        let fractions = votes.iter().map(|&v| v as f64 / self.k as f64).collect();
        Ok((winner, fractions))
    }
}

pub fn knn_predict(train: &Dataset, fv: &FeatureVector, k: usize) -> Result<String> {
    let model = KnnModel::fit(train, k)?;
    let (class, _) = model.predict_values(fv.values())?;
    Ok(model.classes[class].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{LabeledSample, FEATURE_DIM};
    use proptest::prelude::*;

    fn point(x: f64, extra: f64) -> FeatureVector {
        let mut v = vec![0.0; FEATURE_DIM];
        v[0] = x;
        v[1] = extra;
        FeatureVector::new(v).unwrap()
    }

    fn line(points: &[(f64, &str)]) -> Dataset {
        let mut classes: Vec<String> = Vec::new();
        let samples = points
            .iter()
            .enumerate()
            .map(|(i, &(x, l))| {
                if !classes.iter().any(|c| c == l) {
                    classes.push(l.into());
                }
                LabeledSample {
                    features: point(x, 0.0),
                    label: l.into(),
                    page_id: format!("p{i}"),
                    level: 0,
                    row: 0,
                    col: 0,
                }
            })
            .collect();
        Dataset::new(classes, samples).unwrap()
    }

    /// Sorts by distance with an explicit stable sort and counts votes.
    fn brute_force(points: &[(f64, &str)], q: f64, k: usize) -> String {
        let (lo, hi) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
        let mut d: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (((p.0 - lo) / (hi - lo) - (q - lo) / (hi - lo)).abs(), i))
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let nearest: Vec<&str> = d[..k].iter().map(|&(_, i)| points[i].1).collect();
        let count = |l: &str| nearest.iter().filter(|&&n| n == l).count();
        let best = nearest.iter().map(|l| count(l)).max().unwrap();
        nearest.iter().find(|l| count(l) == best).unwrap().to_string()
    }

    #[test]
    fn exact_match_with_k1() {
        let pts = [(0.0, "a"), (1.0, "b"), (5.0, "c")];
        assert_eq!(knn_predict(&line(&pts), &point(1.0, 0.0), 1).unwrap(), "b");
    }

    #[test]
    fn all_votes_is_majority() {
        let pts = [(0.0, "a"), (1.0, "b"), (2.0, "b"), (9.0, "a"), (10.0, "b")];
        assert_eq!(knn_predict(&line(&pts), &point(0.1, 0.0), 5).unwrap(), "b");
    }

    #[test]
    fn five_points_k3() {
        let pts = [(0.0, "a"), (2.0, "b"), (3.0, "b"), (4.5, "a"), (10.0, "a")];
        for q in [0.5, 2.4, 3.9, 4.4, 8.0] {
            let got = knn_predict(&line(&pts), &point(q, 0.0), 3).unwrap();
            assert_eq!(got, brute_force(&pts, q, 3), "query {q}");
        }
        assert_eq!(knn_predict(&line(&pts), &point(2.4, 0.0), 3).unwrap(), "b");
    }

    #[test]
    fn vote_tie_goes_to_nearest() {
        let pts = [(0.0, "a"), (1.0, "b"), (3.0, "a"), (4.0, "b")];
        assert_eq!(knn_predict(&line(&pts), &point(1.2, 0.0), 2).unwrap(), "b");
        assert_eq!(knn_predict(&line(&pts), &point(0.2, 0.0), 4).unwrap(), "a");
    }

    #[test]
    fn bad_parameters() {
        let pts = [(0.0, "a"), (1.0, "b")];
        assert!(knn_predict(&line(&pts), &point(0.0, 0.0), 0).is_err());
        assert!(knn_predict(&line(&pts), &point(0.0, 0.0), 3).is_err());
        let empty = Dataset::new(vec!["a".into()], Vec::new()).unwrap();
        assert!(knn_predict(&empty, &point(0.0, 0.0), 1).is_err());
    }

    proptest! {
        #[test]
        fn affine_feature_maps_do_not_change_votes(
            xs in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0, 0usize..3), 8..30),
            q in (0.0f64..100.0, 0.0f64..100.0),
            scale in 0.1f64..10.0,
            offset in -50.0f64..50.0,
            k in 1usize..5,
        ) {
            let names = ["a", "b", "c"];
            let build = |f: &dyn Fn(f64) -> f64| {
                let samples = xs.iter().enumerate().map(|(i, &(x, y, c))| LabeledSample {
                    features: point(f(x), y),
                    label: names[c].into(),
                    page_id: format!("p{i}"),
                    level: 0, row: 0, col: 0,
                }).collect();
                Dataset::new(names.iter().map(|s| s.to_string()).collect(), samples).unwrap()
            };
            let map = |x: f64| scale * x + offset;
            let plain = KnnModel::fit(&build(&|x| x), k).unwrap();
            let mapped = KnnModel::fit(&build(&map), k).unwrap();
            let a = plain.predict_values(point(q.0, q.1).values()).unwrap().0;
            let b = mapped.predict_values(point(map(q.0), q.1).values()).unwrap().0;
            prop_assert_eq!(a, b);
        }
    }
}
