use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::features::Dataset;

/// One train/test partition; indices into the dataset, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits `ds` into `k` folds.
///
/// Stratified: each class's samples are shuffled and the classes, one after
/// another, are dealt round-robin into the folds with a single running
/// counter. Every class is then spread evenly and fold sizes differ by at
/// most one. Unstratified: the whole dataset is shuffled and dealt.
pub fn kfold_split(ds: &Dataset, k: usize, seed: u64, stratify: bool) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(invalid("cross-validation needs at least 2 folds"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<usize> = if stratify {
        let labels = ds.label_indices();
        let mut order = Vec::with_capacity(ds.len());
        for (c, name) in ds.classes.iter().enumerate() {
            let mut members: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] == c).collect();
            if members.len() < k {
                return Err(Error::Stratification {
                    class: name.clone(),
                    count: members.len(),
                    folds: k,
                });
            }
            members.shuffle(&mut rng);
            order.extend(members);
        }
        order
    } else {
        if ds.len() < k {
            return Err(invalid("fewer samples than folds"));
        }
        let mut order: Vec<usize> = (0..ds.len()).collect();
        order.shuffle(&mut rng);
        order
    };

    let mut assignment = alloc::vec![0usize; ds.len()];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = pos % k;
    }
    Ok((0..k)
        .map(|f| Fold {
            train: (0..ds.len()).filter(|&i| assignment[i] != f).collect(),
            test: (0..ds.len()).filter(|&i| assignment[i] == f).collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureVector, LabeledSample, FEATURE_DIM};
    use alloc::format;
    use alloc::string::String;
    use alloc::vec;

    fn dataset(per_class: &[usize]) -> Dataset {
        let classes: Vec<String> = (0..per_class.len()).map(|c| format!("c{c}")).collect();
        let mut samples = Vec::new();
        for (c, &n) in per_class.iter().enumerate() {
            for i in 0..n {
                samples.push(LabeledSample {
                    features: FeatureVector::new(vec![0.0; FEATURE_DIM]).unwrap(),
                    label: classes[c].clone(),
                    page_id: format!("c{c}_{i}"),
                    level: 2,
                    row: 0,
                    col: 0,
                });
            }
        }
        Dataset::new(classes, samples).unwrap()
    }

    fn assert_partition(folds: &[Fold], n: usize) {
        let mut seen = vec![0; n];
        for f in folds {
            for &i in &f.test {
                seen[i] += 1;
            }
            assert_eq!(f.train.len() + f.test.len(), n);
            assert!(f.train.iter().all(|i| !f.test.contains(i)));
        }
        assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn eleven_classes_three_folds() {
        let ds = dataset(&[160; 11]);
        let folds = kfold_split(&ds, 3, 42, true).unwrap();
        assert_partition(&folds, 1760);
        let mut sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![586, 587, 587]);
        // each class is spread as evenly as possible
        for f in &folds {
            let sub = ds.subset(&f.test);
            assert!(sub.class_counts().iter().all(|&c| (53..=54).contains(&c)));
        }
    }

    #[test]
    fn two_folds_of_two() {
        let folds = kfold_split(&dataset(&[4]), 2, 0, true).unwrap();
        assert_eq!(folds[0].test.len(), 2);
        assert_eq!(folds[1].test.len(), 2);
        assert_partition(&folds, 4);
    }

    #[test]
    fn unstratified_partition() {
        let folds = kfold_split(&dataset(&[5, 1]), 3, 7, false).unwrap();
        assert_partition(&folds, 6);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            kfold_split(&dataset(&[5, 2]), 3, 0, true),
            Err(Error::Stratification { count: 2, folds: 3, .. })
        ));
        assert!(kfold_split(&dataset(&[5]), 1, 0, true).is_err());
        assert!(kfold_split(&dataset(&[2]), 3, 0, false).is_err());
    }

    #[test]
    fn seeded() {
        let ds = dataset(&[10, 10]);
        assert_eq!(
            kfold_split(&ds, 3, 1, true).unwrap(),
            kfold_split(&ds, 3, 1, true).unwrap()
        );
        assert_ne!(
            kfold_split(&ds, 3, 1, true).unwrap(),
            kfold_split(&ds, 3, 2, true).unwrap()
        );
    }
}
