//! Seeded k-fold cross-validation.
//!
//! Rows are shuffled by a splitmix64 generator seeded by the caller, then
//! split into `k` folds of size `n / k` with the remainder spread over the
//! first folds. Sequential data keeps its time order: folds are contiguous
//! ordered chunks and no shuffle happens.

use serde::{Deserialize, Serialize};

use crate::automl::Metric;
use crate::error::MlError;
use crate::learn::{batch_predict, fit, ModelSpec};
use crate::preprocess::PreparedData;
use crate::rng::SplitMix64;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub mean: f64,
    pub per_fold: Vec<f64>,
}

/// Fold index assignments for `n` rows. Exposed for determinism tests.
pub fn fold_indices(n: usize, folds: usize, seed: u64, sequential: bool) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    if !sequential {
        SplitMix64::new(seed).shuffle(&mut order);
    }
    let base = n / folds;
    let remainder = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let size = base + usize::from(f < remainder);
        out.push(order[start..start + size].to_vec());
        start += size;
    }
    out
}

fn subset<S: Scalar>(data: &PreparedData<S>, idx: &[usize]) -> PreparedData<S> {
    PreparedData {
        x: idx.iter().map(|&i| data.x[i].clone()).collect(),
        y: idx.iter().map(|&i| data.y[i].clone()).collect(),
        feature_names: data.feature_names.clone(),
        label_names: data.label_names.clone(),
        transform: data.transform.clone(),
    }
}

/// Cross-validate one model spec; the score is `metric` averaged over
/// output columns, then over folds.
pub fn kfold_cv<S: Scalar>(
    spec: &ModelSpec,
    data: &PreparedData<S>,
    metric: Metric,
    folds: usize,
    seed: u64,
) -> Result<CvOutcome, MlError> {
    if folds < 2 {
        return Err(MlError::BadFoldCount(folds));
    }
    let n = data.n_rows();
    if n < folds {
        return Err(MlError::TooFewRows { rows: n, folds });
    }
    let assignment = fold_indices(n, folds, seed, data.transform.sequential);
    let mut per_fold = Vec::with_capacity(folds);
    for f in 0..folds {
        let test_idx = &assignment[f];
        let train_idx: Vec<usize> = assignment
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, idxs)| idxs.iter().copied())
            .collect();
        let train = subset(data, &train_idx);
        let test = subset(data, test_idx);
        let model = fit(spec, &train, seed)?;
        let preds = batch_predict(&model, &test.x)?;
        per_fold.push(metric.score(&preds, &test.y)?);
    }
    let mean = per_fold.iter().sum::<f64>() / per_fold.len() as f64;
    Ok(CvOutcome { mean, per_fold })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_sizes_even_split() {
        let sizes: Vec<usize> = fold_indices(10, 5, 0, false).iter().map(|f| f.len()).collect();
        assert_eq!(sizes, vec![2, 2, 2, 2, 2]);
    }

    #[test]
    fn fold_sizes_remainder_spread_first() {
        let sizes: Vec<usize> = fold_indices(11, 5, 0, false).iter().map(|f| f.len()).collect();
        assert_eq!(sizes, vec![3, 2, 2, 2, 2]);
    }

    #[test]
    fn same_seed_same_assignment() {
        assert_eq!(fold_indices(23, 4, 9, false), fold_indices(23, 4, 9, false));
        assert_ne!(fold_indices(23, 4, 9, false), fold_indices(23, 4, 10, false));
    }

    #[test]
    fn sequential_folds_are_contiguous_and_ordered() {
        let folds = fold_indices(9, 3, 7, true);
        assert_eq!(folds, vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]]);
    }

    #[test]
    fn every_row_appears_exactly_once() {
        let folds = fold_indices(37, 5, 3, false);
        let mut all: Vec<usize> = folds.into_iter().flatten().collect();
        all.sort_unstable();
        assert_eq!(all, (0..37).collect::<Vec<_>>());
    }
}
