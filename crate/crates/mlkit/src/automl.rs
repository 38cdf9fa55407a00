//! Grid-based AutoML search.
//!
//! The candidate grid, in its documented enumeration order:
//!
//! 1. knn with k in {1, 3, 5, 7}
//! 2. linear_regression with lambda in {1e-8, 1e-2, 1.0}
//! 3. logistic_regression with learning_rate in {0.01, 0.1} x iterations in {200, 500}
//! 4. gaussian_nb
//! 5. baseline
//!
//! Candidates not applicable to the task are skipped, the remainder is
//! truncated to the first `budget` entries, and each survivor is scored by
//! seeded k-fold cross-validation. Score ties break toward the earlier
//! (simpler) grid entry. Candidates that fail to fit on some fold (e.g. a
//! fold missing a class) stay on the leaderboard with no score and can
//! never win.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cv::kfold_cv;
use crate::error::MlError;
use crate::learn::{task_of, Algorithm, ModelSpec, TaskKind};
use crate::metrics::evaluate_columns;
use crate::preprocess::PreparedData;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    MacroF1,
    Rmse,
}

impl Metric {
    pub fn parse(s: &str) -> Option<Metric> {
        match s {
            "accuracy" => Some(Metric::Accuracy),
            "macro_f1" => Some(Metric::MacroF1),
            "rmse" => Some(Metric::Rmse),
            _ => None,
        }
    }

    pub fn task(&self) -> TaskKind {
        match self {
            Metric::Accuracy | Metric::MacroF1 => TaskKind::Classification,
            Metric::Rmse => TaskKind::Regression,
        }
    }

    pub fn higher_is_better(&self) -> bool {
        !matches!(self, Metric::Rmse)
    }

    /// Default metric for a task: macro_f1 for classification, rmse for
    /// regression.
    pub fn default_for(task: TaskKind) -> Metric {
        match task {
            TaskKind::Classification => Metric::MacroF1,
            TaskKind::Regression => Metric::Rmse,
        }
    }

    /// Score multi-output predictions: the metric per output column,
    /// averaged over columns.
    pub fn score<S: Scalar>(
        &self,
        preds: &[Vec<S>],
        truths: &[Vec<S>],
    ) -> Result<f64, MlError> {
        let reports = evaluate_columns(preds, truths, self.task())?;
        let mut total = 0.0;
        for r in &reports {
            let v = match self {
                Metric::Accuracy => r.accuracy,
                Metric::MacroF1 => r.macro_f1,
                Metric::Rmse => r.rmse,
            }
            .expect("metric present for its task");
            total += v.to_f64_lossy();
        }
        Ok(total / reports.len() as f64)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Metric::Accuracy => "accuracy",
            Metric::MacroF1 => "macro_f1",
            Metric::Rmse => "rmse",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub spec: ModelSpec,
    /// Mean CV score; `None` when the candidate failed to fit.
    pub score: Option<f64>,
    pub per_fold: Vec<f64>,
    /// Position in the documented enumeration order.
    pub grid_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoMlResult {
    pub best: ModelSpec,
    pub best_score: f64,
    pub metric: Metric,
    /// Sorted by score (best first), ties toward the earlier grid entry.
    pub leaderboard: Vec<LeaderboardEntry>,
}

/// The full candidate grid in enumeration order, before task filtering.
pub fn candidate_grid() -> Vec<ModelSpec> {
    let mut grid = Vec::new();
    for k in [1.0, 3.0, 5.0, 7.0] {
        grid.push(ModelSpec::new(Algorithm::Knn).with("k", k));
    }
    for lambda in [1e-8, 1e-2, 1.0] {
        grid.push(ModelSpec::new(Algorithm::LinearRegression).with("lambda", lambda));
    }
    for lr in [0.01, 0.1] {
        for iters in [200.0, 500.0] {
            grid.push(
                ModelSpec::new(Algorithm::LogisticRegression)
                    .with("learning_rate", lr)
                    .with("iterations", iters),
            );
        }
    }
    grid.push(ModelSpec::new(Algorithm::GaussianNb));
    grid.push(ModelSpec::new(Algorithm::Baseline));
    grid
}

/// Exhaustive grid search scored by k-fold cross-validation.
pub fn automl_search<S: Scalar>(
    data: &PreparedData<S>,
    metric: Metric,
    folds: usize,
    budget: usize,
    seed: u64,
) -> Result<AutoMlResult, MlError> {
    let task = task_of(&data.transform)?;
    if metric.task() != task {
        return Err(MlError::BadMetric {
            task: task.to_string(),
            metric: metric.to_string(),
        });
    }
    let applicable: Vec<(usize, ModelSpec)> = candidate_grid()
        .into_iter()
        .enumerate()
        .filter(|(_, spec)| spec.algorithm.supports(task))
        .collect();
    if applicable.is_empty() {
        return Err(MlError::EmptyGrid {
            task: task.to_string(),
            metric: metric.to_string(),
        });
    }
    let candidates = &applicable[..budget.min(applicable.len())];

    let mut leaderboard = Vec::with_capacity(candidates.len());
    for (grid_index, spec) in candidates {
        match kfold_cv(spec, data, metric, folds, seed) {
            Ok(outcome) => leaderboard.push(LeaderboardEntry {
                spec: spec.clone(),
                score: Some(outcome.mean),
                per_fold: outcome.per_fold,
                grid_index: *grid_index,
            }),
            Err(MlError::DegenerateLabels) | Err(MlError::BadHyperparam { .. })
            | Err(MlError::SingularSystem) => {
                leaderboard.push(LeaderboardEntry {
                    spec: spec.clone(),
                    score: None,
                    per_fold: Vec::new(),
                    grid_index: *grid_index,
                });
            }
            Err(other) => return Err(other),
        }
    }
    if leaderboard.iter().all(|e| e.score.is_none()) {
        return Err(MlError::DegenerateLabels);
    }

    let better = |a: f64, b: f64| {
        if metric.higher_is_better() {
            a.partial_cmp(&b)
        } else {
            b.partial_cmp(&a)
        }
        .unwrap_or(std::cmp::Ordering::Equal)
    };
    leaderboard.sort_by(|a, b| match (a.score, b.score) {
        (Some(x), Some(y)) => better(y, x).then(a.grid_index.cmp(&b.grid_index)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.grid_index.cmp(&b.grid_index),
    });

    let winner = &leaderboard[0];
    Ok(AutoMlResult {
        best: winner.spec.clone(),
        best_score: winner.score.expect("winner has a score"),
        metric,
        leaderboard,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Column, ColumnType, Dataset, Value};
    use crate::preprocess::{preprocess, PrepSpec};

    fn line_data(n: usize) -> PreparedData<f64> {
        let ds = Dataset {
            columns: vec![
                Column { name: "x".into(), ty: ColumnType::Numeric },
                Column { name: "y".into(), ty: ColumnType::Numeric },
            ],
            rows: (0..n)
                .map(|i| {
                    let x = i as f64;
                    vec![Value::Num(x), Value::Num(2.0 * x + 1.0)]
                })
                .collect(),
        };
        preprocess::<f64>(&ds, &PrepSpec::tabular(&["x"], &["y"])).unwrap()
    }

    #[test]
    fn grid_has_documented_shape() {
        let grid = candidate_grid();
        assert_eq!(grid.len(), 13);
        assert_eq!(grid[0].algorithm, Algorithm::Knn);
        assert_eq!(grid[4].algorithm, Algorithm::LinearRegression);
        assert_eq!(grid[12].algorithm, Algorithm::Baseline);
    }

    #[test]
    fn exact_line_picks_linear_over_baseline() {
        let data = line_data(30);
        let result = automl_search(&data, Metric::Rmse, 5, 24, 1).unwrap();
        assert_eq!(result.best.algorithm, Algorithm::LinearRegression);
        // Baseline CV RMSE is roughly std(y); linear is near zero.
        let baseline = result
            .leaderboard
            .iter()
            .find(|e| e.spec.algorithm == Algorithm::Baseline)
            .unwrap();
        assert!(result.best_score < 1e-6);
        assert!(baseline.score.unwrap() > 1.0);
    }

    #[test]
    fn budget_one_keeps_first_candidate_only() {
        let ds = Dataset {
            columns: vec![
                Column { name: "x".into(), ty: ColumnType::Numeric },
                Column { name: "y".into(), ty: ColumnType::Categorical },
            ],
            rows: (0..20)
                .map(|i| {
                    let x = i as f64;
                    let y = if i % 2 == 0 { "a" } else { "b" };
                    vec![Value::Num(x), Value::Cat(y.into())]
                })
                .collect(),
        };
        let data = preprocess::<f64>(&ds, &PrepSpec::tabular(&["x"], &["y"])).unwrap();
        let result = automl_search(&data, Metric::Accuracy, 5, 1, 0).unwrap();
        assert_eq!(result.leaderboard.len(), 1);
        assert_eq!(result.best.algorithm, Algorithm::Knn);
        assert_eq!(result.best.hyperparams.get("k"), Some(&1.0));
    }

    #[test]
    fn metric_task_mismatch_rejected() {
        let data = line_data(20);
        assert!(matches!(
            automl_search(&data, Metric::Accuracy, 5, 24, 0),
            Err(MlError::BadMetric { .. })
        ));
    }

    #[test]
    fn single_class_data_is_degenerate() {
        let ds = Dataset {
            columns: vec![
                Column { name: "x".into(), ty: ColumnType::Numeric },
                Column { name: "y".into(), ty: ColumnType::Categorical },
            ],
            rows: (0..10)
                .map(|i| vec![Value::Num(i as f64), Value::Cat("only".into())])
                .collect(),
        };
        let data = preprocess::<f64>(&ds, &PrepSpec::tabular(&["x"], &["y"])).unwrap();
        assert!(matches!(
            automl_search(&data, Metric::Accuracy, 5, 24, 0),
            Err(MlError::DegenerateLabels)
        ));
    }
}
