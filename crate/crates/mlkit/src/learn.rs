//! Built-in learners: baseline, linear regression (normal equations),
//! logistic regression (full-batch gradient descent), k-nearest neighbors
//! and Gaussian naive Bayes.
//!
//! Classification labels are categorical columns encoded as class indices;
//! regression labels are numeric. Multiple label columns are fitted as
//! independent sub-models per column (direct multi-output). Every fit is a
//! pure function of (spec, data, seed), so serialized models are
//! reproducible byte for byte.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnType, Value};
use crate::error::MlError;
use crate::linalg::solve;
use crate::preprocess::{PreparedData, TransformState};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Baseline,
    LinearRegression,
    LogisticRegression,
    Knn,
    GaussianNb,
}

impl Algorithm {
    pub fn id(&self) -> &'static str {
        match self {
            Algorithm::Baseline => "baseline",
            Algorithm::LinearRegression => "linear_regression",
            Algorithm::LogisticRegression => "logistic_regression",
            Algorithm::Knn => "knn",
            Algorithm::GaussianNb => "gaussian_nb",
        }
    }

    pub fn from_id(id: &str) -> Option<Algorithm> {
        match id {
            "baseline" => Some(Algorithm::Baseline),
            "linear_regression" => Some(Algorithm::LinearRegression),
            "logistic_regression" => Some(Algorithm::LogisticRegression),
            "knn" => Some(Algorithm::Knn),
            "gaussian_nb" => Some(Algorithm::GaussianNb),
            _ => None,
        }
    }

    pub fn supports(&self, task: TaskKind) -> bool {
        match self {
            Algorithm::Baseline => true,
            Algorithm::LinearRegression => task == TaskKind::Regression,
            Algorithm::LogisticRegression | Algorithm::Knn | Algorithm::GaussianNb => {
                task == TaskKind::Classification
            }
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Classification,
    Regression,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskKind::Classification => f.write_str("classification"),
            TaskKind::Regression => f.write_str("regression"),
        }
    }
}

/// Algorithm choice plus hyperparameters.
///
/// Recognized hyperparameters: `k` (knn), `lambda` (linear_regression ridge),
/// `learning_rate` and `iterations` (logistic_regression).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub algorithm: Algorithm,
    pub hyperparams: BTreeMap<String, f64>,
}

impl ModelSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        ModelSpec {
            algorithm,
            hyperparams: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.hyperparams.insert(name.to_string(), value);
        self
    }

    fn param(&self, name: &str, default: f64) -> f64 {
        self.hyperparams.get(name).copied().unwrap_or(default)
    }

    /// Human-readable summary used in leaderboards and trace reports.
    pub fn describe(&self) -> String {
        if self.hyperparams.is_empty() {
            self.algorithm.id().to_string()
        } else {
            let params: Vec<String> = self
                .hyperparams
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            format!("{}({})", self.algorithm.id(), params.join(","))
        }
    }
}

pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-8;
pub const DEFAULT_LEARNING_RATE: f64 = 0.1;
pub const DEFAULT_ITERATIONS: f64 = 500.0;
pub const DEFAULT_KNN_K: f64 = 5.0;
pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Per-class Gaussian parameters for one label column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnbColumn<S> {
    pub priors: Vec<S>,
    /// means[class][feature]
    pub means: Vec<Vec<S>>,
    pub variances: Vec<Vec<S>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticColumn<S> {
    pub weights: Vec<S>,
    pub intercept: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelParams<S> {
    /// Majority class index (classification) or label mean (regression),
    /// one entry per output column.
    Baseline { per_output: Vec<S>, class_freqs: Vec<Vec<S>> },
    /// One weight vector + intercept per output column.
    Linear { weights: Vec<Vec<S>>, intercepts: Vec<S> },
    /// One binary model per output column.
    Logistic { per_output: Vec<LogisticColumn<S>> },
    /// Memorized training set; votes are taken per output column.
    Knn { k: usize, x: Vec<Vec<S>>, y: Vec<Vec<S>> },
    GaussianNb { per_output: Vec<GnbColumn<S>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub features: Vec<String>,
    pub labels: Vec<String>,
}

/// A fitted model: algorithm parameters + preprocessing state + schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel<S> {
    pub spec: ModelSpec,
    pub task: TaskKind,
    pub params: ModelParams<S>,
    pub transform: TransformState<S>,
    pub schema: Schema,
    pub trained_on: usize,
}

/// Output of a single prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<S> {
    /// One value per output column: class index or numeric prediction.
    pub values: Vec<S>,
    /// Class probabilities per output column, classification only.
    pub probabilities: Option<Vec<Vec<S>>>,
    /// Unknown categories encountered while encoding the record.
    pub unknown_categories: usize,
}

/// Number of classes per output column; `None` for regression outputs.
pub fn output_classes<S>(transform: &TransformState<S>) -> Vec<Option<usize>> {
    let h = transform.window.map(|(_, h)| h).unwrap_or(1);
    let mut out = Vec::new();
    for l in &transform.labels {
        let classes = match l.ty {
            ColumnType::Categorical => Some(l.categories.len()),
            _ => None,
        };
        for _ in 0..h {
            out.push(classes);
        }
    }
    out
}

/// Task implied by the label column types.
pub fn task_of<S>(transform: &TransformState<S>) -> Result<TaskKind, MlError> {
    let cats = transform
        .labels
        .iter()
        .filter(|l| l.ty == ColumnType::Categorical)
        .count();
    if cats == 0 {
        Ok(TaskKind::Regression)
    } else if cats == transform.labels.len() {
        Ok(TaskKind::Classification)
    } else {
        Err(MlError::MixedLabelKinds)
    }
}

fn class_counts<S: Scalar>(col: &[S], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n_classes];
    for v in col {
        let idx = v.to_f64_lossy().round() as usize;
        if idx < n_classes {
            counts[idx] += 1;
        }
    }
    counts
}

fn argmax_tie_low<S: Scalar>(scores: &[S]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Fit a model on prepared data.
///
/// `seed` keeps the signature uniform with the stochastic operations; all
/// built-in learners are deterministic and ignore it.
pub fn fit<S: Scalar>(
    spec: &ModelSpec,
    data: &PreparedData<S>,
    _seed: u64,
) -> Result<TrainedModel<S>, MlError> {
    if data.x.is_empty() {
        return Err(MlError::EmptyAfterDrop);
    }
    let task = task_of(&data.transform)?;
    if !spec.algorithm.supports(task) {
        return Err(MlError::TaskMismatch {
            algorithm: spec.algorithm.id().to_string(),
            task: task.to_string(),
        });
    }
    let classes = output_classes(&data.transform);
    if task == TaskKind::Classification {
        for c in classes.iter().flatten() {
            if *c < 2 {
                return Err(MlError::DegenerateLabels);
            }
        }
        // A class declared in the schema may still be absent from this
        // particular training subset (e.g. a CV fold).
        for (col, c) in classes.iter().enumerate() {
            if let Some(n_classes) = c {
                let col_vals: Vec<S> = data.y.iter().map(|r| r[col]).collect();
                let present = class_counts(&col_vals, *n_classes)
                    .iter()
                    .filter(|&&n| n > 0)
                    .count();
                if present < 2 {
                    return Err(MlError::DegenerateLabels);
                }
            }
        }
    }

    let params = match spec.algorithm {
        Algorithm::Baseline => fit_baseline(spec, data, task, &classes)?,
        Algorithm::LinearRegression => fit_linear(spec, data)?,
        Algorithm::LogisticRegression => fit_logistic(spec, data, &classes)?,
        Algorithm::Knn => fit_knn(spec, data)?,
        Algorithm::GaussianNb => fit_gnb(data, &classes)?,
    };

    Ok(TrainedModel {
        spec: spec.clone(),
        task,
        params,
        transform: data.transform.clone(),
        schema: Schema {
            features: data.transform.features.iter().map(|f| f.name.clone()).collect(),
            labels: data.transform.labels.iter().map(|l| l.name.clone()).collect(),
        },
        trained_on: data.n_rows(),
    })
}

fn fit_baseline<S: Scalar>(
    _spec: &ModelSpec,
    data: &PreparedData<S>,
    task: TaskKind,
    classes: &[Option<usize>],
) -> Result<ModelParams<S>, MlError> {
    let n = data.n_rows();
    let n_out = data.n_labels();
    let mut per_output = Vec::with_capacity(n_out);
    let mut class_freqs = Vec::with_capacity(n_out);
    for col in 0..n_out {
        let col_vals: Vec<S> = data.y.iter().map(|r| r[col]).collect();
        match (task, classes[col]) {
            (TaskKind::Classification, Some(n_classes)) => {
                let counts = class_counts(&col_vals, n_classes);
                let majority = counts
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                per_output.push(S::from_f64_lossy(majority as f64));
                class_freqs.push(
                    counts
                        .iter()
                        .map(|&c| S::from_f64_lossy(c as f64 / n as f64))
                        .collect(),
                );
            }
            _ => {
                let mean = col_vals.iter().fold(S::zero(), |a, &v| a + v)
                    / S::from_f64_lossy(n as f64);
                per_output.push(mean);
                class_freqs.push(Vec::new());
            }
        }
    }
    Ok(ModelParams::Baseline { per_output, class_freqs })
}

fn fit_linear<S: Scalar>(
    spec: &ModelSpec,
    data: &PreparedData<S>,
) -> Result<ModelParams<S>, MlError> {
    let lambda = spec.param("lambda", DEFAULT_RIDGE_LAMBDA);
    if lambda < 0.0 {
        return Err(MlError::BadHyperparam {
            algorithm: "linear_regression".into(),
            name: "lambda".into(),
            reason: "must be >= 0".into(),
        });
    }
    let d = data.n_features();
    let n = data.n_rows();
    // Normal equations over the design matrix augmented with an intercept
    // column; the ridge term never touches the intercept.
    let aug = d + 1;
    let mut gram = vec![vec![S::zero(); aug]; aug];
    for row in &data.x {
        for i in 0..aug {
            let xi = if i < d { row[i] } else { S::one() };
            for j in i..aug {
                let xj = if j < d { row[j] } else { S::one() };
                gram[i][j] = gram[i][j] + xi * xj;
            }
        }
    }
    for i in 0..aug {
        for j in 0..i {
            gram[i][j] = gram[j][i];
        }
    }
    let lam = S::from_f64_lossy(lambda);
    for (i, row) in gram.iter_mut().enumerate().take(d) {
        row[i] = row[i] + lam;
    }

    let n_out = data.n_labels();
    let mut weights = Vec::with_capacity(n_out);
    let mut intercepts = Vec::with_capacity(n_out);
    for col in 0..n_out {
        let mut rhs = vec![S::zero(); aug];
        for r in 0..n {
            let yv = data.y[r][col];
            for (i, slot) in rhs.iter_mut().enumerate() {
                let xi = if i < d { data.x[r][i] } else { S::one() };
                *slot = *slot + xi * yv;
            }
        }
        let sol = solve(gram.clone(), rhs)?;
        weights.push(sol[..d].to_vec());
        intercepts.push(sol[d]);
    }
    Ok(ModelParams::Linear { weights, intercepts })
}

fn sigmoid<S: Scalar>(z: S) -> S {
    S::one() / (S::one() + (-z).exp())
}

fn fit_logistic<S: Scalar>(
    spec: &ModelSpec,
    data: &PreparedData<S>,
    classes: &[Option<usize>],
) -> Result<ModelParams<S>, MlError> {
    let lr = spec.param("learning_rate", DEFAULT_LEARNING_RATE);
    let iterations = spec.param("iterations", DEFAULT_ITERATIONS);
    if lr <= 0.0 {
        return Err(MlError::BadHyperparam {
            algorithm: "logistic_regression".into(),
            name: "learning_rate".into(),
            reason: "must be > 0".into(),
        });
    }
    if iterations < 1.0 || iterations.fract() != 0.0 {
        return Err(MlError::BadHyperparam {
            algorithm: "logistic_regression".into(),
            name: "iterations".into(),
            reason: "must be a positive integer".into(),
        });
    }
    for c in classes.iter().flatten() {
        if *c != 2 {
            return Err(MlError::BadHyperparam {
                algorithm: "logistic_regression".into(),
                name: "classes".into(),
                reason: format!("binary only, label has {c} classes"),
            });
        }
    }

    let d = data.n_features();
    let n = data.n_rows();
    let inv_n = S::from_f64_lossy(1.0 / n as f64);
    let rate = S::from_f64_lossy(lr);
    let mut per_output = Vec::with_capacity(data.n_labels());
    for col in 0..data.n_labels() {
        let mut w = vec![S::zero(); d];
        let mut b = S::zero();
        for _ in 0..iterations as usize {
            let mut grad_w = vec![S::zero(); d];
            let mut grad_b = S::zero();
            for r in 0..n {
                let mut z = b;
                for j in 0..d {
                    z = z + w[j] * data.x[r][j];
                }
                let err = sigmoid(z) - data.y[r][col];
                for j in 0..d {
                    grad_w[j] = grad_w[j] + err * data.x[r][j];
                }
                grad_b = grad_b + err;
            }
            for j in 0..d {
                w[j] = w[j] - rate * inv_n * grad_w[j];
            }
            b = b - rate * inv_n * grad_b;
        }
        per_output.push(LogisticColumn { weights: w, intercept: b });
    }
    Ok(ModelParams::Logistic { per_output })
}

fn fit_knn<S: Scalar>(spec: &ModelSpec, data: &PreparedData<S>) -> Result<ModelParams<S>, MlError> {
    let k = spec.param("k", DEFAULT_KNN_K);
    if k < 1.0 || k.fract() != 0.0 {
        return Err(MlError::BadHyperparam {
            algorithm: "knn".into(),
            name: "k".into(),
            reason: "must be a positive integer".into(),
        });
    }
    Ok(ModelParams::Knn {
        k: k as usize,
        x: data.x.clone(),
        y: data.y.clone(),
    })
}

fn fit_gnb<S: Scalar>(
    data: &PreparedData<S>,
    classes: &[Option<usize>],
) -> Result<ModelParams<S>, MlError> {
    let d = data.n_features();
    let n = data.n_rows();
    let floor = S::from_f64_lossy(VARIANCE_FLOOR);
    let mut per_output = Vec::with_capacity(data.n_labels());
    for col in 0..data.n_labels() {
        let n_classes = classes[col].unwrap_or(0).max(1);
        let col_vals: Vec<usize> = data
            .y
            .iter()
            .map(|r| r[col].to_f64_lossy().round() as usize)
            .collect();
        let counts = {
            let mut c = vec![0usize; n_classes];
            for &v in &col_vals {
                if v < n_classes {
                    c[v] += 1;
                }
            }
            c
        };
        let mut means = vec![vec![S::zero(); d]; n_classes];
        for (r, &cls) in col_vals.iter().enumerate() {
            for j in 0..d {
                means[cls][j] = means[cls][j] + data.x[r][j];
            }
        }
        for (cls, count) in counts.iter().enumerate() {
            if *count > 0 {
                let inv = S::from_f64_lossy(1.0 / *count as f64);
                for v in &mut means[cls] {
                    *v = *v * inv;
                }
            }
        }
        let mut variances = vec![vec![S::zero(); d]; n_classes];
        for (r, &cls) in col_vals.iter().enumerate() {
            for j in 0..d {
                let diff = data.x[r][j] - means[cls][j];
                variances[cls][j] = variances[cls][j] + diff * diff;
            }
        }
        for (cls, count) in counts.iter().enumerate() {
            if *count > 0 {
                let inv = S::from_f64_lossy(1.0 / *count as f64);
                for v in &mut variances[cls] {
                    *v = (*v * inv).max(floor);
                }
            } else {
                for v in &mut variances[cls] {
                    *v = S::one();
                }
            }
        }
        per_output.push(GnbColumn {
            priors: counts
                .iter()
                .map(|&c| S::from_f64_lossy(c as f64 / n as f64))
                .collect(),
            means,
            variances,
        });
    }
    Ok(ModelParams::GaussianNb { per_output })
}

/// Decision function over an already-encoded feature vector.
pub fn predict_encoded<S: Scalar>(
    model: &TrainedModel<S>,
    x: &[S],
) -> Result<Prediction<S>, MlError> {
    let expected = match &model.params {
        ModelParams::Knn { x: train, .. } => train.first().map(|r| r.len()).unwrap_or(0),
        ModelParams::Linear { weights, .. } => weights.first().map(|w| w.len()).unwrap_or(0),
        ModelParams::Logistic { per_output } => {
            per_output.first().map(|c| c.weights.len()).unwrap_or(0)
        }
        ModelParams::GaussianNb { per_output } => per_output
            .first()
            .and_then(|c| c.means.first())
            .map(|m| m.len())
            .unwrap_or(x.len()),
        ModelParams::Baseline { .. } => x.len(),
    };
    if x.len() != expected {
        return Err(MlError::SchemaMismatch(format!(
            "encoded record has {} features, model expects {expected}",
            x.len()
        )));
    }

    let (values, probabilities) = match &model.params {
        ModelParams::Baseline { per_output, class_freqs } => {
            let probs = if model.task == TaskKind::Classification {
                Some(class_freqs.clone())
            } else {
                None
            };
            (per_output.clone(), probs)
        }
        ModelParams::Linear { weights, intercepts } => {
            let values = weights
                .iter()
                .zip(intercepts)
                .map(|(w, b)| {
                    w.iter().zip(x).fold(*b, |acc, (wi, xi)| acc + *wi * *xi)
                })
                .collect();
            (values, None)
        }
        ModelParams::Logistic { per_output } => {
            let mut values = Vec::with_capacity(per_output.len());
            let mut probs = Vec::with_capacity(per_output.len());
            for colm in per_output {
                let z = colm
                    .weights
                    .iter()
                    .zip(x)
                    .fold(colm.intercept, |acc, (wi, xi)| acc + *wi * *xi);
                let p = sigmoid(z);
                values.push(if p >= S::from_f64_lossy(0.5) {
                    S::one()
                } else {
                    S::zero()
                });
                probs.push(vec![S::one() - p, p]);
            }
            (values, Some(probs))
        }
        ModelParams::Knn { k, x: train_x, y: train_y } => {
            let mut dists: Vec<(S, usize)> = train_x
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    let d = row
                        .iter()
                        .zip(x)
                        .fold(S::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b));
                    (d, i)
                })
                .collect();
            dists.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.1.cmp(&b.1))
            });
            let k = (*k).min(dists.len());
            let neighbors = &dists[..k];
            let classes = output_classes(&model.transform);
            let n_out = train_y.first().map(|r| r.len()).unwrap_or(0);
            let mut values = Vec::with_capacity(n_out);
            let mut probs = Vec::with_capacity(n_out);
            for col in 0..n_out {
                let n_classes = classes[col].unwrap_or(0);
                let mut votes = vec![0usize; n_classes];
                for (_, i) in neighbors {
                    let cls = train_y[*i][col].to_f64_lossy().round() as usize;
                    if cls < n_classes {
                        votes[cls] += 1;
                    }
                }
                // Vote ties break toward the smallest class index.
                let mut best = 0usize;
                for (i, &v) in votes.iter().enumerate().skip(1) {
                    if v > votes[best] {
                        best = i;
                    }
                }
                values.push(S::from_f64_lossy(best as f64));
                probs.push(
                    votes
                        .iter()
                        .map(|&v| S::from_f64_lossy(v as f64 / k as f64))
                        .collect(),
                );
            }
            (values, Some(probs))
        }
        ModelParams::GaussianNb { per_output } => {
            let mut values = Vec::with_capacity(per_output.len());
            let mut probs = Vec::with_capacity(per_output.len());
            let half = S::from_f64_lossy(0.5);
            let two_pi = S::from_f64_lossy(std::f64::consts::TAU);
            for colm in per_output {
                let n_classes = colm.priors.len();
                let mut log_joint = Vec::with_capacity(n_classes);
                for cls in 0..n_classes {
                    if colm.priors[cls] == S::zero() {
                        log_joint.push(S::neg_infinity());
                        continue;
                    }
                    let mut lj = colm.priors[cls].ln();
                    for (j, &xv) in x.iter().enumerate() {
                        let var = colm.variances[cls][j];
                        let diff = xv - colm.means[cls][j];
                        lj = lj - half * ((two_pi * var).ln() + diff * diff / var);
                    }
                    log_joint.push(lj);
                }
                let max = log_joint
                    .iter()
                    .copied()
                    .fold(S::neg_infinity(), S::max);
                let exps: Vec<S> = log_joint.iter().map(|&l| (l - max).exp()).collect();
                let total = exps.iter().fold(S::zero(), |a, &v| a + v);
                let dist: Vec<S> = exps.iter().map(|&e| e / total).collect();
                values.push(S::from_f64_lossy(argmax_tie_low(&dist) as f64));
                probs.push(dist);
            }
            (values, Some(probs))
        }
    };

    Ok(Prediction {
        values,
        probabilities,
        unknown_categories: 0,
    })
}

/// Predict from raw feature values in declared schema order.
pub fn predict<S: Scalar>(
    model: &TrainedModel<S>,
    record: &[Value],
) -> Result<Prediction<S>, MlError> {
    let (x, unknown) = model.transform.encode_record(record)?;
    let mut p = predict_encoded(model, &x)?;
    p.unknown_categories = unknown;
    Ok(p)
}

/// Predict from the last `w` raw records of a sequential series.
pub fn predict_window<S: Scalar>(
    model: &TrainedModel<S>,
    rows: &[Vec<Value>],
) -> Result<Prediction<S>, MlError> {
    let (x, unknown) = model.transform.encode_window(rows)?;
    let mut p = predict_encoded(model, &x)?;
    p.unknown_categories = unknown;
    Ok(p)
}

/// Predict every row of an encoded matrix.
pub fn batch_predict<S: Scalar>(
    model: &TrainedModel<S>,
    xs: &[Vec<S>],
) -> Result<Vec<Vec<S>>, MlError> {
    xs.iter()
        .map(|x| predict_encoded(model, x).map(|p| p.values))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Column, Dataset};
    use crate::preprocess::{preprocess, PrepSpec};

    fn regression_data(points: &[(f64, f64)]) -> PreparedData<f64> {
        let ds = Dataset {
            columns: vec![
                Column { name: "x".into(), ty: ColumnType::Numeric },
                Column { name: "y".into(), ty: ColumnType::Numeric },
            ],
            rows: points
                .iter()
                .map(|(x, y)| vec![Value::Num(*x), Value::Num(*y)])
                .collect(),
        };
        preprocess::<f64>(&ds, &PrepSpec::tabular(&["x"], &["y"])).unwrap()
    }

    fn classification_data(points: &[(f64, &str)]) -> PreparedData<f64> {
        let ds = Dataset {
            columns: vec![
                Column { name: "x".into(), ty: ColumnType::Numeric },
                Column { name: "y".into(), ty: ColumnType::Categorical },
            ],
            rows: points
                .iter()
                .map(|(x, y)| vec![Value::Num(*x), Value::Cat(y.to_string())])
                .collect(),
        };
        preprocess::<f64>(&ds, &PrepSpec::tabular(&["x"], &["y"])).unwrap()
    }

    #[test]
    fn ols_recovers_exact_line() {
        let data = regression_data(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
        let spec = ModelSpec::new(Algorithm::LinearRegression).with("lambda", 0.0);
        let model = fit(&spec, &data, 0).unwrap();
        match &model.params {
            ModelParams::Linear { weights, intercepts } => {
                assert!((weights[0][0] - 2.0).abs() < 1e-9);
                assert!((intercepts[0] - 1.0).abs() < 1e-9);
            }
            _ => unreachable!(),
        }
        let p = predict(&model, &[Value::Num(3.0)]).unwrap();
        assert!((p.values[0] - 7.0).abs() < 1e-9);
    }

    #[test]
    fn baseline_majority_class() {
        let data = classification_data(&[(0.0, "A"), (1.0, "A"), (2.0, "B")]);
        let model = fit(&ModelSpec::new(Algorithm::Baseline), &data, 0).unwrap();
        for x in [-5.0, 0.0, 100.0] {
            let p = predict(&model, &[Value::Num(x)]).unwrap();
            assert_eq!(
                model.transform.decode_label(0, p.values[0]),
                Value::Cat("A".into())
            );
        }
    }

    #[test]
    fn logistic_separates_signs() {
        let data = classification_data(&[(-2.0, "neg"), (-1.0, "neg"), (1.0, "pos"), (2.0, "pos")]);
        let model = fit(&ModelSpec::new(Algorithm::LogisticRegression), &data, 0).unwrap();
        let preds = batch_predict(&model, &data.x).unwrap();
        for (p, truth) in preds.iter().zip(&data.y) {
            assert_eq!(p[0], truth[0]);
        }
    }

    #[test]
    fn knn_k1_memorizes() {
        let data = classification_data(&[(0.0, "A"), (1.0, "B"), (2.0, "A"), (3.5, "B")]);
        let spec = ModelSpec::new(Algorithm::Knn).with("k", 1.0);
        let model = fit(&spec, &data, 0).unwrap();
        let preds = batch_predict(&model, &data.x).unwrap();
        for (p, truth) in preds.iter().zip(&data.y) {
            assert_eq!(p[0], truth[0]);
        }
    }

    #[test]
    fn gnb_midpoint_is_fifty_fifty() {
        let data = classification_data(&[(-1.0, "A"), (-3.0, "A"), (1.0, "B"), (3.0, "B")]);
        let model = fit(&ModelSpec::new(Algorithm::GaussianNb), &data, 0).unwrap();
        let p = predict(&model, &[Value::Num(0.0)]).unwrap();
        let probs = &p.probabilities.unwrap()[0];
        assert!((probs[0] - 0.5).abs() < 1e-9);
        assert!((probs[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn single_class_rejected() {
        let data = classification_data(&[(0.0, "A"), (1.0, "A")]);
        let err = fit(&ModelSpec::new(Algorithm::GaussianNb), &data, 0).unwrap_err();
        assert!(matches!(err, MlError::DegenerateLabels));
    }

    #[test]
    fn regression_algorithm_rejects_classification_task() {
        let data = classification_data(&[(0.0, "A"), (1.0, "B")]);
        let err = fit(&ModelSpec::new(Algorithm::LinearRegression), &data, 0).unwrap_err();
        assert!(matches!(err, MlError::TaskMismatch { .. }));
    }

    #[test]
    fn duplicated_feature_column_is_singular_without_ridge() {
        let ds = Dataset {
            columns: vec![
                Column { name: "a".into(), ty: ColumnType::Numeric },
                Column { name: "b".into(), ty: ColumnType::Numeric },
                Column { name: "y".into(), ty: ColumnType::Numeric },
            ],
            rows: (0..6)
                .map(|i| {
                    let v = i as f64;
                    vec![Value::Num(v), Value::Num(v), Value::Num(2.0 * v)]
                })
                .collect(),
        };
        let data = preprocess::<f64>(&ds, &PrepSpec::tabular(&["a", "b"], &["y"])).unwrap();
        let spec = ModelSpec::new(Algorithm::LinearRegression).with("lambda", 0.0);
        assert!(matches!(fit(&spec, &data, 0), Err(MlError::SingularSystem)));
        // With a real ridge term the system becomes solvable.
        let spec = ModelSpec::new(Algorithm::LinearRegression).with("lambda", 1e-2);
        assert!(fit(&spec, &data, 0).is_ok());
    }

    #[test]
    fn multi_output_regression_fits_per_column() {
        let ds = Dataset {
            columns: vec![
                Column { name: "x".into(), ty: ColumnType::Numeric },
                Column { name: "u".into(), ty: ColumnType::Numeric },
                Column { name: "v".into(), ty: ColumnType::Numeric },
            ],
            rows: (0..5)
                .map(|i| {
                    let x = i as f64;
                    vec![Value::Num(x), Value::Num(3.0 * x), Value::Num(1.0 - x)]
                })
                .collect(),
        };
        let data = preprocess::<f64>(&ds, &PrepSpec::tabular(&["x"], &["u", "v"])).unwrap();
        let spec = ModelSpec::new(Algorithm::LinearRegression).with("lambda", 0.0);
        let model = fit(&spec, &data, 0).unwrap();
        let p = predict(&model, &[Value::Num(10.0)]).unwrap();
        assert!((p.values[0] - 30.0).abs() < 1e-9);
        assert!((p.values[1] + 9.0).abs() < 1e-9);
    }
}
