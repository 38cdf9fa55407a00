//! Preprocessing pipeline with stored transform state.
//!
//! Fit-time steps, in order: select feature/label columns, apply the
//! missing-value policy, expand timestamps into derived numeric features
//! (hour of day 0-23, day of week 0-6 with Monday = 0, raw epoch seconds),
//! one-hot encode categorical features in first-appearance order, scale
//! every encoded feature column, then (for sequential data) slide a lag
//! window of length `w` with forecast horizon `h` over the rows.
//!
//! The resulting [`TransformState`] is enough to encode a fresh record
//! exactly the way the training data was encoded, which is what makes
//! trained models portable.

use chrono::{DateTime, Datelike, Timelike};
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnType, Dataset, Value};
use crate::error::MlError;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    #[default]
    None,
    MinMax,
    ZScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    Drop,
    MeanImpute,
}

/// What to prepare: the kernel-level mirror of a DA block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepSpec {
    pub features: Vec<String>,
    pub labels: Vec<String>,
    pub sequential: bool,
    /// (lag length w, forecast horizon h); requires `sequential`.
    pub window: Option<(usize, usize)>,
    pub scaling: Scaling,
    pub missing: MissingPolicy,
}

impl PrepSpec {
    pub fn tabular(features: &[&str], labels: &[&str]) -> Self {
        PrepSpec {
            features: features.iter().map(|s| s.to_string()).collect(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            sequential: false,
            window: None,
            scaling: Scaling::None,
            missing: MissingPolicy::Drop,
        }
    }
}

/// Imputation value stored per source column when the policy is mean-impute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeValue {
    Num(f64),
    Cat(String),
}

/// Per source feature column: type, one-hot categories, impute value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumnState {
    pub name: String,
    pub ty: ColumnType,
    /// One-hot category order for categorical columns, empty otherwise.
    pub categories: Vec<String>,
    pub impute: Option<ImputeValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelColumnState {
    pub name: String,
    pub ty: ColumnType,
    /// Class order for categorical labels (class index = position).
    pub categories: Vec<String>,
}

/// Fitted scaler for one encoded feature column.
///
/// `p1`/`p2` are (min, max) for minmax and (mean, std) for zscore.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaler<S> {
    pub kind: Scaling,
    pub p1: S,
    pub p2: S,
}

impl<S: Scalar> ColumnScaler<S> {
    pub fn apply(&self, v: S) -> S {
        match self.kind {
            Scaling::None => v,
            Scaling::MinMax => {
                let range = self.p2 - self.p1;
                if range == S::zero() {
                    S::zero()
                } else {
                    (v - self.p1) / range
                }
            }
            Scaling::ZScore => {
                if self.p2 == S::zero() {
                    S::zero()
                } else {
                    (v - self.p1) / self.p2
                }
            }
        }
    }

    pub fn invert(&self, v: S) -> S {
        match self.kind {
            Scaling::None => v,
            Scaling::MinMax => v * (self.p2 - self.p1) + self.p1,
            Scaling::ZScore => v * self.p2 + self.p1,
        }
    }
}

/// Everything needed to encode a fresh record identically to fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformState<S> {
    pub features: Vec<FeatureColumnState>,
    pub labels: Vec<LabelColumnState>,
    /// Names of the encoded (pre-window) feature columns.
    pub base_feature_names: Vec<String>,
    /// One scaler per encoded feature column.
    pub scalers: Vec<ColumnScaler<S>>,
    pub window: Option<(usize, usize)>,
    /// Time-ordered data: cross-validation must not shuffle rows.
    pub sequential: bool,
}

/// Encoded training data plus its transform state.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData<S> {
    pub x: Vec<Vec<S>>,
    pub y: Vec<Vec<S>>,
    pub feature_names: Vec<String>,
    pub label_names: Vec<String>,
    pub transform: TransformState<S>,
}

impl<S> PreparedData<S> {
    pub fn n_rows(&self) -> usize {
        self.x.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_labels(&self) -> usize {
        self.label_names.len()
    }
}

fn timestamp_parts(epoch: i64) -> (f64, f64, f64) {
    let dt = DateTime::from_timestamp(epoch, 0).unwrap_or_default();
    (
        dt.hour() as f64,
        dt.weekday().num_days_from_monday() as f64,
        epoch as f64,
    )
}

fn mean_of(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn mode_of(values: &[&str]) -> String {
    // First-appearance order breaks count ties deterministically.
    let mut order: Vec<&str> = Vec::new();
    for v in values {
        if !order.contains(v) {
            order.push(v);
        }
    }
    order
        .iter()
        .max_by_key(|cand| values.iter().filter(|v| *v == *cand).count())
        .map(|s| s.to_string())
        .unwrap_or_default()
}

fn encode_feature_cell<S: Scalar>(
    state: &FeatureColumnState,
    value: &Value,
    out: &mut Vec<S>,
    unknown_categories: &mut usize,
) -> Result<(), MlError> {
    let value = if value.is_missing() {
        match &state.impute {
            Some(ImputeValue::Num(v)) => &Value::Num(*v),
            Some(ImputeValue::Cat(c)) => {
                out.extend(one_hot::<S>(&state.categories, c, unknown_categories));
                return Ok(());
            }
            None => {
                return Err(MlError::SchemaMismatch(format!(
                    "missing value for feature '{}' under drop policy",
                    state.name
                )))
            }
        }
    } else {
        value
    };
    match state.ty {
        ColumnType::Numeric => {
            let v = value.as_number().ok_or_else(|| {
                MlError::SchemaMismatch(format!("feature '{}' expects a number", state.name))
            })?;
            out.push(S::from_f64_lossy(v));
        }
        ColumnType::Timestamp => {
            let epoch = value.as_number().ok_or_else(|| {
                MlError::SchemaMismatch(format!("feature '{}' expects a timestamp", state.name))
            })? as i64;
            let (hour, dow, secs) = timestamp_parts(epoch);
            out.push(S::from_f64_lossy(hour));
            out.push(S::from_f64_lossy(dow));
            out.push(S::from_f64_lossy(secs));
        }
        ColumnType::Categorical => {
            let cat = match value {
                Value::Cat(c) => c.as_str(),
                other => {
                    return Err(MlError::SchemaMismatch(format!(
                        "feature '{}' expects a category, got {other:?}",
                        state.name
                    )))
                }
            };
            out.extend(one_hot::<S>(&state.categories, cat, unknown_categories));
        }
    }
    Ok(())
}

fn one_hot<S: Scalar>(categories: &[String], cat: &str, unknown: &mut usize) -> Vec<S> {
    let mut v = vec![S::zero(); categories.len()];
    match categories.iter().position(|c| c == cat) {
        Some(i) => v[i] = S::one(),
        // Unknown category at transform time: all-zeros, counted as a warning.
        None => *unknown += 1,
    }
    v
}

fn encode_label_cell<S: Scalar>(state: &LabelColumnState, value: &Value) -> Result<S, MlError> {
    match state.ty {
        ColumnType::Numeric | ColumnType::Timestamp => value
            .as_number()
            .map(S::from_f64_lossy)
            .ok_or_else(|| MlError::SchemaMismatch(format!("label '{}' expects a number", state.name))),
        ColumnType::Categorical => {
            let cat = match value {
                Value::Cat(c) => c.as_str(),
                other => {
                    return Err(MlError::SchemaMismatch(format!(
                        "label '{}' expects a category, got {other:?}",
                        state.name
                    )))
                }
            };
            state
                .categories
                .iter()
                .position(|c| c == cat)
                .map(|i| S::from_f64_lossy(i as f64))
                .ok_or_else(|| {
                    MlError::SchemaMismatch(format!(
                        "label '{}' has unknown class '{cat}'",
                        state.name
                    ))
                })
        }
    }
}

impl<S: Scalar> TransformState<S> {
    /// Encode one raw record (values in declared feature order) into the
    /// scaled feature vector. Returns the vector and the number of unknown
    /// categories mapped to all-zeros.
    pub fn encode_record(&self, record: &[Value]) -> Result<(Vec<S>, usize), MlError> {
        if record.len() != self.features.len() {
            return Err(MlError::SchemaMismatch(format!(
                "expected {} feature values, got {}",
                self.features.len(),
                record.len()
            )));
        }
        let mut unknown = 0usize;
        let mut base = Vec::with_capacity(self.scalers.len());
        for (state, value) in self.features.iter().zip(record) {
            encode_feature_cell(state, value, &mut base, &mut unknown)?;
        }
        debug_assert_eq!(base.len(), self.scalers.len());
        let scaled = base
            .iter()
            .zip(&self.scalers)
            .map(|(v, sc)| sc.apply(*v))
            .collect();
        Ok((scaled, unknown))
    }

    /// Encode a lag window: `rows` holds the last `w` raw records, oldest
    /// first. Output is feature-major (all lags of column 0, then column 1, ...).
    pub fn encode_window(&self, rows: &[Vec<Value>]) -> Result<(Vec<S>, usize), MlError> {
        let (w, _) = self.window.ok_or_else(|| {
            MlError::SchemaMismatch("model was not trained with a lag window".into())
        })?;
        if rows.len() != w {
            return Err(MlError::SchemaMismatch(format!(
                "lag window needs {w} records, got {}",
                rows.len()
            )));
        }
        let mut unknown = 0usize;
        let mut encoded_rows = Vec::with_capacity(w);
        for row in rows {
            let (v, u) = self.encode_record(row)?;
            unknown += u;
            encoded_rows.push(v);
        }
        let b = self.scalers.len();
        let mut out = Vec::with_capacity(b * w);
        for j in 0..b {
            for row in &encoded_rows {
                out.push(row[j]);
            }
        }
        Ok((out, unknown))
    }

    /// Map a model output back to a dataset value for label column `label_idx`.
    pub fn decode_label(&self, label_idx: usize, value: S) -> Value {
        let state = &self.labels[label_idx];
        match state.ty {
            ColumnType::Numeric => Value::Num(value.to_f64_lossy()),
            ColumnType::Timestamp => Value::Time(value.to_f64_lossy().round() as i64),
            ColumnType::Categorical => {
                let idx = value.to_f64_lossy().round().max(0.0) as usize;
                state
                    .categories
                    .get(idx)
                    .map(|c| Value::Cat(c.clone()))
                    .unwrap_or(Value::Missing)
            }
        }
    }
}

fn expanded_names(state: &FeatureColumnState) -> Vec<String> {
    match state.ty {
        ColumnType::Numeric => vec![state.name.clone()],
        ColumnType::Timestamp => vec![
            format!("{}_hour", state.name),
            format!("{}_dow", state.name),
            format!("{}_epoch", state.name),
        ],
        ColumnType::Categorical => state
            .categories
            .iter()
            .map(|c| format!("{}={}", state.name, c))
            .collect(),
    }
}

/// Run the full preprocessing pipeline over a dataset.
pub fn preprocess<S: Scalar>(ds: &Dataset, spec: &PrepSpec) -> Result<PreparedData<S>, MlError> {
    let feature_idx: Vec<usize> = spec
        .features
        .iter()
        .map(|f| ds.column_index(f).ok_or_else(|| MlError::UnknownColumn(f.clone())))
        .collect::<Result<_, _>>()?;
    let label_idx: Vec<usize> = spec
        .labels
        .iter()
        .map(|l| ds.column_index(l).ok_or_else(|| MlError::UnknownColumn(l.clone())))
        .collect::<Result<_, _>>()?;
    let used: Vec<usize> = feature_idx.iter().chain(&label_idx).copied().collect();

    // Missing-value policy over the columns actually used.
    let mut rows: Vec<&Vec<Value>> = ds.rows.iter().collect();
    let mut impute_values: Vec<Option<ImputeValue>> = vec![None; feature_idx.len()];
    match spec.missing {
        MissingPolicy::Drop => {
            rows.retain(|r| used.iter().all(|&c| !r[c].is_missing()));
        }
        MissingPolicy::MeanImpute => {
            for (slot, &c) in impute_values.iter_mut().zip(&feature_idx) {
                *slot = Some(column_impute(ds, c));
            }
        }
    }
    if rows.is_empty() {
        return Err(MlError::EmptyAfterDrop);
    }

    // Materialize used cells, imputing where the policy says so.
    let materialize = |c: usize, impute: Option<&ImputeValue>| -> Vec<Value> {
        rows.iter()
            .map(|r| {
                if r[c].is_missing() {
                    match impute {
                        Some(ImputeValue::Num(v)) => match ds.columns[c].ty {
                            ColumnType::Timestamp => Value::Time(v.round() as i64),
                            _ => Value::Num(*v),
                        },
                        Some(ImputeValue::Cat(cat)) => Value::Cat(cat.clone()),
                        None => Value::Missing,
                    }
                } else {
                    r[c].clone()
                }
            })
            .collect()
    };

    // Feature column states (categories in first-appearance order).
    let mut features = Vec::with_capacity(feature_idx.len());
    let mut feature_cells: Vec<Vec<Value>> = Vec::with_capacity(feature_idx.len());
    for (k, &c) in feature_idx.iter().enumerate() {
        let cells = materialize(c, impute_values[k].as_ref());
        let ty = ds.columns[c].ty;
        let mut categories = Vec::new();
        if ty == ColumnType::Categorical {
            for v in &cells {
                if let Value::Cat(cat) = v {
                    if !categories.contains(cat) {
                        categories.push(cat.clone());
                    }
                }
            }
        }
        features.push(FeatureColumnState {
            name: ds.columns[c].name.clone(),
            ty,
            categories,
            impute: impute_values[k].clone(),
        });
        feature_cells.push(cells);
    }

    // Label column states. Labels are never imputed: rows with a missing
    // label are unusable for supervised fitting, so they are dropped even
    // under mean-impute.
    let keep: Vec<bool> = (0..rows.len())
        .map(|i| label_idx.iter().all(|&c| !rows[i][c].is_missing()))
        .collect();
    let mut labels = Vec::with_capacity(label_idx.len());
    let mut label_cells: Vec<Vec<Value>> = Vec::with_capacity(label_idx.len());
    for &c in &label_idx {
        let cells: Vec<Value> = rows.iter().map(|r| r[c].clone()).collect();
        let ty = ds.columns[c].ty;
        let mut categories = Vec::new();
        if ty == ColumnType::Categorical {
            for (i, v) in cells.iter().enumerate() {
                if !keep[i] {
                    continue;
                }
                if let Value::Cat(cat) = v {
                    if !categories.contains(cat) {
                        categories.push(cat.clone());
                    }
                }
            }
        }
        labels.push(LabelColumnState {
            name: ds.columns[c].name.clone(),
            ty,
            categories,
        });
        label_cells.push(cells);
    }

    let kept: Vec<usize> = (0..rows.len()).filter(|&i| keep[i]).collect();
    if kept.is_empty() {
        return Err(MlError::EmptyAfterDrop);
    }

    // Encode the base (pre-window) matrices.
    let mut base_x: Vec<Vec<S>> = Vec::with_capacity(kept.len());
    let mut unknown = 0usize;
    for &i in &kept {
        let mut row = Vec::new();
        for (state, cells) in features.iter().zip(&feature_cells) {
            encode_feature_cell(state, &cells[i], &mut row, &mut unknown)?;
        }
        base_x.push(row);
    }
    let mut base_y: Vec<Vec<S>> = Vec::with_capacity(kept.len());
    for &i in &kept {
        let row: Vec<S> = labels
            .iter()
            .zip(&label_cells)
            .map(|(state, cells)| encode_label_cell(state, &cells[i]))
            .collect::<Result<_, _>>()?;
        base_y.push(row);
    }

    let base_feature_names: Vec<String> = features.iter().flat_map(expanded_names).collect();

    // Fit scalers on the base feature matrix, then apply.
    let b = base_feature_names.len();
    let mut scalers = Vec::with_capacity(b);
    for j in 0..b {
        let col: Vec<S> = base_x.iter().map(|r| r[j]).collect();
        scalers.push(fit_scaler(spec.scaling, &col));
    }
    for row in &mut base_x {
        for (v, sc) in row.iter_mut().zip(&scalers) {
            *v = sc.apply(*v);
        }
    }

    // Windowing for sequential data.
    let (x, y, feature_names, label_names) = if let Some((w, h)) = spec.window {
        let n = base_x.len();
        if n < w + h {
            return Err(MlError::SeriesTooShort { n, w, h });
        }
        let count = n - w - h + 1;
        let mut x = Vec::with_capacity(count);
        let mut y = Vec::with_capacity(count);
        for i in 0..count {
            let mut xr = Vec::with_capacity(b * w);
            for j in 0..b {
                for k in 0..w {
                    xr.push(base_x[i + k][j]);
                }
            }
            x.push(xr);
            let mut yr = Vec::with_capacity(labels.len() * h);
            for l in 0..labels.len() {
                for s in 0..h {
                    yr.push(base_y[i + w + s][l]);
                }
            }
            y.push(yr);
        }
        let mut fnames = Vec::with_capacity(b * w);
        for name in &base_feature_names {
            for k in 0..w {
                fnames.push(format!("{name}@t-{}", w - k));
            }
        }
        let mut lnames = Vec::with_capacity(labels.len() * h);
        for l in &labels {
            for s in 0..h {
                lnames.push(format!("{}@t+{s}", l.name));
            }
        }
        (x, y, fnames, lnames)
    } else {
        let lnames = labels.iter().map(|l| l.name.clone()).collect();
        (base_x, base_y, base_feature_names.clone(), lnames)
    };

    Ok(PreparedData {
        x,
        y,
        feature_names,
        label_names,
        transform: TransformState {
            features,
            labels,
            base_feature_names,
            scalers,
            window: spec.window,
            sequential: spec.sequential,
        },
    })
}

fn column_impute(ds: &Dataset, c: usize) -> ImputeValue {
    match ds.columns[c].ty {
        ColumnType::Numeric | ColumnType::Timestamp => {
            let nums: Vec<f64> = ds.rows.iter().filter_map(|r| r[c].as_number()).collect();
            ImputeValue::Num(mean_of(&nums))
        }
        ColumnType::Categorical => {
            let cats: Vec<&str> = ds
                .rows
                .iter()
                .filter_map(|r| match &r[c] {
                    Value::Cat(s) => Some(s.as_str()),
                    _ => None,
                })
                .collect();
            ImputeValue::Cat(mode_of(&cats))
        }
    }
}

fn fit_scaler<S: Scalar>(kind: Scaling, col: &[S]) -> ColumnScaler<S> {
    match kind {
        Scaling::None => ColumnScaler {
            kind,
            p1: S::zero(),
            p2: S::zero(),
        },
        Scaling::MinMax => {
            let min = col.iter().copied().fold(S::infinity(), S::min);
            let max = col.iter().copied().fold(S::neg_infinity(), S::max);
            ColumnScaler { kind, p1: min, p2: max }
        }
        Scaling::ZScore => {
            let n = S::from_f64_lossy(col.len() as f64);
            let mean = col.iter().fold(S::zero(), |a, &v| a + v) / n;
            // Population standard deviation.
            let var = col.iter().fold(S::zero(), |a, &v| a + (v - mean) * (v - mean)) / n;
            ColumnScaler {
                kind,
                p1: mean,
                p2: var.sqrt(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_dataset_str, Column};

    fn numeric_ds(pairs: &[(&str, Vec<f64>)]) -> Dataset {
        let columns = pairs
            .iter()
            .map(|(n, _)| Column {
                name: n.to_string(),
                ty: ColumnType::Numeric,
            })
            .collect();
        let n = pairs[0].1.len();
        let rows = (0..n)
            .map(|i| pairs.iter().map(|(_, v)| Value::Num(v[i])).collect())
            .collect();
        Dataset { columns, rows }
    }

    #[test]
    fn minmax_on_0_5_10() {
        let ds = numeric_ds(&[("x", vec![0.0, 5.0, 10.0]), ("y", vec![1.0, 1.0, 1.0])]);
        let mut spec = PrepSpec::tabular(&["x"], &["y"]);
        spec.scaling = Scaling::MinMax;
        let p: PreparedData<f64> = preprocess(&ds, &spec).unwrap();
        let col: Vec<f64> = p.x.iter().map(|r| r[0]).collect();
        assert_eq!(col, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn zscore_on_2_4_is_pm1() {
        let ds = numeric_ds(&[("x", vec![2.0, 4.0]), ("y", vec![0.0, 1.0])]);
        let mut spec = PrepSpec::tabular(&["x"], &["y"]);
        spec.scaling = Scaling::ZScore;
        let p: PreparedData<f64> = preprocess(&ds, &spec).unwrap();
        let col: Vec<f64> = p.x.iter().map(|r| r[0]).collect();
        assert!((col[0] + 1.0).abs() < 1e-12 && (col[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_w2_h1_over_five_points() {
        let series = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let ds = numeric_ds(&[("v", series)]);
        let mut spec = PrepSpec::tabular(&["v"], &["v"]);
        spec.sequential = true;
        spec.window = Some((2, 1));
        let p: PreparedData<f64> = preprocess(&ds, &spec).unwrap();
        assert_eq!(p.x, vec![vec![1.0, 2.0], vec![2.0, 3.0], vec![3.0, 4.0]]);
        assert_eq!(p.y, vec![vec![3.0], vec![4.0], vec![5.0]]);
        assert_eq!(p.feature_names, vec!["v@t-2", "v@t-1"]);
        assert_eq!(p.label_names, vec!["v@t+0"]);
    }

    #[test]
    fn window_row_count_matches_formula() {
        for n in 4..40usize {
            for w in 1..4usize {
                for h in 1..3usize {
                    if n < w + h {
                        continue;
                    }
                    let ds = numeric_ds(&[("v", (0..n).map(|i| i as f64).collect())]);
                    let mut spec = PrepSpec::tabular(&["v"], &["v"]);
                    spec.sequential = true;
                    spec.window = Some((w, h));
                    let p: PreparedData<f64> = preprocess(&ds, &spec).unwrap();
                    assert_eq!(p.n_rows(), n - w - h + 1);
                }
            }
        }
    }

    #[test]
    fn scaler_roundtrip_within_tolerance() {
        for kind in [Scaling::MinMax, Scaling::ZScore] {
            let col = vec![3.25f64, -1.5, 9.75, 0.125, 4.0];
            let sc = fit_scaler(kind, &col);
            for &v in &col {
                assert!((sc.invert(sc.apply(v)) - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn timestamp_expands_to_three_features() {
        let ds = load_dataset_str(
            "ts,y\n2024-01-01T13:30:00Z,1\n2024-01-02T02:00:00Z,2\n",
            None,
            "<mem>",
        )
        .unwrap();
        let spec = PrepSpec::tabular(&["ts"], &["y"]);
        let p: PreparedData<f64> = preprocess(&ds, &spec).unwrap();
        assert_eq!(p.feature_names, vec!["ts_hour", "ts_dow", "ts_epoch"]);
        // 2024-01-01 was a Monday.
        assert_eq!(p.x[0][0], 13.0);
        assert_eq!(p.x[0][1], 0.0);
        assert_eq!(p.x[1][1], 1.0);
    }

    #[test]
    fn categorical_one_hot_first_appearance_order() {
        let ds = load_dataset_str("c,y\nred,1\nblue,2\nred,3\n", None, "<mem>").unwrap();
        let spec = PrepSpec::tabular(&["c"], &["y"]);
        let p: PreparedData<f64> = preprocess(&ds, &spec).unwrap();
        assert_eq!(p.feature_names, vec!["c=red", "c=blue"]);
        assert_eq!(p.x[1], vec![0.0, 1.0]);
        let (enc, unknown) = p
            .transform
            .encode_record(&[Value::Cat("green".into())])
            .unwrap();
        assert_eq!(enc, vec![0.0, 0.0]);
        assert_eq!(unknown, 1);
    }

    #[test]
    fn drop_policy_removes_rows_and_can_empty_out() {
        let ds = load_dataset_str("x,y\n1,2\n,3\n4,5\n", None, "<mem>").unwrap();
        let spec = PrepSpec::tabular(&["x"], &["y"]);
        let p: PreparedData<f64> = preprocess(&ds, &spec).unwrap();
        assert_eq!(p.n_rows(), 2);

        let all_missing = load_dataset_str("x,y\n,1\n,2\n", None, "<mem>").unwrap();
        assert!(matches!(
            preprocess::<f64>(&all_missing, &spec),
            Err(MlError::EmptyAfterDrop)
        ));
    }

    #[test]
    fn mean_impute_fills_numeric_gap() {
        let ds = load_dataset_str("x,y\n2,0\n,0\n4,1\n", None, "<mem>").unwrap();
        let mut spec = PrepSpec::tabular(&["x"], &["y"]);
        spec.missing = MissingPolicy::MeanImpute;
        let p: PreparedData<f64> = preprocess(&ds, &spec).unwrap();
        assert_eq!(p.n_rows(), 3);
        assert_eq!(p.x[1][0], 3.0);
    }
}
