//! Runtime binding of the four DA actions to the ML kernel.
//!
//! Each DA-bearing instance owns a [`DaCtx`]: a snapshot of its dataset
//! file taken at instantiation, an in-memory buffer of rows saved during
//! the run, the prepared data from the last `da_preprocess`, and the
//! current model (trained here or pretrained).
//!
//! `da_save` persists to the physical dataset file *and* the buffer, but
//! reads (`da_preprocess`, sequential `da_predict`) always use the
//! instantiation snapshot plus the buffer, so a run's behavior is a pure
//! function of its inputs even when earlier runs appended to the same file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mlkit::automl::Metric;
use mlkit::dataset::{load_dataset_str, ColumnType, Value};
use mlkit::learn::{batch_predict, fit, predict, predict_window, Algorithm, ModelSpec};
use mlkit::preprocess::{preprocess, MissingPolicy, PrepSpec, Scaling};
use mlkit::{PreparedData64, TrainedModel64};

use crate::compile::{CDa, CDaMode, CProperty, CValue};
use crate::model::{MissingKind, ScalarType, ScalingKind};
use crate::sim::value::render;

pub struct DaCtx {
    pub spec: CDa,
    dataset_path: PathBuf,
    /// Column order of the dataset (file header, or features+labels when
    /// the file does not exist yet).
    header: Vec<String>,
    /// Data lines snapshotted from the file at instantiation.
    file_rows: Vec<String>,
    file_found: bool,
    /// Rows appended by `da_save` during this run.
    buffer: Vec<String>,
    pub prepared: Option<PreparedData64>,
    pub model: Option<TrainedModel64>,
    /// Whether the current model came from `pretrained`.
    pub pretrained_model: bool,
}

fn csv_cell(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn prep_spec(spec: &CDa) -> PrepSpec {
    PrepSpec {
        features: spec.features.clone(),
        labels: spec.labels.clone(),
        sequential: spec.sequential,
        window: spec.window.map(|(w, h)| (w as usize, h as usize)),
        scaling: match spec.scaling {
            ScalingKind::None => Scaling::None,
            ScalingKind::Minmax => Scaling::MinMax,
            ScalingKind::Zscore => Scaling::ZScore,
        },
        missing: match spec.missing {
            MissingKind::Drop => MissingPolicy::Drop,
            MissingKind::MeanImpute => MissingPolicy::MeanImpute,
        },
    }
}

impl DaCtx {
    /// Build the context at instantiation time. The dataset file is only
    /// snapshotted (missing files surface lazily at `da_preprocess`), but a
    /// declared pretrained model must load now.
    pub fn new(
        spec: &CDa,
        data_root: &Path,
        pretrained_doc: Option<&serde_json::Value>,
    ) -> Result<DaCtx, String> {
        let dataset_path = if Path::new(&spec.dataset).is_relative() {
            data_root.join(&spec.dataset)
        } else {
            PathBuf::from(&spec.dataset)
        };
        let (header, file_rows, file_found) = match std::fs::read_to_string(&dataset_path) {
            Ok(text) => {
                let mut lines = text.lines();
                let header: Vec<String> = lines
                    .next()
                    .unwrap_or("")
                    .split(',')
                    .map(|h| h.trim().to_string())
                    .collect();
                let rows = lines
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| l.to_string())
                    .collect();
                (header, rows, true)
            }
            Err(_) => {
                let mut header = spec.features.clone();
                for l in &spec.labels {
                    if !header.contains(l) {
                        header.push(l.clone());
                    }
                }
                (header, Vec::new(), false)
            }
        };
        let mut ctx = DaCtx {
            spec: spec.clone(),
            dataset_path,
            header,
            file_rows,
            file_found,
            buffer: Vec::new(),
            prepared: None,
            model: None,
            pretrained_model: false,
        };
        if let Some(doc) = pretrained_doc {
            let text = serde_json::to_string(doc).expect("embedded model re-serializes");
            let model = mlkit::io::model_from_json::<f64>(&text)
                .map_err(|e| format!("pretrained model: {e}"))?;
            ctx.model = Some(model);
            ctx.pretrained_model = true;
        }
        Ok(ctx)
    }

    /// `da_save`: append one row of the current feature/label property
    /// values. Returns the CSV row written.
    pub fn save(&mut self, props: &BTreeMap<String, CValue>) -> Result<String, String> {
        let row: Vec<String> = self
            .header
            .iter()
            .map(|col| match props.get(col) {
                Some(v) => csv_cell(&render(v)),
                None => String::new(), // column not backed by a property
            })
            .collect();
        let row = row.join(",");
        if !self.file_found && self.buffer.is_empty() {
            if let Some(parent) = self.dataset_path.parent() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| format!("cannot create dataset directory: {e}"))?;
            }
        }
        let needs_header =
            !self.file_found && self.buffer.is_empty() && !self.dataset_path.exists();
        let mut text = String::new();
        if needs_header {
            text.push_str(&self.header.join(","));
            text.push('\n');
        }
        text.push_str(&row);
        text.push('\n');
        use std::io::Write;
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.dataset_path)
            .map_err(|e| format!("cannot append to dataset '{}': {e}", self.dataset_path.display()))?;
        f.write_all(text.as_bytes())
            .map_err(|e| format!("cannot append to dataset '{}': {e}", self.dataset_path.display()))?;
        self.buffer.push(row.clone());
        Ok(row)
    }

    /// The dataset visible to this run: snapshot + buffer, as CSV text.
    fn dataset_text(&self) -> Result<String, String> {
        if !self.file_found && self.buffer.is_empty() {
            return Err(format!(
                "dataset file not found: {}",
                self.dataset_path.display()
            ));
        }
        let mut text = self.header.join(",");
        text.push('\n');
        for r in self.file_rows.iter().chain(&self.buffer) {
            text.push_str(r);
            text.push('\n');
        }
        Ok(text)
    }

    /// `da_preprocess`: returns (rows, encoded feature count).
    pub fn preprocess(&mut self) -> Result<(usize, usize), String> {
        let text = self.dataset_text()?;
        let ds = load_dataset_str(&text, None, &self.dataset_path.display().to_string())
            .map_err(|e| e.to_string())?;
        let prepared: PreparedData64 =
            preprocess(&ds, &prep_spec(&self.spec)).map_err(|e| e.to_string())?;
        let dims = (prepared.n_rows(), prepared.n_features());
        self.prepared = Some(prepared);
        Ok(dims)
    }

    /// `da_train`: fit per the block's mode; returns the training report.
    pub fn train(&mut self, seed: u64) -> Result<serde_json::Value, String> {
        let prepared = self.prepared.as_ref().ok_or("no prepared data")?;
        let (spec, mut report) = match &self.spec.mode {
            CDaMode::Expert { algorithm, hyperparams } => {
                let algo = Algorithm::from_id(algorithm)
                    .ok_or_else(|| format!("unknown algorithm '{algorithm}'"))?;
                let spec = ModelSpec { algorithm: algo, hyperparams: hyperparams.clone() };
                let report = serde_json::json!({
                    "mode": "expert",
                    "algorithm": algorithm,
                    "hyperparams": hyperparams,
                });
                (spec, report)
            }
            CDaMode::Automl { metric, folds, budget } => {
                let metric = Metric::parse(metric)
                    .ok_or_else(|| format!("unknown metric '{metric}'"))?;
                let result = mlkit::automl_search::<f64>(
                    prepared,
                    metric,
                    *folds as usize,
                    budget.unwrap_or(24) as usize,
                    seed,
                )
                .map_err(|e| e.to_string())?;
                let report = serde_json::json!({
                    "mode": "automl",
                    "algorithm": result.best.algorithm.id(),
                    "hyperparams": result.best.hyperparams,
                    "metric": metric.to_string(),
                    "cv_score": result.best_score,
                    "candidates": result.leaderboard.len(),
                });
                (result.best, report)
            }
        };
        let model = fit(&spec, prepared, seed).map_err(|e| e.to_string())?;
        // Training-set score with the task's default metric, for the
        // post-run summary.
        let metric = Metric::default_for(model.task);
        if let Ok(preds) = batch_predict(&model, &prepared.x) {
            if let Ok(score) = metric.score(&preds, &prepared.y) {
                report["train_metric"] = serde_json::json!(metric.to_string());
                report["train_score"] = serde_json::json!(score);
            }
        }
        self.model = Some(model);
        self.pretrained_model = false;
        Ok(report)
    }

    /// `da_predict`: returns (trace inputs, trace outputs, label-property
    /// assignments). For windowed blocks, each label property receives the
    /// nearest-horizon forecast; all horizon steps appear in the outputs.
    #[allow(clippy::type_complexity)]
    pub fn predict(
        &mut self,
        props: &BTreeMap<String, CValue>,
        prop_types: &[CProperty],
    ) -> Result<(serde_json::Value, serde_json::Value, Vec<(String, CValue)>), String> {
        let model = self.model.as_ref().ok_or("model not ready")?;
        let prediction = if let Some((w, _)) = model.transform.window {
            let rows = self.tail_feature_rows(model, w)?;
            predict_window(model, &rows).map_err(|e| e.to_string())?
        } else {
            let record = self.feature_record(model, props)?;
            predict(model, &record).map_err(|e| e.to_string())?
        };

        let inputs: Vec<serde_json::Value> = self
            .spec
            .features
            .iter()
            .map(|f| match props.get(f) {
                Some(v) => crate::sim::value::to_json(v),
                None => serde_json::Value::Null,
            })
            .collect();

        let h = model.transform.window.map(|(_, h)| h).unwrap_or(1);
        let mut outputs = Vec::new();
        let mut assignments = Vec::new();
        for (i, label) in self.spec.labels.iter().enumerate() {
            let ty = prop_types
                .iter()
                .find(|p| p.name == *label)
                .map(|p| p.ty)
                .ok_or_else(|| format!("label '{label}' is not a property"))?;
            for s in 0..h {
                let raw = prediction.values[i * h + s];
                let decoded = model.transform.decode_label(i, raw);
                outputs.push(ml_value_to_json(&decoded));
                if s == 0 {
                    assignments.push((label.clone(), ml_value_to_cvalue(&decoded, ty)?));
                }
            }
        }
        Ok((
            serde_json::Value::Array(inputs),
            serde_json::Value::Array(outputs),
            assignments,
        ))
    }

    /// Encode the current feature property values as a raw ML record using
    /// the model's column types.
    fn feature_record(
        &self,
        model: &TrainedModel64,
        props: &BTreeMap<String, CValue>,
    ) -> Result<Vec<Value>, String> {
        self.spec
            .features
            .iter()
            .zip(&model.transform.features)
            .map(|(name, col)| {
                let v = props
                    .get(name)
                    .ok_or_else(|| format!("feature '{name}' is not a property"))?;
                cvalue_to_ml(v, col.ty)
            })
            .collect()
    }

    /// The last `w` raw feature rows of the run-visible dataset, oldest
    /// first — the lag window for sequential prediction.
    fn tail_feature_rows(
        &self,
        model: &TrainedModel64,
        w: usize,
    ) -> Result<Vec<Vec<Value>>, String> {
        let text = self.dataset_text()?;
        let ds = load_dataset_str(&text, None, &self.dataset_path.display().to_string())
            .map_err(|e| e.to_string())?;
        if ds.n_rows() < w {
            return Err(format!(
                "lag window needs {w} rows, dataset has {}",
                ds.n_rows()
            ));
        }
        let idx: Vec<usize> = self
            .spec
            .features
            .iter()
            .map(|f| {
                ds.column_index(f)
                    .ok_or_else(|| format!("dataset has no column '{f}'"))
            })
            .collect::<Result<_, _>>()?;
        let _ = model; // column types come from the dataset itself here
        Ok(ds.rows[ds.n_rows() - w..]
            .iter()
            .map(|row| idx.iter().map(|&c| row[c].clone()).collect())
            .collect())
    }
}

fn cvalue_to_ml(v: &CValue, ty: ColumnType) -> Result<Value, String> {
    match ty {
        ColumnType::Numeric => match v {
            CValue::Int(i) => Ok(Value::Num(*i as f64)),
            CValue::Float(f) => Ok(Value::Num(*f)),
            CValue::Bool(b) => Ok(Value::Num(f64::from(*b))),
            CValue::Str(s) => s
                .parse::<f64>()
                .map(Value::Num)
                .map_err(|_| format!("cannot use '{s}' as a numeric feature")),
        },
        ColumnType::Categorical => Ok(Value::Cat(render(v))),
        ColumnType::Timestamp => match v {
            CValue::Int(i) => Ok(Value::Time(*i)),
            CValue::Float(f) => Ok(Value::Time(f.round() as i64)),
            other => Err(format!(
                "cannot use {} as a timestamp feature",
                render(other)
            )),
        },
    }
}

fn ml_value_to_json(v: &Value) -> serde_json::Value {
    match v {
        Value::Num(f) => serde_json::Value::from(*f),
        Value::Cat(s) => serde_json::Value::from(s.as_str()),
        Value::Time(t) => serde_json::Value::from(*t),
        Value::Missing => serde_json::Value::Null,
    }
}

fn ml_value_to_cvalue(v: &Value, ty: ScalarType) -> Result<CValue, String> {
    match (v, ty) {
        (Value::Num(f), ScalarType::Float) => Ok(CValue::Float(*f)),
        (Value::Num(f), ScalarType::Int | ScalarType::Timestamp) => {
            Ok(CValue::Int(f.round() as i64))
        }
        (Value::Num(f), ScalarType::Bool) => Ok(CValue::Bool(*f != 0.0)),
        (Value::Cat(s), ScalarType::Bool) => Ok(CValue::Bool(s == "true")),
        (Value::Cat(s), ScalarType::String) => Ok(CValue::Str(s.clone())),
        (Value::Cat(s), ScalarType::Int | ScalarType::Timestamp) => s
            .parse::<i64>()
            .map(CValue::Int)
            .map_err(|_| format!("cannot store class '{s}' into an Int property")),
        (Value::Cat(s), ScalarType::Float) => s
            .parse::<f64>()
            .map(CValue::Float)
            .map_err(|_| format!("cannot store class '{s}' into a Float property")),
        (Value::Time(t), ScalarType::Int | ScalarType::Timestamp) => Ok(CValue::Int(*t)),
        (Value::Time(t), ScalarType::Float) => Ok(CValue::Float(*t as f64)),
        (Value::Missing, _) => Err("prediction decoded to no known class".into()),
        (other, ty) => Err(format!(
            "prediction {other:?} does not fit property type {}",
            ty.keyword()
        )),
    }
}
