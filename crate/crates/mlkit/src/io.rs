//! Trained-model file format.
//!
//! A versioned JSON document with fields `format_version`, `algorithm`,
//! `task`, `schema{features[],labels[]}`, `scaler`, `encoder`,
//! `parameters`, `hyperparams` and `trained_on`. Numbers round-trip at
//! full precision, so save/load is lossless. A hand-written file with the
//! right schema works as a bring-your-own-model input.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::MlError;
use crate::learn::{Algorithm, ModelParams, ModelSpec, Schema, TaskKind, TrainedModel};
use crate::preprocess::{ColumnScaler, FeatureColumnState, LabelColumnState, TransformState};
use crate::Scalar;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct EncoderDoc {
    features: Vec<FeatureColumnState>,
    labels: Vec<LabelColumnState>,
    base_feature_names: Vec<String>,
    window: Option<(usize, usize)>,
    #[serde(default)]
    sequential: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
struct ModelFile<S> {
    format_version: u32,
    algorithm: String,
    task: TaskKind,
    schema: Schema,
    scaler: Vec<ColumnScaler<S>>,
    encoder: EncoderDoc,
    parameters: ModelParams<S>,
    #[serde(default)]
    hyperparams: BTreeMap<String, f64>,
    trained_on: usize,
}

/// Serialize a model to its JSON document.
pub fn model_to_json<S: Scalar>(model: &TrainedModel<S>) -> String {
    let doc = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        algorithm: model.spec.algorithm.id().to_string(),
        task: model.task,
        schema: model.schema.clone(),
        scaler: model.transform.scalers.clone(),
        encoder: EncoderDoc {
            features: model.transform.features.clone(),
            labels: model.transform.labels.clone(),
            base_feature_names: model.transform.base_feature_names.clone(),
            window: model.transform.window,
            sequential: model.transform.sequential,
        },
        parameters: model.params.clone(),
        hyperparams: model.spec.hyperparams.clone(),
        trained_on: model.trained_on,
    };
    serde_json::to_string_pretty(&doc).expect("model serializes")
}

pub fn save_model<S: Scalar>(model: &TrainedModel<S>, path: &Path) -> Result<(), MlError> {
    std::fs::write(path, model_to_json(model)).map_err(|source| MlError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parse a model document, validating version, algorithm id and schema.
pub fn model_from_json<S: Scalar>(text: &str) -> Result<TrainedModel<S>, MlError> {
    let raw: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| MlError::MalformedModelFile(format!("not valid JSON: {e}")))?;
    let version = raw
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| MlError::MalformedModelFile("format_version".into()))?;
    if version != MODEL_FORMAT_VERSION as u64 {
        return Err(MlError::VersionMismatch {
            got: version as u32,
            supported: MODEL_FORMAT_VERSION,
        });
    }
    let algorithm_id = raw
        .get("algorithm")
        .and_then(|v| v.as_str())
        .ok_or_else(|| MlError::MalformedModelFile("algorithm".into()))?;
    let algorithm = Algorithm::from_id(algorithm_id)
        .ok_or_else(|| MlError::UnknownAlgorithm(algorithm_id.to_string()))?;
    if raw.get("schema").is_none() {
        return Err(MlError::MalformedModelFile("schema".into()));
    }
    let doc: ModelFile<S> = serde_json::from_value(raw)
        .map_err(|e| MlError::MalformedModelFile(e.to_string()))?;
    Ok(TrainedModel {
        spec: ModelSpec {
            algorithm,
            hyperparams: doc.hyperparams,
        },
        task: doc.task,
        params: doc.parameters,
        transform: TransformState {
            features: doc.encoder.features,
            labels: doc.encoder.labels,
            base_feature_names: doc.encoder.base_feature_names,
            scalers: doc.scaler,
            window: doc.encoder.window,
            sequential: doc.encoder.sequential,
        },
        schema: doc.schema,
        trained_on: doc.trained_on,
    })
}

pub fn load_model<S: Scalar>(path: &Path) -> Result<TrainedModel<S>, MlError> {
    let text = std::fs::read_to_string(path).map_err(|source| MlError::Io {
        path: path.display().to_string(),
        source,
    })?;
    model_from_json(&text)
}
