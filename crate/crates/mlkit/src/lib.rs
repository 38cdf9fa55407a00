//! Self-contained data-analytics kernel.
//!
//! Everything needed to back declarative DA/ML blocks without external ML
//! frameworks: typed CSV datasets, a preprocessing pipeline with stored
//! transform state, time-series lag windowing, five built-in learners,
//! evaluation metrics, seeded k-fold cross-validation and a grid-based
//! AutoML search. All operations are pure functions of their inputs plus an
//! explicit seed, so results are reproducible byte for byte.
//!
//! The numeric core is generic over the scalar type through [`Scalar`];
//! `f64` aliases for the common entry points live at the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub mod automl;
pub mod cv;
pub mod dataset;
pub mod error;
pub mod io;
pub mod learn;
pub mod metrics;
pub mod preprocess;
pub mod rng;

mod linalg;

pub use automl::{automl_search, AutoMlResult, LeaderboardEntry, Metric};
pub use cv::{kfold_cv, CvOutcome};
pub use dataset::{load_dataset, ColumnType, Dataset, Value};
pub use error::MlError;
pub use io::{load_model, save_model};
pub use learn::{fit, predict, Algorithm, ModelSpec, Prediction, TaskKind, TrainedModel};
pub use metrics::{evaluate, MetricsReport};
pub use preprocess::{preprocess, MissingPolicy, PrepSpec, PreparedData, Scaling};
pub use rng::SplitMix64;

/// Scalar type the numeric kernel is generic over.
///
/// Implemented for `f32` and `f64`; model files and wire formats always
/// serialize through `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Copy
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Default scalar used by the toolchain.
pub type Real = f64;

pub type PreparedData64 = preprocess::PreparedData<f64>;
pub type TrainedModel64 = learn::TrainedModel<f64>;
pub type Prediction64 = learn::Prediction<f64>;
pub type MetricsReport64 = metrics::MetricsReport<f64>;
