//! Design-time model checking: the full diagnostic rule catalog.
//!
//! Errors (E...) block code generation; warnings (W...) and hints (H...)
//! never do.
//!
//! | rule | meaning |
//! |------|---------|
//! | E001 | duplicate thing/configuration name |
//! | E002 | port references undeclared message |
//! | E003 | transition event not receivable on the named port |
//! | E004 | DA feature/label references unknown property |
//! | E005 | `da_*` action in a thing without a DA block |
//! | E006 | algorithm/metric family incompatible with label types |
//! | E007 | connector endpoint or message-set incompatibility |
//! | E008 | unknown initial state / unreachable state |
//! | E009 | type error in expression/assignment/send arity |
//! | E010 | window/horizon present without `sequential true` |
//! | E011 | pretrained model schema mismatch |
//! | E012 | `da_*` action in guard position |
//! | W101 | `da_predict` reachable with no prior `da_train` and no pretrained |
//! | W102 | required receiving port never connected in any configuration |
//! | W103 | `da_train` with no preceding `da_preprocess` on some path |
//! | H201 | dataset rows < 10 × feature count |
//! | H202 | expert mode with empty hyperparameter block |
//! | H203 | zscore scaling over a constant column |
//!
//! W101/W103 use exists-path semantics over the statechart graph (warn if
//! *any* path misbehaves), computed by fixed point and cross-checked in
//! tests against brute-force path enumeration on small machines.

mod paths;
mod rules;
mod types;

use std::collections::BTreeSet;
use std::path::PathBuf;

use crate::model::*;

pub use paths::{da_path_facts, reachability, DaPathFacts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Hint,
}

impl std::fmt::Display for Severity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Hint => "hint",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub rule: &'static str,
    pub severity: Severity,
    pub message: String,
    pub span: Span,
    pub related: Vec<Span>,
}

impl Diagnostic {
    pub fn render(&self, file: &str) -> String {
        format!(
            "{file}:{}:{}: {}[{}]: {}",
            self.span.line, self.span.col, self.severity, self.rule, self.message
        )
    }
}

pub(crate) fn diag(
    rule: &'static str,
    severity: Severity,
    span: Span,
    message: impl Into<String>,
) -> Diagnostic {
    Diagnostic { rule, severity, message: message.into(), span, related: Vec::new() }
}

/// Dataset-side metadata used by the dataset-dependent rules
/// (E011, H201, H203). Absent info simply disables those rules.
#[derive(Debug, Clone)]
pub struct DatasetInfo {
    pub rows: usize,
    pub columns: Vec<String>,
    /// Columns whose non-missing values are all identical.
    pub constant_columns: Vec<String>,
}

pub trait DatasetProvider {
    fn dataset_info(&self, path: &str) -> Option<DatasetInfo>;
    /// `(features, labels)` of a pretrained model file.
    fn pretrained_schema(&self, path: &str) -> Option<(Vec<String>, Vec<String>)>;
}

/// Provider that knows nothing; dataset-dependent rules stay silent.
pub struct NoDatasets;

impl DatasetProvider for NoDatasets {
    fn dataset_info(&self, _path: &str) -> Option<DatasetInfo> {
        None
    }
    fn pretrained_schema(&self, _path: &str) -> Option<(Vec<String>, Vec<String>)> {
        None
    }
}

/// Filesystem provider resolving paths relative to a data root.
pub struct FsDatasetProvider {
    pub root: PathBuf,
}

impl FsDatasetProvider {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FsDatasetProvider { root: root.into() }
    }

    fn resolve(&self, path: &str) -> PathBuf {
        let p = PathBuf::from(path);
        if p.is_absolute() {
            p
        } else {
            self.root.join(p)
        }
    }
}

impl DatasetProvider for FsDatasetProvider {
    fn dataset_info(&self, path: &str) -> Option<DatasetInfo> {
        let ds = mlkit::load_dataset(&self.resolve(path), None).ok()?;
        let columns: Vec<String> = ds.columns.iter().map(|c| c.name.clone()).collect();
        let mut constant_columns = Vec::new();
        for (i, name) in columns.iter().enumerate() {
            let mut values = ds.rows.iter().map(|r| &r[i]).filter(|v| !v.is_missing());
            if let Some(first) = values.next() {
                if values.all(|v| v == first) {
                    constant_columns.push(name.clone());
                }
            }
        }
        Some(DatasetInfo { rows: ds.n_rows(), columns, constant_columns })
    }

    fn pretrained_schema(&self, path: &str) -> Option<(Vec<String>, Vec<String>)> {
        let model: mlkit::TrainedModel64 = mlkit::load_model(&self.resolve(path)).ok()?;
        Some((model.schema.features, model.schema.labels))
    }
}

/// Run the full rule catalog over a merged model.
///
/// Pure and deterministic: the result is sorted by (span start, rule id).
pub fn validate(m: &Model, datasets: &dyn DatasetProvider) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    rules::check_duplicate_names(m, &mut out); // E001
    for thing in &m.things {
        rules::check_thing(m, thing, datasets, &mut out);
    }
    rules::check_configurations(m, &mut out); // E007, part of W102
    rules::check_unconnected_ports(m, &mut out); // W102
    out.sort_by(|a, b| (a.span.start, a.rule).cmp(&(b.span.start, b.rule)));
    out
}

/// True when no error-severity diagnostic is present.
pub fn is_error_free(diags: &[Diagnostic]) -> bool {
    !diags.iter().any(|d| d.severity == Severity::Error)
}

pub(crate) fn duplicate_names<'a, I: Iterator<Item = (&'a str, Span)>>(
    items: I,
) -> Vec<(String, Span)> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut dups = Vec::new();
    for (name, span) in items {
        if !seen.insert(name) {
            dups.push((name.to_string(), span));
        }
    }
    dups
}
