//! Portable classifiers (linear, tree-ensemble, lookup-table) and dataset
//! ingestion. Models arrive pre-trained in a small JSON format; prediction
//! is deterministic and total on the declared feature space.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::actionability::{is_integral, ActionSet, FeatureKind, VALUE_EPS};
use crate::error::{Error, Result};

/// A prediction label. Reports and datasets carry labels as integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub i64);

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

impl Tree {
    /// Evaluate from the root; `x[feature] <= threshold` descends left.
    fn evaluate(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Linear { weights: Vec<f64>, intercept: f64, threshold: f64 },
    TreeEnsemble { trees: Vec<Tree>, threshold: f64 },
    Table { rows: Vec<(Vec<f64>, Label)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub kind: ModelKind,
    pub positive: Label,
    pub negative: Label,
}

impl Classifier {
    pub fn d(&self) -> usize {
        match &self.kind {
            ModelKind::Linear { weights, .. } => weights.len(),
            ModelKind::TreeEnsemble { trees, .. } => trees
                .iter()
                .flat_map(|t| &t.nodes)
                .filter_map(|n| match n {
                    TreeNode::Split { feature, .. } => Some(feature + 1),
                    TreeNode::Leaf { .. } => None,
                })
                .max()
                .unwrap_or(0),
            ModelKind::Table { rows } => rows.first().map(|(x, _)| x.len()).unwrap_or(0),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        match &self.kind {
            ModelKind::Table { rows } => {
                self.check_dims(x)?;
                for (row, label) in rows {
                    if row.iter().zip(x).all(|(r, v)| (r - v).abs() <= VALUE_EPS) {
                        return Ok(*label);
                    }
                }
                Err(Error::OffTable)
            }
            _ => {
                let margin = self.score(x)?;
                Ok(if margin >= 0.0 { self.positive } else { self.negative })
            }
        }
    }

    /// Decision margin: distance of the raw model output from its decision
    /// threshold, positive iff the prediction is the positive label. Table
    /// models return a unit indicator margin.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.check_dims(x)?;
        match &self.kind {
            ModelKind::Linear { weights, intercept, threshold } => {
                let dot: f64 = weights.iter().zip(x).map(|(w, v)| w * v).sum();
                Ok(dot + intercept - threshold)
            }
            ModelKind::TreeEnsemble { trees, threshold } => {
                let sum: f64 = trees.iter().map(|t| t.evaluate(x)).sum();
                Ok(sum - threshold)
            }
            ModelKind::Table { .. } => {
                let label = self.predict(x)?;
                Ok(if label == self.positive { 1.0 } else { -1.0 })
            }
        }
    }

    fn check_dims(&self, x: &[f64]) -> Result<()> {
        let d = self.d();
        // tree ensembles may legally ignore trailing features, so only a
        // deficit is an error there
        let bad = match &self.kind {
            ModelKind::TreeEnsemble { .. } => x.len() < d,
            _ => x.len() != d && d != 0,
        };
        if bad {
            return Err(Error::DimensionMismatch { expected: d, actual: x.len() });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON document schema

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
enum ModelDoc {
    #[serde(rename = "linear")]
    Linear {
        coefficients: BTreeMap<String, f64>,
        intercept: f64,
        threshold: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        positive_label: Option<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        negative_label: Option<i64>,
    },
    #[serde(rename = "tree_ensemble")]
    TreeEnsemble {
        trees: Vec<TreeDoc>,
        threshold: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        positive_label: Option<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        negative_label: Option<i64>,
    },
    #[serde(rename = "table")]
    Table {
        rows: Vec<TableRowDoc>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        positive_label: Option<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        negative_label: Option<i64>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    nodes: Vec<NodeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum NodeDoc {
    Split { feature: String, threshold: f64, left: usize, right: usize },
    Leaf { leaf: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRowDoc {
    x: Vec<f64>,
    y: i64,
}

/// Parse and validate a model document against the feature space of an
/// action set: linear coefficients and tree splits reference features by
/// name, and split thresholds must lie within the feature's bounds.
pub fn load_model(document: &str, action_set: &ActionSet) -> Result<Classifier> {
    let doc: ModelDoc = serde_json::from_str(document)
        .map_err(|e| Error::Schema { path: "model".to_string(), message: e.to_string() })?;
    let d = action_set.d();
    let labels = |pos: Option<i64>, neg: Option<i64>| -> Result<(Label, Label)> {
        let positive = Label(pos.unwrap_or(1));
        let negative = Label(neg.unwrap_or(0));
        if positive == negative {
            return Err(Error::Schema {
                path: "model.positive_label".to_string(),
                message: "positive and negative labels must differ".to_string(),
            });
        }
        Ok((positive, negative))
    };
    match doc {
        ModelDoc::Linear { coefficients, intercept, threshold, positive_label, negative_label } => {
            let (positive, negative) = labels(positive_label, negative_label)?;
            let mut weights = vec![0.0; d];
            for (name, w) in &coefficients {
                let j = action_set.feature_index(name).ok_or_else(|| Error::Schema {
                    path: format!("model.coefficients.{name}"),
                    message: "unknown feature".to_string(),
                })?;
                if !w.is_finite() {
                    return Err(Error::Schema {
                        path: format!("model.coefficients.{name}"),
                        message: "coefficient must be finite".to_string(),
                    });
                }
                weights[j] = *w;
            }
            if !intercept.is_finite() || !threshold.is_finite() {
                return Err(Error::Schema {
                    path: "model".to_string(),
                    message: "intercept and threshold must be finite".to_string(),
                });
            }
            Ok(Classifier {
                kind: ModelKind::Linear { weights, intercept, threshold },
                positive,
                negative,
            })
        }
        ModelDoc::TreeEnsemble { trees, threshold, positive_label, negative_label } => {
            let (positive, negative) = labels(positive_label, negative_label)?;
            let mut parsed = Vec::with_capacity(trees.len());
            for (ti, tree) in trees.iter().enumerate() {
                parsed.push(parse_tree(tree, ti, action_set)?);
            }
            if !threshold.is_finite() {
                return Err(Error::Schema {
                    path: "model.threshold".to_string(),
                    message: "threshold must be finite".to_string(),
                });
            }
            Ok(Classifier {
                kind: ModelKind::TreeEnsemble { trees: parsed, threshold },
                positive,
                negative,
            })
        }
        ModelDoc::Table { rows, positive_label, negative_label } => {
            let (positive, negative) = labels(positive_label, negative_label)?;
            let mut parsed: Vec<(Vec<f64>, Label)> = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                if row.x.len() != d {
                    return Err(Error::Schema {
                        path: format!("model.rows[{i}].x"),
                        message: format!("expected {d} values, got {}", row.x.len()),
                    });
                }
                if row.x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Schema {
                        path: format!("model.rows[{i}].x"),
                        message: "values must be finite".to_string(),
                    });
                }
                for (prev_x, prev_y) in &parsed {
                    let same = prev_x.iter().zip(&row.x).all(|(a, b)| (a - b).abs() <= VALUE_EPS);
                    if same && prev_y.0 != row.y {
                        return Err(Error::Schema {
                            path: format!("model.rows[{i}]"),
                            message: "duplicate point with conflicting labels".to_string(),
                        });
                    }
                }
                parsed.push((row.x.clone(), Label(row.y)));
            }
            Ok(Classifier { kind: ModelKind::Table { rows: parsed }, positive, negative })
        }
    }
}

fn parse_tree(doc: &TreeDoc, ti: usize, action_set: &ActionSet) -> Result<Tree> {
    let n = doc.nodes.len();
    if n == 0 {
        return Err(Error::Schema {
            path: format!("model.trees[{ti}]"),
            message: "empty tree".to_string(),
        });
    }
    let mut nodes = Vec::with_capacity(n);
    for (ni, node) in doc.nodes.iter().enumerate() {
        let path = format!("model.trees[{ti}].nodes[{ni}]");
        match node {
            NodeDoc::Leaf { leaf } => {
                if !leaf.is_finite() {
                    return Err(Error::Schema { path, message: "leaf must be finite".to_string() });
                }
                nodes.push(TreeNode::Leaf { value: *leaf });
            }
            NodeDoc::Split { feature, threshold, left, right } => {
                let j = action_set.feature_index(feature).ok_or_else(|| Error::Schema {
                    path: path.clone(),
                    message: format!("unknown feature '{feature}'"),
                })?;
                let f = action_set.feature(j);
                if !threshold.is_finite()
                    || *threshold < f.lower_bound
                    || *threshold > f.upper_bound
                {
                    return Err(Error::Schema {
                        path,
                        message: format!(
                            "split threshold {threshold} outside bounds [{}, {}] of '{feature}'",
                            f.lower_bound, f.upper_bound
                        ),
                    });
                }
                // children strictly below the parent keeps the tree acyclic
                if *left >= n || *right >= n || *left <= ni || *right <= ni {
                    return Err(Error::Schema {
                        path,
                        message: format!(
                            "child indices ({left}, {right}) must point past node {ni} within {n} nodes"
                        ),
                    });
                }
                nodes.push(TreeNode::Split { feature: j, threshold: *threshold, left: *left, right: *right });
            }
        }
    }
    Ok(Tree { nodes })
}

/// Serialize a classifier back into the document format, naming features
/// through the action set. Re-loading the result yields an equivalent model.
pub fn to_document(model: &Classifier, action_set: &ActionSet) -> Result<String> {
    let positive_label = Some(model.positive.0);
    let negative_label = Some(model.negative.0);
    let doc = match &model.kind {
        ModelKind::Linear { weights, intercept, threshold } => {
            let mut coefficients = BTreeMap::new();
            for (j, w) in weights.iter().enumerate() {
                if *w != 0.0 {
                    coefficients.insert(action_set.feature(j).name.clone(), *w);
                }
            }
            ModelDoc::Linear {
                coefficients,
                intercept: *intercept,
                threshold: *threshold,
                positive_label,
                negative_label,
            }
        }
        ModelKind::TreeEnsemble { trees, threshold } => ModelDoc::TreeEnsemble {
            trees: trees
                .iter()
                .map(|t| TreeDoc {
                    nodes: t
                        .nodes
                        .iter()
                        .map(|n| match n {
                            TreeNode::Leaf { value } => NodeDoc::Leaf { leaf: *value },
                            TreeNode::Split { feature, threshold, left, right } => NodeDoc::Split {
                                feature: action_set.feature(*feature).name.clone(),
                                threshold: *threshold,
                                left: *left,
                                right: *right,
                            },
                        })
                        .collect(),
                })
                .collect(),
            threshold: *threshold,
            positive_label,
            negative_label,
        },
        ModelKind::Table { rows } => ModelDoc::Table {
            rows: rows
                .iter()
                .map(|(x, y)| TableRowDoc { x: x.clone(), y: y.0 })
                .collect(),
            positive_label,
            negative_label,
        },
    };
    serde_json::to_string_pretty(&doc).map_err(Error::from)
}

// ---------------------------------------------------------------------------
// Datasets

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    pub target: Label,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Load a comma-delimited dataset with a header row. Every feature declared
/// by the action set must appear as a column (any order); one extra column
/// holds integer labels. Cells are validated against feature kinds and
/// bounds, and violations name the offending data row (1-based).
pub fn load_dataset(
    path: &Path,
    action_set: &ActionSet,
    label_column: &str,
    target: Label,
) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    load_dataset_from_reader(file, action_set, label_column, target)
}

pub fn load_dataset_from_reader<R: std::io::Read>(
    reader: R,
    action_set: &ActionSet,
    label_column: &str,
    target: Label,
) -> Result<Dataset> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = csv.headers()?.clone();
    let d = action_set.d();

    let mut feature_cols: Vec<Option<usize>> = vec![None; d];
    let mut label_col: Option<usize> = None;
    for (ci, column) in header.iter().enumerate() {
        if column == label_column {
            if label_col.is_some() {
                return Err(Error::Validation(format!("duplicate label column '{column}'")));
            }
            label_col = Some(ci);
        } else if let Some(j) = action_set.feature_index(column) {
            if feature_cols[j].is_some() {
                return Err(Error::Validation(format!("duplicate column '{column}'")));
            }
            feature_cols[j] = Some(ci);
        } else {
            return Err(Error::Validation(format!("unknown column '{column}'")));
        }
    }
    let label_col =
        label_col.ok_or_else(|| Error::Validation(format!("missing label column '{label_column}'")))?;
    let feature_cols: Vec<usize> = feature_cols
        .into_iter()
        .enumerate()
        .map(|(j, c)| {
            c.ok_or_else(|| {
                Error::Validation(format!("missing column '{}'", action_set.feature(j).name))
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (ri, record) in csv.records().enumerate() {
        let record = record?;
        let row_no = ri + 1;
        let mut row = vec![0.0; d];
        for (j, &ci) in feature_cols.iter().enumerate() {
            let f = action_set.feature(j);
            let cell = record.get(ci).ok_or_else(|| Error::DatasetRow {
                row: row_no,
                message: format!("missing cell for column '{}'", f.name),
            })?;
            let value: f64 = cell.parse().map_err(|_| Error::DatasetRow {
                row: row_no,
                message: format!("unparseable value '{cell}' in column '{}'", f.name),
            })?;
            if f.kind.is_discrete() && !is_integral(value) {
                return Err(Error::DatasetRow {
                    row: row_no,
                    message: format!("column '{}' requires an integral value, got {value}", f.name),
                });
            }
            if f.kind == FeatureKind::Binary && value != 0.0 && value != 1.0 {
                return Err(Error::DatasetRow {
                    row: row_no,
                    message: format!("column '{}' is binary, got {value}", f.name),
                });
            }
            if value < f.lower_bound - VALUE_EPS || value > f.upper_bound + VALUE_EPS {
                return Err(Error::DatasetRow {
                    row: row_no,
                    message: format!(
                        "column '{}' value {value} outside bounds [{}, {}]",
                        f.name, f.lower_bound, f.upper_bound
                    ),
                });
            }
            row[j] = value;
        }
        let cell = record.get(label_col).ok_or_else(|| Error::DatasetRow {
            row: row_no,
            message: format!("missing cell for label column '{label_column}'"),
        })?;
        let label: i64 = cell.parse().map_err(|_| Error::DatasetRow {
            row: row_no,
            message: format!("unparseable label '{cell}'"),
        })?;
        rows.push(row);
        labels.push(Label(label));
    }

    Ok(Dataset {
        feature_names: action_set.features().iter().map(|f| f.name.clone()).collect(),
        rows,
        labels,
        target,
    })
}
