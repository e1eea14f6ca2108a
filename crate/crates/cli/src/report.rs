//! Report documents emitted by the CLI.
//!
//! Every report serializes to pretty-printed JSON with a stable field order
//! (declaration order) and no maps, timestamps, or host-dependent content, so
//! a run with identical inputs and flags produces a byte-identical document.

use serde::{Deserialize, Serialize};

/// Where a report came from: input files with content digests plus the flags
/// that shaped the computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub data_path: String,
    pub data_sha256: String,
    pub actions_path: String,
    pub actions_sha256: String,
    pub model_path: String,
    pub model_sha256: String,
    pub label_column: String,
    /// Label treated as the favorable outcome (the model's positive label).
    pub target_label: i64,
    /// "exact" for enumerated reachable sets, "sampled" for estimated scores.
    pub mode: String,
    /// Accepted draws per reachable set when mode is "sampled".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<usize>,
    /// Interval level parameter (intervals cover with probability 1 - alpha).
    pub alpha: f64,
    /// Base seed for every randomized step in the run.
    pub seed: u64,
}

/// Per-feature responsiveness for one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: String,
    /// Fraction of the reachable set the model maps to the target label.
    pub estimate: f64,
    /// True when the reachable set was enumerated (or provably empty).
    pub exact: bool,
    pub successes: u64,
    pub trials: u64,
    /// Center-corrected estimate, present for sampled scores.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrected: Option<f64>,
    /// Two-sided confidence interval, present for sampled scores.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowScores {
    /// 1-based position in the dataset.
    pub row: usize,
    pub x: Vec<f64>,
    pub features: Vec<FeatureScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub provenance: Provenance,
    pub n_rows: usize,
    pub n_denied: usize,
    /// Denied rows only: individuals already holding the target need no recourse.
    pub rows: Vec<RowScores>,
}

/// Certified recourse status for one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageRecord {
    /// "single_feature_recourse", "joint_only_recourse", "fixed_prediction",
    /// or "undetermined".
    pub status: String,
    /// Feature with positive responsiveness, for single-feature recourse.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_feature: Option<String>,
    /// Feasible joint action attaining the target, for joint-only recourse.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_action: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationEntry {
    pub feature: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowExplanation {
    pub row: usize,
    /// Top-ranked features, best first, at most k; empty when the method
    /// found nothing worth listing.
    pub items: Vec<ExplanationEntry>,
    /// True when responsiveness scoring found nothing positive: the listing
    /// is withheld and the case needs individual review instead.
    pub escalate: bool,
    /// Attached for the responsiveness method only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triage: Option<TriageRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub provenance: Provenance,
    pub method: String,
    pub k: usize,
    pub n_rows: usize,
    pub n_denied: usize,
    pub rows: Vec<RowExplanation>,
}

/// Denied rows split by certified recourse difficulty; percentages are of
/// the denied population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segments {
    pub pct_fixed: f64,
    pub pct_single_feature: f64,
    pub pct_joint_only: f64,
    pub pct_undetermined: f64,
}

/// How many rows fall in each responsiveness category of an explanation's
/// listed features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub pct_all_unresponsive: f64,
    pub pct_at_least_one_responsive: f64,
    pub pct_all_responsive: f64,
}

/// Fraction of explanations whose item at a given rank names a responsive
/// feature, among explanations long enough to have that rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankPoint {
    pub rank: usize,
    pub rows: usize,
    pub pct_responsive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodAudit {
    pub method: String,
    /// Denied rows for which the method produced a non-empty listing.
    pub presented_rows: usize,
    pub pct_presented: f64,
    /// Mean listing length over presented rows.
    pub mean_features_highlighted: f64,
    /// Denominator: presented rows.
    pub of_presented: Breakdown,
    /// Denominator: all denied rows (unpresented rows count as all-unresponsive
    /// vacuously false and all-responsive vacuously false).
    pub of_all_denied: Breakdown,
    pub rank_responsiveness: Vec<RankPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditItem {
    pub feature: String,
    pub score: f64,
    /// True when this row's responsiveness for the feature is positive.
    pub responsive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodExplanation {
    pub method: String,
    pub escalate: bool,
    pub items: Vec<AuditItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub row: usize,
    pub denied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triage: Option<TriageRecord>,
    pub explanations: Vec<MethodExplanation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub provenance: Provenance,
    pub k: usize,
    pub n_rows: usize,
    pub n_denied: usize,
    pub pct_denied: f64,
    pub segments: Segments,
    /// True when every denied row received a certified triage verdict.
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    pub methods: Vec<MethodAudit>,
    pub rows: Vec<AuditRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeReport {
    pub alpha: f64,
    pub half_width: f64,
    pub regime: String,
    pub n: u64,
}
