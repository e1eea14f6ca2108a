//! Implementations behind the four subcommands.
//!
//! Each command is a pure function from parsed arguments to a report value;
//! the binary wrapper in `lib.rs` only serializes and writes. Tests call the
//! command functions directly and byte-compare the serialized output.

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;
use recourse_core::actionability::{load_action_spec, ActionSet};
use recourse_core::attribution::{
    attribute_shapley, attribute_surrogate, build_explanation, default_kernel_width,
    make_action_aware, AttributionVector, Explanation, ScoreInput, ShapleyMode,
};
use recourse_core::models::{load_dataset, load_model, Classifier, Dataset};
use recourse_core::reachable::{enumerate_reachable, sample_reachable, ReachableSet};
use recourse_core::responsiveness::{
    sample_size, score_estimated, score_exact, triage, ResponsivenessScore, SampleSizeRegime,
    TriageStatus, TriageVerdict, TriageWitness,
};
use recourse_core::{Error, Result};

use crate::cache::{derived_seed, file_digest, row_digest, Cache};
use crate::report::{
    AuditItem, AuditReport, AuditRow, Breakdown, ExplainReport, ExplanationEntry, FeatureScore,
    MethodAudit, MethodExplanation, Provenance, RankPoint, RowExplanation, RowScores,
    SampleSizeReport, ScoreReport, Segments, TriageRecord,
};

/// Perturbation draws for the local surrogate fit.
pub const SURROGATE_SAMPLES: usize = 1_000;
/// Permutations for sampled Shapley attribution above the exact cap.
pub const SHAPLEY_PERMUTATIONS: usize = 200;
/// Largest dimension for which Shapley values are enumerated exactly.
pub const SHAPLEY_EXACT_MAX_D: usize = 15;

// ---------------------------------------------------------------------------
// Arguments

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// CSV dataset: a header row naming every declared feature plus a label column
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Action specification (JSON)
    #[arg(long, value_name = "FILE")]
    pub actions: PathBuf,
    /// Classifier document (JSON)
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Label column name in the dataset
    #[arg(long, default_value = "label", value_name = "NAME")]
    pub label_column: String,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Estimate scores from this many sampled actions per feature instead of
    /// enumerating reachable sets exactly
    #[arg(long, value_name = "N")]
    pub sample: Option<usize>,
    /// Interval level parameter: confidence intervals cover with probability 1 - alpha
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Base seed for every randomized step
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cache directory for reachable sets (safe to reuse across models and runs)
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Restrict to these 1-based dataset rows, e.g. "2,5-7" (default: all rows)
    #[arg(long, value_name = "ROWS")]
    pub rows: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Explanation method: resp, lime, shap, lime_aa, or shap_aa
    #[arg(long, default_value = "resp")]
    pub method: String,
    /// Maximum features per explanation
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Restrict to these 1-based dataset rows, e.g. "2,5-7" (default: all rows)
    #[arg(long, value_name = "ROWS")]
    pub rows: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct AuditArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated list of methods to audit
    #[arg(long, default_value = "resp,lime,shap,lime_aa,shap_aa")]
    pub method: String,
    /// Maximum features per explanation
    #[arg(long, default_value_t = 4)]
    pub k: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SampleSizeArgs {
    /// Interval level parameter: intervals cover with probability 1 - alpha
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Target half-width for the confidence interval
    #[arg(long, value_name = "E")]
    pub half_width: f64,
    /// "widest" guarantees the half-width for every outcome; "shortest" only
    /// for near-degenerate outcomes
    #[arg(long, default_value = "widest")]
    pub regime: String,
    /// Also write a JSON record here
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Methods

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Per-feature responsiveness scores, with triage for empty listings.
    Responsiveness,
    /// Local linear surrogate fit to the decision indicator.
    Surrogate,
    /// Shapley attribution of the decision margin against a lower-bound baseline.
    Shapley,
    /// Surrogate scores with non-actionable features zeroed.
    SurrogateActionAware,
    /// Shapley scores with non-actionable features zeroed.
    ShapleyActionAware,
}

impl Method {
    pub fn parse(token: &str) -> Result<Method> {
        match token {
            "resp" => Ok(Method::Responsiveness),
            "lime" => Ok(Method::Surrogate),
            "shap" => Ok(Method::Shapley),
            "lime_aa" => Ok(Method::SurrogateActionAware),
            "shap_aa" => Ok(Method::ShapleyActionAware),
            other => Err(Error::Validation(format!(
                "unknown method '{other}' (expected resp, lime, shap, lime_aa, or shap_aa)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Responsiveness => "resp",
            Method::Surrogate => "lime",
            Method::Shapley => "shap",
            Method::SurrogateActionAware => "lime_aa",
            Method::ShapleyActionAware => "shap_aa",
        }
    }
}

/// Parse a comma-separated method list, preserving order and dropping repeats.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for token in list.split(',') {
        let token = token.trim();
        if token.is_empty() {
            return Err(Error::Validation("empty method name in method list".to_string()));
        }
        let m = Method::parse(token)?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Shared plumbing

struct Loaded {
    action_set: ActionSet,
    model: Classifier,
    dataset: Dataset,
    provenance: Provenance,
}

fn load(input: &InputArgs, run: &RunArgs) -> Result<Loaded> {
    if !(run.alpha > 0.0 && run.alpha < 1.0) {
        return Err(Error::InvalidAlpha(run.alpha));
    }
    if run.sample == Some(0) {
        return Err(Error::Validation("sample count must be at least 1".to_string()));
    }
    let actions_text = read_input(&input.actions)?;
    let action_set = load_action_spec(&actions_text)?;
    let model_text = read_input(&input.model)?;
    let model = load_model(&model_text, &action_set)?;
    if std::fs::metadata(&input.data).is_err() {
        return Err(Error::Validation(format!("cannot read {}", input.data.display())));
    }
    let dataset = load_dataset(&input.data, &action_set, &input.label_column, model.positive)?;
    let provenance = Provenance {
        data_path: input.data.display().to_string(),
        data_sha256: file_digest(&input.data)?,
        actions_path: input.actions.display().to_string(),
        actions_sha256: file_digest(&input.actions)?,
        model_path: input.model.display().to_string(),
        model_sha256: file_digest(&input.model)?,
        label_column: input.label_column.clone(),
        target_label: model.positive.0,
        mode: if run.sample.is_some() { "sampled" } else { "exact" }.to_string(),
        sample: run.sample,
        alpha: run.alpha,
        seed: run.seed,
    };
    Ok(Loaded { action_set, model, dataset, provenance })
}

fn read_input(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))
}

fn open_cache(run: &RunArgs, provenance: &Provenance) -> Result<Option<Cache>> {
    match &run.cache_dir {
        Some(root) => Ok(Some(Cache::open(root, &provenance.actions_sha256)?)),
        None => Ok(None),
    }
}

/// 1-based row numbers to process; `None` selects every row.
fn select_rows(spec: Option<&str>, n: usize) -> Result<BTreeSet<usize>> {
    let Some(spec) = spec else {
        return Ok((1..=n).collect());
    };
    let mut out = BTreeSet::new();
    for piece in spec.split(',') {
        let piece = piece.trim();
        let (lo, hi) = match piece.split_once('-') {
            Some((a, b)) => (parse_row(a)?, parse_row(b)?),
            None => {
                let v = parse_row(piece)?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(Error::Validation(format!("bad row range '{piece}'")));
        }
        if hi > n {
            return Err(Error::Validation(format!(
                "row {hi} is out of range: the dataset has {n} rows"
            )));
        }
        out.extend(lo..=hi);
    }
    Ok(out)
}

fn parse_row(s: &str) -> Result<usize> {
    let v: usize = s
        .trim()
        .parse()
        .map_err(|_| Error::Validation(format!("bad row number '{}'", s.trim())))?;
    if v == 0 {
        return Err(Error::Validation("rows are numbered from 1".to_string()));
    }
    Ok(v)
}

fn fetch_exact(
    x: &[f64],
    j: usize,
    rdigest: &str,
    action_set: &ActionSet,
    cache: Option<&Cache>,
) -> Result<ReachableSet> {
    let key = Cache::key(rdigest, j, "exact");
    if let Some(c) = cache {
        if let Some(set) = c.load(&key, x, j) {
            return Ok(set);
        }
    }
    let set = enumerate_reachable(x, j, action_set)?;
    if let Some(c) = cache {
        c.store(&key, &set)?;
    }
    Ok(set)
}

/// `None` means the feature has no admissible intervention at all, which is
/// an exact empty reachable set rather than a sampling failure.
fn fetch_sampled(
    x: &[f64],
    j: usize,
    rdigest: &str,
    action_set: &ActionSet,
    n: usize,
    seed: u64,
    cache: Option<&Cache>,
) -> Result<Option<ReachableSet>> {
    let key = Cache::key(rdigest, j, &format!("s{n}-seed{seed}"));
    if let Some(c) = cache {
        if let Some(set) = c.load(&key, x, j) {
            return Ok(Some(set));
        }
    }
    match sample_reachable(x, j, action_set, n, seed) {
        Ok(set) => {
            if let Some(c) = cache {
                c.store(&key, &set)?;
            }
            Ok(Some(set))
        }
        Err(Error::EmptyInterventionSet { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Responsiveness scores for every feature of one row, exact or sampled.
fn score_row(
    x: &[f64],
    rdigest: &str,
    action_set: &ActionSet,
    model: &Classifier,
    run: &RunArgs,
    cache: Option<&Cache>,
) -> Result<Vec<ResponsivenessScore>> {
    let target = model.positive;
    let d = action_set.d();
    let mut scores = Vec::with_capacity(d);
    for j in 0..d {
        let score = match run.sample {
            None => {
                let set = fetch_exact(x, j, rdigest, action_set, cache)?;
                score_exact(&set, model, target)?
            }
            Some(n) => {
                let seed = derived_seed(run.seed, rdigest, &format!("f{j}"));
                match fetch_sampled(x, j, rdigest, action_set, n, seed, cache)? {
                    Some(set) => score_estimated(&set, model, target, run.alpha)?,
                    None => ResponsivenessScore::empty_exact(j),
                }
            }
        };
        scores.push(score);
    }
    Ok(scores)
}

/// Per-row inputs shared by every explanation method.
struct RowCtx<'a> {
    x: &'a [f64],
    rdigest: &'a str,
    action_set: &'a ActionSet,
    model: &'a Classifier,
    run: &'a RunArgs,
}

fn attribution_for(method: Method, ctx: &RowCtx) -> Result<AttributionVector> {
    let base = match method {
        Method::Surrogate | Method::SurrogateActionAware => {
            let seed = derived_seed(ctx.run.seed, ctx.rdigest, "surrogate");
            attribute_surrogate(
                ctx.x,
                ctx.model,
                SURROGATE_SAMPLES,
                default_kernel_width(ctx.x.len()),
                seed,
            )?
        }
        Method::Shapley | Method::ShapleyActionAware => {
            let seed = derived_seed(ctx.run.seed, ctx.rdigest, "shapley");
            let baseline: Vec<f64> =
                ctx.action_set.features().iter().map(|f| f.lower_bound).collect();
            let mode = if ctx.x.len() <= SHAPLEY_EXACT_MAX_D {
                ShapleyMode::Exact
            } else {
                ShapleyMode::PermutationSampled
            };
            attribute_shapley(ctx.x, ctx.model, &baseline, mode, SHAPLEY_PERMUTATIONS, seed)?
        }
        Method::Responsiveness => {
            return Err(Error::Validation(
                "responsiveness is not an attribution method".to_string(),
            ))
        }
    };
    match method {
        Method::SurrogateActionAware | Method::ShapleyActionAware => {
            make_action_aware(&base, ctx.action_set)
        }
        _ => Ok(base),
    }
}

fn explanation_for(
    method: Method,
    ctx: &RowCtx,
    scores: &[ResponsivenessScore],
    k: usize,
) -> Result<Explanation> {
    match method {
        Method::Responsiveness => build_explanation(ScoreInput::Responsiveness(scores), k, true),
        _ => {
            let attr = attribution_for(method, ctx)?;
            build_explanation(ScoreInput::Attribution(&attr), k, true)
        }
    }
}

fn triage_record(verdict: &TriageVerdict, action_set: &ActionSet) -> TriageRecord {
    let status = match verdict.status {
        TriageStatus::SingleFeatureRecourse => "single_feature_recourse",
        TriageStatus::JointOnlyRecourse => "joint_only_recourse",
        TriageStatus::FixedPrediction => "fixed_prediction",
        TriageStatus::Undetermined => "undetermined",
    }
    .to_string();
    let (witness_feature, witness_action) = match &verdict.witness {
        Some(TriageWitness::Feature(j)) => (Some(action_set.feature(*j).name.clone()), None),
        Some(TriageWitness::JointAction(a)) => (None, Some(a.clone())),
        None => (None, None),
    };
    TriageRecord { status, witness_feature, witness_action }
}

fn feature_score(score: &ResponsivenessScore, action_set: &ActionSet) -> FeatureScore {
    FeatureScore {
        feature: action_set.feature(score.feature).name.clone(),
        estimate: score.estimate,
        exact: score.exact,
        successes: score.successes,
        trials: score.trials,
        corrected: score.corrected,
        interval: score.interval.map(|(lo, hi)| [lo, hi]),
    }
}

fn denied(model: &Classifier, x: &[f64]) -> Result<bool> {
    Ok(model.predict(x)? != model.positive)
}

// ---------------------------------------------------------------------------
// Commands

pub fn cmd_score(args: &ScoreArgs) -> Result<ScoreReport> {
    let loaded = load(&args.input, &args.run)?;
    let cache = open_cache(&args.run, &loaded.provenance)?;
    let selected = select_rows(args.rows.as_deref(), loaded.dataset.len())?;
    let mut rows = Vec::new();
    for (i, x) in loaded.dataset.rows.iter().enumerate() {
        let row_no = i + 1;
        if !selected.contains(&row_no) || !denied(&loaded.model, x)? {
            continue;
        }
        let rdigest = row_digest(x);
        let scores =
            score_row(x, &rdigest, &loaded.action_set, &loaded.model, &args.run, cache.as_ref())?;
        rows.push(RowScores {
            row: row_no,
            x: x.clone(),
            features: scores.iter().map(|s| feature_score(s, &loaded.action_set)).collect(),
        });
    }
    Ok(ScoreReport {
        provenance: loaded.provenance,
        n_rows: loaded.dataset.len(),
        n_denied: rows.len(),
        rows,
    })
}

pub fn cmd_explain(args: &ExplainArgs) -> Result<ExplainReport> {
    let method = Method::parse(&args.method)?;
    let loaded = load(&args.input, &args.run)?;
    let cache = open_cache(&args.run, &loaded.provenance)?;
    let selected = select_rows(args.rows.as_deref(), loaded.dataset.len())?;
    let action_set = &loaded.action_set;
    let model = &loaded.model;
    let mut rows = Vec::new();
    for (i, x) in loaded.dataset.rows.iter().enumerate() {
        let row_no = i + 1;
        if !selected.contains(&row_no) || !denied(model, x)? {
            continue;
        }
        let rdigest = row_digest(x);
        // the responsiveness method also certifies what an empty listing means
        let (scores, triage_rec) = if method == Method::Responsiveness {
            let scores = score_row(x, &rdigest, action_set, model, &args.run, cache.as_ref())?;
            let verdict = triage(x, &scores, action_set, model, model.positive)?;
            let record = triage_record(&verdict, action_set);
            (scores, Some(record))
        } else {
            (Vec::new(), None)
        };
        let ctx = RowCtx { x, rdigest: &rdigest, action_set, model, run: &args.run };
        let expl = explanation_for(method, &ctx, &scores, args.k)?;
        rows.push(RowExplanation {
            row: row_no,
            items: expl
                .items
                .iter()
                .map(|it| ExplanationEntry {
                    feature: action_set.feature(it.feature).name.clone(),
                    score: it.score,
                })
                .collect(),
            escalate: expl.escalate,
            triage: triage_rec,
        });
    }
    Ok(ExplainReport {
        provenance: loaded.provenance,
        method: method.name().to_string(),
        k: args.k,
        n_rows: loaded.dataset.len(),
        n_denied: rows.len(),
        rows,
    })
}

pub fn cmd_audit(args: &AuditArgs) -> Result<AuditReport> {
    let methods = parse_methods(&args.method)?;
    let loaded = load(&args.input, &args.run)?;
    let cache = open_cache(&args.run, &loaded.provenance)?;
    let action_set = &loaded.action_set;
    let model = &loaded.model;
    let n_rows = loaded.dataset.len();

    let mut audit_rows = Vec::with_capacity(n_rows);
    let mut statuses: Vec<TriageStatus> = Vec::new();
    // per denied row, per method: the responsiveness flag of each listed item
    let mut flags: Vec<Vec<Vec<bool>>> = Vec::new();

    for (i, x) in loaded.dataset.rows.iter().enumerate() {
        let row_no = i + 1;
        if !denied(model, x)? {
            audit_rows.push(AuditRow {
                row: row_no,
                denied: false,
                triage: None,
                explanations: Vec::new(),
            });
            continue;
        }
        let rdigest = row_digest(x);
        let scores = score_row(x, &rdigest, action_set, model, &args.run, cache.as_ref())?;
        let verdict = triage(x, &scores, action_set, model, model.positive)?;
        let ctx = RowCtx { x, rdigest: &rdigest, action_set, model, run: &args.run };
        let mut explanations = Vec::with_capacity(methods.len());
        let mut row_flags = Vec::with_capacity(methods.len());
        for &m in &methods {
            let expl = explanation_for(m, &ctx, &scores, args.k)?;
            let items: Vec<AuditItem> = expl
                .items
                .iter()
                .map(|it| AuditItem {
                    feature: action_set.feature(it.feature).name.clone(),
                    score: it.score,
                    responsive: scores[it.feature].estimate > 0.0,
                })
                .collect();
            row_flags.push(items.iter().map(|it| it.responsive).collect::<Vec<bool>>());
            explanations.push(MethodExplanation {
                method: m.name().to_string(),
                escalate: expl.escalate,
                items,
            });
        }
        statuses.push(verdict.status);
        flags.push(row_flags);
        audit_rows.push(AuditRow {
            row: row_no,
            denied: true,
            triage: Some(triage_record(&verdict, action_set)),
            explanations,
        });
    }

    let n_denied = statuses.len();
    let pct = |count: usize, denom: usize| {
        if denom == 0 {
            0.0
        } else {
            100.0 * count as f64 / denom as f64
        }
    };
    let count_status =
        |s: TriageStatus| statuses.iter().filter(|&&status| status == s).count();
    let n_undetermined = count_status(TriageStatus::Undetermined);
    let segments = Segments {
        pct_fixed: pct(count_status(TriageStatus::FixedPrediction), n_denied),
        pct_single_feature: pct(count_status(TriageStatus::SingleFeatureRecourse), n_denied),
        pct_joint_only: pct(count_status(TriageStatus::JointOnlyRecourse), n_denied),
        pct_undetermined: pct(n_undetermined, n_denied),
    };
    let complete = n_undetermined == 0;
    let warning = (!complete).then(|| {
        format!(
            "{n_undetermined} of {n_denied} denied rows have undetermined recourse status; \
             the segment split is not a certified decomposition"
        )
    });

    let mut method_audits = Vec::with_capacity(methods.len());
    for (mi, &m) in methods.iter().enumerate() {
        let presented: Vec<&Vec<bool>> =
            flags.iter().map(|row| &row[mi]).filter(|f| !f.is_empty()).collect();
        let presented_rows = presented.len();
        let total_items: usize = presented.iter().map(|f| f.len()).sum();
        let all_unresp = presented.iter().filter(|f| f.iter().all(|&r| !r)).count();
        let any_resp = presented.iter().filter(|f| f.iter().any(|&r| r)).count();
        let all_resp = presented.iter().filter(|f| f.iter().all(|&r| r)).count();
        let mut rank_responsiveness = Vec::with_capacity(args.k);
        for rank in 1..=args.k {
            let eligible = presented.iter().filter(|f| f.len() >= rank).count();
            let responsive =
                presented.iter().filter(|f| f.len() >= rank && f[rank - 1]).count();
            rank_responsiveness.push(RankPoint {
                rank,
                rows: eligible,
                pct_responsive: pct(responsive, eligible),
            });
        }
        method_audits.push(MethodAudit {
            method: m.name().to_string(),
            presented_rows,
            pct_presented: pct(presented_rows, n_denied),
            mean_features_highlighted: if presented_rows == 0 {
                0.0
            } else {
                total_items as f64 / presented_rows as f64
            },
            of_presented: Breakdown {
                pct_all_unresponsive: pct(all_unresp, presented_rows),
                pct_at_least_one_responsive: pct(any_resp, presented_rows),
                pct_all_responsive: pct(all_resp, presented_rows),
            },
            of_all_denied: Breakdown {
                pct_all_unresponsive: pct(all_unresp, n_denied),
                pct_at_least_one_responsive: pct(any_resp, n_denied),
                pct_all_responsive: pct(all_resp, n_denied),
            },
            rank_responsiveness,
        });
    }

    Ok(AuditReport {
        provenance: loaded.provenance,
        k: args.k,
        n_rows,
        n_denied,
        pct_denied: pct(n_denied, n_rows),
        segments,
        complete,
        warning,
        methods: method_audits,
        rows: audit_rows,
    })
}

pub fn cmd_samplesize(args: &SampleSizeArgs) -> Result<SampleSizeReport> {
    let regime: SampleSizeRegime = args.regime.parse()?;
    let n = sample_size(args.alpha, args.half_width, regime)?;
    Ok(SampleSizeReport {
        alpha: args.alpha,
        half_width: args.half_width,
        regime: args.regime.clone(),
        n,
    })
}
