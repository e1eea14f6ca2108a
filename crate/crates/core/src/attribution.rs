//! Baseline feature-attribution methods — a local weighted-surrogate fit and
//! Shapley values — plus their action-aware variants and the top-k
//! explanation builder used by the audit pipeline.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::actionability::ActionSet;
use crate::error::{Error, Result};
use crate::models::Classifier;
use crate::responsiveness::ResponsivenessScore;

/// Largest dimension for exact Shapley enumeration (2^d coalitions).
pub const EXACT_SHAPLEY_LIMIT: usize = 15;

/// Ridge strength for the surrogate fit's singular-matrix fallback.
const RIDGE_LAMBDA: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AttributionVector {
    /// One importance score per feature.
    pub scores: Vec<f64>,
    /// Method tag: "surrogate" or "shapley".
    pub method: String,
    /// Reference point for methods that use one.
    pub baseline: Option<Vec<f64>>,
    /// Whether non-actionable features have been zeroed.
    pub action_aware: bool,
    /// True when the surrogate fit needed the ridge fallback.
    pub ridge_fallback: bool,
}

/// Default kernel width for the surrogate fit: 0.75 * sqrt(d), matching the
/// usual heuristic for exponentially-decaying locality weights.
pub fn default_kernel_width(d: usize) -> f64 {
    0.75 * (d as f64).sqrt()
}

fn positive_indicator(model: &Classifier, point: &[f64]) -> Result<f64> {
    match model.predict(point) {
        Ok(label) if label == model.positive => Ok(1.0),
        Ok(_) | Err(Error::OffTable) => Ok(0.0),
        Err(e) => Err(e),
    }
}

fn margin_or_zero(model: &Classifier, point: &[f64]) -> Result<f64> {
    match model.score(point) {
        Ok(v) => Ok(v),
        Err(Error::OffTable) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Local surrogate attribution: fit a linear model to the positive-class
/// indicator over Gaussian perturbations of `x`, weighting each sample by
/// exp(-dist^2 / kernel_width^2). The coefficients are the scores. A
/// singular fit falls back to a ridge solve and flags the result.
pub fn attribute_surrogate(
    x: &[f64],
    model: &Classifier,
    n_samples: usize,
    kernel_width: f64,
    seed: u64,
) -> Result<AttributionVector> {
    let d = x.len();
    if n_samples < d + 1 {
        return Err(Error::Validation(format!(
            "surrogate fit needs at least {} samples for {} features, got {n_samples}",
            d + 1,
            d
        )));
    }
    if !kernel_width.is_finite() || kernel_width <= 0.0 {
        return Err(Error::Validation(format!(
            "kernel width must be positive, got {kernel_width}"
        )));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    // design matrix over centered offsets with an intercept column
    let mut design = DMatrix::<f64>::zeros(n_samples, d + 1);
    let mut response = DVector::<f64>::zeros(n_samples);
    let mut weights = DVector::<f64>::zeros(n_samples);
    let mut point = vec![0.0; d];
    for i in 0..n_samples {
        let mut dist2 = 0.0;
        design[(i, 0)] = 1.0;
        for j in 0..d {
            let eta: f64 = rng.sample(StandardNormal);
            design[(i, j + 1)] = eta;
            point[j] = x[j] + eta;
            dist2 += eta * eta;
        }
        response[i] = positive_indicator(model, &point)?;
        weights[i] = (-dist2 / (kernel_width * kernel_width)).exp();
    }

    // weighted normal equations: (X^T W X) beta = X^T W y
    let xtw = design.transpose() * DMatrix::from_diagonal(&weights);
    let a = &xtw * &design;
    let b = &xtw * &response;
    let (solution, ridge_fallback) = match a.clone().lu().solve(&b) {
        Some(beta) => (beta, false),
        None => {
            let ridged = a + DMatrix::identity(d + 1, d + 1) * RIDGE_LAMBDA;
            match ridged.lu().solve(&b) {
                Some(beta) => (beta, true),
                None => {
                    return Err(Error::Validation(
                        "surrogate design matrix is singular even under ridge".to_string(),
                    ))
                }
            }
        }
    };

    Ok(AttributionVector {
        scores: solution.iter().skip(1).copied().collect(),
        method: "surrogate".to_string(),
        baseline: None,
        action_aware: false,
        ridge_fallback,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapleyMode {
    Exact,
    PermutationSampled,
}

/// Shapley attribution of the decision margin. The value of a coalition is
/// the model margin at the point taking coalition features from `x` and the
/// rest from `baseline`. Exact mode enumerates all coalitions (d <= 15);
/// sampled mode averages marginal contributions over seeded permutations.
pub fn attribute_shapley(
    x: &[f64],
    model: &Classifier,
    baseline: &[f64],
    mode: ShapleyMode,
    n_permutations: usize,
    seed: u64,
) -> Result<AttributionVector> {
    let d = x.len();
    if baseline.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: baseline.len() });
    }
    let scores = match mode {
        ShapleyMode::Exact => exact_shapley(x, model, baseline)?,
        ShapleyMode::PermutationSampled => {
            if n_permutations == 0 {
                return Err(Error::Validation(
                    "sampled Shapley needs at least one permutation".to_string(),
                ));
            }
            sampled_shapley(x, model, baseline, n_permutations, seed)?
        }
    };
    Ok(AttributionVector {
        scores,
        method: "shapley".to_string(),
        baseline: Some(baseline.to_vec()),
        action_aware: false,
        ridge_fallback: false,
    })
}

fn coalition_point(x: &[f64], baseline: &[f64], mask: u32) -> Vec<f64> {
    x.iter()
        .zip(baseline)
        .enumerate()
        .map(|(j, (xi, bi))| if mask & (1 << j) != 0 { *xi } else { *bi })
        .collect()
}

fn exact_shapley(x: &[f64], model: &Classifier, baseline: &[f64]) -> Result<Vec<f64>> {
    let d = x.len();
    if d > EXACT_SHAPLEY_LIMIT {
        return Err(Error::Validation(format!(
            "exact Shapley enumeration is limited to {EXACT_SHAPLEY_LIMIT} features, got {d}"
        )));
    }
    let full = 1u32 << d;
    let mut values = vec![0.0; full as usize];
    for mask in 0..full {
        values[mask as usize] = margin_or_zero(model, &coalition_point(x, baseline, mask))?;
    }

    // weight for a coalition of size s: s! (d-1-s)! / d!
    let mut factorial = vec![1.0f64; d + 1];
    for i in 1..=d {
        factorial[i] = factorial[i - 1] * i as f64;
    }
    let weight = |s: usize| factorial[s] * factorial[d - 1 - s] / factorial[d];

    let mut scores = vec![0.0; d];
    for (j, score) in scores.iter_mut().enumerate() {
        let bit = 1u32 << j;
        let mut phi = 0.0;
        for mask in 0..full {
            if mask & bit != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            phi += weight(s) * (values[(mask | bit) as usize] - values[mask as usize]);
        }
        *score = phi;
    }
    Ok(scores)
}

fn sampled_shapley(
    x: &[f64],
    model: &Classifier,
    baseline: &[f64],
    n_permutations: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let d = x.len();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..d).collect();
    let mut scores = vec![0.0; d];
    let mut point = baseline.to_vec();
    for _ in 0..n_permutations {
        order.shuffle(&mut rng);
        point.copy_from_slice(baseline);
        let mut prev = margin_or_zero(model, &point)?;
        for &j in &order {
            point[j] = x[j];
            let cur = margin_or_zero(model, &point)?;
            scores[j] += cur - prev;
            prev = cur;
        }
    }
    for s in &mut scores {
        *s /= n_permutations as f64;
    }
    Ok(scores)
}

/// Zero the scores of features the action set declares non-actionable.
/// Idempotent; everything else is preserved.
pub fn make_action_aware(
    attribution: &AttributionVector,
    action_set: &ActionSet,
) -> Result<AttributionVector> {
    if attribution.scores.len() != action_set.d() {
        return Err(Error::DimensionMismatch {
            expected: action_set.d(),
            actual: attribution.scores.len(),
        });
    }
    let mut out = attribution.clone();
    for (j, score) in out.scores.iter_mut().enumerate() {
        if !action_set.feature(j).actionable {
            *score = 0.0;
        }
    }
    out.action_aware = true;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Explanations

#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationItem {
    pub feature: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    /// Highest-ranked features, best first, at most k.
    pub items: Vec<ExplanationItem>,
    /// Set when responsiveness scoring found nothing positive: the listing
    /// is withheld and the case needs triage escalation instead.
    pub escalate: bool,
}

pub enum ScoreInput<'a> {
    Attribution(&'a AttributionVector),
    Responsiveness(&'a [ResponsivenessScore]),
}

/// Rank features and keep the top k: attribution scores rank by absolute
/// value, responsiveness scores by the estimate itself. `require_positive`
/// drops exact zeros, so the list may come up short.
pub fn build_explanation(input: ScoreInput<'_>, k: usize, require_positive: bool) -> Result<Explanation> {
    if k == 0 {
        return Err(Error::Validation("explanation size k must be at least 1".to_string()));
    }
    let (mut ranked, escalate): (Vec<ExplanationItem>, bool) = match input {
        ScoreInput::Attribution(attr) => {
            let items = attr
                .scores
                .iter()
                .enumerate()
                .map(|(feature, &score)| ExplanationItem { feature, score })
                .collect();
            (items, false)
        }
        ScoreInput::Responsiveness(scores) => {
            let items: Vec<ExplanationItem> = scores
                .iter()
                .map(|s| ExplanationItem { feature: s.feature, score: s.estimate })
                .collect();
            let escalate = items.iter().all(|i| i.score == 0.0);
            (items, escalate)
        }
    };
    let key = |item: &ExplanationItem| item.score.abs();
    ranked.sort_by(|a, b| key(b).total_cmp(&key(a)).then(a.feature.cmp(&b.feature)));
    if require_positive {
        ranked.retain(|i| key(i) != 0.0);
    }
    ranked.truncate(k);
    Ok(Explanation { items: ranked, escalate })
}
