//! Responsiveness scores — the probability that acting on a single feature
//! changes the prediction to the target — plus confidence machinery,
//! sample-size planning, score variants, response classification, and the
//! recourse triage that separates fixed predictions from joint-only recourse.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::actionability::{ActionSet, Sign, VALUE_EPS};
use crate::error::{Error, Result};
use crate::models::{Classifier, Label, ModelKind};
use crate::reachable::ReachableSet;
use crate::solver::{check_feasibility, check_joint_feasibility, designation_ok};

/// Node cap for the robust-score perturbation enumeration.
pub const DEFAULT_PERTURBATION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ResponsivenessScore {
    pub feature: usize,
    /// Plain fraction S/N (or 0 when N = 0).
    pub estimate: f64,
    pub exact: bool,
    /// Two-sided interval at confidence 1 - alpha, sampled scores only.
    pub interval: Option<(f64, f64)>,
    /// Center-corrected estimator the interval is built around.
    pub corrected: Option<f64>,
    pub successes: u64,
    pub trials: u64,
    pub alpha: Option<f64>,
}

impl ResponsivenessScore {
    /// Trivially-zero score for a feature with nothing reachable.
    pub fn empty_exact(feature: usize) -> Self {
        ResponsivenessScore {
            feature,
            estimate: 0.0,
            exact: true,
            interval: None,
            corrected: None,
            successes: 0,
            trials: 0,
            alpha: None,
        }
    }
}

fn count_hits(reachable: &ReachableSet, model: &Classifier, target: Label) -> Result<u64> {
    let mut hits = 0;
    for p in &reachable.points {
        // a point a lookup-table model has no entry for counts as a miss
        match model.predict(p) {
            Ok(label) if label == target => hits += 1,
            Ok(_) | Err(Error::OffTable) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(hits)
}

/// Exact responsiveness: the fraction of the enumerated reachable set the
/// model maps to the target. An empty set scores 0 with zero trials.
pub fn score_exact(reachable: &ReachableSet, model: &Classifier, target: Label) -> Result<ResponsivenessScore> {
    if !reachable.exact {
        return Err(Error::Validation(
            "exact scoring requires an enumerated reachable set".to_string(),
        ));
    }
    let n = reachable.points.len() as u64;
    let s = count_hits(reachable, model, target)?;
    Ok(ResponsivenessScore {
        feature: reachable.feature,
        estimate: if n == 0 { 0.0 } else { s as f64 / n as f64 },
        exact: true,
        interval: None,
        corrected: None,
        successes: s,
        trials: n,
        alpha: None,
    })
}

/// Estimated responsiveness from a sampled reachable set, with a
/// center-corrected two-sided confidence interval at level 1 - alpha.
pub fn score_estimated(
    reachable: &ReachableSet,
    model: &Classifier,
    target: Label,
    alpha: f64,
) -> Result<ResponsivenessScore> {
    if reachable.exact {
        return Err(Error::Validation(
            "estimated scoring expects a sampled reachable set".to_string(),
        ));
    }
    let n = reachable.points.len() as u64;
    if n == 0 {
        return Err(Error::Validation("sampled reachable set is empty".to_string()));
    }
    let s = count_hits(reachable, model, target)?;
    let (corrected, half_width) = agresti_coull(s, n, alpha)?;
    Ok(ResponsivenessScore {
        feature: reachable.feature,
        estimate: s as f64 / n as f64,
        exact: false,
        interval: Some(((corrected - half_width).max(0.0), (corrected + half_width).min(1.0))),
        corrected: Some(corrected),
        successes: s,
        trials: n,
        alpha: Some(alpha),
    })
}

fn kappa(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || !alpha.is_finite() {
        return Err(Error::InvalidAlpha(alpha));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

/// Center-corrected binomial interval: returns (corrected estimate, half
/// width). The corrected estimate shrinks S/N toward 1/2 by adding kappa^2/2
/// pseudo-counts of each kind, which keeps coverage honest at the extremes.
pub fn agresti_coull(successes: u64, trials: u64, alpha: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::Validation("interval requires at least one trial".to_string()));
    }
    if successes > trials {
        return Err(Error::Validation(format!(
            "successes {successes} exceed trials {trials}"
        )));
    }
    let k = kappa(alpha)?;
    let k2 = k * k;
    let n = trials as f64;
    let corrected = (successes as f64 + k2 / 2.0) / (n + k2);
    let half_width = k * (corrected * (1.0 - corrected) / (n + k2)).sqrt();
    Ok((corrected, half_width))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSizeRegime {
    /// Width at S = 0 (or symmetrically S = N): the narrowest the interval
    /// can be at a given N, so this N only suffices for near-degenerate rates.
    Shortest,
    /// Width at S = N/2, where the interval is widest; this N guarantees the
    /// half-width bound for every possible outcome.
    Widest,
}

impl std::str::FromStr for SampleSizeRegime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shortest" => Ok(SampleSizeRegime::Shortest),
            "widest" => Ok(SampleSizeRegime::Widest),
            other => Err(Error::Validation(format!(
                "unknown regime '{other}' (expected 'shortest' or 'widest')"
            ))),
        }
    }
}

fn half_width_at(n: u64, k: f64, regime: SampleSizeRegime) -> f64 {
    let k2 = k * k;
    let nf = n as f64;
    match regime {
        SampleSizeRegime::Shortest => {
            let corrected = (k2 / 2.0) / (nf + k2);
            k * (corrected * (1.0 - corrected) / (nf + k2)).sqrt()
        }
        // at S = N/2 the corrected estimate is exactly 1/2
        SampleSizeRegime::Widest => k / (2.0 * (nf + k2).sqrt()),
    }
}

/// Minimal N whose interval half-width is at most `half_width` under the
/// chosen regime, found by monotone search.
pub fn sample_size(alpha: f64, half_width: f64, regime: SampleSizeRegime) -> Result<u64> {
    if !half_width.is_finite() || half_width <= 0.0 {
        return Err(Error::Validation(format!("half-width must be positive, got {half_width}")));
    }
    let k = kappa(alpha)?;
    let mut hi: u64 = 1;
    while half_width_at(hi, k, regime) > half_width {
        hi = hi.checked_mul(2).ok_or_else(|| {
            Error::Validation("sample size search overflowed".to_string())
        })?;
    }
    let mut lo: u64 = if hi == 1 { 1 } else { hi / 2 };
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if half_width_at(mid, k, regime) <= half_width {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(hi)
}

/// Weighted responsiveness: sum of `weight(a)` over reachable actions whose
/// endpoint the model maps to the target; normalized by the total weight
/// when `normalize` is set. Weights must be nonnegative and finite.
pub fn score_cost_weighted<F>(
    reachable: &ReachableSet,
    model: &Classifier,
    target: Label,
    weight: F,
    normalize: bool,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut num = 0.0;
    let mut den = 0.0;
    for (point, action) in reachable.points.iter().zip(reachable.actions()) {
        let w = weight(&action);
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidWeight { value: w });
        }
        den += w;
        let hit = match model.predict(point) {
            Ok(label) => label == target,
            Err(Error::OffTable) => false,
            Err(e) => return Err(e),
        };
        if hit {
            num += w;
        }
    }
    if normalize {
        Ok(if den > 0.0 { num / den } else { 0.0 })
    } else {
        Ok(num)
    }
}

/// Worst-case responsiveness of feature `j` under adversarial discrete
/// perturbations of the OTHER features with L1 norm strictly below
/// `budget_eps` (the null perturbation is always considered). Perturbed
/// coordinates are clipped to their bounds before prediction.
pub fn score_robust(
    x: &[f64],
    j: usize,
    action_set: &ActionSet,
    model: &Classifier,
    target: Label,
    budget_eps: f64,
) -> Result<f64> {
    score_robust_with(x, j, action_set, model, target, budget_eps, DEFAULT_PERTURBATION_BUDGET)
}

pub fn score_robust_with(
    x: &[f64],
    j: usize,
    action_set: &ActionSet,
    model: &Classifier,
    target: Label,
    budget_eps: f64,
    node_budget: u64,
) -> Result<f64> {
    if !budget_eps.is_finite() || budget_eps < 0.0 {
        return Err(Error::Validation(format!("perturbation budget must be >= 0, got {budget_eps}")));
    }
    let reachable = crate::reachable::enumerate_reachable(x, j, action_set)?;
    if reachable.points.is_empty() {
        return Ok(0.0);
    }

    let fraction = |delta: &[f64]| -> Result<f64> {
        let mut hits = 0u64;
        for point in &reachable.points {
            let perturbed: Vec<f64> = point
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let f = action_set.feature(k);
                    (v + delta[k]).clamp(f.lower_bound, f.upper_bound)
                })
                .collect();
            match model.predict(&perturbed) {
                Ok(label) if label == target => hits += 1,
                Ok(_) | Err(Error::OffTable) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(hits as f64 / reachable.points.len() as f64)
    };

    // depth-first enumeration of integer perturbations over discrete
    // features != j with L1 norm strictly below the budget, evaluated as
    // they are produced; delta = 0 is always evaluated
    let mut worst = fraction(&vec![0.0; action_set.d()])?;
    let dims: Vec<usize> = (0..action_set.d())
        .filter(|&k| k != j && action_set.feature(k).kind.is_discrete())
        .collect();
    let mut frontier: Vec<(usize, Vec<f64>, f64)> = vec![(0, vec![0.0; action_set.d()], 0.0)];
    let mut nodes: u64 = 0;
    while let Some((depth, delta, used)) = frontier.pop() {
        if worst == 0.0 || depth == dims.len() {
            continue;
        }
        let k = dims[depth];
        let room = (budget_eps - used).ceil() as i64;
        for step in -room..=room {
            if step == 0 {
                frontier.push((depth + 1, delta.clone(), used));
                continue;
            }
            let cost = step.abs() as f64;
            if used + cost >= budget_eps {
                continue;
            }
            nodes += 1;
            if nodes > node_budget {
                return Err(Error::PerturbationBudgetExceeded { budget: node_budget });
            }
            let mut next = delta.clone();
            next[k] = step as f64;
            worst = worst.min(fraction(&next)?);
            if worst == 0.0 {
                break;
            }
            frontier.push((depth + 1, next, used + cost));
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Response classification

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseDirection {
    Increase,
    Decrease,
    /// Recourse available on both sides of the current value.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseClass {
    pub responsive: bool,
    pub monotonic: bool,
    /// Only judged when an expected direction is supplied.
    pub intuitive: Option<bool>,
    pub direction: Option<ResponseDirection>,
}

/// Classify how a feature responds over its reachable set: responsive if any
/// reachable point attains the target; monotonic if the responsive values
/// form one contiguous run touching an end of the attainable value range
/// (responsive "past a threshold"); intuitive if that run lies in the
/// expected direction.
pub fn classify_response(
    reachable: &ReachableSet,
    model: &Classifier,
    target: Label,
    expected: Option<ResponseDirection>,
) -> Result<ResponseClass> {
    // fold points into distinct new values of the acted-on feature; a value
    // is responsive when at least one completion attains the target
    let mut pairs: Vec<(f64, bool)> = Vec::with_capacity(reachable.points.len());
    for p in &reachable.points {
        let hit = match model.predict(p) {
            Ok(label) => label == target,
            Err(Error::OffTable) => false,
            Err(e) => return Err(e),
        };
        pairs.push((p[reachable.feature], hit));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut values: Vec<(f64, bool)> = Vec::new();
    for (v, hit) in pairs {
        match values.last_mut() {
            Some((last, last_hit)) if (v - *last).abs() <= VALUE_EPS => *last_hit |= hit,
            _ => values.push((v, hit)),
        }
    }

    let responsive = values.iter().any(|(_, h)| *h);
    if !responsive {
        return Ok(ResponseClass {
            responsive: false,
            monotonic: false,
            intuitive: expected.map(|_| false),
            direction: None,
        });
    }

    let first = values.iter().position(|(_, h)| *h).unwrap();
    let last = values.iter().rposition(|(_, h)| *h).unwrap();
    let contiguous = values[first..=last].iter().all(|(_, h)| *h);
    let touches_low = first == 0;
    let touches_high = last == values.len() - 1;
    let monotonic = contiguous && (touches_low || touches_high);

    let direction = if !monotonic {
        None
    } else if touches_low && touches_high {
        // everything responds; orient by where the attainable values sit
        // relative to the anchor
        let anchor = reachable.anchor[reachable.feature];
        let below = values.first().unwrap().0 < anchor - VALUE_EPS;
        let above = values.last().unwrap().0 > anchor + VALUE_EPS;
        Some(match (below, above) {
            (true, false) => ResponseDirection::Decrease,
            (false, true) => ResponseDirection::Increase,
            _ => ResponseDirection::Both,
        })
    } else if touches_high {
        Some(ResponseDirection::Increase)
    } else {
        Some(ResponseDirection::Decrease)
    };

    let intuitive = expected.map(|e| {
        monotonic
            && match direction {
                Some(ResponseDirection::Both) => true,
                Some(d) => d == e || e == ResponseDirection::Both,
                None => false,
            }
    });

    Ok(ResponseClass { responsive, monotonic, intuitive, direction })
}

// ---------------------------------------------------------------------------
// Recourse triage

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriageStatus {
    SingleFeatureRecourse,
    JointOnlyRecourse,
    FixedPrediction,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TriageWitness {
    /// A single feature whose responsiveness is positive.
    Feature(usize),
    /// A feasible joint action whose endpoint attains the target.
    JointAction(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriageVerdict {
    pub status: TriageStatus,
    pub witness: Option<TriageWitness>,
}

#[derive(Debug, Clone, Copy)]
pub struct TriageOptions {
    /// Exhaustive joint search runs only when the full joint grid has at
    /// most this many cells.
    pub grid_limit: u64,
    /// Proposal count for the randomized fallback search.
    pub attempts: u64,
    /// Fixed internal seed so reports stay byte-identical across runs.
    pub seed: u64,
}

impl Default for TriageOptions {
    fn default() -> Self {
        TriageOptions { grid_limit: 1_000_000, attempts: 50_000, seed: 314_159 }
    }
}

/// Decide, for an individual with no single-feature recourse signal, whether
/// the prediction is fixed, reachable only through a joint intervention, or
/// unresolved within budget. Positive scores short-circuit to
/// single-feature recourse.
pub fn triage(
    x: &[f64],
    scores: &[ResponsivenessScore],
    action_set: &ActionSet,
    model: &Classifier,
    target: Label,
) -> Result<TriageVerdict> {
    triage_with(x, scores, action_set, model, target, &TriageOptions::default())
}

pub fn triage_with(
    x: &[f64],
    scores: &[ResponsivenessScore],
    action_set: &ActionSet,
    model: &Classifier,
    target: Label,
    options: &TriageOptions,
) -> Result<TriageVerdict> {
    let d = action_set.d();
    let mut seen = vec![false; d];
    for s in scores {
        if s.feature >= d || seen[s.feature] {
            return Err(Error::Validation(
                "triage requires exactly one score per feature".to_string(),
            ));
        }
        seen[s.feature] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Validation("triage requires a score for every feature".to_string()));
    }

    // any success - exact or a sampled hit - is a concrete witness
    let mut best: Option<&ResponsivenessScore> = None;
    for s in scores {
        if s.successes > 0 {
            let better = match best {
                None => true,
                Some(b) => {
                    s.estimate > b.estimate + VALUE_EPS
                        || (s.estimate > b.estimate - VALUE_EPS && s.feature < b.feature)
                }
            };
            if better {
                best = Some(s);
            }
        }
    }
    if let Some(s) = best {
        return Ok(TriageVerdict {
            status: TriageStatus::SingleFeatureRecourse,
            witness: Some(TriageWitness::Feature(s.feature)),
        });
    }
    // per-feature enumeration grids for joint search; None = not enumerable
    let grids: Vec<Option<Vec<f64>>> =
        (0..d).map(|k| feature_total_grid(x, k, action_set)).collect();

    if let ModelKind::Linear { weights, .. } = &model.kind {
        if let Some(verdict) =
            linear_triage(x, action_set, model, weights, target, &grids, options)?
        {
            return Ok(verdict);
        }
    }

    if grids.iter().all(|g| g.is_some()) {
        let lists: Vec<&Vec<f64>> = grids.iter().map(|g| g.as_ref().unwrap()).collect();
        let cells = lists.iter().map(|g| g.len() as f64).product::<f64>();
        if cells <= options.grid_limit as f64 {
            return exhaustive_triage(x, action_set, model, target, &lists);
        }
    }

    randomized_triage(x, action_set, model, target, options)
}

/// Candidate total-change grid for one feature: every integral step inside
/// the bounds for discrete features, only the null change for continuous
/// features that nothing can move. A movable continuous feature defeats
/// enumeration.
fn feature_total_grid(x: &[f64], k: usize, action_set: &ActionSet) -> Option<Vec<f64>> {
    let f = action_set.feature(k);
    if f.kind.is_discrete() {
        let lo = (f.lower_bound - x[k] - VALUE_EPS).ceil() as i64;
        let hi = (f.upper_bound - x[k] + VALUE_EPS).floor() as i64;
        let mut g: Vec<f64> = Vec::with_capacity((hi - lo + 1).max(1) as usize);
        g.push(0.0);
        for t in lo..=hi {
            if t != 0 {
                g.push(t as f64);
            }
        }
        Some(g)
    } else {
        let frozen = !f.actionable
            && action_set.linkage_sources(k).is_empty()
            && action_set.slack_window(k) == 0.0;
        if frozen {
            Some(vec![0.0])
        } else {
            None
        }
    }
}

fn hits_target(model: &Classifier, point: &[f64], target: Label) -> Result<bool> {
    match model.predict(point) {
        Ok(label) => Ok(label == target),
        Err(Error::OffTable) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Classify a feasible witness action: single-feature when one designated
/// intervention explains it, joint otherwise.
fn witness_verdict(x: &[f64], action: &[f64], action_set: &ActionSet) -> Result<TriageVerdict> {
    if check_feasibility(x, action, action_set)? {
        let support: Vec<usize> =
            (0..action.len()).filter(|&k| action[k].abs() > VALUE_EPS).collect();
        if let Some(&part_id) = support.first().map(|&k| action_set.part_id(k)).as_ref() {
            for &k in &support {
                if action_set.feature(k).actionable
                    && designation_ok(action, action_set, part_id, Some(k))
                {
                    return Ok(TriageVerdict {
                        status: TriageStatus::SingleFeatureRecourse,
                        witness: Some(TriageWitness::Feature(k)),
                    });
                }
            }
        }
    }
    Ok(TriageVerdict {
        status: TriageStatus::JointOnlyRecourse,
        witness: Some(TriageWitness::JointAction(action.to_vec())),
    })
}

/// Exact triage for linear models: the margin gain is additive across
/// partition parts, so maximizing it part-by-part certifies either side.
/// Returns None when some part resists exact maximization.
fn linear_triage(
    x: &[f64],
    action_set: &ActionSet,
    model: &Classifier,
    weights: &[f64],
    target: Label,
    grids: &[Option<Vec<f64>>],
    options: &TriageOptions,
) -> Result<Option<TriageVerdict>> {
    let positive_target = target == model.positive;
    // sign s such that maximizing s * (w . a) pushes toward the target side
    let s = if positive_target { 1.0 } else { -1.0 };
    let d = action_set.d();
    let mut best_action = vec![0.0; d];

    for part in action_set.partition() {
        let enumerable = part.iter().all(|&k| grids[k].is_some());
        if enumerable {
            let lists: Vec<&Vec<f64>> =
                part.iter().map(|&k| grids[k].as_ref().unwrap()).collect();
            let cells = lists.iter().map(|g| g.len() as f64).product::<f64>();
            if cells > options.grid_limit as f64 {
                return Ok(None);
            }
            let mut best_gain = 0.0f64;
            let mut best_part: Vec<f64> = vec![0.0; part.len()];
            let mut idx = vec![0usize; part.len()];
            loop {
                let mut action = vec![0.0; d];
                let mut gain = 0.0;
                let mut nonzero = false;
                for (slot, &k) in part.iter().enumerate() {
                    let t = lists[slot][idx[slot]];
                    action[k] = t;
                    gain += s * weights[k] * t;
                    nonzero |= t != 0.0;
                }
                if nonzero
                    && gain > best_gain + VALUE_EPS
                    && check_joint_feasibility(x, &action, action_set)?
                {
                    best_gain = gain;
                    for (slot, &k) in part.iter().enumerate() {
                        best_part[slot] = action[k];
                    }
                }
                if !advance(&mut idx, &lists) {
                    break;
                }
            }
            for (slot, &k) in part.iter().enumerate() {
                best_action[k] = best_part[slot];
            }
        } else if part.len() == 1 {
            let k = part[0];
            let f = action_set.feature(k);
            if !f.actionable {
                continue;
            }
            let mut lo = f.lower_bound - x[k];
            let mut hi = f.upper_bound - x[k];
            match f.sign {
                Sign::IncreaseOnly => lo = lo.max(0.0),
                Sign::DecreaseOnly => hi = hi.min(0.0),
                Sign::Free => {}
            }
            if lo > hi {
                continue;
            }
            let null = crate::reachable::NULL_INTERVENTION_FRACTION
                * (f.upper_bound - f.lower_bound);
            let mut best_gain = 0.0f64;
            let mut best_t = 0.0f64;
            for t in [lo, hi] {
                if t.abs() <= null {
                    continue;
                }
                let gain = s * weights[k] * t;
                if gain > best_gain + VALUE_EPS {
                    best_gain = gain;
                    best_t = t;
                }
            }
            best_action[k] = best_t;
        } else {
            // a multi-feature part with a movable continuous member has no
            // finite certificate here; fall back to the general search
            return Ok(None);
        }
    }

    let endpoint: Vec<f64> = x.iter().zip(&best_action).map(|(xi, ai)| xi + ai).collect();
    let margin = model.score(&endpoint)?;
    let reached = if positive_target { margin >= 0.0 } else { margin < 0.0 };
    if !reached {
        return Ok(Some(TriageVerdict { status: TriageStatus::FixedPrediction, witness: None }));
    }
    if best_action.iter().all(|a| a.abs() <= VALUE_EPS) {
        // the anchor itself sits on the target side; nothing to certify
        return Ok(Some(TriageVerdict { status: TriageStatus::Undetermined, witness: None }));
    }
    Ok(Some(witness_verdict(x, &best_action, action_set)?))
}

fn advance(idx: &mut [usize], lists: &[&Vec<f64>]) -> bool {
    for slot in 0..idx.len() {
        idx[slot] += 1;
        if idx[slot] < lists[slot].len() {
            return true;
        }
        idx[slot] = 0;
    }
    false
}

/// Complete enumeration of the joint total-change grid. Finding no witness
/// certifies a fixed prediction when the per-feature scores were exact.
fn exhaustive_triage(
    x: &[f64],
    action_set: &ActionSet,
    model: &Classifier,
    target: Label,
    lists: &[&Vec<f64>],
) -> Result<TriageVerdict> {
    let d = action_set.d();
    let mut idx = vec![0usize; d];
    loop {
        let action: Vec<f64> = (0..d).map(|k| lists[k][idx[k]]).collect();
        let nonzero = action.iter().any(|a| *a != 0.0);
        if nonzero && check_joint_feasibility(x, &action, action_set)? {
            let endpoint: Vec<f64> = x.iter().zip(&action).map(|(xi, ai)| xi + ai).collect();
            if hits_target(model, &endpoint, target)? {
                return witness_verdict(x, &action, action_set);
            }
        }
        if !advance(&mut idx, lists) {
            break;
        }
    }
    // the grid covers every feasible joint action, so exhaustion certifies
    Ok(TriageVerdict { status: TriageStatus::FixedPrediction, witness: None })
}

/// Bounded randomized joint search: propose part-wise actions from the
/// separable sets, validate, and test the endpoint. Never certifies a fixed
/// prediction.
fn randomized_triage(
    x: &[f64],
    action_set: &ActionSet,
    model: &Classifier,
    target: Label,
    options: &TriageOptions,
) -> Result<TriageVerdict> {
    let mut rng = ChaCha20Rng::seed_from_u64(options.seed);
    let d = action_set.d();

    // designated-feature candidates per part: actionable features whose
    // separable intervention set is nonempty
    type Sampler = crate::reachable::InterventionSampler;
    type PartCandidates<'a> = (&'a Vec<usize>, Vec<(usize, Sampler)>);
    let parts: Vec<PartCandidates> = action_set
        .partition()
        .iter()
        .map(|part| {
            let candidates: Vec<(usize, Sampler)> = part
                .iter()
                .copied()
                .filter(|&j| action_set.feature(j).actionable)
                .filter_map(|j| {
                    crate::reachable::intervention_sampler(x, j, action_set).ok().map(|s| (j, s))
                })
                .collect();
            (part, candidates)
        })
        .collect();

    if parts.iter().all(|(_, c)| c.is_empty()) {
        // no actionable feature has separable room anywhere; if none can be
        // moved passively either, nothing is feasible and the prediction is
        // certifiably fixed
        let provably_immobile = (0..d).all(|k| {
            !action_set.feature(k).actionable
                || (action_set.linkage_sources(k).is_empty() && action_set.slack_window(k) == 0.0)
        });
        let status = if provably_immobile {
            TriageStatus::FixedPrediction
        } else {
            TriageStatus::Undetermined
        };
        return Ok(TriageVerdict { status, witness: None });
    }

    for _ in 0..options.attempts {
        let mut action = vec![0.0; d];
        for (part, candidates) in &parts {
            if candidates.is_empty() || rng.gen_bool(0.5) {
                continue;
            }
            let (j, sampler) = &candidates[rng.gen_range(0..candidates.len())];
            let v = sampler.draw(&mut rng);
            let proposal = crate::reachable::propose_in_part(x, *j, v, action_set, part, &mut rng)?;
            for &k in part.iter() {
                action[k] = proposal[k];
            }
        }
        if action.iter().all(|a| a.abs() <= VALUE_EPS) {
            continue;
        }
        if check_joint_feasibility(x, &action, action_set)? {
            let endpoint: Vec<f64> = x.iter().zip(&action).map(|(xi, ai)| xi + ai).collect();
            if hits_target(model, &endpoint, target)? {
                return witness_verdict(x, &action, action_set);
            }
        }
    }
    Ok(TriageVerdict { status: TriageStatus::Undetermined, witness: None })
}
