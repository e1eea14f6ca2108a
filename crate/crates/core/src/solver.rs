//! Complete search over a feature part: nearest-action search with
//! exclusion of prior solutions, and joint-feasibility checking.
//!
//! An action on feature `j` fixes `a_j = v` and completes the rest of j's
//! part. Per feature `k`, the total change decomposes as
//! `a_k = forced + w_k + d_k` where `forced` is the linkage-induced total,
//! `d_k` ranges over k's causal-bound slack window, and the deliberate
//! component `w_k` must be zero unless `k` is the intervened feature or a
//! member of a validity-type constraint (thermometer, one_hot, reachability,
//! logical_implication), in which case `w_k` obeys k's own actionability and
//! sign. Bounds and integrality always apply to totals.

use crate::actionability::{
    check_dimension, intervention_grid, is_integral, ActionSet, JointConstraint, Sign,
    ThermometerDirection, VALUE_EPS,
};
use crate::error::{Error, Result};

/// Minimum L1 distance between enumerated solutions. 0.5 separates distinct
/// points on unit grids; configure for coarser grids.
pub const DEFAULT_MIN_SEPARATION: f64 = 0.5;

/// Hard cap on search nodes; exceeding it is a resource error, never a
/// silent "infeasible".
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub min_separation: f64,
    pub node_budget: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { min_separation: DEFAULT_MIN_SEPARATION, node_budget: DEFAULT_NODE_BUDGET }
    }
}

/// Branch-and-bound bookkeeping for one nearest-action search.
#[derive(Debug)]
pub struct SearchState<'a> {
    /// Features of the intervened part, linkage sources before targets.
    pub part: Vec<usize>,
    /// The fixed component (feature j, intervention v).
    pub fixed_component: (usize, f64),
    /// Previously found actions to stay `min_separation` away from.
    pub excluded: &'a [Vec<f64>],
    pub min_separation: f64,
    /// Best action found so far and its L1 norm.
    pub incumbent: Option<(Vec<f64>, f64)>,
    nodes: u64,
    budget: u64,
}

/// Nearest single-feature action: minimizes ||a||_1 over all feasible
/// completions of intervening with `v` on feature `j`, staying at least
/// `min_separation` (L1) away from every excluded action. Returns `None`
/// iff no such action exists; ties break lexicographically by feature index
/// then signed value. Complete: exceeding the node budget is an error.
pub fn find_1d_action(
    x: &[f64],
    j: usize,
    v: f64,
    action_set: &ActionSet,
    excluded: &[Vec<f64>],
) -> Result<Option<Vec<f64>>> {
    find_1d_action_with(x, j, v, action_set, excluded, &SearchOptions::default())
}

pub fn find_1d_action_with(
    x: &[f64],
    j: usize,
    v: f64,
    action_set: &ActionSet,
    excluded: &[Vec<f64>],
    options: &SearchOptions,
) -> Result<Option<Vec<f64>>> {
    check_dimension(x, action_set)?;
    let grid = intervention_grid(x, j, action_set)?;
    if !grid.iter().any(|g| (g - v).abs() <= VALUE_EPS) {
        return Err(Error::InvalidIntervention {
            feature: action_set.feature(j).name.clone(),
            value: v,
        });
    }
    for (i, a) in excluded.iter().enumerate() {
        if a.len() != action_set.d() {
            return Err(Error::InconsistentExclusion {
                index: i,
                message: format!("expected dimension {}, got {}", action_set.d(), a.len()),
            });
        }
        if (a[j] - v).abs() > VALUE_EPS {
            return Err(Error::InconsistentExclusion {
                index: i,
                message: format!("component a_j = {} does not match intervention {v}", a[j]),
            });
        }
    }

    let part = action_set.part_topo_order(j);
    for &k in &part {
        let f = action_set.feature(k);
        if !f.kind.is_discrete() {
            return Err(Error::NotDiscrete { feature: f.name.clone() });
        }
    }

    let mut state = SearchState {
        part,
        fixed_component: (j, v),
        excluded,
        min_separation: options.min_separation,
        incumbent: None,
        nodes: 0,
        budget: options.node_budget,
    };
    let mut action = vec![0.0; action_set.d()];
    descend(x, action_set, &mut state, &mut action, 0, 0.0)?;
    Ok(state.incumbent.map(|(a, _)| a))
}

fn descend(
    x: &[f64],
    action_set: &ActionSet,
    state: &mut SearchState,
    action: &mut Vec<f64>,
    depth: usize,
    partial_norm: f64,
) -> Result<()> {
    if depth == state.part.len() {
        let (j, _) = state.fixed_component;
        let part_id = action_set.part_id(j);
        if !joint_constraints_hold(x, action, action_set, state.part[0])
            || !designation_ok(action, action_set, part_id, Some(j))
        {
            return Ok(());
        }
        for prior in state.excluded {
            if l1_distance(action, prior) < state.min_separation - VALUE_EPS {
                return Ok(());
            }
        }
        let better = match &state.incumbent {
            None => true,
            Some((best, best_norm)) => {
                partial_norm < best_norm - VALUE_EPS
                    || (partial_norm < best_norm + VALUE_EPS && lex_less(action, best))
            }
        };
        if better {
            state.incumbent = Some((action.clone(), partial_norm));
        }
        return Ok(());
    }

    let k = state.part[depth];
    let (j, v) = state.fixed_component;
    let candidates = if k == j {
        vec![v]
    } else {
        total_candidates(x, k, action_set, action, Some(j))
    };
    for t in candidates {
        state.nodes += 1;
        if state.nodes > state.budget {
            return Err(Error::NodeBudgetExhausted { budget: state.budget });
        }
        let norm = partial_norm + t.abs();
        if let Some((_, best_norm)) = &state.incumbent {
            // keep equal-norm branches alive for the lexicographic tie-break
            if norm > best_norm + VALUE_EPS {
                continue;
            }
        }
        action[k] = t;
        descend(x, action_set, state, action, depth + 1, norm)?;
        action[k] = 0.0;
    }
    Ok(())
}

/// Feasible total changes for non-intervened feature `k`, given the totals
/// already assigned to its linkage sources. Ordered by |t| then t, so the
/// search reaches small-norm completions first.
fn total_candidates(
    x: &[f64],
    k: usize,
    action_set: &ActionSet,
    action: &[f64],
    designated: Option<usize>,
) -> Vec<f64> {
    let f = action_set.feature(k);
    let forced = action_set.forced_total(k, action);
    let slack = action_set.slack_window(k);
    let deliberate = match designated {
        Some(j) if k != j && !action_set.is_completion_member(k) => false,
        _ => f.actionable,
    };

    let lo = (f.lower_bound - x[k] - VALUE_EPS).ceil() as i64;
    let hi = (f.upper_bound - x[k] + VALUE_EPS).floor() as i64;
    let mut out = Vec::new();
    for t in lo..=hi {
        let t = t as f64;
        if decomposable(t, forced, slack, deliberate, f.sign, true) {
            out.push(t);
        }
    }
    out.sort_by(|a, b| (a.abs(), *a).partial_cmp(&(b.abs(), *b)).unwrap());
    out
}

/// Whether total `t` splits as forced + w + d with d in the slack window
/// and w either zero or a permitted deliberate step.
fn decomposable(t: f64, forced: f64, slack: f64, deliberate: bool, sign: Sign, discrete: bool) -> bool {
    let slack_steps = if discrete { (slack + VALUE_EPS).floor() as i64 } else { 0 };
    if discrete {
        for d in 0..=slack_steps {
            let w = t - forced - d as f64;
            if !is_integral(w) {
                continue;
            }
            if w.abs() <= VALUE_EPS {
                return true;
            }
            if deliberate && sign.allows(w) {
                return true;
            }
        }
        false
    } else {
        // continuous: w = t - forced - d for some d in [0, slack]
        let w_hi = t - forced; // d = 0
        let w_lo = t - forced - slack; // d = slack
        if w_lo <= VALUE_EPS && w_hi >= -VALUE_EPS {
            return true; // w = 0 attainable
        }
        if !deliberate {
            return false;
        }
        match sign {
            Sign::Free => true,
            Sign::IncreaseOnly => w_hi >= -VALUE_EPS,
            Sign::DecreaseOnly => w_lo <= VALUE_EPS,
        }
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (ai, bi) in a.iter().zip(b) {
        if (ai - bi).abs() > VALUE_EPS {
            return ai < bi;
        }
    }
    false
}

pub(crate) fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// True iff `a` is a feasible single-feature action: supported on one part,
/// with some actionable feature j (a_j != 0) whose designation makes every
/// other component a valid forced/slack/completion change, and all joint
/// constraints holding on x + a. The all-zero action is feasible.
pub fn check_feasibility(x: &[f64], a: &[f64], action_set: &ActionSet) -> Result<bool> {
    check_action_inputs(x, a, action_set)?;
    let support: Vec<usize> = (0..action_set.d()).filter(|k| a[*k] != 0.0).collect();
    if support.is_empty() {
        return Ok(true);
    }
    let part_id = action_set.part_id(support[0]);
    if support.iter().any(|k| action_set.part_id(*k) != part_id) {
        return Ok(false);
    }
    if !totals_ok(x, a, action_set, part_id) || !joint_constraints_hold(x, a, action_set, support[0]) {
        return Ok(false);
    }
    for &j in &support {
        if action_set.feature(j).actionable && designation_ok(a, action_set, part_id, Some(j)) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Joint-action variant used by recourse triage: every actionable feature
/// may carry a deliberate component simultaneously, but each moving part
/// must still contain an actionable feature that actually moved — change
/// cannot come from slack drift alone.
pub(crate) fn check_joint_feasibility(x: &[f64], a: &[f64], action_set: &ActionSet) -> Result<bool> {
    check_action_inputs(x, a, action_set)?;
    if a.iter().all(|v| *v == 0.0) {
        return Ok(true);
    }
    for part_id in 0..action_set.partition().len() {
        let part = &action_set.partition()[part_id];
        if part.iter().all(|k| a[*k] == 0.0) {
            continue;
        }
        if !totals_ok(x, a, action_set, part_id)
            || !joint_constraints_hold(x, a, action_set, part[0])
            || !designation_ok(a, action_set, part_id, None)
        {
            return Ok(false);
        }
        if !part
            .iter()
            .any(|&k| action_set.feature(k).actionable && a[k].abs() > VALUE_EPS)
        {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_action_inputs(x: &[f64], a: &[f64], action_set: &ActionSet) -> Result<()> {
    check_dimension(x, action_set)?;
    if a.len() != action_set.d() {
        return Err(Error::DimensionMismatch { expected: action_set.d(), actual: a.len() });
    }
    Ok(())
}

fn totals_ok(x: &[f64], a: &[f64], action_set: &ActionSet, part_id: usize) -> bool {
    for &k in &action_set.partition()[part_id] {
        let f = action_set.feature(k);
        if !a[k].is_finite() {
            return false;
        }
        let new = x[k] + a[k];
        if new < f.lower_bound - VALUE_EPS || new > f.upper_bound + VALUE_EPS {
            return false;
        }
        if f.kind.is_discrete() && !is_integral(a[k]) {
            return false;
        }
    }
    true
}

/// Decomposition check: with `designated = Some(j)` only j moves
/// deliberately (plus validity-constraint members); with `None` every
/// actionable feature may.
pub(crate) fn designation_ok(
    a: &[f64],
    action_set: &ActionSet,
    part_id: usize,
    designated: Option<usize>,
) -> bool {
    for &k in &action_set.partition()[part_id] {
        let f = action_set.feature(k);
        let forced = action_set.forced_total(k, a);
        let slack = action_set.slack_window(k);
        let deliberate = match designated {
            Some(j) if k != j && !action_set.is_completion_member(k) => false,
            _ => f.actionable,
        };
        if !decomposable(a[k], forced, slack, deliberate, f.sign, f.kind.is_discrete()) {
            return false;
        }
        if designated == Some(k) && a[k].abs() <= VALUE_EPS {
            return false;
        }
    }
    true
}

/// Validity-type joint constraints of the part containing `member`, checked
/// on the post-action point x + a.
fn joint_constraints_hold(x: &[f64], a: &[f64], action_set: &ActionSet, member: usize) -> bool {
    let part_id = action_set.part_id(member);
    for &ci in action_set.part_joint_indices(part_id) {
        let ok = match &action_set.joints()[ci] {
            JointConstraint::Thermometer { members, direction } => {
                thermometer_holds(x, a, members, *direction)
            }
            JointConstraint::OneHot { members } => {
                let mut sum = 0.0;
                let mut valid = true;
                for &m in members {
                    let new = x[m] + a[m];
                    if (new - 0.0).abs() > VALUE_EPS && (new - 1.0).abs() > VALUE_EPS {
                        valid = false;
                        break;
                    }
                    sum += new;
                }
                valid && (sum - 1.0).abs() <= VALUE_EPS
            }
            JointConstraint::Reachability { members, allowed } => allowed.iter().any(|vec| {
                members
                    .iter()
                    .zip(vec)
                    .all(|(m, want)| (x[*m] + a[*m] - want).abs() <= VALUE_EPS)
            }),
            JointConstraint::LogicalImplication { guard, consequent } => {
                let g = x[*guard] + a[*guard];
                let c = x[*consequent] + a[*consequent];
                let f = action_set.feature(*consequent);
                c <= f.upper_bound * g + VALUE_EPS && c >= f.lower_bound * g - VALUE_EPS
            }
            JointConstraint::CausalBound { cause, effect, .. } => {
                x[*cause] + a[*cause] <= x[*effect] + a[*effect] + VALUE_EPS
            }
            // linkage is enforced through the forced-total decomposition
            JointConstraint::DirectionalLinkage { .. } => true,
        };
        if !ok {
            return false;
        }
    }
    true
}

fn thermometer_holds(x: &[f64], a: &[f64], members: &[usize], direction: ThermometerDirection) -> bool {
    let mut prev = 1.0;
    for &m in members {
        let new = x[m] + a[m];
        if (new - 0.0).abs() > VALUE_EPS && (new - 1.0).abs() > VALUE_EPS {
            return false;
        }
        if new > prev + VALUE_EPS {
            return false;
        }
        prev = new;
        let ok = match direction {
            ThermometerDirection::Increase => a[m] >= -VALUE_EPS,
            ThermometerDirection::Decrease => a[m] <= VALUE_EPS,
        };
        if !ok {
            return false;
        }
    }
    true
}
