//! Reachable sets: the feature vectors attainable from an anchor point by
//! acting on a single feature. Exact enumeration for discrete parts,
//! seeded rejection sampling otherwise.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::actionability::{check_dimension, intervention_grid, ActionSet, Sign, VALUE_EPS};
use crate::error::{Error, Result};
use crate::solver::{check_feasibility, find_1d_action_with, SearchOptions};

/// Attempt cap factor for rejection sampling: at most `factor * n` draws.
pub const DEFAULT_ATTEMPT_FACTOR: u64 = 1000;

/// Fraction of the feature range below which a real-valued intervention is
/// considered a degenerate null change and resampled.
pub const NULL_INTERVENTION_FRACTION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ReachableSet {
    pub anchor: Vec<f64>,
    pub feature: usize,
    pub points: Vec<Vec<f64>>,
    pub exact: bool,
    /// Number of accepted draws when sampled (duplicates allowed).
    pub sample_size: Option<usize>,
    pub seed: Option<u64>,
}

impl ReachableSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Actions recovered as point - anchor.
    pub fn actions(&self) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|p| p.iter().zip(&self.anchor).map(|(pi, xi)| pi - xi).collect())
            .collect()
    }

    /// New values of the acted-on feature, one per point.
    pub fn feature_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p[self.feature]).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    pub attempt_factor: u64,
    pub search: SearchOptions,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions { attempt_factor: DEFAULT_ATTEMPT_FACTOR, search: SearchOptions::default() }
    }
}

/// Exact reachable set of feature `j`: for every intervention in the grid,
/// all feasible completions are enumerated by re-solving the nearest-action
/// search with a growing exclusion list until it proves infeasibility.
/// Requires every feature of j's part to be discrete. A non-actionable `j`
/// yields the empty set.
pub fn enumerate_reachable(x: &[f64], j: usize, action_set: &ActionSet) -> Result<ReachableSet> {
    enumerate_reachable_with(x, j, action_set, &SearchOptions::default())
}

pub fn enumerate_reachable_with(
    x: &[f64],
    j: usize,
    action_set: &ActionSet,
    options: &SearchOptions,
) -> Result<ReachableSet> {
    check_dimension(x, action_set)?;
    let grid = intervention_grid(x, j, action_set)?;
    let mut points = Vec::new();
    for &v in &grid {
        for action in enumerate_completions(x, j, v, action_set, options)? {
            points.push(x.iter().zip(&action).map(|(xi, ai)| xi + ai).collect());
        }
    }
    Ok(ReachableSet { anchor: x.to_vec(), feature: j, points, exact: true, sample_size: None, seed: None })
}

/// All feasible actions with a_j = v, via the no-good exclusion loop.
fn enumerate_completions(
    x: &[f64],
    j: usize,
    v: f64,
    action_set: &ActionSet,
    options: &SearchOptions,
) -> Result<Vec<Vec<f64>>> {
    let mut found: Vec<Vec<f64>> = Vec::new();
    while let Some(action) = find_1d_action_with(x, j, v, action_set, &found, options)? {
        found.push(action);
    }
    Ok(found)
}

/// Sampled reachable set: `n` accepted draws (with replacement) of actions
/// on feature `j`, each validated by `check_feasibility`. The RNG stream is
/// fully determined by `seed`.
pub fn sample_reachable(
    x: &[f64],
    j: usize,
    action_set: &ActionSet,
    n: usize,
    seed: u64,
) -> Result<ReachableSet> {
    sample_reachable_with(x, j, action_set, n, seed, &SampleOptions::default())
}

pub fn sample_reachable_with(
    x: &[f64],
    j: usize,
    action_set: &ActionSet,
    n: usize,
    seed: u64,
    options: &SampleOptions,
) -> Result<ReachableSet> {
    check_dimension(x, action_set)?;
    if n == 0 {
        return Err(Error::Validation("sample count must be at least 1".to_string()));
    }
    let f = action_set.feature(j);
    let sampler = InterventionSampler::new(x, j, action_set)?;
    let part = action_set.part_topo_order(j);
    let all_discrete = part.iter().all(|k| action_set.feature(*k).kind.is_discrete());

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut completions: HashMap<i64, Vec<Vec<f64>>> = HashMap::new();
    let max_attempts = options.attempt_factor.saturating_mul(n as u64);
    let mut attempts: u64 = 0;
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n);

    while points.len() < n {
        if attempts >= max_attempts {
            return Err(Error::RejectionCapExceeded { attempts, accepted: points.len() });
        }
        attempts += 1;

        let v = sampler.draw(&mut rng);
        let action = if part.len() == 1 {
            let mut a = vec![0.0; action_set.d()];
            a[j] = v;
            a
        } else if all_discrete && f.kind.is_discrete() {
            // all-discrete part: uniform over the completion set S(v)
            let key = v.round() as i64;
            let s = match completions.entry(key) {
                Entry::Occupied(e) => e.into_mut(),
                Entry::Vacant(e) => {
                    e.insert(enumerate_completions(x, j, v, action_set, &options.search)?)
                }
            };
            if s.is_empty() {
                continue;
            }
            s[rng.gen_range(0..s.len())].clone()
        } else {
            // mixed or continuous part: propose downstream components, then
            // validate; forced linkage totals are computed, not drawn
            propose_in_part(x, j, v, action_set, &part, &mut rng)?
        };

        if check_feasibility(x, &action, action_set)? {
            points.push(x.iter().zip(&action).map(|(xi, ai)| xi + ai).collect());
        }
    }

    Ok(ReachableSet {
        anchor: x.to_vec(),
        feature: j,
        points,
        exact: false,
        sample_size: Some(n),
        seed: Some(seed),
    })
}

/// Build a full-dimension action with `a_j = v` and the other features of
/// `part` filled from forced linkage totals, a slack draw, and (for
/// actionable completion members) a separable deliberate draw. Features
/// outside the part stay zero. The result is a proposal, not yet validated.
pub(crate) fn propose_in_part(
    x: &[f64],
    j: usize,
    v: f64,
    action_set: &ActionSet,
    part: &[usize],
    rng: &mut ChaCha20Rng,
) -> Result<Vec<f64>> {
    let mut action = vec![0.0; action_set.d()];
    action[j] = v;
    for &k in part {
        if k == j {
            continue;
        }
        let f = action_set.feature(k);
        let forced = action_set.forced_total(k, &action);
        let slack = action_set.slack_window(k);
        let d = if slack > 0.0 {
            if f.kind.is_discrete() {
                rng.gen_range(0..=(slack + VALUE_EPS).floor() as i64) as f64
            } else {
                rng.gen_range(0.0..=slack)
            }
        } else {
            0.0
        };
        let w = if action_set.is_completion_member(k) && f.actionable {
            draw_separable(x[k], f, rng)
        } else {
            0.0
        };
        action[k] = forced + d + w;
    }
    Ok(action)
}

/// A deliberate step drawn from the feature's separable range (zero
/// included), respecting bounds and sign.
fn draw_separable(xk: f64, f: &crate::actionability::FeatureSpec, rng: &mut ChaCha20Rng) -> f64 {
    let mut lo = f.lower_bound - xk;
    let mut hi = f.upper_bound - xk;
    match f.sign {
        Sign::IncreaseOnly => lo = lo.max(0.0),
        Sign::DecreaseOnly => hi = hi.min(0.0),
        Sign::Free => {}
    }
    if lo > hi {
        return 0.0;
    }
    if f.kind.is_discrete() {
        let lo = (lo - VALUE_EPS).ceil() as i64;
        let hi = (hi + VALUE_EPS).floor() as i64;
        if lo > hi {
            0.0
        } else {
            rng.gen_range(lo..=hi) as f64
        }
    } else if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Uniform sampler over a feature's separable intervention set: the grid of
/// admissible integral steps for discrete features, the sign-respecting
/// in-bounds interval(s) minus the null window for real ones. Construction
/// fails when the set is empty.
pub(crate) struct InterventionSampler {
    grid: Vec<f64>,
    intervals: Vec<(f64, f64)>,
    total_length: f64,
}

pub(crate) fn intervention_sampler(
    x: &[f64],
    j: usize,
    action_set: &ActionSet,
) -> Result<InterventionSampler> {
    InterventionSampler::new(x, j, action_set)
}

impl InterventionSampler {
    fn new(x: &[f64], j: usize, action_set: &ActionSet) -> Result<Self> {
        let f = action_set.feature(j);
        let name = f.name.clone();
        if f.kind.is_discrete() {
            let grid = intervention_grid(x, j, action_set)?;
            if grid.is_empty() {
                return Err(Error::EmptyInterventionSet { feature: name });
            }
            return Ok(InterventionSampler { grid, intervals: Vec::new(), total_length: 0.0 });
        }
        if !f.actionable {
            return Err(Error::EmptyInterventionSet { feature: name });
        }
        let null_window = NULL_INTERVENTION_FRACTION * (f.upper_bound - f.lower_bound);
        let lo = f.lower_bound - x[j];
        let hi = f.upper_bound - x[j];
        let mut intervals = Vec::new();
        let (neg_ok, pos_ok) = match f.sign {
            Sign::IncreaseOnly => (false, true),
            Sign::DecreaseOnly => (true, false),
            Sign::Free => (true, true),
        };
        if neg_ok && lo < -null_window {
            intervals.push((lo, -null_window));
        }
        if pos_ok && hi > null_window {
            intervals.push((null_window, hi));
        }
        let total_length: f64 = intervals.iter().map(|(a, b)| b - a).sum();
        if intervals.is_empty() || total_length <= 0.0 {
            return Err(Error::EmptyInterventionSet { feature: name });
        }
        Ok(InterventionSampler { grid: Vec::new(), intervals, total_length })
    }

    pub(crate) fn draw(&self, rng: &mut ChaCha20Rng) -> f64 {
        if !self.grid.is_empty() {
            return self.grid[rng.gen_range(0..self.grid.len())];
        }
        let mut u = rng.gen_range(0.0..self.total_length);
        for (a, b) in &self.intervals {
            let len = b - a;
            if u <= len {
                return a + u;
            }
            u -= len;
        }
        // floating-point slop lands on the last interval's end
        self.intervals.last().map(|(_, b)| *b).unwrap()
    }
}

// ---------------------------------------------------------------------------
// Tabular serialization for caching

impl ReachableSet {
    /// Row-per-point table with a metadata header, for on-disk caching.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# anchor={}\n", join_values(&self.anchor)));
        out.push_str(&format!("# feature={}\n", self.feature));
        out.push_str(&format!("# exact={}\n", self.exact));
        if let Some(n) = self.sample_size {
            out.push_str(&format!("# sample_size={n}\n"));
        }
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed={seed}\n"));
        }
        for p in &self.points {
            out.push_str(&join_values(p));
            out.push('\n');
        }
        out
    }

    pub fn from_table(text: &str) -> Result<ReachableSet> {
        let mut anchor: Option<Vec<f64>> = None;
        let mut feature: Option<usize> = None;
        let mut exact: Option<bool> = None;
        let mut sample_size: Option<usize> = None;
        let mut seed: Option<u64> = None;
        let mut points = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let meta = meta.trim();
                let (key, value) = meta.split_once('=').ok_or_else(|| {
                    Error::Validation(format!("line {}: malformed metadata '{meta}'", ln + 1))
                })?;
                match key.trim() {
                    "anchor" => anchor = Some(parse_values(value, ln)?),
                    "feature" => {
                        feature = Some(value.trim().parse().map_err(|_| {
                            Error::Validation(format!("line {}: bad feature index", ln + 1))
                        })?)
                    }
                    "exact" => {
                        exact = Some(value.trim().parse().map_err(|_| {
                            Error::Validation(format!("line {}: bad exact flag", ln + 1))
                        })?)
                    }
                    "sample_size" => {
                        sample_size = Some(value.trim().parse().map_err(|_| {
                            Error::Validation(format!("line {}: bad sample size", ln + 1))
                        })?)
                    }
                    "seed" => {
                        seed = Some(value.trim().parse().map_err(|_| {
                            Error::Validation(format!("line {}: bad seed", ln + 1))
                        })?)
                    }
                    other => {
                        return Err(Error::Validation(format!(
                            "line {}: unknown metadata key '{other}'",
                            ln + 1
                        )))
                    }
                }
            } else {
                points.push(parse_values(line, ln)?);
            }
        }
        let anchor = anchor.ok_or_else(|| Error::Validation("missing anchor metadata".into()))?;
        let feature = feature.ok_or_else(|| Error::Validation("missing feature metadata".into()))?;
        let exact = exact.ok_or_else(|| Error::Validation("missing exact metadata".into()))?;
        for (i, p) in points.iter().enumerate() {
            if p.len() != anchor.len() {
                return Err(Error::Validation(format!(
                    "point {i} has dimension {}, anchor has {}",
                    p.len(),
                    anchor.len()
                )));
            }
        }
        Ok(ReachableSet { anchor, feature, points, exact, sample_size, seed })
    }
}

fn join_values(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",")
}

fn parse_values(text: &str, ln: usize) -> Result<Vec<f64>> {
    text.split(',')
        .map(|cell| {
            cell.trim()
                .parse()
                .map_err(|_| Error::Validation(format!("line {}: bad number '{cell}'", ln + 1)))
        })
        .collect()
}
