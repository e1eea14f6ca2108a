//! Actionability model: per-feature specs, joint constraints, the feature
//! partition, and intervention grids.
//!
//! An [`ActionSet`] is the ground truth for what changes are feasible. Its
//! partition is the set of connected components of the graph whose edges
//! join features sharing a joint constraint; actions never span parts.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use crate::error::{Error, Result};

/// Tolerance for integrality and bound comparisons on feature values.
pub const VALUE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Binary,
    Integer,
    Real,
}

impl FeatureKind {
    pub fn is_discrete(self) -> bool {
        !matches!(self, FeatureKind::Real)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    IncreaseOnly,
    DecreaseOnly,
    Free,
}

impl Sign {
    /// Whether a deliberate change `w` respects this sign constraint.
    pub fn allows(self, w: f64) -> bool {
        match self {
            Sign::IncreaseOnly => w >= -VALUE_EPS,
            Sign::DecreaseOnly => w <= VALUE_EPS,
            Sign::Free => true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub actionable: bool,
    pub sign: Sign,
}

impl FeatureSpec {
    /// Whether `value` is a valid state for this feature (bounds plus
    /// integrality), ignoring actionability.
    pub fn admits_value(&self, value: f64) -> bool {
        if !value.is_finite()
            || value < self.lower_bound - VALUE_EPS
            || value > self.upper_bound + VALUE_EPS
        {
            return false;
        }
        !self.kind.is_discrete() || is_integral(value)
    }
}

pub fn is_integral(v: f64) -> bool {
    (v - v.round()).abs() <= VALUE_EPS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThermometerDirection {
    Increase,
    Decrease,
}

#[derive(Debug, Clone)]
pub enum JointConstraint {
    /// Ordered binary dummies: the post-action state must be a prefix of
    /// ones, and member changes must match `direction`.
    Thermometer { members: Vec<usize>, direction: ThermometerDirection },
    /// A change on `source` forces `scale`-proportional changes on each
    /// target. Effects from multiple linkages accumulate additively and
    /// propagate through chains; the linkage digraph must be acyclic.
    DirectionalLinkage { source: usize, targets: Vec<(usize, f64)> },
    /// Post-action member values are binary and sum to exactly one.
    OneHot { members: Vec<usize> },
    /// Post-action member values must jointly equal one of the allowed
    /// vectors (listed in member order).
    Reachability { members: Vec<usize>, allowed: Vec<Vec<f64>> },
    /// Binary guard bounds the consequent: new_c in [lb_c * new_g, ub_c * new_g]
    /// with the consequent's declared bounds, so guard = 0 forces new_c = 0.
    LogicalImplication { guard: usize, consequent: usize },
    /// new_cause <= new_effect must hold, and the effect feature gains a
    /// downstream slack window [0, slack].
    CausalBound { cause: usize, effect: usize, slack: f64 },
}

impl JointConstraint {
    pub fn members(&self) -> Vec<usize> {
        match self {
            JointConstraint::Thermometer { members, .. }
            | JointConstraint::OneHot { members }
            | JointConstraint::Reachability { members, .. } => members.clone(),
            JointConstraint::DirectionalLinkage { source, targets } => {
                let mut m = vec![*source];
                m.extend(targets.iter().map(|(t, _)| *t));
                m
            }
            JointConstraint::LogicalImplication { guard, consequent } => {
                vec![*guard, *consequent]
            }
            JointConstraint::CausalBound { cause, effect, .. } => vec![*cause, *effect],
        }
    }

    /// Validity-type constraints let their members move deliberately (as a
    /// completion) when another feature of the part is intervened on.
    /// Linkage and causal bounds instead force or window the movement.
    pub fn grants_completion(&self) -> bool {
        matches!(
            self,
            JointConstraint::Thermometer { .. }
                | JointConstraint::OneHot { .. }
                | JointConstraint::Reachability { .. }
                | JointConstraint::LogicalImplication { .. }
        )
    }

    fn kind_name(&self) -> &'static str {
        match self {
            JointConstraint::Thermometer { .. } => "thermometer",
            JointConstraint::DirectionalLinkage { .. } => "directional_linkage",
            JointConstraint::OneHot { .. } => "one_hot",
            JointConstraint::Reachability { .. } => "reachability",
            JointConstraint::LogicalImplication { .. } => "logical_implication",
            JointConstraint::CausalBound { .. } => "causal_bound",
        }
    }
}

/// Validated actionability model. Immutable after construction; safe to
/// share read-only across threads.
#[derive(Debug, Clone)]
pub struct ActionSet {
    features: Vec<FeatureSpec>,
    joints: Vec<JointConstraint>,
    partition: Vec<Vec<usize>>,
    part_of: Vec<usize>,
    part_joints: Vec<Vec<usize>>,
    linkage_sources: Vec<Vec<(usize, f64)>>,
    linkage_topo: Vec<usize>,
    slack_window: Vec<f64>,
    completion_member: Vec<bool>,
    name_index: BTreeMap<String, usize>,
}

impl ActionSet {
    pub fn new(features: Vec<FeatureSpec>, joints: Vec<JointConstraint>) -> Result<Self> {
        validate_features(&features)?;
        for (ci, joint) in joints.iter().enumerate() {
            validate_joint(&features, joint, &format!("constraints[{ci}]"))?;
        }

        let d = features.len();
        let mut linkage_sources: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d];
        for joint in &joints {
            if let JointConstraint::DirectionalLinkage { source, targets } = joint {
                for (target, scale) in targets {
                    linkage_sources[*target].push((*source, *scale));
                }
            }
        }
        let linkage_topo = linkage_topo_order(d, &linkage_sources)?;

        let mut slack_window = vec![0.0f64; d];
        let mut has_slack = vec![false; d];
        for joint in &joints {
            if let JointConstraint::CausalBound { effect, slack, .. } = joint {
                slack_window[*effect] = if has_slack[*effect] {
                    slack_window[*effect].min(*slack)
                } else {
                    *slack
                };
                has_slack[*effect] = true;
            }
        }

        let mut completion_member = vec![false; d];
        for joint in &joints {
            if joint.grants_completion() {
                for m in joint.members() {
                    completion_member[m] = true;
                }
            }
        }

        let (partition, part_of) = connected_components(d, &joints);
        let mut part_joints = vec![Vec::new(); partition.len()];
        for (ci, joint) in joints.iter().enumerate() {
            let part = part_of[joint.members()[0]];
            part_joints[part].push(ci);
        }

        let mut name_index = BTreeMap::new();
        for (i, f) in features.iter().enumerate() {
            name_index.insert(f.name.clone(), i);
        }

        Ok(ActionSet {
            features,
            joints,
            partition,
            part_of,
            part_joints,
            linkage_sources,
            linkage_topo,
            slack_window,
            completion_member,
            name_index,
        })
    }

    pub fn d(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn feature(&self, j: usize) -> &FeatureSpec {
        &self.features[j]
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.name_index.get(name).copied()
    }

    pub fn joints(&self) -> &[JointConstraint] {
        &self.joints
    }

    /// Parts sorted by their smallest member; members sorted ascending.
    pub fn partition(&self) -> &[Vec<usize>] {
        &self.partition
    }

    pub fn part_id(&self, j: usize) -> usize {
        self.part_of[j]
    }

    /// The part containing feature `j`.
    pub fn part(&self, j: usize) -> &[usize] {
        &self.partition[self.part_of[j]]
    }

    pub fn part_joint_indices(&self, part_id: usize) -> &[usize] {
        &self.part_joints[part_id]
    }

    /// Inbound linkage edges of `k` as (source, scale) pairs.
    pub fn linkage_sources(&self, k: usize) -> &[(usize, f64)] {
        &self.linkage_sources[k]
    }

    /// Total forced linkage change on `k` given the action totals so far.
    pub fn forced_total(&self, k: usize, action: &[f64]) -> f64 {
        self.linkage_sources[k]
            .iter()
            .map(|(s, scale)| scale * action[*s])
            .sum()
    }

    /// Width of the causal-bound slack window on `k` (0 when none).
    pub fn slack_window(&self, k: usize) -> f64 {
        self.slack_window[k]
    }

    /// Whether `k` may move deliberately as a joint-validity completion.
    pub fn is_completion_member(&self, k: usize) -> bool {
        self.completion_member[k]
    }

    /// Features of the part containing `j`, linkage sources before targets.
    pub fn part_topo_order(&self, j: usize) -> Vec<usize> {
        let part = self.part_of[j];
        self.linkage_topo
            .iter()
            .copied()
            .filter(|k| self.part_of[*k] == part)
            .collect()
    }
}

fn validate_features(features: &[FeatureSpec]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for (i, f) in features.iter().enumerate() {
        let path = format!("features[{i}]");
        if f.name.is_empty() {
            return Err(Error::schema(format!("{path}.name"), "empty feature name"));
        }
        if !seen.insert(f.name.clone()) {
            return Err(Error::schema(
                format!("{path}.name"),
                format!("duplicate feature name '{}'", f.name),
            ));
        }
        if !f.lower_bound.is_finite() || !f.upper_bound.is_finite() {
            return Err(Error::schema(format!("{path}.lb"), "bounds must be finite"));
        }
        if f.lower_bound > f.upper_bound {
            return Err(Error::schema(
                format!("{path}.lb"),
                format!("lower bound {} exceeds upper bound {}", f.lower_bound, f.upper_bound),
            ));
        }
        match f.kind {
            FeatureKind::Binary => {
                if f.lower_bound != 0.0 || f.upper_bound != 1.0 {
                    return Err(Error::schema(
                        format!("{path}.lb"),
                        "binary features must have bounds {0, 1}",
                    ));
                }
            }
            FeatureKind::Integer => {
                if !is_integral(f.lower_bound) || !is_integral(f.upper_bound) {
                    return Err(Error::schema(
                        format!("{path}.lb"),
                        "integer features must have integral bounds",
                    ));
                }
            }
            FeatureKind::Real => {}
        }
    }
    Ok(())
}

fn validate_joint(features: &[FeatureSpec], joint: &JointConstraint, path: &str) -> Result<()> {
    let members = joint.members();
    let mut seen = BTreeSet::new();
    for m in &members {
        if *m >= features.len() {
            return Err(Error::schema(
                format!("{path}.members"),
                format!("feature index {m} out of range"),
            ));
        }
        if !seen.insert(*m) {
            return Err(Error::schema(
                format!("{path}.members"),
                format!("member '{}' repeated", features[*m].name),
            ));
        }
    }
    match joint {
        JointConstraint::Thermometer { members, .. } | JointConstraint::OneHot { members } => {
            if members.len() < 2 {
                return Err(Error::schema(
                    format!("{path}.members"),
                    format!("{} needs at least two members", joint.kind_name()),
                ));
            }
            for m in members {
                if features[*m].kind != FeatureKind::Binary {
                    return Err(Error::schema(
                        format!("{path}.members"),
                        format!(
                            "{} member '{}' must be binary",
                            joint.kind_name(),
                            features[*m].name
                        ),
                    ));
                }
            }
        }
        JointConstraint::DirectionalLinkage { targets, .. } => {
            if targets.is_empty() {
                return Err(Error::schema(
                    format!("{path}.members"),
                    "directional_linkage needs at least one target",
                ));
            }
            for (i, (_, scale)) in targets.iter().enumerate() {
                if !scale.is_finite() {
                    return Err(Error::schema(
                        format!("{path}.params.scales[{i}]"),
                        "scale must be finite",
                    ));
                }
            }
        }
        JointConstraint::Reachability { members, allowed } => {
            for (vi, vector) in allowed.iter().enumerate() {
                if vector.len() != members.len() {
                    return Err(Error::schema(
                        format!("{path}.params.allowed[{vi}]"),
                        format!("expected {} values, got {}", members.len(), vector.len()),
                    ));
                }
                for (mi, (value, m)) in vector.iter().zip(members).enumerate() {
                    if !features[*m].admits_value(*value) {
                        return Err(Error::schema(
                            format!("{path}.params.allowed[{vi}][{mi}]"),
                            format!(
                                "value {} violates bounds or integrality of '{}'",
                                value, features[*m].name
                            ),
                        ));
                    }
                }
            }
        }
        JointConstraint::LogicalImplication { guard, .. } => {
            if features[*guard].kind != FeatureKind::Binary {
                return Err(Error::schema(
                    format!("{path}.members"),
                    format!("guard '{}' must be binary", features[*guard].name),
                ));
            }
        }
        JointConstraint::CausalBound { slack, .. } => {
            if !slack.is_finite() || *slack < 0.0 {
                return Err(Error::schema(
                    format!("{path}.params.slack"),
                    "slack must be finite and nonnegative",
                ));
            }
        }
    }
    Ok(())
}

/// Kahn's algorithm over the linkage digraph, smallest index first so the
/// order is deterministic. Rejects cycles.
fn linkage_topo_order(d: usize, sources: &[Vec<(usize, f64)>]) -> Result<Vec<usize>> {
    let mut indegree = vec![0usize; d];
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); d];
    for (target, inbound) in sources.iter().enumerate() {
        for (source, _) in inbound {
            indegree[target] += 1;
            outgoing[*source].push(target);
        }
    }
    let mut frontier: BTreeSet<usize> =
        (0..d).filter(|k| indegree[*k] == 0).collect();
    let mut order = Vec::with_capacity(d);
    while let Some(&k) = frontier.iter().next() {
        frontier.remove(&k);
        order.push(k);
        for &t in &outgoing[k] {
            indegree[t] -= 1;
            if indegree[t] == 0 {
                frontier.insert(t);
            }
        }
    }
    if order.len() != d {
        return Err(Error::schema(
            "constraints",
            "directional_linkage constraints form a cycle",
        ));
    }
    Ok(order)
}

fn connected_components(d: usize, joints: &[JointConstraint]) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for joint in joints {
        let members = joint.members();
        for pair in members.windows(2) {
            let a = find(&mut parent, pair[0]);
            let b = find(&mut parent, pair[1]);
            if a != b {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                parent[hi] = lo;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..d {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    let partition: Vec<Vec<usize>> = groups.into_values().collect();
    let mut part_of = vec![0usize; d];
    for (pid, part) in partition.iter().enumerate() {
        for &i in part {
            part_of[i] = pid;
        }
    }
    (partition, part_of)
}

// ---------------------------------------------------------------------------
// Document schema

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    features: Vec<FeatureDoc>,
    #[serde(default)]
    constraints: Vec<ConstraintDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureDoc {
    name: String,
    #[serde(rename = "type")]
    kind: String,
    lb: f64,
    ub: f64,
    actionable: bool,
    sign: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintDoc {
    kind: String,
    members: Vec<String>,
    #[serde(default)]
    params: serde_json::Value,
}

/// Parse and validate an action-spec document (JSON).
pub fn load_action_spec(document: &str) -> Result<ActionSet> {
    let doc: SpecDoc = serde_json::from_str(document)?;

    let mut features = Vec::with_capacity(doc.features.len());
    for (i, f) in doc.features.iter().enumerate() {
        let path = format!("features[{i}]");
        let kind = match f.kind.as_str() {
            "binary" => FeatureKind::Binary,
            "integer" => FeatureKind::Integer,
            "real" => FeatureKind::Real,
            other => {
                return Err(Error::schema(
                    format!("{path}.type"),
                    format!("unknown feature type '{other}'"),
                ))
            }
        };
        let sign = match f.sign.as_deref() {
            Some("+") => Sign::IncreaseOnly,
            Some("-") => Sign::DecreaseOnly,
            None => Sign::Free,
            Some(other) => {
                return Err(Error::schema(
                    format!("{path}.sign"),
                    format!("sign must be \"+\", \"-\", or null, got '{other}'"),
                ))
            }
        };
        features.push(FeatureSpec {
            name: f.name.clone(),
            kind,
            lower_bound: f.lb,
            upper_bound: f.ub,
            actionable: f.actionable,
            sign,
        });
    }

    let name_of = |name: &str, path: &str| -> Result<usize> {
        features
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| Error::schema(path, format!("undeclared feature '{name}'")))
    };

    let mut joints = Vec::with_capacity(doc.constraints.len());
    for (ci, c) in doc.constraints.iter().enumerate() {
        let path = format!("constraints[{ci}]");
        let members: Vec<usize> = c
            .members
            .iter()
            .map(|m| name_of(m, &format!("{path}.members")))
            .collect::<Result<_>>()?;
        let params = ParamReader::new(&c.params, &format!("{path}.params"));
        let joint = match c.kind.as_str() {
            "thermometer" => {
                let direction = match params.string("direction")?.as_str() {
                    "increase" => ThermometerDirection::Increase,
                    "decrease" => ThermometerDirection::Decrease,
                    other => {
                        return Err(Error::schema(
                            format!("{path}.params.direction"),
                            format!("direction must be 'increase' or 'decrease', got '{other}'"),
                        ))
                    }
                };
                params.allow_only(&["direction"])?;
                JointConstraint::Thermometer { members, direction }
            }
            "directional_linkage" => {
                if members.len() < 2 {
                    return Err(Error::schema(
                        format!("{path}.members"),
                        "directional_linkage needs a source and at least one target",
                    ));
                }
                let scales = params.number_array("scales")?;
                params.allow_only(&["scales"])?;
                if scales.len() != members.len() - 1 {
                    return Err(Error::schema(
                        format!("{path}.params.scales"),
                        format!("expected {} scales (one per target), got {}", members.len() - 1, scales.len()),
                    ));
                }
                let source = members[0];
                let targets = members[1..].iter().copied().zip(scales).collect();
                JointConstraint::DirectionalLinkage { source, targets }
            }
            "one_hot" => {
                params.allow_only(&[])?;
                JointConstraint::OneHot { members }
            }
            "reachability" => {
                let allowed = params.vector_array("allowed")?;
                params.allow_only(&["allowed"])?;
                JointConstraint::Reachability { members, allowed }
            }
            "logical_implication" => {
                params.allow_only(&[])?;
                if members.len() != 2 {
                    return Err(Error::schema(
                        format!("{path}.members"),
                        "logical_implication takes exactly [guard, consequent]",
                    ));
                }
                JointConstraint::LogicalImplication { guard: members[0], consequent: members[1] }
            }
            "causal_bound" => {
                let slack = params.number("slack")?;
                params.allow_only(&["slack"])?;
                if members.len() != 2 {
                    return Err(Error::schema(
                        format!("{path}.members"),
                        "causal_bound takes exactly [cause, effect]",
                    ));
                }
                JointConstraint::CausalBound { cause: members[0], effect: members[1], slack }
            }
            other => {
                return Err(Error::schema(
                    format!("{path}.kind"),
                    format!("unknown constraint kind '{other}'"),
                ))
            }
        };
        joints.push(joint);
    }

    ActionSet::new(features, joints)
}

/// Reads kind-specific `params` objects, reporting paths on every failure.
struct ParamReader<'a> {
    value: &'a serde_json::Value,
    path: String,
}

impl<'a> ParamReader<'a> {
    fn new(value: &'a serde_json::Value, path: &str) -> Self {
        ParamReader { value, path: path.to_string() }
    }

    fn object(&self) -> Result<&'a serde_json::Map<String, serde_json::Value>> {
        static EMPTY: std::sync::OnceLock<serde_json::Map<String, serde_json::Value>> =
            std::sync::OnceLock::new();
        match self.value {
            serde_json::Value::Object(map) => Ok(map),
            serde_json::Value::Null => Ok(EMPTY.get_or_init(serde_json::Map::new)),
            _ => Err(Error::schema(&self.path, "params must be an object")),
        }
    }

    fn field(&self, name: &str) -> Result<&'a serde_json::Value> {
        self.object()?
            .get(name)
            .ok_or_else(|| Error::schema(format!("{}.{name}", self.path), "missing parameter"))
    }

    fn string(&self, name: &str) -> Result<String> {
        self.field(name)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::schema(format!("{}.{name}", self.path), "expected a string"))
    }

    fn number(&self, name: &str) -> Result<f64> {
        self.field(name)?
            .as_f64()
            .ok_or_else(|| Error::schema(format!("{}.{name}", self.path), "expected a number"))
    }

    fn number_array(&self, name: &str) -> Result<Vec<f64>> {
        let arr = self
            .field(name)?
            .as_array()
            .ok_or_else(|| Error::schema(format!("{}.{name}", self.path), "expected an array"))?;
        arr.iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_f64().ok_or_else(|| {
                    Error::schema(format!("{}.{name}[{i}]", self.path), "expected a number")
                })
            })
            .collect()
    }

    fn vector_array(&self, name: &str) -> Result<Vec<Vec<f64>>> {
        let arr = self
            .field(name)?
            .as_array()
            .ok_or_else(|| Error::schema(format!("{}.{name}", self.path), "expected an array"))?;
        arr.iter()
            .enumerate()
            .map(|(i, row)| {
                let row = row.as_array().ok_or_else(|| {
                    Error::schema(format!("{}.{name}[{i}]", self.path), "expected an array")
                })?;
                row.iter()
                    .enumerate()
                    .map(|(k, v)| {
                        v.as_f64().ok_or_else(|| {
                            Error::schema(
                                format!("{}.{name}[{i}][{k}]", self.path),
                                "expected a number",
                            )
                        })
                    })
                    .collect()
            })
            .collect()
    }

    fn allow_only(&self, names: &[&str]) -> Result<()> {
        for key in self.object()?.keys() {
            if !names.contains(&key.as_str()) {
                return Err(Error::schema(
                    format!("{}.{key}", self.path),
                    "unknown parameter",
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Operations

/// The superset of single-feature interventions on discrete feature `j`:
/// integer steps v with lb <= x_j + v <= ub, v != 0, sign respected.
/// Elements need not be jointly feasible. Non-actionable features have an
/// empty grid; real-valued features are rejected.
pub fn intervention_grid(x: &[f64], j: usize, action_set: &ActionSet) -> Result<Vec<f64>> {
    check_dimension(x, action_set)?;
    let f = action_set.feature(j);
    if !f.kind.is_discrete() {
        return Err(Error::NotDiscrete { feature: f.name.clone() });
    }
    if !f.actionable {
        return Ok(Vec::new());
    }
    let lo = (f.lower_bound - x[j] - VALUE_EPS).ceil() as i64;
    let hi = (f.upper_bound - x[j] + VALUE_EPS).floor() as i64;
    let mut grid = Vec::new();
    for v in lo..=hi {
        if v == 0 {
            continue;
        }
        let vf = v as f64;
        if f.sign.allows(vf) {
            grid.push(vf);
        }
    }
    Ok(grid)
}

/// Literal separable screen: every component keeps its feature within
/// bounds, respects sign and integrality, and is zero on non-actionable
/// features. Joint constraints are not consulted, so this can reject
/// actions whose nonzero components are forced downstream effects.
pub fn separable_feasible(x: &[f64], a: &[f64], action_set: &ActionSet) -> Result<bool> {
    check_dimension(x, action_set)?;
    if a.len() != action_set.d() {
        return Err(Error::DimensionMismatch { expected: action_set.d(), actual: a.len() });
    }
    for (k, f) in action_set.features().iter().enumerate() {
        let ak = a[k];
        if ak == 0.0 {
            continue;
        }
        if !ak.is_finite() || !f.actionable || !f.sign.allows(ak) {
            return Ok(false);
        }
        if f.kind.is_discrete() && !is_integral(ak) {
            return Ok(false);
        }
        let new = x[k] + ak;
        if new < f.lower_bound - VALUE_EPS || new > f.upper_bound + VALUE_EPS {
            return Ok(false);
        }
    }
    Ok(true)
}

pub(crate) fn check_dimension(x: &[f64], action_set: &ActionSet) -> Result<()> {
    if x.len() != action_set.d() {
        return Err(Error::DimensionMismatch { expected: action_set.d(), actual: x.len() });
    }
    Ok(())
}
