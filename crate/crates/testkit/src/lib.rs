//! Test support: a seeded generator of small all-discrete actionability
//! instances, and a brute-force oracle that re-derives partitions,
//! feasibility, reachable sets, and minimal action norms directly from the
//! declared features and constraints. The oracle shares no search machinery
//! with the main library, so agreement between the two is evidence of
//! correctness rather than of shared bugs.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use recourse_core::actionability::{
    ActionSet, FeatureKind, FeatureSpec, JointConstraint, Sign, ThermometerDirection,
};

/// Tolerance for treating floats as equal. All generated instances are
/// integral, so this only absorbs representation noise.
pub const EPS: f64 = 1e-9;

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= EPS
}

fn integral(v: f64) -> bool {
    (v - v.round()).abs() <= EPS
}

// ---------------------------------------------------------------------------
// Oracle

/// Derived constraint structure, rebuilt from scratch with its own
/// union-find rather than read back from the library.
pub struct Oracle {
    pub parts: Vec<Vec<usize>>,
    pub part_of: Vec<usize>,
    /// Inbound linkage edges per feature, as (source, scale).
    linkage_in: Vec<Vec<(usize, f64)>>,
    /// Causal-bound drift window per feature (min over bounds; 0 if none).
    slack: Vec<f64>,
    /// Whether the feature belongs to a validity-type constraint and may
    /// therefore move deliberately as a completion.
    completion: Vec<bool>,
}

impl Oracle {
    pub fn build(aset: &ActionSet) -> Oracle {
        let d = aset.d();
        let mut parent: Vec<usize> = (0..d).collect();
        fn find(parent: &mut [usize], i: usize) -> usize {
            let mut root = i;
            while parent[root] != root {
                root = parent[root];
            }
            let mut walk = i;
            while parent[walk] != root {
                let next = parent[walk];
                parent[walk] = root;
                walk = next;
            }
            root
        }

        let mut linkage_in: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d];
        let mut slack: Vec<Option<f64>> = vec![None; d];
        let mut completion = vec![false; d];

        for joint in aset.joints() {
            let members = joint.members();
            for pair in members.windows(2) {
                let a = find(&mut parent, pair[0]);
                let b = find(&mut parent, pair[1]);
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
            match joint {
                JointConstraint::DirectionalLinkage { source, targets } => {
                    for (t, scale) in targets {
                        linkage_in[*t].push((*source, *scale));
                    }
                }
                JointConstraint::CausalBound { effect, slack: s, .. } => {
                    let merged = slack[*effect].map_or(*s, |prev: f64| prev.min(*s));
                    slack[*effect] = Some(merged);
                }
                _ => {
                    for m in &members {
                        completion[*m] = true;
                    }
                }
            }
        }

        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..d {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        let parts: Vec<Vec<usize>> = groups.into_values().collect();
        let mut part_of = vec![0usize; d];
        for (pid, part) in parts.iter().enumerate() {
            for &i in part {
                part_of[i] = pid;
            }
        }
        Oracle {
            parts,
            part_of,
            linkage_in,
            slack: slack.into_iter().map(|s| s.unwrap_or(0.0)).collect(),
            completion,
        }
    }

    /// Joint state constraints of `part_id`, evaluated at x + a.
    fn joints_hold(&self, aset: &ActionSet, x: &[f64], a: &[f64], part_id: usize) -> bool {
        for joint in aset.joints() {
            let members = joint.members();
            if members.iter().all(|m| self.part_of[*m] != part_id) {
                continue;
            }
            let ok = match joint {
                JointConstraint::Thermometer { members, direction } => {
                    let mut prev = 1.0;
                    let mut fine = true;
                    for &m in members {
                        let new = x[m] + a[m];
                        if !(near(new, 0.0) || near(new, 1.0)) || new > prev + EPS {
                            fine = false;
                            break;
                        }
                        prev = new;
                        let dir_ok = match direction {
                            ThermometerDirection::Increase => a[m] >= -EPS,
                            ThermometerDirection::Decrease => a[m] <= EPS,
                        };
                        if !dir_ok {
                            fine = false;
                            break;
                        }
                    }
                    fine
                }
                JointConstraint::OneHot { members } => {
                    let mut sum = 0.0;
                    let mut fine = true;
                    for &m in members {
                        let new = x[m] + a[m];
                        if !(near(new, 0.0) || near(new, 1.0)) {
                            fine = false;
                            break;
                        }
                        sum += new;
                    }
                    fine && near(sum, 1.0)
                }
                JointConstraint::Reachability { members, allowed } => allowed.iter().any(|want| {
                    members.iter().zip(want).all(|(m, w)| near(x[*m] + a[*m], *w))
                }),
                JointConstraint::LogicalImplication { guard, consequent } => {
                    let g = x[*guard] + a[*guard];
                    let c = x[*consequent] + a[*consequent];
                    let f = aset.feature(*consequent);
                    c <= f.upper_bound * g + EPS && c >= f.lower_bound * g - EPS
                }
                JointConstraint::CausalBound { cause, effect, .. } => {
                    x[*cause] + a[*cause] <= x[*effect] + a[*effect] + EPS
                }
                JointConstraint::DirectionalLinkage { .. } => true,
            };
            if !ok {
                return false;
            }
        }
        true
    }

    /// Whether the total a_k splits as forced-linkage + deliberate + drift,
    /// brute-forcing the integral drift steps.
    fn splits(&self, aset: &ActionSet, a: &[f64], k: usize, deliberate: bool) -> bool {
        let forced: f64 = self.linkage_in[k].iter().map(|(s, scale)| scale * a[*s]).sum();
        let steps = (self.slack[k] + EPS).floor() as i64;
        for dstep in 0..=steps {
            let w = a[k] - forced - dstep as f64;
            if !integral(w) {
                continue;
            }
            if w.abs() <= EPS {
                return true;
            }
            if deliberate && aset.feature(k).sign.allows(w) {
                return true;
            }
        }
        false
    }

    /// Bounds, finiteness, and integrality of every total in the part.
    fn totals_ok(&self, aset: &ActionSet, x: &[f64], a: &[f64], part_id: usize) -> bool {
        self.parts[part_id].iter().all(|&k| {
            let f = aset.feature(k);
            let new = x[k] + a[k];
            a[k].is_finite()
                && new >= f.lower_bound - EPS
                && new <= f.upper_bound + EPS
                && (!f.kind.is_discrete() || integral(a[k]))
        })
    }

    /// Full single-feature feasibility of `a` designated at `j`: support
    /// confined to j's part, totals admissible, joint constraints holding,
    /// and every total decomposing with only j (plus validity-constraint
    /// members) moving deliberately.
    pub fn action_ok_designated(&self, aset: &ActionSet, x: &[f64], a: &[f64], j: usize) -> bool {
        if a[j].abs() <= EPS || !aset.feature(j).actionable {
            return false;
        }
        let pid = self.part_of[j];
        for (k, &ak) in a.iter().enumerate() {
            if self.part_of[k] != pid && ak != 0.0 {
                return false;
            }
        }
        if !self.totals_ok(aset, x, a, pid) || !self.joints_hold(aset, x, a, pid) {
            return false;
        }
        self.parts[pid].iter().all(|&k| {
            let deliberate =
                (k == j || self.completion[k]) && aset.feature(k).actionable;
            self.splits(aset, a, k, deliberate)
        })
    }

    /// Existential single-feature feasibility: the zero action, or some
    /// supported feature admits a designated decomposition.
    pub fn feasible(&self, aset: &ActionSet, x: &[f64], a: &[f64]) -> bool {
        let support: Vec<usize> = (0..aset.d()).filter(|&k| a[k] != 0.0).collect();
        if support.is_empty() {
            return true;
        }
        let pid = self.part_of[support[0]];
        if support.iter().any(|&k| self.part_of[k] != pid) {
            return false;
        }
        support.iter().any(|&j| self.action_ok_designated(aset, x, a, j))
    }

    /// Nonzero integral interventions on `j` that respect sign and bounds.
    pub fn intervention_values(&self, aset: &ActionSet, x: &[f64], j: usize) -> Vec<f64> {
        let f = aset.feature(j);
        if !f.actionable {
            return Vec::new();
        }
        let lo = (f.lower_bound - x[j] - EPS).ceil() as i64;
        let hi = (f.upper_bound - x[j] + EPS).floor() as i64;
        (lo..=hi)
            .filter(|&v| v != 0)
            .map(|v| v as f64)
            .filter(|&v| f.sign.allows(v))
            .collect()
    }

    /// Every feasible action with a_j = v, by exhausting the full product of
    /// in-bounds totals over j's part.
    pub fn completions(&self, aset: &ActionSet, x: &[f64], j: usize, v: f64) -> Vec<Vec<f64>> {
        let pid = self.part_of[j];
        let rest: Vec<usize> =
            self.parts[pid].iter().copied().filter(|&k| k != j).collect();
        let ranges: Vec<Vec<f64>> = rest
            .iter()
            .map(|&k| {
                let f = aset.feature(k);
                let lo = (f.lower_bound - x[k] - EPS).ceil() as i64;
                let hi = (f.upper_bound - x[k] + EPS).floor() as i64;
                (lo..=hi).map(|t| t as f64).collect()
            })
            .collect();

        let mut found = Vec::new();
        let mut counters = vec![0usize; rest.len()];
        loop {
            let mut a = vec![0.0; aset.d()];
            a[j] = v;
            for (slot, &k) in rest.iter().enumerate() {
                a[k] = ranges[slot][counters[slot]];
            }
            if self.action_ok_designated(aset, x, &a, j) {
                found.push(a);
            }
            // odometer increment
            let mut slot = 0;
            loop {
                if slot == rest.len() {
                    return found;
                }
                counters[slot] += 1;
                if counters[slot] < ranges[slot].len() {
                    break;
                }
                counters[slot] = 0;
                slot += 1;
            }
        }
    }

    /// The reachable set of `j` as rounded integer points, over the whole
    /// intervention grid.
    pub fn reachable_points(&self, aset: &ActionSet, x: &[f64], j: usize) -> BTreeSet<Vec<i64>> {
        let mut points = BTreeSet::new();
        for v in self.intervention_values(aset, x, j) {
            for a in self.completions(aset, x, j, v) {
                points.insert(round_point(
                    &x.iter().zip(&a).map(|(xi, ai)| xi + ai).collect::<Vec<f64>>(),
                ));
            }
        }
        points
    }

    /// Minimal L1 norm over feasible actions with a_j = v that keep at least
    /// `min_separation` (L1) away from every excluded action.
    pub fn min_norm(
        &self,
        aset: &ActionSet,
        x: &[f64],
        j: usize,
        v: f64,
        excluded: &[Vec<f64>],
        min_separation: f64,
    ) -> Option<f64> {
        self.completions(aset, x, j, v)
            .into_iter()
            .filter(|a| {
                excluded.iter().all(|e| {
                    let dist: f64 = a.iter().zip(e).map(|(ai, ei)| (ai - ei).abs()).sum();
                    dist >= min_separation - EPS
                })
            })
            .map(|a| a.iter().map(|c| c.abs()).sum())
            .fold(None, |best: Option<f64>, norm: f64| {
                Some(best.map_or(norm, |b| b.min(norm)))
            })
    }
}

/// Round an integral float vector to i64 for exact set comparison.
pub fn round_point(p: &[f64]) -> Vec<i64> {
    p.iter()
        .map(|&c| {
            assert!(integral(c), "expected an integral coordinate, got {c}");
            c.round() as i64
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Instance generator

pub struct GeneratedInstance {
    pub action_set: ActionSet,
    pub x: Vec<f64>,
}

/// Deterministic small all-discrete instance for the given seed: 2-5
/// features (binary or narrow integer), up to two joint constraints of
/// mixed kinds, and an anchor that satisfies every constraint.
pub fn random_instance(seed: u64) -> GeneratedInstance {
    random_instance_with(seed, 5)
}

pub fn random_instance_with(seed: u64, max_features: usize) -> GeneratedInstance {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..500 {
        if let Some(instance) = try_generate(&mut rng, max_features) {
            return instance;
        }
    }
    panic!("no valid instance found for seed {seed}");
}

fn try_generate(rng: &mut ChaCha20Rng, max_features: usize) -> Option<GeneratedInstance> {
    let d = rng.gen_range(2..=max_features);
    let mut features = Vec::with_capacity(d);
    for i in 0..d {
        let binary = rng.gen_bool(0.5);
        let (kind, lb, ub) = if binary {
            (FeatureKind::Binary, 0.0, 1.0)
        } else {
            let lb = rng.gen_range(-2..=0) as f64;
            let width = rng.gen_range(1..=4) as f64;
            (FeatureKind::Integer, lb, lb + width)
        };
        let sign = match rng.gen_range(0..10) {
            0..=5 => Sign::Free,
            6..=7 => Sign::IncreaseOnly,
            _ => Sign::DecreaseOnly,
        };
        features.push(FeatureSpec {
            name: format!("f{i}"),
            kind,
            lower_bound: lb,
            upper_bound: ub,
            actionable: rng.gen_bool(0.8),
            sign,
        });
    }

    let mut joints = Vec::new();
    for _ in 0..rng.gen_range(0..=2usize) {
        if let Some(joint) = random_joint(rng, &features) {
            joints.push(joint);
        }
    }

    let action_set = ActionSet::new(features, joints).ok()?;
    let x = anchor_for(rng, &action_set)?;
    Some(GeneratedInstance { action_set, x })
}

fn random_joint(rng: &mut ChaCha20Rng, features: &[FeatureSpec]) -> Option<JointConstraint> {
    let binaries: Vec<usize> = features
        .iter()
        .enumerate()
        .filter(|(_, f)| f.kind == FeatureKind::Binary)
        .map(|(i, _)| i)
        .collect();
    let all: Vec<usize> = (0..features.len()).collect();

    match rng.gen_range(0..6) {
        0 | 1 if binaries.len() >= 2 => {
            // thermometer or one-hot over two or three binary dummies
            let mut members = binaries.clone();
            members.shuffle(rng);
            members.truncate(rng.gen_range(2..=binaries.len().min(3)));
            if rng.gen_bool(0.5) {
                let direction = if rng.gen_bool(0.5) {
                    ThermometerDirection::Increase
                } else {
                    ThermometerDirection::Decrease
                };
                Some(JointConstraint::Thermometer { members, direction })
            } else {
                Some(JointConstraint::OneHot { members })
            }
        }
        2 => {
            let mut members = all;
            members.shuffle(rng);
            members.truncate(2);
            let n_vectors = rng.gen_range(1..=4);
            let mut allowed: Vec<Vec<f64>> = Vec::new();
            for _ in 0..n_vectors {
                let vector: Vec<f64> = members
                    .iter()
                    .map(|&m| {
                        let f = &features[m];
                        rng.gen_range(f.lower_bound as i64..=f.upper_bound as i64) as f64
                    })
                    .collect();
                if !allowed.contains(&vector) {
                    allowed.push(vector);
                }
            }
            Some(JointConstraint::Reachability { members, allowed })
        }
        3 if !binaries.is_empty() && features.len() >= 2 => {
            let guard = binaries[rng.gen_range(0..binaries.len())];
            let others: Vec<usize> = all.into_iter().filter(|&i| i != guard).collect();
            let consequent = others[rng.gen_range(0..others.len())];
            Some(JointConstraint::LogicalImplication { guard, consequent })
        }
        4 => {
            let mut pick = all;
            pick.shuffle(rng);
            Some(JointConstraint::CausalBound {
                cause: pick[0],
                effect: pick[1],
                slack: rng.gen_range(0..=2) as f64,
            })
        }
        5 => {
            let mut pick = all;
            pick.shuffle(rng);
            let scale = *[-2.0, -1.0, 1.0, 2.0].choose(rng).unwrap();
            Some(JointConstraint::DirectionalLinkage {
                source: pick[0],
                targets: vec![(pick[1], scale)],
            })
        }
        _ => None,
    }
}

/// A random integral in-bounds anchor adjusted to satisfy every joint
/// constraint; None if the constraints collide.
fn anchor_for(rng: &mut ChaCha20Rng, aset: &ActionSet) -> Option<Vec<f64>> {
    let mut x: Vec<f64> = aset
        .features()
        .iter()
        .map(|f| rng.gen_range(f.lower_bound as i64..=f.upper_bound as i64) as f64)
        .collect();

    for joint in aset.joints() {
        match joint {
            JointConstraint::Thermometer { members, .. } => {
                let ones = rng.gen_range(0..=members.len());
                for (rank, &m) in members.iter().enumerate() {
                    x[m] = if rank < ones { 1.0 } else { 0.0 };
                }
            }
            JointConstraint::OneHot { members } => {
                let hot = rng.gen_range(0..members.len());
                for (rank, &m) in members.iter().enumerate() {
                    x[m] = if rank == hot { 1.0 } else { 0.0 };
                }
            }
            JointConstraint::Reachability { members, allowed } => {
                let want = &allowed[rng.gen_range(0..allowed.len())];
                for (&m, &w) in members.iter().zip(want) {
                    x[m] = w;
                }
            }
            JointConstraint::LogicalImplication { guard, consequent } => {
                let f = aset.feature(*consequent);
                if x[*guard] == 0.0 && !(f.lower_bound <= EPS && f.upper_bound >= -EPS) {
                    x[*guard] = 1.0;
                } else if x[*guard] == 0.0 {
                    x[*consequent] = 0.0;
                }
            }
            JointConstraint::CausalBound { cause, effect, .. } => {
                let fc = aset.feature(*cause);
                let fe = aset.feature(*effect);
                let mut pairs = Vec::new();
                for c in fc.lower_bound as i64..=fc.upper_bound as i64 {
                    for e in fe.lower_bound as i64..=fe.upper_bound as i64 {
                        if c <= e {
                            pairs.push((c as f64, e as f64));
                        }
                    }
                }
                let (c, e) = *pairs.choose(rng)?;
                x[*cause] = c;
                x[*effect] = e;
            }
            JointConstraint::DirectionalLinkage { .. } => {}
        }
    }

    // overlapping constraints may clobber each other's fix-ups; keep only
    // anchors that satisfy everything simultaneously
    let oracle = Oracle::build(aset);
    let zero = vec![0.0; aset.d()];
    let all_ok = (0..oracle.parts.len())
        .all(|pid| oracle.joints_hold(aset, &x, &zero, pid));
    let admissible = aset
        .features()
        .iter()
        .zip(&x)
        .all(|(f, &xi)| xi >= f.lower_bound - EPS && xi <= f.upper_bound + EPS);
    (all_ok && admissible).then_some(x)
}
