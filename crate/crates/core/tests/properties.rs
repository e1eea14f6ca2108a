//! Randomized invariants: structural properties that must hold for every
//! instance, model, and parameter choice, checked with proptest over the
//! seeded instance generator.

use std::collections::BTreeSet;

use recourse_testkit::{random_instance, Oracle};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use recourse_core::actionability::{intervention_grid, separable_feasible, ActionSet};
use recourse_core::attribution::{attribute_shapley, make_action_aware, ShapleyMode};
use recourse_core::models::{load_model, to_document, Classifier, Label, ModelKind};
use recourse_core::reachable::enumerate_reachable;
use recourse_core::responsiveness::{
    agresti_coull, classify_response, sample_size, score_exact, triage, ResponseDirection,
    SampleSizeRegime, TriageStatus, TriageWitness,
};
use recourse_core::solver::{check_feasibility, find_1d_action, DEFAULT_MIN_SEPARATION};

fn part_sets(aset: &ActionSet) -> BTreeSet<BTreeSet<usize>> {
    aset.partition().iter().map(|p| p.iter().copied().collect()).collect()
}

/// Random integral linear model over the instance's features.
fn random_linear(aset: &ActionSet, x: &[f64], seed: u64) -> Classifier {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..aset.d()).map(|_| rng.gen_range(-3..=3) as f64).collect();
    let margin_at_anchor: f64 = weights.iter().zip(x).map(|(w, xi)| w * xi).sum();
    // place the threshold near the anchor's margin so both classes occur
    let threshold = margin_at_anchor + rng.gen_range(-2..=2) as f64 + 0.5;
    Classifier {
        kind: ModelKind::Linear { weights, intercept: 0.0, threshold },
        positive: Label(1),
        negative: Label(0),
    }
}

fn random_in_bounds_point(aset: &ActionSet, rng: &mut ChaCha20Rng) -> Vec<f64> {
    aset.features()
        .iter()
        .map(|f| rng.gen_range(f.lower_bound as i64..=f.upper_bound as i64) as f64)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn constraint_order_does_not_change_the_partition(
        seed in 0u64..20_000,
        shuffle_seed in 0u64..1_000,
    ) {
        let inst = random_instance(seed);
        let aset = &inst.action_set;
        let mut joints = aset.joints().to_vec();
        let mut rng = ChaCha20Rng::seed_from_u64(shuffle_seed);
        joints.shuffle(&mut rng);
        let permuted = ActionSet::new(aset.features().to_vec(), joints).unwrap();
        prop_assert_eq!(part_sets(aset), part_sets(&permuted));

        // and the library's partition agrees with an independent union-find
        let oracle = Oracle::build(aset);
        let own: BTreeSet<BTreeSet<usize>> =
            oracle.parts.iter().map(|p| p.iter().copied().collect()).collect();
        prop_assert_eq!(part_sets(aset), own);
    }

    #[test]
    fn enumerated_actions_are_pairwise_separated(seed in 0u64..20_000) {
        let inst = random_instance(seed);
        let aset = &inst.action_set;
        for j in 0..aset.d() {
            let actions = enumerate_reachable(&inst.x, j, aset).unwrap().actions();
            for (i, a) in actions.iter().enumerate() {
                prop_assert!(a[j].abs() > 1e-9, "null intervention in the reachable set");
                for b in &actions[i + 1..] {
                    let dist: f64 = a.iter().zip(b).map(|(ai, bi)| (ai - bi).abs()).sum();
                    prop_assert!(
                        dist >= DEFAULT_MIN_SEPARATION - 1e-9,
                        "actions {a:?} and {b:?} are closer than the separation floor"
                    );
                }
            }
        }
    }

    #[test]
    fn grid_interventions_pass_the_separable_screen(seed in 0u64..20_000) {
        let inst = random_instance(seed);
        let aset = &inst.action_set;
        for j in 0..aset.d() {
            let grid = intervention_grid(&inst.x, j, aset).unwrap();
            if !aset.feature(j).actionable {
                prop_assert!(grid.is_empty());
            }
            for v in grid {
                prop_assert!(v != 0.0);
                let mut a = vec![0.0; aset.d()];
                a[j] = v;
                prop_assert!(separable_feasible(&inst.x, &a, aset).unwrap());
            }
        }
    }

    #[test]
    fn nearest_actions_pass_the_feasibility_check(seed in 0u64..20_000) {
        let inst = random_instance(seed);
        let aset = &inst.action_set;
        for j in 0..aset.d() {
            for v in intervention_grid(&inst.x, j, aset).unwrap() {
                if let Some(a) = find_1d_action(&inst.x, j, v, aset, &[]).unwrap() {
                    prop_assert!((a[j] - v).abs() <= 1e-9);
                    prop_assert!(check_feasibility(&inst.x, &a, aset).unwrap());
                }
            }
        }
    }

    #[test]
    fn exact_scores_ignore_point_order(seed in 0u64..20_000, model_seed in 0u64..1_000) {
        let inst = random_instance(seed);
        let aset = &inst.action_set;
        let model = random_linear(aset, &inst.x, model_seed);
        for j in 0..aset.d() {
            let set = enumerate_reachable(&inst.x, j, aset).unwrap();
            let base = score_exact(&set, &model, model.positive).unwrap();
            prop_assert!((0.0..=1.0).contains(&base.estimate));
            prop_assert!(base.exact);
            prop_assert_eq!(base.trials, set.len() as u64);

            let mut shuffled = set.clone();
            let mut rng = ChaCha20Rng::seed_from_u64(model_seed ^ 0xABCD);
            shuffled.points.shuffle(&mut rng);
            let again = score_exact(&shuffled, &model, model.positive).unwrap();
            prop_assert_eq!(base.successes, again.successes);
            prop_assert_eq!(base.estimate, again.estimate);
        }
    }

    #[test]
    fn classification_flags_are_mutually_consistent(
        seed in 0u64..20_000,
        model_seed in 0u64..1_000,
    ) {
        let inst = random_instance(seed);
        let aset = &inst.action_set;
        let model = random_linear(aset, &inst.x, model_seed);
        let expectations = [
            None,
            Some(ResponseDirection::Increase),
            Some(ResponseDirection::Decrease),
            Some(ResponseDirection::Both),
        ];
        for j in 0..aset.d() {
            let set = enumerate_reachable(&inst.x, j, aset).unwrap();
            for expected in expectations {
                let c = classify_response(&set, &model, model.positive, expected).unwrap();
                prop_assert_eq!(c.intuitive.is_some(), expected.is_some());
                prop_assert_eq!(c.direction.is_some(), c.monotonic);
                if c.monotonic {
                    prop_assert!(c.responsive, "monotonic response implies responsiveness");
                }
                if c.intuitive == Some(true) {
                    prop_assert!(c.monotonic, "intuitive response implies monotonicity");
                }
                if expected == Some(ResponseDirection::Both) {
                    prop_assert_eq!(c.intuitive, Some(c.monotonic));
                }
            }
        }
    }

    #[test]
    fn corrected_intervals_stay_inside_the_unit_interval(
        s in 0u64..400,
        extra in 0u64..400,
        alpha_pct in 1u32..50,
    ) {
        let n = s + extra + 1;
        let alpha = f64::from(alpha_pct) / 100.0;
        let (center, width) = agresti_coull(s, n, alpha).unwrap();
        prop_assert!(center > 0.0 && center < 1.0);
        prop_assert!(width > 0.0);

        // symmetry: swapping successes and failures mirrors the interval
        let (mirror_c, mirror_w) = agresti_coull(n - s, n, alpha).unwrap();
        prop_assert!((center + mirror_c - 1.0).abs() <= 1e-12);
        prop_assert!((width - mirror_w).abs() <= 1e-12);

        // the center is strictly monotone in the success count
        if s < n {
            let (next_c, _) = agresti_coull(s + 1, n, alpha).unwrap();
            prop_assert!(next_c > center);
        }

        // no realized width exceeds the balanced outcome's width (even n)
        let even_n = 2 * n;
        let (_, at_half) = agresti_coull(n, even_n, alpha).unwrap();
        let (_, elsewhere) = agresti_coull(s.min(even_n), even_n, alpha).unwrap();
        prop_assert!(elsewhere <= at_half + 1e-15);
    }

    #[test]
    fn planned_sizes_are_minimal_and_monotone(
        alpha_pct in 1u32..=30,
        e_milli in 5u64..=200,
    ) {
        let alpha = f64::from(alpha_pct) / 100.0;
        let e = e_milli as f64 / 1000.0;
        let shortest = sample_size(alpha, e, SampleSizeRegime::Shortest).unwrap();
        let widest = sample_size(alpha, e, SampleSizeRegime::Widest).unwrap();
        prop_assert!(widest >= shortest);

        // the shortest-regime width is the S = 0 width: achieved at N,
        // violated at N - 1, so N is minimal
        let (_, at_plan) = agresti_coull(0, shortest, alpha).unwrap();
        prop_assert!(at_plan <= e + 1e-12);
        if shortest > 1 {
            let (_, below_plan) = agresti_coull(0, shortest - 1, alpha).unwrap();
            prop_assert!(below_plan > e);
        }

        // the widest-regime plan bounds every realizable outcome
        for s in [0, widest / 4, widest / 2, widest.saturating_sub(1), widest] {
            let (_, w) = agresti_coull(s, widest, alpha).unwrap();
            prop_assert!(w <= e + 1e-12, "width at S = {s} exceeds the plan");
        }

        // looser tolerance or confidence never demands more samples
        let looser_e = sample_size(alpha, e * 2.0, SampleSizeRegime::Shortest).unwrap();
        prop_assert!(looser_e <= shortest);
        let looser_a = sample_size((alpha * 1.5).min(0.49), e, SampleSizeRegime::Shortest).unwrap();
        prop_assert!(looser_a <= shortest);
    }

    #[test]
    fn action_aware_masking_is_idempotent(seed in 0u64..20_000) {
        let inst = random_instance(seed);
        let aset = &inst.action_set;
        let model = random_linear(aset, &inst.x, seed ^ 0x5EED);
        let baseline: Vec<f64> =
            aset.features().iter().map(|f| f.lower_bound).collect();
        let attr =
            attribute_shapley(&inst.x, &model, &baseline, ShapleyMode::Exact, 0, 0).unwrap();

        let masked = make_action_aware(&attr, aset).unwrap();
        let twice = make_action_aware(&masked, aset).unwrap();
        prop_assert_eq!(&masked, &twice);
        prop_assert!(masked.action_aware);
        prop_assert_eq!(&masked.method, &attr.method);
        for j in 0..aset.d() {
            if aset.feature(j).actionable {
                prop_assert_eq!(masked.scores[j], attr.scores[j]);
            } else {
                prop_assert_eq!(masked.scores[j], 0.0);
            }
        }
    }

    #[test]
    fn model_documents_round_trip_predictions(
        seed in 0u64..20_000,
        model_seed in 0u64..1_000,
    ) {
        let inst = random_instance(seed);
        let aset = &inst.action_set;
        let mut rng = ChaCha20Rng::seed_from_u64(model_seed);

        let linear = random_linear(aset, &inst.x, model_seed);
        let revived = load_model(&to_document(&linear, aset).unwrap(), aset).unwrap();
        for _ in 0..20 {
            let p = random_in_bounds_point(aset, &mut rng);
            prop_assert_eq!(linear.predict(&p).unwrap(), revived.predict(&p).unwrap());
        }

        // lookup table over a handful of distinct in-bounds rows
        let mut rows: Vec<(Vec<f64>, Label)> = Vec::new();
        for _ in 0..6 {
            let p = random_in_bounds_point(aset, &mut rng);
            if rows.iter().any(|(q, _)| q == &p) {
                continue;
            }
            let label = if rng.gen_bool(0.5) { Label(1) } else { Label(0) };
            rows.push((p, label));
        }
        let table = Classifier {
            kind: ModelKind::Table { rows: rows.clone() },
            positive: Label(1),
            negative: Label(0),
        };
        let revived = load_model(&to_document(&table, aset).unwrap(), aset).unwrap();
        for (p, _) in &rows {
            prop_assert_eq!(table.predict(p).unwrap(), revived.predict(p).unwrap());
        }
    }

    #[test]
    fn triage_witnesses_actually_attain_the_target(
        seed in 0u64..20_000,
        model_seed in 0u64..1_000,
    ) {
        let inst = random_instance(seed);
        let aset = &inst.action_set;
        let model = random_linear(aset, &inst.x, model_seed);
        let target = model.positive;
        prop_assume!(model.predict(&inst.x).unwrap() != target);

        let scores: Vec<_> = (0..aset.d())
            .map(|j| {
                let set = enumerate_reachable(&inst.x, j, aset).unwrap();
                score_exact(&set, &model, target).unwrap()
            })
            .collect();
        let verdict = triage(&inst.x, &scores, aset, &model, target).unwrap();

        match verdict.status {
            TriageStatus::SingleFeatureRecourse => {
                // exact scores are complete, so any single-feature witness
                // must be visible in its own responsiveness score
                let Some(TriageWitness::Feature(j)) = verdict.witness else {
                    panic!("single-feature verdict needs a feature witness");
                };
                prop_assert!(scores[j].estimate > 0.0);
            }
            TriageStatus::JointOnlyRecourse => {
                prop_assert!(scores.iter().all(|s| s.estimate == 0.0));
                let Some(TriageWitness::JointAction(a)) = verdict.witness else {
                    panic!("joint verdict needs an action witness");
                };
                let endpoint: Vec<f64> =
                    inst.x.iter().zip(&a).map(|(xi, ai)| xi + ai).collect();
                prop_assert_eq!(model.predict(&endpoint).unwrap(), target);
                for (k, f) in aset.features().iter().enumerate() {
                    prop_assert!(endpoint[k] >= f.lower_bound - 1e-9);
                    prop_assert!(endpoint[k] <= f.upper_bound + 1e-9);
                }
            }
            TriageStatus::FixedPrediction => {
                prop_assert!(scores.iter().all(|s| s.estimate == 0.0));
                prop_assert!(verdict.witness.is_none());
            }
            TriageStatus::Undetermined => {}
        }
    }
}
