//! Release-gate acceptance suite.
//!
//! Each test checks one gate criterion end to end and prints a single
//! `acceptance NN PASS` line on success; an assertion failure is the
//! corresponding fail line. Run with `--nocapture` to see the pass lines.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use recourse_cli::commands::{
    cmd_audit, cmd_explain, cmd_samplesize, cmd_score, AuditArgs, ExplainArgs, InputArgs,
    RunArgs, SampleSizeArgs, ScoreArgs,
};
use recourse_core::actionability::load_action_spec;
use recourse_core::attribution::{attribute_shapley, ShapleyMode};
use recourse_core::models::{load_model, Classifier, Label, ModelKind};
use recourse_core::reachable::{enumerate_reachable, sample_reachable};
use recourse_core::responsiveness::{
    agresti_coull, sample_size, score_estimated, score_exact, SampleSizeRegime,
};
use recourse_core::solver::find_1d_action;
use recourse_testkit::{random_instance, round_point, Oracle};

fn fixture(name: &str, file: &str) -> PathBuf {
    PathBuf::from(format!("{}/fixtures/{name}/{file}", env!("CARGO_MANIFEST_DIR")))
}

fn input(name: &str) -> InputArgs {
    InputArgs {
        data: fixture(name, "data.csv"),
        actions: fixture(name, "actions.json"),
        model: fixture(name, "model.json"),
        label_column: "label".to_string(),
    }
}

fn defaults() -> RunArgs {
    RunArgs { sample: None, alpha: 0.05, seed: 0, cache_dir: None, out: None }
}

/// Release gate 1: the sample-size planner reproduces the full frozen table —
/// 12 entries per regime over alpha x half-width — in under a second.
#[test]
fn acceptance_01_sample_size_planning() {
    let t0 = Instant::now();
    // per regime: rows of (alpha, [(half_width, expected n); 4])
    type RegimeRows = [(f64, [(f64, u64); 4]); 3];
    let tables: [(&str, RegimeRows); 2] = [
        (
            "shortest",
            [
                (0.01, [(0.01, 461), (0.02, 227), (0.05, 86), (0.10, 39)]),
                (0.05, [(0.01, 267), (0.02, 132), (0.05, 50), (0.10, 23)]),
                (0.10, [(0.01, 188), (0.02, 93), (0.05, 35), (0.10, 16)]),
            ],
        ),
        (
            "widest",
            [
                (0.01, [(0.01, 16581), (0.02, 4141), (0.05, 657), (0.10, 160)]),
                (0.05, [(0.01, 9600), (0.02, 2398), (0.05, 381), (0.10, 93)]),
                (0.10, [(0.01, 6762), (0.02, 1689), (0.05, 268), (0.10, 65)]),
            ],
        ),
    ];
    let mut checked = 0;
    for (regime, rows) in &tables {
        for (alpha, entries) in rows {
            for (half_width, expected) in entries {
                let report = cmd_samplesize(&SampleSizeArgs {
                    alpha: *alpha,
                    half_width: *half_width,
                    regime: regime.to_string(),
                    out: None,
                })
                .expect("planning succeeds");
                assert_eq!(
                    report.n, *expected,
                    "regime {regime}, alpha {alpha}, half-width {half_width}"
                );
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 24);

    // spot-check the interval arithmetic the planner inverts
    let (center, half) = agresti_coull(0, 500, 0.01).expect("interval");
    assert!((center - 0.0065480).abs() < 1e-6, "corrected center was {center}");
    assert!((half - 0.0092299).abs() < 1e-6, "half-width was {half}");

    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(1), "planning took {elapsed:?}");
    println!("acceptance 01 PASS: 24/24 planned sample sizes match the frozen table in {elapsed:?}");
}

/// Release gate 2: corrected-interval coverage stays at or above 0.93 across
/// extreme and central rates, small and large N, over 1000 seeded resamples.
#[test]
fn acceptance_02_interval_coverage() {
    let t0 = Instant::now();
    let alpha = 0.05;
    let resamples = 1000;
    let mut worst: f64 = 1.0;
    for (ci, &(mu, n)) in [(0.01, 50u64), (0.01, 500), (0.5, 50), (0.5, 500), (0.99, 50), (0.99, 500)]
        .iter()
        .enumerate()
    {
        let mut rng = ChaCha8Rng::seed_from_u64(2024 + ci as u64);
        let binomial = Binomial::new(n, mu).expect("valid binomial");
        let mut covered = 0;
        for _ in 0..resamples {
            let s: u64 = binomial.sample(&mut rng);
            let (center, half) = agresti_coull(s, n, alpha).expect("interval");
            if (center - mu).abs() <= half {
                covered += 1;
            }
        }
        let rate = covered as f64 / resamples as f64;
        worst = worst.min(rate);
        assert!(rate >= 0.93, "coverage {rate} below 0.93 at rate {mu}, trials {n}");
    }
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(10), "coverage run took {elapsed:?}");
    println!(
        "acceptance 02 PASS: interval coverage >= 0.93 on all six (rate, N) settings \
         (worst {worst:.3}) in {elapsed:?}"
    );
}

/// Release gate 3: on the two-ladder fixture the exact scores are 3/4 and 1/4,
/// computed both through the core API and through the score command.
#[test]
fn acceptance_03_exact_scores_on_the_ladder_fixture() {
    let actions =
        std::fs::read_to_string(fixture("ladders", "actions.json")).expect("fixture exists");
    let action_set = load_action_spec(&actions).expect("valid action spec");
    let model_doc =
        std::fs::read_to_string(fixture("ladders", "model.json")).expect("fixture exists");
    let model = load_model(&model_doc, &action_set).expect("valid model");
    let x = vec![0.0, 0.0];

    let set_a = enumerate_reachable(&x, 0, &action_set).expect("enumeration");
    let set_b = enumerate_reachable(&x, 1, &action_set).expect("enumeration");
    assert_eq!(set_a.points.len(), 4);
    assert_eq!(set_b.points.len(), 4);
    let score_a = score_exact(&set_a, &model, model.positive).expect("scoring");
    let score_b = score_exact(&set_b, &model, model.positive).expect("scoring");
    assert_eq!(score_a.estimate, 0.75);
    assert_eq!((score_a.successes, score_a.trials), (3, 4));
    assert_eq!(score_b.estimate, 0.25);
    assert_eq!((score_b.successes, score_b.trials), (1, 4));

    // the score command reports exactly the same numbers
    let report = cmd_score(&ScoreArgs { input: input("ladders"), run: defaults(), rows: None })
        .expect("score command");
    assert_eq!(report.n_denied, 1);
    let features = &report.rows[0].features;
    assert_eq!(features[0].estimate, 0.75);
    assert_eq!(features[1].estimate, 0.25);
    assert!(features.iter().all(|f| f.exact));

    println!("acceptance 03 PASS: ladder fixture scores are exactly 3/4 and 1/4");
}

/// Release gate 4: on the age/savings fixture, triage certifies the two senior
/// rows as fixed predictions and the remaining row as single-feature
/// recourse, and responsiveness explanations withhold listings on the fixed
/// rows.
#[test]
fn acceptance_04_triage_on_the_age_savings_fixture() {
    let report = cmd_explain(&ExplainArgs {
        input: input("age_savings"),
        run: defaults(),
        method: "resp".to_string(),
        k: 4,
        rows: None,
    })
    .expect("explain command");
    assert_eq!(report.n_denied, 3, "all three rows are denied");

    let by_row: Vec<_> = report.rows.iter().collect();
    for fixed_row in [0, 1] {
        let row = by_row[fixed_row];
        let triage = row.triage.as_ref().expect("triage attached");
        assert_eq!(triage.status, "fixed_prediction", "row {}", row.row);
        assert!(row.items.is_empty(), "fixed rows get no feature listing");
        assert!(row.escalate, "fixed rows are flagged for review");
    }
    let row = by_row[2];
    let triage = row.triage.as_ref().expect("triage attached");
    assert_eq!(triage.status, "single_feature_recourse");
    assert_eq!(triage.witness_feature.as_deref(), Some("has_savings"));
    assert!(!row.escalate);
    assert_eq!(row.items.len(), 1);
    assert_eq!(row.items[0].feature, "has_savings");
    assert_eq!(row.items[0].score, 1.0);

    println!(
        "acceptance 04 PASS: age/savings triage is fixed/fixed/single-feature with \
         withheld listings on fixed rows"
    );
}

/// Release gate 5: across 500 generated instances, enumerated reachable sets
/// equal the brute-force oracle's sets, and nearest-action norms equal the
/// brute-force minima, in under a minute.
#[test]
fn acceptance_05_solver_oracle_equivalence() {
    let t0 = Instant::now();
    let mut sets_checked = 0usize;
    let mut searches_checked = 0usize;
    for seed in 0..500u64 {
        let instance = random_instance(seed);
        let action_set = &instance.action_set;
        let x = &instance.x;
        let oracle = Oracle::build(action_set);
        for j in 0..action_set.d() {
            let set = enumerate_reachable(x, j, action_set).expect("enumeration");
            let got: BTreeSet<Vec<i64>> = set.points.iter().map(|p| round_point(p)).collect();
            assert_eq!(got.len(), set.points.len(), "seed {seed} feature {j}: duplicates");
            assert_eq!(
                got,
                oracle.reachable_points(action_set, x, j),
                "seed {seed} feature {j}: reachable sets disagree"
            );
            sets_checked += 1;

            for v in oracle.intervention_values(action_set, x, j) {
                let found = find_1d_action(x, j, v, action_set, &[]).expect("search");
                let oracle_norm = oracle.min_norm(action_set, x, j, v, &[], 0.0);
                match (found, oracle_norm) {
                    (Some(action), Some(want)) => {
                        assert!(
                            oracle.feasible(action_set, x, &action),
                            "seed {seed} feature {j} v {v}: infeasible action {action:?}"
                        );
                        let norm: f64 = action.iter().map(|c| c.abs()).sum();
                        assert!(
                            (norm - want).abs() <= 1e-9,
                            "seed {seed} feature {j} v {v}: norm {norm} != minimum {want}"
                        );
                    }
                    (None, None) => {}
                    (found, want) => panic!(
                        "seed {seed} feature {j} v {v}: solver found {found:?}, oracle found \
                         norm {want:?}"
                    ),
                }
                searches_checked += 1;
            }
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(60), "cross-validation took {elapsed:?}");
    println!(
        "acceptance 05 PASS: {sets_checked} reachable sets and {searches_checked} nearest-action \
         searches match the brute-force oracle across 500 instances in {elapsed:?}"
    );
}

/// Release gate 6: sampled reachable points always lie inside the exact set,
/// and the corrected estimate lands within the planned half-width of the
/// exact score at a rate of at least 1 - alpha.
#[test]
fn acceptance_06_sampling_soundness() {
    let t0 = Instant::now();
    let alpha = 0.05;
    let target_half_width = 0.1;
    let n = sample_size(alpha, target_half_width, SampleSizeRegime::Widest).expect("plan");
    assert_eq!(n, 93, "the plan for (0.05, 0.1, widest) is frozen");

    let mut instances = 0u64;
    let mut trials = 0usize;
    let mut within = 0usize;
    let mut generator_seed = 100_000u64;
    while instances < 200 {
        let instance = random_instance(generator_seed);
        generator_seed += 1;
        let action_set = &instance.action_set;
        let x = &instance.x;
        let mut instance_used = false;
        for j in 0..action_set.d() {
            let exact = enumerate_reachable(x, j, action_set).expect("enumeration");
            if exact.points.is_empty() {
                continue;
            }
            instance_used = true;
            let exact_points: BTreeSet<Vec<i64>> =
                exact.points.iter().map(|p| round_point(p)).collect();

            let sample_seed = 7_700_000 + 1_000 * instances + j as u64;
            let sampled = sample_reachable(x, j, action_set, n as usize, sample_seed)
                .expect("sampling from a nonempty set");
            for p in &sampled.points {
                assert!(
                    exact_points.contains(&round_point(p)),
                    "instance seed {}, feature {j}: sampled point {p:?} outside the exact set",
                    generator_seed - 1
                );
            }

            let model = sum_threshold_model(x);
            let mu = score_exact(&exact, &model, model.positive).expect("exact score").estimate;
            let estimated =
                score_estimated(&sampled, &model, model.positive, alpha).expect("estimate");
            let (_, half) = agresti_coull(estimated.successes, estimated.trials, alpha)
                .expect("interval");
            assert!(half <= target_half_width + 1e-12, "planned width exceeded: {half}");
            let corrected = estimated.corrected.expect("sampled scores carry a correction");
            trials += 1;
            if (corrected - mu).abs() <= target_half_width {
                within += 1;
            }
        }
        if instance_used {
            instances += 1;
        }
    }
    let rate = within as f64 / trials as f64;
    assert!(
        rate >= 1.0 - alpha,
        "only {within}/{trials} estimates were within the planned half-width"
    );
    let elapsed = t0.elapsed();
    println!(
        "acceptance 06 PASS: all sampled points lie in exact sets, and {within}/{trials} \
         estimates ({rate:.3}) are within the planned half-width in {elapsed:?}"
    );
}

/// A deterministic classifier for estimate-versus-exact comparisons:
/// positive iff the point moved upward in total from the anchor. Defined on
/// every lattice point and nonconstant on most reachable sets.
fn sum_threshold_model(x: &[f64]) -> Classifier {
    let anchor_sum: f64 = x.iter().sum();
    Classifier {
        kind: ModelKind::Linear {
            weights: vec![1.0; x.len()],
            intercept: 0.0,
            threshold: anchor_sum + 0.5,
        },
        positive: Label(1),
        negative: Label(0),
    }
}

/// Release gate 7: exact Shapley attribution on linear models matches the
/// closed form w_j (x_j - b_j) and the efficiency identity.
#[test]
fn acceptance_07_shapley_closed_form_on_linear_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..60 {
        let d = rng.gen_range(2..=8);
        let weights: Vec<f64> = (0..d).map(|_| rng.gen_range(-3..=3) as f64).collect();
        let intercept = rng.gen_range(-2..=2) as f64;
        let threshold = rng.gen_range(-2..=2) as f64;
        let model = Classifier {
            kind: ModelKind::Linear { weights: weights.clone(), intercept, threshold },
            positive: Label(1),
            negative: Label(0),
        };
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-4..=4) as f64).collect();
        let baseline: Vec<f64> = (0..d).map(|_| rng.gen_range(-4..=4) as f64).collect();

        let attribution =
            attribute_shapley(&x, &model, &baseline, ShapleyMode::Exact, 1, 0).expect("shapley");
        for j in 0..d {
            let closed_form = weights[j] * (x[j] - baseline[j]);
            assert!(
                (attribution.scores[j] - closed_form).abs() <= 1e-9,
                "case {case}, feature {j}: {} != {closed_form}",
                attribution.scores[j]
            );
        }
        let total: f64 = attribution.scores.iter().sum();
        let efficiency = model.score(&x).expect("margin") - model.score(&baseline).expect("margin");
        assert!(
            (total - efficiency).abs() <= 1e-9,
            "case {case}: attribution total {total} != margin difference {efficiency}"
        );
    }
    println!(
        "acceptance 07 PASS: exact Shapley equals the linear closed form and satisfies \
         efficiency on 60 random models"
    );
}

/// Release gate 8: on the bundled credit fixture the triage segments are an
/// exact decomposition of the denied population, responsiveness listings are
/// 100% responsive, and every attribution method lists unresponsive features
/// on at least one row.
#[test]
fn acceptance_08_audit_segments_and_method_comparison() {
    let report = cmd_audit(&AuditArgs {
        input: input("credit"),
        run: defaults(),
        method: "resp,lime,shap,lime_aa,shap_aa".to_string(),
        k: 4,
    })
    .expect("audit command");

    assert_eq!(report.n_rows, 6);
    assert_eq!(report.n_denied, 4);
    let segments = &report.segments;
    assert_eq!(segments.pct_fixed, 25.0);
    assert_eq!(segments.pct_single_feature, 50.0);
    assert_eq!(segments.pct_joint_only, 25.0);
    assert_eq!(segments.pct_undetermined, 0.0);
    assert_eq!(
        segments.pct_fixed + segments.pct_single_feature + segments.pct_joint_only,
        100.0,
        "certified segments decompose the denied population exactly"
    );
    assert!(report.complete);
    assert!(report.warning.is_none());

    let resp = report.methods.iter().find(|m| m.method == "resp").expect("resp audited");
    assert!(resp.presented_rows > 0);
    assert_eq!(
        resp.of_presented.pct_all_responsive, 100.0,
        "every responsiveness listing names only responsive features"
    );

    for name in ["lime", "shap", "lime_aa", "shap_aa"] {
        let method = report.methods.iter().find(|m| m.method == name).expect("method audited");
        assert!(method.presented_rows > 0, "{name} presented nothing");
        assert!(
            method.of_presented.pct_all_responsive < 100.0,
            "{name} should list an unresponsive feature on at least one row"
        );
    }

    println!(
        "acceptance 08 PASS: credit audit segments are exactly 25/50/25 summing to 100, \
         responsiveness listings are 100% responsive, all four attribution methods fall short"
    );
}
