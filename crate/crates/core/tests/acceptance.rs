//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use disclift::datasets::{
    generate_shape, generate_waveform, load_csv, write_table, CsvSchema, ShapeSpec, WaveformSpec,
};
use disclift::evaluation::{
    make_local_classifiers, one_against_one, optimal_threshold, permutation_test, psvm_one_against_one,
    rank_classifiers, LocalClassifier, RankCriterion, Recipe, ThresholdMode,
};
use disclift::lifting::{fit, Support};
use disclift::psvm::{kkt_oracle, solve, vandermonde_constraints};
use disclift::{
    index_window, CoefficientId, Matrix, MulticlassDataset, PredictProblem, PredictSolution, ProximalSvm, SeedStream,
    SignalDataset, TransformConfig, Variant,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

const SEEDS: u64 = 10;
const TRAIN_PER_CLASS: usize = 100;
const TEST_PER_CLASS: usize = 1000;

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn waveform(per_class_count: usize, seed: u64) -> MulticlassDataset {
    generate_waveform(&WaveformSpec { per_class_count, seed }).expect("waveform")
}

fn shape(per_class_count: usize, seed: u64) -> MulticlassDataset {
    generate_shape(&ShapeSpec { per_class_count, seed }).expect("shape")
}

/// Train and test sets for seed `s`, drawn from disjoint streams.
fn split_seed(s: u64) -> (u64, u64) {
    (1000 + 2 * s, 1001 + 2 * s)
}

fn reference_config(variant: Variant) -> TransformConfig {
    TransformConfig {
        levels: 3,
        window: 4,
        nu: 1.0,
        variant,
        ..TransformConfig::default()
    }
}

fn voting_recipe() -> Recipe {
    Recipe {
        config: reference_config(Variant::Regularised),
        mode: ThresholdMode::PsvmBias,
        criterion: RankCriterion::TrainAccuracy,
        top: vec![3, 15],
    }
}

fn random_problem(rng: &mut impl Rng, variant: Variant, degree: usize) -> PredictProblem {
    let l = [10, 50, 200][rng.random_range(0..3)];
    let window = [2, 4, 8][rng.random_range(0..3)];
    let nu = [0.1, 1.0, 100.0][rng.random_range(0..3)];
    let design = Matrix::from_fn(l, window + 1, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut labels: Vec<f64> = (0..l).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    labels.shuffle(rng);
    let constraints = (degree > 0).then(|| {
        let half = 4 * window;
        let k = rng.random_range(1..=half);
        vandermonde_constraints(&index_window(k, half, window).expect("window"), degree)
    });
    PredictProblem {
        design,
        labels,
        nu,
        variant,
        constraints,
    }
}

fn relative_gap(fast: &PredictSolution, oracle: &PredictSolution) -> f64 {
    let a: Vec<f64> = fast.w.iter().copied().chain([fast.gamma]).collect();
    let b: Vec<f64> = oracle.w.iter().copied().chain([oracle.gamma]).collect();
    let diff = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(f64::MIN_POSITIVE)
}

fn solver_oracle() -> Outcome {
    let groups = [
        ("regularised", Variant::Regularised, 0),
        ("non-regularised", Variant::NonRegularised, 0),
        ("constrained p=1", Variant::NonRegularised, 1),
        ("constrained p=2", Variant::NonRegularised, 2),
    ];
    let mut worst_all: f64 = 0.0;
    let mut parts = Vec::new();
    for (g, (name, variant, degree)) in groups.into_iter().enumerate() {
        let mut rng = SeedStream::new(17).child(g as u64);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let problem = random_problem(&mut rng, variant, degree);
            let fast = solve(&problem).expect("fast path");
            let oracle = kkt_oracle(&problem).expect("oracle");
            worst = worst.max(relative_gap(&fast, &oracle));
        }
        parts.push(format!("{name} {worst:.1e}"));
        worst_all = worst_all.max(worst);
    }
    outcome(worst_all < 1e-8, format!("max relative gap: {}", parts.join(", ")))
}

fn pair12(per_class: usize, seed: u64) -> SignalDataset {
    waveform(per_class, seed).pair(1, 2).expect("pair")
}

fn round_trip() -> Outcome {
    let (a, b) = split_seed(0);
    let (transform, _) = fit(&pair12(TRAIN_PER_CLASS, a), &reference_config(Variant::NonRegularised)).expect("fit");
    let signals = pair12(100, b);
    let table = transform.apply(signals.signals()).expect("apply");
    let back = transform.reconstruct(&table).expect("reconstruct");
    let err = (back - signals.signals()).amax();
    outcome(
        err < 1e-8,
        format!("max abs error {err:.2e} over {} signals", signals.len()),
    )
}

fn biorthogonality() -> Outcome {
    let (a, _) = split_seed(0);
    let (transform, _) = fit(&pair12(TRAIN_PER_CLASS, a), &reference_config(Variant::NonRegularised)).expect("fit");
    let base = transform.base_vectors().expect("base vectors");
    let residual = base.biorthogonality_residual();
    outcome(
        residual < 1e-8,
        format!("max |analysis * synthesis - I32| = {residual:.2e}"),
    )
}

fn polynomial_vanishing() -> Outcome {
    let (a, _) = split_seed(0);
    let config = TransformConfig {
        constraint_degree: 2,
        ..reference_config(Variant::NonRegularised)
    };
    let (transform, _) = fit(&pair12(TRAIN_PER_CLASS, a), &config).expect("fit");
    let mut rng = SeedStream::new(5).child(0);
    let n = transform.signal_length;
    let lines: Vec<(f64, f64)> = (0..200)
        .map(|_| (rng.random_range(-10.0..10.0), rng.random_range(-3.0..3.0)))
        .collect();
    let signals = Matrix::from_fn(lines.len(), n, |r, c| lines[r].0 + lines[r].1 * (c + 1) as f64);
    let table = transform.apply(&signals).expect("apply");
    let worst = table.details.iter().map(|d| d.amax()).fold(0.0, f64::max);
    outcome(
        worst < 1e-8,
        format!(
            "max |d| = {worst:.2e} over 200 linear signals, {} levels",
            table.levels()
        ),
    )
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn raw_baseline_errors() -> Vec<f64> {
    (0..SEEDS)
        .map(|s| {
            let (a, b) = split_seed(s);
            let train = pair12(TRAIN_PER_CLASS, a);
            let test = pair12(TEST_PER_CLASS, b);
            let svm = ProximalSvm::fit(train.signals(), train.labels(), 1.0).expect("psvm");
            svm.error_rate(test.signals(), test.labels())
        })
        .collect()
}

fn waveform_baseline(errors: &[f64]) -> Outcome {
    let e = mean(errors);
    outcome(
        (e - 0.10).abs() <= 0.05,
        format!("mean raw-PSVM test error {e:.3} over {SEEDS} seeds (target 0.10 +/- 0.05)"),
    )
}

fn best_classifier(train: &SignalDataset, config: &TransformConfig) -> (LocalClassifier, disclift::FittedTransform) {
    let (transform, table) = fit(train, config).expect("fit");
    let classifiers = make_local_classifiers(&table, &transform, voting_recipe().mode).expect("classifiers");
    let best = rank_classifiers(&classifiers, RankCriterion::TrainAccuracy)
        .into_iter()
        .next()
        .expect("at least one classifier");
    (best, transform)
}

fn best_local(baseline: &[f64]) -> Outcome {
    let mut errors = Vec::new();
    let mut local = 0;
    let mut names = Vec::new();
    for s in 0..SEEDS {
        let (a, b) = split_seed(s);
        let (best, transform) = best_classifier(&pair12(TRAIN_PER_CLASS, a), &voting_recipe().config);
        let test = pair12(TEST_PER_CLASS, b);
        let table = transform.apply(test.signals()).expect("apply");
        let values: Vec<f64> = table.merged().column(best.column).iter().copied().collect();
        errors.push(1.0 - best.accuracy(&values, test.labels()));
        if best.support.intersects(9, 20) {
            local += 1;
        }
        names.push(best.id.name());
    }
    let e = mean(&errors);
    let base = mean(baseline);
    names.dedup();
    outcome(
        e <= base + 0.10 && local == SEEDS,
        format!(
            "best coefficient ({}) test error {e:.3} vs baseline {base:.3} + 0.10; support meets 9..20 in {local}/{SEEDS} seeds",
            names.join("/")
        ),
    )
}

struct Voting {
    t3: f64,
    t15: f64,
    psvm: f64,
}

fn voting(data: impl Fn(usize, u64) -> MulticlassDataset) -> Voting {
    let recipe = voting_recipe();
    let (mut t3, mut t15, mut psvm) = (Vec::new(), Vec::new(), Vec::new());
    for s in 0..SEEDS {
        let (a, b) = split_seed(s);
        let train = data(TRAIN_PER_CLASS, a);
        let test = data(TEST_PER_CLASS, b);
        let report = one_against_one(&train, &test, &recipe).expect("one-against-one");
        t3.push(report.error_for(3).expect("t=3"));
        t15.push(report.error_for(15).expect("t=15"));
        psvm.push(psvm_one_against_one(&train, &test, recipe.config.nu).expect("psvm").0);
    }
    Voting {
        t3: mean(&t3),
        t15: mean(&t15),
        psvm: mean(&psvm),
    }
}

fn within(value: f64, target: f64, tol: f64) -> &'static str {
    if (value - target).abs() <= tol {
        "in range"
    } else {
        "out of range"
    }
}

fn waveform_voting() -> Outcome {
    let v = voting(waveform);
    let ok = (v.t3 - 0.155).abs() <= 0.05 && (v.t15 - 0.147).abs() <= 0.05 && (v.psvm - 0.193).abs() <= 0.05;
    outcome(
        ok,
        format!(
            "t=3 {:.3} (0.155), t=15 {:.3} (0.147), PSVM {:.3} (0.193); tolerance 0.05",
            v.t3, v.t15, v.psvm
        ),
    )
}

fn shape_voting() -> Outcome {
    let v = voting(shape);
    outcome(
        v.t15 < v.psvm,
        format!(
            "t=15 {:.3} < PSVM {:.3} required; soft: t=3 {:.3} vs 0.034 {}, t=15 {:.3} vs 0.032 {}, PSVM {:.3} vs 0.094 {}",
            v.t15,
            v.psvm,
            v.t3,
            within(v.t3, 0.034, 0.08),
            v.t15,
            within(v.t15, 0.032, 0.08),
            v.psvm,
            within(v.psvm, 0.094, 0.08),
        ),
    )
}

fn permutation_calibration() -> Outcome {
    const TRIALS: u64 = 200;
    const L: usize = 100;
    let stream = SeedStream::new(99);
    let mut rejected = 0;
    for trial in 0..TRIALS {
        let mut rng = stream.child(trial);
        let values: Vec<f64> = (0..L).map(|_| rng.sample(StandardNormal)).collect();
        let mut labels: Vec<f64> = (0..L).map(|i| if i < L / 2 { 1.0 } else { -1.0 }).collect();
        labels.shuffle(&mut rng);
        let (threshold, orientation, correct) = optimal_threshold(&values, &labels);
        let classifier = LocalClassifier {
            id: CoefficientId {
                level: 1,
                k: 1,
                coarse: false,
            },
            column: 0,
            weights: Vec::new(),
            threshold,
            orientation,
            train_accuracy: correct as f64 / L as f64,
            validation_accuracy: None,
            test_accuracy: None,
            p_value: None,
            support: Support {
                first: 1,
                last: 1,
                count: 1,
            },
        };
        let p = permutation_test(&classifier, &values, &labels, 999, 10_000 + trial).expect("permutation test");
        if p <= 0.1 {
            rejected += 1;
        }
    }
    let rate = rejected as f64 / TRIALS as f64;
    outcome(
        (rate - 0.10).abs() <= 0.03,
        format!("rejection rate {rate:.3} over {TRIALS} null trials, B=999 (target 0.10 +/- 0.03)"),
    )
}

fn feature_export() -> Outcome {
    let (a, b) = split_seed(0);
    let train = pair12(TRAIN_PER_CLASS, a);
    let config = reference_config(Variant::NonRegularised);
    let (transform, table) = fit(&train, &config).expect("fit");
    let merged = table.merged();
    let header: Vec<String> = table.layout().iter().map(|id| id.name()).collect();
    let ids: Vec<u32> = train.class_ids().expect("class ids").to_vec();
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("xnew.csv");
    write_table(&path, Some(&header), &merged, Some(("class", &ids))).expect("write");
    let loaded = load_csv(&path, CsvSchema::default()).expect("load");
    let lossless = loaded.signals() == &merged && loaded.class_ids() == ids.as_slice();

    let classifiers = make_local_classifiers(&table, &transform, ThresholdMode::OptimalThreshold).expect("classifiers");
    let best = &rank_classifiers(&classifiers, RankCriterion::TrainAccuracy)[0];
    let test = pair12(TEST_PER_CLASS, b);
    let test_table = transform.apply(test.signals()).expect("apply");
    let values: Vec<f64> = test_table.merged().column(best.column).iter().copied().collect();
    let stump = 1.0 - best.accuracy(&values, test.labels());
    let positives = test.labels().iter().filter(|&&y| y > 0.0).count() as f64 / test.len() as f64;
    let majority = positives.min(1.0 - positives);
    outcome(
        lossless && stump < majority,
        format!(
            "X^new round trip {}; stump on {} test error {stump:.3} vs majority {majority:.3}",
            if lossless { "exact" } else { "lossy" },
            best.id.name()
        ),
    )
}

fn main() -> ExitCode {
    let baseline = raw_baseline_errors();
    let criteria: Vec<(&str, Check)> = vec![
        ("solver oracle equivalence", Box::new(solver_oracle)),
        ("round-trip reconstruction", Box::new(round_trip)),
        ("biorthogonality", Box::new(biorthogonality)),
        ("polynomial vanishing", Box::new(polynomial_vanishing)),
        ("waveform raw PSVM baseline", Box::new(|| waveform_baseline(&baseline))),
        ("best local classifier", Box::new(|| best_local(&baseline))),
        ("waveform one-against-one voting", Box::new(waveform_voting)),
        ("shape voting", Box::new(shape_voting)),
        ("permutation calibration", Box::new(permutation_calibration)),
        ("feature export and stump", Box::new(feature_export)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let status = if result.pass { "PASS" } else { "FAIL" };
        if !result.pass {
            failed += 1;
        }
        println!(
            "{status} {:>2} {name}: {} [{:.1}s]",
            i + 1,
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
