use std::path::{Path, PathBuf};

use disclift::evaluation::{
    accuracies_on, make_local_classifiers, one_against_one, permutation_test, psvm_one_against_one, rank_classifiers,
    select_significant, support_histogram, vote, vote_profile, EnsembleReport, LocalClassifier, ProfileGroup,
    RankCriterion, Recipe, ThresholdMode, MIN_PERMUTATIONS,
};
use disclift::lifting::fit;
use disclift::model::load_model;
use disclift::{CoefficientTable, FittedTransform, MulticlassDataset, SeedStream, SignalDataset};
use rand::seq::SliceRandom;
use serde::Serialize;
use serde_json::json;

use crate::args::EvalArgs;
use crate::failure::Failure;
use crate::inputs;
use crate::manifest::RunManifest;
use crate::text::{ratio, Table};

const NO_TEST: &str = "no test set: errors are measured on the training data";
const PERMUTATION_NOTE: &str = "threshold and orientation re-fit under every permutation";

fn check(a: &EvalArgs) -> Result<(), Failure> {
    if a.top.is_empty() || a.top.contains(&0) {
        return Err(Failure::usage("--top needs positive ensemble sizes"));
    }
    if a.permutations > 0 && a.permutations < MIN_PERMUTATIONS {
        return Err(Failure::usage(format!(
            "--permutations must be 0 or at least {MIN_PERMUTATIONS}"
        )));
    }
    if !(0.0..=1.0).contains(&a.alpha) || !(0.0..=1.0).contains(&a.min_accuracy) {
        return Err(Failure::usage("--alpha and --min-accuracy must lie in [0, 1]"));
    }
    if let Some(f) = a.validation_split {
        if !(f > 0.0 && f < 1.0) {
            return Err(Failure::usage("--validation-split must lie strictly between 0 and 1"));
        }
    }
    if (a.permutations > 0 || a.validation_split.is_some()) && a.seed.is_none() {
        return Err(Failure::usage(
            "permutation tests and validation splits need an explicit --seed",
        ));
    }
    Ok(())
}

pub fn run(a: &EvalArgs) -> Result<(), Failure> {
    check(a)?;
    let mut manifest = RunManifest::start("eval");
    let train = inputs::labelled(&a.train)?;
    let test = a.test.as_deref().map(inputs::labelled).transpose()?;
    manifest.input("train", &a.train);
    if let Some(t) = &a.test {
        manifest.input("test", t);
    }
    if let Some(seed) = a.seed {
        manifest.seeds.insert("eval".into(), seed);
    }
    inputs::ensure_dir(&a.out)?;

    let multiclass = a.classes.is_none() && train.classes().len() > 2;
    let outputs = if multiclass {
        run_multiclass(a, &train, test.as_ref())?
    } else {
        let pair = inputs::class_pair(&train, a.classes.as_deref())?;
        manifest.detail("classes", [pair.0, pair.1])?;
        if let Some(m) = &a.model {
            manifest.input("model", m);
        }
        run_binary(a, &train, test.as_ref(), pair)?
    };
    manifest.config(json!({
        "transform": a.transform.config(),
        "threshold": ThresholdMode::from(a.threshold),
        "top": a.top,
        "permutations": a.permutations,
        "alpha": a.alpha,
        "min_accuracy": a.min_accuracy,
        "validation_split": a.validation_split,
    }))?;
    manifest.detail("test_set", a.test.is_some())?;
    for p in &outputs {
        manifest.output(p);
    }
    manifest.write(&a.out.join("manifest.json"))?;
    Ok(())
}

/// Splits the pair's examples into fitting and validation parts.
fn split_validation(
    data: &MulticlassDataset,
    pair: (u32, u32),
    fraction: f64,
    seed: u64,
) -> Result<(SignalDataset, SignalDataset), Failure> {
    let both = data.select_classes(pair.0, pair.1);
    let mut rows: Vec<usize> = (0..both.len()).collect();
    rows.shuffle(&mut SeedStream::new(seed).child(0));
    let held = ((both.len() as f64) * fraction).round() as usize;
    let (val, fitting) = rows.split_at(held);
    let mut fitting = fitting.to_vec();
    let mut val = val.to_vec();
    fitting.sort_unstable();
    val.sort_unstable();
    Ok((
        both.select_rows(&fitting).pair(pair.0, pair.1)?,
        both.select_rows(&val).pair(pair.0, pair.1)?,
    ))
}

fn column(table: &CoefficientTable, c: &LocalClassifier) -> Vec<f64> {
    table.merged().column(c.column).iter().copied().collect()
}

#[derive(Serialize)]
struct EnsembleSummary {
    t: usize,
    members: Vec<String>,
    misclassification: Option<f64>,
    unclassified: usize,
}

#[derive(Serialize)]
struct BinaryReport<'a> {
    classes: [u32; 2],
    evaluated_on: &'static str,
    note: Option<&'static str>,
    ranking: RankCriterion,
    permutation_null: Option<&'static str>,
    raw_psvm_error: f64,
    ensembles: Vec<EnsembleSummary>,
    selected: Vec<String>,
    classifiers: &'a [LocalClassifier],
}

fn run_binary(
    a: &EvalArgs,
    data: &MulticlassDataset,
    test: Option<&MulticlassDataset>,
    pair: (u32, u32),
) -> Result<Vec<PathBuf>, Failure> {
    let (train, validation) = match a.validation_split {
        Some(f) => {
            let (t, v) = split_validation(data, pair, f, a.seed.expect("checked"))?;
            (t, Some(v))
        }
        None => (inputs::binary(data, pair)?, None),
    };
    let test = test.map(|t| inputs::binary(t, pair)).transpose()?;

    let (transform, mut table): (FittedTransform, CoefficientTable) = match &a.model {
        Some(path) => {
            let transform = load_model(path)?;
            let table = transform.apply(train.signals())?;
            (transform, table)
        }
        None => fit(&train, &a.transform.config())?,
    };
    table.labels = Some(train.labels().to_vec());
    let mut classifiers = make_local_classifiers(&table, &transform, a.threshold.into())?;

    if let Some(val) = &validation {
        let accs = accuracies_on(&classifiers, &transform.apply(val.signals())?, val.labels());
        for (c, acc) in classifiers.iter_mut().zip(accs) {
            c.validation_accuracy = Some(acc);
        }
    }
    let test_table = match &test {
        Some(t) => {
            let mut tt = transform.apply(t.signals())?;
            tt.labels = Some(t.labels().to_vec());
            let accs = accuracies_on(&classifiers, &tt, t.labels());
            for (c, acc) in classifiers.iter_mut().zip(accs) {
                c.test_accuracy = Some(acc);
            }
            Some(tt)
        }
        None => None,
    };
    if a.permutations > 0 {
        let stream = SeedStream::new(a.seed.expect("checked"));
        for c in classifiers.iter_mut() {
            let values = column(&table, c);
            let seed = stream.derive(c.column as u64).seed();
            c.p_value = Some(permutation_test(c, &values, train.labels(), a.permutations, seed)?);
        }
    }

    let criterion = if validation.is_some() {
        RankCriterion::ValidationAccuracy
    } else {
        RankCriterion::TrainAccuracy
    };
    let ranked = rank_classifiers(&classifiers, criterion);
    let selected = if a.permutations > 0 {
        select_significant(&ranked, a.min_accuracy, a.alpha)
    } else {
        Vec::new()
    };

    let (eval_table, eval_labels, eval_signals) = match (&test_table, &test) {
        (Some(tt), Some(t)) => (tt, t.labels(), t.signals()),
        _ => (&table, train.labels(), train.signals()),
    };
    let mut ensembles: Vec<(usize, EnsembleReport)> = Vec::new();
    for &t in &a.top {
        ensembles.push((t, vote(&ranked[..t.min(ranked.len())], eval_table)?));
    }
    let svm = disclift::ProximalSvm::fit(train.signals(), train.labels(), a.transform.nu)?;
    let raw_psvm_error = svm.error_rate(eval_signals, eval_labels);

    let mut outputs = Vec::new();
    let out = |name: &str| a.out.join(name);

    let coeff_path = out("coefficients.csv");
    write_coefficients(&coeff_path, &ranked)?;
    outputs.push(coeff_path);

    let selected_path = out("selected.csv");
    write_coefficients(&selected_path, &selected)?;
    outputs.push(selected_path);

    let histogram_members: &[LocalClassifier] = if a.permutations > 0 {
        &selected
    } else {
        let largest = *a.top.iter().max().expect("checked");
        &ranked[..largest.min(ranked.len())]
    };
    let hist = support_histogram(histogram_members, transform.signal_length);
    let hist_path = out("support_histogram.csv");
    let levels: Vec<usize> = (1..=transform.effective_levels()).collect();
    let mut csv = String::from("sample");
    for m in &levels {
        csv.push_str(&format!(",level{m}"));
    }
    csv.push_str(",total\n");
    let total = hist.total();
    for s in 0..transform.signal_length {
        csv.push_str(&(s + 1).to_string());
        for m in &levels {
            let count = hist.by_level.get(m).map_or(0, |c| c[s]);
            csv.push_str(&format!(",{count}"));
        }
        csv.push_str(&format!(",{}\n", total[s]));
    }
    std::fs::write(&hist_path, csv)?;
    outputs.push(hist_path);

    let (profile_t, profile_report) = ensembles.iter().max_by_key(|(t, _)| *t).expect("at least one ensemble");
    let profile_path = out("vote_profile.csv");
    let mut csv = String::from("example,label,agreement,group,outcome\n");
    for (i, (p, o)) in vote_profile(profile_report)
        .iter()
        .zip(&profile_report.outcomes)
        .enumerate()
    {
        let group = match p.group {
            ProfileGroup::Red => "red",
            ProfileGroup::Blue => "blue",
            ProfileGroup::Green => "green",
        };
        let outcome = match o.label() {
            Some(y) if y > 0.0 => "positive",
            Some(_) => "negative",
            None => "unclassified",
        };
        csv.push_str(&format!(
            "{},{},{},{group},{outcome}\n",
            i + 1,
            eval_labels[i],
            p.agreement
        ));
    }
    std::fs::write(&profile_path, csv)?;
    outputs.push(profile_path);

    let report = BinaryReport {
        classes: [pair.0, pair.1],
        evaluated_on: if test.is_some() { "test" } else { "train" },
        note: test.is_none().then_some(NO_TEST),
        ranking: criterion,
        permutation_null: (a.permutations > 0).then_some(PERMUTATION_NOTE),
        raw_psvm_error,
        ensembles: ensembles
            .iter()
            .map(|(t, r)| EnsembleSummary {
                t: *t,
                members: r.members.iter().map(|m| m.name()).collect(),
                misclassification: r.misclassification,
                unclassified: r.unclassified(),
            })
            .collect(),
        selected: selected.iter().map(|c| c.id.name()).collect(),
        classifiers: &ranked,
    };
    let json_path = out("report.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&report)? + "\n")?;
    outputs.push(json_path);

    let mut text = String::new();
    text.push_str(&format!("classes {} (-1) vs {} (+1)\n", pair.0, pair.1));
    if test.is_none() {
        text.push_str(&format!("{NO_TEST}\n"));
    }
    text.push('\n');
    let mut table_out = Table::new([
        "rank",
        "coef",
        "level",
        "k",
        "threshold",
        "s",
        "train_err",
        "val_err",
        "test_err",
        "p_value",
        "support",
    ]);
    for (r, c) in ranked.iter().enumerate() {
        table_out.row(vec![
            (r + 1).to_string(),
            c.id.name(),
            c.id.level.to_string(),
            c.id.k.to_string(),
            format!("{:.4}", c.threshold),
            format!("{:+}", c.orientation as i32),
            ratio(Some(1.0 - c.train_accuracy)),
            ratio(c.validation_accuracy.map(|x| 1.0 - x)),
            ratio(c.test_accuracy.map(|x| 1.0 - x)),
            ratio(c.p_value),
            format!("{}-{}", c.support.first, c.support.last),
        ]);
    }
    text.push_str(&table_out.render());
    text.push('\n');
    let mut ens = Table::new(["t", "misclassification", "unclassified"]);
    for (t, r) in &ensembles {
        ens.row(vec![
            t.to_string(),
            ratio(r.misclassification),
            r.unclassified().to_string(),
        ]);
    }
    ens.row(vec!["psvm".into(), ratio(Some(raw_psvm_error)), "0".into()]);
    text.push_str(&ens.render());
    if a.permutations > 0 {
        text.push_str(&format!(
            "\nselected (accuracy >= {}, p <= {}; {PERMUTATION_NOTE}): {}\n",
            a.min_accuracy,
            a.alpha,
            if selected.is_empty() {
                "none".to_string()
            } else {
                report.selected.join(" ")
            }
        ));
    }
    text.push_str(&format!("vote profile from the t={profile_t} ensemble\n"));
    print!("{text}");
    let text_path = out("report.txt");
    std::fs::write(&text_path, text)?;
    outputs.push(text_path);
    Ok(outputs)
}

fn write_coefficients(path: &Path, classifiers: &[LocalClassifier]) -> Result<(), Failure> {
    let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
    let mut csv = String::from(
        "rank,coefficient,level,k,kind,threshold,orientation,train_error,validation_error,test_error,p_value,support_first,support_last,support_count\n",
    );
    for (r, c) in classifiers.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r + 1,
            c.id.name(),
            c.id.level,
            c.id.k,
            if c.id.coarse { "coarse" } else { "detail" },
            c.threshold,
            c.orientation,
            1.0 - c.train_accuracy,
            opt(c.validation_accuracy.map(|x| 1.0 - x)),
            opt(c.test_accuracy.map(|x| 1.0 - x)),
            opt(c.p_value),
            c.support.first,
            c.support.last,
            c.support.count
        ));
    }
    std::fs::write(path, csv)?;
    Ok(())
}

fn run_multiclass(
    a: &EvalArgs,
    train: &MulticlassDataset,
    test: Option<&MulticlassDataset>,
) -> Result<Vec<PathBuf>, Failure> {
    if a.model.is_some() {
        return Err(Failure::usage(
            "--model holds one two-class transform; pass --classes to use it",
        ));
    }
    if a.validation_split.is_some() || a.permutations > 0 {
        return Err(Failure::usage(
            "validation splits and permutation tests need a two-class problem; pass --classes",
        ));
    }
    let recipe = Recipe {
        config: a.transform.config(),
        mode: a.threshold.into(),
        criterion: RankCriterion::TrainAccuracy,
        top: a.top.clone(),
    };
    let eval_set = test.unwrap_or(train);
    let report = one_against_one(train, eval_set, &recipe)?;
    let (psvm_error, psvm_predictions) = psvm_one_against_one(train, eval_set, a.transform.nu)?;

    let mut outputs = Vec::new();
    let json_path = a.out.join("report.json");
    let doc = json!({
        "classes": report.classes,
        "evaluated_on": if test.is_some() { "test" } else { "train" },
        "note": test.is_none().then_some(NO_TEST),
        "scheme": "one-against-one",
        "errors": report.top.iter().map(|t| json!({ "t": t.t, "misclassification": t.error })).collect::<Vec<_>>(),
        "raw_psvm_error": psvm_error,
        "pairs": report.pairs,
    });
    std::fs::write(&json_path, serde_json::to_string_pretty(&doc)? + "\n")?;
    outputs.push(json_path);

    let pred_path = a.out.join("predictions.csv");
    let mut csv = String::from("example,class");
    for t in &report.top {
        csv.push_str(&format!(",t{}", t.t));
    }
    csv.push_str(",psvm\n");
    let show = |p: &Option<u32>| p.map_or_else(String::new, |c| c.to_string());
    for (i, class) in eval_set.class_ids().iter().enumerate() {
        csv.push_str(&format!("{},{class}", i + 1));
        for t in &report.top {
            csv.push_str(&format!(",{}", show(&t.predictions[i])));
        }
        csv.push_str(&format!(",{}\n", show(&psvm_predictions[i])));
    }
    std::fs::write(&pred_path, csv)?;
    outputs.push(pred_path);

    let mut text = String::from("one-against-one over classes ");
    text.push_str(&report.classes.iter().map(u32::to_string).collect::<Vec<_>>().join(", "));
    text.push('\n');
    if test.is_none() {
        text.push_str(&format!("{NO_TEST}\n"));
    }
    text.push('\n');
    let mut pairs = Table::new(["pair", "t", "error", "members"]);
    for p in &report.pairs {
        for (t, e) in &p.errors {
            let members: Vec<String> = p.members.iter().take(*t).map(|c| c.id.name()).collect();
            pairs.row(vec![
                format!("{}v{}", p.negative, p.positive),
                t.to_string(),
                ratio(Some(*e)),
                members.join(" "),
            ]);
        }
    }
    text.push_str(&pairs.render());
    text.push('\n');
    let mut overall = Table::new(["ensemble", "misclassification"]);
    for t in &report.top {
        overall.row(vec![format!("t={}", t.t), ratio(Some(t.error))]);
    }
    overall.row(vec!["psvm".into(), ratio(Some(psvm_error))]);
    text.push_str(&overall.render());
    print!("{text}");
    let text_path = a.out.join("report.txt");
    std::fs::write(&text_path, text)?;
    outputs.push(text_path);
    Ok(outputs)
}
