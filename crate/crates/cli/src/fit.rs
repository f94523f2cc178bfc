use std::sync::Mutex;
use std::time::Instant;

use disclift::lifting::fit_observed;
use disclift::model::{load_model, save_model};
use disclift::psvm::{unit_target, vandermonde_constraints};
use disclift::{FittedTransform, PredictProblem, PredictSolution, Variant};
use serde_json::{json, Value};

use crate::args::{ApplyArgs, FitArgs};
use crate::failure::Failure;
use crate::inputs;
use crate::manifest::{beside, RunManifest};

fn parse_target(spec: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::usage(format!("--dump-solve expects LEVEL:K, got '{spec}'"));
    let (level, k) = spec.split_once(':').ok_or_else(bad)?;
    Ok((
        level.trim().parse().map_err(|_| bad())?,
        k.trim().parse().map_err(|_| bad())?,
    ))
}

/// `max |B w - e1|` over every constrained predictor.
fn constraint_residual(transform: &FittedTransform) -> Option<f64> {
    let p = transform.config.constraint_degree;
    if p == 0 || transform.variant() != Variant::NonRegularised {
        return None;
    }
    let e1 = unit_target(p);
    let mut worst: f64 = 0.0;
    for level in &transform.levels {
        for pred in &level.predictors {
            let b = vandermonde_constraints(&pred.window, p);
            for (r, target) in e1.iter().enumerate() {
                let bw: f64 = b.row(r).iter().zip(&pred.weights).map(|(x, w)| x * w).sum();
                worst = worst.max((bw - target).abs());
            }
        }
    }
    Some(worst)
}

pub fn run(a: &FitArgs) -> Result<(), Failure> {
    let mut manifest = RunManifest::start("fit");
    let config = a.transform.config();
    config.validate()?;
    let target = a.dump_solve.as_deref().map(parse_target).transpose()?;

    let data = inputs::labelled(&a.train)?;
    let pair = inputs::class_pair(&data, a.classes.as_deref())?;
    let train = inputs::binary(&data, pair)?;

    let start = Instant::now();
    let finished: Mutex<Vec<f64>> = Mutex::new(Vec::new());
    let dumped: Mutex<Option<Value>> = Mutex::new(None);
    let observer = |level: usize, k: usize, problem: &PredictProblem, sol: &PredictSolution| {
        let elapsed = start.elapsed().as_secs_f64();
        {
            let mut f = finished.lock().expect("timing lock");
            if f.len() < level {
                f.resize(level, 0.0);
            }
            f[level - 1] = f[level - 1].max(elapsed);
        }
        if target == Some((level, k)) {
            *dumped.lock().expect("dump lock") = Some(problem.diagnostic_json(Some(sol)));
        }
    };
    let (transform, table) = fit_observed(&train, &config, Some(&observer))?;
    let total = start.elapsed().as_secs_f64();

    let effective = transform.effective_levels();
    if transform.truncated() {
        eprintln!(
            "warning: {} levels requested but signals of length {} with window {} allow only {effective}",
            config.levels, transform.signal_length, config.window
        );
    }
    let mut previous = 0.0;
    let mut timings = Vec::new();
    for (m, end) in finished.into_inner().expect("timing lock").into_iter().enumerate() {
        let level = &transform.levels[m];
        println!(
            "level {}: {} predictors, {:.3} ms",
            m + 1,
            level.predictors.len(),
            (end - previous) * 1e3
        );
        timings.push(json!({ "level": m + 1, "seconds": end - previous }));
        previous = end;
    }
    println!(
        "effective levels: {effective} (requested {}), total {:.3} ms",
        config.levels,
        total * 1e3
    );

    save_model(&transform, &a.out_model)?;
    manifest.output(&a.out_model);
    if let Some(path) = &a.out_features {
        inputs::write_features(path, &transform, &table, train.class_ids())?;
        manifest.output(path);
    }
    if let Some((level, k)) = target {
        let value = dumped
            .into_inner()
            .expect("dump lock")
            .ok_or_else(|| Failure::usage(format!("no predictor at level {level}, k = {k}")))?;
        let mut name = a.out_model.file_name().unwrap_or_default().to_os_string();
        name.push(format!(".solve-{level}-{k}.json"));
        let path = a.out_model.with_file_name(name);
        std::fs::write(&path, serde_json::to_string_pretty(&value)? + "\n")?;
        println!("wrote solve dump to {}", path.display());
        manifest.output(&path);
    }

    manifest.config(&config)?;
    manifest.input("train", &a.train);
    manifest.detail("classes", [pair.0, pair.1])?;
    manifest.detail("effective_levels", effective)?;
    manifest.detail("truncated", transform.truncated())?;
    manifest.detail("level_timings", timings)?;
    if let Some(r) = constraint_residual(&transform) {
        println!("constraint residual max |B w - e1| = {r:.3e}");
        manifest.detail("constraint_residual", r)?;
    }
    manifest.write(&beside(&a.out_model))?;
    Ok(())
}

pub fn apply(a: &ApplyArgs) -> Result<(), Failure> {
    let mut manifest = RunManifest::start("apply");
    let transform = load_model(&a.model)?;
    let (signals, ids) = inputs::signals(&a.input)?;
    let table = transform.apply(&signals)?;
    inputs::write_features(&a.out, &transform, &table, ids.as_deref())?;
    manifest.config(&transform.config)?;
    manifest.input("model", &a.model);
    manifest.input("input", &a.input);
    manifest.output(&a.out);
    manifest.write(&beside(&a.out))?;
    println!(
        "wrote {} x {} coefficients to {}",
        table.rows(),
        transform.signal_length,
        a.out.display()
    );
    Ok(())
}
