use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    accuracies_on, classifiers_with_base, rank_classifiers, vote, EnsembleReport, LocalClassifier, Outcome,
    RankCriterion, ThresholdMode,
};
use crate::error::{Error, Result};
use crate::lifting::{fit, FittedTransform};
use crate::psvm::ProximalSvm;
use crate::types::{Matrix, MulticlassDataset, SignalDataset, TransformConfig};

/// Everything needed to turn a binary training set into voting ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub config: TransformConfig,
    pub mode: ThresholdMode,
    pub criterion: RankCriterion,
    /// Ensemble sizes to evaluate.
    pub top: Vec<usize>,
}

/// A fitted transform with its classifiers in rank order.
#[derive(Debug, Clone)]
pub struct PairwiseModel {
    pub transform: FittedTransform,
    pub ranked: Vec<LocalClassifier>,
}

impl PairwiseModel {
    /// Fits the transform on `train` and ranks its coefficients, on a
    /// validation split when one is given and the criterion asks for it.
    pub fn fit(train: &SignalDataset, validation: Option<&SignalDataset>, recipe: &Recipe) -> Result<Self> {
        let (transform, table) = fit(train, &recipe.config)?;
        Self::from_transform(transform, &table, train.labels(), validation, recipe)
    }

    pub fn from_transform(
        transform: FittedTransform,
        table: &crate::lifting::CoefficientTable,
        labels: &[f64],
        validation: Option<&SignalDataset>,
        recipe: &Recipe,
    ) -> Result<Self> {
        let base = transform.base_vectors()?;
        let mut classifiers = classifiers_with_base(table, labels, &transform, &base, recipe.mode)?;
        if let Some(val) = validation {
            let val_table = transform.apply(val.signals())?;
            let accs = accuracies_on(&classifiers, &val_table, val.labels());
            for (c, acc) in classifiers.iter_mut().zip(accs) {
                c.validation_accuracy = Some(acc);
            }
        } else if recipe.criterion == RankCriterion::ValidationAccuracy {
            return Err(Error::config("validation ranking requires a validation split"));
        }
        let ranked = rank_classifiers(&classifiers, recipe.criterion);
        Ok(PairwiseModel { transform, ranked })
    }

    /// The best `t` classifiers (fewer if the model has fewer coefficients).
    pub fn members(&self, t: usize) -> &[LocalClassifier] {
        &self.ranked[..t.min(self.ranked.len())]
    }

    pub fn vote(&self, signals: &Matrix, labels: Option<&[f64]>, t: usize) -> Result<EnsembleReport> {
        let mut table = self.transform.apply(signals)?;
        table.labels = labels.map(<[f64]>::to_vec);
        vote(self.members(t), &table)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    /// Class voted for by `Outcome::Negative`.
    pub negative: u32,
    /// Class voted for by `Outcome::Positive`.
    pub positive: u32,
    pub train_examples: usize,
    pub test_examples: usize,
    /// `(t, error on test examples of the two classes)`.
    pub errors: Vec<(usize, f64)>,
    /// Top-ranked classifiers of this pair (largest requested `t`).
    pub members: Vec<LocalClassifier>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopReport {
    pub t: usize,
    pub error: f64,
    /// Predicted class per test example; `None` when no duel produced a winner.
    pub predictions: Vec<Option<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassReport {
    pub classes: Vec<u32>,
    pub pairs: Vec<PairReport>,
    pub top: Vec<TopReport>,
}

impl MulticlassReport {
    pub fn error_for(&self, t: usize) -> Option<f64> {
        self.top.iter().find(|r| r.t == t).map(|r| r.error)
    }
}

fn check_classes(train: &MulticlassDataset, test: &MulticlassDataset) -> Result<Vec<u32>> {
    let classes = train.classes();
    if classes.len() < 2 {
        return Err(Error::data("one-against-one needs at least two classes"));
    }
    if let Some(missing) = test.classes().into_iter().find(|c| !classes.contains(c)) {
        return Err(Error::data(format!("class {missing} is absent from the training set")));
    }
    if train.signal_length() != test.signal_length() {
        return Err(Error::data("training and test signals differ in length"));
    }
    Ok(classes)
}

fn class_pairs(classes: &[u32]) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    for (i, &a) in classes.iter().enumerate() {
        for &b in &classes[i + 1..] {
            pairs.push((a, b));
        }
    }
    pairs
}

/// Most pairwise wins; ties go to the smallest class id. Examples that won
/// no duel at all stay unclassified.
fn tally(classes: &[u32], duels: &[Vec<Option<u32>>], examples: usize) -> Vec<Option<u32>> {
    (0..examples)
        .map(|i| {
            let mut wins = vec![0usize; classes.len()];
            for duel in duels {
                if let Some(w) = duel[i] {
                    wins[classes.iter().position(|&c| c == w).expect("winner is a known class")] += 1;
                }
            }
            let best = *wins.iter().max().expect("at least two classes");
            (best > 0).then(|| classes[wins.iter().position(|&w| w == best).expect("max exists")])
        })
        .collect()
}

fn error_rate(predictions: &[Option<u32>], truth: &[u32]) -> f64 {
    let wrong = predictions.iter().zip(truth).filter(|(p, &c)| **p != Some(c)).count();
    wrong as f64 / truth.len() as f64
}

/// One transform and ranked ensemble per class pair; predictions by pairwise
/// majority. Each pair selects its own top-`t` members.
pub fn one_against_one(
    train: &MulticlassDataset,
    test: &MulticlassDataset,
    recipe: &Recipe,
) -> Result<MulticlassReport> {
    if recipe.top.is_empty() || recipe.top.contains(&0) {
        return Err(Error::config("ensemble sizes must be positive"));
    }
    let classes = check_classes(train, test)?;
    let largest = *recipe.top.iter().max().expect("non-empty");

    // per pair: (report, duels per t)
    let per_pair = class_pairs(&classes)
        .into_par_iter()
        .map(|(a, b)| {
            let binary = train.pair(a, b)?;
            let model = PairwiseModel::fit(&binary, None, recipe)?;
            let table = model.transform.apply(test.signals())?;
            let mut duels = Vec::with_capacity(recipe.top.len());
            let mut errors = Vec::with_capacity(recipe.top.len());
            let in_pair: Vec<usize> = (0..test.len())
                .filter(|&i| test.class_ids()[i] == a || test.class_ids()[i] == b)
                .collect();
            for &t in &recipe.top {
                let report = vote(model.members(t), &table)?;
                let winners: Vec<Option<u32>> = report
                    .outcomes
                    .iter()
                    .map(|o| match o {
                        Outcome::Positive => Some(b),
                        Outcome::Negative => Some(a),
                        Outcome::Unclassified => None,
                    })
                    .collect();
                let wrong = in_pair
                    .iter()
                    .filter(|&&i| winners[i] != Some(test.class_ids()[i]))
                    .count();
                errors.push((
                    t,
                    if in_pair.is_empty() {
                        0.0
                    } else {
                        wrong as f64 / in_pair.len() as f64
                    },
                ));
                duels.push(winners);
            }
            let pair = PairReport {
                negative: a,
                positive: b,
                train_examples: binary.len(),
                test_examples: in_pair.len(),
                errors,
                members: model.members(largest).to_vec(),
            };
            Ok((pair, duels))
        })
        .collect::<Result<Vec<_>>>()?;

    let top = recipe
        .top
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let duels: Vec<Vec<Option<u32>>> = per_pair.iter().map(|(_, d)| d[ti].clone()).collect();
            let predictions = tally(&classes, &duels, test.len());
            TopReport {
                t,
                error: error_rate(&predictions, test.class_ids()),
                predictions,
            }
        })
        .collect();
    Ok(MulticlassReport {
        classes,
        pairs: per_pair.into_iter().map(|(p, _)| p).collect(),
        top,
    })
}

/// PSVM on the raw samples, one-against-one. Returns `(error, predictions)`.
pub fn psvm_one_against_one(
    train: &MulticlassDataset,
    test: &MulticlassDataset,
    nu: f64,
) -> Result<(f64, Vec<Option<u32>>)> {
    let classes = check_classes(train, test)?;
    let duels = class_pairs(&classes)
        .into_par_iter()
        .map(|(a, b)| {
            let binary = train.pair(a, b)?;
            let svm = ProximalSvm::fit(binary.signals(), binary.labels(), nu)?;
            Ok(svm
                .predict(test.signals())
                .into_iter()
                .map(|y| Some(if y > 0.0 { b } else { a }))
                .collect())
        })
        .collect::<Result<Vec<Vec<Option<u32>>>>>()?;
    let predictions = tally(&classes, &duels, test.len());
    Ok((error_rate(&predictions, test.class_ids()), predictions))
}
