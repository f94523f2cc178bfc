//! Coefficients as local classifiers: thresholding, ranking, voting,
//! one-against-one multiclass and permutation significance.

mod ensemble;
mod multiclass;
mod permutation;

pub use ensemble::{
    support_histogram, vote, vote_profile, EnsembleReport, Outcome, ProfileGroup, ProfilePoint, SupportHistogram,
};
pub use multiclass::{
    one_against_one, psvm_one_against_one, MulticlassReport, PairReport, PairwiseModel, Recipe, TopReport,
};
pub use permutation::{permutation_test, MIN_PERMUTATIONS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifting::{BaseVectors, CoefficientId, CoefficientTable, FittedTransform, Support};

/// How a coefficient's decision threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// The predictor's PSVM bias `γ`. Coarse coefficients have none and use
    /// the optimal threshold instead.
    PsvmBias,
    /// Exhaustive scan over midpoints of the sorted training values.
    OptimalThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankCriterion {
    TrainAccuracy,
    /// Accuracy on a held-out validation split; classifiers without one rank last.
    ValidationAccuracy,
}

/// `sign(x)` with `sign(0) = +1`.
pub fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// A single thresholded coefficient, `s · sign(d - b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalClassifier {
    pub id: CoefficientId,
    /// Column in the merged coefficient matrix.
    pub column: usize,
    /// Prediction weights of the coefficient's predictor (empty for coarse).
    pub weights: Vec<f64>,
    pub threshold: f64,
    pub orientation: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub p_value: Option<f64>,
    /// Extent of the analysis base vector over the original samples.
    pub support: Support,
}

impl LocalClassifier {
    pub fn predict(&self, value: f64) -> f64 {
        self.orientation * sign(value - self.threshold)
    }

    pub fn accuracy(&self, values: &[f64], labels: &[f64]) -> f64 {
        let correct = values
            .iter()
            .zip(labels)
            .filter(|(&v, &y)| self.predict(v) == y)
            .count();
        correct as f64 / labels.len() as f64
    }

    fn score(&self, criterion: RankCriterion) -> f64 {
        match criterion {
            RankCriterion::TrainAccuracy => self.train_accuracy,
            RankCriterion::ValidationAccuracy => self.validation_accuracy.unwrap_or(f64::NEG_INFINITY),
        }
    }
}

/// Best threshold for one coefficient: `(b, s, correct)`.
///
/// Candidates are one value below the minimum (a constant prediction) and
/// the midpoints between consecutive distinct values. Ties prefer the
/// smallest `|b|`, then `s = +1`.
pub fn optimal_threshold(values: &[f64], labels: &[f64]) -> (f64, f64, usize) {
    assert_eq!(values.len(), labels.len());
    assert!(!values.is_empty(), "no values to threshold");
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let l = values.len();
    let positives = labels.iter().filter(|&&y| y > 0.0).count();

    // correct count for s = +1 when predicting +1 on values >= b
    let mut correct = positives;
    let mut best = (values[order[0]] - 1.0, 1.0, 0usize);
    let consider = |b: f64, correct: usize, best: &mut (f64, f64, usize)| {
        for (s, c) in [(1.0, correct), (-1.0, l - correct)] {
            let better = c > best.2 || (c == best.2 && b.abs() < best.0.abs());
            if better {
                *best = (b, s, c);
            }
        }
    };
    consider(best.0, correct, &mut best);
    let mut i = 0;
    while i < l {
        let v = values[order[i]];
        while i < l && values[order[i]] == v {
            if labels[order[i]] > 0.0 {
                correct -= 1;
            } else {
                correct += 1;
            }
            i += 1;
        }
        if i < l {
            let b = 0.5 * (v + values[order[i]]);
            consider(b, correct, &mut best);
        }
    }
    best
}

/// Orientation that maximizes training accuracy for a fixed threshold.
fn orient(values: &[f64], labels: &[f64], threshold: f64) -> (f64, usize) {
    let agree = values
        .iter()
        .zip(labels)
        .filter(|(&v, &y)| sign(v - threshold) == y)
        .count();
    if agree >= labels.len() - agree {
        (1.0, agree)
    } else {
        (-1.0, labels.len() - agree)
    }
}

/// One classifier per merged coefficient, thresholded on the table's labels.
pub fn make_local_classifiers(
    coefficients: &CoefficientTable,
    transform: &FittedTransform,
    mode: ThresholdMode,
) -> Result<Vec<LocalClassifier>> {
    let labels = coefficients
        .labels
        .as_deref()
        .ok_or_else(|| Error::data("coefficient table carries no labels"))?;
    let base = transform.base_vectors()?;
    classifiers_with_base(coefficients, labels, transform, &base, mode)
}

pub(crate) fn classifiers_with_base(
    coefficients: &CoefficientTable,
    labels: &[f64],
    transform: &FittedTransform,
    base: &BaseVectors,
    mode: ThresholdMode,
) -> Result<Vec<LocalClassifier>> {
    if coefficients.levels() != transform.effective_levels() || coefficients.signal_length() != transform.signal_length
    {
        return Err(Error::data("coefficients do not come from this transform"));
    }
    let merged = coefficients.merged();
    let l = labels.len();
    Ok(base
        .layout
        .iter()
        .enumerate()
        .map(|(column, &id)| {
            let values: Vec<f64> = merged.column(column).iter().copied().collect();
            let predictor = (!id.coarse).then(|| transform.predictor(id.level, id.k)).flatten();
            let (threshold, orientation, correct) = match (mode, predictor) {
                (ThresholdMode::PsvmBias, Some(p)) => {
                    let (s, c) = orient(&values, labels, p.gamma);
                    (p.gamma, s, c)
                }
                _ => optimal_threshold(&values, labels),
            };
            LocalClassifier {
                id,
                column,
                weights: predictor.map(|p| p.weights.clone()).unwrap_or_default(),
                threshold,
                orientation,
                train_accuracy: correct as f64 / l as f64,
                validation_accuracy: None,
                test_accuracy: None,
                p_value: None,
                support: base.analysis_supports[column],
            }
        })
        .collect())
}

/// Accuracy of each classifier on another labelled table.
pub fn accuracies_on(classifiers: &[LocalClassifier], coefficients: &CoefficientTable, labels: &[f64]) -> Vec<f64> {
    let merged = coefficients.merged();
    classifiers
        .iter()
        .map(|c| {
            let values: Vec<f64> = merged.column(c.column).iter().copied().collect();
            c.accuracy(&values, labels)
        })
        .collect()
}

/// Stable descending order by `criterion`; ties by level, then position,
/// details before the coarse coefficient at the same place.
pub fn rank_classifiers(classifiers: &[LocalClassifier], criterion: RankCriterion) -> Vec<LocalClassifier> {
    let mut ranked = classifiers.to_vec();
    ranked.sort_by(|a, b| {
        b.score(criterion)
            .total_cmp(&a.score(criterion))
            .then(a.id.level.cmp(&b.id.level))
            .then(a.id.k.cmp(&b.id.k))
            .then(a.id.coarse.cmp(&b.id.coarse))
    });
    ranked
}

/// Keeps classifiers with training accuracy `>= min_accuracy` and
/// permutation p-value `<= alpha`. Untested classifiers are dropped.
pub fn select_significant(classifiers: &[LocalClassifier], min_accuracy: f64, alpha: f64) -> Vec<LocalClassifier> {
    classifiers
        .iter()
        .filter(|c| c.train_accuracy >= min_accuracy && c.p_value.is_some_and(|p| p <= alpha))
        .cloned()
        .collect()
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn classifier(level: usize, k: usize, acc: f64) -> LocalClassifier {
        LocalClassifier {
            id: CoefficientId {
                level,
                k,
                coarse: false,
            },
            column: 0,
            weights: vec![],
            threshold: 0.0,
            orientation: 1.0,
            train_accuracy: acc,
            validation_accuracy: None,
            test_accuracy: None,
            p_value: None,
            support: Support {
                first: 1,
                last: 1,
                count: 1,
            },
        }
    }
}
