use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::LocalClassifier;
use crate::error::{Error, Result};
use crate::lifting::{CoefficientId, CoefficientTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Positive,
    Negative,
    Unclassified,
}

impl Outcome {
    pub fn label(self) -> Option<f64> {
        match self {
            Outcome::Positive => Some(1.0),
            Outcome::Negative => Some(-1.0),
            Outcome::Unclassified => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub members: Vec<CoefficientId>,
    /// `votes[i][j]`: member `j`'s ±1 prediction for example `i`.
    pub votes: Vec<Vec<i8>>,
    pub outcomes: Vec<Outcome>,
    /// Wrong plus unclassified over all examples; `None` without labels.
    pub misclassification: Option<f64>,
}

impl EnsembleReport {
    pub fn unclassified(&self) -> usize {
        self.outcomes.iter().filter(|&&o| o == Outcome::Unclassified).count()
    }
}

/// Majority vote of `members` on every row of `coefficients`.
///
/// An exact tie goes to the side with the larger summed margin `|d - b|`;
/// if that ties too the example is unclassified.
pub fn vote(members: &[LocalClassifier], coefficients: &CoefficientTable) -> Result<EnsembleReport> {
    if members.is_empty() {
        return Err(Error::config("an ensemble needs at least one member"));
    }
    let merged = coefficients.merged();
    let mut votes = Vec::with_capacity(merged.nrows());
    let mut outcomes = Vec::with_capacity(merged.nrows());
    for i in 0..merged.nrows() {
        let mut row = Vec::with_capacity(members.len());
        let (mut tally, mut margin_pos, mut margin_neg) = (0i64, 0.0, 0.0);
        for m in members {
            let d = merged[(i, m.column)];
            let p = m.predict(d);
            let margin = (d - m.threshold).abs();
            if p > 0.0 {
                tally += 1;
                margin_pos += margin;
            } else {
                tally -= 1;
                margin_neg += margin;
            }
            row.push(p as i8);
        }
        let outcome = match tally.signum() {
            1 => Outcome::Positive,
            -1 => Outcome::Negative,
            _ if margin_pos > margin_neg => Outcome::Positive,
            _ if margin_neg > margin_pos => Outcome::Negative,
            _ => Outcome::Unclassified,
        };
        votes.push(row);
        outcomes.push(outcome);
    }
    let misclassification = coefficients.labels.as_ref().map(|labels| {
        let wrong = outcomes
            .iter()
            .zip(labels)
            .filter(|(o, &y)| o.label() != Some(y))
            .count();
        wrong as f64 / labels.len() as f64
    });
    Ok(EnsembleReport {
        members: members.iter().map(|m| m.id).collect(),
        votes,
        outcomes,
        misclassification,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileGroup {
    /// Leaning towards the +1 class.
    Red,
    /// Leaning towards the -1 class.
    Blue,
    /// Balanced.
    Green,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    /// `(votes for +1 - votes for -1) / members`.
    pub agreement: f64,
    pub group: ProfileGroup,
}

pub fn vote_profile(report: &EnsembleReport) -> Vec<ProfilePoint> {
    report
        .votes
        .iter()
        .map(|row| {
            let agreement = row.iter().map(|&v| f64::from(v)).sum::<f64>() / row.len() as f64;
            let group = if agreement > 0.0 {
                ProfileGroup::Red
            } else if agreement < 0.0 {
                ProfileGroup::Blue
            } else {
                ProfileGroup::Green
            };
            ProfilePoint { agreement, group }
        })
        .collect()
}

/// Per original sample, how many classifiers' supports cover it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportHistogram {
    pub signal_length: usize,
    /// Counts per level, only for levels with at least one classifier.
    pub by_level: BTreeMap<usize, Vec<u32>>,
}

impl SupportHistogram {
    pub fn total(&self) -> Vec<u32> {
        let mut total = vec![0; self.signal_length];
        for counts in self.by_level.values() {
            for (t, c) in total.iter_mut().zip(counts) {
                *t += c;
            }
        }
        total
    }
}

pub fn support_histogram(classifiers: &[LocalClassifier], signal_length: usize) -> SupportHistogram {
    let mut by_level: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for c in classifiers {
        let counts = by_level.entry(c.id.level).or_insert_with(|| vec![0; signal_length]);
        if c.support.count > 0 {
            for s in c.support.first..=c.support.last.min(signal_length) {
                counts[s - 1] += 1;
            }
        }
    }
    SupportHistogram {
        signal_length,
        by_level,
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_support::classifier;
    use super::*;
    use crate::lifting::Support;
    use crate::types::Matrix;

    fn table(columns: &[&[f64]], labels: &[f64]) -> CoefficientTable {
        // two columns of coarse and two of detail, N = 4, M = 1... use M = 1 with N = 4
        let rows = columns[0].len();
        let merged = Matrix::from_fn(rows, 4, |i, j| columns.get(j).map_or(0.0, |c| c[i]));
        CoefficientTable::from_merged(&merged, 1, Some(labels.to_vec())).unwrap()
    }

    fn member(column: usize, threshold: f64) -> LocalClassifier {
        LocalClassifier {
            column,
            threshold,
            ..classifier(1, column + 1, 1.0)
        }
    }

    #[test]
    fn single_member_reproduces_predictions() {
        let t = table(&[&[-1.0, 2.0, 0.5, -3.0]], &[1.0, 1.0, -1.0, -1.0]);
        let m = member(0, 0.0);
        let r = vote(std::slice::from_ref(&m), &t).unwrap();
        let expected: Vec<Outcome> = [-1.0, 2.0, 0.5, -3.0]
            .iter()
            .map(|&d| {
                if m.predict(d) > 0.0 {
                    Outcome::Positive
                } else {
                    Outcome::Negative
                }
            })
            .collect();
        assert_eq!(r.outcomes, expected);
        assert_eq!(r.misclassification, Some(0.5));
    }

    #[test]
    fn agreeing_members() {
        let col = [-1.0, 2.0, 0.5, -3.0];
        let t = table(&[&col, &col, &col], &[-1.0, 1.0, 1.0, -1.0]);
        let one = vote(&[member(0, 0.0)], &t).unwrap();
        let three = vote(&[member(0, 0.0), member(1, 0.0), member(2, 0.0)], &t).unwrap();
        assert_eq!(one.outcomes, three.outcomes);
        assert_eq!(three.misclassification, Some(0.0));
    }

    #[test]
    fn even_ties_use_margin_then_unclassified() {
        let t = table(&[&[1.0, 1.0], &[-3.0, -1.0]], &[1.0, -1.0]);
        let r = vote(&[member(0, 0.0), member(1, 0.0)], &t).unwrap();
        assert_eq!(r.outcomes, vec![Outcome::Negative, Outcome::Unclassified]);
        assert_eq!(r.misclassification, Some(1.0));
        assert_eq!(r.unclassified(), 1);
    }

    #[test]
    fn empty_ensemble_rejected() {
        let t = table(&[&[1.0, 2.0]], &[1.0, -1.0]);
        assert!(vote(&[], &t).is_err());
    }

    #[test]
    fn profile_values() {
        let col = [5.0, -5.0];
        let t = table(&[&col, &col, &[5.0, 5.0]], &[1.0, -1.0]);
        let r = vote(&[member(0, 0.0), member(1, 0.0), member(2, 0.0)], &t).unwrap();
        let p = vote_profile(&r);
        assert_eq!(p[0].agreement, 1.0);
        assert_eq!(p[0].group, ProfileGroup::Red);
        assert!((p[1].agreement + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p[1].group, ProfileGroup::Blue);
    }

    #[test]
    fn histogram_counts() {
        let c = LocalClassifier {
            support: Support {
                first: 3,
                last: 5,
                count: 3,
            },
            ..classifier(2, 1, 0.9)
        };
        let h = support_histogram(&[c], 8);
        assert_eq!(h.by_level[&2], vec![0, 0, 1, 1, 1, 0, 0, 0]);
        assert_eq!(h.total(), vec![0, 0, 1, 1, 1, 0, 0, 0]);
        let empty = support_histogram(&[], 8);
        assert!(empty.by_level.is_empty());
        assert_eq!(empty.total(), vec![0; 8]);
    }
}
