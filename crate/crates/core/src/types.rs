//! Datasets, transform parameters and the odd/even and window indexing rules
//! shared by the rest of the crate.
//!
//! Public indices (window members, positions `k`, sample numbers) are 1-based.
//! Internally everything is 0-based; conversion happens at the edges.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Labelled two-class signals: the rows of `signals` are examples, labels are ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalDataset {
    signals: Matrix,
    labels: Vec<f64>,
    class_ids: Option<Vec<u32>>,
}

impl SignalDataset {
    pub fn new(signals: Matrix, labels: Vec<f64>) -> Result<Self> {
        Self::build(signals, labels, None)
    }

    pub fn with_class_ids(signals: Matrix, labels: Vec<f64>, class_ids: Vec<u32>) -> Result<Self> {
        Self::build(signals, labels, Some(class_ids))
    }

    fn build(signals: Matrix, labels: Vec<f64>, class_ids: Option<Vec<u32>>) -> Result<Self> {
        let l = signals.nrows();
        check_signal_length(signals.ncols())?;
        if labels.len() != l {
            return Err(Error::data(format!("{} labels for {} signals", labels.len(), l)));
        }
        if l < 2 {
            return Err(Error::data("at least two examples are required"));
        }
        if let Some(bad) = labels.iter().position(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::data(format!(
                "label {} of example {} is not -1 or +1",
                labels[bad],
                bad + 1
            )));
        }
        if !labels.contains(&1.0) || !labels.contains(&-1.0) {
            return Err(Error::data("both labels -1 and +1 must occur"));
        }
        if let Some(ids) = &class_ids {
            if ids.len() != l {
                return Err(Error::data("class id count differs from example count"));
            }
            // every class id must sit on a single side
            let mut side = std::collections::BTreeMap::new();
            for (&id, &y) in ids.iter().zip(&labels) {
                if *side.entry(id).or_insert(y) != y {
                    return Err(Error::data(format!("class {id} appears with both labels")));
                }
            }
        }
        Ok(SignalDataset {
            signals,
            labels,
            class_ids,
        })
    }

    pub fn signals(&self) -> &Matrix {
        &self.signals
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn class_ids(&self) -> Option<&[u32]> {
        self.class_ids.as_deref()
    }

    pub fn len(&self) -> usize {
        self.signals.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn signal_length(&self) -> usize {
        self.signals.ncols()
    }
}

/// Signals tagged with small integer class ids, as generated or loaded from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassDataset {
    signals: Matrix,
    class_ids: Vec<u32>,
}

impl MulticlassDataset {
    pub fn new(signals: Matrix, class_ids: Vec<u32>) -> Result<Self> {
        check_signal_length(signals.ncols())?;
        if class_ids.len() != signals.nrows() {
            return Err(Error::data(format!(
                "{} class ids for {} signals",
                class_ids.len(),
                signals.nrows()
            )));
        }
        Ok(MulticlassDataset { signals, class_ids })
    }

    pub fn signals(&self) -> &Matrix {
        &self.signals
    }

    pub fn class_ids(&self) -> &[u32] {
        &self.class_ids
    }

    pub fn len(&self) -> usize {
        self.signals.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn signal_length(&self) -> usize {
        self.signals.ncols()
    }

    /// Distinct class ids in ascending order.
    pub fn classes(&self) -> Vec<u32> {
        self.class_ids
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn class_count(&self, class: u32) -> usize {
        self.class_ids.iter().filter(|&&c| c == class).count()
    }

    /// Restriction to two classes. The smaller id gets label -1, the larger +1.
    pub fn pair(&self, a: u32, b: u32) -> Result<SignalDataset> {
        if a == b {
            return Err(Error::data("a class pair needs two distinct ids"));
        }
        let (neg, pos) = (a.min(b), a.max(b));
        let rows: Vec<usize> = (0..self.len())
            .filter(|&i| self.class_ids[i] == neg || self.class_ids[i] == pos)
            .collect();
        let signals = self.signals.select_rows(rows.iter());
        let ids: Vec<u32> = rows.iter().map(|&i| self.class_ids[i]).collect();
        let labels = ids.iter().map(|&c| if c == pos { 1.0 } else { -1.0 }).collect();
        SignalDataset::with_class_ids(signals, labels, ids)
    }

    /// Binary view of a dataset that holds exactly two classes.
    pub fn to_binary(&self) -> Result<SignalDataset> {
        match self.classes()[..] {
            [a, b] => self.pair(a, b),
            ref other => Err(Error::data(format!(
                "expected exactly two classes, found {}",
                other.len()
            ))),
        }
    }

    /// Rows whose class id is `a` or `b`, keeping the ids.
    pub fn select_classes(&self, a: u32, b: u32) -> MulticlassDataset {
        let rows: Vec<usize> = (0..self.len())
            .filter(|&i| self.class_ids[i] == a || self.class_ids[i] == b)
            .collect();
        MulticlassDataset {
            signals: self.signals.select_rows(rows.iter()),
            class_ids: rows.iter().map(|&i| self.class_ids[i]).collect(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> MulticlassDataset {
        MulticlassDataset {
            signals: self.signals.select_rows(rows.iter()),
            class_ids: rows.iter().map(|&i| self.class_ids[i]).collect(),
        }
    }
}

impl From<SignalDataset> for MulticlassDataset {
    fn from(ds: SignalDataset) -> Self {
        let class_ids = match ds.class_ids {
            Some(ids) => ids,
            None => ds.labels.iter().map(|&y| u32::from(y > 0.0)).collect(),
        };
        MulticlassDataset {
            signals: ds.signals,
            class_ids,
        }
    }
}

fn check_signal_length(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::data(format!("signal length {n} is not a power of two >= 2")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Weight on the even sample is learned along with the window weights.
    Regularised,
    /// Even sample enters with unit weight; optionally polynomial-constrained.
    NonRegularised,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformConfig {
    /// Requested number of decomposition levels (M).
    pub levels: usize,
    /// Coarse samples per prediction window (L), even.
    pub window: usize,
    /// PSVM error weight (ν).
    pub nu: f64,
    pub variant: Variant,
    /// Number of vanishing-moment constraints (p); zero disables them.
    pub constraint_degree: usize,
    pub rng_seed: u64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            levels: 3,
            window: 4,
            nu: 1.0,
            variant: Variant::NonRegularised,
            constraint_degree: 0,
            rng_seed: 0,
        }
    }
}

impl TransformConfig {
    /// Checks the parameters that do not depend on the signal length.
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 || !self.window.is_multiple_of(2) {
            return Err(Error::config(format!(
                "window L = {} must be even and at least 2",
                self.window
            )));
        }
        if self.nu <= 0.0 || !self.nu.is_finite() {
            return Err(Error::config(format!("nu = {} must be positive", self.nu)));
        }
        if self.levels == 0 {
            return Err(Error::config("at least one level is required"));
        }
        if self.constraint_degree > 0 && self.variant == Variant::Regularised {
            return Err(Error::config(
                "polynomial constraints require the non-regularised variant",
            ));
        }
        if self.constraint_degree > self.window {
            return Err(Error::config(format!(
                "constraint degree p = {} exceeds window L = {}",
                self.constraint_degree, self.window
            )));
        }
        Ok(())
    }

    /// Validates against a signal length and returns the number of levels that
    /// actually fit: the largest `m <= levels` with `N / 2^m >= L`.
    pub fn effective_levels(&self, signal_length: usize) -> Result<usize> {
        self.validate()?;
        check_signal_length(signal_length)?;
        let max_levels = signal_length.trailing_zeros() as usize;
        if self.levels > max_levels {
            return Err(Error::config(format!(
                "M = {} exceeds log2(N) = {max_levels}",
                self.levels
            )));
        }
        let fitting = (1..=self.levels)
            .take_while(|&m| signal_length >> m >= self.window)
            .count();
        if fitting == 0 {
            return Err(Error::config(format!(
                "window L = {} does not fit in N/2 = {}",
                self.window,
                signal_length / 2
            )));
        }
        Ok(fitting)
    }
}

/// The coarse-signal positions feeding the prediction of even sample `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexWindow {
    /// Even-sample position, 1-based.
    pub k: usize,
    /// First member of the window, 1-based.
    pub start: usize,
    pub len: usize,
}

impl IndexWindow {
    /// 1-based members of the window.
    pub fn indices(&self) -> impl Iterator<Item = usize> + Clone {
        self.start..self.start + self.len
    }

    /// 0-based members of the window.
    pub fn zero_based(&self) -> std::ops::Range<usize> {
        self.start - 1..self.start - 1 + self.len
    }

    pub fn first(&self) -> usize {
        self.start
    }

    pub fn last(&self) -> usize {
        self.start + self.len - 1
    }
}

/// Window selection: left boundary for `k < L/2`, right boundary for
/// `k >= N/2 - L/2`, centred `{k - L/2 + 1, ..., k + L/2}` otherwise.
pub fn index_window(k: usize, half_length: usize, window: usize) -> Result<IndexWindow> {
    if window > half_length {
        return Err(Error::config(format!(
            "window L = {window} exceeds half length {half_length}"
        )));
    }
    if k == 0 || k > half_length {
        return Err(Error::config(format!("position k = {k} outside 1..={half_length}")));
    }
    let half = window / 2;
    let start = if k < half {
        1
    } else if k + half < half_length {
        k + 1 - half
    } else {
        half_length - window + 1
    };
    Ok(IndexWindow { k, start, len: window })
}

/// Splits columns into odd (1, 3, ...) and even (2, 4, ...) positions.
pub fn split(signals: &Matrix) -> Result<(Matrix, Matrix)> {
    let n = signals.ncols();
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::config(format!(
            "cannot split a signal of odd or zero length {n}"
        )));
    }
    let odd = signals.select_columns((0..n).step_by(2).collect::<Vec<_>>().iter());
    let even = signals.select_columns((1..n).step_by(2).collect::<Vec<_>>().iter());
    Ok((odd, even))
}

/// Inverse of [`split`].
pub fn interleave(odd: &Matrix, even: &Matrix) -> Matrix {
    assert_eq!(odd.shape(), even.shape(), "odd/even halves differ in shape");
    let (rows, half) = odd.shape();
    Matrix::from_fn(rows, 2 * half, |i, j| {
        if j % 2 == 0 {
            odd[(i, j / 2)]
        } else {
            even[(i, j / 2)]
        }
    })
}
