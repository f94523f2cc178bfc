//! The multi-level split / update / predict transform.
//!
//! Level `m` consumes the coarse approximation of level `m-1` (the signals
//! themselves for `m = 1`), splits it into odd and even samples, averages them
//! into a half-length coarse signal, and replaces each even sample by its
//! prediction error from a window of the coarse signal. The merged output is
//! laid out coarsest first: `(c_M | d_M | d_{M-1} | ... | d_1)`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psvm::{self, PredictProblem, PredictSolution};
use crate::types::{index_window, interleave, split, IndexWindow, Matrix, SignalDataset, TransformConfig, Variant};

/// Entries below this magnitude do not count towards a base vector's support.
pub const SUPPORT_EPS: f64 = 1e-10;

/// Leading weights below this magnitude make a regularised predictor non-invertible.
pub const INVERTIBLE_EPS: f64 = 1e-12;

/// Learned prediction for one even position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    pub window: IndexWindow,
    /// `L+1` weights (even sample first) when regularised, `L` otherwise.
    pub weights: Vec<f64>,
    pub gamma: f64,
}

impl Predictor {
    pub fn k(&self) -> usize {
        self.window.k
    }

    /// Detail coefficient of every row, given that level's even and coarse signals.
    fn details(&self, variant: Variant, even: &Matrix, coarse: &Matrix) -> DVector<f64> {
        let col = self.k() - 1;
        let window = self.window.zero_based();
        DVector::from_fn(even.nrows(), |i, _| {
            let (lead, rest) = match variant {
                Variant::Regularised => (self.weights[0], &self.weights[1..]),
                Variant::NonRegularised => (1.0, &self.weights[..]),
            };
            let predicted: f64 = rest.iter().zip(window.clone()).map(|(w, j)| w * coarse[(i, j)]).sum();
            lead * even[(i, col)] - predicted
        })
    }

    /// Even samples recovered from detail coefficients and the coarse signal.
    fn undo(&self, level: usize, variant: Variant, details: &Matrix, coarse: &Matrix) -> Result<DVector<f64>> {
        let col = self.k() - 1;
        let window = self.window.zero_based();
        let (lead, rest) = match variant {
            Variant::Regularised => (self.weights[0], &self.weights[1..]),
            Variant::NonRegularised => (1.0, &self.weights[..]),
        };
        if lead.abs() < INVERTIBLE_EPS {
            return Err(Error::Inversion {
                level,
                k: self.k(),
                weight: lead,
            });
        }
        Ok(DVector::from_fn(details.nrows(), |i, _| {
            let predicted: f64 = rest.iter().zip(window.clone()).map(|(w, j)| w * coarse[(i, j)]).sum();
            (details[(i, col)] + predicted) / lead
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    /// 1-based decomposition level.
    pub level: usize,
    pub predictors: Vec<Predictor>,
}

/// Frozen weights of all levels; defines a linear map `f: R^N -> R^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedTransform {
    pub config: TransformConfig,
    pub signal_length: usize,
    pub levels: Vec<LevelRecord>,
}

/// Which coefficient a merged column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoefficientId {
    /// Decomposition level, 1-based.
    pub level: usize,
    /// Position within the level, 1-based.
    pub k: usize,
    /// Coarse approximation (only at the last level) rather than detail.
    pub coarse: bool,
}

impl CoefficientId {
    pub fn name(&self) -> String {
        let kind = if self.coarse { 'c' } else { 'd' };
        format!("{kind}{}_{}", self.level, self.k)
    }
}

/// Layout of the merged coefficient vector for a signal length and level count.
pub fn coefficient_layout(signal_length: usize, levels: usize) -> Vec<CoefficientId> {
    let coarse_len = signal_length >> levels;
    let mut ids: Vec<CoefficientId> = (1..=coarse_len)
        .map(|k| CoefficientId {
            level: levels,
            k,
            coarse: true,
        })
        .collect();
    for m in (1..=levels).rev() {
        ids.extend((1..=signal_length >> m).map(|k| CoefficientId {
            level: m,
            k,
            coarse: false,
        }));
    }
    ids
}

/// Coarse approximation and details of every level for a batch of signals.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    /// `C_M`, `l x N/2^M`.
    pub coarse: Matrix,
    /// `D_1, ..., D_M`; `D_m` is `l x N/2^m`.
    pub details: Vec<Matrix>,
    pub labels: Option<Vec<f64>>,
}

impl CoefficientTable {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn rows(&self) -> usize {
        self.coarse.nrows()
    }

    pub fn signal_length(&self) -> usize {
        self.coarse.ncols() + self.details.iter().map(|d| d.ncols()).sum::<usize>()
    }

    pub fn layout(&self) -> Vec<CoefficientId> {
        coefficient_layout(self.signal_length(), self.levels())
    }

    /// Merged feature matrix `X^new`, columns ordered `(c_M | d_M | ... | d_1)`.
    pub fn merged(&self) -> Matrix {
        let mut blocks = vec![&self.coarse];
        blocks.extend(self.details.iter().rev());
        let width: usize = blocks.iter().map(|b| b.ncols()).sum();
        let mut out = Matrix::zeros(self.rows(), width);
        let mut at = 0;
        for b in blocks {
            out.columns_mut(at, b.ncols()).copy_from(b);
            at += b.ncols();
        }
        out
    }

    /// Inverse of [`merged`](Self::merged).
    pub fn from_merged(merged: &Matrix, levels: usize, labels: Option<Vec<f64>>) -> Result<Self> {
        let n = merged.ncols();
        if !n.is_power_of_two() || levels == 0 || n >> levels == 0 {
            return Err(Error::data(format!("{n} merged columns do not match {levels} levels")));
        }
        let coarse_len = n >> levels;
        let coarse = merged.columns(0, coarse_len).into_owned();
        let mut details = vec![Matrix::zeros(0, 0); levels];
        let mut at = coarse_len;
        for m in (1..=levels).rev() {
            let w = n >> m;
            details[m - 1] = merged.columns(at, w).into_owned();
            at += w;
        }
        Ok(CoefficientTable {
            coarse,
            details,
            labels,
        })
    }

    /// Column of the merged matrix for coefficient `id`.
    pub fn column(&self, id: CoefficientId) -> DVector<f64> {
        if id.coarse {
            self.coarse.column(id.k - 1).into_owned()
        } else {
            self.details[id.level - 1].column(id.k - 1).into_owned()
        }
    }
}

/// Builds the `l x (L+1)` design matrix for position `k`.
fn design_matrix(even: &Matrix, coarse: &Matrix, window: &IndexWindow) -> Matrix {
    let l = even.nrows();
    let mut design = Matrix::zeros(l, window.len + 1);
    design.column_mut(0).copy_from(&even.column(window.k - 1));
    for (c, j) in window.zero_based().enumerate() {
        for i in 0..l {
            design[(i, c + 1)] = -coarse[(i, j)];
        }
    }
    design
}

fn update(odd: &Matrix, even: &Matrix) -> Matrix {
    (odd + even) * 0.5
}

/// Predict-step problem for position `k` of one level. Exposed for diagnostics.
pub fn predict_problem(
    config: &TransformConfig,
    even: &Matrix,
    coarse: &Matrix,
    labels: &[f64],
    k: usize,
) -> Result<PredictProblem> {
    let window = index_window(k, coarse.ncols(), config.window)?;
    let constraints = (config.variant == Variant::NonRegularised && config.constraint_degree > 0)
        .then(|| psvm::vandermonde_constraints(&window, config.constraint_degree));
    Ok(PredictProblem {
        design: design_matrix(even, coarse, &window),
        labels: labels.to_vec(),
        nu: config.nu,
        variant: config.variant,
        constraints,
    })
}

/// Hook invoked with `(level, k, problem, solution)` for every solve.
pub type SolveObserver<'a> = dyn Fn(usize, usize, &PredictProblem, &PredictSolution) + Sync + 'a;

/// Fits all levels and returns the transform with the training coefficients.
pub fn fit(train: &SignalDataset, config: &TransformConfig) -> Result<(FittedTransform, CoefficientTable)> {
    fit_observed(train, config, None)
}

pub fn fit_observed(
    train: &SignalDataset,
    config: &TransformConfig,
    observer: Option<&SolveObserver<'_>>,
) -> Result<(FittedTransform, CoefficientTable)> {
    let n = train.signal_length();
    let depth = config.effective_levels(n)?;
    let labels = train.labels();
    let mut current = train.signals().clone();
    let mut levels = Vec::with_capacity(depth);
    let mut details = Vec::with_capacity(depth);

    for m in 1..=depth {
        let (odd, even) = split(&current)?;
        let coarse = update(&odd, &even);
        let half = coarse.ncols();
        let predictors = (1..=half)
            .into_par_iter()
            .map(|k| {
                let annotate = |e: Error| Error::AtPredictor {
                    level: m,
                    k,
                    source: Box::new(e),
                };
                let problem = predict_problem(config, &even, &coarse, labels, k).map_err(annotate)?;
                let sol = psvm::solve(&problem).map_err(annotate)?;
                if let Some(obs) = observer {
                    obs(m, k, &problem, &sol);
                }
                Ok(Predictor {
                    window: index_window(k, half, config.window).map_err(annotate)?,
                    weights: sol.w,
                    gamma: sol.gamma,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let record = LevelRecord { level: m, predictors };
        details.push(level_details(&record, config.variant, &even, &coarse));
        levels.push(record);
        current = coarse;
    }

    let transform = FittedTransform {
        config: config.clone(),
        signal_length: n,
        levels,
    };
    let table = CoefficientTable {
        coarse: current,
        details,
        labels: Some(labels.to_vec()),
    };
    Ok((transform, table))
}

fn level_details(record: &LevelRecord, variant: Variant, even: &Matrix, coarse: &Matrix) -> Matrix {
    let mut d = Matrix::zeros(even.nrows(), record.predictors.len());
    for (c, p) in record.predictors.iter().enumerate() {
        d.set_column(c, &p.details(variant, even, coarse));
    }
    d
}

impl FittedTransform {
    /// Levels actually fitted; may be fewer than requested.
    pub fn effective_levels(&self) -> usize {
        self.levels.len()
    }

    /// True when fitting stopped before the requested number of levels.
    pub fn truncated(&self) -> bool {
        self.effective_levels() < self.config.levels
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn layout(&self) -> Vec<CoefficientId> {
        coefficient_layout(self.signal_length, self.effective_levels())
    }

    pub fn predictor(&self, level: usize, k: usize) -> Option<&Predictor> {
        self.levels
            .get(level.checked_sub(1)?)?
            .predictors
            .get(k.checked_sub(1)?)
    }

    /// Checks level sizes and window lengths.
    pub fn validate(&self) -> Result<()> {
        let n = self.signal_length;
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::data(format!("signal length {n} is not a power of two")));
        }
        if self.levels.is_empty() || n >> self.levels.len() == 0 {
            return Err(Error::data("level count does not fit the signal length"));
        }
        let expected_weights = match self.config.variant {
            Variant::Regularised => self.config.window + 1,
            Variant::NonRegularised => self.config.window,
        };
        for (i, level) in self.levels.iter().enumerate() {
            let m = i + 1;
            if level.level != m || level.predictors.len() != n >> m {
                return Err(Error::data(format!("level {m} must hold {} predictors", n >> m)));
            }
            for (j, p) in level.predictors.iter().enumerate() {
                if p.window.k != j + 1
                    || p.window.len != self.config.window
                    || p.window.first() < 1
                    || p.window.last() > n >> m
                    || p.weights.len() != expected_weights
                {
                    return Err(Error::data(format!(
                        "predictor k = {} at level {m} is malformed",
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Applies the frozen predictors to new signals.
    pub fn apply(&self, signals: &Matrix) -> Result<CoefficientTable> {
        if signals.ncols() != self.signal_length {
            return Err(Error::data(format!(
                "signal length {} does not match the transform's {}",
                signals.ncols(),
                self.signal_length
            )));
        }
        let mut current = signals.clone();
        let mut details = Vec::with_capacity(self.levels.len());
        for record in &self.levels {
            let (odd, even) = split(&current)?;
            let coarse = update(&odd, &even);
            details.push(level_details(record, self.config.variant, &even, &coarse));
            current = coarse;
        }
        Ok(CoefficientTable {
            coarse: current,
            details,
            labels: None,
        })
    }

    /// Inverts [`apply`](Self::apply), level by level from the coarsest.
    pub fn reconstruct(&self, table: &CoefficientTable) -> Result<Matrix> {
        if table.levels() != self.levels.len() || table.signal_length() != self.signal_length {
            return Err(Error::data("coefficient table does not match the transform's layout"));
        }
        let mut current = table.coarse.clone();
        for record in self.levels.iter().rev() {
            let d = &table.details[record.level - 1];
            let mut even = Matrix::zeros(d.nrows(), d.ncols());
            for p in &record.predictors {
                even.set_column(p.k() - 1, &p.undo(record.level, self.config.variant, d, &current)?);
            }
            let odd = &current * 2.0 - &even;
            current = interleave(&odd, &even);
        }
        Ok(current)
    }

    /// Analysis and synthesis vectors of the induced biorthogonal pair.
    pub fn base_vectors(&self) -> Result<BaseVectors> {
        let n = self.signal_length;
        let identity = Matrix::identity(n, n);
        // row j of the merged output is f(e_j), so its transpose has φ̃_i as rows
        let analysis = self.apply(&identity)?.merged().transpose();
        let unit_coefficients = CoefficientTable::from_merged(&identity, self.effective_levels(), None)?;
        let synthesis = self.reconstruct(&unit_coefficients)?.transpose();
        let layout = self.layout();
        let affine_offsets = layout
            .iter()
            .map(|id| {
                if id.coarse {
                    0.0
                } else {
                    self.predictor(id.level, id.k).map_or(0.0, |p| p.gamma)
                }
            })
            .collect();
        let analysis_supports = (0..n).map(|i| Support::of(analysis.row(i).iter())).collect();
        let synthesis_supports = (0..n).map(|i| Support::of(synthesis.column(i).iter())).collect();
        Ok(BaseVectors {
            layout,
            analysis,
            synthesis,
            affine_offsets,
            analysis_supports,
            synthesis_supports,
        })
    }
}

/// Nonzero extent of a base vector over original sample indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Support {
    /// First nonzero sample, 1-based; 0 for an all-zero vector.
    pub first: usize,
    pub last: usize,
    /// Number of nonzero samples.
    pub count: usize,
}

impl Support {
    fn of<'a>(values: impl Iterator<Item = &'a f64>) -> Support {
        let nonzero: Vec<usize> = values
            .enumerate()
            .filter(|(_, v)| v.abs() > SUPPORT_EPS)
            .map(|(i, _)| i + 1)
            .collect();
        Support {
            first: nonzero.first().copied().unwrap_or(0),
            last: nonzero.last().copied().unwrap_or(0),
            count: nonzero.len(),
        }
    }

    /// Samples from first to last nonzero, inclusive.
    pub fn span(&self) -> usize {
        if self.count == 0 {
            0
        } else {
            self.last - self.first + 1
        }
    }

    pub fn contains(&self, sample: usize) -> bool {
        self.count > 0 && (self.first..=self.last).contains(&sample)
    }

    pub fn intersects(&self, first: usize, last: usize) -> bool {
        self.count > 0 && self.first <= last && first <= self.last
    }
}

/// The biorthogonal pair realised by a fitted transform.
#[derive(Debug, Clone)]
pub struct BaseVectors {
    /// Coefficient identity of row `i` of `analysis` / column `i` of `synthesis`.
    pub layout: Vec<CoefficientId>,
    /// `N x N`; row `i` is the analysis vector of coefficient `i`.
    pub analysis: Matrix,
    /// `N x N`; column `i` is the synthesis vector of coefficient `i`.
    pub synthesis: Matrix,
    /// `γ` of each detail coefficient (0 for coarse ones). The transform itself
    /// is purely linear; these only matter when a coefficient is thresholded.
    pub affine_offsets: Vec<f64>,
    pub analysis_supports: Vec<Support>,
    pub synthesis_supports: Vec<Support>,
}

impl BaseVectors {
    /// `max |analysis · synthesis - I|`.
    pub fn biorthogonality_residual(&self) -> f64 {
        let n = self.analysis.nrows();
        (&self.analysis * &self.synthesis - Matrix::identity(n, n)).amax()
    }

    pub fn index_of(&self, id: CoefficientId) -> Option<usize> {
        self.layout.iter().position(|&x| x == id)
    }
}
