//! Proximal SVM solves for the per-position prediction weights.
//!
//! All three problem variants share the objective
//! `½‖w‖² + ½γ² + (ν/2)‖ξ‖²` with an equality constraint tying the residual
//! `ξ` to the labelled design matrix. Eliminating `w`, `γ` and `ξ` leaves an
//! `l x l` system `(I/ν + H₁H₂ᵀ) u = b` for the multiplier `u`, which is
//! solved through the Sherman-Morrison-Woodbury identity so that only an
//! `r x r` matrix (`r` = window length plus a handful) is ever factored.

mod constraints;
mod kkt;

pub use constraints::{knots, unit_target, vandermonde_constraints};
pub use kkt::{kkt_oracle, objective, optimality_residual, KKT_SIZE_LIMIT};

use nalgebra::{Cholesky, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{Matrix, Variant};

/// One prediction problem: the design matrix for position `k`, labels and
/// solver parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictProblem {
    /// `l x (L+1)`: even samples in column 0, negated window samples after.
    pub design: Matrix,
    pub labels: Vec<f64>,
    pub nu: f64,
    pub variant: Variant,
    /// Optional `p x L` constraint matrix (non-regularised only).
    pub constraints: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictSolution {
    /// `L+1` weights for the regularised variant, `L` otherwise.
    pub w: Vec<f64>,
    pub gamma: f64,
    pub xi_norm: f64,
    pub u: Vec<f64>,
    pub v: Option<Vec<f64>>,
}

impl PredictProblem {
    pub fn examples(&self) -> usize {
        self.design.nrows()
    }

    /// Window length `L`.
    pub fn window(&self) -> usize {
        self.design.ncols() - 1
    }

    /// Columns the weights act on: all of them when regularised, the window
    /// columns otherwise.
    pub(crate) fn features(&self) -> Matrix {
        match self.variant {
            Variant::Regularised => self.design.clone(),
            Variant::NonRegularised => self.design.columns(1, self.window()).into_owned(),
        }
    }

    /// Right-hand side of the residual constraint before the `γ`/`w` terms:
    /// `e` when regularised, `e - Y x_e` otherwise.
    pub(crate) fn offset(&self) -> DVector<f64> {
        let l = self.examples();
        match self.variant {
            Variant::Regularised => DVector::from_element(l, 1.0),
            Variant::NonRegularised => DVector::from_fn(l, |i, _| 1.0 - self.labels[i] * self.design[(i, 0)]),
        }
    }

    fn check(&self) -> Result<()> {
        let l = self.examples();
        if self.nu <= 0.0 || !self.nu.is_finite() {
            return Err(Error::config(format!("nu = {} must be positive", self.nu)));
        }
        if self.design.ncols() < 1 {
            return Err(Error::config("design matrix has no columns"));
        }
        if self.labels.len() != l {
            return Err(Error::data(format!(
                "{} labels for {} design rows",
                self.labels.len(),
                l
            )));
        }
        if self.labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::data("labels must be -1 or +1"));
        }
        if !self.labels.contains(&1.0) || !self.labels.contains(&-1.0) {
            return Err(Error::data("both classes must be present"));
        }
        if let Some(b) = &self.constraints {
            if self.variant != Variant::NonRegularised {
                return Err(Error::config(
                    "constraints are only defined for the non-regularised variant",
                ));
            }
            if b.ncols() != self.window() {
                return Err(Error::config(format!(
                    "constraint matrix has {} columns, window is {}",
                    b.ncols(),
                    self.window()
                )));
            }
            if b.nrows() > self.window() {
                return Err(Error::config(format!(
                    "constraint degree p = {} exceeds window L = {}",
                    b.nrows(),
                    self.window()
                )));
            }
        }
        Ok(())
    }

    /// Serializable snapshot for bug reports.
    pub fn diagnostic_json(&self, solution: Option<&PredictSolution>) -> serde_json::Value {
        let rows = |m: &Matrix| -> Vec<Vec<f64>> { m.row_iter().map(|r| r.iter().copied().collect()).collect() };
        serde_json::json!({
            "design": rows(&self.design),
            "labels": self.labels,
            "nu": self.nu,
            "variant": self.variant,
            "constraints": self.constraints.as_ref().map(rows),
            "solution": solution,
        })
    }
}

/// Dispatches on variant and the presence of constraints.
pub fn solve(problem: &PredictProblem) -> Result<PredictSolution> {
    match (problem.variant, &problem.constraints) {
        (Variant::Regularised, _) => solve_regularised(problem),
        (Variant::NonRegularised, Some(b)) if b.nrows() > 0 => solve_constrained(problem),
        (Variant::NonRegularised, _) => solve_nonregularised(problem),
    }
}

const REFINEMENT_STEPS: usize = 3;

/// `(I/ν + H₁H₂ᵀ)⁻¹ b` as `ν(b - H₁ (I/ν + H₂ᵀH₁)⁻¹ H₂ᵀ b)`.
///
/// The inner `r x r` matrix is `H₂ᵀH₁`; it only equals `H₁ᵀH₂` when `H₁ = H₂`.
pub fn smw_solve(h1: &Matrix, h2: &Matrix, nu: f64, b: &DVector<f64>) -> Result<DVector<f64>> {
    if nu.is_nan() || nu <= 0.0 {
        return Err(Error::config(format!("nu = {nu} must be positive")));
    }
    assert_eq!(h1.shape(), h2.shape(), "H1 and H2 differ in shape");
    assert_eq!(h1.nrows(), b.len(), "right-hand side length mismatch");
    let r = h1.ncols();
    let mut inner = h2.tr_mul(h1);
    for i in 0..r {
        inner[(i, i)] += 1.0 / nu;
    }
    let projected = h2.tr_mul(b);
    let lu = inner.clone().lu();
    let y = lu.solve(&projected).filter(|y| y.iter().all(|v| v.is_finite()));
    let Some(y) = y else {
        return Err(Error::Numerical {
            context: format!("SMW inner system of size {r} is singular"),
            condition: condition_estimate(&inner),
        });
    };
    let mut u = (b - h1 * y) * nu;
    // iterative refinement; the non-symmetric inner system loses digits for large nu
    for _ in 0..REFINEMENT_STEPS {
        let r = b - (&u / nu + h1 * h2.tr_mul(&u));
        if r.amax() <= f64::EPSILON * b.amax() {
            break;
        }
        let Some(z) = lu.solve(&h2.tr_mul(&r)) else { break };
        u += (r - h1 * z) * nu;
    }
    Ok(u)
}

fn condition_estimate(m: &Matrix) -> f64 {
    let norm1 = |m: &Matrix| {
        m.column_iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match m.clone().try_inverse() {
        Some(inv) => norm1(m) * norm1(&inv),
        None => f64::INFINITY,
    }
}

/// `[F | -e]` with labelled rows.
fn labelled_with_bias(features: &Matrix, labels: &[f64]) -> Matrix {
    let (l, n) = features.shape();
    let mut h = Matrix::zeros(l, n + 1);
    for i in 0..l {
        for j in 0..n {
            h[(i, j)] = labels[i] * features[(i, j)];
        }
        h[(i, n)] = -labels[i];
    }
    h
}

/// `Yu`.
fn label_vector(u: &DVector<f64>, labels: &[f64]) -> DVector<f64> {
    DVector::from_fn(u.len(), |i, _| labels[i] * u[i])
}

fn finish(u: DVector<f64>, w: DVector<f64>, labels: &[f64], nu: f64, v: Option<Vec<f64>>) -> PredictSolution {
    let gamma = -label_vector(&u, labels).sum();
    PredictSolution {
        w: w.iter().copied().collect(),
        gamma,
        xi_norm: u.norm() / nu,
        u: u.iter().copied().collect(),
        v,
    }
}

/// Weights on the even sample and the window, learned jointly.
pub fn solve_regularised(problem: &PredictProblem) -> Result<PredictSolution> {
    problem.check()?;
    if problem.variant != Variant::Regularised {
        return Err(Error::config("solve_regularised needs the regularised variant"));
    }
    let h = labelled_with_bias(&problem.design, &problem.labels);
    let u = smw_solve(&h, &h, problem.nu, &problem.offset())?;
    let w = problem.design.tr_mul(&label_vector(&u, &problem.labels));
    Ok(finish(u, w, &problem.labels, problem.nu, None))
}

/// Unit weight on the even sample; window weights learned.
pub fn solve_nonregularised(problem: &PredictProblem) -> Result<PredictSolution> {
    problem.check()?;
    if problem.variant != Variant::NonRegularised {
        return Err(Error::config("solve_nonregularised needs the non-regularised variant"));
    }
    let features = problem.features();
    let h = labelled_with_bias(&features, &problem.labels);
    let u = smw_solve(&h, &h, problem.nu, &problem.offset())?;
    let w = features.tr_mul(&label_vector(&u, &problem.labels));
    Ok(finish(u, w, &problem.labels, problem.nu, None))
}

/// Non-regularised solve subject to `B w = e_1`.
///
/// With `w = Ã̃ᵀYu + Bᵀv` and `γ = -eᵀYu`, eliminating `v` through the
/// constraint gives `w = P Ã̃ᵀYu + w₀`, where `P = I - Bᵀ(BBᵀ)⁻¹B` and
/// `w₀ = Bᵀ(BBᵀ)⁻¹e₁`. The residual constraint then reads
/// `(I/ν + Y(Ã̃Ã̃ᵀ - QQᵀ + eeᵀ)Y) u = e - Yx_e - YÃ̃w₀` with `Q = Ã̃BᵀCᵀ`,
/// `(BBᵀ)⁻¹ = CᵀC`, which factors as `H₁H₂ᵀ` with
/// `H₁ = Y[Ã̃ | -Q | e]` and `H₂ = Y[Ã̃ | Q | e]`.
pub fn solve_constrained(problem: &PredictProblem) -> Result<PredictSolution> {
    problem.check()?;
    let Some(b) = problem.constraints.as_ref() else {
        return Err(Error::config("solve_constrained needs a constraint matrix"));
    };
    let (p, window) = b.shape();
    let labels = &problem.labels;
    let l = problem.examples();

    let gram = b * b.transpose();
    let chol = Cholesky::new(gram.clone())
        .ok_or_else(|| Error::Constraint(format!("B Bᵀ ({p} x {p}) is not positive definite")))?;
    let lower = chol.l();
    let diag_max = lower.diagonal().amax();
    let diag_min = lower.diagonal().iter().fold(f64::INFINITY, |a, &x| a.min(x.abs()));
    if diag_min <= 1e-12 * diag_max {
        return Err(Error::Constraint(format!(
            "constraint matrix ({p} x {window}) is numerically rank deficient"
        )));
    }
    // (B Bᵀ)⁻¹ = Cᵀ C with C = lower⁻¹
    let c = lower
        .solve_lower_triangular(&Matrix::identity(p, p))
        .ok_or_else(|| Error::Constraint("singular Cholesky factor".into()))?;

    let features = problem.features();
    let q = &features * b.transpose() * c.transpose();

    let mut h1 = Matrix::zeros(l, window + p + 1);
    let mut h2 = Matrix::zeros(l, window + p + 1);
    for i in 0..l {
        let y = labels[i];
        for j in 0..window {
            h1[(i, j)] = y * features[(i, j)];
            h2[(i, j)] = y * features[(i, j)];
        }
        for j in 0..p {
            h1[(i, window + j)] = -y * q[(i, j)];
            h2[(i, window + j)] = y * q[(i, j)];
        }
        h1[(i, window + p)] = y;
        h2[(i, window + p)] = y;
    }

    let e1 = DVector::from_vec(unit_target(p));
    let w0 = b.transpose() * chol.solve(&e1);
    let shifted = &features * &w0;
    let mut rhs = problem.offset();
    for i in 0..l {
        rhs[i] -= labels[i] * shifted[i];
    }

    let u = smw_solve(&h1, &h2, problem.nu, &rhs)?;
    let g = features.tr_mul(&label_vector(&u, labels));
    let v = chol.solve(&(&e1 - b * &g));
    let w = g + b.transpose() * &v;
    Ok(finish(u, w, labels, problem.nu, Some(v.iter().copied().collect())))
}

/// A plain linear PSVM classifier, `sign(⟨w, x⟩ - γ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProximalSvm {
    pub w: Vec<f64>,
    pub gamma: f64,
}

impl ProximalSvm {
    pub fn fit(signals: &Matrix, labels: &[f64], nu: f64) -> Result<Self> {
        let problem = PredictProblem {
            design: signals.clone(),
            labels: labels.to_vec(),
            nu,
            variant: Variant::Regularised,
            constraints: None,
        };
        let sol = solve_regularised(&problem)?;
        Ok(ProximalSvm {
            w: sol.w,
            gamma: sol.gamma,
        })
    }

    pub fn decision(&self, signal: &[f64]) -> f64 {
        signal.iter().zip(&self.w).map(|(x, w)| x * w).sum::<f64>() - self.gamma
    }

    /// Predicted labels for each row; `sign(0) = +1`.
    pub fn predict(&self, signals: &Matrix) -> Vec<f64> {
        let scores = signals * DVector::from_column_slice(&self.w);
        scores
            .iter()
            .map(|s| if s - self.gamma >= 0.0 { 1.0 } else { -1.0 })
            .collect()
    }

    pub fn error_rate(&self, signals: &Matrix, labels: &[f64]) -> f64 {
        let wrong = self.predict(signals).iter().zip(labels).filter(|(p, y)| p != y).count();
        wrong as f64 / labels.len() as f64
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    pub fn random_problem(
        rng: &mut impl Rng,
        l: usize,
        window: usize,
        nu: f64,
        variant: Variant,
        degree: usize,
    ) -> PredictProblem {
        let design = Matrix::from_fn(l, window + 1, |_, _| rng.sample(StandardNormal));
        let mut labels: Vec<f64> = (0..l).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        // shuffle without losing either class
        for i in (1..l).rev() {
            labels.swap(i, rng.random_range(0..=i));
        }
        let constraints = (degree > 0).then(|| {
            let w = crate::types::index_window(window / 2, 2 * window, window).unwrap();
            vandermonde_constraints(&w, degree)
        });
        PredictProblem {
            design,
            labels,
            nu,
            variant,
            constraints,
        }
    }
}
