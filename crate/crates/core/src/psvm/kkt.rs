//! Dense KKT solve of the same problems, for cross-checking the SMW path.

use nalgebra::DVector;

use super::{unit_target, PredictProblem, PredictSolution};
use crate::error::{Error, Result};
use crate::types::Matrix;

/// Largest example count the dense oracle accepts.
pub const KKT_SIZE_LIMIT: usize = 2000;

/// Solves the stationarity + feasibility system in `(w, γ, u, v)` with one
/// dense LU factorization of size `n_w + 1 + l + p`.
///
/// ```text
/// [ I     0    -FᵀY    -Bᵀ ] [w]   [0 ]
/// [ 0     1     eᵀY     0  ] [γ] = [0 ]
/// [ YF   -Ye    I/ν     0  ] [u]   [r ]
/// [ B     0     0       0  ] [v]   [e₁]
/// ```
pub fn kkt_oracle(problem: &PredictProblem) -> Result<PredictSolution> {
    problem.check()?;
    let l = problem.examples();
    if l > KKT_SIZE_LIMIT {
        return Err(Error::config(format!(
            "dense KKT oracle limited to {KKT_SIZE_LIMIT} examples, got {l}"
        )));
    }
    let features = problem.features();
    let nw = features.ncols();
    let b = problem.constraints.clone().unwrap_or_else(|| Matrix::zeros(0, nw));
    let p = b.nrows();
    let y = &problem.labels;
    let (iw, ig, iu, iv) = (0, nw, nw + 1, nw + 1 + l);
    let dim = iv + p;

    let mut k = Matrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    for j in 0..nw {
        k[(iw + j, iw + j)] = 1.0;
        for i in 0..l {
            k[(iw + j, iu + i)] = -features[(i, j)] * y[i];
        }
        for r in 0..p {
            k[(iw + j, iv + r)] = -b[(r, j)];
        }
    }
    k[(ig, ig)] = 1.0;
    for i in 0..l {
        k[(ig, iu + i)] = y[i];
    }
    let offset = problem.offset();
    for i in 0..l {
        for j in 0..nw {
            k[(iu + i, iw + j)] = y[i] * features[(i, j)];
        }
        k[(iu + i, ig)] = -y[i];
        k[(iu + i, iu + i)] = 1.0 / problem.nu;
        rhs[iu + i] = offset[i];
    }
    let e1 = unit_target(p);
    for r in 0..p {
        for j in 0..nw {
            k[(iv + r, iw + j)] = b[(r, j)];
        }
        rhs[iv + r] = e1[r];
    }

    let sol = k.lu().solve(&rhs).ok_or_else(|| Error::Numerical {
        context: format!("dense KKT system of size {dim} is singular"),
        condition: f64::INFINITY,
    })?;
    let u: Vec<f64> = sol.rows(iu, l).iter().copied().collect();
    let xi_norm = u.iter().map(|x| x * x).sum::<f64>().sqrt() / problem.nu;
    Ok(PredictSolution {
        w: sol.rows(iw, nw).iter().copied().collect(),
        gamma: sol[ig],
        xi_norm,
        u,
        v: (p > 0).then(|| sol.rows(iv, p).iter().copied().collect()),
    })
}

/// Residual vector `ξ` implied by `(w, γ)` through the equality constraint.
fn implied_residual(problem: &PredictProblem, w: &[f64], gamma: f64) -> DVector<f64> {
    let features = problem.features();
    let fw = &features * DVector::from_column_slice(w);
    let offset = problem.offset();
    DVector::from_fn(problem.examples(), |i, _| {
        offset[i] - problem.labels[i] * (fw[i] - gamma)
    })
}

/// `½‖w‖² + ½γ² + (ν/2)‖ξ‖²` with `ξ` eliminated through the equality constraint.
pub fn objective(problem: &PredictProblem, w: &[f64], gamma: f64) -> f64 {
    let xi = implied_residual(problem, w, gamma);
    0.5 * (w.iter().map(|x| x * x).sum::<f64>() + gamma * gamma) + 0.5 * problem.nu * xi.norm_squared()
}

/// Largest violation among the optimality conditions, each scaled by the
/// magnitude of its terms:
/// `w = FᵀYu + Bᵀv`, `γ = -eᵀYu`, `ξ = u/ν` (with `ξ` from the equality
/// constraint) and `Bw = e₁`.
pub fn optimality_residual(problem: &PredictProblem, sol: &PredictSolution) -> f64 {
    let features = problem.features();
    let y = &problem.labels;
    let yu = DVector::from_fn(sol.u.len(), |i, _| y[i] * sol.u[i]);
    let mut stationary = features.tr_mul(&yu);
    let mut worst: f64 = 0.0;
    let scaled = |diff: f64, size: f64| diff.abs() / size.abs().max(1.0);

    if let (Some(b), Some(v)) = (&problem.constraints, &sol.v) {
        stationary += b.transpose() * DVector::from_column_slice(v);
        let bw = b * DVector::from_column_slice(&sol.w);
        let e1 = unit_target(b.nrows());
        for r in 0..b.nrows() {
            worst = worst.max((bw[r] - e1[r]).abs());
        }
    }
    for (j, w) in sol.w.iter().enumerate() {
        worst = worst.max(scaled(w - stationary[j], stationary[j]));
    }
    worst = worst.max(scaled(sol.gamma + yu.sum(), sol.gamma));
    let xi = implied_residual(problem, &sol.w, sol.gamma);
    for (i, x) in xi.iter().enumerate() {
        let from_u = sol.u[i] / problem.nu;
        worst = worst.max(scaled(x - from_u, from_u));
    }
    worst
}
