use crate::types::{IndexWindow, Matrix};

/// Offsets of the window's coarse samples from the prediction target, in
/// units of the current level's input grid.
///
/// Coarse sample `j` averages input samples `2j-1` and `2j`, so it sits at
/// `2j - 1/2`; the even target `k` sits at `2k`. Knots are half-integers.
pub fn knots(window: &IndexWindow) -> Vec<f64> {
    let k = window.k as f64;
    window.indices().map(|j| 2.0 * (j as f64 - k) - 0.5).collect()
}

/// The `p x L` matrix `B` for `B w = e_1`.
///
/// Row `r` (0-based) holds the mean of the monomial `s^r` over the two input
/// samples averaged into each coarse sample, i.e. `((t - 1/2)^r + (t + 1/2)^r) / 2`
/// for knot `t`. For `r < 2` that is exactly the Vandermonde row `t^r`; for
/// higher rows the averaging makes the predictor reproduce sampled polynomials
/// of degree `< p` exactly through the coarse-average step.
pub fn vandermonde_constraints(window: &IndexWindow, degree: usize) -> Matrix {
    assert!(
        degree <= window.len,
        "constraint degree {degree} exceeds window {}",
        window.len
    );
    let t = knots(window);
    Matrix::from_fn(degree, window.len, |r, j| {
        let r = r as i32;
        match r {
            0 => 1.0,
            1 => t[j],
            _ => 0.5 * ((t[j] - 0.5).powi(r) + (t[j] + 0.5).powi(r)),
        }
    })
}

/// `e_1` of length `p`.
pub fn unit_target(degree: usize) -> Vec<f64> {
    let mut e1 = vec![0.0; degree];
    if let Some(first) = e1.first_mut() {
        *first = 1.0;
    }
    e1
}
