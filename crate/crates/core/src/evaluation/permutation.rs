use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{optimal_threshold, LocalClassifier};
use crate::error::{Error, Result};
use crate::rng::SeedStream;

pub const MIN_PERMUTATIONS: usize = 100;

/// Permutation p-value of a classifier's accuracy on `values`/`labels`.
///
/// Under each of the `permutations` label shuffles the threshold and
/// orientation are re-fit from scratch, so the null distribution accounts for
/// threshold selection. `p = (1 + #{null >= observed}) / (B + 1)`. Replicate
/// `b` shuffles with child stream `b` of `seed`.
pub fn permutation_test(
    classifier: &LocalClassifier,
    values: &[f64],
    labels: &[f64],
    permutations: usize,
    seed: u64,
) -> Result<f64> {
    if permutations < MIN_PERMUTATIONS {
        return Err(Error::config(format!(
            "at least {MIN_PERMUTATIONS} permutations are required, got {permutations}"
        )));
    }
    if values.len() != labels.len() || values.is_empty() {
        return Err(Error::data("values and labels differ in length"));
    }
    let observed = values
        .iter()
        .zip(labels)
        .filter(|(&v, &y)| classifier.predict(v) == y)
        .count();
    Ok(p_value_for(observed, values, labels, permutations, seed))
}

/// p-value of `observed` correct predictions against re-fit null replicates.
pub(crate) fn p_value_for(observed: usize, values: &[f64], labels: &[f64], permutations: usize, seed: u64) -> f64 {
    let stream = SeedStream::new(seed);
    let exceed = (0..permutations)
        .into_par_iter()
        .filter(|&b| {
            let mut rng = stream.child(b as u64);
            let mut shuffled = labels.to_vec();
            shuffled.shuffle(&mut rng);
            optimal_threshold(values, &shuffled).2 >= observed
        })
        .count();
    (1 + exceed) as f64 / (permutations + 1) as f64
}

#[cfg(test)]
mod tests {
    use super::super::test_support::classifier;
    use super::*;

    #[test]
    fn perfect_separation_is_significant() {
        let values: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let labels: Vec<f64> = (0..20).map(|i| if i < 10 { -1.0 } else { 1.0 }).collect();
        let c = LocalClassifier {
            threshold: 9.5,
            ..classifier(1, 1, 1.0)
        };
        let p = permutation_test(&c, &values, &labels, 999, 3).unwrap();
        assert!(p <= 0.005, "p = {p}");
        assert!(p >= 1.0 / 1000.0);
    }

    #[test]
    fn too_few_permutations() {
        let c = classifier(1, 1, 1.0);
        assert!(matches!(
            permutation_test(&c, &[1.0, 2.0], &[1.0, -1.0], 0, 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let values: Vec<f64> = (0..30).map(|i| ((i * 7) % 11) as f64).collect();
        let labels: Vec<f64> = (0..30).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let c = classifier(1, 1, 1.0);
        let a = permutation_test(&c, &values, &labels, 200, 9).unwrap();
        let b = permutation_test(&c, &values, &labels, 200, 9).unwrap();
        assert_eq!(a, b);
    }
}
