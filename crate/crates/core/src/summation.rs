//! Cascade summation with a fixed reduction tree.

use num_complex::Complex64;

const BLOCK: usize = 16;

/// Pairwise sum: halves are summed recursively down to blocks of at most
/// 16 terms, which are accumulated left to right. The tree depends only on
/// `terms.len()`, so the result is reproducible bit for bit.
pub fn pairwise_sum(terms: &[Complex64]) -> Complex64 {
    if terms.len() <= BLOCK {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in terms {
            acc += t;
        }
        return acc;
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

/// Real-valued counterpart of [`pairwise_sum`].
pub fn pairwise_sum_f64(terms: &[f64]) -> f64 {
    if terms.len() <= BLOCK {
        return terms.iter().fold(0.0, |a, t| a + t);
    }
    let mid = terms.len() / 2;
    pairwise_sum_f64(&terms[..mid]) + pairwise_sum_f64(&terms[mid..])
}
