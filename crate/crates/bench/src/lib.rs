//! Fixtures shared by the benchmarks.

use thorpe_lab::{realize, CurvatureModel, DoubleForm, Result};

/// Random first-Bianchi curvature on `n` dimensions.
pub fn curvature(n: usize, seed: u64) -> Result<DoubleForm> {
    realize(&CurvatureModel::RandomBianchi { n, terms: 4, seed })
}

/// `R^k` for a random curvature tensor, a generic symmetric `(2k, 2k)` form.
pub fn curvature_power(n: usize, k: usize, seed: u64) -> Result<DoubleForm> {
    curvature(n, seed)?.power(k)
}
