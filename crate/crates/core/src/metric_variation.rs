//! Inner products induced by a non-standard metric `G`, and a finite-difference
//! check of their first variation against `F_h`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::basis::{basis_masks, binomial};
use crate::double_form::{f_h, DoubleForm};
use crate::error::{Error, Result};

/// Symmetric positive-definite metric given as a dense `n × n` matrix.
#[derive(Debug, Clone)]
pub struct Metric {
    g: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl Metric {
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::IncompatibleOperands("metric must be square".into()));
        }
        let scale = g.amax().max(1.0);
        if (&g - g.transpose()).amax() > 1e-12 * scale {
            return Err(Error::NotPositiveDefinite);
        }
        let chol = g.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        let inverse = chol.inverse();
        Ok(Metric { g, inverse })
    }

    pub fn euclidean(n: usize) -> Self {
        let id = DMatrix::identity(n, n);
        Metric { g: id.clone(), inverse: id }
    }

    /// `I + t h` for a symmetric `(1, 1)` form `h`.
    pub fn perturbed(h: &DoubleForm, t: f64) -> Result<Self> {
        let n = h.n();
        Metric::new(DMatrix::identity(n, n) + DMatrix::from_row_slice(n, n, h.coeffs()) * t)
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// Gram matrix of the `e^I` under the induced metric: `det((G⁻¹)_{I×K})`.
    pub fn compound_inverse(&self, p: usize) -> DMatrix<f64> {
        let n = self.dim();
        let sets = basis_masks(n, p);
        let idx: Vec<Vec<usize>> = sets
            .iter()
            .map(|&m| (0..n).filter(|&b| m & (1u64 << b) != 0).collect())
            .collect();
        let size = binomial(n, p);
        let mut out = DMatrix::zeros(size, size);
        for a in 0..size {
            for b in a..size {
                let sub = DMatrix::from_fn(p, p, |r, c| self.inverse[(idx[a][r], idx[b][c])]);
                let d = if p == 0 { 1.0 } else { sub.determinant() };
                out[(a, b)] = d;
                out[(b, a)] = d;
            }
        }
        out
    }
}

/// `⟨α, β⟩_G` for `p`-forms given by their coefficients in the `e^I` basis.
pub fn induced_inner_p_forms(metric: &Metric, p: usize, alpha: &[f64], beta: &[f64]) -> Result<f64> {
    let size = binomial(metric.dim(), p);
    if alpha.len() != size || beta.len() != size {
        return Err(Error::IncompatibleOperands(format!("{p}-forms on n = {} have {size} coefficients", metric.dim())));
    }
    let m = metric.compound_inverse(p);
    let a = DMatrix::from_column_slice(size, 1, alpha);
    let b = DMatrix::from_column_slice(size, 1, beta);
    Ok((a.transpose() * m * b)[(0, 0)])
}

/// Bilinear extension of the product of the two factor inner products.
pub fn induced_inner_double(metric: &Metric, w1: &DoubleForm, w2: &DoubleForm) -> Result<f64> {
    if w1.n() != metric.dim() || w2.n() != metric.dim() || w1.degree() != w2.degree() {
        return Err(Error::IncompatibleOperands("forms must share dimension and degree with the metric".into()));
    }
    let (p, q) = w1.degree();
    let mp = metric.compound_inverse(p);
    let mq = if p == q { mp.clone() } else { metric.compound_inverse(q) };
    let a = DMatrix::from_row_slice(w1.rows(), w1.cols(), w1.coeffs());
    let b = DMatrix::from_row_slice(w2.rows(), w2.cols(), w2.coeffs());
    let t = mp * b * mq;
    Ok(a.dot(&t))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VariationCheck {
    pub finite_difference: f64,
    pub analytic: f64,
    /// `|finite_difference - analytic|`.
    pub residual: f64,
}

/// Compares the centered difference of `t ↦ ⟨ω1, ω2⟩_{I + t h}` with `-⟨F_h(ω1), ω2⟩`.
pub fn check_variation_lemma(w1: &DoubleForm, w2: &DoubleForm, h: &DoubleForm, step: f64) -> Result<VariationCheck> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidStep(format!("step must be positive and finite, got {step}")));
    }
    if h.degree() != (1, 1) || !h.is_symmetric(1e-12) {
        return Err(Error::InvalidDirection("h must be a symmetric (1,1) form".into()));
    }
    if w1.n() != h.n() || w2.n() != h.n() || w1.degree() != w2.degree() {
        return Err(Error::IncompatibleOperands("ω1, ω2 and h must share dimension; ω1, ω2 must share degree".into()));
    }
    let lost = |_| Error::InvalidStep(format!("I ± {step}·h is not positive definite"));
    let plus = Metric::perturbed(h, step).map_err(lost)?;
    let minus = Metric::perturbed(h, -step).map_err(lost)?;
    let fd = (induced_inner_double(&plus, w1, w2)? - induced_inner_double(&minus, w1, w2)?) / (2.0 * step);
    let analytic = -f_h(h, w1)?.inner(w2)?;
    Ok(VariationCheck { finite_difference: fd, analytic, residual: (fd - analytic).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::double_form::metric_power;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, p: usize, q: usize, rng: &mut ChaCha8Rng) -> DoubleForm {
        let len = binomial(n, p) * binomial(n, q);
        DoubleForm::from_coeffs(n, p, q, (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn euclidean_metric_gives_plain_inner_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(5, 2, 3, &mut rng);
        let b = random(5, 2, 3, &mut rng);
        let e = Metric::euclidean(5);
        assert!((induced_inner_double(&e, &a, &b).unwrap() - a.inner(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn scaled_metric_scales_p_forms() {
        // G = λ I gives ⟨e^I, e^I⟩ = λ^{-p}
        let n = 4;
        let m = Metric::new(DMatrix::identity(n, n) * 2.0).unwrap();
        let mut e = vec![0.0; 6];
        e[2] = 1.0;
        assert!((induced_inner_p_forms(&m, 2, &e, &e).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn metric_direction_example() {
        // ω1 = ω2 = g: derivative is -2⟨h, g⟩ = -2 tr h
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random(4, 1, 1, &mut rng).symmetrized().unwrap();
        let g = metric_power(4, 1).unwrap();
        let check = check_variation_lemma(&g, &g, &h, 1e-4).unwrap();
        let trace: f64 = (0..4).map(|i| h.entry(i, i)).sum();
        assert!((check.analytic + 2.0 * trace).abs() < 1e-13);
        assert!(check.residual < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = random(3, 1, 1, &mut rng);
        let h = random(3, 1, 1, &mut rng);
        assert!(matches!(check_variation_lemma(&w, &w, &h, 1e-3), Err(Error::InvalidDirection(_))));
        let h = h.symmetrized().unwrap();
        assert!(matches!(check_variation_lemma(&w, &w, &h, 0.0), Err(Error::InvalidStep(_))));
        assert!(matches!(check_variation_lemma(&w, &w, &h, 100.0), Err(Error::InvalidStep(_))));
        let neg = DMatrix::from_diagonal_element(3, 3, -1.0);
        assert!(matches!(Metric::new(neg), Err(Error::NotPositiveDefinite)));
    }
}
