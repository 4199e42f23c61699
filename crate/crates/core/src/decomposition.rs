//! Orthogonal splitting `ω = Σ g^{p-i} ω_i` of a `(p, p)` form into trace-free pieces.
//!
//! The summands are orthogonal and `ω ↦ g·ω` is the adjoint of contraction, so
//! the top trace-free part of `ω` is its component in `ker c`, and the rest is
//! `g·β` with `β` solving the normal equations `c(g β) = c ω`. Recursing on `β`
//! yields every component. The normal operator `c ∘ g·` is self-adjoint and
//! positive definite with at most `p + 1` distinct eigenvalues, so conjugate
//! gradients reach machine precision in a handful of steps without ever forming
//! a matrix. When `n < 2p`, `ω = g^{2p-n} ω̄` for a unique `ω̄` of degree
//! `n - p`, which is solved for first in the same way.

use serde::{Deserialize, Serialize};

use crate::double_form::{metric_power, DoubleForm};
use crate::error::{Error, Result};

/// Relative threshold below which a component counts as zero.
pub const DEFAULT_VANISHING_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    n: usize,
    p: usize,
    components: Vec<DoubleForm>,
}

impl Decomposition {
    pub fn new(n: usize, p: usize, components: Vec<DoubleForm>) -> Result<Self> {
        if components.len() != p.min(n.saturating_sub(p)) + 1 {
            return Err(Error::IncompatibleOperands(format!(
                "a ({p},{p}) form on n = {n} has {} components",
                p.min(n.saturating_sub(p)) + 1
            )));
        }
        for (i, c) in components.iter().enumerate() {
            if c.n() != n || c.degree() != (i, i) {
                return Err(Error::IncompatibleOperands(format!("component {i} must be an ({i},{i}) form on n = {n}")));
            }
        }
        Ok(Decomposition { n, p, components })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `ω_0 … ω_K` with `K = min(p, n - p)`.
    pub fn components(&self) -> &[DoubleForm] {
        &self.components
    }

    /// `ω_i`, or `None` when `i > K` (such components are zero).
    pub fn component(&self, i: usize) -> Option<&DoubleForm> {
        self.components.get(i)
    }

    /// `‖ω_i‖` for `i = 0..=p`, zero past `K`.
    pub fn component_norms(&self) -> Vec<f64> {
        (0..=self.p).map(|i| self.component(i).map_or(0.0, DoubleForm::norm)).collect()
    }

    /// `g^{p-i} ω_i`.
    pub fn summand(&self, i: usize) -> Result<DoubleForm> {
        let c = self
            .component(i)
            .ok_or_else(|| Error::DegreeOutOfRange(format!("component {i} is identically zero")))?;
        metric_power(self.n, self.p - i)?.wedge(c)
    }

    pub fn reconstruct(&self) -> Result<DoubleForm> {
        let mut out = DoubleForm::zeros(self.n, self.p, self.p)?;
        for i in 0..self.components.len() {
            out += &self.summand(i)?;
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct AnnotatedComponent {
    index: usize,
    g_power: usize,
    n: usize,
    p: usize,
    q: usize,
    coeffs: Vec<f64>,
}

impl Serialize for Decomposition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let items: Vec<AnnotatedComponent> = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| AnnotatedComponent {
                index: i,
                g_power: self.p - i,
                n: self.n,
                p: i,
                q: i,
                coeffs: c.coeffs().to_vec(),
            })
            .collect();
        items.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Decomposition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut items = Vec::<AnnotatedComponent>::deserialize(d)?;
        items.sort_by_key(|c| c.index);
        let first = items.first().ok_or_else(|| D::Error::custom("empty decomposition"))?;
        let (n, p) = (first.n, first.index + first.g_power);
        let mut comps = Vec::with_capacity(items.len());
        for (i, c) in items.into_iter().enumerate() {
            if c.index != i || c.index + c.g_power != p || c.p != i || c.q != i {
                return Err(D::Error::custom(format!("inconsistent annotation on component {i}")));
            }
            comps.push(DoubleForm::from_coeffs(c.n, c.p, c.q, c.coeffs).map_err(D::Error::custom)?);
        }
        Decomposition::new(n, p, comps).map_err(D::Error::custom)
    }
}

pub fn decompose(omega: &DoubleForm) -> Result<Decomposition> {
    let (n, p) = (omega.n(), omega.p());
    if omega.q() != p {
        return Err(Error::DegreeOutOfRange(format!("decomposition needs a (p,p) form, got ({p},{})", omega.q())));
    }
    if 2 * p > n {
        let m = n - p;
        let bar = solve_metric_multiple(omega, 2 * p - n, m)?;
        let inner = decompose(&bar)?;
        return Decomposition::new(n, p, inner.components);
    }
    let mut components = vec![DoubleForm::zeros(n, 0, 0)?; p + 1];
    let mut current = omega.clone();
    for level in (1..=p).rev() {
        let (top, beta) = split_top(&current)?;
        components[level] = top;
        current = beta;
    }
    components[0] = current;
    Decomposition::new(n, p, components)
}

pub fn reconstruct(d: &Decomposition) -> Result<DoubleForm> {
    d.reconstruct()
}

/// Serializable summary of [`decompose`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub n: usize,
    pub p: usize,
    /// `ω_i` for `i = 0..=min(p, n−p)`.
    pub components: Vec<DoubleForm>,
    pub component_norms: Vec<f64>,
    /// `‖Σ g^{p−i} ω_i − ω‖ / max(‖ω‖, 1)`.
    pub round_trip_residual: f64,
}

pub fn decomposition_report(omega: &DoubleForm) -> Result<DecompositionReport> {
    let d = decompose(omega)?;
    let round_trip_residual = d.reconstruct()?.try_sub(omega)?.norm() / omega.norm().max(1.0);
    Ok(DecompositionReport {
        n: d.n,
        p: d.p,
        component_norms: d.component_norms(),
        components: d.components,
        round_trip_residual,
    })
}

/// `ω = top + g·β` with `c(top) = 0`, for a `(m, m)` form with `2m ≤ n`, `m ≥ 1`.
pub fn split_top(omega: &DoubleForm) -> Result<(DoubleForm, DoubleForm)> {
    let beta = solve_metric_multiple(omega, 1, omega.p() - 1)?;
    let g = metric_power(omega.n(), 1)?;
    let top = omega.try_sub(&g.wedge(&beta)?)?;
    Ok((top, beta))
}

/// Least-squares `x` of degree `(m, m)` minimizing `‖ω − g^k x‖`, via CG on `c^k g^k x = c^k ω`.
pub(crate) fn solve_metric_multiple(omega: &DoubleForm, k: usize, m: usize) -> Result<DoubleForm> {
    let n = omega.n();
    let gk = metric_power(n, k)?;
    let apply = |x: &DoubleForm| gk.wedge(x)?.contract_times(k);
    let b = omega.contract_times(k)?;
    conjugate_gradient(apply, &b, DoubleForm::zeros(n, m, m)?, 4 * (m + 1) + 20)
}

fn conjugate_gradient(
    apply: impl Fn(&DoubleForm) -> Result<DoubleForm>,
    b: &DoubleForm,
    mut x: DoubleForm,
    max_iter: usize,
) -> Result<DoubleForm> {
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.clone();
    let mut d = r.clone();
    let mut rs = r.norm_sq();
    for _ in 0..max_iter {
        let ad = apply(&d)?;
        let curvature = d.inner(&ad)?;
        if curvature <= 0.0 {
            break;
        }
        let alpha = rs / curvature;
        x.axpy(alpha, &d)?;
        r.axpy(-alpha, &ad)?;
        let rs_new = r.norm_sq();
        if rs_new.sqrt() <= 1e-15 * b_norm {
            return Ok(x);
        }
        let beta = rs_new / rs;
        d = r.try_add(&d.scaled(beta))?;
        rs = rs_new;
    }
    // Recompute the true residual; a stagnated solve that is still accurate is fine.
    let true_res = b.try_sub(&apply(&x)?)?.norm();
    if true_res <= 1e-11 * b_norm {
        Ok(x)
    } else {
        Err(Error::InternalInconsistency(format!(
            "normal equations did not converge (relative residual {:.3e})",
            true_res / b_norm
        )))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VanishingReport {
    /// `‖ω_i‖` for `i = 0..=p`.
    pub norms: Vec<f64>,
    /// `‖ω_i‖ ≤ tol·‖ω‖`.
    pub vanishing: Vec<bool>,
    /// Contraction test `c^{p-i} ω ∈ g·D` (or `c^p ω = 0` for `i = 0`); `None` when `n < 2p`.
    pub contraction_criterion: Vec<Option<bool>>,
    /// Indices where the two tests disagree.
    pub disagreements: Vec<usize>,
    pub degenerate: bool,
}

pub fn component_vanishing_report(omega: &DoubleForm, tol: f64) -> Result<VanishingReport> {
    let (n, p) = (omega.n(), omega.p());
    let d = decompose(omega)?;
    let scale = omega.norm();
    let norms = d.component_norms();
    if scale == 0.0 {
        return Ok(VanishingReport {
            vanishing: vec![true; p + 1],
            contraction_criterion: vec![Some(true); p + 1],
            norms,
            disagreements: vec![],
            degenerate: true,
        });
    }
    let vanishing: Vec<bool> = norms.iter().map(|&x| x <= tol * scale).collect();
    let mut criterion = vec![None; p + 1];
    if 2 * p <= n {
        let mut ck = omega.clone();
        for k in 0..=p {
            let bound = tol * ck.norm().max(scale);
            criterion[p - k] = Some(if k == p {
                ck.norm() <= bound
            } else {
                split_top(&ck)?.0.norm() <= bound
            });
            if k < p {
                ck = ck.contract()?;
            }
        }
    }
    let disagreements = (0..=p).filter(|&i| criterion[i].is_some_and(|c| c != vanishing[i])).collect();
    Ok(VanishingReport { norms, vanishing, contraction_criterion: criterion, disagreements, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::binomial;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, p: usize, seed: u64) -> DoubleForm {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = binomial(n, p);
        let w = DoubleForm::from_coeffs(n, p, p, (0..m * m).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        w.symmetrized().unwrap()
    }

    /// Orthonormal basis of trace-free (i,i) forms, from the null space of the contraction matrix.
    fn trace_free_basis(n: usize, i: usize) -> Vec<DoubleForm> {
        let dim = binomial(n, i).pow(2);
        if i == 0 {
            return vec![DoubleForm::scalar(n, 1.0).unwrap()];
        }
        let out_dim = binomial(n, i - 1).pow(2);
        let mut c = DMatrix::zeros(out_dim, dim);
        for col in 0..dim {
            let mut e = vec![0.0; dim];
            e[col] = 1.0;
            let img = DoubleForm::from_coeffs(n, i, i, e).unwrap().contract().unwrap();
            for (row, v) in img.coeffs().iter().enumerate() {
                c[(row, col)] = *v;
            }
        }
        let svd = (c.transpose() * &c).symmetric_eigen();
        (0..dim)
            .filter(|&k| svd.eigenvalues[k].abs() < 1e-9)
            .map(|k| DoubleForm::from_coeffs(n, i, i, svd.eigenvectors.column(k).iter().copied().collect()).unwrap())
            .collect()
    }

    /// Dense least squares over trace-free coordinates of every summand.
    fn least_squares_oracle(omega: &DoubleForm) -> Vec<DoubleForm> {
        let (n, p) = (omega.n(), omega.p());
        let kmax = p.min(n - p);
        let mut columns = Vec::new();
        let mut owners = Vec::new();
        for i in 0..=kmax {
            let gpow = metric_power(n, p - i).unwrap();
            for b in trace_free_basis(n, i) {
                columns.push(gpow.wedge(&b).unwrap().into_coeffs());
                owners.push((i, b));
            }
        }
        let a = DMatrix::from_fn(omega.coeffs().len(), columns.len(), |r, c| columns[c][r]);
        let rhs = DVector::from_column_slice(omega.coeffs());
        let sol = a.svd(true, true).solve(&rhs, 1e-12).unwrap();
        let mut comps: Vec<DoubleForm> = (0..=kmax).map(|i| DoubleForm::zeros(n, i, i).unwrap()).collect();
        for (k, (i, b)) in owners.iter().enumerate() {
            comps[*i].axpy(sol[k], b).unwrap();
        }
        comps
    }

    #[test]
    fn matches_least_squares_oracle() {
        for (n, p, seed) in [(5, 2, 1), (4, 2, 2), (6, 2, 3), (5, 3, 4), (4, 3, 5)] {
            let w = random_sym(n, p, seed);
            let d = decompose(&w).unwrap();
            let oracle = least_squares_oracle(&w);
            assert_eq!(d.components().len(), oracle.len());
            for (a, b) in d.components().iter().zip(&oracle) {
                assert!(a.approx_eq(b, 1e-10, 1e-9), "n={n} p={p}");
            }
        }
    }

    #[test]
    fn constant_curvature() {
        let c = 0.7;
        let r = metric_power(5, 2).unwrap().scaled(c / 2.0);
        let d = decompose(&r).unwrap();
        assert!(d.component(2).unwrap().norm() < 1e-13);
        assert!(d.component(1).unwrap().norm() < 1e-13);
        assert!((d.component(0).unwrap().as_scalar().unwrap() - c / 2.0).abs() < 1e-13);
        assert!(d.reconstruct().unwrap().approx_eq(&r, 1e-13, 1e-12));
    }

    #[test]
    fn round_trip_orthogonality_trace_free() {
        for (n, p, seed) in [(6, 3, 10), (6, 2, 11), (5, 1, 12), (3, 2, 13), (2, 2, 14), (6, 4, 15)] {
            let w = random_sym(n, p, seed);
            let d = decompose(&w).unwrap();
            assert!(d.reconstruct().unwrap().approx_eq(&w, 1e-12, 1e-10));
            for i in 1..d.components().len() {
                assert!(d.component(i).unwrap().contract().unwrap().norm() < 1e-11);
            }
            for i in 0..d.components().len() {
                for j in 0..i {
                    let ip = d.summand(i).unwrap().inner(&d.summand(j).unwrap()).unwrap();
                    assert!(ip.abs() < 1e-10 * w.norm_sq().max(1.0));
                }
            }
        }
    }

    #[test]
    fn low_dimension_collapse() {
        // n < 2p: ω = g^{2p-n} ω̄ and only ω_0..ω_{n-p} survive
        let (n, p) = (5, 3);
        let w = random_sym(n, p, 20);
        let d = decompose(&w).unwrap();
        assert_eq!(d.components().len(), n - p + 1);
        assert_eq!(d.component_norms()[n - p + 1..], [0.0; 1]);
        let bar = solve_metric_multiple(&w, 2 * p - n, n - p).unwrap();
        let back = metric_power(n, 2 * p - n).unwrap().wedge(&bar).unwrap();
        assert!(back.approx_eq(&w, 1e-12, 1e-10));
    }

    #[test]
    fn non_symmetric_inputs_decompose() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let w = DoubleForm::from_coeffs(5, 2, 2, (0..100).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let d = decompose(&w).unwrap();
        assert!(d.reconstruct().unwrap().approx_eq(&w, 1e-12, 1e-10));
    }

    #[test]
    fn vanishing_report() {
        let zero = DoubleForm::zeros(4, 2, 2).unwrap();
        let rep = component_vanishing_report(&zero, DEFAULT_VANISHING_TOL).unwrap();
        assert!(rep.degenerate && rep.vanishing.iter().all(|&v| v));

        let sphere = metric_power(4, 2).unwrap().scaled(0.5);
        let rep = component_vanishing_report(&sphere, DEFAULT_VANISHING_TOL).unwrap();
        assert_eq!(rep.vanishing, vec![false, true, true]);
        assert!(rep.disagreements.is_empty());

        for seed in 40..45 {
            let rep = component_vanishing_report(&random_sym(6, 3, seed), DEFAULT_VANISHING_TOL).unwrap();
            assert!(rep.vanishing.iter().all(|&v| !v));
            assert!(rep.disagreements.is_empty());
        }
    }

    #[test]
    fn serde_round_trip() {
        let d = decompose(&random_sym(4, 2, 50)).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.starts_with("[{\"index\":0,\"g_power\":2"));
        let back: Decomposition = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }
}
