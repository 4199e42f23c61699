//! Curvature tensors as symmetric `(2, 2)` double forms.
//!
//! Normalization: constant sectional curvature `c` is `R = (c/2) g²`, so a
//! coordinate 2-plane has `R(e_ij, e_ij) = c`.
//!
//! Random models draw entries uniformly from `[-1, 1]` with `ChaCha8Rng`
//! (rand_chacha 0.9) seeded through `SeedableRng::seed_from_u64`. Entries of
//! each symmetric `(1, 1)` term are drawn row by row over the upper triangle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{basis_masks, check_dimension, colex_rank, IndexSet};
use crate::double_form::{metric_power, DoubleForm};
use crate::error::{Error, Result};

/// Symmetry and first-Bianchi tolerance applied to explicit tensors.
pub const VALIDATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CurvatureModel {
    ConstantCurvature { n: usize, c: f64 },
    Product { factors: Vec<CurvatureModel> },
    ConformallyFlat { n: usize, schouten: Vec<Vec<f64>> },
    Hypersurface { n: usize, shape: Vec<Vec<f64>> },
    RandomBianchi { n: usize, terms: usize, seed: u64 },
    Explicit { form: DoubleForm },
}

impl CurvatureModel {
    pub fn dimension(&self) -> usize {
        match self {
            CurvatureModel::ConstantCurvature { n, .. }
            | CurvatureModel::ConformallyFlat { n, .. }
            | CurvatureModel::Hypersurface { n, .. }
            | CurvatureModel::RandomBianchi { n, .. } => *n,
            CurvatureModel::Product { factors } => factors.iter().map(CurvatureModel::dimension).sum(),
            CurvatureModel::Explicit { form } => form.n(),
        }
    }

    /// `S^r(c) × H^r(-c)`.
    pub fn sphere_times_hyperbolic(r: usize, c: f64) -> Self {
        CurvatureModel::Product {
            factors: vec![
                CurvatureModel::ConstantCurvature { n: r, c },
                CurvatureModel::ConstantCurvature { n: r, c: -c },
            ],
        }
    }
}

pub fn realize(model: &CurvatureModel) -> Result<DoubleForm> {
    check_dimension(model.dimension())?;
    match model {
        CurvatureModel::ConstantCurvature { n, c } => {
            require_finite(&[*c])?;
            Ok(metric_power(*n, 2)?.scaled(c / 2.0))
        }
        CurvatureModel::Product { factors } => {
            if factors.is_empty() {
                return Err(Error::InvalidCurvature("product needs at least one factor".into()));
            }
            let total = model.dimension();
            let mut out = DoubleForm::zeros(total, 2, 2)?;
            let mut offset = 0;
            for f in factors {
                let r = realize(f)?;
                out += &embed(&r, offset, total)?;
                offset += r.n();
            }
            Ok(out)
        }
        CurvatureModel::ConformallyFlat { n, schouten } => {
            let a = symmetric_11(*n, schouten, "schouten")?;
            metric_power(*n, 1)?.wedge(&a)
        }
        CurvatureModel::Hypersurface { n, shape } => {
            let b = symmetric_11(*n, shape, "shape")?;
            Ok(b.wedge(&b)?.scaled(0.5))
        }
        CurvatureModel::RandomBianchi { n, terms, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut out = DoubleForm::zeros(*n, 2, 2)?;
            for _ in 0..*terms {
                let b = random_symmetric_11(*n, &mut rng)?;
                out.axpy(0.5, &b.wedge(&b)?)?;
            }
            Ok(out)
        }
        CurvatureModel::Explicit { form } => {
            validate_curvature(form)?;
            Ok(form.clone())
        }
    }
}

/// Rejects anything that is not a symmetric first-Bianchi `(2, 2)` form.
pub fn validate_curvature(r: &DoubleForm) -> Result<()> {
    if r.degree() != (2, 2) {
        return Err(Error::InvalidCurvature(format!("expected a (2,2) form, got {:?}", r.degree())));
    }
    require_finite(r.coeffs())?;
    if !r.is_symmetric(VALIDATION_TOL) {
        return Err(Error::InvalidCurvature("tensor is not symmetric".into()));
    }
    let b = first_bianchi_residual(r)?;
    if b > VALIDATION_TOL {
        return Err(Error::InvalidCurvature(format!("first Bianchi residual {b:.3e}")));
    }
    Ok(())
}

fn require_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidCurvature("non-finite entry".into()))
    }
}

fn symmetric_11(n: usize, m: &[Vec<f64>], what: &str) -> Result<DoubleForm> {
    let f = DoubleForm::from_matrix(n, m).map_err(|e| Error::InvalidCurvature(format!("{what}: {e}")))?;
    require_finite(f.coeffs())?;
    if !f.is_symmetric(VALIDATION_TOL) {
        return Err(Error::InvalidCurvature(format!("{what} matrix is not symmetric")));
    }
    Ok(f)
}

/// Symmetric `(1, 1)` form with upper-triangle entries uniform in `[-1, 1]`.
pub fn random_symmetric_11(n: usize, rng: &mut impl Rng) -> Result<DoubleForm> {
    DoubleForm::from_matrix(n, &random_matrix(n, rng))
}

// Index loops keep the documented upper-triangle draw order visible.
#[allow(clippy::needless_range_loop)]
fn random_matrix(n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..=1.0);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

/// Named curvature models used to cross-check the classifier: space forms,
/// `S^r × H^r`, products of spheres, conformally flat and hypersurface tensors
/// with seeded data, and random first-Bianchi tensors.
pub fn corpus() -> Vec<(String, CurvatureModel)> {
    use CurvatureModel::*;
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7407);
    for n in 4..=8 {
        for c in [1.0, -1.0, 0.5] {
            out.push((format!("space_form_n{n}_c{c}"), ConstantCurvature { n, c }));
        }
    }
    out.push(("flat_n6".into(), ConstantCurvature { n: 6, c: 0.0 }));
    for r in 2..=6 {
        for c in [1.0, 2.0] {
            out.push((format!("sphere_x_hyperbolic_r{r}_c{c}"), CurvatureModel::sphere_times_hyperbolic(r, c)));
        }
    }
    for (a, b) in [(2, 2), (2, 3), (3, 3), (2, 4), (3, 5), (4, 4)] {
        let factors = vec![ConstantCurvature { n: a, c: 1.0 }, ConstantCurvature { n: b, c: 1.0 }];
        out.push((format!("sphere{a}_x_sphere{b}"), Product { factors }));
    }
    for n in 4..=8 {
        for i in 0..2 {
            out.push((format!("conformally_flat_n{n}_{i}"), ConformallyFlat { n, schouten: random_matrix(n, &mut rng) }));
            out.push((format!("hypersurface_n{n}_{i}"), Hypersurface { n, shape: random_matrix(n, &mut rng) }));
        }
        for seed in 0..3 {
            out.push((format!("random_bianchi_n{n}_s{seed}"), RandomBianchi { n, terms: 4, seed }));
        }
    }
    out
}

/// Copies a form on `{1..m}` onto the indices `offset+1 ..= offset+m` of `{1..n}`.
pub fn embed(form: &DoubleForm, offset: usize, n: usize) -> Result<DoubleForm> {
    if offset + form.n() > n {
        return Err(Error::IncompatibleOperands(format!(
            "cannot place an n = {} form at offset {offset} inside n = {n}",
            form.n()
        )));
    }
    let mut out = DoubleForm::zeros(n, form.p(), form.q())?;
    let rows = basis_masks(form.n(), form.p());
    let cols = basis_masks(form.n(), form.q());
    for (i, &ri) in rows.iter().enumerate() {
        for (j, &cj) in cols.iter().enumerate() {
            let v = form.entry(i, j);
            if v != 0.0 {
                out.set(IndexSet::from_mask(ri << offset), IndexSet::from_mask(cj << offset), v)?;
            }
        }
    }
    Ok(out)
}

/// Max cyclic sum `|R(x,y,z,w) + R(y,z,x,w) + R(z,x,y,w)|` over indices, divided by `‖R‖`.
pub fn first_bianchi_residual(r: &DoubleForm) -> Result<f64> {
    if r.degree() != (2, 2) {
        return Err(Error::DegreeOutOfRange(format!("expected a (2,2) form, got {:?}", r.degree())));
    }
    let norm = r.norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let n = r.n();
    let at = |a: usize, b: usize, c: usize, d: usize| -> f64 {
        // entries with a repeated index in one slot vanish by antisymmetry
        let (i, si) = pair(a, b);
        let (j, sj) = pair(c, d);
        if si == 0.0 || sj == 0.0 {
            0.0
        } else {
            si * sj * r.entry(i, j)
        }
    };
    let mut worst: f64 = 0.0;
    // terms with two equal entries among x, y, z cancel identically
    for x in 0..n {
        for y in x + 1..n {
            for z in y + 1..n {
                for w in 0..n {
                    let s = at(x, y, z, w) + at(y, z, x, w) + at(z, x, y, w);
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    Ok(worst / norm)
}

fn pair(a: usize, b: usize) -> (usize, f64) {
    if a == b {
        (0, 0.0)
    } else if a < b {
        (colex_rank((1u64 << a) | (1u64 << b)), 1.0)
    } else {
        (colex_rank((1u64 << a) | (1u64 << b)), -1.0)
    }
}

/// `Ric = c R`.
pub fn ricci(r: &DoubleForm) -> Result<DoubleForm> {
    r.contract()
}

/// `Scal = c² R`.
pub fn scalar_curvature(r: &DoubleForm) -> Result<f64> {
    Ok(r.contract_times(2)?.as_scalar().unwrap_or(0.0))
}

/// Diagonal coefficient `R^k(e_I, e_I)` for a coordinate `2k`-plane `I`.
pub fn sectional_curvature(r: &DoubleForm, plane: IndexSet) -> Result<f64> {
    let size = plane.len();
    if size == 0 || size % 2 == 1 || !plane.fits(r.n()) {
        return Err(Error::DegreeOutOfRange(format!("{plane:?} is not an even-dimensional coordinate plane")));
    }
    r.power(size / 2)?.get(plane, plane)
}
