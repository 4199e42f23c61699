//! Dense double forms and their algebra.
//!
//! A `(p, q)` double form on an `n`-dimensional Euclidean space is stored as a
//! row-major `C(n,p) × C(n,q)` grid: rows are `p`-sets, columns are `q`-sets,
//! both in colex order. Read as an operator, the grid maps `Λ^q → Λ^p`, and
//! [`DoubleForm::compose`] is the matrix product of grids.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{self, binomial, check_dimension, colex_rank, full_mask, sign_of, IndexSet};
use crate::error::{Error, Result};
use crate::mutation::{self, Mutation};

/// Entrywise comparison tolerance: `|a - b| <= ATOL + RTOL * max(|a|, |b|)`.
pub const ATOL: f64 = 1e-12;
pub const RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDoubleForm", into = "RawDoubleForm")]
pub struct DoubleForm {
    n: usize,
    p: usize,
    q: usize,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDoubleForm {
    n: usize,
    p: usize,
    q: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<RawDoubleForm> for DoubleForm {
    type Error = Error;
    fn try_from(r: RawDoubleForm) -> Result<Self> {
        DoubleForm::from_coeffs(r.n, r.p, r.q, r.coeffs)
    }
}

impl From<DoubleForm> for RawDoubleForm {
    fn from(f: DoubleForm) -> Self {
        RawDoubleForm { n: f.n, p: f.p, q: f.q, coeffs: f.coeffs }
    }
}

impl DoubleForm {
    /// The zero `(p, q)` form. Degrees above `n` give an empty grid.
    pub fn zeros(n: usize, p: usize, q: usize) -> Result<Self> {
        check_dimension(n)?;
        Ok(Self::zeros_unchecked(n, p, q))
    }

    pub(crate) fn zeros_unchecked(n: usize, p: usize, q: usize) -> Self {
        DoubleForm { n, p, q, coeffs: vec![0.0; binomial(n, p) * binomial(n, q)] }
    }

    pub fn from_coeffs(n: usize, p: usize, q: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_dimension(n)?;
        if p > n || q > n {
            return Err(Error::DegreeOutOfRange(format!("({p},{q}) exceeds n = {n}")));
        }
        let expect = binomial(n, p) * binomial(n, q);
        if coeffs.len() != expect {
            return Err(Error::IncompatibleOperands(format!(
                "({p},{q}) form on n = {n} needs {expect} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(DoubleForm { n, p, q, coeffs })
    }

    /// Builds a form coefficient by coefficient from the basis sets.
    pub fn from_fn(n: usize, p: usize, q: usize, mut f: impl FnMut(IndexSet, IndexSet) -> f64) -> Result<Self> {
        let rows = basis::enumerate_basis(n, p)?;
        let cols = basis::enumerate_basis(n, q)?;
        let mut coeffs = Vec::with_capacity(rows.len() * cols.len());
        for &i in &rows {
            for &j in &cols {
                coeffs.push(f(i, j));
            }
        }
        Ok(DoubleForm { n, p, q, coeffs })
    }

    /// A `(1, 1)` form from an `n × n` matrix.
    pub fn from_matrix(n: usize, m: &[Vec<f64>]) -> Result<Self> {
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            return Err(Error::IncompatibleOperands(format!("expected a {n}x{n} matrix")));
        }
        Self::from_coeffs(n, 1, 1, m.iter().flatten().copied().collect())
    }

    /// The `(0, 0)` form with value `x`.
    pub fn scalar(n: usize, x: f64) -> Result<Self> {
        Self::from_coeffs(n, 0, 0, vec![x])
    }

    /// The metric `g` as a `(1, 1)` form.
    pub fn metric(n: usize) -> Result<Self> {
        metric_power(n, 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn degree(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn rows(&self) -> usize {
        binomial(self.n, self.p)
    }

    pub fn cols(&self) -> usize {
        binomial(self.n, self.q)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.coeffs[i * c..(i + 1) * c]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.coeffs[i * self.cols() + j]
    }

    /// Coefficient on `e^I ⊗ e^J`.
    pub fn get(&self, i: IndexSet, j: IndexSet) -> Result<f64> {
        let (r, c) = self.locate(i, j)?;
        Ok(self.coeffs[r * self.cols() + c])
    }

    pub fn set(&mut self, i: IndexSet, j: IndexSet, value: f64) -> Result<()> {
        let (r, c) = self.locate(i, j)?;
        let cols = self.cols();
        self.coeffs[r * cols + c] = value;
        Ok(())
    }

    fn locate(&self, i: IndexSet, j: IndexSet) -> Result<(usize, usize)> {
        if i.len() != self.p || j.len() != self.q || !i.fits(self.n) || !j.fits(self.n) {
            return Err(Error::DegreeOutOfRange(format!(
                "({i:?}, {j:?}) is not a basis pair of a ({},{}) form on n = {}",
                self.p, self.q, self.n
            )));
        }
        Ok((colex_rank(i.mask()), colex_rank(j.mask())))
    }

    /// Multilinear evaluation on basis vectors, e.g. `R(x, y, z, w)` for a `(2, 2)` form.
    ///
    /// Indices are 1-based and may be unsorted; repeated indices give zero.
    pub fn evaluate(&self, left: &[usize], right: &[usize]) -> Result<f64> {
        if left.len() != self.p || right.len() != self.q {
            return Err(Error::DegreeOutOfRange("argument count does not match the degree".into()));
        }
        let (sl, ml) = sort_sign(left, self.n)?;
        let (sr, mr) = sort_sign(right, self.n)?;
        if sl == 0.0 || sr == 0.0 {
            return Ok(0.0);
        }
        Ok(sl * sr * self.coeffs[colex_rank(ml) * self.cols() + colex_rank(mr)])
    }

    /// The value of a `(0, 0)` form.
    pub fn as_scalar(&self) -> Option<f64> {
        (self.p == 0 && self.q == 0).then(|| self.coeffs[0])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&x| x == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|x| *x *= s);
        out
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &DoubleForm) -> Result<()> {
        self.same_shape(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn try_add(&self, other: &DoubleForm) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn try_sub(&self, other: &DoubleForm) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    fn same_shape(&self, other: &DoubleForm) -> Result<()> {
        if self.n != other.n || self.p != other.p || self.q != other.q {
            return Err(Error::IncompatibleOperands(format!(
                "({},{}) on n = {} vs ({},{}) on n = {}",
                self.p, self.q, self.n, other.p, other.q, other.n
            )));
        }
        Ok(())
    }

    fn same_dimension(&self, other: &DoubleForm) -> Result<()> {
        if self.n != other.n {
            return Err(Error::IncompatibleOperands(format!("n = {} vs n = {}", self.n, other.n)));
        }
        Ok(())
    }

    /// Entrywise comparison with the mixed tolerance `atol + rtol * max(|a|, |b|)`.
    pub fn approx_eq(&self, other: &DoubleForm, atol: f64, rtol: f64) -> bool {
        self.same_shape(other).is_ok()
            && self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .all(|(a, b)| (a - b).abs() <= atol + rtol * a.abs().max(b.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.p != self.q {
            return false;
        }
        let m = self.rows();
        let scale = self.max_abs().max(1.0);
        (0..m).all(|i| (0..i).all(|j| (self.entry(i, j) - self.entry(j, i)).abs() <= tol * scale))
    }

    /// `(ω + ωᵗ) / 2` for a `(p, p)` form.
    pub fn symmetrized(&self) -> Result<Self> {
        let t = self.transpose();
        let mut out = self.try_add(&t)?;
        out.coeffs.iter_mut().for_each(|x| *x *= 0.5);
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let (r, c) = (self.rows(), self.cols());
        let mut coeffs = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                coeffs[j * r + i] = self.coeffs[i * c + j];
            }
        }
        DoubleForm { n: self.n, p: self.q, q: self.p, coeffs }
    }

    /// Exterior product in both factors.
    ///
    /// Degrees beyond `n` give the zero form of the summed degree (empty grid).
    pub fn wedge(&self, other: &DoubleForm) -> Result<Self> {
        self.same_dimension(other)?;
        let n = self.n;
        let (p, q) = (self.p + other.p, self.q + other.q);
        let mut out = Self::zeros_unchecked(n, p, q);
        if p > n || q > n {
            return Ok(out);
        }
        let rows = basis::pairing(n, self.p, other.p);
        let cols = basis::pairing(n, self.q, other.q);
        let splits = union_splits(&rows, n, p);
        let out_cols = out.cols();
        let a_cols = self.cols();
        let b_nonzero: Vec<bool> = (0..other.rows()).map(|i| other.row(i).iter().any(|&x| x != 0.0)).collect();
        let work = |(u, out_row): (usize, &mut [f64])| {
            for &(i, i2, si) in &splits[u] {
                if !b_nonzero[i2] {
                    continue;
                }
                let a_row = &self.coeffs[i * a_cols..(i + 1) * a_cols];
                let b_row = other.row(i2);
                for (j, &a) in a_row.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    let sa = si * a;
                    for l in &cols.by_first[j] {
                        out_row[l.union as usize] += sa * l.sign * b_row[l.other as usize];
                    }
                }
            }
        };
        if out.coeffs.len() >= PARALLEL_THRESHOLD && !mutation::any_active() {
            out.coeffs.par_chunks_mut(out_cols).enumerate().for_each(work);
        } else {
            out.coeffs.chunks_mut(out_cols).enumerate().for_each(work);
        }
        Ok(out)
    }

    /// Sum of coefficient products; zero for forms of different degree.
    pub fn inner(&self, other: &DoubleForm) -> Result<f64> {
        self.same_dimension(other)?;
        if self.degree() != other.degree() {
            return Ok(0.0);
        }
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    /// Interior product `ι_self α`, the adjoint of `β ↦ self · β`.
    pub fn interior(&self, alpha: &DoubleForm) -> Result<Self> {
        self.same_dimension(alpha)?;
        if self.p > alpha.p || self.q > alpha.q {
            return Err(Error::DegreeOutOfRange(format!(
                "cannot take the interior product of a ({},{}) form by a ({},{}) form",
                alpha.p, alpha.q, self.p, self.q
            )));
        }
        let n = self.n;
        let (p, q) = (alpha.p - self.p, alpha.q - self.q);
        let mut out = Self::zeros_unchecked(n, p, q);
        let rows = basis::pairing(n, self.p, p);
        let cols = basis::pairing(n, self.q, q);
        let w_cols = self.cols();
        let alpha_cols = alpha.cols();
        let out_cols = out.cols();
        let work = |(k, out_row): (usize, &mut [f64])| {
            for l in &rows.by_second[k] {
                let i = l.other as usize;
                let w_row = &self.coeffs[i * w_cols..(i + 1) * w_cols];
                let a_row = &alpha.coeffs[l.union as usize * alpha_cols..(l.union as usize + 1) * alpha_cols];
                for (j, &w) in w_row.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let sw = l.sign * w;
                    for m in &cols.by_first[j] {
                        out_row[m.other as usize] += sw * m.sign * a_row[m.union as usize];
                    }
                }
            }
        };
        if alpha.coeffs.len() >= PARALLEL_THRESHOLD && out_cols > 0 && !mutation::any_active() {
            out.coeffs.par_chunks_mut(out_cols).enumerate().for_each(work);
        } else if out_cols > 0 {
            out.coeffs.chunks_mut(out_cols).enumerate().for_each(work);
        }
        Ok(out)
    }

    /// Contraction `c = ι_g`, lowering both degrees by one.
    pub fn contract(&self) -> Result<Self> {
        if self.p == 0 || self.q == 0 {
            return Err(Error::DegreeOutOfRange(format!("cannot contract a ({},{}) form", self.p, self.q)));
        }
        metric_power(self.n, 1)?.interior(self)
    }

    /// `c^k`, with `c^0` the identity.
    pub fn contract_times(&self, k: usize) -> Result<Self> {
        let mut out = self.clone();
        for _ in 0..k {
            out = out.contract()?;
        }
        Ok(out)
    }

    /// `c^k ω / k!`.
    pub fn contract_normalized(&self, k: usize) -> Result<Self> {
        Ok(self.contract_times(k)?.scaled(1.0 / factorial(k)))
    }

    /// Factorwise Hodge star `(p, q) → (n-p, n-q)`.
    pub fn hodge_star(&self) -> Result<Self> {
        let n = self.n;
        if self.p > n || self.q > n {
            return Err(Error::DegreeOutOfRange(format!("({},{}) exceeds n = {n}", self.p, self.q)));
        }
        let mut out = Self::zeros_unchecked(n, n - self.p, n - self.q);
        let rows = basis::basis_masks(n, self.p);
        let cols = basis::basis_masks(n, self.q);
        let full = full_mask(n);
        let col_map: Vec<(usize, f64)> =
            cols.iter().map(|&j| (colex_rank(full & !j), sign_of(j, full & !j))).collect();
        let out_cols = out.cols();
        for (ri, &i) in rows.iter().enumerate() {
            let (oi, si) = (colex_rank(full & !i), sign_of(i, full & !i));
            for (cj, &(oj, sj)) in col_map.iter().enumerate() {
                out.coeffs[oi * out_cols + oj] = si * sj * self.coeffs[ri * self.cols() + cj];
            }
        }
        Ok(out)
    }

    /// Operator composition: `(p, m) ∘ (m, q) → (p, q)`, the product of grids.
    pub fn compose(&self, other: &DoubleForm) -> Result<Self> {
        self.same_dimension(other)?;
        if self.q != other.p {
            return Err(Error::IncompatibleOperands(format!(
                "cannot compose ({},{}) with ({},{})",
                self.p, self.q, other.p, other.q
            )));
        }
        let (a, b) = if mutation::active() == Mutation::ComposeSwapped && self.p == self.q && other.p == other.q {
            (other, self)
        } else {
            (self, other)
        };
        let ma = DMatrix::from_row_slice(a.rows(), a.cols(), &a.coeffs);
        let mb = DMatrix::from_row_slice(b.rows(), b.cols(), &b.coeffs);
        let prod = ma * mb;
        let mut coeffs = Vec::with_capacity(prod.len());
        for i in 0..prod.nrows() {
            coeffs.extend(prod.row(i).iter());
        }
        Ok(DoubleForm { n: self.n, p: a.p, q: b.q, coeffs })
    }

    /// `self^k` under the exterior product; `k = 0` is the unit.
    pub fn power(&self, k: usize) -> Result<Self> {
        let mut out = Self::scalar(self.n, 1.0)?;
        for _ in 0..k {
            out = out.wedge(self)?;
        }
        Ok(out)
    }
}

const PARALLEL_THRESHOLD: usize = 1 << 14;

/// For each union index `u` of a `p`-set, the splits `(first, second, sign)`.
fn union_splits(t: &basis::Pairing, n: usize, p: usize) -> Vec<Vec<(usize, usize, f64)>> {
    let mut out = vec![Vec::new(); binomial(n, p)];
    for (f, links) in t.by_first.iter().enumerate() {
        for l in links {
            out[l.union as usize].push((f, l.other as usize, l.sign));
        }
    }
    out
}

fn sort_sign(idx: &[usize], n: usize) -> Result<(f64, u64)> {
    let mut mask = 0u64;
    let mut sign = 1.0;
    for (k, &i) in idx.iter().enumerate() {
        if i == 0 || i > n {
            return Err(Error::DegreeOutOfRange(format!("index {i} outside 1..={n}")));
        }
        if mask & (1u64 << (i - 1)) != 0 {
            return Ok((0.0, 0));
        }
        mask |= 1u64 << (i - 1);
        if idx[..k].iter().filter(|&&j| j > i).count() % 2 == 1 {
            sign = -sign;
        }
    }
    Ok((sign, mask))
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// `g^p`: diagonal with entries `p!`, so that `g^p / p!` is the identity of `Λ^p`.
pub fn metric_power(n: usize, p: usize) -> Result<DoubleForm> {
    check_dimension(n)?;
    if p > n {
        return Err(Error::DegreeOutOfRange(format!("g^{p} vanishes for n = {n}")));
    }
    let mut out = DoubleForm::zeros_unchecked(n, p, p);
    let m = out.rows();
    let f = factorial(p);
    for i in 0..m {
        out.coeffs[i * m + i] = f;
    }
    Ok(out)
}

/// `g^p / p!`, the identity of `Λ^p`.
pub fn identity(n: usize, p: usize) -> Result<DoubleForm> {
    Ok(metric_power(n, p)?.scaled(1.0 / factorial(p)))
}

/// `F_h(ω) = D_p ∘ ω + ω ∘ D_q` with `D_k = g^{k-1} h / (k-1)!`.
///
/// This is the first-order response of the induced inner product to a metric
/// change in direction `h`. `h` must be a symmetric `(1, 1)` form.
pub fn f_h(h: &DoubleForm, omega: &DoubleForm) -> Result<DoubleForm> {
    if h.degree() != (1, 1) || !h.is_symmetric(1e-12) {
        return Err(Error::InvalidDirection("h must be a symmetric (1,1) form".into()));
    }
    h.same_dimension(omega)?;
    let left = derivation(h, omega.p)?;
    let right = derivation(h, omega.q)?;
    left.compose(omega)?.try_add(&omega.compose(&right)?)
}

/// `g^{k-1} h / (k-1)!`, the derivation extension of `h` to `Λ^k` (zero for `k = 0`).
pub fn derivation(h: &DoubleForm, k: usize) -> Result<DoubleForm> {
    if k == 0 {
        return DoubleForm::zeros(h.n, 0, 0);
    }
    Ok(metric_power(h.n, k - 1)?.wedge(h)?.scaled(1.0 / factorial(k - 1)))
}

impl Add for &DoubleForm {
    type Output = DoubleForm;
    fn add(self, rhs: &DoubleForm) -> DoubleForm {
        self.try_add(rhs).expect("adding double forms of different shape")
    }
}

impl Sub for &DoubleForm {
    type Output = DoubleForm;
    fn sub(self, rhs: &DoubleForm) -> DoubleForm {
        self.try_sub(rhs).expect("subtracting double forms of different shape")
    }
}

impl Add for DoubleForm {
    type Output = DoubleForm;
    fn add(self, rhs: DoubleForm) -> DoubleForm {
        &self + &rhs
    }
}

impl Sub for DoubleForm {
    type Output = DoubleForm;
    fn sub(self, rhs: DoubleForm) -> DoubleForm {
        &self - &rhs
    }
}

impl AddAssign<&DoubleForm> for DoubleForm {
    fn add_assign(&mut self, rhs: &DoubleForm) {
        self.axpy(1.0, rhs).expect("adding double forms of different shape");
    }
}

impl SubAssign<&DoubleForm> for DoubleForm {
    fn sub_assign(&mut self, rhs: &DoubleForm) {
        self.axpy(-1.0, rhs).expect("subtracting double forms of different shape");
    }
}

impl Neg for &DoubleForm {
    type Output = DoubleForm;
    fn neg(self) -> DoubleForm {
        self.scaled(-1.0)
    }
}

impl Neg for DoubleForm {
    type Output = DoubleForm;
    fn neg(self) -> DoubleForm {
        self.scaled(-1.0)
    }
}

impl Mul<&DoubleForm> for f64 {
    type Output = DoubleForm;
    fn mul(self, rhs: &DoubleForm) -> DoubleForm {
        rhs.scaled(self)
    }
}

impl Mul<DoubleForm> for f64 {
    type Output = DoubleForm;
    fn mul(self, rhs: DoubleForm) -> DoubleForm {
        rhs.scaled(self)
    }
}
