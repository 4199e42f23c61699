//! Gauss–Bonnet curvatures, Lovelock tensors, and the Einstein and Thorpe
//! conditions on the powers `R^k` of a curvature tensor.
//!
//! Every predicate is a relative-residual test against one tolerance. Where
//! several equivalent criteria exist they are all evaluated; a pair that lands
//! clearly on opposite sides of the tolerance is reported as an internal
//! inconsistency instead of being resolved silently.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{decompose, solve_metric_multiple, split_top};
use crate::double_form::{factorial, metric_power, DoubleForm};
use crate::error::{Error, Result};
use crate::mutation;

pub const DEFAULT_TOL: f64 = 1e-8;

/// Two criteria disagree only if one is below `tol` and the other above `GREY * tol`.
const GREY: f64 = 1e3;

fn require_curvature(r: &DoubleForm) -> Result<()> {
    if r.degree() != (2, 2) {
        return Err(Error::InvalidCurvature(format!("expected a (2,2) form, got {:?}", r.degree())));
    }
    Ok(())
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

fn clearly_disagree(a: f64, b: f64, tol: f64) -> bool {
    (a <= tol && b > GREY * tol) || (b <= tol && a > GREY * tol)
}

fn trace_free_11(x: &DoubleForm) -> Result<DoubleForm> {
    let tr = x.contract()?.as_scalar().unwrap_or(0.0);
    let mut out = x.clone();
    out.axpy(-tr / x.n() as f64, &metric_power(x.n(), 1)?)?;
    Ok(out)
}

/// `R^k`, the `k`-fold exterior power.
pub fn thorpe_power(r: &DoubleForm, k: usize) -> Result<DoubleForm> {
    require_curvature(r)?;
    if k == 0 || 2 * k > r.n() {
        return Err(Error::DegreeOutOfRange(format!("R^{k} needs 1 ≤ 2k ≤ n = {}", r.n())));
    }
    r.power(k)
}

fn gb_from_power(rk: &DoubleForm, k: usize) -> Result<f64> {
    Ok(rk.contract_times(2 * k)?.as_scalar().unwrap_or(0.0) / factorial(2 * k))
}

/// `h_{2k} = c^{2k} R^k / (2k)!`, with `h_0 = 1`.
pub fn gauss_bonnet(r: &DoubleForm, k: usize) -> Result<f64> {
    require_curvature(r)?;
    if k == 0 {
        return Ok(1.0);
    }
    gb_from_power(&thorpe_power(r, k)?, k)
}

fn lovelock_from_power(rk: &DoubleForm, k: usize) -> Result<DoubleForm> {
    let h = gb_from_power(rk, k)?;
    let mut t = metric_power(rk.n(), 1)?.scaled(h);
    t.axpy(-1.0 / factorial(2 * k - 1), &rk.contract_times(2 * k - 1)?)?;
    Ok(t)
}

/// `T_{2k} = h_{2k} g − c^{2k−1} R^k / (2k−1)!`, with `T_0 = g`.
pub fn lovelock(r: &DoubleForm, k: usize) -> Result<DoubleForm> {
    require_curvature(r)?;
    if k == 0 {
        return metric_power(r.n(), 1);
    }
    lovelock_from_power(&thorpe_power(r, k)?, k)
}

/// Algebraic gradient of the total `h_{2k}` functional: `½ T_{2k}`.
pub fn grad_h2k(r: &DoubleForm, k: usize) -> Result<DoubleForm> {
    Ok(lovelock(r, k)?.scaled(0.5))
}

fn weak_einstein_lhs(rk: &DoubleForm, k: usize) -> Result<DoubleForm> {
    Ok(rk.compose(rk)?.contract_times(2 * k - 1)?.scaled(1.0 / factorial(2 * k - 1)))
}

/// Algebraic gradient of `‖R^k‖²`, divergence term dropped: `½‖R^k‖² g − c^{2k−1}(R^k∘R^k)/(2k−1)!`.
pub fn grad_g2k(r: &DoubleForm, k: usize) -> Result<DoubleForm> {
    let rk = thorpe_power(r, k)?;
    let mut out = metric_power(r.n(), 1)?.scaled(0.5 * rk.norm_sq());
    out -= &weak_einstein_lhs(&rk, k)?;
    Ok(out)
}

fn require_einstein_regime(r: &DoubleForm, k: usize) -> Result<()> {
    require_curvature(r)?;
    if k == 0 {
        return Err(Error::DegreeOutOfRange("k must be at least 1".into()));
    }
    if 2 * k >= r.n() {
        return Err(Error::VacuousCondition(format!("the {}-Einstein condition needs 2k < n = {}", 2 * k, r.n())));
    }
    Ok(())
}

/// `‖tf T_{2k}‖` measured against `‖R^k‖`.
///
/// The trace-free part of `c^{2k−1} R^k` is `a·ω_1` with `a = (2k−1)!(n−2)!/(n−2k−1)!`,
/// and `‖g^{2k−1} ω_1‖ = √a ‖ω_1‖`, so this equals the share of `g^{2k−1} ω_1` in `R^k`.
fn einstein_residual_from_power(rk: &DoubleForm, k: usize) -> Result<f64> {
    let n = rk.n();
    let tf = trace_free_11(&rk.contract_times(2 * k - 1)?)?;
    let a = factorial(2 * k - 1) * factorial(n - 2) / factorial(n - 2 * k - 1);
    Ok(ratio(tf.norm(), a.sqrt() * rk.norm()))
}

/// Relative residual of `T_{2k} ∝ g`; see [`is_einstein_2k`].
pub fn einstein_residual(r: &DoubleForm, k: usize) -> Result<f64> {
    require_einstein_regime(r, k)?;
    einstein_residual_from_power(&r.power(k)?, k)
}

/// `T_{2k}` proportional to `g`, cross-checked against `ω_1(R^k) = 0`.
pub fn is_einstein_2k(r: &DoubleForm, k: usize, tol: f64) -> Result<bool> {
    require_einstein_regime(r, k)?;
    let rk = r.power(k)?;
    let res = einstein_residual_from_power(&rk, k)?;
    let shares = ComponentShares::new(&rk)?;
    if clearly_disagree(res, shares.share(1), tol) {
        return Err(Error::InternalInconsistency(format!(
            "{}-Einstein residual {res:.3e} but ω_1 share {:.3e}",
            2 * k,
            shares.share(1)
        )));
    }
    Ok(res <= tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperEinstein {
    pub holds: bool,
    /// `λ` in `c R^k = λ g^{2k−1}`.
    pub lambda: f64,
    pub residual: f64,
}

fn hyper_from_power(rk: &DoubleForm, k: usize, tol: f64) -> Result<HyperEinstein> {
    let c = rk.contract()?;
    let g = metric_power(rk.n(), 2 * k - 1)?;
    let lambda = c.inner(&g)? / g.norm_sq();
    let mut diff = c.clone();
    diff.axpy(-lambda, &g)?;
    let residual = ratio(diff.norm(), c.norm());
    Ok(HyperEinstein { holds: residual <= tol, lambda, residual })
}

/// `c R^k = λ g^{2k−1}`, returning the least-squares `λ`.
pub fn is_hyper_einstein_2k(r: &DoubleForm, k: usize, tol: f64) -> Result<HyperEinstein> {
    require_einstein_regime(r, k)?;
    hyper_from_power(&r.power(k)?, k, tol)
}

fn weak_residual_from_power(rk: &DoubleForm, k: usize) -> Result<f64> {
    let n = rk.n();
    let lhs = weak_einstein_lhs(rk, k)?;
    let rhs = metric_power(n, 1)?.scaled(2.0 * k as f64 / n as f64 * rk.norm_sq());
    Ok(ratio(lhs.try_sub(&rhs)?.norm(), lhs.norm().max(rhs.norm())))
}

/// `c^{2k−1}(R^k∘R^k)/(2k−1)! = (2k/n)‖R^k‖² g`.
pub fn is_weakly_einstein_2k(r: &DoubleForm, k: usize, tol: f64) -> Result<bool> {
    let rk = thorpe_power(r, k)?;
    Ok(weak_residual_from_power(&rk, k)? <= tol)
}

/// `‖g^{2k−i} ω_i‖ / ‖R^k‖` for each component of `R^k`; the squares sum to one.
pub(crate) struct ComponentShares {
    norms: Vec<f64>,
    shares: Vec<f64>,
}

impl ComponentShares {
    fn new(rk: &DoubleForm) -> Result<Self> {
        let d = decompose(rk)?;
        let total = rk.norm();
        let shares = (0..d.components().len())
            .map(|i| Ok(ratio(d.summand(i)?.norm(), total)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ComponentShares { norms: d.component_norms(), shares })
    }

    fn share(&self, i: usize) -> f64 {
        self.shares.get(i).copied().unwrap_or(0.0)
    }

    /// Combined share of the components with index parity `parity`.
    fn parity_share(&self, parity: usize) -> f64 {
        self.shares.iter().skip(parity).step_by(2).map(|s| s * s).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThorpeMode {
    /// Even `n > 2k`: the self-duality equation is evaluated alongside the components.
    Star,
    /// Odd `n > 2k`: component vanishing only.
    Components,
    /// `n = 2k`: the Thorpe condition holds trivially.
    Vacuous,
}

/// Residuals of one criterion, for the Thorpe and the anti-Thorpe condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionResiduals {
    pub thorpe: f64,
    pub anti_thorpe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThorpeClass {
    pub thorpe: bool,
    pub anti_thorpe: bool,
    pub mode: ThorpeMode,
    /// `R^k` negligible against `‖R‖^k`; both conditions hold.
    pub degenerate: bool,
    /// Share of the odd (resp. even) components of `R^k`.
    pub components: CriterionResiduals,
    /// `‖⋆X ∓ X‖ / 2‖X‖` for the self-dual form `X`.
    pub star: Option<CriterionResiduals>,
    /// Contraction formulation, when defined for this `(n, k)`.
    pub contraction: Option<CriterionResiduals>,
    /// `‖ω_i‖` for `i = 0..=2k`.
    pub component_norms: Vec<f64>,
}

/// The form whose self-duality defines the condition: `g^{r−2k} R^k` for `n ≥ 4k`, and
/// `g^{2k−r} A` with `R^k = g^{4k−n} A` below that.
fn self_dual_candidate(rk: &DoubleForm, k: usize) -> Result<DoubleForm> {
    let n = rk.n();
    let r = n / 2;
    if n >= 4 * k {
        return metric_power(n, r - 2 * k)?.wedge(rk);
    }
    let a = solve_metric_multiple(rk, 4 * k - n, n - 2 * k)?;
    let back = metric_power(n, 4 * k - n)?.wedge(&a)?;
    let miss = ratio(back.try_sub(rk)?.norm(), rk.norm());
    if miss > 1e-8 {
        return Err(Error::InternalInconsistency(format!("R^{k} is not divisible by g^{} (miss {miss:.3e})", 4 * k - n)));
    }
    metric_power(n, 2 * k - r)?.wedge(&a)
}

fn star_residuals(x: &DoubleForm) -> Result<CriterionResiduals> {
    let s = x.hodge_star()?;
    let den = 2.0 * x.norm();
    Ok(CriterionResiduals {
        thorpe: ratio(s.try_sub(x)?.norm(), den),
        anti_thorpe: ratio(s.try_add(x)?.norm(), den),
    })
}

/// Even `n = 2r ≥ 4k`: the contraction forms of both self-duality equations.
fn even_contraction_residuals(rk: &DoubleForm, k: usize) -> Result<CriterionResiduals> {
    let n = rk.n();
    let r = n / 2;
    let mut thorpe_sum = DoubleForm::zeros(n, 2 * k - 1, 2 * k - 1)?;
    let mut thorpe_scale = 0.0;
    let mut anti_sum = rk.scaled(2.0 / factorial(r - 2 * k));
    let mut anti_scale = anti_sum.norm();
    let mut cs = rk.clone();
    for s in 1..=2 * k {
        cs = cs.contract()?;
        let coef = 1.0 / (factorial(s) * factorial(r - 2 * k + s));
        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
        let t = metric_power(n, s - 1)?.wedge(&cs)?.scaled(sign * coef);
        thorpe_scale += t.norm();
        thorpe_sum += &t;
        let a = metric_power(n, s)?.wedge(&cs)?.scaled(sign * coef);
        anti_scale += a.norm();
        anti_sum += &a;
    }
    Ok(CriterionResiduals {
        thorpe: ratio(thorpe_sum.norm(), thorpe_scale),
        anti_thorpe: ratio(anti_sum.norm(), anti_scale),
    })
}

/// `n ≥ 4k`: `ω_i = 0` exactly when `c^{2k−i} R^k` is a multiple of `g`.
/// Returns the worst relative top-component share over each parity class.
fn per_index_contraction_residuals(rk: &DoubleForm, k: usize) -> Result<CriterionResiduals> {
    let p = 2 * k;
    let mut worst = [0.0f64; 2];
    let mut cj = rk.clone();
    for j in 0..=p {
        let i = p - j;
        let res = if i == 0 {
            ratio(cj.norm(), rk.norm())
        } else {
            ratio(split_top(&cj)?.0.norm(), cj.norm().max(rk.norm()))
        };
        worst[i % 2] = worst[i % 2].max(res);
        if j < p {
            cj = cj.contract()?;
        }
    }
    Ok(CriterionResiduals { thorpe: worst[1], anti_thorpe: worst[0] })
}

fn thorpe_from_power(r: &DoubleForm, rk: &DoubleForm, k: usize, tol: f64) -> Result<(ThorpeClass, ComponentShares)> {
    classify_power(rk, k, r.norm().powi(k as i32), tol)
}

/// Thorpe classification of an arbitrary `(2k, 2k)` form; `scale` sets the degeneracy threshold.
pub(crate) fn classify_power(
    rk: &DoubleForm,
    k: usize,
    scale: f64,
    tol: f64,
) -> Result<(ThorpeClass, ComponentShares)> {
    let n = rk.n();
    let shares = ComponentShares::new(rk)?;
    let degenerate = rk.norm() <= tol * scale;
    let components = CriterionResiduals { thorpe: shares.parity_share(1), anti_thorpe: shares.parity_share(0) };
    let mode = if n == 2 * k {
        ThorpeMode::Vacuous
    } else if n.is_multiple_of(2) {
        ThorpeMode::Star
    } else {
        ThorpeMode::Components
    };
    let star = if mode == ThorpeMode::Star { Some(star_residuals(&self_dual_candidate(rk, k)?)?) } else { None };
    let contraction = if n < 4 * k {
        None
    } else if n.is_multiple_of(2) {
        Some(even_contraction_residuals(rk, k)?)
    } else {
        Some(per_index_contraction_residuals(rk, k)?)
    };
    let (thorpe, anti_thorpe) = match mode {
        _ if degenerate => (true, true),
        ThorpeMode::Vacuous => (true, false),
        _ => (components.thorpe <= tol, components.anti_thorpe <= tol),
    };
    if !degenerate && mode != ThorpeMode::Vacuous {
        for (name, other) in [("star", star), ("contraction", contraction)] {
            let Some(o) = other else { continue };
            if clearly_disagree(components.thorpe, o.thorpe, tol)
                || clearly_disagree(components.anti_thorpe, o.anti_thorpe, tol)
            {
                return Err(Error::InternalInconsistency(format!(
                    "{}-Thorpe: component residuals {components:?} disagree with {name} residuals {o:?}",
                    2 * k
                )));
            }
        }
    }
    let mut component_norms = shares.norms.clone();
    component_norms.resize(2 * k + 1, 0.0);
    let class = ThorpeClass { thorpe, anti_thorpe, mode, degenerate, components, star, contraction, component_norms };
    Ok((class, shares))
}

/// Thorpe and anti-Thorpe classification of `R^k` for `n ≥ 2k`.
pub fn thorpe_class(r: &DoubleForm, k: usize, tol: f64) -> Result<ThorpeClass> {
    let rk = thorpe_power(r, k)?;
    Ok(thorpe_from_power(r, &rk, k, tol)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimality {
    /// `‖R^k‖² + h_{4k}`.
    pub norm_sq_plus_h: f64,
    /// `‖R^k‖² − h_{4k}`.
    pub norm_sq_minus_h: f64,
    /// `½‖R^k + ⋆R^k‖²`.
    pub half_norm_sq_sum: f64,
    /// `½‖R^k − ⋆R^k‖²`.
    pub half_norm_sq_diff: f64,
}

/// The pointwise split of `‖R^k‖²` into self-dual and anti-self-dual parts at `n = 4k`.
pub fn pointwise_minimality(r: &DoubleForm, k: usize) -> Result<Minimality> {
    require_curvature(r)?;
    if k == 0 || r.n() != 4 * k {
        return Err(Error::WrongRegime(format!("needs n = 4k, got n = {}, k = {k}", r.n())));
    }
    let rk = r.power(k)?;
    let h = gauss_bonnet(r, 2 * k)?;
    let s = rk.hodge_star()?;
    let nsq = rk.norm_sq();
    Ok(Minimality {
        norm_sq_plus_h: nsq + h,
        norm_sq_minus_h: nsq - h,
        half_norm_sq_sum: 0.5 * rk.try_add(&s)?.norm_sq(),
        half_norm_sq_diff: 0.5 * rk.try_sub(&s)?.norm_sq(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstruction {
    /// `(n−4k)! h_{4k} = ⋆(g^{n−4k} R^{2k})`.
    pub scaled_h4k: f64,
    /// `‖g^{r−2k} R^k‖²`.
    pub norm_sq: f64,
    /// `+1` for Thorpe, `−1` for anti-Thorpe, `0` when `R^k = 0`.
    pub sign: i32,
    /// `|scaled_h4k − sign·norm_sq|` relative to `norm_sq`.
    pub residual: f64,
}

/// Sign forced on `h_{4k}` by the Thorpe or anti-Thorpe condition (even `n ≥ 4k`).
pub fn obstruction_sign(r: &DoubleForm, k: usize, tol: f64) -> Result<Obstruction> {
    require_curvature(r)?;
    let n = r.n();
    if k == 0 || n % 2 == 1 || n < 4 * k {
        return Err(Error::WrongRegime(format!("needs even n ≥ 4k, got n = {n}, k = {k}")));
    }
    let rk = r.power(k)?;
    let (class, _) = thorpe_from_power(r, &rk, k, tol)?;
    let sign = match (class.thorpe, class.anti_thorpe) {
        (true, true) => 0,
        (true, false) => 1,
        (false, true) => -1,
        (false, false) => {
            return Err(Error::WrongRegime(format!("input is neither {0}-Thorpe nor {0}-anti-Thorpe", 2 * k)));
        }
    };
    let scaled_h4k = factorial(n - 4 * k) * gauss_bonnet(r, 2 * k)?;
    let norm_sq = metric_power(n, n / 2 - 2 * k)?.wedge(&rk)?.norm_sq();
    let residual = if sign == 0 {
        ratio(scaled_h4k.abs(), norm_sq).min(scaled_h4k.abs())
    } else {
        ratio((scaled_h4k - sign as f64 * norm_sq).abs(), norm_sq)
    };
    Ok(Obstruction { scaled_h4k, norm_sq, sign, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfFlatEquivalences {
    pub thorpe4: bool,
    pub einstein4: bool,
    /// `ι_Ric R = (‖Ric‖²/n) g`.
    pub iota_ric: bool,
    /// `A∘A − (cA) A = (‖A‖² − (cA)²)/n · g`.
    pub schouten: bool,
    pub thorpe4_residual: f64,
    pub einstein4_residual: f64,
    pub iota_ric_residual: f64,
    pub schouten_residual: f64,
}

/// Four equivalent 4-Thorpe conditions for the conformally flat tensor `R = g A`, `n = 2r ≥ 8`.
pub fn conf_flat_equivalences(a: &DoubleForm, tol: f64) -> Result<ConfFlatEquivalences> {
    let n = a.n();
    if a.degree() != (1, 1) || !a.is_symmetric(1e-12) {
        return Err(Error::InvalidCurvature("the Schouten tensor must be a symmetric (1,1) form".into()));
    }
    if n < 8 || n % 2 == 1 {
        return Err(Error::WrongRegime(format!("needs even n ≥ 8, got {n}")));
    }
    let g = metric_power(n, 1)?;
    let r = g.wedge(a)?;
    let r2 = r.power(2)?;
    let (class, _) = thorpe_from_power(&r, &r2, 2, tol)?;
    let einstein4_residual = einstein_residual_from_power(&r2, 2)?;

    let ric = r.contract()?;
    let iota = ric.interior(&r)?;
    let ric_sq = ric.norm_sq();
    let iota_ric_residual = ratio(iota.try_sub(&g.scaled(ric_sq / n as f64))?.norm(), r.norm() * ric.norm());

    let ca = a.contract()?.as_scalar().unwrap_or(0.0);
    let mut lhs = a.compose(a)?;
    lhs.axpy(-ca, a)?;
    let rhs = g.scaled((a.norm_sq() - ca * ca) / n as f64);
    let schouten_residual = ratio(lhs.try_sub(&rhs)?.norm(), a.norm_sq() + ca * ca);

    Ok(ConfFlatEquivalences {
        thorpe4: class.thorpe,
        einstein4: class.degenerate || einstein4_residual <= tol,
        iota_ric: iota_ric_residual <= tol,
        schouten: schouten_residual <= tol,
        thorpe4_residual: if class.degenerate { 0.0 } else { class.components.thorpe },
        einstein4_residual: if class.degenerate { 0.0 } else { einstein4_residual },
        iota_ric_residual,
        schouten_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    /// `None` when `2k = n`, where the condition is vacuous.
    pub einstein_2k: Option<bool>,
    pub hyper_einstein_2k: Option<bool>,
    pub weakly_einstein_2k: bool,
    pub thorpe_2k: bool,
    pub anti_thorpe_2k: bool,
    pub vacuous: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖T_{2k}‖`.
    pub lovelock_norm: f64,
    /// `‖T_{2k} − (tr T_{2k}/n) g‖`.
    pub lovelock_trace_free_norm: f64,
    pub einstein_2k: Option<f64>,
    pub hyper_einstein_2k: Option<f64>,
    pub weakly_einstein_2k: f64,
    pub components: CriterionResiduals,
    pub star: Option<CriterionResiduals>,
    pub contraction: Option<CriterionResiduals>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KReport {
    pub k: usize,
    pub h_2k: f64,
    pub flags: Flags,
    pub residuals: Residuals,
    pub mode: ThorpeMode,
    pub component_norms: Vec<f64>,
    /// Hyper-Einstein constant `λ`, when `2k < n`.
    pub lambda: Option<f64>,
    /// `‖R^k‖²`.
    pub norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub n: usize,
    pub reports: Vec<KReport>,
}

fn report_for(r: &DoubleForm, k: usize, tol: f64) -> Result<KReport> {
    let n = r.n();
    let rk = r.power(k)?;
    let (class, shares) = thorpe_from_power(r, &rk, k, tol)?;
    let t = lovelock_from_power(&rk, k)?;
    let (einstein, hyper) = if 2 * k < n {
        let e = einstein_residual_from_power(&rk, k)?;
        if clearly_disagree(e, shares.share(1), tol) {
            return Err(Error::InternalInconsistency(format!(
                "{}-Einstein residual {e:.3e} but ω_1 share {:.3e}",
                2 * k,
                shares.share(1)
            )));
        }
        (Some(e), Some(hyper_from_power(&rk, k, tol)?))
    } else {
        (None, None)
    };
    let weak = weak_residual_from_power(&rk, k)?;
    Ok(KReport {
        k,
        h_2k: gb_from_power(&rk, k)?,
        flags: Flags {
            einstein_2k: einstein.map(|e| e <= tol || class.degenerate),
            hyper_einstein_2k: hyper.map(|h| h.holds),
            weakly_einstein_2k: weak <= tol,
            thorpe_2k: class.thorpe,
            anti_thorpe_2k: class.anti_thorpe,
            vacuous: class.mode == ThorpeMode::Vacuous,
            degenerate: class.degenerate,
        },
        residuals: Residuals {
            lovelock_norm: t.norm(),
            lovelock_trace_free_norm: trace_free_11(&t)?.norm(),
            einstein_2k: einstein,
            hyper_einstein_2k: hyper.map(|h| h.residual),
            weakly_einstein_2k: weak,
            components: class.components,
            star: class.star,
            contraction: class.contraction,
        },
        mode: class.mode,
        component_norms: class.component_norms,
        lambda: hyper.map(|h| h.lambda),
        norm_sq: rk.norm_sq(),
    })
}

/// Reports for every `k` with `2 ≤ 2k ≤ n`.
pub fn classify(r: &DoubleForm, tol: f64) -> Result<ClassificationReport> {
    require_curvature(r)?;
    let ks: Vec<usize> = (1..=r.n() / 2).collect();
    let reports = if mutation::any_active() {
        ks.iter().map(|&k| report_for(r, k, tol)).collect::<Result<Vec<_>>>()?
    } else {
        ks.par_iter().map(|&k| report_for(r, k, tol)).collect::<Result<Vec<_>>>()?
    };
    Ok(ClassificationReport { n: r.n(), reports })
}
