//! Index sets, colexicographic basis enumeration and shuffle signs.
//!
//! An index set is a strictly increasing subset of `{1..n}` stored as a bitmask
//! (element `i` is bit `i - 1`). For a fixed size, increasing mask value is
//! exactly colexicographic order, which is the basis order used everywhere.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::mutation::{self, Mutation};

/// Hard limit imposed by the 64-bit mask representation.
pub const MAX_DIMENSION: usize = 64;
pub const DEFAULT_DIMENSION_CAP: usize = 16;
pub const DIMENSION_CAP_ENV: &str = "THORPE_LAB_NCAP";

static CAP: AtomicUsize = AtomicUsize::new(0);

/// Largest ambient dimension accepted by constructors.
///
/// Defaults to 16; `THORPE_LAB_NCAP` or [`set_dimension_cap`] override it.
pub fn dimension_cap() -> usize {
    let cap = CAP.load(Ordering::Relaxed);
    if cap != 0 {
        return cap;
    }
    let from_env = std::env::var(DIMENSION_CAP_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&c| c > 0)
        .unwrap_or(DEFAULT_DIMENSION_CAP)
        .min(MAX_DIMENSION);
    CAP.store(from_env, Ordering::Relaxed);
    from_env
}

pub fn set_dimension_cap(cap: usize) {
    CAP.store(cap.clamp(1, MAX_DIMENSION), Ordering::Relaxed);
}

pub(crate) fn check_dimension(n: usize) -> Result<()> {
    let cap = dimension_cap();
    if n > cap {
        Err(Error::DimensionCap { n, cap })
    } else {
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IndexSet(u64);

impl IndexSet {
    pub const EMPTY: IndexSet = IndexSet(0);

    /// Builds a set from strictly increasing 1-based elements.
    pub fn new(elements: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        let mut prev = 0usize;
        for &e in elements {
            if e == 0 || e > MAX_DIMENSION {
                return Err(Error::DegreeOutOfRange(format!("index {e} outside 1..={MAX_DIMENSION}")));
            }
            if e <= prev {
                return Err(Error::IncompatibleOperands(format!(
                    "index set {elements:?} is not strictly increasing"
                )));
            }
            prev = e;
            mask |= 1u64 << (e - 1);
        }
        Ok(IndexSet(mask))
    }

    pub fn from_mask(mask: u64) -> Self {
        IndexSet(mask)
    }

    /// The full set `{1..n}`.
    pub fn full(n: usize) -> Self {
        IndexSet(full_mask(n))
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn elements(self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut m = self.0;
        while m != 0 {
            out.push(m.trailing_zeros() as usize + 1);
            m &= m - 1;
        }
        out
    }

    pub fn contains(self, i: usize) -> bool {
        (1..=MAX_DIMENSION).contains(&i) && self.0 & (1u64 << (i - 1)) != 0
    }

    pub fn is_disjoint(self, other: IndexSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn union(self, other: IndexSet) -> IndexSet {
        IndexSet(self.0 | other.0)
    }

    pub fn complement(self, n: usize) -> IndexSet {
        IndexSet(full_mask(n) & !self.0)
    }

    /// True when every element lies in `{1..n}`.
    pub fn fits(self, n: usize) -> bool {
        self.0 & !full_mask(n) == 0
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.elements())
    }
}

impl Serialize for IndexSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.elements().serialize(s)
    }
}

impl<'de> Deserialize<'de> for IndexSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        IndexSet::new(&v).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn pascal() -> &'static [[u64; MAX_DIMENSION + 1]; MAX_DIMENSION + 1] {
    static TABLE: OnceLock<Box<[[u64; MAX_DIMENSION + 1]; MAX_DIMENSION + 1]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Box::new([[0u64; MAX_DIMENSION + 1]; MAX_DIMENSION + 1]);
        for n in 0..=MAX_DIMENSION {
            t[n][0] = 1;
            for k in 1..=n {
                t[n][k] = t[n - 1][k - 1].saturating_add(if k < n { t[n - 1][k] } else { 0 });
            }
        }
        t
    })
}

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n || n > MAX_DIMENSION {
        0
    } else {
        pascal()[n][k] as usize
    }
}

/// All `p`-subsets of `{1..n}` in colexicographic order.
pub fn enumerate_basis(n: usize, p: usize) -> Result<Vec<IndexSet>> {
    check_dimension(n)?;
    if p > n {
        return Err(Error::DegreeOutOfRange(format!("p = {p} exceeds n = {n}")));
    }
    Ok(basis_masks(n, p).iter().map(|&m| IndexSet(m)).collect())
}

/// Position of `set` in the colex basis of `|set|`-subsets of `{1..n}`.
pub fn rank(set: IndexSet, n: usize) -> Result<usize> {
    if !set.fits(n) {
        return Err(Error::DegreeOutOfRange(format!("{set:?} is not a subset of 1..={n}")));
    }
    Ok(colex_rank(set.0))
}

/// Inverse of [`rank`].
pub fn unrank(r: usize, n: usize, p: usize) -> Result<IndexSet> {
    if p > n || n > MAX_DIMENSION {
        return Err(Error::DegreeOutOfRange(format!("p = {p} exceeds n = {n}")));
    }
    let total = binomial(n, p);
    if r >= total {
        return Err(Error::DegreeOutOfRange(format!("rank {r} out of 0..{total}")));
    }
    let mut rem = r;
    let mut mask = 0u64;
    let mut top = n;
    for j in (1..=p).rev() {
        // largest a with C(a, j) <= rem
        let mut a = j - 1;
        while a + 1 < top && binomial(a + 1, j) <= rem {
            a += 1;
        }
        rem -= binomial(a, j);
        mask |= 1u64 << a;
        top = a;
    }
    Ok(IndexSet(mask))
}

/// Sign of the permutation sorting the concatenation `I ++ J` (disjoint sets).
///
/// `e^I ∧ e^J = merge_sign(I, J) · e^{I∪J}`.
pub fn merge_sign(a: IndexSet, b: IndexSet) -> Result<i32> {
    if !a.is_disjoint(b) {
        return Err(Error::IncompatibleOperands(format!("{a:?} and {b:?} overlap")));
    }
    Ok(sign_of(a.0, b.0) as i32)
}

/// `merge_sign(I, Iᶜ)`, so that `e^I ∧ e^{Iᶜ} = complement_sign(I) · e^{1..n}`.
pub fn complement_sign(set: IndexSet, n: usize) -> Result<i32> {
    if !set.fits(n) {
        return Err(Error::DegreeOutOfRange(format!("{set:?} is not a subset of 1..={n}")));
    }
    Ok(sign_of(set.0, set.complement(n).0) as i32)
}

pub(crate) fn colex_rank(mask: u64) -> usize {
    let t = pascal();
    let mut r = 0u64;
    let mut m = mask;
    let mut j = 1;
    while m != 0 {
        let a = m.trailing_zeros() as usize;
        r += t[a][j];
        j += 1;
        m &= m - 1;
    }
    r as usize
}

pub(crate) fn inversions(a: u64, b: u64) -> u32 {
    let mut count = 0;
    let mut m = b;
    while m != 0 {
        let j = m.trailing_zeros();
        count += if j >= 63 { 0 } else { (a >> (j + 1)).count_ones() };
        m &= m - 1;
    }
    count
}

/// Shuffle sign for disjoint masks, honouring any active test fault.
pub(crate) fn sign_of(a: u64, b: u64) -> f64 {
    let s = if inversions(a, b).is_multiple_of(2) { 1.0 } else { -1.0 };
    match mutation::active() {
        Mutation::MergeSignNegated => -s,
        Mutation::MergeSignParityDropped => 1.0,
        _ => s,
    }
}

type MaskCache = RwLock<HashMap<(usize, usize), Arc<Vec<u64>>>>;

/// Colex-ordered masks of the `p`-subsets of `{1..n}`; empty when `p > n`.
pub(crate) fn basis_masks(n: usize, p: usize) -> Arc<Vec<u64>> {
    static CACHE: OnceLock<MaskCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.read().unwrap().get(&(n, p)) {
        return v.clone();
    }
    let v = Arc::new(generate_masks(n, p));
    cache.write().unwrap().entry((n, p)).or_insert(v).clone()
}

fn generate_masks(n: usize, p: usize) -> Vec<u64> {
    if p > n {
        return Vec::new();
    }
    if p == 0 {
        return vec![0];
    }
    let mut out = Vec::with_capacity(binomial(n, p));
    let mut m: u64 = full_mask(p);
    loop {
        out.push(m);
        if out.len() == binomial(n, p) {
            break;
        }
        // Gosper's hack: next larger integer with the same popcount.
        let c = m & m.wrapping_neg();
        let r = m + c;
        m = (((r ^ m) >> 2) / c) | r;
    }
    out
}

/// One way of splitting a set into an ordered pair of disjoint parts.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Link {
    pub other: u32,
    pub union: u32,
    pub sign: f64,
}

/// Shuffle table for ordered disjoint pairs `(F, S)` with `|F| = pf`, `|S| = ps`.
///
/// `by_first[f]` lists the admissible `S` for `F`, `by_second[s]` the admissible `F`
/// for `S`; `other` is the rank of the partner, `union` the rank of `F ∪ S` and
/// `sign = merge_sign(F, S)` in both views.
pub(crate) struct Pairing {
    pub by_first: Vec<Vec<Link>>,
    pub by_second: Vec<Vec<Link>>,
}

type PairingCache = RwLock<HashMap<(usize, usize, usize), Arc<Pairing>>>;

pub(crate) fn pairing(n: usize, pf: usize, ps: usize) -> Arc<Pairing> {
    static CACHE: OnceLock<PairingCache> = OnceLock::new();
    if mutation::any_active() {
        return Arc::new(build_pairing(n, pf, ps));
    }
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.read().unwrap().get(&(n, pf, ps)) {
        return t.clone();
    }
    let t = Arc::new(build_pairing(n, pf, ps));
    cache.write().unwrap().entry((n, pf, ps)).or_insert(t).clone()
}

fn build_pairing(n: usize, pf: usize, ps: usize) -> Pairing {
    let firsts = basis_masks(n, pf);
    let mut by_first = vec![Vec::new(); firsts.len()];
    let mut by_second = vec![Vec::new(); basis_masks(n, ps).len()];
    if pf + ps > n {
        return Pairing { by_first, by_second };
    }
    let small = basis_masks(n - pf, ps);
    for (fi, &f) in firsts.iter().enumerate() {
        // positions of the complement of F, lowest first
        let free: Vec<u32> = (0..n as u32).filter(|&b| f & (1u64 << b) == 0).collect();
        for &sm in small.iter() {
            let mut s = 0u64;
            let mut m = sm;
            while m != 0 {
                s |= 1u64 << free[m.trailing_zeros() as usize];
                m &= m - 1;
            }
            let si = colex_rank(s);
            let ui = colex_rank(f | s) as u32;
            let sign = sign_of(f, s);
            by_first[fi].push(Link { other: si as u32, union: ui, sign });
            by_second[si].push(Link { other: fi as u32, union: ui, sign });
        }
    }
    Pairing { by_first, by_second }
}
