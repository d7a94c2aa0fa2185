//! Dimension sequences, the Wielandt index, primitivity, the Paz generating
//! length, and nilpotency of spaces.
//!
//! Primitivity is a single check: a space is primitive exactly when
//! `L^K` is everything for `K = theorem_bound(D)`. The minimal full power
//! is then found by a linear scan, which stops at the first full power
//! because a full power stays full (absorption).

use serde::{Deserialize, Serialize};

pub use crate::bounds::theorem_bound;
use crate::matspace::{Field, MatrixSpace};

/// `dim L^j` and `dim L^{≤j}` for `j = 1..=k_max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimSequence {
    pub d: usize,
    /// `(j, dim L^j)`
    pub dims: Vec<(usize, usize)>,
    /// `(t, dim L^{≤t})`
    pub cumulative_dims: Vec<(usize, usize)>,
    /// Level at which the sequence became constant (full or zero) and the
    /// remaining entries were filled without computing further products.
    pub settled_at: Option<usize>,
}

impl DimSequence {
    pub fn dim_at(&self, j: usize) -> Option<usize> {
        self.dims.iter().find(|&&(k, _)| k == j).map(|&(_, v)| v)
    }

    /// First `j` with `dim L^{j+1} < dim L^j < D²`.
    pub fn first_drop(&self) -> Option<usize> {
        let full = self.d * self.d;
        self.dims
            .windows(2)
            .find(|w| w[1].1 < w[0].1 && w[0].1 < full)
            .map(|w| w[0].0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexReport {
    pub primitive: bool,
    pub wielandt_index: Option<usize>,
    pub theorem_bound: u64,
    pub paz_index: usize,
    pub algebra_dim: usize,
    pub nilpotent: bool,
}

pub fn dim_sequence<F: Field>(l: &MatrixSpace<F>, k_max: usize) -> DimSequence {
    dim_sequence_with_progress(l, k_max, &|_, _| {})
}

/// As [`dim_sequence`], reporting `(j, dim L^j)` after every level.
pub fn dim_sequence_with_progress<F: Field>(
    l: &MatrixSpace<F>,
    k_max: usize,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> DimSequence {
    assert!(k_max >= 1, "k_max must be positive");
    let d = l.d();
    let mut dims = Vec::with_capacity(k_max);
    let mut cumulative_dims = Vec::with_capacity(k_max);
    let mut settled_at = None;
    let mut power = l.clone();
    let mut cum = l.clone();
    for j in 1..=k_max {
        if j > 1 && settled_at.is_none() {
            power = l.product_unchecked(&power);
            cum = cum.sum_unchecked(&power);
        }
        dims.push((j, power.dim()));
        cumulative_dims.push((j, cum.dim()));
        progress(j, power.dim());
        if settled_at.is_none() && (power.is_full() || power.is_zero()) {
            settled_at = Some(j);
        }
    }
    DimSequence { d, dims, cumulative_dims, settled_at }
}

/// `dim L^K = D²` for `K = theorem_bound(D)`, computed by binary
/// composition.
pub fn is_primitive<F: Field>(l: &MatrixSpace<F>) -> bool {
    if l.is_zero() {
        return false;
    }
    l.power(theorem_bound(l.d()) as usize).is_full()
}

/// The least `j` with `dim L^j = D²`, or `None` for imprimitive spaces.
pub fn wielandt_index<F: Field>(l: &MatrixSpace<F>) -> Option<usize> {
    if !is_primitive(l) {
        return None;
    }
    scan_to_full(l, theorem_bound(l.d()) as usize)
}

/// Incremental scan for the first full power up to `limit`.
pub fn scan_to_full<F: Field>(l: &MatrixSpace<F>, limit: usize) -> Option<usize> {
    let mut power = l.clone();
    for j in 1..=limit {
        if j > 1 {
            power = power.product_unchecked(l);
        }
        if power.is_full() {
            return Some(j);
        }
        if power.is_zero() {
            return None;
        }
    }
    None
}

/// Least `t` with `L^{≤t} = L^{≤t+1}`, together with the dimension of the
/// stable sum (the span of all positive-length words).
pub fn paz_index<F: Field>(l: &MatrixSpace<F>) -> (usize, usize) {
    let mut power = l.clone();
    let mut cum = l.clone();
    let mut t = 1;
    loop {
        power = power.product_unchecked(l);
        let next = cum.sum_unchecked(&power);
        if next.dim() == cum.dim() {
            return (t, cum.dim());
        }
        cum = next;
        t += 1;
    }
}

/// `L^D = 0`, which holds iff some power of `L` vanishes.
pub fn is_nilpotent_space<F: Field>(l: &MatrixSpace<F>) -> bool {
    l.power(l.d()).is_zero()
}

pub fn index_report<F: Field>(l: &MatrixSpace<F>) -> IndexReport {
    let primitive = is_primitive(l);
    let bound = theorem_bound(l.d());
    let wielandt_index = if primitive { scan_to_full(l, bound as usize) } else { None };
    let (paz, algebra_dim) = paz_index(l);
    IndexReport {
        primitive,
        wielandt_index,
        theorem_bound: bound,
        paz_index: paz,
        algebra_dim,
        nilpotent: is_nilpotent_space(l),
    }
}
