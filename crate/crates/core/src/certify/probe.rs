use std::collections::HashMap;

use super::tower::WordTower;
use super::{CertifyError, ReachabilityProbe, SquareZeroWitness};
use crate::bounds::theorem_bound;
use crate::matspace::{linalg, Echelon, Field, Matrix, MatrixSpace};

/// A basis change putting a square-zero `H` of rank `ρ` into the form
/// `S⁻¹·H·S = [[O, O, I_ρ], [O, O, O], [O, O, O]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockForm<F> {
    pub s: Matrix<F>,
    pub s_inv: Matrix<F>,
    pub rho: usize,
    /// `(O|O|I_ρ)·S⁻¹`
    pub p: Matrix<F>,
    /// `S·(I_ρ|O|O)ᵀ`
    pub q: Matrix<F>,
}

/// Builds `S = [H·u_1 … H·u_ρ | kernel completion | u_1 … u_ρ]`, where the
/// `u_i` are the unit vectors of the pivot columns of `H` (greedy in column
/// order) and the middle block completes `Im H` to `Ker H`.
pub fn block_form<F: Field>(h: &Matrix<F>) -> Result<BlockForm<F>, CertifyError> {
    let d = h.dim();
    let mut cols = Echelon::new(d);
    let mut pivots = Vec::new();
    for c in 0..d {
        if cols.insert(&h.col(c)) {
            pivots.push(c);
        }
    }
    let rho = pivots.len();
    if rho == 0 {
        return Err(CertifyError::Invariant("square-zero witness has rank 0".into()));
    }
    let image: Vec<Vec<F>> = pivots.iter().map(|&c| h.col(c)).collect();
    let mut completion = Echelon::new(d);
    for v in &image {
        completion.insert(v);
    }
    let mut middle = Vec::new();
    for v in F::kernel_of(h) {
        if completion.insert(&v) {
            middle.push(v);
        }
    }
    if rho + middle.len() + rho != d {
        return Err(CertifyError::NumericalDegeneracy(format!(
            "kernel completion has {} vectors, expected {}",
            middle.len(),
            d.saturating_sub(2 * rho)
        )));
    }
    let units: Vec<Vec<F>> = pivots
        .iter()
        .map(|&c| (0..d).map(|i| if i == c { F::one() } else { F::zero() }).collect())
        .collect();
    let columns: Vec<Vec<F>> = image.into_iter().chain(middle).chain(units).collect();
    let s = Matrix::from_columns(&columns);
    let s_inv = linalg::inverse(&s)
        .ok_or_else(|| CertifyError::NumericalDegeneracy("block-form basis change is singular".into()))?;
    let p = s_inv.submatrix(d - rho..d, 0..d);
    let q = s.submatrix(0..d, 0..rho);
    Ok(BlockForm { s, s_inv, rho, p, q })
}

/// `p·x·q`, with float residue below the product scale snapped to zero.
pub(crate) fn block_of<F: Field>(form: &BlockForm<F>, x: &Matrix<F>) -> Matrix<F> {
    let b = form.p.mul(x).mul(&form.q);
    let scale = form.p.max_magnitude() * x.max_magnitude() * form.q.max_magnitude() * x.rows() as f64;
    if b.is_negligible(scale) {
        Matrix::zeros(b.rows(), b.cols())
    } else {
        b
    }
}

/// Scans tower levels `1..=limit` for the first basis word with a nonzero
/// block. Levels are compared against earlier levels of the same dimension
/// so that periodic (imprimitive) spaces stop early.
pub(crate) fn probe_in<F: Field>(
    tower: &mut WordTower<F>,
    form: &BlockForm<F>,
    limit: usize,
) -> Result<ReachabilityProbe<F>, CertifyError> {
    let d = tower.d();
    let mut by_dim: HashMap<usize, Vec<usize>> = HashMap::new();
    for k in 1..=limit {
        let found = {
            let (words, mats) = tower.level(k);
            if words.is_empty() {
                return Err(CertifyError::ProbeExhausted { scanned: k, repeat: None });
            }
            words.iter().zip(mats).find_map(|(w, m)| {
                let b = block_of(form, m);
                (!b.is_zero()).then(|| (w.clone(), b))
            })
        };
        if let Some((word, block)) = found {
            let block_rank = block.rank();
            if block_rank * k > d {
                return Err(CertifyError::ProbeRankBound { k, rank: block_rank, d });
            }
            return Ok(ReachabilityProbe {
                basis_change: form.s.clone(),
                p: form.p.clone(),
                q: form.q.clone(),
                k,
                word,
                block,
                block_rank,
            });
        }
        let dim = tower.dim(k);
        let earlier = by_dim.entry(dim).or_default().clone();
        for a in earlier {
            if tower.same_span(a, k) {
                return Err(CertifyError::ProbeExhausted { scanned: k, repeat: Some((a, k)) });
            }
        }
        by_dim.entry(dim).or_default().push(k);
    }
    Err(CertifyError::ProbeExhausted { scanned: limit, repeat: None })
}

/// The probe for `w`, with words over the canonical basis of `l`.
pub fn reachability_probe<F: Field>(
    l: &MatrixSpace<F>,
    w: &SquareZeroWitness<F>,
) -> Result<ReachabilityProbe<F>, CertifyError> {
    if l.is_zero() {
        return Err(CertifyError::ZeroSpace);
    }
    let form = block_form(&w.h.matrix)?;
    let mut tower = WordTower::over_generators(&l.basis());
    probe_in(&mut tower, &form, theorem_bound(l.d()) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{SpanElement, Word};
    use crate::matspace::{Complex64, GaussRational as Q};

    fn e(d: usize, i: usize, j: usize) -> Matrix<Q> {
        Matrix::unit(d, i - 1, j - 1)
    }

    fn witness(h: Matrix<Q>, l: &MatrixSpace<Q>) -> SquareZeroWitness<Q> {
        // Only the matrix matters to the probe.
        let idx = l.basis().iter().position(|b| *b == h).unwrap_or(0);
        SquareZeroWitness { h: SpanElement::from_word(Word::letter(idx), h), rho: 1, lambda: 1 }
    }

    #[test]
    fn block_form_shape() {
        let h = Matrix::<Q>::from_i64_rows([[0, 0, 1, 2], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]])
            .add(&e(4, 2, 4));
        assert!(h.mul(&h).is_zero());
        let f = block_form(&h).unwrap();
        assert_eq!(f.rho, 2);
        let t = f.s_inv.mul(&h).mul(&f.s);
        let expect = Matrix::from_fn(4, 4, |i, j| if j >= 2 && i == j - 2 { Q::one() } else { Q::zero() });
        assert_eq!(t, expect);
        assert_eq!(f.p.rows(), 2);
        assert_eq!(f.q.cols(), 2);
    }

    #[test]
    fn block_form_float() {
        let h = Matrix::<Q>::from_i64_rows([[1, -1, 0], [1, -1, 0], [2, -2, 0]]).to_c64();
        assert!(h.mul(&h).max_magnitude() < 1e-12);
        let f = block_form(&h).unwrap();
        let t = f.s_inv.mul(&h).mul(&f.s);
        let expect = Matrix::<Complex64>::unit(3, 0, 2);
        assert!(t.approx_eq(&expect));
    }

    #[test]
    fn probe_examples() {
        for gens in [vec![e(2, 1, 1), e(2, 1, 2), e(2, 2, 1)], vec![e(2, 1, 2), e(2, 2, 1)]] {
            let l = MatrixSpace::canonical_basis(&gens).unwrap();
            let p = reachability_probe(&l, &witness(e(2, 1, 2), &l)).unwrap();
            assert_eq!(p.k, 1);
            assert_eq!(p.word.eval(&l.basis()).unwrap(), e(2, 2, 1));
            assert_eq!(p.block, Matrix::from_i64_rows([[1]]));
        }
        let full = MatrixSpace::<Q>::full(3);
        let p = reachability_probe(&full, &witness(e(3, 1, 2), &full)).unwrap();
        assert_eq!(p.k, 1);
    }

    #[test]
    fn probe_exhausts_on_invariant_subspace() {
        // Upper triangular 2x2 with H = E12: the block entry (2,1) never appears.
        let l = MatrixSpace::canonical_basis(&[e(2, 1, 1), e(2, 1, 2), e(2, 2, 2)]).unwrap();
        let err = reachability_probe(&l, &witness(e(2, 1, 2), &l)).unwrap_err();
        assert!(matches!(err, CertifyError::ProbeExhausted { repeat: Some(_), .. }), "{err:?}");
    }
}
