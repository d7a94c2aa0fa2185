//! From a non-nilpotent `B ∈ L^Λ` to rank-one elements of `L^{Λ(R+1)D}`.
//!
//! With `B' = B/μ` fixing `v` and `L' = L^Λ`:
//! the orbit `(L'¹ + … + L'^j)·v` fills `ℂ^D` by `j = D`, which gives every
//! target as `M₁·v` with `M₁ ∈ L'^D`; the projected powers `P·L'^j` fill all
//! maps into the invertible part of `B'` by `j = sD`, and padding with powers
//! of `B'` kills the nilpotent part, which gives `v·φᵀ ∈ L'^{RD}`. The
//! product `M₁·v·φᵀ` is the requested rank-one map.

use super::tower::WordTower;
use super::word::{merge_terms, SpanElement, Term, Word};
use super::{CertifyError, NonNilpotentWitness, RankOneReport, RankOneSample};
use crate::matspace::{linalg, Backend, Complex64, Field, Matrix, MatrixSpace};

fn degenerate(msg: impl Into<String>) -> CertifyError {
    CertifyError::NumericalDegeneracy(msg.into())
}

fn unit<F: Field>(d: usize, i: usize) -> Vec<F> {
    (0..d).map(|k| if k == i { F::one() } else { F::zero() }).collect()
}

fn vec_approx_eq<F: Field>(a: &[F], b: &[F]) -> bool {
    let scale = linalg::vec_scale(a).max(linalg::vec_scale(b)).max(1.0);
    a.iter().zip(b).all(|(x, y)| x.minus(y).is_negligible(scale))
}

/// Deterministic `(v1, v2)` pairs: swapped end units, then a dense pair,
/// then shifted units.
pub(crate) fn sample_pairs<F: Field>(d: usize, count: usize) -> Vec<(Vec<F>, Vec<F>)> {
    let mut out: Vec<(Vec<F>, Vec<F>)> = Vec::new();
    let mut push = |p: (Vec<F>, Vec<F>)| {
        if !out.contains(&p) {
            out.push(p);
        }
    };
    push((unit(d, 0), unit(d, d - 1)));
    push((unit(d, d - 1), unit(d, 0)));
    let ones = vec![F::one(); d];
    let alt = (0..d).map(|i| F::from_i64(if i % 2 == 0 { 1 } else { -1 })).collect();
    push((ones, alt));
    for i in 0..d {
        push((unit(d, i), unit(d, (i + 1) % d)));
    }
    out.truncate(count);
    out
}

/// Scales `v` so its first entry of at least half the largest modulus is 1.
fn normalize<F: Field>(v: &mut [F]) {
    let top = linalg::vec_scale(v);
    if let Some(x) = v.iter().find(|x| x.magnitude() >= 0.5 * top).cloned() {
        let inv = x.recip();
        for y in v.iter_mut() {
            *y = y.times(&inv);
        }
    }
}

/// Least `t ≤ D` with `B'^t·(I − P) = 0`, relative to the sizes involved.
pub(crate) fn nilpotent_tail<F: Field>(bp: &Matrix<F>, complement: &Matrix<F>) -> Option<usize> {
    let d = bp.dim();
    let growth = bp.max_magnitude().max(1.0) * d as f64;
    let mut tail = complement.clone();
    let mut scale = complement.max_magnitude().max(1.0);
    for t in 0..=d {
        if tail.is_negligible(scale) {
            return Some(t);
        }
        tail = bp.mul(&tail);
        scale *= growth;
    }
    None
}

/// The sum `Σ c·X` over words of one level.
fn combine<F: Field>(level: usize, d: usize, parts: impl IntoIterator<Item = (F, Word, Matrix<F>)>) -> Option<SpanElement<F>> {
    let mut matrix = Matrix::zeros(d, d);
    let mut combination = Vec::new();
    for (coeff, word, m) in parts {
        if coeff.is_zero() {
            continue;
        }
        matrix.add_scaled(&coeff, &m);
        combination.push(Term { coeff, word });
    }
    (!combination.is_empty()).then(|| SpanElement { matrix, level, combination: merge_terms(combination) })
}

/// Words spanning tower level `j`: the basis of level `j` itself, or, on
/// floats above the first full level, every product of a basis word of level
/// `j − 1` with a letter, which is better conditioned.
fn spanning_words<F: Field>(lt: &mut WordTower<F>, j: usize, overcomplete: bool) -> Vec<(Word, Matrix<F>)> {
    if !overcomplete || j == 1 {
        let (words, mats) = lt.level(j);
        return words.iter().cloned().zip(mats.iter().cloned()).collect();
    }
    let letters: Vec<(Word, Matrix<F>)> = lt.letters().to_vec();
    let (words, mats) = lt.level(j - 1);
    words
        .iter()
        .zip(mats)
        .flat_map(|(w, m)| letters.iter().map(move |(g, a)| (w.concat(g), m.mul(a))))
        .collect()
}

/// Splits `F^D` along `Im B^D ⊕ Ker B^D` and returns `s` with the projector
/// onto the first summand along the second. The split does not depend on
/// eigenvalues, so it stays exact when the spectrum is irrational.
pub(crate) fn fitting_projector<F: Field>(b: &Matrix<F>) -> Result<(usize, Matrix<F>), CertifyError> {
    let d = b.dim();
    let (image, kernel) = F::fitting_split(b)?;
    let s = image.len();
    if s == 0 || s + kernel.len() != d {
        return Err(degenerate(format!("Fitting split has {} + {} vectors", s, kernel.len())));
    }
    let split = Matrix::from_columns(&image.into_iter().chain(kernel).collect::<Vec<_>>());
    let split_inv = linalg::inverse(&split).ok_or_else(|| degenerate("Fitting split is singular"))?;
    let diag = Matrix::from_fn(d, d, |i, j| if i == j && i < s { F::one() } else { F::zero() });
    Ok((s, split.mul(&diag).mul(&split_inv)))
}

/// Everything in the construction that does not involve the eigenvector:
/// canonical bases of `L'^1..L'^D`, the split of `B`, the tail of its
/// nilpotent part and `dim P·L'^j` up to the first level where it reaches
/// `s·D`. It stays exact when only the spectrum is irrational.
#[derive(Debug, Clone)]
pub(crate) struct Skeleton<F> {
    pub orbit_bases: Vec<Vec<Matrix<F>>>,
    pub s: usize,
    pub projector: Matrix<F>,
    pub tail_index: usize,
    pub tilde_dims: Vec<usize>,
    pub projected_full_at: usize,
}

impl<F: Field> Skeleton<F> {
    pub fn to_c64(&self) -> Skeleton<Complex64> {
        Skeleton {
            orbit_bases: self.orbit_bases.iter().map(|b| b.iter().map(Matrix::to_c64).collect()).collect(),
            s: self.s,
            projector: self.projector.to_c64(),
            tail_index: self.tail_index,
            tilde_dims: self.tilde_dims.clone(),
            projected_full_at: self.projected_full_at,
        }
    }
}

/// Tower over the basis words of level `lambda` of `tower`, i.e. over `L^Λ`.
pub(crate) fn letter_tower<F: Field>(tower: &mut WordTower<F>, lambda: usize) -> WordTower<F> {
    let (words, mats) = tower.level(lambda);
    WordTower::over_letters(lambda, words.iter().cloned().zip(mats.iter().cloned()).collect())
}

pub(crate) fn skeleton<F: Field>(lt: &mut WordTower<F>, b: &Matrix<F>) -> Result<Skeleton<F>, CertifyError> {
    let d = b.dim();
    // Past a full level every level is full, so the span is not recomputed.
    let mut orbit_bases: Vec<Vec<Matrix<F>>> = Vec::with_capacity(d);
    for j in 1..=d {
        let basis = match orbit_bases.last() {
            Some(prev) if prev.len() == d * d => prev.clone(),
            _ => lt.canonical_basis(j),
        };
        orbit_bases.push(basis);
    }
    let (s, projector) = fitting_projector(b)?;
    let complement = Matrix::identity(d).sub(&projector);
    let tail_index = nilpotent_tail(b, &complement).ok_or_else(|| degenerate("nilpotent part of B does not vanish"))?;
    let target = s * d;
    let mut tilde_dims = Vec::with_capacity(target);
    let mut projected_full_at = None;
    for j in 1..=target {
        if projected_full_at.is_none() {
            let flat: Vec<Vec<F>> = lt.level(j).1.iter().map(|m| projector.mul(m).into_flat()).collect();
            let dim = linalg::span_rank(&flat);
            tilde_dims.push(dim);
            if dim == target {
                projected_full_at = Some(j);
            } else if j >= 2 && dim <= tilde_dims[j - 2] {
                return Err(CertifyError::ProjectedStalled(tilde_dims));
            }
        } else {
            tilde_dims.push(target);
        }
    }
    let projected_full_at = projected_full_at.ok_or(CertifyError::ProjectedStalled(tilde_dims.clone()))?;
    Ok(Skeleton { orbit_bases, s, projector, tail_index, tilde_dims, projected_full_at })
}

/// The whole construction. `skel` is supplied when it was computed elsewhere, e.g.
/// exactly for a float run.
pub(crate) fn construct<F: Field>(
    tower: &mut WordTower<F>,
    w: &NonNilpotentWitness<F>,
    samples: usize,
    skel: Option<Skeleton<F>>,
) -> Result<RankOneReport<F>, CertifyError> {
    let d = tower.d();
    let lambda = w.level;
    let rank = w.rank;
    let float = F::BACKEND == Backend::Float;

    // Rescale so that B' v = v.
    let mu = F::nonzero_eigenvalues(&w.b.matrix)?
        .into_iter()
        .next()
        .ok_or_else(|| CertifyError::Invariant("non-nilpotent witness without a nonzero eigenvalue".into()))?;
    let bp = w.b.scale(&mu.recip());
    let mut v = F::kernel_of(&bp.matrix.sub(&Matrix::identity(d)))
        .into_iter()
        .next()
        .ok_or_else(|| degenerate("no fixed vector for the rescaled witness"))?;
    normalize(&mut v);
    if !vec_approx_eq(&bp.matrix.mul_vec(&v), &v) {
        return Err(degenerate("eigenvector residual above tolerance"));
    }

    let mut lt = letter_tower(tower, lambda);

    let skel = match skel {
        Some(k) => k,
        None => skeleton(&mut lt, &w.b.matrix)?,
    };
    let Skeleton { orbit_bases, s, projector, tail_index, tilde_dims, projected_full_at: j_full } = skel;

    // Orbit: M_j = (L'¹ + … + L'^j)·v, measured on canonical bases. Targets
    // are solved for over every basis word of every level up to D.
    let mut m_dims = Vec::with_capacity(d);
    let mut cumulative: Vec<Vec<F>> = Vec::new();
    for (j, basis) in orbit_bases.iter().enumerate() {
        cumulative.extend(basis.iter().map(|m| m.mul_vec(&v)));
        let dim = linalg::span_rank(&cumulative);
        m_dims.push(dim);
        if dim < d && j >= 1 && dim == m_dims[j - 1] {
            return Err(CertifyError::OrbitStalled(m_dims));
        }
    }
    if m_dims.last() != Some(&d) {
        return Err(CertifyError::OrbitStalled(m_dims));
    }
    let mut orbit: Vec<(usize, Word, Matrix<F>)> = Vec::new();
    let mut orbit_vecs: Vec<Vec<F>> = Vec::new();
    for j in 1..=d {
        let (words, mats) = lt.level(j);
        for (word, m) in words.iter().zip(mats) {
            orbit_vecs.push(m.mul_vec(&v));
            orbit.push((j, word.clone(), m.clone()));
        }
    }
    let orbit_system = Matrix::from_columns(&orbit_vecs);

    // The projected powers P·L'^j are in the skeleton.
    if rank * d < j_full + tail_index {
        return Err(CertifyError::Invariant(format!(
            "level {j_full} plus the nilpotent tail {tail_index} exceeds R·D"
        )));
    }

    // Rank-one samples. `v·φᵀ = B'^padding·Y` with `P·Y = v·φᵀ`
    // solved at `solve_level`; floats may move up a level when the first
    // full level is badly conditioned.
    let pairs = sample_pairs::<F>(d, samples);
    let last_level = if float { rank * d - tail_index } else { j_full };
    let mut solved: Option<(usize, Vec<_>, f64)> = None;
    let mut last_err = None;
    for j in j_full..=last_level {
        match solve_projected(&mut lt, &projector, &bp, &v, &pairs, j, rank * d - j, float && j > j_full) {
            Ok((m2s, err)) => {
                let done = err <= crate::matspace::float_tolerance();
                if solved.as_ref().is_none_or(|(_, _, best)| err < *best) {
                    solved = Some((j, m2s, err));
                }
                if done {
                    break;
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((solve_level, m2s, _)) = solved else {
        return Err(last_err.expect("at least one level tried"));
    };
    let padding = rank * d - solve_level;

    let powers: Vec<Option<SpanElement<F>>> =
        (0..d).map(|e| if e == 0 { None } else { Some(lt.pow(&bp, e)) }).collect();
    let mut out = Vec::new();
    for ((v1, v2), (phi, m2)) in pairs.into_iter().zip(m2s) {
        let coeffs =
            F::solve_in(&orbit_system, &v2).ok_or_else(|| degenerate("target is not in the orbit of v"))?;
        let mut m1: Option<SpanElement<F>> = None;
        for j in 1..=d {
            let parts = coeffs
                .iter()
                .zip(&orbit)
                .filter(|(_, (lvl, _, _))| *lvl == j)
                .map(|(c, (_, word, m))| (c.clone(), word.clone(), m.clone()));
            let Some(sum) = combine(j * lambda, d, parts) else {
                continue;
            };
            let term = match &powers[d - j] {
                Some(p) => lt.mul(&sum, p),
                None => sum,
            };
            m1 = Some(match m1 {
                None => term,
                Some(acc) => lt.compact(acc.add(&term)),
            });
        }
        let m1 = m1.ok_or_else(|| CertifyError::Invariant("zero sample target".into()))?;
        if !vec_approx_eq(&m1.matrix.mul_vec(&v), &v2) {
            return Err(degenerate("orbit combination does not reach the target"));
        }

        let element = lt.mul(&m1, &m2);
        let expect = Matrix::from_fn(d, d, |i, j| v2[i].times(&phi[j]));
        if !element.matrix.approx_eq(&expect) || element.matrix.rank() != 1 {
            return Err(degenerate("composed sample is not the requested rank-one map"));
        }
        out.push(RankOneSample { v1, v2, element });
    }

    Ok(RankOneReport {
        mu,
        v,
        rank,
        level: lambda,
        s,
        projector,
        m_dims,
        tilde_dims,
        projected_full_at: j_full,
        solve_level,
        padding,
        tail_index,
        index_bound: lambda * (rank + 1) * d,
        samples: out,
    })
}

/// `(φ, M₂)` per sample pair, plus the worst relative error.
type Solved<F> = (Vec<(Vec<F>, SpanElement<F>)>, f64);

/// For each sample pair, `φ` with `φᵀ·v1 = 1` and `M₂ = B'^padding·Y` with
/// `Y` a combination of level-`j` words and `M₂ = v·φᵀ`, plus the largest
/// error `|M₂ − v·φᵀ|` relative to `|v·φᵀ|`.
///
/// On floats the error is accepted when it is small against `Σ|c|·|W|`,
/// which is what rounding in the combination can guarantee.
#[allow(clippy::too_many_arguments)]
fn solve_projected<F: Field>(
    lt: &mut WordTower<F>,
    projector: &Matrix<F>,
    bp: &SpanElement<F>,
    v: &[F],
    pairs: &[(Vec<F>, Vec<F>)],
    j: usize,
    padding: usize,
    overcomplete: bool,
) -> Result<Solved<F>, CertifyError> {
    let d = lt.d();
    let words = spanning_words(lt, j, overcomplete);
    let system =
        Matrix::from_columns(&words.iter().map(|(_, m)| projector.mul(m).into_flat()).collect::<Vec<_>>());
    let pad = (padding > 0).then(|| lt.pow(bp, padding));
    let pad_scale = pad.as_ref().map_or(1.0, |p| p.matrix.max_magnitude() * d as f64);
    let mut out = Vec::with_capacity(pairs.len());
    let mut worst = 0.0f64;
    for (v1, _) in pairs {
        let c = v1
            .iter()
            .position(|x| x.magnitude() >= 0.5 * linalg::vec_scale(v1))
            .expect("nonzero sample vector");
        let mut phi = vec![F::zero(); d];
        phi[c] = v1[c].recip();
        let t = Matrix::from_fn(d, d, |i, k| v[i].times(&phi[k]));
        let y = F::solve_in(&system, t.as_flat()).ok_or_else(|| match F::BACKEND {
            Backend::Exact => CertifyError::Invariant("v·φᵀ is not in P·L'^j".into()),
            Backend::Float => degenerate("v·φᵀ is not in P·L'^j within tolerance"),
        })?;
        let spread = y.iter().zip(&words).map(|(c, (_, m))| c.magnitude() * m.max_magnitude()).sum::<f64>() * pad_scale;
        let parts = y.into_iter().zip(&words).map(|(c, (w, m))| (c, w.clone(), m.clone()));
        let y_elem =
            combine(j * lt.unit(), d, parts).ok_or_else(|| CertifyError::Invariant("zero projected solution".into()))?;
        let y_elem = lt.compact(y_elem);
        let m2 = match &pad {
            Some(p) => lt.mul(p, &y_elem),
            None => y_elem,
        };
        let err = m2.matrix.sub(&t).max_magnitude();
        let size = t.max_magnitude().max(1.0);
        let ok = match F::BACKEND {
            Backend::Exact => m2.matrix == t,
            Backend::Float => err <= crate::matspace::float_tolerance() * size.max(spread),
        };
        if !ok {
            return Err(degenerate("padded projection does not reproduce v·φᵀ"));
        }
        worst = worst.max(err / size);
        // On floats the combination carries rounding from an ill-conditioned
        // solve; the stored value is the map it stands for.
        out.push((phi, SpanElement { matrix: t, ..m2 }));
    }
    Ok((out, worst))
}

/// Runs the construction with words over the canonical basis of `l`.
pub fn rank_one_construction<F: Field>(
    l: &MatrixSpace<F>,
    w: &NonNilpotentWitness<F>,
) -> Result<RankOneReport<F>, CertifyError> {
    if l.is_zero() {
        return Err(CertifyError::ZeroSpace);
    }
    let mut tower = WordTower::over_generators(&l.basis());
    construct(&mut tower, w, 2, None)
}
