//! Independent audit of certificates.
//!
//! Nothing cached in a certificate is trusted: every matrix is recomputed
//! from its words over the canonical basis of `L`, ranks and powers are
//! recomputed, dimension sequences are rebuilt from span products, and all
//! logarithmic bounds are compared in exact integer arithmetic.

use super::rank_one::{fitting_projector, nilpotent_tail};
use super::word::{eval_combination, SpanElement, Term};
use super::{
    CertificateChain, ChainStep, NonNilpotentWitness, Outcome, RankOneEvidence, RankOneReport, ReachabilityProbe,
    SquareZeroWitness, StepCase, StepOutput,
};
use crate::bounds::{max_chain_length, nonnilpotent_bound_holds, square_zero_bound_holds, theorem_bound};
use crate::index::is_primitive;
use crate::matspace::{linalg, Backend, Complex64, Field, Matrix, MatrixSpace};

/// Relative tolerance for float certificates.
const FLOAT_CHECK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{reason}")]
pub struct Rejection {
    pub reason: String,
}

fn reject<T>(reason: impl Into<String>) -> Result<T, Rejection> {
    Err(Rejection { reason: reason.into() })
}

fn ensure(cond: bool, reason: &str) -> Result<(), Rejection> {
    if cond {
        Ok(())
    } else {
        reject(reason)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Witness<'a, F> {
    SquareZero(&'a SquareZeroWitness<F>),
    NonNilpotent(&'a NonNilpotentWitness<F>),
}

fn close<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> bool {
    if (a.rows(), a.cols()) != (b.rows(), b.cols()) {
        return false;
    }
    match F::BACKEND {
        Backend::Exact => a == b,
        Backend::Float => {
            let scale = a.max_magnitude().max(b.max_magnitude()).max(1.0);
            a.as_flat().iter().zip(b.as_flat()).all(|(x, y)| x.minus(y).magnitude() <= FLOAT_CHECK * scale)
        }
    }
}

fn vec_close<F: Field>(a: &[F], b: &[F]) -> bool {
    close(&Matrix::column(a), &Matrix::column(b))
}

/// Zero relative to `scale`, which should bound the entries of the exact
/// result.
fn vanishes<F: Field>(m: &Matrix<F>, scale: f64) -> bool {
    match F::BACKEND {
        Backend::Exact => m.is_zero(),
        Backend::Float => m.max_magnitude() <= FLOAT_CHECK * scale.max(1.0),
    }
}

struct Ctx<F> {
    d: usize,
    gens: Vec<Matrix<F>>,
    space: MatrixSpace<F>,
}

impl<F: Field> Ctx<F> {
    fn new(l: &MatrixSpace<F>) -> Self {
        Ctx { d: l.d(), gens: l.basis(), space: l.clone() }
    }

    fn element(&self, e: &SpanElement<F>) -> Result<(), Rejection> {
        ensure(e.level >= 1, "level must be positive")?;
        ensure(!e.combination.is_empty(), "empty combination")?;
        for t in &e.combination {
            ensure(t.word.len() == e.level, "word length differs from level")?;
            ensure(t.word.0.iter().all(|&i| i < self.gens.len()), "word index out of range")?;
        }
        ensure(e.matrix.rows() == self.d && e.matrix.cols() == self.d, "matrix shape")?;
        let value = eval_combination(&e.combination, &self.gens).expect("checked words");
        match F::BACKEND {
            Backend::Exact => ensure(value == e.matrix, "combination mismatch"),
            Backend::Float => {
                // Rounding in Σ c·W scales with Σ |c|·|W|, not with the result.
                let abs: Vec<Term<F>> = e
                    .combination
                    .iter()
                    .map(|t| Term { coeff: F::from_c64(Complex64::new(t.coeff.magnitude(), 0.0)).expect("float"), word: t.word.clone() })
                    .collect();
                let abs_gens: Vec<Matrix<F>> = self.gens.iter().map(|g| g.map(|x| F::from_c64(Complex64::new(x.magnitude(), 0.0)).expect("float"))).collect();
                let spread = eval_combination(&abs, &abs_gens).expect("checked words").max_magnitude();
                let scale = value.max_magnitude().max(e.matrix.max_magnitude()).max(spread).max(1.0);
                ensure(vanishes(&value.sub(&e.matrix), scale), "combination mismatch")
            }
        }
    }

    fn square_zero(&self, w: &SquareZeroWitness<F>) -> Result<(), Rejection> {
        self.element(&w.h)?;
        let h = &w.h.matrix;
        ensure(w.lambda == w.h.level, "level mismatch")?;
        ensure(vanishes(&h.mul(h), h.max_magnitude().powi(2) * self.d as f64), "H² ≠ 0")?;
        ensure(w.rho >= 1 && h.rank() == w.rho, "rank mismatch")?;
        ensure(square_zero_bound_holds(w.lambda, w.rho, self.d), "λρ ≤ D(1 + log₂(D/ρ)) violated")
    }

    fn nonnilpotent(&self, w: &NonNilpotentWitness<F>) -> Result<(), Rejection> {
        self.element(&w.b)?;
        let b = &w.b.matrix;
        ensure(w.level == w.b.level, "level mismatch")?;
        let scale = b.max_magnitude().powi(self.d as i32) * (self.d as f64).powi(self.d as i32);
        ensure(!vanishes(&b.pow(self.d), scale), "B^D = 0")?;
        ensure(w.rank >= 1 && b.rank() == w.rank, "rank mismatch")?;
        ensure(nonnilpotent_bound_holds(w.level, w.rank, self.d), "Λ ≤ (D/R)(3 + log₂(D/R)) violated")
    }

    fn probe(&self, w: &SquareZeroWitness<F>, p: &ReachabilityProbe<F>) -> Result<(), Rejection> {
        let d = self.d;
        let rho = w.rho;
        let s = &p.basis_change;
        ensure(s.rows() == d && s.cols() == d, "basis change shape")?;
        let Some(s_inv) = linalg::inverse(s) else {
            return reject("basis change is singular");
        };
        let form = s_inv.mul(&w.h.matrix).mul(s);
        let expect = Matrix::from_fn(d, d, |i, j| if j >= d - rho && i == j - (d - rho) { F::one() } else { F::zero() });
        ensure(close(&form, &expect), "basis change does not give the block form")?;
        ensure(close(&p.p, &s_inv.submatrix(d - rho..d, 0..d)), "P selector mismatch")?;
        ensure(close(&p.q, &s.submatrix(0..d, 0..rho)), "Q selector mismatch")?;
        ensure(p.k >= 1 && p.word.len() == p.k, "probe word length")?;
        let Some(a) = p.word.eval(&self.gens) else {
            return reject("word index out of range");
        };
        let scale = |x: &Matrix<F>| p.p.max_magnitude() * x.max_magnitude() * p.q.max_magnitude() * d as f64;
        let block = p.p.mul(&a).mul(&p.q);
        ensure(close(&block, &p.block), "block mismatch")?;
        ensure(!vanishes(&block, scale(&a)), "probe block is zero")?;
        ensure(block.rank() == p.block_rank, "block rank mismatch")?;
        ensure(p.block_rank * p.k <= d, "block rank exceeds D/k")?;
        let mut power = self.space.clone();
        for j in 1..p.k {
            if j > 1 {
                power = power.product(&self.space).expect("same dimension");
            }
            for x in power.basis() {
                ensure(vanishes(&p.p.mul(&x).mul(&p.q), scale(&x)), "probe level is not minimal")?;
            }
        }
        Ok(())
    }

    fn step(&self, step: &ChainStep<F>) -> Result<(), Rejection> {
        let d = self.d;
        let w = &step.input;
        self.square_zero(w)?;
        self.probe(w, &step.probe)?;
        let (k, lambda, rho) = (step.probe.k, w.lambda, w.rho);
        let short = k * rho <= 2 * d;
        ensure(short == (step.case.tag() == 1), "case tag does not match k·ρ ≤ 2D")?;
        let a = step.probe.word.eval(&self.gens).expect("checked by probe");
        let h = &w.h.matrix;
        let ha = h.mul(&a);
        let block = &step.probe.block;
        let block_scale = block.max_magnitude().max(1.0);
        match (step.case, &step.output) {
            (StepCase::NonNilpotentBlock, StepOutput::NonNilpotent(out)) => {
                let pow = block.pow(block.rows());
                let s = block_scale.powi(rho as i32) * (rho as f64).powi(rho as i32);
                ensure(!vanishes(&pow, s), "block is nilpotent")?;
                ensure(close(&out.b.matrix, &ha), "output is not H·A")?;
                ensure(out.level == lambda + k, "output level is not λ + k")?;
                self.nonnilpotent(out)
            }
            (StepCase::NilpotentBlock { alpha }, StepOutput::SquareZero(out)) => {
                ensure(alpha >= 2, "nilpotency index below 2")?;
                let s = |e: usize| block_scale.powi(e as i32) * (rho as f64).powi(e as i32);
                ensure(vanishes(&block.pow(alpha), s(alpha)), "block^α ≠ 0")?;
                ensure(!vanishes(&block.pow(alpha - 1), s(alpha - 1)), "block^(α−1) = 0")?;
                ensure(close(&out.h.matrix, &ha.pow(alpha - 1).mul(h)), "output is not (H·A)^(α−1)·H")?;
                ensure(out.lambda == alpha * lambda + (alpha - 1) * k, "output level is not αλ + (α−1)k")?;
                ensure(2 * out.rho <= rho, "rank did not halve")?;
                self.square_zero(out)
            }
            (StepCase::Sandwich, StepOutput::SquareZero(out)) => {
                ensure(close(&out.h.matrix, &ha.mul(h)), "output is not H·A·H")?;
                ensure(out.lambda == 2 * lambda + k, "output level is not 2λ + k")?;
                ensure(2 * out.rho <= rho, "rank did not halve")?;
                self.square_zero(out)
            }
            _ => reject("case and output kind disagree"),
        }
    }

    /// Checks a rank-one report whose scalars live in `G`: the chain's own
    /// backend, or floats when the exact spectrum is irrational. The split,
    /// the tail and `tilde_dims` are always rechecked in the chain's backend.
    fn rank_one<G: Field>(
        &self,
        ev: &Ctx<G>,
        w: &NonNilpotentWitness<F>,
        r: &RankOneReport<G>,
        conv: impl Fn(&F) -> G,
    ) -> Result<(), Rejection> {
        let d = self.d;
        ensure(r.rank == w.rank && r.level == w.level, "report does not match the witness")?;
        ensure(!r.mu.is_zero(), "zero eigenvalue")?;
        let b = &w.b.matrix;
        let bp = b.map(&conv).scale(&r.mu.recip());
        ensure(r.v.len() == d && linalg::vec_scale(&r.v) > 0.0, "eigenvector shape")?;
        ensure(vec_close(&bp.mul_vec(&r.v), &r.v), "B'v ≠ v")?;

        // Split along Im B^D ⊕ Ker B^D, recomputed here.
        ensure(F::invertible_part_dim(b) == r.s, "s differs from the number of nonzero eigenvalues")?;
        ensure(r.s <= r.rank, "s exceeds R")?;
        let Ok((s, p)) = fitting_projector(b) else {
            return reject("Fitting split of B failed");
        };
        ensure(s == r.s, "s differs from rank(B^D)")?;
        let bd = b.pow(d);
        ensure(close(&p.mul(&p), &p), "P² ≠ P")?;
        ensure(p.rank() == s, "rank(P) ≠ s")?;
        ensure(close(&p.mul(&bd), &bd), "Im B^D ⊄ Im P")?;
        let complement = Matrix::identity(d).sub(&p);
        let nil_scale = bd.max_magnitude() * complement.max_magnitude() * d as f64;
        ensure(vanishes(&bd.mul(&complement), nil_scale), "Ker P ⊄ Ker B^D")?;
        ensure(close(&p.map(&conv), &r.projector), "projector differs from the Fitting projector of B")?;
        ensure(nilpotent_tail(b, &complement) == Some(r.tail_index), "tail index mismatch")?;

        // Powers of L' = L^Λ.
        let l1 = self.space.power(w.level);
        let levels = d.max(s * d);
        let mut powers = Vec::with_capacity(levels);
        powers.push(l1.clone());
        for _ in 1..levels {
            let next = powers.last().unwrap().product(&l1).expect("same dimension");
            powers.push(next);
        }

        let mut orbit: Vec<Vec<G>> = Vec::new();
        let mut m_dims = Vec::with_capacity(d);
        for pw in powers.iter().take(d) {
            orbit.extend(pw.basis().iter().map(|x| x.map(&conv).mul_vec(&r.v)));
            m_dims.push(linalg::span_rank(&orbit));
        }
        ensure(m_dims == r.m_dims, "m_dims mismatch")?;
        ensure(m_dims.last() == Some(&d), "orbit does not fill ℂ^D by step D")?;
        ensure(
            m_dims.windows(2).all(|x| x[0] == d || x[0] < x[1]),
            "m_dims not strictly increasing before D",
        )?;

        let target = s * d;
        let mut tilde = Vec::with_capacity(target);
        for pw in powers.iter().take(target) {
            let flat: Vec<Vec<F>> = pw.basis().iter().map(|x| p.mul(x).into_flat()).collect();
            tilde.push(linalg::span_rank(&flat));
        }
        ensure(tilde == r.tilde_dims, "tilde_dims mismatch")?;
        ensure(
            tilde.windows(2).all(|x| x[0] == target || x[0] < x[1]),
            "tilde_dims not strictly increasing before s·D",
        )?;
        let first_full = tilde.iter().position(|&x| x == target).map(|i| i + 1);
        ensure(first_full == Some(r.projected_full_at), "projected_full_at mismatch")?;
        ensure(r.solve_level >= r.projected_full_at, "solve level below the first full level")?;
        ensure(r.padding + r.solve_level == r.rank * d, "padding does not reach R·D")?;
        ensure(r.padding >= r.tail_index, "padding shorter than the nilpotent tail")?;
        ensure(r.index_bound == w.level * (r.rank + 1) * d, "index bound is not Λ(R+1)D")?;

        ensure(!r.samples.is_empty(), "no rank-one samples")?;
        for smp in &r.samples {
            ev.element(&smp.element)?;
            ensure(smp.element.level == r.index_bound, "sample level is not Λ(R+1)D")?;
            ensure(smp.element.matrix.rank() == 1, "sample is not rank one")?;
            ensure(vec_close(&smp.element.matrix.mul_vec(&smp.v1), &smp.v2), "sample does not map v1 to v2")?;
        }
        Ok(())
    }

    fn chain(&self, chain: &CertificateChain<F>, float: Option<&Ctx<Complex64>>) -> Result<(), Rejection> {
        let d = self.d;
        ensure(chain.d == d, "dimension mismatch")?;
        ensure(chain.theorem_bound == theorem_bound(d), "theorem bound mismatch")?;
        ensure(chain.generators.len() == self.gens.len(), "generator count mismatch")?;
        ensure(
            chain.generators.iter().zip(&self.gens).all(|(a, b)| close(a, b)),
            "generators are not the canonical basis of L",
        )?;
        ensure(chain.steps.len() <= max_chain_length(d), "chain too long")?;
        let mut current = chain.seed.as_ref();
        if let Some(seed) = current {
            self.square_zero(seed)?;
        } else {
            ensure(chain.steps.is_empty(), "steps without a seed")?;
        }
        let mut reached = None;
        for (i, step) in chain.steps.iter().enumerate() {
            ensure(reached.is_none(), "steps continue after a non-nilpotent output")?;
            ensure(current == Some(&step.input), "step input is not the previous witness")?;
            self.step(step)?;
            match &step.output {
                StepOutput::SquareZero(w) => current = Some(w),
                StepOutput::NonNilpotent(w) => reached = Some((i, w)),
            }
        }
        if let Some(fin) = &chain.final_witness {
            self.nonnilpotent(fin)?;
            match reached {
                Some((_, w)) => ensure(w == fin, "final witness differs from the last step")?,
                None => ensure(chain.seed.is_none() && fin.level == 1, "final witness has no derivation")?,
            }
        }
        match &chain.outcome {
            Outcome::Primitive => {
                let Some(fin) = &chain.final_witness else {
                    return reject("primitive chain without a final witness");
                };
                let claimed = fin.level * (fin.rank + 1) * d;
                ensure(chain.claimed_index_bound == Some(claimed), "claimed bound is not Λ(R+1)D")?;
                ensure(claimed as u64 <= chain.theorem_bound, "claimed bound exceeds the theorem bound")?;
                match &chain.rank_one {
                    Some(RankOneEvidence::Native(r)) => self.rank_one(self, fin, r, F::clone),
                    Some(RankOneEvidence::Float(r)) => {
                        let Some(fc) = float else {
                            return reject("float evidence in a float chain must be native");
                        };
                        self.rank_one(fc, fin, r, Field::to_c64)
                    }
                    None => reject("primitive chain without rank-one evidence"),
                }
            }
            Outcome::Imprimitive { .. } => {
                ensure(chain.claimed_index_bound.is_none(), "imprimitive chain claims a bound")?;
                ensure(!is_primitive(&self.space), "space is primitive")
            }
        }
    }
}

/// Checks a witness against `L`, recomputing everything from its words.
pub fn verify_witness<F: Field>(l: &MatrixSpace<F>, w: Witness<'_, F>) -> Result<(), Rejection> {
    let ctx = Ctx::new(l);
    match w {
        Witness::SquareZero(w) => ctx.square_zero(w),
        Witness::NonNilpotent(w) => ctx.nonnilpotent(w),
    }
}

/// Checks a probe taken from the square-zero witness `w`.
pub fn verify_probe<F: Field>(
    l: &MatrixSpace<F>,
    w: &SquareZeroWitness<F>,
    probe: &ReachabilityProbe<F>,
) -> Result<(), Rejection> {
    let ctx = Ctx::new(l);
    ctx.square_zero(w)?;
    ctx.probe(w, probe)
}

/// Checks a rank-one report for the witness `w`.
pub fn verify_rank_one<F: Field>(
    l: &MatrixSpace<F>,
    w: &NonNilpotentWitness<F>,
    report: &RankOneReport<F>,
) -> Result<(), Rejection> {
    let ctx = Ctx::new(l);
    ctx.nonnilpotent(w)?;
    ctx.rank_one(&ctx, w, report, F::clone)
}

/// Checks a whole certificate: every witness, probe and step, the chain
/// invariants, the claimed bound and the rank-one evidence.
pub fn verify_chain<F: Field>(l: &MatrixSpace<F>, chain: &CertificateChain<F>) -> Result<(), Rejection> {
    let ctx = Ctx::new(l);
    let float = match (F::BACKEND, &chain.rank_one) {
        (Backend::Exact, Some(RankOneEvidence::Float(_))) => Some(Ctx {
            d: ctx.d,
            gens: ctx.gens.iter().map(Matrix::to_c64).collect(),
            space: l.map(Field::to_c64),
        }),
        _ => None,
    };
    ctx.chain(chain, float.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{certify, square_zero_seed, Seed, Word};
    use crate::matspace::GaussRational as Q;

    fn e(d: usize, i: usize, j: usize) -> Matrix<Q> {
        Matrix::unit(d, i - 1, j - 1)
    }

    fn span(ms: &[Matrix<Q>]) -> MatrixSpace<Q> {
        MatrixSpace::canonical_basis(ms).unwrap()
    }

    #[test]
    fn seed_round_trip_and_negative_controls() {
        let l = span(&[e(3, 1, 2).add(&e(3, 2, 3)), e(3, 2, 1).sub(&e(3, 3, 2))]);
        let mut w = match square_zero_seed(&l) {
            Ok(Seed::SquareZero(w)) => w,
            Ok(Seed::NonNilpotent(b)) => {
                assert_eq!(verify_witness(&l, Witness::NonNilpotent(&b)), Ok(()));
                return;
            }
            Err(e) => panic!("{e}"),
        };
        assert_eq!(verify_witness(&l, Witness::SquareZero(&w)), Ok(()));
        w.rho += 1;
        assert_eq!(verify_witness(&l, Witness::SquareZero(&w)).unwrap_err().reason, "rank mismatch");
    }

    #[test]
    fn altered_word_is_a_combination_mismatch() {
        let l = span(&[e(2, 1, 1), e(2, 1, 2), e(2, 2, 1)]);
        let gens = l.basis();
        let i11 = gens.iter().position(|g| *g == e(2, 1, 1)).unwrap();
        let mut w = NonNilpotentWitness { b: SpanElement::from_word(Word::letter(i11), e(2, 1, 1)), rank: 1, level: 1 };
        assert_eq!(verify_witness(&l, Witness::NonNilpotent(&w)), Ok(()));
        w.b.combination[0].word.0[0] = (i11 + 1) % 3;
        assert_eq!(verify_witness(&l, Witness::NonNilpotent(&w)).unwrap_err().reason, "combination mismatch");
    }

    #[test]
    fn chains_verify_and_corruption_is_caught() {
        let l = span(&[e(3, 1, 2), e(3, 2, 3), e(3, 3, 1).add(&e(3, 1, 1))]);
        let chain = certify(&l).unwrap();
        assert!(chain.is_primitive());
        assert_eq!(verify_chain(&l, &chain), Ok(()));
        let mut bad = chain.clone();
        bad.claimed_index_bound = bad.claimed_index_bound.map(|c| c - 1);
        assert!(verify_chain(&l, &bad).is_err());
        let mut bad = chain.clone();
        if let Some(RankOneEvidence::Native(r)) = &mut bad.rank_one {
            r.m_dims[0] += 1;
        }
        assert!(verify_chain(&l, &bad).is_err());
    }
}
