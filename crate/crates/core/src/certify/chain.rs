use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::probe::{block_form, probe_in};
use super::rank_one::{construct, letter_tower, skeleton};
use super::tower::WordTower;
use super::word::{SpanElement, Word};
use super::{
    CertificateChain, CertifyError, ChainStep, ImprimitivityEvidence, NonNilpotentWitness, Outcome, RankOneEvidence,
    SquareZeroWitness, StepCase, StepOutput,
};
use crate::bounds::{max_chain_length, nonnilpotent_bound_holds, square_zero_bound_holds, theorem_bound};
use crate::index::is_nilpotent_space;
use crate::matspace::{Backend, Complex64, EigenError, Field, Matrix, MatrixSpace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertifyOptions {
    /// Random combinations of the generators tried when looking for a
    /// non-nilpotent element (or a nilpotent one of large index) in `L`.
    pub seed_trials: usize,
    pub rng_seed: u64,
    /// Number of `(v1, v2)` pairs for which a rank-one element is built.
    pub samples: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { seed_trials: 32, rng_seed: 0x5EED, samples: 2 }
    }
}

/// Least `α` with `A^α = 0`, or `None` when `A^D ≠ 0`.
pub fn nilpotency_index<F: Field>(a: &Matrix<F>) -> Option<usize> {
    let d = a.rows();
    let norm = a.max_magnitude();
    let mut power = a.clone();
    let mut scale = norm;
    for alpha in 1..=d {
        if power.is_negligible(scale) {
            return Some(alpha);
        }
        power = power.mul(a);
        scale *= norm * d as f64;
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub enum Seed<F> {
    NonNilpotent(NonNilpotentWitness<F>),
    SquareZero(SquareZeroWitness<F>),
}

/// Everything of the chain before the rank-one construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPrefix<F> {
    pub seed: Option<SquareZeroWitness<F>>,
    pub steps: Vec<ChainStep<F>>,
}

fn nonnilpotent<F: Field>(b: SpanElement<F>) -> NonNilpotentWitness<F> {
    NonNilpotentWitness { rank: b.matrix.rank(), level: b.level, b }
}

fn square_zero<F: Field>(h: SpanElement<F>) -> SquareZeroWitness<F> {
    SquareZeroWitness { rho: h.matrix.rank(), lambda: h.level, h }
}

fn check_square_zero<F: Field>(w: &SquareZeroWitness<F>, d: usize) -> Result<(), CertifyError> {
    if w.rho == 0 || !square_zero_bound_holds(w.lambda, w.rho, d) {
        return Err(CertifyError::Invariant(format!(
            "square-zero witness (λ = {}, ρ = {}) breaks λρ ≤ D(1 + log₂(D/ρ))",
            w.lambda, w.rho
        )));
    }
    Ok(())
}

fn check_nonnilpotent<F: Field>(w: &NonNilpotentWitness<F>, d: usize) -> Result<(), CertifyError> {
    if !nonnilpotent_bound_holds(w.level, w.rank, d) {
        return Err(CertifyError::Invariant(format!(
            "non-nilpotent witness (Λ = {}, R = {}) breaks Λ ≤ (D/R)(3 + log₂(D/R))",
            w.level, w.rank
        )));
    }
    Ok(())
}

/// Shared state of one certify run: the generators (canonical basis of `L`)
/// and the word tower over them.
pub(crate) struct Engine<F> {
    d: usize,
    generators: Vec<Matrix<F>>,
    tower: WordTower<F>,
    opts: CertifyOptions,
}

impl<F: Field> Engine<F> {
    fn new(l: &MatrixSpace<F>, opts: CertifyOptions) -> Result<Self, CertifyError> {
        if l.is_zero() || is_nilpotent_space(l) {
            return Err(CertifyError::NilpotentSpace);
        }
        let generators = l.basis();
        let tower = WordTower::over_generators(&generators);
        Ok(Engine { d: l.d(), generators, tower, opts })
    }

    fn seed(&mut self) -> Result<Seed<F>, CertifyError> {
        let letters: Vec<SpanElement<F>> = self
            .generators
            .iter()
            .enumerate()
            .map(|(i, m)| SpanElement::from_word(Word::letter(i), m.clone()))
            .collect();
        let mut best: Option<(usize, SpanElement<F>)> = None;
        let consider = |e: SpanElement<F>, best: &mut Option<(usize, SpanElement<F>)>| match nilpotency_index(&e.matrix) {
            None => Some(e),
            Some(alpha) => {
                if best.as_ref().is_none_or(|(b, _)| alpha > *b) {
                    *best = Some((alpha, e));
                }
                None
            }
        };
        for e in &letters {
            if let Some(found) = consider(e.clone(), &mut best) {
                return Ok(Seed::NonNilpotent(nonnilpotent(found)));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.rng_seed);
        for _ in 0..self.opts.seed_trials {
            let mut combo: Option<SpanElement<F>> = None;
            for e in &letters {
                let c: i64 = rng.gen_range(-3..=3);
                if c == 0 {
                    continue;
                }
                let term = e.scale(&F::from_i64(c));
                combo = Some(match combo {
                    None => term,
                    Some(acc) => acc.add(&term),
                });
            }
            let Some(combo) = combo else { continue };
            if let Some(found) = consider(combo, &mut best) {
                return Ok(Seed::NonNilpotent(nonnilpotent(found)));
            }
        }
        let (alpha, a) = best.expect("at least one generator");
        if alpha < 2 {
            return Err(CertifyError::Invariant("zero generator".into()));
        }
        let h = self.tower.pow(&a, alpha - 1);
        let w = square_zero(h);
        check_square_zero(&w, self.d)?;
        Ok(Seed::SquareZero(w))
    }

    fn step(&mut self, w: &SquareZeroWitness<F>) -> Result<ChainStep<F>, CertifyError> {
        let d = self.d;
        let form = block_form(&w.h.matrix)?;
        let probe = probe_in(&mut self.tower, &form, theorem_bound(d) as usize)?;
        let a_matrix = probe.word.eval(&self.generators).expect("tower words are valid");
        let a = SpanElement::from_word(probe.word.clone(), a_matrix);
        let ha = self.tower.mul(&w.h, &a);
        let (case, output) = if probe.k * w.rho <= 2 * d {
            match nilpotency_index(&probe.block) {
                None => {
                    let out = nonnilpotent(ha);
                    if nilpotency_index(&out.b.matrix).is_some() {
                        return Err(CertifyError::Invariant("H·A is nilpotent for a non-nilpotent block".into()));
                    }
                    check_nonnilpotent(&out, d)?;
                    (StepCase::NonNilpotentBlock, StepOutput::NonNilpotent(out))
                }
                Some(alpha) if alpha >= 2 => {
                    let chain = self.tower.pow(&ha, alpha - 1);
                    let h1 = self.tower.mul(&chain, &w.h);
                    (StepCase::NilpotentBlock { alpha }, StepOutput::SquareZero(square_zero(h1)))
                }
                Some(_) => return Err(CertifyError::Invariant("probe returned a zero block".into())),
            }
        } else {
            let h1 = self.tower.mul(&ha, &w.h);
            (StepCase::Sandwich, StepOutput::SquareZero(square_zero(h1)))
        };
        if let StepOutput::SquareZero(next) = &output {
            let m = &next.h.matrix;
            if !m.mul(m).is_negligible(m.max_magnitude().powi(2) * d as f64) {
                return Err(CertifyError::Invariant("step produced a matrix that is not square-zero".into()));
            }
            if next.rho == 0 || 2 * next.rho > w.rho {
                return Err(CertifyError::Invariant(format!("rank {} did not halve from {}", next.rho, w.rho)));
            }
            check_square_zero(next, d)?;
        }
        Ok(ChainStep { input: w.clone(), probe, case, output })
    }

    /// Seed plus halving steps. The prefix is returned alongside the error
    /// so that imprimitive runs can still report what was built.
    fn witness(&mut self) -> (ChainPrefix<F>, Result<NonNilpotentWitness<F>, CertifyError>) {
        let mut prefix = ChainPrefix { seed: None, steps: Vec::new() };
        let mut current = match self.seed() {
            Err(e) => return (prefix, Err(e)),
            Ok(Seed::NonNilpotent(w)) => return (prefix, Ok(w)),
            Ok(Seed::SquareZero(w)) => {
                prefix.seed = Some(w.clone());
                w
            }
        };
        let max_steps = max_chain_length(self.d);
        loop {
            if prefix.steps.len() >= max_steps {
                let err = CertifyError::Invariant(format!("chain longer than {max_steps} steps"));
                return (prefix, Err(err));
            }
            let step = match self.step(&current) {
                Ok(s) => s,
                Err(e) => return (prefix, Err(e)),
            };
            let output = step.output.clone();
            prefix.steps.push(step);
            match output {
                StepOutput::NonNilpotent(w) => return (prefix, Ok(w)),
                StepOutput::SquareZero(w) => current = w,
            }
        }
    }
}

/// A non-nilpotent witness in `L` itself, or a square-zero `A^{λ₀}` built
/// from the nilpotent element of largest index found among the generators
/// and seeded random combinations.
pub fn square_zero_seed<F: Field>(l: &MatrixSpace<F>) -> Result<Seed<F>, CertifyError> {
    Engine::new(l, CertifyOptions::default())?.seed()
}

/// One halving step from `w`.
pub fn lemma5_step<F: Field>(l: &MatrixSpace<F>, w: &SquareZeroWitness<F>) -> Result<ChainStep<F>, CertifyError> {
    if l.is_zero() {
        return Err(CertifyError::ZeroSpace);
    }
    let generators = l.basis();
    let mut engine = Engine {
        d: l.d(),
        tower: WordTower::over_generators(&generators),
        generators,
        opts: CertifyOptions::default(),
    };
    engine.step(w)
}

/// Iterates halving steps from the seed until a non-nilpotent element
/// appears.
pub fn nonnilpotent_witness<F: Field>(
    l: &MatrixSpace<F>,
) -> Result<(NonNilpotentWitness<F>, ChainPrefix<F>), CertifyError> {
    let mut engine = Engine::new(l, CertifyOptions::default())?;
    let (prefix, result) = engine.witness();
    result.map(|w| (w, prefix))
}

pub fn certify<F: Field>(l: &MatrixSpace<F>) -> Result<CertificateChain<F>, CertifyError> {
    certify_with(l, &CertifyOptions::default())
}

pub fn certify_with<F: Field>(l: &MatrixSpace<F>, opts: &CertifyOptions) -> Result<CertificateChain<F>, CertifyError> {
    let d = l.d();
    let mut engine = Engine::new(l, opts.clone())?;
    let (prefix, result) = engine.witness();
    let mut chain = CertificateChain {
        d,
        generators: engine.generators.clone(),
        seed: prefix.seed,
        steps: prefix.steps,
        final_witness: None,
        rank_one: None,
        claimed_index_bound: None,
        theorem_bound: theorem_bound(d),
        outcome: Outcome::Primitive,
    };
    let imprimitive = |evidence| Outcome::Imprimitive { evidence };
    let fin = match result {
        Ok(w) => w,
        Err(CertifyError::ProbeExhausted { scanned, repeat }) => {
            chain.outcome = imprimitive(ImprimitivityEvidence::ProbeExhausted { scanned, repeat });
            return Ok(chain);
        }
        Err(e) => return Err(e),
    };
    chain.final_witness = Some(fin.clone());
    let report = match construct(&mut engine.tower, &fin, opts.samples, None) {
        Ok(r) => Ok(RankOneEvidence::Native(r)),
        Err(CertifyError::Eigen(EigenError::IrrationalEigenvalue)) if F::BACKEND == Backend::Exact => {
            // Only the eigenvector and what depends on it need floats; the
            // skeleton stays exact.
            let mut lt = letter_tower(&mut engine.tower, fin.level);
            skeleton(&mut lt, &fin.b.matrix).and_then(|skel| {
                let gens: Vec<Matrix<Complex64>> = engine.generators.iter().map(Matrix::to_c64).collect();
                let mut tower = WordTower::over_generators(&gens);
                let w = NonNilpotentWitness { b: fin.b.map(Field::to_c64), rank: fin.rank, level: fin.level };
                construct(&mut tower, &w, opts.samples, Some(skel.to_c64()))
                    .map(RankOneEvidence::Float)
                    .map_err(|e| match e {
                        CertifyError::OrbitStalled(dims) => {
                            CertifyError::NumericalDegeneracy(format!("float orbit stalled at {dims:?}"))
                        }
                        e => e,
                    })
            })
        }
        Err(e) => Err(e),
    };
    match report {
        Ok(r) => {
            let claimed = fin.level * (fin.rank + 1) * d;
            if claimed as u64 > chain.theorem_bound {
                return Err(CertifyError::Invariant(format!("claimed bound {claimed} exceeds the theorem bound")));
            }
            chain.claimed_index_bound = Some(claimed);
            chain.rank_one = Some(r);
        }
        Err(CertifyError::OrbitStalled(dims)) => {
            chain.outcome = imprimitive(ImprimitivityEvidence::OrbitStalled { dims });
        }
        Err(CertifyError::ProjectedStalled(dims)) => {
            chain.outcome = imprimitive(ImprimitivityEvidence::ProjectedStalled { dims });
        }
        Err(e) => return Err(e),
    }
    Ok(chain)
}
