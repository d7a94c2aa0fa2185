//! Constructive certificates of primitivity with explicit words.
//!
//! The chain starts from a square-zero seed, halves its rank with
//! reachability probes until a non-nilpotent element appears, and then runs
//! the rank-one construction, which shows that a fixed power of the space
//! is full. Every matrix the engine produces carries a combination of words
//! over the canonical basis of `L`, so [`verify_chain`] can recheck the
//! whole certificate from the generators alone.

mod chain;
mod probe;
mod rank_one;
mod tower;
mod verify;
mod word;

use serde::{Deserialize, Serialize};

use crate::matspace::{Complex64, EigenError, Field, Matrix, SpaceError};

pub use chain::{
    certify, certify_with, lemma5_step, nilpotency_index, nonnilpotent_witness, square_zero_seed, ChainPrefix,
    CertifyOptions,
    Seed,
};
pub use probe::{block_form, reachability_probe, BlockForm};
pub use rank_one::rank_one_construction;
pub use tower::WordTower;
pub use verify::{verify_chain, verify_probe, verify_rank_one, verify_witness, Rejection, Witness};
pub use word::{eval_combination, merge_terms, SpanElement, Term, Word};

/// `H ∈ L^λ` with `H² = 0` and rank `ρ ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Field + Serialize", deserialize = "F: Field + Deserialize<'de>"))]
pub struct SquareZeroWitness<F> {
    pub h: SpanElement<F>,
    pub rho: usize,
    pub lambda: usize,
}

/// `B ∈ L^Λ` with `B^D ≠ 0` and rank `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Field + Serialize", deserialize = "F: Field + Deserialize<'de>"))]
pub struct NonNilpotentWitness<F> {
    pub b: SpanElement<F>,
    pub rank: usize,
    pub level: usize,
}

/// The minimal level `k` at which `P·L^k·Q ≠ 0` for the block form of a
/// square-zero `H`.
///
/// `basis_change` is `S` with `S⁻¹·H·S` in block form. The stored selectors
/// already include the change of basis: `p = (O|O|I)·S⁻¹` and
/// `q = S·(I|O|O)ᵀ`, so `block = p·eval(word)·q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Field + Serialize", deserialize = "F: Field + Deserialize<'de>"))]
pub struct ReachabilityProbe<F> {
    pub basis_change: Matrix<F>,
    pub p: Matrix<F>,
    pub q: Matrix<F>,
    pub k: usize,
    pub word: Word,
    pub block: Matrix<F>,
    pub block_rank: usize,
}

/// Which branch of the halving step was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "case")]
pub enum StepCase {
    /// `k·ρ ≤ 2D` and the block is not nilpotent: `H·A`.
    NonNilpotentBlock,
    /// `k·ρ ≤ 2D` and the block is nilpotent of index `alpha`:
    /// `(H·A)^{α−1}·H`.
    NilpotentBlock { alpha: usize },
    /// `k·ρ > 2D`: `H·A·H`.
    Sandwich,
}

impl StepCase {
    /// 1 for the two short-probe branches, 2 for the sandwich.
    pub fn tag(self) -> u8 {
        match self {
            StepCase::NonNilpotentBlock | StepCase::NilpotentBlock { .. } => 1,
            StepCase::Sandwich => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Field + Serialize", deserialize = "F: Field + Deserialize<'de>"))]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StepOutput<F> {
    SquareZero(SquareZeroWitness<F>),
    NonNilpotent(NonNilpotentWitness<F>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Field + Serialize", deserialize = "F: Field + Deserialize<'de>"))]
pub struct ChainStep<F> {
    pub input: SquareZeroWitness<F>,
    pub probe: ReachabilityProbe<F>,
    pub case: StepCase,
    pub output: StepOutput<F>,
}

/// One rank-one element `M` of `L^{(R+1)DΛ}` with `M·v1 = v2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Field + Serialize", deserialize = "F: Field + Deserialize<'de>"))]
pub struct RankOneSample<F> {
    pub v1: Vec<F>,
    pub v2: Vec<F>,
    pub element: SpanElement<F>,
}

/// Record of the rank-one construction for a non-nilpotent `B ∈ L^Λ`.
///
/// `B' = B/μ` fixes `v`. Levels of `L' = L^Λ` are counted in units of `Λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Field + Serialize", deserialize = "F: Field + Deserialize<'de>"))]
pub struct RankOneReport<F> {
    /// The eigenvalue of largest modulus used for rescaling.
    pub mu: F,
    pub v: Vec<F>,
    pub rank: usize,
    pub level: usize,
    /// Number of nonzero eigenvalues of `B` with multiplicity.
    pub s: usize,
    /// Projector onto the invertible part along the nilpotent part, in the
    /// original coordinates. The Jordan order puts the invertible part first.
    pub projector: Matrix<F>,
    /// `dim (L'¹ + … + L'^j)·v` for `j = 1..=D`.
    pub m_dims: Vec<usize>,
    /// `dim P·L'^j` for `j = 1..=s·D`.
    pub tilde_dims: Vec<usize>,
    /// First `j` with `dim P·L'^j = s·D`.
    pub projected_full_at: usize,
    /// Level `j ≥ projected_full_at` of `L'` at which `P·Y = v·φᵀ` was
    /// solved.
    pub solve_level: usize,
    /// Powers of `B'` applied after `solve_level`, so the rank-one elements
    /// sit at `L'^{(R+1)D}`.
    pub padding: usize,
    /// Least `t` with `B'^t·(I − P) = 0`.
    pub tail_index: usize,
    pub index_bound: usize,
    pub samples: Vec<RankOneSample<F>>,
}

/// Rank-one evidence in the chain's own backend or, when the exact backend
/// meets an irrational spectrum, in floating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Field + Serialize", deserialize = "F: Field + Deserialize<'de>"))]
#[serde(rename_all = "snake_case", tag = "backend", content = "report")]
pub enum RankOneEvidence<F> {
    Native(RankOneReport<F>),
    Float(RankOneReport<Complex64>),
}

impl<F> RankOneEvidence<F> {
    pub fn index_bound(&self) -> usize {
        match self {
            RankOneEvidence::Native(r) => r.index_bound,
            RankOneEvidence::Float(r) => r.index_bound,
        }
    }

    pub fn m_dims(&self) -> &[usize] {
        match self {
            RankOneEvidence::Native(r) => &r.m_dims,
            RankOneEvidence::Float(r) => &r.m_dims,
        }
    }

    pub fn tilde_dims(&self) -> &[usize] {
        match self {
            RankOneEvidence::Native(r) => &r.tilde_dims,
            RankOneEvidence::Float(r) => &r.tilde_dims,
        }
    }

    pub fn s(&self) -> usize {
        match self {
            RankOneEvidence::Native(r) => r.s,
            RankOneEvidence::Float(r) => r.s,
        }
    }
}

/// Why the space was found to be imprimitive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ImprimitivityEvidence {
    /// No level up to `scanned` reaches the block; `repeat = (a, b)` means
    /// `L^a = L^b`, so later levels repeat earlier ones.
    ProbeExhausted { scanned: usize, repeat: Option<(usize, usize)> },
    /// `(L'¹ + … + L'^j)·v` stopped growing below `D`.
    OrbitStalled { dims: Vec<usize> },
    /// `P·L'^j` stopped growing below `s·D`.
    ProjectedStalled { dims: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum Outcome {
    Primitive,
    Imprimitive { evidence: ImprimitivityEvidence },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Field + Serialize", deserialize = "F: Field + Deserialize<'de>"))]
pub struct CertificateChain<F> {
    pub d: usize,
    /// Words index into this list: the canonical basis of `L`.
    pub generators: Vec<Matrix<F>>,
    /// `None` when a non-nilpotent element was found directly in `L`.
    pub seed: Option<SquareZeroWitness<F>>,
    pub steps: Vec<ChainStep<F>>,
    #[serde(rename = "final")]
    pub final_witness: Option<NonNilpotentWitness<F>>,
    pub rank_one: Option<RankOneEvidence<F>>,
    pub claimed_index_bound: Option<usize>,
    pub theorem_bound: u64,
    pub outcome: Outcome,
}

impl<F> CertificateChain<F> {
    pub fn is_primitive(&self) -> bool {
        self.outcome == Outcome::Primitive
    }

    /// Ranks of the square-zero witnesses in order, seed first.
    pub fn square_zero_ranks(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.seed.iter().map(|w| w.rho).collect();
        for s in &self.steps {
            if let StepOutput::SquareZero(w) = &s.output {
                out.push(w.rho);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertifyError {
    #[error("L^D = 0: the space is nilpotent")]
    NilpotentSpace,
    #[error("the space is zero")]
    ZeroSpace,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("probe exhausted after {scanned} levels")]
    ProbeExhausted { scanned: usize, repeat: Option<(usize, usize)> },
    #[error("block rank {rank} at level {k} exceeds {d}/{k}")]
    ProbeRankBound { k: usize, rank: usize, d: usize },
    #[error("orbit of v stalled: dims {0:?}")]
    OrbitStalled(Vec<usize>),
    #[error("projected powers stalled: dims {0:?}")]
    ProjectedStalled(Vec<usize>),
    #[error("numerically degenerate: {0}")]
    NumericalDegeneracy(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}
