//! Deterministic instance families and searches for unusual spaces.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::nilpotency_index;
use crate::index::{dim_sequence, is_primitive};
use crate::matspace::{AnyMatrix, AnySpace, Backend, Field, GaussRational, Matrix, MatrixSpace};

type Q = GaussRational;

/// Entries of random families are drawn from `-ENTRY_RANGE..=ENTRY_RANGE`.
pub const ENTRY_RANGE: i64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    RandomDense,
    RandomSparse,
    /// The cyclic shift together with `E11`.
    ShiftAndKill,
    /// All strictly upper-triangular matrices.
    StrictUpper,
    /// Random nilpotent generators, each conjugated by its own unimodular
    /// integer matrix.
    NilpotentGenerators,
    /// Read from a file; cannot be generated.
    Custom,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::RandomDense,
        Family::RandomSparse,
        Family::ShiftAndKill,
        Family::StrictUpper,
        Family::NilpotentGenerators,
        Family::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::RandomDense => "random_dense",
            Family::RandomSparse => "random_sparse",
            Family::ShiftAndKill => "shift_and_kill",
            Family::StrictUpper => "strict_upper",
            Family::NilpotentGenerators => "nilpotent_generators",
            Family::Custom => "custom",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| GenError::InvalidSpec(format!("unknown family `{s}`")))
    }
}

/// `n` is the generator count of the random families; the structured
/// families (`shift_and_kill`, `strict_upper`) ignore it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub field: Backend,
}

impl InstanceSpec {
    pub fn new(family: Family, d: usize, n: usize, seed: u64) -> Self {
        InstanceSpec { family, d, n, seed, field: Backend::Exact }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, GenError> {
    Err(GenError::InvalidSpec(msg.into()))
}

fn random_matrix(rng: &mut ChaCha8Rng, d: usize, density: Option<f64>) -> Matrix<Q> {
    loop {
        let m = Matrix::from_fn(d, d, |_, _| {
            let keep = density.is_none_or(|p| rng.gen_bool(p));
            if keep {
                Q::from_i64(rng.gen_range(-ENTRY_RANGE..=ENTRY_RANGE))
            } else {
                Q::zero()
            }
        });
        if !m.is_zero() {
            return m;
        }
    }
}

/// A random unimodular integer matrix and its inverse, built from
/// elementary row operations with small multipliers.
fn unimodular(rng: &mut ChaCha8Rng, d: usize) -> (Matrix<Q>, Matrix<Q>) {
    let mut s = Matrix::<Q>::identity(d);
    let mut inv = Matrix::<Q>::identity(d);
    for _ in 0..2 * d {
        let i = rng.gen_range(0..d);
        let j = rng.gen_range(0..d);
        if i == j {
            continue;
        }
        let c = rng.gen_range(-2..=2i64);
        if c == 0 {
            continue;
        }
        let mut e = Matrix::<Q>::identity(d);
        e.set(i, j, Q::from_i64(c));
        let mut e_inv = Matrix::<Q>::identity(d);
        e_inv.set(i, j, Q::from_i64(-c));
        s = e.mul(&s);
        inv = inv.mul(&e_inv);
    }
    (s, inv)
}

fn random_nilpotent(rng: &mut ChaCha8Rng, d: usize) -> Matrix<Q> {
    loop {
        let u = Matrix::from_fn(d, d, |i, j| {
            if j > i {
                Q::from_i64(rng.gen_range(-ENTRY_RANGE..=ENTRY_RANGE))
            } else {
                Q::zero()
            }
        });
        if u.is_zero() {
            continue;
        }
        let (s, inv) = unimodular(rng, d);
        return s.mul(&u).mul(&inv);
    }
}

pub fn cyclic_shift(d: usize) -> Matrix<Q> {
    Matrix::from_fn(d, d, |i, j| if i == (j + 1) % d { Q::one() } else { Q::zero() })
}

pub fn shift_and_kill(d: usize) -> Vec<Matrix<Q>> {
    vec![cyclic_shift(d), Matrix::unit(d, 0, 0)]
}

pub fn strict_upper(d: usize) -> Vec<Matrix<Q>> {
    (0..d).flat_map(|i| (i + 1..d).map(move |j| Matrix::unit(d, i, j))).collect()
}

/// The generator list of an instance. Entries are always small integers;
/// `spec.field` only selects the backend of [`generate_space`].
pub fn generate(spec: &InstanceSpec) -> Result<Vec<Matrix<Q>>, GenError> {
    let d = spec.d;
    if d == 0 {
        return invalid("d must be positive");
    }
    let needs_n = matches!(spec.family, Family::RandomDense | Family::RandomSparse | Family::NilpotentGenerators);
    if needs_n && spec.n == 0 {
        return invalid("n must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.family {
        Family::RandomDense => Ok((0..spec.n).map(|_| random_matrix(&mut rng, d, None)).collect()),
        Family::RandomSparse => {
            let p = (2.0 / d as f64).clamp(0.25, 1.0);
            Ok((0..spec.n).map(|_| random_matrix(&mut rng, d, Some(p))).collect())
        }
        Family::ShiftAndKill => Ok(shift_and_kill(d)),
        Family::StrictUpper if d < 2 => invalid("strict_upper needs d ≥ 2"),
        Family::StrictUpper => Ok(strict_upper(d)),
        Family::NilpotentGenerators if d < 2 => invalid("nilpotent_generators needs d ≥ 2"),
        Family::NilpotentGenerators => Ok((0..spec.n).map(|_| random_nilpotent(&mut rng, d)).collect()),
        Family::Custom => invalid("custom instances are read from files"),
    }
}

/// The span of [`generate`] in the requested backend.
pub fn generate_space(spec: &InstanceSpec) -> Result<AnySpace, GenError> {
    let gens = generate(spec)?;
    let any: Vec<AnyMatrix> = match spec.field {
        Backend::Exact => gens.into_iter().map(AnyMatrix::Exact).collect(),
        Backend::Float => gens.iter().map(|m| AnyMatrix::Float(m.to_c64())).collect(),
    };
    AnySpace::canonical_basis(&any).map_err(|e| GenError::InvalidSpec(e.to_string()))
}

/// Per-trial seed derived from a run seed (SplitMix64 finalizer).
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A primitive space found with all-nilpotent generators.
#[derive(Debug, Clone, PartialEq)]
pub struct NilpotentHit {
    pub generators: Vec<Matrix<Q>>,
    pub space: MatrixSpace<Q>,
}

/// Primitive spaces whose generators are all nilpotent. Trials alternate
/// between two and three generators.
pub fn search_nilpotent_generators(d: usize, trials: usize, seed: u64) -> Vec<NilpotentHit> {
    if d < 2 {
        return Vec::new();
    }
    let hits: Vec<Option<NilpotentHit>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let spec = InstanceSpec::new(Family::NilpotentGenerators, d, 2 + t % 2, trial_seed(seed, t as u64));
            let gens = generate(&spec).ok()?;
            if !gens.iter().all(|g| nilpotency_index(g).is_some()) {
                return None;
            }
            let space = MatrixSpace::canonical_basis(&gens).ok()?;
            is_primitive(&space).then_some(NilpotentHit { generators: gens, space })
        })
        .collect();
    hits.into_iter().flatten().collect()
}

/// Spaces with `dim L^{j+1} < dim L^j < D²`, with the first such `j`. Trial
/// 0 is `strict_upper(d)`; the rest are sparse random spaces with two or
/// three generators.
pub fn search_nonmonotone(d: usize, trials: usize, seed: u64) -> Vec<(MatrixSpace<Q>, usize)> {
    if d == 0 {
        return Vec::new();
    }
    let hits: Vec<Option<(MatrixSpace<Q>, usize)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let gens = if t == 0 && d >= 2 {
                strict_upper(d)
            } else {
                let spec = InstanceSpec::new(Family::RandomSparse, d, 2 + t % 2, trial_seed(seed, t as u64));
                generate(&spec).ok()?
            };
            let l = MatrixSpace::canonical_basis(&gens).ok()?;
            let j = dim_sequence(&l, 2 * d + 1).first_drop()?;
            Some((l, j))
        })
        .collect();
    hits.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::wielandt_index;

    #[test]
    fn generation_is_deterministic() {
        let spec = InstanceSpec::new(Family::RandomDense, 3, 2, 7);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = InstanceSpec { seed: 8, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn structured_families() {
        let l = MatrixSpace::canonical_basis(&strict_upper(3)).unwrap();
        assert_eq!(l.dim(), 3);
        assert!(l.power(3).is_zero());
        assert_eq!(strict_upper(4).len(), 6);
        let sk = MatrixSpace::canonical_basis(&shift_and_kill(2)).unwrap();
        assert_eq!(wielandt_index(&sk), Some(2));
    }

    #[test]
    fn invalid_specs() {
        let bad = InstanceSpec::new(Family::Custom, 3, 1, 0);
        assert!(matches!(generate(&bad), Err(GenError::InvalidSpec(_))));
        assert!(generate(&InstanceSpec::new(Family::RandomDense, 0, 1, 0)).is_err());
        assert!(generate(&InstanceSpec::new(Family::RandomDense, 2, 0, 0)).is_err());
        assert!("no_such".parse::<Family>().is_err());
        assert_eq!("strict_upper".parse::<Family>().unwrap(), Family::StrictUpper);
    }

    #[test]
    fn nilpotent_family_is_nilpotent() {
        let spec = InstanceSpec::new(Family::NilpotentGenerators, 4, 3, 11);
        for g in generate(&spec).unwrap() {
            assert!(nilpotency_index(&g).is_some());
        }
    }

    #[test]
    fn searches() {
        assert!(search_nilpotent_generators(3, 0, 1).is_empty());
        assert!(search_nonmonotone(3, 0, 1).is_empty());
        let hits = search_nonmonotone(3, 20, 1);
        assert_eq!(hits[0].1, 1);
        assert_eq!(hits, search_nonmonotone(3, 20, 1));
        for (l, j) in &hits {
            let seq = dim_sequence(l, 2 * 3 + 1);
            assert!(seq.dim_at(j + 1).unwrap() < seq.dim_at(*j).unwrap());
        }
        let found = search_nilpotent_generators(3, 20, 5);
        assert_eq!(found, search_nilpotent_generators(3, 20, 5));
        assert!(!found.is_empty());
        for hit in &found {
            assert!(is_primitive(&hit.space));
            assert!(hit.generators.iter().all(|g| nilpotency_index(g).is_some()));
        }
    }
}
