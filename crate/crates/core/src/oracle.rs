//! Brute-force reference computations.
//!
//! Everything here enumerates words literally and ranks them with a plain
//! dense elimination written for this module alone, so it shares no
//! reduction code with [`crate::matspace`].

use crate::matspace::{Field, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    /// Largest `n^k` the enumeration accepts.
    pub max_words: u64,
    /// Longest word length scanned by [`brute_force_index`].
    pub k_max: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_words: 1_000_000, k_max: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("{words} words at length {k} exceed the budget of {max}")]
    BudgetExceeded { k: usize, words: u64, max: u64 },
    #[error("no generators")]
    NoGenerators,
}

fn word_count(n: usize, k: usize) -> Option<u64> {
    (n as u64).checked_pow(u32::try_from(k).ok()?)
}

/// Rank of a list of equal-length rows by textbook Gaussian elimination.
fn dense_rank<F: Field>(mut rows: Vec<Vec<F>>) -> usize {
    let Some(width) = rows.first().map(Vec::len) else {
        return 0;
    };
    let scale = rows
        .iter()
        .flat_map(|r| r.iter().map(Field::magnitude))
        .fold(0.0, f64::max);
    let mut rank = 0;
    for col in 0..width {
        let Some(p) = (rank..rows.len()).find(|&i| !rows[i][col].is_negligible(scale)) else {
            continue;
        };
        rows.swap(rank, p);
        let inv = rows[rank][col].recip();
        let pivot: Vec<F> = rows[rank].iter().map(|x| x.times(&inv)).collect();
        for row in rows.iter_mut().skip(rank + 1) {
            let f = row[col].clone();
            if f.is_zero() {
                continue;
            }
            for (x, p) in row.iter_mut().zip(&pivot) {
                *x = x.minus(&f.times(p));
            }
        }
        rows[rank] = pivot;
        rank += 1;
    }
    rank
}

/// `dim L^k` for `L = span(generators)` by evaluating all `n^k` words.
pub fn brute_force_dim<F: Field>(
    generators: &[Matrix<F>],
    k: usize,
    budget: &OracleBudget,
) -> Result<usize, OracleError> {
    assert!(k >= 1, "word length must be positive");
    let n = generators.len();
    if n == 0 {
        return Err(OracleError::NoGenerators);
    }
    let words = word_count(n, k).unwrap_or(u64::MAX);
    if words > budget.max_words {
        return Err(OracleError::BudgetExceeded { k, words, max: budget.max_words });
    }
    let mut rows = Vec::with_capacity(words as usize);
    let mut digits = vec![0usize; k];
    loop {
        let mut product = generators[digits[0]].clone();
        for &i in &digits[1..] {
            product = product.mul(&generators[i]);
        }
        rows.push(product.into_flat());
        // Odometer increment, last position fastest.
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(dense_rank(rows));
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < n {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Least `k ≤ budget.k_max` with `dim L^k = D²`, by literal enumeration.
pub fn brute_force_index<F: Field>(
    generators: &[Matrix<F>],
    budget: &OracleBudget,
) -> Result<Option<usize>, OracleError> {
    let d = generators.first().ok_or(OracleError::NoGenerators)?.rows();
    for k in 1..=budget.k_max {
        if brute_force_dim(generators, k, budget)? == d * d {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matspace::GaussRational as Q;

    fn e(d: usize, i: usize, j: usize) -> Matrix<Q> {
        Matrix::unit(d, i - 1, j - 1)
    }

    #[test]
    fn brute_force_dim_examples() {
        let b = OracleBudget::default();
        assert_eq!(brute_force_dim(&[e(2, 1, 2), e(2, 2, 1)], 2, &b), Ok(2));
        let full: Vec<Matrix<Q>> = (1..=3).flat_map(|i| (1..=3).map(move |j| e(3, i, j))).collect();
        assert_eq!(brute_force_dim(&full, 1, &b), Ok(9));
        assert_eq!(brute_force_dim(&[e(3, 1, 2), e(3, 1, 3), e(3, 2, 3)], 3, &b), Ok(0));
    }

    #[test]
    fn brute_force_index_examples() {
        let b = OracleBudget::default();
        assert_eq!(brute_force_index(&[e(2, 1, 1), e(2, 1, 2), e(2, 2, 1)], &b), Ok(Some(2)));
        assert_eq!(brute_force_index(&[Matrix::<Q>::identity(2)], &b), Ok(None));
        let swap = Matrix::<Q>::from_i64_rows([[0, 1], [1, 0]]);
        assert_eq!(brute_force_index(&[swap, e(2, 1, 1)], &b), Ok(Some(2)));
    }

    #[test]
    fn budget_enforced() {
        let b = OracleBudget { max_words: 100, k_max: 10 };
        let gens = vec![e(2, 1, 1), e(2, 1, 2), e(2, 2, 1)];
        assert!(matches!(
            brute_force_dim(&gens, 5, &b),
            Err(OracleError::BudgetExceeded { k: 5, words: 243, max: 100 })
        ));
        let huge = OracleBudget::default();
        let four: Vec<Matrix<Q>> = (0..4).map(|_| Matrix::identity(5)).collect();
        assert!(brute_force_dim(&four, 10, &huge).is_err());
    }

    #[test]
    fn dense_rank_handles_dependencies() {
        let rows = vec![
            vec![Q::from_i64(1), Q::from_i64(2)],
            vec![Q::from_i64(2), Q::from_i64(4)],
            vec![Q::from_i64(0), Q::from_i64(0)],
        ];
        assert_eq!(dense_rank(rows), 1);
    }
}
