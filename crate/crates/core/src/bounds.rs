//! Exact integer evaluation of the logarithmic bounds.
//!
//! Every comparison against `log₂` is decided by raising both sides to an
//! integer power, so no floating-point rounding enters a bound check.

use num_bigint::BigInt;
use num_traits::{One, Pow};

/// `⌊2·D²·(6 + log₂ D)⌋`, the exponent at which a primitive space is
/// guaranteed to be full.
pub fn theorem_bound(d: usize) -> u64 {
    assert!(d >= 1, "dimension must be positive");
    let d2 = (d * d) as u64;
    // ⌊2D² log₂ D⌋ = ⌊log₂ D^(2D²)⌋ = bits(D^(2D²)) − 1.
    let big = Pow::pow(BigInt::from(d), 2 * d2);
    12 * d2 + (big.bits() - 1)
}

/// Decides `p/q ≤ log₂(m/n)` for `q, m, n > 0`.
pub fn le_log2(p: i64, q: u64, m: u64, n: u64) -> bool {
    assert!(q > 0 && m > 0 && n > 0);
    let q32 = u32::try_from(q).expect("exponent fits in u32");
    let mq: BigInt = Pow::pow(BigInt::from(m), q32);
    let nq: BigInt = Pow::pow(BigInt::from(n), q32);
    if p >= 0 {
        let two_p: BigInt = BigInt::one() << p as usize;
        two_p * nq <= mq
    } else {
        let two_p: BigInt = BigInt::one() << (-p) as usize;
        nq <= mq * two_p
    }
}

/// `λ·ρ ≤ D·(1 + log₂(D/ρ))`, the square-zero witness bound.
pub fn square_zero_bound_holds(lambda: usize, rho: usize, d: usize) -> bool {
    if rho == 0 || d == 0 {
        return false;
    }
    let p = (lambda * rho) as i64 - d as i64;
    le_log2(p, d as u64, d as u64, rho as u64)
}

/// `Λ ≤ (D/R)·(3 + log₂(D/R))`, the non-nilpotent witness bound.
pub fn nonnilpotent_bound_holds(level: usize, rank: usize, d: usize) -> bool {
    if rank == 0 || d == 0 {
        return false;
    }
    let p = (level * rank) as i64 - 3 * d as i64;
    le_log2(p, d as u64, d as u64, rank as u64)
}

/// `⌈log₂ D⌉ + 1`, the longest possible chain of halving steps.
pub fn max_chain_length(d: usize) -> usize {
    let mut c = 0;
    while (1usize << c) < d {
        c += 1;
    }
    c + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Floating-point reference; only trusted away from integer boundaries.
    fn float_bound(d: usize) -> f64 {
        let d = d as f64;
        2.0 * d * d * (6.0 + d.log2())
    }

    #[test]
    fn theorem_bound_values() {
        assert_eq!(theorem_bound(1), 12);
        assert_eq!(theorem_bound(2), 56);
        assert_eq!(theorem_bound(4), 256);
        assert_eq!(theorem_bound(3), 136);
        assert_eq!(theorem_bound(5), 416);
        assert_eq!(theorem_bound(6), 618);
        for d in 1..=40 {
            let f = float_bound(d);
            if (f - f.round()).abs() > 1e-6 {
                assert_eq!(theorem_bound(d), f.floor() as u64, "d = {d}");
            }
        }
    }

    #[test]
    fn log_comparisons() {
        // 1 ≤ log2(2), 2 ≤ log2(4), not 3 ≤ log2(7)
        assert!(le_log2(1, 1, 2, 1));
        assert!(le_log2(2, 1, 4, 1));
        assert!(!le_log2(3, 1, 7, 1));
        // -1 ≤ log2(1/2) with equality; -2 > log2(1/2) false direction
        assert!(le_log2(-1, 1, 1, 2));
        assert!(!le_log2(0, 1, 1, 2));
        // 3/2 ≤ log2(3) ≈ 1.585
        assert!(le_log2(3, 2, 3, 1));
        assert!(!le_log2(8, 5, 3, 1));
    }

    #[test]
    fn witness_bounds() {
        // λρ ≤ D(1 + log2(D/ρ)): D=2, ρ=1 allows λ ≤ 4.
        assert!(square_zero_bound_holds(4, 1, 2));
        assert!(!square_zero_bound_holds(5, 1, 2));
        // D=3, ρ=1: 3(1+log2 3) ≈ 7.75.
        assert!(square_zero_bound_holds(7, 1, 3));
        assert!(!square_zero_bound_holds(8, 1, 3));
        // Λ ≤ (D/R)(3 + log2(D/R)): D=2, R=1 allows 8.
        assert!(nonnilpotent_bound_holds(8, 1, 2));
        assert!(!nonnilpotent_bound_holds(9, 1, 2));
        assert!(nonnilpotent_bound_holds(3, 4, 4));
        assert!(!nonnilpotent_bound_holds(4, 4, 4));
    }

    #[test]
    fn chain_lengths() {
        assert_eq!(max_chain_length(1), 1);
        assert_eq!(max_chain_length(2), 2);
        assert_eq!(max_chain_length(3), 3);
        assert_eq!(max_chain_length(4), 3);
        assert_eq!(max_chain_length(5), 4);
    }
}
