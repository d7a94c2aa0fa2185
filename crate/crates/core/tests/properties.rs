use proptest::prelude::*;

use spanlab::bounds::theorem_bound;
use spanlab::certify::{certify, verify_chain, RankOneEvidence};
use spanlab::gen::{generate, search_nilpotent_generators, search_nonmonotone, trial_seed, Family, InstanceSpec};
use spanlab::index::{dim_sequence, is_nilpotent_space, is_primitive, paz_index, scan_to_full, wielandt_index};
use spanlab::io::{InstanceFile, Report};
use spanlab::matspace::{Field, GaussRational as Q, Matrix, MatrixSpace};
use spanlab::oracle::{brute_force_dim, brute_force_index, OracleBudget};

fn matrix(d: usize) -> impl Strategy<Value = Matrix<Q>> {
    proptest::collection::vec(-2i64..=2, d * d)
        .prop_map(move |v| Matrix::from_flat(d, d, v.into_iter().map(Q::from_i64).collect()))
}

/// Generator lists with `d ≤ max_d`, `1 ≤ n ≤ 3`, not all zero.
fn generators(max_d: usize) -> impl Strategy<Value = Vec<Matrix<Q>>> {
    (1..=max_d, 1..=3usize)
        .prop_flat_map(|(d, n)| proptest::collection::vec(matrix(d), n))
        .prop_filter("nonzero", |g| g.iter().any(|m| !m.is_zero()))
}

/// Sparse generators, which are more often imprimitive or nilpotent.
fn sparse_generators(max_d: usize) -> impl Strategy<Value = Vec<Matrix<Q>>> {
    (2..=max_d, 1..=3usize)
        .prop_flat_map(|(d, n)| {
            proptest::collection::vec(
                proptest::collection::vec(prop_oneof![4 => Just(0i64), 1 => -2i64..=2], d * d)
                    .prop_map(move |v| Matrix::from_flat(d, d, v.into_iter().map(Q::from_i64).collect())),
                n,
            )
        })
        .prop_filter("nonzero", |g| g.iter().any(|m| !m.is_zero()))
}

fn span(g: &[Matrix<Q>]) -> MatrixSpace<Q> {
    MatrixSpace::canonical_basis(g).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonicalization_is_idempotent(g in generators(4)) {
        let l = span(&g);
        prop_assert_eq!(&span(&l.basis()), &l);
    }

    #[test]
    fn power_composition(g in generators(3), a in 1usize..4, b in 1usize..4) {
        let l = span(&g);
        prop_assert_eq!(l.power(a + b), l.power(a).product(&l.power(b)).unwrap());
    }

    #[test]
    fn product_dimension_bound(g in generators(4), h in generators(4)) {
        let d = g[0].rows();
        let h: Vec<Matrix<Q>> = h.into_iter().filter(|m| m.rows() == d).collect();
        prop_assume!(!h.is_empty() && h.iter().any(|m| !m.is_zero()));
        let (s, t) = (span(&g), span(&h));
        let p = s.product(&t).unwrap();
        prop_assert!(p.dim() <= (s.dim() * t.dim()).min(d * d));
    }

    #[test]
    fn engine_matches_brute_force(g in generators(4), k in 1usize..=6) {
        let budget = OracleBudget::default();
        let l = span(&g);
        prop_assert_eq!(l.power(k).dim(), brute_force_dim(&g, k, &budget).unwrap());
    }

    #[test]
    fn float_backend_agrees(g in generators(4), k in 1usize..=4) {
        let l = span(&g);
        let lf = l.map(spanlab::Field::to_c64);
        prop_assert_eq!(l.dim(), lf.dim());
        prop_assert_eq!(l.power(k).dim(), lf.power(k).dim());
    }

    #[test]
    fn absorption(g in generators(4)) {
        let l = span(&g);
        if let Some(j) = scan_to_full(&l, 40) {
            prop_assert!(l.power(j + 1).is_full());
            prop_assert!(l.power(j + 3).is_full());
        }
    }

    #[test]
    fn theorem_consistency(g in sparse_generators(4)) {
        let l = span(&g);
        let k = theorem_bound(l.d()) as usize;
        match wielandt_index(&l) {
            Some(i) => {
                prop_assert!(i as u64 <= theorem_bound(l.d()));
                prop_assert!(l.power(k).is_full());
            }
            None => prop_assert!(scan_to_full(&l, k).is_none()),
        }
    }

    #[test]
    fn paz_stabilization_is_permanent(g in sparse_generators(4)) {
        let l = span(&g);
        let (t, dim) = paz_index(&l);
        for s in 0..4 {
            prop_assert_eq!(l.cumulative(t + s).dim(), dim);
        }
        prop_assert_eq!(l.cumulative(t), l.cumulative(t + 3));
    }

    #[test]
    fn nilpotency_equivalence(g in sparse_generators(4)) {
        let l = span(&g);
        let d = l.d();
        let scanned = (1..=2 * d).any(|j| l.power(j).is_zero());
        prop_assert_eq!(scanned, is_nilpotent_space(&l));
    }

    #[test]
    fn wielandt_matches_brute_force_index(g in generators(3)) {
        let budget = OracleBudget { max_words: 1_000_000, k_max: 8 };
        prop_assume!((g.len() as u64).pow(budget.k_max as u32) <= budget.max_words);
        let l = span(&g);
        let brute = brute_force_index(&g, &budget).unwrap();
        match wielandt_index(&l) {
            Some(i) if i <= budget.k_max => prop_assert_eq!(brute, Some(i)),
            Some(_) => prop_assert_eq!(brute, None),
            None => prop_assert_eq!(brute, None),
        }
    }

    #[test]
    fn dim_sequence_records_drops_and_extinction(g in sparse_generators(4)) {
        let l = span(&g);
        let seq = dim_sequence(&l, 2 * l.d() + 1);
        for &(j, dim) in &seq.dims {
            prop_assert_eq!(dim, l.power(j).dim());
        }
        if let Some(j) = seq.first_drop() {
            prop_assert!(seq.dim_at(j + 1) < seq.dim_at(j));
        }
        if is_nilpotent_space(&l) {
            prop_assert_eq!(seq.dim_at(l.d()), Some(0));
        }
    }

    #[test]
    fn instance_files_round_trip(g in generators(4)) {
        let file = InstanceFile::from_exact(&g);
        let parsed = InstanceFile::parse(&file.to_json()).unwrap();
        prop_assert_eq!(&parsed, &file);
        let spanlab::matspace::AnySpace::Exact(l) = parsed.space(None).unwrap() else {
            panic!("string entries give the exact backend")
        };
        prop_assert_eq!(l, span(&g));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn certificates_verify_and_bound_the_index(g in generators(3)) {
        let l = span(&g);
        prop_assume!(!is_nilpotent_space(&l));
        let chain = certify(&l).unwrap();
        verify_chain(&l, &chain).unwrap();
        prop_assert_eq!(chain.is_primitive(), is_primitive(&l));
        if let Some(i) = wielandt_index(&l) {
            let claimed = chain.claimed_index_bound.unwrap();
            prop_assert!(i <= claimed);
            prop_assert!(claimed as u64 <= theorem_bound(l.d()));
        }
        let ranks = chain.square_zero_ranks();
        prop_assert!(ranks.windows(2).all(|w| 2 * w[1] <= w[0]));
        if let Some(r) = &chain.rank_one {
            let d = l.d();
            let m = r.m_dims();
            prop_assert!(m.windows(2).all(|w| w[0] == d || w[0] < w[1]));
            let target = r.s() * d;
            prop_assert!(r.tilde_dims().windows(2).all(|w| w[0] == target || w[0] < w[1]));
            if let RankOneEvidence::Native(rep) = r {
                for s in &rep.samples {
                    prop_assert_eq!(s.element.matrix.rank(), 1);
                    prop_assert_eq!(s.element.matrix.mul_vec(&s.v1), s.v2.clone());
                }
            }
        }
    }

    #[test]
    fn reports_round_trip(g in generators(3)) {
        let space = InstanceFile::from_exact(&g).space(None).unwrap();
        let r = spanlab::io::analyze_and_certify(&space, Some(6));
        prop_assert_eq!(Report::parse(&r.to_json()).unwrap(), r);
    }
}

#[test]
fn generation_and_searches_are_deterministic() {
    for family in [Family::RandomDense, Family::RandomSparse, Family::NilpotentGenerators] {
        for t in 0..10 {
            let spec = InstanceSpec::new(family, 3, 2, trial_seed(42, t));
            assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        }
    }
    assert_eq!(search_nonmonotone(3, 200, 9), search_nonmonotone(3, 200, 9));
    assert_eq!(search_nilpotent_generators(3, 50, 9), search_nilpotent_generators(3, 50, 9));
}

#[test]
fn search_hits_reverify() {
    for (l, j) in search_nonmonotone(4, 300, 3) {
        assert!(l.power(j + 1).dim() < l.power(j).dim());
    }
    for hit in search_nilpotent_generators(3, 60, 3) {
        for g in &hit.generators {
            assert!(g.pow(3).is_zero());
        }
        assert!(is_primitive(&span(&hit.generators)));
    }
}

#[test]
fn theorem_bound_matches_float_formula() {
    for d in 1..=40usize {
        let x = d as f64;
        let float = 2.0 * x * x * (6.0 + x.log2());
        let exact = theorem_bound(d);
        // The float value is within rounding of the exact one; away from
        // integers its floor must agree.
        if (float - float.round()).abs() > 1e-6 {
            assert_eq!(exact, float.floor() as u64, "d = {d}");
        } else {
            assert_eq!(exact, float.round() as u64, "d = {d}");
        }
    }
    assert_eq!([2, 3, 4, 5, 6].map(theorem_bound), [56, 136, 256, 416, 618]);
}
