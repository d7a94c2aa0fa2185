//! Word bases of successive powers.
//!
//! Level `j` holds a basis of `L^j` whose members are single words. It is
//! grown greedily: the candidates `b·g` (basis word `b` of level `j−1`,
//! generator `g`) are tried in lexicographic order and kept when they enlarge
//! the span. Every word of length `j` then lies in the span of basis words
//! that are lexicographically no larger than it, so the first basis word with
//! a given nonvanishing property is also the lex-least word with it.
//!
//! Once some level `j₀` is the whole matrix algebra, matrices at deeper
//! levels `j₀ + m` are rewritten as `X = Σ_k (X·K_k)·U_k`, where the `U_k`
//! are words of length `m` whose rows span `F^D`. Each `X·K_k` is then
//! expressed at level `j₀`. This keeps coefficients small and avoids
//! building large exact echelons for levels that are already known to be
//! full.

use std::collections::BTreeMap;

use super::word::{merge_terms, SpanElement, Term, Word};
use crate::matspace::{linalg, Echelon, Field, Matrix};

#[derive(Debug, Clone)]
struct Level<F> {
    words: Vec<Word>,
    matrices: Vec<Matrix<F>>,
    echelon: Echelon<F>,
}

#[derive(Debug, Clone)]
pub struct WordTower<F> {
    d: usize,
    /// Length, over the original generators, of one tower letter.
    unit: usize,
    letters: Vec<(Word, Matrix<F>)>,
    levels: Vec<Level<F>>,
    /// Row covers by word length, `None` when the rows of that power do not
    /// span `F^D`.
    covers: BTreeMap<usize, Option<RowCover<F>>>,
}

/// Words of one length whose selected rows form an invertible matrix `S`.
#[derive(Debug, Clone)]
struct RowCover<F> {
    /// `(word, value, row index)` for each row of `S`.
    rows: Vec<(Word, Matrix<F>, usize)>,
    inverse: Matrix<F>,
}

impl<F: Field> WordTower<F> {
    /// Tower over the original generators `A_0, …, A_{n−1}`.
    pub fn over_generators(generators: &[Matrix<F>]) -> Self {
        let letters = generators.iter().enumerate().map(|(i, m)| (Word::letter(i), m.clone())).collect();
        Self::over_letters(1, letters)
    }

    /// Tower whose letters are themselves words of length `unit`, e.g. a word
    /// basis of `L^Λ`.
    pub fn over_letters(unit: usize, letters: Vec<(Word, Matrix<F>)>) -> Self {
        let d = letters.first().map(|(_, m)| m.rows()).expect("at least one letter");
        assert!(letters.iter().all(|(w, _)| w.len() == unit), "letters must have length `unit`");
        WordTower { d, unit, letters, levels: Vec::new(), covers: BTreeMap::new() }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    pub fn letters(&self) -> &[(Word, Matrix<F>)] {
        &self.letters
    }

    /// Number of levels computed so far.
    pub fn computed(&self) -> usize {
        self.levels.len()
    }

    fn ensure(&mut self, j: usize) {
        assert!(j >= 1, "levels start at 1");
        let full = self.d * self.d;
        while self.levels.len() < j {
            let mut next = Level { words: Vec::new(), matrices: Vec::new(), echelon: Echelon::tracked(full) };
            match self.levels.last() {
                None => {
                    for (w, m) in &self.letters {
                        if !m.is_zero() && next.echelon.insert(m.as_flat()) {
                            next.words.push(w.clone());
                            next.matrices.push(m.clone());
                        }
                    }
                }
                Some(prev) => {
                    'outer: for (bw, bm) in prev.words.iter().zip(&prev.matrices) {
                        for (gw, gm) in &self.letters {
                            let c = bm.mul(gm);
                            if !c.is_zero() && next.echelon.insert(c.as_flat()) {
                                next.words.push(bw.concat(gw));
                                next.matrices.push(c);
                                if next.echelon.is_full() {
                                    break 'outer;
                                }
                            }
                        }
                    }
                }
            }
            self.levels.push(next);
        }
    }

    /// Basis words of tower level `j` (words of length `j·unit`) with their
    /// values, in lexicographic order.
    pub fn level(&mut self, j: usize) -> (&[Word], &[Matrix<F>]) {
        self.ensure(j);
        let l = &self.levels[j - 1];
        (&l.words, &l.matrices)
    }

    /// Canonical (reduced row-echelon) basis of the span of level `j`.
    pub fn canonical_basis(&mut self, j: usize) -> Vec<Matrix<F>> {
        self.ensure(j);
        let d = self.d;
        self.levels[j - 1].echelon.basis().map(|r| Matrix::from_flat(d, d, r.to_vec())).collect()
    }

    pub fn dim(&mut self, j: usize) -> usize {
        self.ensure(j);
        self.levels[j - 1].words.len()
    }

    /// Whether tower levels `a` and `b` span the same space.
    pub fn same_span(&mut self, a: usize, b: usize) -> bool {
        self.ensure(a.max(b));
        let (ea, eb) = (&self.levels[a - 1].echelon, &self.levels[b - 1].echelon);
        if ea.rank() != eb.rank() || !ea.pivots().eq(eb.pivots()) {
            return false;
        }
        ea.basis().zip(eb.basis()).all(|(x, y)| {
            let scale = crate::matspace::linalg::vec_scale(x).max(1.0);
            x.iter().zip(y).all(|(p, q)| p.minus(q).is_negligible(scale))
        })
    }

    /// First full level among the first `up_to`, building levels only until
    /// one is full.
    fn first_full(&mut self, up_to: usize) -> Option<usize> {
        for j in 1..=up_to {
            self.ensure(j);
            if self.levels[j - 1].echelon.is_full() {
                return Some(j);
            }
        }
        None
    }

    fn cover(&mut self, m: usize, full: usize) -> Option<RowCover<F>> {
        if let Some(c) = self.covers.get(&m) {
            return c.clone();
        }
        let candidates: Vec<(Word, Matrix<F>)> = if m <= full {
            let (words, mats) = self.level(m);
            words.iter().cloned().zip(mats.iter().cloned()).collect()
        } else {
            let mut tails: Vec<(Word, Matrix<F>)> = Vec::new();
            for (tw, tm, _) in self.cover(m - full, full).iter().flat_map(|c| &c.rows) {
                if !tails.iter().any(|(w, _)| w == tw) {
                    tails.push((tw.clone(), tm.clone()));
                }
            }
            let (words, mats) = self.level(full);
            tails
                .iter()
                .flat_map(|(tw, tm)| words.iter().zip(mats).map(move |(w, a)| (w.concat(tw), a.mul(tm))))
                .collect()
        };
        let d = self.d;
        let mut e = Echelon::new(d);
        let mut rows = Vec::new();
        'outer: for (w, u) in candidates {
            for i in 0..d {
                if e.insert(u.row(i)) {
                    rows.push((w.clone(), u.clone(), i));
                    if e.is_full() {
                        break 'outer;
                    }
                }
            }
        }
        let cover = if e.is_full() {
            let s = Matrix::from_fn(d, d, |k, c| rows[k].1.get(rows[k].2, c).clone());
            linalg::inverse(&s).map(|inverse| RowCover { rows, inverse })
        } else {
            None
        };
        self.covers.insert(m, cover.clone());
        cover
    }

    /// Terms over the basis words of level `j` together with the matrix they
    /// rebuild.
    fn express_rebuilt(&mut self, j: usize, m: &Matrix<F>) -> Option<(Vec<Term<F>>, Matrix<F>)> {
        if let Some(full) = self.first_full(j - 1) {
            let cover = self.cover(j - full, full)?;
            let mut terms = Vec::new();
            let mut rebuilt = Matrix::zeros(self.d, self.d);
            for (k, (word, u, i)) in cover.rows.iter().enumerate() {
                let col = m.mul_vec(&cover.inverse.col(k));
                let y = Matrix::from_fn(self.d, self.d, |r, c| if c == *i { col[r].clone() } else { F::zero() });
                let (sub, sub_rebuilt) = self.express_rebuilt(full, &y)?;
                terms.extend(sub.into_iter().map(|t| Term { coeff: t.coeff, word: t.word.concat(word) }));
                rebuilt = rebuilt.add(&sub_rebuilt.mul(u));
            }
            return Some((merge_terms(terms), rebuilt));
        }
        self.ensure(j);
        let l = &self.levels[j - 1];
        let red = l.echelon.reduce(m.as_flat());
        if !red.in_span {
            return None;
        }
        let mut rebuilt = Matrix::zeros(self.d, self.d);
        let mut terms = Vec::new();
        for ((coeff, w), a) in red.coeffs.into_iter().zip(&l.words).zip(&l.matrices) {
            rebuilt.add_scaled(&coeff, a);
            terms.push(Term { coeff, word: w.clone() });
        }
        Some((merge_terms(terms), rebuilt))
    }

    /// Rewrites `m`, assumed to lie in tower level `j`, as a combination of
    /// words of length `j·unit`.
    pub fn express(&mut self, j: usize, m: &Matrix<F>) -> Option<Vec<Term<F>>> {
        self.express_rebuilt(j, m).filter(|(_, r)| r.approx_eq(m)).map(|(t, _)| t)
    }

    /// Shrinks a combination with more than `D³` terms by re-expressing its
    /// matrix. Float re-expressions that do not reproduce the matrix are
    /// discarded.
    pub fn compact(&mut self, e: SpanElement<F>) -> SpanElement<F> {
        let limit = self.d * self.d * self.d;
        if e.combination.len() <= limit || !e.level.is_multiple_of(self.unit) {
            return e;
        }
        match self.express(e.level / self.unit, &e.matrix) {
            Some(terms) => SpanElement { combination: terms, ..e },
            None => e,
        }
    }

    /// Product followed by [`compact`](Self::compact).
    pub fn mul(&mut self, a: &SpanElement<F>, b: &SpanElement<F>) -> SpanElement<F> {
        let p = a.mul(b);
        self.compact(p)
    }

    /// `a^k` for `k ≥ 1`, compacting after every factor.
    pub fn pow(&mut self, a: &SpanElement<F>, k: usize) -> SpanElement<F> {
        assert!(k >= 1);
        let mut acc = a.clone();
        for _ in 1..k {
            acc = self.mul(&acc, a);
        }
        acc
    }
}
