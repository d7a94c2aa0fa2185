use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::matspace::{Field, Matrix};

/// A product `A_{i₁}·A_{i₂}⋯A_{i_j}` of generators, evaluated left to right.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn letter(i: usize) -> Self {
        Word(vec![i])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Evaluates the word. Returns `None` on an out-of-range index or an
    /// empty word.
    pub fn eval<F: Field>(&self, generators: &[Matrix<F>]) -> Option<Matrix<F>> {
        let (first, rest) = self.0.split_first()?;
        let mut acc = generators.get(*first)?.clone();
        for &i in rest {
            acc = acc.mul(generators.get(i)?);
        }
        Some(acc)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{:?}", self.0)
    }
}

/// One summand `coeff · eval(word)` of a [`SpanElement`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term<F> {
    pub coeff: F,
    pub word: Word,
}

/// A matrix together with an explicit witness of membership in `L^level`:
/// `matrix = Σ coeff · eval(word)` with every word of length `level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Field + Serialize", deserialize = "F: Field + Deserialize<'de>"))]
pub struct SpanElement<F> {
    pub matrix: Matrix<F>,
    pub level: usize,
    pub combination: Vec<Term<F>>,
}

impl<F: Field> SpanElement<F> {
    pub fn from_word(word: Word, matrix: Matrix<F>) -> Self {
        SpanElement { level: word.len(), matrix, combination: vec![Term { coeff: F::one(), word }] }
    }

    pub fn scale(&self, c: &F) -> Self {
        SpanElement {
            matrix: self.matrix.scale(c),
            level: self.level,
            combination: self
                .combination
                .iter()
                .map(|t| Term { coeff: t.coeff.times(c), word: t.word.clone() })
                .collect(),
        }
    }

    /// Product with every pair of terms expanded; like words are merged.
    pub fn mul(&self, rhs: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.combination.len() * rhs.combination.len());
        for a in &self.combination {
            for b in &rhs.combination {
                terms.push(Term { coeff: a.coeff.times(&b.coeff), word: a.word.concat(&b.word) });
            }
        }
        SpanElement {
            matrix: self.matrix.mul(&rhs.matrix),
            level: self.level + rhs.level,
            combination: merge_terms(terms),
        }
    }

    /// Sum of two elements of the same level.
    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.level, rhs.level, "summands must share a level");
        let terms = self.combination.iter().chain(&rhs.combination).cloned().collect();
        SpanElement {
            matrix: self.matrix.add(&rhs.matrix),
            level: self.level,
            combination: merge_terms(terms),
        }
    }

    /// Converts scalars, e.g. exact to float.
    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> SpanElement<G> {
        SpanElement {
            matrix: self.matrix.map(&f),
            level: self.level,
            combination: self
                .combination
                .iter()
                .map(|t| Term { coeff: f(&t.coeff), word: t.word.clone() })
                .collect(),
        }
    }
}

/// Combines terms with equal words and drops zero coefficients. The output
/// is sorted by word.
pub fn merge_terms<F: Field>(terms: Vec<Term<F>>) -> Vec<Term<F>> {
    let mut merged: BTreeMap<Word, F> = BTreeMap::new();
    for t in terms {
        merged
            .entry(t.word)
            .and_modify(|c| c.add_assign_ref(&t.coeff))
            .or_insert(t.coeff);
    }
    merged
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(word, coeff)| Term { coeff, word })
        .collect()
}

/// Evaluates `Σ coeff · eval(word)` reusing shared prefixes between
/// consecutive (sorted) words. Returns `None` on a malformed word.
pub fn eval_combination<F: Field>(terms: &[Term<F>], generators: &[Matrix<F>]) -> Option<Matrix<F>> {
    let d = generators.first()?.rows();
    let mut order: Vec<&Term<F>> = terms.iter().collect();
    order.sort_by(|a, b| a.word.cmp(&b.word));
    let mut total = Matrix::zeros(d, d);
    // stack[i] = product of the first i+1 letters of `prev`.
    let mut stack: Vec<Matrix<F>> = Vec::new();
    let mut prev: &[usize] = &[];
    for t in order {
        let w = &t.word.0;
        if w.is_empty() {
            return None;
        }
        let common = prev.iter().zip(w).take_while(|(a, b)| a == b).count();
        stack.truncate(common);
        for &i in &w[common..] {
            let g = generators.get(i)?;
            let next = match stack.last() {
                Some(p) => p.mul(g),
                None => g.clone(),
            };
            stack.push(next);
        }
        total.add_scaled(&t.coeff, stack.last()?);
        prev = w;
    }
    Some(total)
}
