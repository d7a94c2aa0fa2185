//! Incremental reduced row-echelon accumulator.
//!
//! Vectors are inserted one at a time; the accumulator keeps its rows in
//! fully reduced form (pivot entry 1, zeros above and below every pivot),
//! sorted by pivot column. With tracking enabled each row also records its
//! coefficients over the accepted input vectors, so any member of the span
//! can be rewritten as a combination of the inputs.

use super::scalar::Field;

#[derive(Debug, Clone)]
struct Row<F> {
    pivot: usize,
    entries: Vec<F>,
    combo: Vec<F>,
}

#[derive(Debug, Clone)]
pub struct Echelon<F> {
    len: usize,
    rows: Vec<Row<F>>,
    track: bool,
    accepted: usize,
}

/// Result of reducing a vector against the accumulator.
#[derive(Debug, Clone)]
pub struct Reduction<F> {
    pub residual: Vec<F>,
    /// Coefficients over accepted inputs (empty without tracking).
    pub coeffs: Vec<F>,
    pub in_span: bool,
}

impl<F: Field> Echelon<F> {
    pub fn new(len: usize) -> Self {
        Echelon { len, rows: Vec::new(), track: false, accepted: 0 }
    }

    pub fn tracked(len: usize) -> Self {
        Echelon { len, rows: Vec::new(), track: true, accepted: 0 }
    }

    pub fn vector_len(&self) -> usize {
        self.len
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.len
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().map(|r| r.pivot)
    }

    /// Canonical rows in pivot order.
    pub fn basis(&self) -> impl Iterator<Item = &[F]> {
        self.rows.iter().map(|r| r.entries.as_slice())
    }

    pub fn into_basis(self) -> Vec<Vec<F>> {
        self.rows.into_iter().map(|r| r.entries).collect()
    }

    fn reduce_in_place(&self, v: &mut [F], coeffs: &mut [F]) {
        for row in &self.rows {
            if v[row.pivot].is_zero() {
                continue;
            }
            let f = v[row.pivot].clone();
            for (x, r) in v.iter_mut().zip(&row.entries).skip(row.pivot) {
                x.sub_mul_assign(&f, r);
            }
            v[row.pivot] = F::zero();
            if self.track {
                for (c, r) in coeffs.iter_mut().zip(&row.combo) {
                    c.sub_mul_assign(&f, r);
                }
            }
        }
    }

    /// Reduces `v` against the current rows. When tracking, `coeffs`
    /// satisfies `v - residual = Σ coeffs[t]·input[t]`.
    pub fn reduce(&self, v: &[F]) -> Reduction<F> {
        assert_eq!(v.len(), self.len, "vector length mismatch");
        let scale = super::linalg::vec_scale(v);
        let mut residual = v.to_vec();
        let mut neg = if self.track { vec![F::zero(); self.accepted] } else { Vec::new() };
        self.reduce_in_place(&mut residual, &mut neg);
        flush(&mut residual, scale);
        let in_span = residual.iter().all(Field::is_zero);
        let coeffs = neg.iter().map(Field::negated).collect();
        Reduction { residual, coeffs, in_span }
    }

    pub fn contains(&self, v: &[F]) -> bool {
        self.reduce(v).in_span
    }

    /// Inserts `v`; returns `true` if it enlarged the span. A rejected
    /// vector does not consume an input index.
    pub fn insert(&mut self, v: &[F]) -> bool {
        assert_eq!(v.len(), self.len, "vector length mismatch");
        if self.is_full() {
            return false;
        }
        let scale = super::linalg::vec_scale(v);
        let mut entries = v.to_vec();
        let mut combo = if self.track {
            let mut c = vec![F::zero(); self.accepted + 1];
            c[self.accepted] = F::one();
            c
        } else {
            Vec::new()
        };
        self.reduce_in_place(&mut entries, &mut combo);
        flush(&mut entries, scale);
        let Some(pivot) = entries.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = entries[pivot].recip();
        for x in entries.iter_mut().skip(pivot) {
            *x = x.times(&inv);
        }
        entries[pivot] = F::one();
        for c in combo.iter_mut() {
            *c = c.times(&inv);
        }
        if self.track {
            for row in &mut self.rows {
                row.combo.push(F::zero());
            }
            self.accepted += 1;
        }
        for row in &mut self.rows {
            if row.entries[pivot].is_zero() {
                continue;
            }
            let f = row.entries[pivot].clone();
            for (x, r) in row.entries.iter_mut().zip(&entries).skip(pivot) {
                x.sub_mul_assign(&f, r);
            }
            row.entries[pivot] = F::zero();
            for (x, r) in row.combo.iter_mut().zip(&combo) {
                x.sub_mul_assign(&f, r);
            }
        }
        let at = self.rows.partition_point(|r| r.pivot < pivot);
        self.rows.insert(at, Row { pivot, entries, combo });
        true
    }
}

/// Snaps float residue to exact zero. A no-op for exact scalars.
fn flush<F: Field>(v: &mut [F], scale: f64) {
    for x in v.iter_mut() {
        if !x.is_zero() && x.is_negligible(scale) {
            *x = F::zero();
        }
    }
}
