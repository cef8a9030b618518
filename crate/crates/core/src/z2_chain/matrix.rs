//! Dense bit-packed vectors and matrices over Z₂.
//!
//! Rows are packed into `u64` words. Elimination always picks the lowest
//! available pivot index first so that results do not depend on anything but
//! the input.

use std::collections::HashMap;
use std::fmt;

/// A vector over Z₂ stored as packed 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitRow {
    words: Vec<u64>,
    len: usize,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        Self { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn unit(len: usize, bit: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(bit, true);
        v
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b & 1 == 1 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range (len {})", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range (len {})", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn toggle(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range (len {})", self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Index of the lowest set bit.
    pub fn lowest(&self) -> Option<usize> {
        self.words.iter().enumerate().find(|(_, &w)| w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Inner product over Z₂.
    pub fn dot(&self, other: &BitRow) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones()).sum::<u32>() % 2 == 1
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }
}

impl fmt::Debug for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        Ok(())
    }
}

/// A `rows × cols` matrix over Z₂ in row-major packed form.
#[derive(Clone, PartialEq, Eq)]
pub struct Z2Matrix {
    rows: usize,
    cols: usize,
    data: Vec<BitRow>,
}

impl Z2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![BitRow::zeros(cols); rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from rows of 0/1 entries. All rows must share a length.
    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self { rows: rows.len(), cols, data: rows.iter().map(|r| BitRow::from_bits(r)).collect() }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[BitRow]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for i in c.ones() {
                m.set(i, j, true);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.data[r].set(c, value);
    }

    pub fn toggle(&mut self, r: usize, c: usize) {
        self.data[r].toggle(c);
    }

    pub fn row(&self, r: usize) -> &BitRow {
        &self.data[r]
    }

    pub fn column(&self, c: usize) -> BitRow {
        let mut v = BitRow::zeros(self.rows);
        for r in 0..self.rows {
            if self.get(r, c) {
                v.set(r, true);
            }
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(BitRow::is_zero)
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(BitRow::count_ones).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for (r, row) in self.data.iter().enumerate() {
            for c in row.ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// Matrix product `self · rhs` over Z₂.
    pub fn mul(&self, rhs: &Z2Matrix) -> Z2Matrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch: {}x{} · {}x{}", self.rows, self.cols, rhs.rows, rhs.cols);
        let mut out = Self::zeros(self.rows, rhs.cols);
        for (r, row) in self.data.iter().enumerate() {
            for k in row.ones() {
                out.data[r].xor_assign(&rhs.data[k]);
            }
        }
        out
    }

    /// Applies the matrix to a column vector.
    pub fn apply(&self, v: &BitRow) -> BitRow {
        assert_eq!(v.len(), self.cols);
        let mut out = BitRow::zeros(self.rows);
        for (r, row) in self.data.iter().enumerate() {
            if row.dot(v) {
                out.set(r, true);
            }
        }
        out
    }

    /// Rank over Z₂. The matrix itself is left untouched.
    pub fn rank(&self) -> usize {
        let mut rows = self.data.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(p) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(rank, p);
            let (head, tail) = rows.split_at_mut(rank + 1);
            let pivot = &head[rank];
            for row in tail.iter_mut() {
                if row.get(col) {
                    row.xor_assign(pivot);
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }

    /// Reduced row echelon form together with the pivot columns.
    pub fn rref(&self) -> (Z2Matrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| m.data[i].get(col)) else {
                continue;
            };
            m.data.swap(r, p);
            let pivot = m.data[r].clone();
            for (i, row) in m.data.iter_mut().enumerate() {
                if i != r && row.get(col) {
                    row.xor_assign(&pivot);
                }
            }
            pivots.push(col);
            r += 1;
        }
        (m, pivots)
    }

    /// A basis of the null space `{v : M v = 0}`, one vector per free column.
    pub fn kernel_basis(&self) -> Vec<BitRow> {
        let (reduced, pivots) = self.rref();
        let pivot_set: Vec<bool> = {
            let mut s = vec![false; self.cols];
            for &p in &pivots {
                s[p] = true;
            }
            s
        };
        (0..self.cols)
            .filter(|&c| !pivot_set[c])
            .map(|free| {
                let mut v = BitRow::unit(self.cols, free);
                for (i, &p) in pivots.iter().enumerate() {
                    if reduced.data[i].get(free) {
                        v.set(p, true);
                    }
                }
                v
            })
            .collect()
    }
}

impl fmt::Debug for Z2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Z2Matrix {}x{}", self.rows, self.cols)?;
        for row in &self.data {
            writeln!(f, "  {row:?}")?;
        }
        Ok(())
    }
}

/// Z₂ rank of a matrix.
pub fn rank_z2(m: &Z2Matrix) -> usize {
    m.rank()
}

/// Incrementally built echelon basis of a subspace that remembers, for every
/// stored row, which inserted generators it is a combination of.
///
/// Used to express vectors in a chosen basis, e.g. cocycles in a basis of
/// cohomology representatives.
#[derive(Clone, Debug)]
pub struct TrackedEchelon {
    len: usize,
    generators: usize,
    rows: Vec<(BitRow, Vec<usize>)>,
    by_pivot: HashMap<usize, usize>,
}

impl TrackedEchelon {
    pub fn new(len: usize) -> Self {
        Self { len, generators: 0, rows: Vec::new(), by_pivot: HashMap::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    /// Reduces `v` against the stored rows; returns the remainder and the
    /// generator combination that was subtracted.
    fn reduce(&self, v: &BitRow) -> (BitRow, BitRow) {
        let mut rem = v.clone();
        let mut combo = BitRow::zeros(self.generators);
        while let Some(p) = rem.lowest() {
            let Some(&idx) = self.by_pivot.get(&p) else {
                break;
            };
            let (row, gens) = &self.rows[idx];
            rem.xor_assign(row);
            for &g in gens {
                combo.toggle(g);
            }
        }
        (rem, combo)
    }

    /// Inserts a new generator. Returns `true` when it was independent of the
    /// generators inserted so far. Dependent generators still consume an index.
    pub fn insert(&mut self, v: &BitRow) -> bool {
        assert_eq!(v.len(), self.len);
        let gen = self.generators;
        self.generators += 1;
        let (rem, combo) = self.reduce(v);
        let Some(pivot) = rem.lowest() else {
            return false;
        };
        // fully reduced remainder: rem = v + Σ combo, so rem is generated by combo ∪ {gen}
        let mut gens: Vec<usize> = combo.ones().collect();
        gens.push(gen);
        self.by_pivot.insert(pivot, self.rows.len());
        self.rows.push((rem, gens));
        true
    }

    /// Expresses `v` as a combination of the inserted generators, or `None`
    /// when `v` lies outside their span.
    pub fn coordinates(&self, v: &BitRow) -> Option<BitRow> {
        let (rem, combo) = self.reduce(v);
        rem.is_zero().then_some(combo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        assert_eq!(rank_z2(&Z2Matrix::zeros(3, 3)), 0);
        assert_eq!(rank_z2(&Z2Matrix::identity(3)), 3);
        assert_eq!(rank_z2(&Z2Matrix::from_rows(&[vec![1, 1], vec![1, 1]])), 1);
    }

    #[test]
    fn rank_leaves_input_untouched() {
        let m = Z2Matrix::from_rows(&[vec![1, 0, 1], vec![1, 1, 0], vec![0, 1, 1]]);
        let before = m.clone();
        assert_eq!(m.rank(), 2);
        assert_eq!(m, before);
    }

    #[test]
    fn kernel_vectors_are_annihilated() {
        let m = Z2Matrix::from_rows(&[vec![1, 1, 0, 0], vec![0, 1, 1, 0]]);
        let ker = m.kernel_basis();
        assert_eq!(ker.len(), 2);
        for v in &ker {
            assert!(m.apply(v).is_zero());
        }
    }

    #[test]
    fn wide_rows_cross_word_boundary() {
        let mut m = Z2Matrix::zeros(2, 130);
        m.set(0, 0, true);
        m.set(0, 129, true);
        m.set(1, 129, true);
        assert_eq!(m.rank(), 2);
        assert!(m.get(0, 129));
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn tracked_echelon_coordinates() {
        let mut e = TrackedEchelon::new(3);
        assert!(e.insert(&BitRow::from_bits(&[1, 1, 0])));
        assert!(e.insert(&BitRow::from_bits(&[0, 1, 1])));
        assert!(!e.insert(&BitRow::from_bits(&[1, 0, 1])));
        let c = e.coordinates(&BitRow::from_bits(&[1, 0, 1])).unwrap();
        // generators 0 and 1 sum to the query
        assert!(c.get(0) && c.get(1) && !c.get(2));
        assert!(e.coordinates(&BitRow::from_bits(&[1, 0, 0])).is_none());
    }
}
