//! Morphisms between documents as boolean relations over their QA sets.
//! Composition is boolean matrix multiplication; labels are part of the type
//! so relations over mismatched QA populations cannot be composed.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::QAId;

/// An n×m boolean matrix relating m source QAs (columns) to n target QAs
/// (rows), stored as packed bitset rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    bits: Vec<u64>,
    pub row_labels: Vec<QAId>,
    pub col_labels: Vec<QAId>,
}

impl Relation {
    /// All-zero relation with the given labels.
    pub fn new(row_labels: Vec<QAId>, col_labels: Vec<QAId>) -> Self {
        let rows = row_labels.len();
        let cols = col_labels.len();
        let words_per_row = cols.div_ceil(64).max(1);
        Relation {
            rows,
            cols,
            words_per_row,
            bits: vec![0; rows * words_per_row],
            row_labels,
            col_labels,
        }
    }

    /// The naive morphism: all source assertions map to nothing and all
    /// target assertions come from nothing.
    pub fn naive(row_labels: Vec<QAId>, col_labels: Vec<QAId>) -> Self {
        Relation::new(row_labels, col_labels)
    }

    pub fn identity(labels: Vec<QAId>) -> Self {
        let mut rel = Relation::new(labels.clone(), labels);
        for i in 0..rel.rows {
            rel.set(i, i);
        }
        rel
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn set(&mut self, row: usize, col: usize) {
        assert!(row < self.rows && col < self.cols);
        self.bits[row * self.words_per_row + col / 64] |= 1u64 << (col % 64);
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols);
        self.bits[row * self.words_per_row + col / 64] & (1u64 << (col % 64)) != 0
    }

    fn row_words(&self, row: usize) -> &[u64] {
        &self.bits[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    /// Boolean matrix product: (g∘f)[i][j] = ∨ₖ g[i][k] ∧ f[k][j].
    pub fn compose(g: &Relation, f: &Relation) -> Result<Relation> {
        if g.cols != f.rows {
            return Err(Error::DimensionMismatch);
        }
        if g.col_labels != f.row_labels {
            return Err(Error::LabelMismatch);
        }
        let mut out = Relation::new(g.row_labels.clone(), f.col_labels.clone());
        for i in 0..g.rows {
            let start = i * out.words_per_row;
            for k in 0..g.cols {
                if g.get(i, k) {
                    let f_row = f.row_words(k);
                    for (w, word) in f_row.iter().enumerate() {
                        out.bits[start + w] |= word;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Counts of nonzero columns (source assertions mapped to something) and
    /// nonzero rows (target assertions coming from something).
    pub fn coverage(&self) -> (usize, usize) {
        let source_covered = (0..self.cols)
            .filter(|&j| (0..self.rows).any(|i| self.get(i, j)))
            .count();
        let target_covered = (0..self.rows)
            .filter(|&i| self.row_words(i).iter().any(|w| *w != 0))
            .count();
        (source_covered, target_covered)
    }

    /// h2 dominates h1 when its coverage is componentwise ≥ with at least one
    /// strict inequality: fewer assertions map to or from nothing.
    pub fn dominates(h2: &Relation, h1: &Relation) -> Result<bool> {
        if h2.rows != h1.rows || h2.cols != h1.cols {
            return Err(Error::DimensionMismatch);
        }
        if h2.row_labels != h1.row_labels || h2.col_labels != h1.col_labels {
            return Err(Error::LabelMismatch);
        }
        let (s2, t2) = h2.coverage();
        let (s1, t1) = h1.coverage();
        Ok(s2 >= s1 && t2 >= t1 && (s2 > s1 || t2 > t1))
    }

    /// total: every column nonzero; surjective: every row nonzero.
    pub fn totality_check(&self) -> (bool, bool) {
        let (source_covered, target_covered) = self.coverage();
        (source_covered == self.cols, target_covered == self.rows)
    }

    /// Text dump: first line "n m", then n rows of 0/1 characters.
    pub fn dump(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push(if self.get(i, j) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn nonzero(&self) -> BTreeSet<(usize, usize)> {
        (0..self.rows)
            .flat_map(|i| (0..self.cols).filter(move |&j| self.get(i, j)).map(move |j| (i, j)))
            .collect()
    }
}
