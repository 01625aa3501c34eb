//! All-pairs preference matrix and its aggregation into per-document scores.

use alloc::vec;
use alloc::vec::Vec;

use super::ScoreError;

/// `p[i][j]` is the probability that document `i` (shown first) is more
/// relevant than document `j` (shown second). The diagonal is never read.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseScoreMatrix {
    n: usize,
    p: Vec<f64>,
}

impl PairwiseScoreMatrix {
    /// Builds a matrix from the off-diagonal entries in row-major order,
    /// i.e. the order produced by [`ordered_pairs`].
    pub fn from_off_diagonal(n: usize, values: &[f64]) -> Result<Self, ScoreError> {
        if n < 2 {
            return Err(ScoreError::TooFewDocuments { n });
        }
        let expected = n * (n - 1);
        if values.len() != expected {
            return Err(ScoreError::Alignment {
                expected,
                got: values.len(),
            });
        }
        let mut p = vec![f64::NAN; n * n];
        for ((i, j), &v) in ordered_pairs(n).zip(values) {
            if !(0.0..=1.0).contains(&v) {
                return Err(ScoreError::OutOfRange { first: i, second: j, value: v });
            }
            p[i * n + j] = v;
        }
        Ok(PairwiseScoreMatrix { n, p })
    }

    /// Builds a matrix from a dense row-major `n x n` table; the diagonal is
    /// ignored.
    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self, ScoreError> {
        if dense.len() != n * n {
            return Err(ScoreError::Alignment {
                expected: n * n,
                got: dense.len(),
            });
        }
        let off: Vec<f64> = ordered_pairs(n).map(|(i, j)| dense[i * n + j]).collect();
        Self::from_off_diagonal(n, &off)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)`; `None` on the diagonal or out of range.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        (i != j && i < self.n && j < self.n).then(|| self.p[i * self.n + j])
    }

    /// `similarity_i = sum over j != i of p[i][j] + (1 - p[j][i])`.
    ///
    /// Each document is credited when it wins as the first item and when its
    /// opponent loses as the first item.
    pub fn aggregate(&self) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| self.p[i * n + j] + (1.0 - self.p[j * n + i]))
                    .sum()
            })
            .collect()
    }
}

/// Every ordered pair `(i, j)` with `i != j`, row-major. Yields `n(n-1)` items.
pub fn ordered_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
}
