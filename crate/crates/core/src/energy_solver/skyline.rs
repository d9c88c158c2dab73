//! Symmetric envelope (skyline) storage with an in-place Cholesky factor.

use crate::{Error, Result};

/// Lower triangle of a symmetric matrix, row `i` stored from column
/// `first[i]` to the diagonal.
#[derive(Debug, Clone)]
pub(crate) struct Skyline {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl Skyline {
    /// `first[i] <= i` is the leftmost column that may be non-zero in row `i`.
    pub fn new(first: Vec<usize>) -> Self {
        let mut start = Vec::with_capacity(first.len() + 1);
        let mut len = 0;
        for (i, &f) in first.iter().enumerate() {
            debug_assert!(f <= i);
            start.push(len);
            len += i - f + 1;
        }
        start.push(len);
        Self {
            first,
            start,
            data: vec![0.0; len],
        }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// Largest diagonal entry (before factorization).
    pub fn max_diag(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.data[self.start[i + 1] - 1].abs())
            .fold(0.0, f64::max)
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[self.start[i]..self.start[i + 1]]
    }

    /// Adds `v` to entry `(i, j)` (and by symmetry `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(j >= self.first[i], "entry outside the envelope");
        self.data[self.start[i] + j - self.first[i]] += v;
    }

    /// Replaces the matrix by its Cholesky factor `L`.
    pub fn factor(&mut self) -> Result<()> {
        for i in 0..self.dim() {
            let fi = self.first[i];
            let si = self.start[i];
            for j in fi..i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                let sj = self.start[j];
                let li = &self.data[si + k0 - fi..si + j - fi];
                let lj = &self.data[sj + k0 - fj..sj + j - fj];
                let dot: f64 = li.iter().zip(lj).map(|(a, b)| a * b).sum();
                let diag = self.data[sj + j - fj];
                self.data[si + j - fi] = (self.data[si + j - fi] - dot) / diag;
            }
            let row = &self.data[si..si + i - fi];
            let sq: f64 = row.iter().map(|a| a * a).sum();
            let d = self.data[si + i - fi] - sq;
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Solver(format!(
                    "matrix is not positive definite at row {i} (pivot {d:.3e})"
                )));
            }
            self.data[si + i - fi] = d.sqrt();
        }
        Ok(())
    }

    /// Solves `L Lᵀ x = b` in place with a factored matrix.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let row = self.row(i);
            let dot: f64 = row[..i - fi].iter().zip(&b[fi..i]).map(|(a, x)| a * x).sum();
            b[i] = (b[i] - dot) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = self.row(i);
            b[i] /= row[i - fi];
            let xi = b[i];
            for (k, l) in row[..i - fi].iter().enumerate() {
                b[fi + k] -= l * xi;
            }
        }
    }
}
