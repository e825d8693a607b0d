//! Compressed-row copies of model operators used by the integrators. The
//! public operator type stays dense; this only drops structural zeros.

use num_complex::Complex64;

use crate::hilbert::OperatorMatrix;

#[derive(Debug, Clone)]
pub(crate) struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl Csr {
    pub(crate) fn from_dense(op: &OperatorMatrix) -> Self {
        let n = op.dim();
        let e = op.entries();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..n {
                let v = e[[i, j]];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    #[cfg(test)]
    pub(crate) fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y += coeff * A x`
    #[inline]
    pub(crate) fn mul_add(&self, coeff: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi += coeff * acc;
        }
    }

    /// `y = A x`
    #[inline]
    pub(crate) fn mul_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    /// `||A x||^2` without allocating.
    pub(crate) fn apply_norm_sqr(&self, x: &[Complex64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            total += acc.norm_sqr();
        }
        total
    }

    /// `Y += coeff * A R` for a dense row-major `n x n` matrix `R`.
    pub(crate) fn left_mul_add(&self, coeff: Complex64, r: &[Complex64], y: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            let yrow = &mut y[i * n..(i + 1) * n];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let v = coeff * self.vals[k];
                let rrow = &r[self.cols[k] * n..(self.cols[k] + 1) * n];
                for (yv, rv) in yrow.iter_mut().zip(rrow) {
                    *yv += v * rv;
                }
            }
        }
    }

    /// `<x|A|x>`
    pub(crate) fn expect(&self, x: &[Complex64]) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..self.n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            total += x[i].conj() * acc;
        }
        total
    }

    /// Nonzero `(row, col)` pairs.
    pub(crate) fn pattern(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{annihilation_op, transition_op, HilbertSpec};

    #[test]
    fn matches_dense_product() {
        let s = HilbertSpec::new([("t", 3), ("c", 3)]).unwrap();
        let a = annihilation_op(&s, "c").unwrap();
        let x = transition_op(&s, "t", 2, 1).unwrap();
        let op = &(&a * &x) + &x.adjoint();
        let csr = Csr::from_dense(&op);
        assert_eq!(csr.nnz(), op.nonzero_count());
        let v: Vec<Complex64> = (0..9).map(|k| Complex64::new(k as f64, 1.0 - k as f64)).collect();
        let mut y = vec![Complex64::new(0.0, 0.0); 9];
        csr.mul_into(&v, &mut y);
        let dense = op.entries().dot(&ndarray::Array1::from(v.clone()));
        for (a, b) in y.iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        let nrm: f64 = dense.iter().map(|c| c.norm_sqr()).sum();
        assert!((csr.apply_norm_sqr(&v) - nrm).abs() < 1e-9);
    }
}
