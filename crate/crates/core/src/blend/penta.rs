//! LDLᵀ factorization of symmetric positive definite pentadiagonal matrices.

use crate::error::{Error, Result};

/// Symmetric pentadiagonal matrix stored by diagonals.
#[derive(Debug, Clone)]
pub(crate) struct SymPenta {
    /// `a[i] = A[i][i]`
    pub diag: Vec<f64>,
    /// `b[i] = A[i][i+1]`, length `n - 1` (padded to `n`)
    pub off1: Vec<f64>,
    /// `c[i] = A[i][i+2]`, length `n - 2` (padded to `n`)
    pub off2: Vec<f64>,
}

impl SymPenta {
    pub fn identity(n: usize) -> Self {
        Self {
            diag: vec![1.0; n],
            off1: vec![0.0; n],
            off2: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    /// Adds `v` to `A[p][q]` and `A[q][p]` (once each); `p <= q <= p + 2`.
    pub fn add_upper(&mut self, p: usize, q: usize, v: f64) {
        match q - p {
            0 => self.diag[p] += v,
            1 => self.off1[p] += v,
            2 => self.off2[p] += v,
            _ => unreachable!("entry outside the band"),
        }
    }

    pub fn factor(&self) -> Result<PentaLdl> {
        let n = self.len();
        let mut d = vec![0.0; n];
        let mut l1 = vec![0.0; n];
        let mut l2 = vec![0.0; n];
        for i in 0..n {
            let mut di = self.diag[i];
            if i >= 2 {
                l2[i] = self.off2[i - 2] / d[i - 2];
                di -= l2[i] * l2[i] * d[i - 2];
            }
            if i >= 1 {
                let mut b = self.off1[i - 1];
                if i >= 2 {
                    b -= l2[i] * l1[i - 1] * d[i - 2];
                }
                l1[i] = b / d[i - 1];
                di -= l1[i] * l1[i] * d[i - 1];
            }
            if !(di > 0.0 && di.is_finite()) {
                return Err(Error::Solver(format!(
                    "pentadiagonal system is not positive definite (pivot {i} = {di})"
                )));
            }
            d[i] = di;
        }
        Ok(PentaLdl { d, l1, l2 })
    }
}

/// `A = L D Lᵀ` with `L` unit lower triangular of bandwidth 2.
#[derive(Debug, Clone)]
pub(crate) struct PentaLdl {
    d: Vec<f64>,
    /// `L[i][i-1]`
    l1: Vec<f64>,
    /// `L[i][i-2]`
    l2: Vec<f64>,
}

impl PentaLdl {
    /// Solves `A x = rhs` in place.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.d.len();
        for i in 1..n {
            let mut u = rhs[i] - self.l1[i] * rhs[i - 1];
            if i >= 2 {
                u -= self.l2[i] * rhs[i - 2];
            }
            rhs[i] = u;
        }
        for i in 0..n {
            rhs[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut x = rhs[i];
            if i + 1 < n {
                x -= self.l1[i + 1] * rhs[i + 1];
            }
            if i + 2 < n {
                x -= self.l2[i + 2] * rhs[i + 2];
            }
            rhs[i] = x;
        }
    }
}
