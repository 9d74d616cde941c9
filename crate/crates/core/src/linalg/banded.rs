use super::Scalar;
use crate::error::{Error, Result};

/// Square banded matrix with `kl` sub- and `ku` super-diagonals.
///
/// Rows are stored with `kl` extra super-diagonals of headroom so the LU
/// factorization with row interchanges can run in place.
#[derive(Debug, Clone)]
pub struct BandedMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandedMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![T::zero(); n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            T::zero()
        }
    }

    /// Adds `v` at `(i, j)`.
    ///
    /// # Panics
    /// If `(i, j)` lies outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band ({}, {})", self.kl, self.ku);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, out) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = T::zero();
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                acc += self.data[self.idx(i, j)] * *xj;
            }
            *out = acc;
        }
    }

    /// LU factorization with partial pivoting.
    pub fn factor(mut self) -> Result<BandedLu<T>> {
        let n = self.n;
        let kl = self.kl;
        let span = self.kl + self.ku;
        let mut pivots = vec![0usize; n];
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.modulus()));
        let tiny = scale * f64::EPSILON * 1e-3;

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].modulus();
            for i in k + 1..=last_row {
                let m = self.data[self.idx(i, k)].modulus();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(Error::SingularSystem { row: k });
            }
            pivots[k] = p;
            let last_col = (k + span).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..=last_col {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= l * kj;
                }
            }
        }
        Ok(BandedLu { lu: self, pivots })
    }
}

/// Factors produced by [`BandedMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    lu: BandedMatrix<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn dim(&self) -> usize {
        self.lu.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let lu = &self.lu;
        let n = lu.n;
        assert_eq!(b.len(), n);
        let span = lu.kl + lu.ku;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk == T::zero() {
                continue;
            }
            for (i, bi) in b.iter_mut().enumerate().take((k + lu.kl).min(n - 1) + 1).skip(k + 1) {
                *bi -= lu.data[lu.idx(i, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for (j, bj) in b.iter().enumerate().take((k + span).min(n - 1) + 1).skip(k + 1) {
                acc -= lu.data[lu.idx(k, j)] * *bj;
            }
            b[k] = acc / lu.data[lu.idx(k, k)];
        }
    }

    /// Solves `Aᴴ x = b` in place with the same factors, so the computed
    /// inverse and its adjoint are exact adjoints of one another.
    pub fn solve_adjoint_in_place(&self, b: &mut [T]) {
        let lu = &self.lu;
        let n = lu.n;
        assert_eq!(b.len(), n);
        let span = lu.kl + lu.ku;
        for k in 0..n {
            let mut acc = b[k];
            for (j, bj) in b.iter().enumerate().take(k).skip(k.saturating_sub(span)) {
                acc -= lu.data[lu.idx(j, k)].conj() * *bj;
            }
            b[k] = acc / lu.data[lu.idx(k, k)].conj();
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for (i, bi) in b.iter().enumerate().take((k + lu.kl).min(n - 1) + 1).skip(k + 1) {
                acc -= lu.data[lu.idx(i, k)].conj() * *bi;
            }
            b[k] = acc;
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
        }
    }
}
