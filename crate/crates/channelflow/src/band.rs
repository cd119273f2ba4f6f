//! Banded LU factorization with partial pivoting.
//!
//! Column-major band storage in the gbtrf layout: column j holds rows
//! j-(ku+kl) .. j+kl, so row pivoting can fill the extra kl superdiagonals.
//! Right-looking rank-1 updates run down contiguous column slices.

use crate::error::SolveError;
use crate::scalar::Scalar;
use num_traits::Float;

#[derive(Debug, Clone)]
pub struct BandMatrix<R> {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    /// ldab = 2 kl + ku + 1; entry (i, j) lives at data[j * ldab + (i - j + kl + ku)].
    data: Vec<R>,
}

pub struct BandLu<R> {
    mat: BandMatrix<R>,
    pivots: Vec<usize>,
}

impl<R: Scalar> BandMatrix<R> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, data: vec![R::zero(); ldab * n] }
    }

    #[inline]
    fn ldab(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        (j as isize - i as isize) <= self.ku as isize + self.kl as isize
            && (i as isize - j as isize) <= self.kl as isize
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: R) {
        debug_assert!(self.in_band(i, j), "entry ({i},{j}) outside band");
        let idx = j * self.ldab() + (i + self.kl + self.ku - j);
        self.data[idx] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> R {
        if !self.in_band(i, j) {
            return R::zero();
        }
        self.data[j * self.ldab() + (i + self.kl + self.ku - j)]
    }

    /// y = A x (over the significant band only).
    pub fn matvec(&self, x: &[R], y: &mut [R]) {
        let ldab = self.ldab();
        for v in y.iter_mut() {
            *v = R::zero();
        }
        for j in 0..self.n {
            let xj = x[j];
            if xj == R::zero() {
                continue;
            }
            let lo = j.saturating_sub(self.ku + self.kl);
            let hi = (j + self.kl).min(self.n - 1);
            let col = &self.data[j * ldab..];
            for i in lo..=hi {
                y[i] += col[i + self.kl + self.ku - j] * xj;
            }
        }
    }

    /// In-place LU with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu<R>, SolveError> {
        let n = self.n;
        let kl = self.kl;
        let ku = self.ku;
        let ldab = self.ldab();
        let width = kl + ku; // superdiagonal extent of U after pivoting
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            // pivot search in column k, rows k..=k+kl
            let hi = (k + kl).min(n - 1);
            let base = k * ldab + kl + ku - k;
            let mut p = k;
            let mut best = Float::abs(self.data[base + k]);
            for i in (k + 1)..=hi {
                let v = Float::abs(self.data[base + i]);
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[k] = p;
            if !(best > R::zero()) || !best.is_finite() {
                return Err(SolveError::SingularSystem { row: k });
            }
            let jmax = (k + width).min(n - 1);
            if p != k {
                // swap rows k and p across columns k..=jmax
                for j in k..=jmax {
                    let cb = j * ldab + kl + ku - j;
                    self.data.swap(cb + k, cb + p);
                }
            }
            // scale multipliers
            let piv = self.data[base + k];
            let inv = piv.recip();
            for i in (k + 1)..=hi {
                self.data[base + i] *= inv;
            }
            if k + 1 > hi {
                continue;
            }
            // rank-1 update of the trailing block, column by column
            let (lcol, rest) = self.data.split_at_mut((k + 1) * ldab);
            let lcol = &lcol[base + k + 1..base + hi + 1];
            for j in (k + 1)..=jmax {
                // position of entry (k, j) relative to the split at column k+1
                let cb = (j - k - 1) * ldab + (kl + ku + k - j);
                let ukj = rest[cb];
                if ukj == R::zero() {
                    continue;
                }
                let col = &mut rest[cb + 1..cb + 1 + (hi - k)];
                for (ci, li) in col.iter_mut().zip(lcol.iter()) {
                    *ci = *ci - *li * ukj;
                }
            }
        }
        Ok(BandLu { mat: self, pivots })
    }
}

impl<R: Scalar> BandLu<R> {
    /// Solve A x = b in place.
    pub fn solve(&self, b: &mut [R]) {
        let n = self.mat.n;
        let kl = self.mat.kl;
        let ku = self.mat.ku;
        let ldab = self.mat.ldab();
        // forward: apply P and L
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk == R::zero() {
                continue;
            }
            let hi = (k + kl).min(n - 1);
            let base = k * ldab + kl + ku - k;
            for i in (k + 1)..=hi {
                b[i] = b[i] - self.mat.data[base + i] * bk;
            }
        }
        // backward: U x = y
        for k in (0..n).rev() {
            let base = k * ldab + kl + ku - k;
            let xk = b[k] / self.mat.data[base + k];
            b[k] = xk;
            if xk == R::zero() {
                continue;
            }
            let lo = k.saturating_sub(kl + ku);
            for i in lo..k {
                b[i] = b[i] - self.mat.data[base + i] * xk;
            }
        }
    }
}
