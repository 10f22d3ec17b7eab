//! Minimal dense complex linear algebra.
//!
//! Everything downstream needs only small dense operations: matrix-vector
//! products against sensing operators, Kronecker products of DFT factors,
//! and eigendecompositions of Gram matrices whose side equals the user
//! count. A hand-rolled row-major matrix plus a cyclic Jacobi eigensolver
//! covers all of it without pulling in a BLAS-backed dependency.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::math;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::ONE);
        }
        m
    }

    /// Build from an entry function `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    /// Row `r` as a contiguous slice.
    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Mutable row `r`.
    pub fn row_mut(&mut self, r: usize) -> &mut [Complex64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols, "dimension mismatch");
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            out.push(dot(self.row(r), x));
        }
        out
    }

    /// `self^H * x` without materializing the adjoint.
    pub fn adjoint_mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.rows, "dimension mismatch");
        let mut out = vec![Complex64::ZERO; self.cols];
        for r in 0..self.rows {
            let xr = x[r];
            for (o, &m) in out.iter_mut().zip(self.row(r)) {
                *o += m.conj() * xr;
            }
        }
        out
    }

    /// `self * other`.
    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == Complex64::ZERO {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(r);
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &CMat) -> CMat {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        CMat::from_fn(rows, cols, |r, c| {
            self.get(r / other.rows, c / other.cols) * other.get(r % other.rows, c % other.cols)
        })
    }

    /// Squared Frobenius norm.
    pub fn frob_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entry magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Plain product `sum_i a_i * b_i` (no conjugation).
#[inline]
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex64::ZERO;
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Inner product `a^H b = sum_i conj(a_i) * b_i`.
#[inline]
pub fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex64::ZERO;
    for (&x, &y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

/// Squared Euclidean norm.
#[inline]
pub fn norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted in
/// descending order and eigenvector `i` stored in column `i`. Intended for
/// small matrices (Gram matrices with side equal to the user count); cost is
/// O(n^3) per sweep.
///
/// # Panics
///
/// Panics if the matrix is not square or departs from Hermitian symmetry by
/// more than a small tolerance relative to its norm.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    assert_eq!(a.rows, a.cols, "eigendecomposition needs a square matrix");
    let n = a.rows;
    let scale = math::sqrt(a.frob_norm_sq()).max(1.0);
    for r in 0..n {
        for c in r..n {
            let asym = (a.get(r, c) - a.get(c, r).conj()).norm();
            assert!(
                asym <= 1e-9 * scale,
                "matrix is not Hermitian within tolerance"
            );
        }
    }

    let mut m = a.clone();
    // Symmetrize exactly so rounding in the caller cannot accumulate.
    for r in 0..n {
        let d = m.get(r, r);
        m.set(r, r, Complex64::new(d.re, 0.0));
        for c in (r + 1)..n {
            let avg = (m.get(r, c) + m.get(c, r).conj()) * 0.5;
            m.set(r, c, avg);
            m.set(c, r, avg.conj());
        }
    }
    let mut v = CMat::identity(n);

    let off_sq = |m: &CMat| -> f64 {
        let mut s = 0.0;
        for r in 0..n {
            for c in (r + 1)..n {
                s += m.get(r, c).norm_sqr();
            }
        }
        s
    };

    let tol = 1e-30 * m.frob_norm_sq().max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        if off_sq(&m) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                let mag = apq.norm();
                if mag * mag <= tol / (n * n) as f64 {
                    continue;
                }
                // Absorb the phase of a_pq so the 2x2 block becomes real
                // symmetric, then apply the classic Jacobi rotation.
                let phase = apq / mag;
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + math::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + math::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = t * c;
                // Plane rotation G: G[p][p] = c, G[p][q] = s,
                // G[q][p] = -s * conj(phase), G[q][q] = c * conj(phase).
                let gqp = -s * phase.conj();
                let gqq = c * phase.conj();

                // m <- G^H m G: columns first, then rows.
                for r in 0..n {
                    let mp = m.get(r, p);
                    let mq = m.get(r, q);
                    m.set(r, p, mp * c + mq * gqp);
                    m.set(r, q, mp * s + mq * gqq);
                }
                for cidx in 0..n {
                    let mp = m.get(p, cidx);
                    let mq = m.get(q, cidx);
                    m.set(p, cidx, mp * c + mq * gqp.conj());
                    m.set(q, cidx, mp * s + mq * gqq.conj());
                }
                // v <- v G.
                for r in 0..n {
                    let vp = v.get(r, p);
                    let vq = v.get(r, q);
                    v.set(r, p, vp * c + vq * gqp);
                    v.set(r, q, vp * s + vq * gqq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));

    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| v.get(r, order[c]));
    (values, vectors)
}

/// Complete an orthonormal set to a full basis of `C^n`.
///
/// Standard basis vectors are orthonormalized against `basis` (and against
/// already accepted vectors) in index order, skipping candidates whose
/// residual is numerically zero, until `n - basis.len()` vectors have been
/// produced. The deterministic visiting order makes the completion
/// reproducible.
pub fn orthonormal_complement(basis: &[Vec<Complex64>], n: usize) -> Vec<Vec<Complex64>> {
    for b in basis {
        assert_eq!(b.len(), n, "basis vector length mismatch");
    }
    let want = n - basis.len();
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(want);
    for j in 0..n {
        if out.len() == want {
            break;
        }
        let mut u = vec![Complex64::ZERO; n];
        u[j] = Complex64::ONE;
        // Two Gram-Schmidt passes keep the result orthonormal to working
        // precision even for nearly dependent candidates.
        for _ in 0..2 {
            for b in basis.iter().chain(out.iter()) {
                let coeff = dot_conj(b, &u);
                for (ui, bi) in u.iter_mut().zip(b) {
                    *ui -= coeff * bi;
                }
            }
        }
        let norm = math::sqrt(norm_sq(&u));
        if norm > 1e-8 {
            for ui in u.iter_mut() {
                *ui /= norm;
            }
            out.push(u);
        }
    }
    assert_eq!(
        out.len(),
        want,
        "input vectors were not linearly independent"
    );
    out
}
