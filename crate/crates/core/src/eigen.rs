//! Hermitian eigendecomposition by cyclic Jacobi rotations, and the matrix
//! functions built on it.
//!
//! Every spectral measure in the crate comes out of [`hermitian_eig`], so the
//! solver is deterministic: the rotation order is fixed, ties in the sorted
//! spectrum keep the column order of the final sweep, and real symmetric input
//! is diagonalized with real rotations (bitwise the same result on every run).

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, HermitianMatrix, C64};

/// Off-diagonal Frobenius norm at which a sweep stops, relative to `||H||_F`.
pub const JACOBI_TOLERANCE: f64 = 1e-13;
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
    sweeps: usize,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unitary matrix whose columns are the eigenvectors.
    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// `U diag(f(lambda)) U^†`.
    pub fn matrix_function(&self, f: impl Fn(f64) -> C64) -> Result<ComplexMatrix> {
        let mut values = Vec::with_capacity(self.dim());
        for &lambda in &self.eigenvalues {
            let v = f(lambda);
            if !v.is_finite() {
                return Err(Error::Domain(format!("function is not finite at eigenvalue {lambda}")));
            }
            values.push(v);
        }
        Ok(self.with_diagonal(&values))
    }

    /// `U diag(values) U^†` for values already evaluated on the spectrum.
    pub fn with_diagonal(&self, values: &[C64]) -> ComplexMatrix {
        let u = &self.eigenvectors;
        let scaled = ComplexMatrix::from_fn(u.rows(), u.cols(), |r, c| u[(r, c)] * values[c]);
        scaled.mul_adjoint(u)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let values: Vec<C64> = self.eigenvalues.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.with_diagonal(&values)
    }

    /// `U^† M U`.
    pub fn to_eigenbasis(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.eigenvectors.adjoint_mul(m).matmul(&self.eigenvectors)
    }

    /// `U M U^†`.
    pub fn from_eigenbasis(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.eigenvectors.matmul(m).mul_adjoint(&self.eigenvectors)
    }

    /// Smallest distance between consecutive eigenvalues (infinite for dim 1).
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

/// Scalar field the rotations run over: `f64` for real symmetric input,
/// `C64` otherwise.
trait JacobiScalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Mul<f64, Output = Self> {
    const ZERO: Self;
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
    fn real(self) -> f64;
    fn from_real(x: f64) -> Self;
}

impl JacobiScalar for f64 {
    const ZERO: f64 = 0.0;
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn conj(self) -> f64 {
        self
    }
    fn real(self) -> f64 {
        self
    }
    fn from_real(x: f64) -> f64 {
        x
    }
}

impl JacobiScalar for C64 {
    const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn conj(self) -> C64 {
        C64::conj(&self)
    }
    fn real(self) -> f64 {
        self.re
    }
    fn from_real(x: f64) -> C64 {
        C64::new(x, 0.0)
    }
}

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
///
/// Converges when the off-diagonal Frobenius norm drops to
/// `JACOBI_TOLERANCE * ||H||_F`; gives up after `JACOBI_MAX_SWEEPS`.
pub fn hermitian_eig(h: &HermitianMatrix) -> Result<EigenDecomposition> {
    let n = h.dim();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if !h.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let (values, vectors, sweeps) = if h.is_real() {
        let a: Vec<f64> = h.as_slice().iter().map(|z| z.re).collect();
        let (d, v, s) = jacobi(n, a)?;
        (d, v.into_iter().map(|x| C64::new(x, 0.0)).collect::<Vec<_>>(), s)
    } else {
        jacobi(n, h.as_slice().to_vec())?
    };

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their column order
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| vectors[r * n + order[c]]);
    Ok(EigenDecomposition { eigenvalues, eigenvectors, sweeps })
}

fn jacobi<T: JacobiScalar>(n: usize, mut a: Vec<T>) -> Result<(Vec<f64>, Vec<T>, usize)> {
    // eigenvectors are accumulated as rows of V^T so every update is contiguous
    let mut vt = vec![T::ZERO; n * n];
    for i in 0..n {
        vt[i * n + i] = T::from_real(1.0);
    }
    let total: f64 = a.iter().map(|x| x.modulus().powi(2)).sum::<f64>().sqrt();
    let target = JACOBI_TOLERANCE * total;
    let off_norm = |a: &[T]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += 2.0 * a[p * n + q].modulus().powi(2);
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= target {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::ConvergenceFailure { sweeps, residual: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let r = apq.modulus();
                if r == 0.0 {
                    continue;
                }
                let app = a[p * n + p].real();
                let aqq = a[q * n + q].real();
                if sweeps > 3 && app.abs() + 100.0 * r == app.abs() && aqq.abs() + 100.0 * r == aqq.abs() {
                    a[p * n + q] = T::ZERO;
                    a[q * n + p] = T::ZERO;
                    continue;
                }
                // apq = r * phase; the rotation acts on the real 2x2 block
                // [[app, r], [r, aqq]] after rephasing column q.
                let phase = apq * (1.0 / r);
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let cph = phase.conj();

                // rows p and q of G^† A; by Hermiticity they also give the
                // updated columns, and G only mixes columns p and q
                {
                    let (head, tail) = a.split_at_mut(q * n);
                    let row_p = &mut head[p * n..p * n + n];
                    let row_q = &mut tail[..n];
                    for (x, y) in row_p.iter_mut().zip(row_q.iter_mut()) {
                        let apk = *x;
                        let aqk = *y * phase;
                        *x = apk * c - aqk * s;
                        *y = apk * s + aqk * c;
                    }
                }
                for k in 0..n {
                    if k != p && k != q {
                        a[k * n + p] = a[p * n + k].conj();
                        a[k * n + q] = a[q * n + k].conj();
                    }
                }
                a[p * n + p] = T::from_real(app - t * r);
                a[q * n + q] = T::from_real(aqq + t * r);
                a[p * n + q] = T::ZERO;
                a[q * n + p] = T::ZERO;
                // rows of V^T: V <- V G
                {
                    let (head, tail) = vt.split_at_mut(q * n);
                    let row_p = &mut head[p * n..p * n + n];
                    let row_q = &mut tail[..n];
                    for (x, y) in row_p.iter_mut().zip(row_q.iter_mut()) {
                        let vp = *x;
                        let vq = *y * cph;
                        *x = vp * c - vq * s;
                        *y = vp * s + vq * c;
                    }
                }
            }
        }
    }
    // back from V^T to V
    let mut v = vec![T::ZERO; n * n];
    for r in 0..n {
        for c in 0..n {
            v[r * n + c] = vt[c * n + r];
        }
    }
    let values = (0..n).map(|i| a[i * n + i].real()).collect();
    Ok((values, v, sweeps))
}

/// `f(H)` through the spectral decomposition.
pub fn matrix_function(eig: &EigenDecomposition, f: impl Fn(f64) -> C64) -> Result<ComplexMatrix> {
    eig.matrix_function(f)
}

/// `e^{itH}`.
pub fn matrix_exp_i(h: &HermitianMatrix, t: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(h)?;
    Ok(exp_i_from_eig(&eig, t))
}

/// `e^{itH}` for an already diagonalized `H`.
pub fn exp_i_from_eig(eig: &EigenDecomposition, t: f64) -> ComplexMatrix {
    let phases: Vec<C64> = eig.eigenvalues().iter().map(|&x| C64::from_polar(1.0, t * x)).collect();
    eig.with_diagonal(&phases)
}
