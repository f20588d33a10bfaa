//! Seeded random numbers that every implementation can reproduce.
//!
//! The generator is SplitMix64: the `k`-th output (counting from 1) for seed
//! `s` is `mix(s + k * 0x9E3779B97F4A7C15)` with wrapping arithmetic, where
//!
//! ```text
//! mix(z) = z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!          z ^= z >> 27; z *= 0x94D049BB133111EB;
//!          z ^ (z >> 31)
//! ```
//!
//! Seed 0 yields `0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F,
//! 0xF88BB8A8724C81EC`. Uniform doubles use the top 53 bits; normals use the
//! cosine branch of Box-Muller with one fresh pair of uniforms per draw.

use std::f64::consts::PI;

use crate::matrix::{ComplexMatrix, HermitianMatrix, C64};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Independent stream derived from this seed and a label.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut base = SplitMix64::new(seed ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        SplitMix64::new(base.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Integer in `lo..=hi`.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() % (hi - lo + 1) as u64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    /// Complex normal with unit variance split evenly between parts.
    pub fn complex_normal(&mut self) -> C64 {
        let re = self.normal();
        let im = self.normal();
        C64::new(re, im) * 0.5f64.sqrt()
    }

    pub fn vector(&mut self, n: usize) -> Vec<C64> {
        (0..n).map(|_| self.complex_normal()).collect()
    }

    pub fn unit_vector(&mut self, n: usize) -> Vec<C64> {
        let v = self.vector(n);
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|z| z / norm).collect()
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| self.complex_normal())
    }

    /// `(G + G^†)/2` for a complex Gaussian `G`, scaled by `scale`.
    pub fn hermitian(&mut self, n: usize, scale: f64) -> HermitianMatrix {
        let g = self.matrix(n, n);
        HermitianMatrix::symmetrized(g.scale_real(scale)).expect("finite square matrix")
    }

    /// Haar-like unitary from Gram-Schmidt on a complex Gaussian matrix.
    pub fn unitary(&mut self, n: usize) -> ComplexMatrix {
        let g = self.matrix(n, n);
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
        for c in 0..n {
            let mut v = g.column(c);
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for q in &cols {
                    let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (x, &y) in v.iter_mut().zip(q) {
                        *x -= proj * y;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
        ComplexMatrix::from_columns(n, &cols)
    }

    /// Hermitian matrix `U diag(spectrum) U^†` with a random unitary `U`.
    pub fn hermitian_with_spectrum(&mut self, spectrum: &[f64]) -> HermitianMatrix {
        let u = self.unitary(spectrum.len());
        let d = ComplexMatrix::real_diag(spectrum);
        HermitianMatrix::symmetrized(u.matmul(&d).mul_adjoint(&u)).expect("finite square matrix")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_stream() {
        let mut rng = SplitMix64::new(0);
        let got: Vec<u64> = (0..4).map(|_| rng.next_u64()).collect();
        assert_eq!(got, vec![0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F, 0xF88BB8A8724C81EC]);
    }

    #[test]
    fn unitary_is_unitary() {
        let mut rng = SplitMix64::new(7);
        let u = rng.unitary(9);
        assert!((&u.adjoint_mul(&u) - &ComplexMatrix::identity(9)).max_abs() < 1e-13);
    }

    #[test]
    fn uniform_in_range() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..1000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
            let k = rng.range(2, 5);
            assert!((2..=5).contains(&k));
        }
    }
}
