//! Operator, Hilbert-Schmidt and trace norms.

use crate::eigen::hermitian_eig;
use crate::error::Result;
use crate::matrix::{ComplexMatrix, HermitianMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub op_norm: f64,
    pub hs_norm: f64,
    pub trace_norm: f64,
}

/// Singular values, descending.
///
/// The right singular vectors come from the eigendecomposition of `M^† M`;
/// each singular value is then measured as `||M v_k||`, which keeps small
/// singular values accurate (taking square roots of the eigenvalues of
/// `M^† M` would lose half the significand).
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let gram = HermitianMatrix::symmetrized(m.adjoint_mul(m))?;
    let eig = hermitian_eig(&gram)?;
    let mv = m.matmul(eig.eigenvectors());
    let mut sv: Vec<f64> = (0..mv.cols())
        .map(|c| (0..mv.rows()).map(|r| mv[(r, c)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

pub fn norms(m: &ComplexMatrix) -> Result<Norms> {
    let sv = singular_values(m)?;
    Ok(Norms { op_norm: sv[0], hs_norm: m.fro_norm(), trace_norm: sv.iter().sum() })
}

pub fn op_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?[0])
}

pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::C64;

    #[test]
    fn diagonal_example() {
        let n = norms(&ComplexMatrix::real_diag(&[3.0, -4.0])).unwrap();
        assert!((n.op_norm - 4.0).abs() < 1e-14);
        assert!((n.hs_norm - 5.0).abs() < 1e-14);
        assert!((n.trace_norm - 7.0).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix() {
        let n = norms(&ComplexMatrix::zeros(3, 2)).unwrap();
        assert_eq!((n.op_norm, n.hs_norm, n.trace_norm), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rank_one_unit_vectors() {
        let s = 0.5f64.sqrt();
        let v = [C64::new(s, 0.0), C64::new(0.0, s), C64::new(0.0, 0.0)];
        let w = [C64::new(0.6, 0.0), C64::new(0.0, 0.0), C64::new(0.0, -0.8)];
        let n = norms(&ComplexMatrix::outer(&v, &w)).unwrap();
        for x in [n.op_norm, n.hs_norm, n.trace_norm] {
            assert!((x - 1.0).abs() < 1e-14, "{x}");
        }
    }
}
