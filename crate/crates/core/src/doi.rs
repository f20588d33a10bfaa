//! The double operator integral `∬ φ(x,y) dE(x) T dF(y)` for finite atomic
//! spectral measures: a Schur multiplier in the joint eigenbasis.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{DecomposedKernel, Kernel};
use crate::matrix::{ComplexMatrix, C64};
use crate::pvm::FinitePVM;

/// Components handled per parallel task in the decomposition oracle.
const DECOMPOSED_CHUNK: usize = 32;

/// `K_ij = φ(x_i, y_j)` over the atoms of `E` and `F`.
pub fn schur_matrix(k: &Kernel, e: &FinitePVM, f: &FinitePVM) -> Result<ComplexMatrix> {
    let (xs, ys) = (e.locations(), f.locations());
    let mut m = ComplexMatrix::zeros(xs.len(), ys.len());
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let v = k.eval(x, y);
            if !v.is_finite() {
                return Err(Error::Domain(format!("kernel {} is {v} at atom pair ({i}, {j}) = ({x}, {y})", k.label())));
            }
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

fn check_shape(e: &FinitePVM, f: &FinitePVM, t: &ComplexMatrix) -> Result<()> {
    if t.shape() != (e.dim(), f.dim()) {
        return Err(Error::Shape(format!(
            "T is {}x{}, measures act on dimensions {} and {}",
            t.rows(),
            t.cols(),
            e.dim(),
            f.dim()
        )));
    }
    Ok(())
}

/// `Σ_ij φ(x_i, y_j) P_i T Q_j` as `V_E (K ∘ V_E† T V_F) V_F†`, each cluster
/// block scaled by its single atom value.
pub fn doi_apply(k: &Kernel, e: &FinitePVM, f: &FinitePVM, t: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_shape(e, f, t)?;
    let schur = schur_matrix(k, e, f)?;
    doi_apply_schur(&schur, e, f, t)
}

/// [`doi_apply`] with the atom matrix already evaluated.
pub fn doi_apply_schur(schur: &ComplexMatrix, e: &FinitePVM, f: &FinitePVM, t: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_shape(e, f, t)?;
    if schur.shape() != (e.len(), f.len()) {
        return Err(Error::Shape(format!(
            "Schur matrix is {}x{}, atom grid is {}x{}",
            schur.rows(),
            schur.cols(),
            e.len(),
            f.len()
        )));
    }
    let (ve, vf) = (e.frame(), f.frame());
    let mut inner = ve.adjoint_mul(t).matmul(vf);
    let (row_atom, col_atom) = (e.column_atoms(), f.column_atoms());
    for r in 0..inner.rows() {
        for c in 0..inner.cols() {
            inner[(r, c)] *= schur[(row_atom[r], col_atom[c])];
        }
    }
    Ok(ve.matmul(&inner).mul_adjoint(vf))
}

/// `Σ_z ν_z (∫α_z dE) T (∫β_z dF)`: the decomposition oracle for
/// [`doi_apply`]. Chunks run in parallel and are summed in index order.
pub fn doi_apply_decomposed(k: &DecomposedKernel, e: &FinitePVM, f: &FinitePVM, t: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_shape(e, f, t)?;
    let partial: Vec<Result<ComplexMatrix>> = k
        .components()
        .par_chunks(DECOMPOSED_CHUNK)
        .map(|chunk| {
            let mut acc = ComplexMatrix::zeros(t.rows(), t.cols());
            for c in chunk {
                let a = e.integrate_values(&e.sample(|x| (c.alpha)(x))?);
                let b = f.integrate_values(&f.sample(|y| (c.beta)(y))?);
                acc.axpy(C64::new(c.weight, 0.0), &a.matmul(t).matmul(&b));
            }
            Ok(acc)
        })
        .collect();
    let mut out = ComplexMatrix::zeros(t.rows(), t.cols());
    for p in partial {
        out += &p?;
    }
    Ok(out)
}

/// `max_ij |φ(x_i, y_j)|`, the norm of the DOI as a map on Hilbert–Schmidt
/// space.
pub fn doi_s2_norm(k: &Kernel, e: &FinitePVM, f: &FinitePVM) -> Result<f64> {
    Ok(schur_matrix(k, e, f)?.max_abs())
}

#[derive(Clone, Copy, Debug)]
pub struct TracePairing {
    /// `Tr(S† · DOI(T))`.
    pub value: C64,
    /// `Σ_z ν_z Tr(S† (∫α_z dE) T (∫β_z dF))`.
    pub decomposed: C64,
    pub residual: f64,
}

pub fn trace_pairing(
    k: &DecomposedKernel,
    e: &FinitePVM,
    f: &FinitePVM,
    s: &ComplexMatrix,
    t: &ComplexMatrix,
) -> Result<TracePairing> {
    check_shape(e, f, s)?;
    let value = s.hs_inner(&doi_apply(&k.kernel(), e, f, t)?);
    let mut decomposed = C64::new(0.0, 0.0);
    for c in k.components() {
        let a = e.integrate_values(&e.sample(|x| (c.alpha)(x))?);
        let b = f.integrate_values(&f.sample(|y| (c.beta)(y))?);
        decomposed += s.hs_inner(&a.matmul(t).matmul(&b)) * c.weight;
    }
    Ok(TracePairing { value, decomposed, residual: (value - decomposed).norm() })
}

/// `‖DOI(k,E,F,T)† − DOI(k̃*,F,E,T†)‖_max`.
pub fn doi_adjoint_check(k: &Kernel, e: &FinitePVM, f: &FinitePVM, t: &ComplexMatrix) -> Result<f64> {
    let lhs = doi_apply(k, e, f, t)?.adjoint();
    let rhs = doi_apply(&k.conj_transpose(), f, e, &t.adjoint())?;
    Ok((&lhs - &rhs).max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{divided_difference_kernel, exp_kernel, kernel_const_one, SmoothFunction, DEFAULT_DIAG_TOL};
    use crate::matrix::{pauli, HermitianMatrix};
    use crate::random::SplitMix64;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn diag_pvm(values: &[f64]) -> FinitePVM {
        FinitePVM::from_hermitian(&HermitianMatrix::from_real_diag(values), 1e-9).unwrap()
    }

    #[test]
    fn schur_examples() {
        let e = diag_pvm(&[0.0, 1.0]);
        let ones = schur_matrix(&kernel_const_one(), &e, &e).unwrap();
        assert!(ones.as_slice().iter().all(|&v| v == re(1.0)));
        let diff = schur_matrix(&Kernel::from_fn("x-y", |x, y| re(x - y)), &e, &e).unwrap();
        assert_eq!(diff.as_slice(), &[re(0.0), re(-1.0), re(1.0), re(0.0)]);
        let ex = divided_difference_kernel(&SmoothFunction::exp(), DEFAULT_DIAG_TOL).unwrap();
        let k = schur_matrix(&ex, &e, &e).unwrap();
        let em1 = std::f64::consts::E - 1.0;
        assert!((k[(0, 1)] - re(em1)).norm() < 1e-15 && (k[(1, 1)] - re(std::f64::consts::E)).norm() < 1e-15);
        let bad = Kernel::from_fn("1/x", |x, _| re(1.0 / x));
        assert!(matches!(schur_matrix(&bad, &e, &e), Err(Error::Domain(_))));
    }

    #[test]
    fn apply_examples() {
        let x = pauli::x();
        let e = FinitePVM::from_hermitian(&HermitianMatrix::new(x.clone()).unwrap(), 1e-9).unwrap();
        let t = ComplexMatrix::real_diag(&[1.0, 0.0]);
        let out = doi_apply(&kernel_const_one(), &e, &e, &t).unwrap();
        assert!((&out - &t).max_abs() < 1e-15);
        let xy = Kernel::from_fn("xy", |x, y| re(x * y));
        let out = doi_apply(&xy, &e, &e, &t).unwrap();
        assert!((&out - &ComplexMatrix::real_diag(&[0.0, 1.0])).max_abs() < 1e-15);
        assert!(matches!(doi_apply(&xy, &e, &diag_pvm(&[1.0, 2.0, 3.0]), &t), Err(Error::Shape(_))));
    }

    #[test]
    fn separated_kernel_matches_products() {
        let mut rng = SplitMix64::new(3);
        let e = FinitePVM::from_hermitian(&rng.hermitian(5, 1.0), 1e-9).unwrap();
        let f = FinitePVM::from_hermitian(&rng.hermitian(3, 1.0), 1e-9).unwrap();
        let t = rng.matrix(5, 3);
        let k = Kernel::from_fn("sep", |x, y| C64::new(x.cos(), x) * C64::from_polar(1.0, y));
        let a = e.integrate_scalar(|x| C64::new(x.cos(), x)).unwrap();
        let b = f.integrate_scalar(|y| C64::from_polar(1.0, y)).unwrap();
        let direct = a.matmul(&t).matmul(&b);
        assert!((&doi_apply(&k, &e, &f, &t).unwrap() - &direct).max_abs() < 1e-13);
    }

    #[test]
    fn decomposed_oracle() {
        let mut rng = SplitMix64::new(5);
        let e = FinitePVM::from_hermitian(&rng.hermitian(6, 1.0), 1e-9).unwrap();
        let t = rng.matrix(6, 6);
        let k = exp_kernel(1.7, 32).unwrap();
        let a = doi_apply(&k.kernel(), &e, &e, &t).unwrap();
        let b = doi_apply_decomposed(&k, &e, &e, &t).unwrap();
        assert!((&a - &b).max_abs() < 1e-12);
        assert_eq!(doi_apply_decomposed(&DecomposedKernel::zero(), &e, &e, &t).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn s2_norm_examples() {
        let e = diag_pvm(&[0.0, 1.0]);
        assert_eq!(doi_s2_norm(&Kernel::from_fn("c", |_, _| C64::new(0.0, -3.0)), &e, &e).unwrap(), 3.0);
        assert_eq!(doi_s2_norm(&Kernel::from_fn("x-y", |x, y| re(x - y)), &e, &e).unwrap(), 1.0);
        let e3 = diag_pvm(&[0.0, 1.0, 2.0]);
        let ex = divided_difference_kernel(&SmoothFunction::exp(), DEFAULT_DIAG_TOL).unwrap();
        // the diagonal entry f'(2) = e² dominates the largest off-diagonal e² − e
        let k = schur_matrix(&ex, &e3, &e3).unwrap();
        assert!((k[(1, 2)].re - (2f64.exp() - 1f64.exp())).abs() < 1e-14);
        assert!((doi_s2_norm(&ex, &e3, &e3).unwrap() - 2f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn s2_norm_matches_power_iteration() {
        let mut rng = SplitMix64::new(11);
        let e = FinitePVM::from_hermitian(&rng.hermitian(5, 1.0), 1e-9).unwrap();
        let k = Kernel::from_fn("k", |x, y| C64::new(x.sin() + y, x * y));
        let norm = doi_s2_norm(&k, &e, &e).unwrap();
        // the multiplier is normal, so M†M iteration converges to its norm
        let kt = k.conj_transpose();
        let mut t = rng.matrix(5, 5);
        let mut estimate = 0.0;
        for _ in 0..400 {
            let mt = doi_apply(&k, &e, &e, &t).unwrap();
            let mtm = doi_apply(&kt, &e, &e, &mt).unwrap();
            estimate = mtm.fro_norm().sqrt() / t.fro_norm().sqrt();
            t = mtm.scale_real(1.0 / mtm.fro_norm());
        }
        assert!((estimate - norm).abs() < 1e-8 * norm, "{estimate} vs {norm}");
    }

    #[test]
    fn trace_pairing_examples() {
        let mut rng = SplitMix64::new(8);
        let e = FinitePVM::from_hermitian(&rng.hermitian(6, 1.0), 1e-9).unwrap();
        let k = exp_kernel(1.0, 32).unwrap();
        let (s, t) = (rng.matrix(6, 6), rng.matrix(6, 6));
        let p = trace_pairing(&k, &e, &e, &s, &t).unwrap();
        assert!(p.residual < 1e-9 * (1.0 + s.fro_norm() * t.fro_norm()));
        let zero = trace_pairing(&k, &e, &e, &s, &ComplexMatrix::zeros(6, 6)).unwrap();
        assert_eq!((zero.value, zero.decomposed), (re(0.0), re(0.0)));

        let (v, w) = (rng.vector(6), rng.vector(6));
        let rank_one = ComplexMatrix::outer(&v, &w);
        let p = trace_pairing(&k, &e, &e, &rank_one, &t).unwrap();
        let applied = doi_apply(&k.kernel(), &e, &e, &t).unwrap().matvec(&w);
        let inner: C64 = v.iter().zip(&applied).map(|(a, b)| a.conj() * b).sum();
        assert!((p.value - inner).norm() < 1e-12);
    }

    #[test]
    fn adjoint_examples() {
        let mut rng = SplitMix64::new(2);
        let e = FinitePVM::from_hermitian(&rng.hermitian(4, 1.0), 1e-9).unwrap();
        let h = rng.hermitian(4, 1.0).into_matrix();
        let sym = Kernel::from_fn("sym", |x, y| re((x + y).cos()));
        assert!(doi_apply(&sym, &e, &e, &h).unwrap().hermitian_defect() < 1e-14);
        let i = Kernel::from_fn("i", |_, _| C64::new(0.0, 1.0));
        let out = doi_apply(&i, &e, &e, &h).unwrap();
        assert!((&out.adjoint() + &out).max_abs() < 1e-14);
        let f = FinitePVM::from_hermitian(&rng.hermitian(3, 1.0), 1e-9).unwrap();
        let k = Kernel::from_fn("k", |x, y| C64::new(x, y * y));
        assert!(doi_adjoint_check(&k, &e, &f, &rng.matrix(4, 3)).unwrap() < 1e-13);
    }
}
