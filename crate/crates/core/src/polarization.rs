//! Recovering an operator from its quadratic form.

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64, I};
use crate::random::SplitMix64;

#[derive(Clone, Debug)]
pub struct QuadraticFormRecovery {
    pub operator: ComplexMatrix,
    /// `max |<u, A u> - rho(u)|` over the probe battery.
    pub residual: f64,
    /// Whether `rho` was real on every probe, in which case `operator` was
    /// replaced by its Hermitian part.
    pub symmetrized: bool,
}

/// Builds `A` with `A_jk = sigma(e_j, e_k)`, where
/// `sigma(u, v) = (rho(u+v) - rho(u-v) - i rho(u+iv) + i rho(u-iv)) / 4`.
pub fn recover_operator_from_quadratic_form(
    rho: impl Fn(&[C64]) -> C64,
    dim: usize,
) -> Result<QuadraticFormRecovery> {
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    let eval = |u: &[C64]| -> Result<C64> {
        let v = rho(u);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidInput(format!("quadratic form returned {v}")))
        }
    };
    let basis = |j: usize| -> Vec<C64> {
        let mut e = vec![C64::new(0.0, 0.0); dim];
        e[j] = C64::new(1.0, 0.0);
        e
    };
    let combine = |u: &[C64], s: C64, v: &[C64]| -> Vec<C64> { u.iter().zip(v).map(|(&a, &b)| a + s * b).collect() };

    let mut a = ComplexMatrix::zeros(dim, dim);
    let mut all_real = true;
    for j in 0..dim {
        let ej = basis(j);
        for k in 0..dim {
            let ek = basis(k);
            let terms = [
                eval(&combine(&ej, C64::new(1.0, 0.0), &ek))?,
                eval(&combine(&ej, C64::new(-1.0, 0.0), &ek))?,
                eval(&combine(&ej, I, &ek))?,
                eval(&combine(&ej, -I, &ek))?,
            ];
            all_real &= terms.iter().all(|z| z.im == 0.0);
            a[(j, k)] = (terms[0] - terms[1] - I * terms[2] + I * terms[3]) * 0.25;
        }
    }

    // probe battery: fixed random vectors, reproducible for a given dim
    let mut rng = SplitMix64::new(0x5eed_0000 + dim as u64);
    let probes: Vec<Vec<C64>> = (0..8).map(|_| rng.vector(dim)).collect();
    let mut probe_values = Vec::with_capacity(probes.len());
    for u in &probes {
        let v = eval(u)?;
        all_real &= v.im == 0.0;
        probe_values.push(v);
    }
    if all_real {
        a = (&a + &a.adjoint()).scale_real(0.5);
    }
    let residual = probes
        .iter()
        .zip(&probe_values)
        .map(|(u, &v)| {
            let au = a.matvec(u);
            let q: C64 = u.iter().zip(&au).map(|(x, y)| x.conj() * y).sum();
            (q - v).norm()
        })
        .fold(0.0, f64::max);
    Ok(QuadraticFormRecovery { operator: a, residual, symmetrized: all_real })
}

/// `u -> <u, M u>`.
pub fn quadratic_form_of(m: &ComplexMatrix) -> impl Fn(&[C64]) -> C64 + '_ {
    move |u: &[C64]| {
        let mu = m.matvec(u);
        u.iter().zip(&mu).map(|(a, b)| a.conj() * b).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_squared_gives_identity() {
        let rec = recover_operator_from_quadratic_form(|u| C64::new(u.iter().map(|z| z.norm_sqr()).sum(), 0.0), 4)
            .unwrap();
        assert!((&rec.operator - &ComplexMatrix::identity(4)).max_abs() < 1e-15);
        assert!(rec.symmetrized);
        assert!(rec.residual < 1e-14);
    }

    #[test]
    fn zero_form_gives_zero() {
        let rec = recover_operator_from_quadratic_form(|_| C64::new(0.0, 0.0), 3).unwrap();
        assert_eq!(rec.operator.max_abs(), 0.0);
    }

    #[test]
    fn non_hermitian_operator_is_recovered_unsymmetrized() {
        let m = ComplexMatrix::from_fn(3, 3, |r, c| C64::new(r as f64 - c as f64, (r * c) as f64));
        let rec = recover_operator_from_quadratic_form(quadratic_form_of(&m), 3).unwrap();
        assert!(!rec.symmetrized);
        assert!((&rec.operator - &m).max_abs() < 1e-13);
    }

    #[test]
    fn non_finite_form_is_rejected() {
        let err = recover_operator_from_quadratic_form(|_| C64::new(f64::NAN, 0.0), 2).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn non_quadratic_form_reports_residual() {
        // |u|^4 is not quadratic: polarization still returns something, and
        // the residual says how far off it is
        let rec = recover_operator_from_quadratic_form(
            |u| C64::new(u.iter().map(|z| z.norm_sqr()).sum::<f64>().powi(2), 0.0),
            2,
        )
        .unwrap();
        assert!(rec.residual > 1e-3);
    }
}
