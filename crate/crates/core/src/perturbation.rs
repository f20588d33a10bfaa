//! Operator paths `H(s) = H₀ + Φ(s)` and derivatives of matrix functions
//! along them: the difference formula, Daletskii–Krein, Duhamel and
//! finite-difference oracles.

use std::fmt;
use std::sync::Arc;

use crate::doi::doi_apply;
use crate::eigen::{hermitian_eig, EigenDecomposition};
use crate::error::{Error, Result};
use crate::kernels::{divided_difference_kernel, SmoothFunction, DEFAULT_DIAG_TOL};
use crate::matrix::{ComplexMatrix, HermitianMatrix, C64};
use crate::norms::op_norm;
use crate::pvm::{default_cluster_tol, FinitePVM};
use crate::quadrature::QuadratureRule;

pub type MatrixPathFn = Arc<dyn Fn(f64) -> HermitianMatrix + Send + Sync>;

/// Built-in parametrizations of `Φ(s)`.
#[derive(Clone, Debug)]
pub enum PathFamily {
    /// `Φ(s) = s·V`.
    Linear { v: HermitianMatrix },
    /// `Φ(s) = Σ_{k≥1} s^k V_k`, with `coeffs[k-1] = V_k`.
    Polynomial { coeffs: Vec<HermitianMatrix> },
    /// `Φ(s) = sin(ωs)·A + (1 − cos(ωs))·B`.
    Trigonometric { a: HermitianMatrix, b: HermitianMatrix, omega: f64 },
    Custom { label: String },
}

#[derive(Clone)]
pub struct OperatorPath {
    h0: HermitianMatrix,
    phi: MatrixPathFn,
    phi_prime: MatrixPathFn,
    domain: (f64, f64),
    family: PathFamily,
}

impl fmt::Debug for OperatorPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorPath")
            .field("dim", &self.h0.dim())
            .field("domain", &self.domain)
            .field("family", &self.family)
            .finish()
    }
}

fn check_same_dim(n: usize, ms: &[&HermitianMatrix]) -> Result<()> {
    match ms.iter().find(|m| m.dim() != n) {
        Some(m) => Err(Error::Shape(format!("path term of dimension {}, H0 has {n}", m.dim()))),
        None => Ok(()),
    }
}

impl OperatorPath {
    fn build(h0: HermitianMatrix, domain: (f64, f64), family: PathFamily, phi: MatrixPathFn, phi_prime: MatrixPathFn) -> Result<Self> {
        if !(domain.0.is_finite() && domain.1.is_finite() && domain.0 <= domain.1) {
            return Err(Error::InvalidInput(format!("path domain [{}, {}]", domain.0, domain.1)));
        }
        Ok(OperatorPath { h0, phi, phi_prime, domain, family })
    }

    pub fn linear(h0: HermitianMatrix, v: HermitianMatrix, domain: (f64, f64)) -> Result<Self> {
        check_same_dim(h0.dim(), &[&v])?;
        let (v1, v2) = (v.clone(), v.clone());
        Self::build(h0, domain, PathFamily::Linear { v }, Arc::new(move |s| v1.scale(s)), Arc::new(move |_| v2.clone()))
    }

    pub fn polynomial(h0: HermitianMatrix, coeffs: Vec<HermitianMatrix>, domain: (f64, f64)) -> Result<Self> {
        check_same_dim(h0.dim(), &coeffs.iter().collect::<Vec<_>>())?;
        let n = h0.dim();
        let (c1, c2) = (coeffs.clone(), coeffs.clone());
        let phi = move |s: f64| {
            let mut out = HermitianMatrix::zeros(n);
            for (k, v) in c1.iter().enumerate() {
                out = out.add_scaled(s.powi(k as i32 + 1), v);
            }
            out
        };
        let phi_prime = move |s: f64| {
            let mut out = HermitianMatrix::zeros(n);
            for (k, v) in c2.iter().enumerate() {
                out = out.add_scaled((k + 1) as f64 * s.powi(k as i32), v);
            }
            out
        };
        Self::build(h0, domain, PathFamily::Polynomial { coeffs }, Arc::new(phi), Arc::new(phi_prime))
    }

    pub fn trigonometric(
        h0: HermitianMatrix,
        a: HermitianMatrix,
        b: HermitianMatrix,
        omega: f64,
        domain: (f64, f64),
    ) -> Result<Self> {
        check_same_dim(h0.dim(), &[&a, &b])?;
        let (a1, b1, a2, b2) = (a.clone(), b.clone(), a.clone(), b.clone());
        let phi = move |s: f64| a1.scale((omega * s).sin()).add_scaled(1.0 - (omega * s).cos(), &b1);
        let phi_prime = move |s: f64| a2.scale(omega * (omega * s).cos()).add_scaled(omega * (omega * s).sin(), &b2);
        Self::build(h0, domain, PathFamily::Trigonometric { a, b, omega }, Arc::new(phi), Arc::new(phi_prime))
    }

    /// A path from explicit `Φ` and `Φ′`; the caller owns their consistency.
    pub fn custom(
        h0: HermitianMatrix,
        label: impl Into<String>,
        phi: impl Fn(f64) -> HermitianMatrix + Send + Sync + 'static,
        phi_prime: impl Fn(f64) -> HermitianMatrix + Send + Sync + 'static,
        domain: (f64, f64),
    ) -> Result<Self> {
        let path = Self::build(h0, domain, PathFamily::Custom { label: label.into() }, Arc::new(phi), Arc::new(phi_prime))?;
        let n = path.h0.dim();
        for s in path.sample_points(5) {
            check_same_dim(n, &[&(path.phi)(s), &(path.phi_prime)(s)])?;
        }
        Ok(path)
    }

    /// `Φ(s) ≡ 0`.
    pub fn constant(h0: HermitianMatrix, domain: (f64, f64)) -> Result<Self> {
        let n = h0.dim();
        Self::build(
            h0,
            domain,
            PathFamily::Custom { label: "constant".into() },
            Arc::new(move |_| HermitianMatrix::zeros(n)),
            Arc::new(move |_| HermitianMatrix::zeros(n)),
        )
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn h0(&self) -> &HermitianMatrix {
        &self.h0
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn family(&self) -> &PathFamily {
        &self.family
    }

    pub fn check_domain(&self, s: f64) -> Result<()> {
        if !(s >= self.domain.0 && s <= self.domain.1) {
            return Err(Error::Domain(format!("s = {s} outside [{}, {}]", self.domain.0, self.domain.1)));
        }
        Ok(())
    }

    pub fn phi(&self, s: f64) -> Result<HermitianMatrix> {
        self.check_domain(s)?;
        Ok((self.phi)(s))
    }

    pub fn phi_prime(&self, s: f64) -> Result<HermitianMatrix> {
        self.check_domain(s)?;
        Ok((self.phi_prime)(s))
    }

    /// `H(s) = H₀ + Φ(s)`.
    pub fn h(&self, s: f64) -> Result<HermitianMatrix> {
        Ok(self.h0.add_scaled(1.0, &self.phi(s)?))
    }

    pub fn eig(&self, s: f64) -> Result<EigenDecomposition> {
        hermitian_eig(&self.h(s)?)
    }

    fn sample_points(&self, n: usize) -> Vec<f64> {
        let (a, b) = self.domain;
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1).max(1) as f64).collect()
    }

    /// `max_s ‖(Φ(s+h) − Φ(s−h))/2h − Φ′(s)‖_op / h²` over `samples` interior
    /// points: the constant `C` of the second-order consistency check.
    pub fn derivative_consistency(&self, h: f64, samples: usize) -> Result<f64> {
        let (a, b) = self.domain;
        let mut worst: f64 = 0.0;
        for k in 0..samples {
            let s = a + h + (b - a - 2.0 * h) * k as f64 / (samples - 1).max(1) as f64;
            let fd = (self.phi(s + h)?.as_matrix() - self.phi(s - h)?.as_matrix()).scale_real(0.5 / h);
            worst = worst.max(op_norm(&(&fd - self.phi_prime(s)?.as_matrix()))? / (h * h));
        }
        Ok(worst)
    }
}

/// Spectral measure of `H` with the default clustering tolerance.
pub fn spectral_pvm(eig: &EigenDecomposition) -> Result<FinitePVM> {
    FinitePVM::from_eigen(eig, default_cluster_tol(eig.eigenvalues()))
}

/// `f(H)` through the eigendecomposition, with a domain error naming the
/// eigenvalue where `f` is not finite.
pub fn apply_function(eig: &EigenDecomposition, f: &SmoothFunction) -> Result<ComplexMatrix> {
    let (func, _) = f.pair();
    eig.matrix_function(|x| func(x))
}

#[derive(Clone, Debug)]
pub struct FDifference {
    /// `∬ φ_f dE_A Φ dF_B`.
    pub doi: ComplexMatrix,
    /// `f(B) − f(A)`.
    pub direct: ComplexMatrix,
    pub residual: f64,
    /// `1e-8·(1 + ‖f(B)‖ + ‖f(A)‖)`.
    pub tolerance: f64,
    /// `‖doi + ∬ φ_f dE_B (−Φ) dF_A‖_op`: the same value with the measures
    /// interchanged.
    pub swap_residual: f64,
}

/// `f(B) − f(A)` for `B = A + Φ`, both as a DOI and directly.
pub fn f_difference(a: &HermitianMatrix, phi: &HermitianMatrix, f: &SmoothFunction) -> Result<FDifference> {
    if a.dim() != phi.dim() {
        return Err(Error::Shape(format!("A is {}x{0}, Φ is {}x{1}", a.dim(), phi.dim())));
    }
    let b = a.add_scaled(1.0, phi);
    let (eig_a, eig_b) = (hermitian_eig(a)?, hermitian_eig(&b)?);
    let (e, fb) = (spectral_pvm(&eig_a)?, spectral_pvm(&eig_b)?);
    let kernel = divided_difference_kernel(f, DEFAULT_DIAG_TOL)?;
    let doi = doi_apply(&kernel, &e, &fb, phi)?;
    let (f_a, f_b) = (apply_function(&eig_a, f)?, apply_function(&eig_b, f)?);
    let direct = &f_b - &f_a;
    let residual = op_norm(&(&doi - &direct))?;
    let tolerance = 1e-8 * (1.0 + op_norm(&f_b)? + op_norm(&f_a)?);
    let swapped = doi_apply(&kernel, &fb, &e, &phi.scale_real(-1.0))?;
    let swap_residual = op_norm(&(&doi + &swapped))?;
    Ok(FDifference { doi, direct, residual, tolerance, swap_residual })
}

#[derive(Clone, Copy, Debug)]
pub struct ExpDifferenceBound {
    pub lhs_norm: f64,
    pub bound: f64,
    pub ok: bool,
}

/// `‖e^{itB} − e^{itA}‖ ≤ |t|·‖Φ‖`.
pub fn exp_difference_bound(a: &HermitianMatrix, phi: &HermitianMatrix, t: f64) -> Result<ExpDifferenceBound> {
    let b = a.add_scaled(1.0, phi);
    let ua = hermitian_eig(a)?.matrix_function(|x| C64::from_polar(1.0, t * x))?;
    let ub = hermitian_eig(&b)?.matrix_function(|x| C64::from_polar(1.0, t * x))?;
    let lhs_norm = op_norm(&(&ub - &ua))?;
    let bound = t.abs() * op_norm(phi)?;
    Ok(ExpDifferenceBound { lhs_norm, bound, ok: lhs_norm <= bound + 1e-10 })
}

/// `d/ds f(H(s)) = ∬ φ_f dE_s Φ′(s) dE_s`.
pub fn dk_derivative(path: &OperatorPath, s: f64, f: &SmoothFunction) -> Result<ComplexMatrix> {
    let eig = path.eig(s)?;
    let e = spectral_pvm(&eig)?;
    let kernel = divided_difference_kernel(f, DEFAULT_DIAG_TOL)?;
    doi_apply(&kernel, &e, &e, path.phi_prime(s)?.as_matrix())
}

/// Default central-difference step `1e-4·(1+|s|)`.
pub fn default_fd_step(s: f64) -> f64 {
    1e-4 * (1.0 + s.abs())
}

/// `(f(H(s+h)) − f(H(s−h))) / 2h`.
pub fn fd_derivative(path: &OperatorPath, s: f64, f: &SmoothFunction, h: f64) -> Result<ComplexMatrix> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("finite-difference step {h}")));
    }
    path.check_domain(s - h)?;
    path.check_domain(s + h)?;
    let plus = apply_function(&path.eig(s + h)?, f)?;
    let minus = apply_function(&path.eig(s - h)?, f)?;
    Ok((&plus - &minus).scale_real(0.5 / h))
}

/// Default Gauss–Legendre nodes for the Duhamel `r`-integral.
pub const DEFAULT_DUHAMEL_NODES: usize = 64;

/// `d/ds e^{itH(s)} = ∫₀¹ it e^{itrH} Φ′ e^{it(1−r)H} dr`, by Gauss–Legendre
/// in `r` with full propagator products at every node.
pub fn duhamel_derivative(path: &OperatorPath, s: f64, t: f64, u_nodes: usize) -> Result<ComplexMatrix> {
    if u_nodes == 0 {
        return Err(Error::InvalidInput("duhamel needs at least one node".into()));
    }
    let eig = path.eig(s)?;
    let dphi = path.phi_prime(s)?;
    let n = path.dim();
    let mut out = ComplexMatrix::zeros(n, n);
    if t == 0.0 {
        return Ok(out);
    }
    for (r, g) in QuadratureRule::on_interval(u_nodes, 0.0, 1.0).iter() {
        let left = eig.matrix_function(|x| C64::from_polar(1.0, t * r * x))?;
        let right = eig.matrix_function(|x| C64::from_polar(1.0, t * (1.0 - r) * x))?;
        out.axpy(C64::new(0.0, t * g), &left.matmul(dphi.as_matrix()).matmul(&right));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::WienerFunction;
    use crate::matrix::pauli;
    use crate::random::SplitMix64;

    fn two_level() -> OperatorPath {
        let h0 = HermitianMatrix::new(pauli::z()).unwrap();
        OperatorPath::linear(h0, HermitianMatrix::new(pauli::x()).unwrap(), (-1.0, 2.0)).unwrap()
    }

    #[test]
    fn difference_examples() {
        let mut rng = SplitMix64::new(21);
        let a = rng.hermitian(6, 1.0);
        let zero = f_difference(&a, &HermitianMatrix::zeros(6), &SmoothFunction::exp()).unwrap();
        assert!(zero.doi.max_abs() < 1e-14 && zero.direct.max_abs() < 1e-13);

        let phi = rng.hermitian(6, 0.3);
        let sq = f_difference(&a, &phi, &SmoothFunction::square()).unwrap();
        let expected = &(&a.matmul(&phi) + &phi.matmul(&a)) + &phi.matmul(&phi);
        assert!((&sq.doi - &expected).max_abs() < 1e-12);
        assert!((&sq.direct - &expected).max_abs() < 1e-12);

        let a8 = rng.hermitian(8, 1.0);
        let v = rng.hermitian(8, 1.0);
        let phi8 = v.scale(0.3 / op_norm(&v).unwrap());
        let ex = f_difference(&a8, &phi8, &SmoothFunction::exp()).unwrap();
        assert!(ex.residual < 1e-8 && ex.residual <= ex.tolerance);
        assert!(ex.swap_residual < 1e-9);
    }

    #[test]
    fn wiener_difference_norm_bound() {
        let mut rng = SplitMix64::new(4);
        let a = rng.hermitian(7, 1.0);
        let phi = rng.hermitian(7, 0.5);
        let lor = WienerFunction::lorentzian();
        let moment = lor.abs_first_moment();
        let d = f_difference(&a, &phi, &lor.into()).unwrap();
        assert!(op_norm(&d.doi).unwrap() <= moment * op_norm(&phi).unwrap() + 1e-12);
    }

    #[test]
    fn exp_difference_examples() {
        let mut rng = SplitMix64::new(1);
        let a = rng.hermitian(4, 1.0);
        let r = exp_difference_bound(&a, &rng.hermitian(4, 1.0), 0.0).unwrap();
        assert!(r.lhs_norm < 1e-15 && r.bound == 0.0 && r.ok);
        let zero = HermitianMatrix::from_real_diag(&[0.0]);
        let pi = HermitianMatrix::from_real_diag(&[std::f64::consts::PI]);
        let r = exp_difference_bound(&zero, &pi, 1.0).unwrap();
        assert!((r.lhs_norm - 2.0).abs() < 1e-15 && r.ok);
    }

    #[test]
    fn dk_examples() {
        let path = two_level();
        let id = dk_derivative(&path, 0.4, &SmoothFunction::identity()).unwrap();
        assert!((&id - &pauli::x()).max_abs() < 1e-14);
        let sq = dk_derivative(&path, 0.4, &SmoothFunction::square()).unwrap();
        let h = path.h(0.4).unwrap();
        let expected = &h.matmul(&pauli::x()) + &pauli::x().matmul(&h);
        assert!((&sq - &expected).max_abs() < 1e-13);
        assert!(matches!(dk_derivative(&path, 3.0, &SmoothFunction::exp()), Err(Error::Domain(_))));
    }

    #[test]
    fn dk_matches_finite_differences() {
        let path = two_level();
        let f = SmoothFunction::exp();
        let dk = dk_derivative(&path, 0.5, &f).unwrap();
        assert!(dk.hermitian_defect() < 1e-12);
        let fd = fd_derivative(&path, 0.5, &f, 1e-4).unwrap();
        let dev = op_norm(&(&dk - &fd)).unwrap() / op_norm(&dk).unwrap();
        assert!(dev < 1e-6, "{dev}");
        let e1 = op_norm(&(&dk - &fd_derivative(&path, 0.5, &f, 1e-3).unwrap())).unwrap();
        let e2 = op_norm(&(&dk - &fd_derivative(&path, 0.5, &f, 5e-4).unwrap())).unwrap();
        assert!((3.0..=5.0).contains(&(e1 / e2)), "{}", e1 / e2);
    }

    #[test]
    fn fd_examples() {
        let h0 = HermitianMatrix::new(pauli::z()).unwrap();
        let constant = OperatorPath::constant(h0, (0.0, 1.0)).unwrap();
        assert!(fd_derivative(&constant, 0.5, &SmoothFunction::exp(), 1e-4).unwrap().max_abs() < 1e-10 / 1e-4);
        let id = fd_derivative(&two_level(), 0.0, &SmoothFunction::identity(), 1e-4).unwrap();
        assert!((&id - &pauli::x()).max_abs() < 1e-10);
        assert!(fd_derivative(&two_level(), 1.99995, &SmoothFunction::exp(), 1e-4).is_err());
    }

    #[test]
    fn duhamel_examples() {
        let path = two_level();
        assert_eq!(duhamel_derivative(&path, 0.3, 0.0, 8).unwrap().max_abs(), 0.0);

        let scalar = OperatorPath::linear(
            HermitianMatrix::from_real_diag(&[0.0]),
            HermitianMatrix::from_real_diag(&[1.0]),
            (-1.0, 1.0),
        )
        .unwrap();
        let d = duhamel_derivative(&scalar, 0.7, 2.0, 16).unwrap();
        let expected = C64::new(0.0, 2.0) * C64::from_polar(1.0, 1.4);
        assert!((d[(0, 0)] - expected).norm() < 1e-14);

        let dk = dk_derivative(&path, 0.3, &WienerFunction::exp_i(1.0).into()).unwrap();
        let du = duhamel_derivative(&path, 0.3, 1.0, DEFAULT_DUHAMEL_NODES).unwrap();
        assert!((&dk - &du).max_abs() < 1e-12);
    }

    #[test]
    fn family_derivatives_are_consistent() {
        let mut rng = SplitMix64::new(9);
        let h0 = rng.hermitian(4, 1.0);
        let poly = OperatorPath::polynomial(h0.clone(), vec![rng.hermitian(4, 1.0), rng.hermitian(4, 0.5)], (0.0, 1.0)).unwrap();
        let trig = OperatorPath::trigonometric(h0, rng.hermitian(4, 1.0), rng.hermitian(4, 1.0), 2.0, (0.0, 1.0)).unwrap();
        for path in [poly, trig] {
            let c = path.derivative_consistency(1e-4, 5).unwrap();
            assert!(c < 100.0, "{c}");
        }
    }
}
