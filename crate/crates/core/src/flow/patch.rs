//! Isolated spectral patches, circular contours around them and the contour
//! integrals for `P(s)` and `P′(s)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::eigen::EigenDecomposition;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, HermitianMatrix, C64};
use crate::perturbation::{spectral_pvm, OperatorPath};
use crate::pvm::FinitePVM;

pub const DEFAULT_CONTOUR_NODES: usize = 64;
/// Relative slack for eigenvalues on an endpoint of `I` and for the gap test,
/// so that rounding in the eigensolver does not move atoms across the edge.
pub const EDGE_TOL: f64 = 1e-10;

/// The part `σ₁ = I ∩ σ(H)` of a spectrum and its projector.
#[derive(Clone, Debug)]
pub struct SpectralPatch {
    pub interval: (f64, f64),
    pub gamma: f64,
    /// Atom locations of the whole spectrum.
    pub locations: Vec<f64>,
    pub inside: Vec<usize>,
    pub outside: Vec<usize>,
    /// `min dist(I, σ₂)`.
    pub gap: f64,
    pub projector: ComplexMatrix,
}

impl SpectralPatch {
    pub fn rank(&self) -> usize {
        self.projector.trace().re.round() as usize
    }
}

fn distance_to_interval(x: f64, (lo, hi): (f64, f64)) -> f64 {
    if x < lo {
        lo - x
    } else if x > hi {
        x - hi
    } else {
        0.0
    }
}

/// Splits the atoms of `pvm` by the interval and checks the `γ`-gap.
pub fn detect_patch(pvm: &FinitePVM, interval: (f64, f64), gamma: f64) -> Result<SpectralPatch> {
    let (lo, hi) = interval;
    if !(lo <= hi) {
        return Err(Error::InvalidInput(format!("empty interval [{lo}, {hi}]")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!("gamma = {gamma}")));
    }
    let locations = pvm.locations();
    let scale = locations.iter().fold(lo.abs().max(hi.abs()).max(1.0), |m, x| m.max(x.abs()));
    let slack = EDGE_TOL * scale;
    let (inside, outside): (Vec<usize>, Vec<usize>) =
        (0..locations.len()).partition(|&i| (lo - slack..=hi + slack).contains(&locations[i]));
    if inside.is_empty() {
        return Err(Error::Patch(format!("no eigenvalue in [{lo}, {hi}]")));
    }
    if outside.is_empty() {
        return Err(Error::Patch(format!("every eigenvalue lies in [{lo}, {hi}]")));
    }
    let gap = outside.iter().map(|&i| distance_to_interval(locations[i], interval)).fold(f64::INFINITY, f64::min);
    if gap < gamma - slack {
        return Err(Error::Gap { distance: gap, gamma });
    }
    let projector = pvm.projector_of(&inside)?;
    Ok(SpectralPatch { interval, gamma, locations, inside, outside, gap, projector })
}

/// The circle `c + ½d·e^{iθ}` sampled at `θ_k = 2πk/N`.
#[derive(Clone, Copy, Debug)]
pub struct Contour {
    pub center: f64,
    pub diameter: f64,
    pub n_nodes: usize,
    /// Required distance between nodes and eigenvalues.
    pub margin: f64,
}

impl Contour {
    pub fn new(center: f64, diameter: f64, n_nodes: usize, margin: f64) -> Result<Self> {
        if !(diameter > 0.0 && diameter.is_finite() && center.is_finite()) {
            return Err(Error::InvalidInput(format!("contour center {center}, diameter {diameter}")));
        }
        if n_nodes < 4 || !n_nodes.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("contour needs an even node count ≥ 4, got {n_nodes}")));
        }
        Ok(Contour { center, diameter, n_nodes, margin })
    }

    /// `c = (lo+hi)/2`, `d = hi − lo + γ`, margin `γ/3`: the circle passes
    /// `γ/2` outside `I` and at least `γ/2` inside the rest of the spectrum.
    pub fn around(interval: (f64, f64), gamma: f64, n_nodes: usize) -> Result<Self> {
        let (lo, hi) = interval;
        Self::new(0.5 * (lo + hi), hi - lo + gamma, n_nodes, gamma / 3.0)
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }

    pub fn node(&self, k: usize) -> C64 {
        let theta = 2.0 * PI * k as f64 / self.n_nodes as f64;
        C64::new(self.center, 0.0) + C64::from_polar(self.radius(), theta)
    }

    /// Distance from the circle to the nearest eigenvalue.
    pub fn min_distance(&self, eigenvalues: &[f64]) -> f64 {
        eigenvalues.iter().map(|&x| ((x - self.center).abs() - self.radius()).abs()).fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, eigenvalues: &[f64]) -> Result<f64> {
        let d = self.min_distance(eigenvalues);
        if d < self.margin {
            return Err(Error::Contour { distance: d, required: self.margin });
        }
        Ok(d)
    }

    pub fn encloses(&self, x: f64) -> bool {
        (x - self.center).abs() < self.radius()
    }

    /// `(k, z_k, factor)` for `k = 0..=N/2`: the upper half of the circle,
    /// with `factor = 2` where the conjugate node `z_{N−k}` is folded in.
    fn half_nodes(&self) -> impl Iterator<Item = (usize, C64, f64)> + '_ {
        let half = self.n_nodes / 2;
        (0..=half).map(move |k| (k, self.node(k), if k == 0 || k == half { 1.0 } else { 2.0 }))
    }

    fn phase(&self, k: usize) -> C64 {
        C64::from_polar(1.0, 2.0 * PI * k as f64 / self.n_nodes as f64)
    }
}

/// Resolvent `(H − z)⁻¹` by LU.
fn resolvent(h: &HermitianMatrix, z: C64) -> Result<ComplexMatrix> {
    let mut shifted = h.as_matrix().clone();
    for i in 0..shifted.rows() {
        shifted[(i, i)] -= z;
    }
    shifted.inverse()
}

/// `X + X†` for the folded conjugate nodes, `X` alone on the real axis.
fn fold(x: &ComplexMatrix, factor: f64) -> ComplexMatrix {
    if factor == 1.0 {
        x.clone()
    } else {
        x + &x.adjoint()
    }
}

/// `P = −(1/2πi)∮ (H − z)⁻¹ dz` by the trapezoidal rule, after checking
/// the contour against the spectrum of `H`.
pub fn riesz_projection(h: &HermitianMatrix, eigenvalues: &[f64], contour: &Contour) -> Result<ComplexMatrix> {
    contour.validate(eigenvalues)?;
    let n = h.dim();
    let mut sum = ComplexMatrix::zeros(n, n);
    for (k, z, factor) in contour.half_nodes() {
        let term = resolvent(h, z)?.scale(contour.phase(k));
        sum += &fold(&term, factor);
    }
    Ok(sum.scale_real(-contour.radius() / contour.n_nodes as f64))
}

/// `P′ = (1/2πi)∮ R Φ′ R dz` with `R = (H − z)⁻¹`, same rule as
/// [`riesz_projection`].
pub fn riesz_derivative(h: &HermitianMatrix, eigenvalues: &[f64], dphi: &HermitianMatrix, contour: &Contour) -> Result<ComplexMatrix> {
    contour.validate(eigenvalues)?;
    let n = h.dim();
    let mut sum = ComplexMatrix::zeros(n, n);
    for (k, z, factor) in contour.half_nodes() {
        let r = resolvent(h, z)?;
        let term = r.matmul(dphi.as_matrix()).matmul(&r).scale(contour.phase(k));
        sum += &fold(&term, factor);
    }
    Ok(sum.scale_real(contour.radius() / contour.n_nodes as f64))
}

/// The contour rule for `P′` in the eigenbasis of `H`: entry `(j,k)` of
/// `V† P′ V` is `Φ̃′_jk · c(λ_j, λ_k)` with
/// `c(x, y) = (d/2N) Σ_m e^{iθ_m} / ((x − z_m)(y − z_m))`.
pub fn riesz_derivative_eigenbasis(eig: &EigenDecomposition, dphi: &HermitianMatrix, contour: &Contour) -> Result<ComplexMatrix> {
    let lambda = eig.eigenvalues();
    contour.validate(lambda)?;
    let n = lambda.len();
    let nodes: Vec<(C64, C64)> = (0..contour.n_nodes).map(|k| (contour.node(k), contour.phase(k))).collect();
    let scale = contour.radius() / contour.n_nodes as f64;
    let mut c = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let v: C64 = nodes.iter().map(|&(z, ph)| ph / ((lambda[j] - z) * (lambda[k] - z))).sum::<C64>() * scale;
            c[(j, k)] = v;
            c[(k, j)] = v;
        }
    }
    Ok(eig.from_eigenbasis(&eig.to_eigenbasis(dphi.as_matrix()).hadamard(&c)))
}

/// `I(s)` from `s` and the ascending eigenvalues of `H(s)`.
pub type IntervalFn = Arc<dyn Fn(f64, &[f64]) -> (f64, f64) + Send + Sync>;

/// An operator path with a declared patch interval `I(s)` and gap `γ`.
#[derive(Clone)]
pub struct GappedPath {
    pub label: String,
    pub path: OperatorPath,
    pub interval: IntervalFn,
    pub gamma: f64,
}

impl fmt::Debug for GappedPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GappedPath").field("label", &self.label).field("gamma", &self.gamma).field("path", &self.path).finish()
    }
}

/// Everything the flow needs at one value of `s`.
#[derive(Clone, Debug)]
pub struct PatchState {
    pub s: f64,
    pub h: HermitianMatrix,
    pub eig: EigenDecomposition,
    pub pvm: FinitePVM,
    pub patch: SpectralPatch,
    pub contour: Contour,
}

impl GappedPath {
    pub fn new(
        label: impl Into<String>,
        path: OperatorPath,
        interval: impl Fn(f64, &[f64]) -> (f64, f64) + Send + Sync + 'static,
        gamma: f64,
    ) -> Self {
        GappedPath { label: label.into(), path, interval: Arc::new(interval), gamma }
    }

    pub fn interval(&self, s: f64, eigenvalues: &[f64]) -> (f64, f64) {
        (self.interval)(s, eigenvalues)
    }

    pub fn state(&self, s: f64, contour_nodes: usize) -> Result<PatchState> {
        let h = self.path.h(s)?;
        let eig = crate::eigen::hermitian_eig(&h)?;
        self.state_from_eig(s, h, eig, contour_nodes)
    }

    pub fn state_from_eig(&self, s: f64, h: HermitianMatrix, eig: EigenDecomposition, contour_nodes: usize) -> Result<PatchState> {
        let pvm = spectral_pvm(&eig)?;
        let interval = self.interval(s, eig.eigenvalues());
        let patch = detect_patch(&pvm, interval, self.gamma)?;
        let contour = Contour::around(interval, self.gamma, contour_nodes)?;
        contour.validate(eig.eigenvalues())?;
        Ok(PatchState { s, h, eig, pvm, patch, contour })
    }

    /// `detect_patch` at `samples` evenly spaced points of `[a, b]`;
    /// returns the smallest gap seen.
    pub fn validate_sweep(&self, a: f64, b: f64, samples: usize) -> Result<f64> {
        let mut worst = f64::INFINITY;
        for k in 0..samples {
            let s = if samples == 1 { a } else { a + (b - a) * k as f64 / (samples - 1) as f64 };
            let state = self.state(s, DEFAULT_CONTOUR_NODES)?;
            worst = worst.min(state.patch.gap);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::hermitian_eig;
    use crate::matrix::pauli;
    use crate::random::SplitMix64;

    fn pvm_of(values: &[f64]) -> FinitePVM {
        FinitePVM::from_hermitian(&HermitianMatrix::from_real_diag(values), 1e-9).unwrap()
    }

    #[test]
    fn patch_examples() {
        let p = detect_patch(&pvm_of(&[0.0, 5.0]), (-1.0, 1.0), 2.0).unwrap();
        assert_eq!((p.inside.clone(), p.outside.clone()), (vec![0], vec![1]));
        assert!((&p.projector - &ComplexMatrix::real_diag(&[1.0, 0.0])).max_abs() < 1e-15);
        match detect_patch(&pvm_of(&[0.0, 1.0]), (-0.5, 0.5), 2.0) {
            Err(Error::Gap { distance, .. }) => assert!((distance - 0.5).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        assert!(matches!(detect_patch(&pvm_of(&[3.0, 5.0]), (-1.0, 1.0), 1.0), Err(Error::Patch(_))));
        assert!(matches!(detect_patch(&pvm_of(&[0.0, 0.5]), (-1.0, 1.0), 1.0), Err(Error::Patch(_))));
    }

    #[test]
    fn two_level_patch() {
        // the γ = 2 gap from [λ₋ − 0.1, 0] to λ₊ = √(1+s²) needs s ≥ √3
        let s: f64 = 2.0;
        let h = HermitianMatrix::new(&pauli::z() + &pauli::x().scale_real(s)).unwrap();
        let pvm = FinitePVM::from_hermitian(&h, 1e-9).unwrap();
        let r = (1.0 + s * s).sqrt();
        let p = detect_patch(&pvm, (-r - 0.1, 0.0), 2.0).unwrap();
        assert_eq!(p.inside, vec![0]);
        assert!((p.locations[0] + r).abs() < 1e-14);
        let h0 = HermitianMatrix::new(pauli::z()).unwrap();
        let pvm0 = FinitePVM::from_hermitian(&h0, 1e-9).unwrap();
        assert!(matches!(detect_patch(&pvm0, (-1.1, 0.0), 2.0), Err(Error::Gap { .. })));
    }

    #[test]
    fn riesz_examples() {
        let h = HermitianMatrix::from_real_diag(&[0.0, 5.0]);
        let c = Contour::new(0.0, 4.0, 64, 2.0 / 3.0).unwrap();
        let p = riesz_projection(&h, &[0.0, 5.0], &c).unwrap();
        assert!((&p - &ComplexMatrix::real_diag(&[1.0, 0.0])).max_abs() < 1e-10);
        let all = Contour::new(2.5, 10.0, 64, 1.0).unwrap();
        assert!((&riesz_projection(&h, &[0.0, 5.0], &all).unwrap() - &ComplexMatrix::identity(2)).max_abs() < 1e-10);
        let none = Contour::new(20.0, 4.0, 64, 1.0).unwrap();
        assert!(riesz_projection(&h, &[0.0, 5.0], &none).unwrap().max_abs() < 1e-10);
        let close = Contour::new(0.0, 9.8, 64, 0.5).unwrap();
        assert!(matches!(riesz_projection(&h, &[0.0, 5.0], &close), Err(Error::Contour { .. })));
    }

    #[test]
    fn riesz_matches_spectral_projector() {
        let mut rng = SplitMix64::new(17);
        let spectrum = [-3.0, -2.6, -2.2, 1.0, 1.5, 2.0];
        let h = rng.hermitian_with_spectrum(&spectrum);
        let eig = hermitian_eig(&h).unwrap();
        let pvm = FinitePVM::from_eigen(&eig, 1e-9).unwrap();
        let gamma = 3.0;
        let patch = detect_patch(&pvm, (-3.0, -2.2), gamma).unwrap();
        let mut last = f64::INFINITY;
        for nodes in [64, 128] {
            let c = Contour::around(patch.interval, gamma, nodes).unwrap();
            let err = (&riesz_projection(&h, eig.eigenvalues(), &c).unwrap() - &patch.projector).max_abs();
            assert!(err < 1e-10 && err <= last.max(1e-14), "{nodes}: {err}");
            last = err;
        }
    }

    #[test]
    fn derivative_forms_agree() {
        let mut rng = SplitMix64::new(23);
        let h = rng.hermitian_with_spectrum(&[-1.0, -0.8, 2.0, 2.5, 3.0]);
        let dphi = rng.hermitian(5, 1.0);
        let eig = hermitian_eig(&h).unwrap();
        let c = Contour::around((-1.0, -0.8), 2.0, 64).unwrap();
        let a = riesz_derivative(&h, eig.eigenvalues(), &dphi, &c).unwrap();
        let b = riesz_derivative_eigenbasis(&eig, &dphi, &c).unwrap();
        assert!((&a - &b).max_abs() < 1e-12);
        assert!(a.hermitian_defect() < 1e-12);
    }
}
