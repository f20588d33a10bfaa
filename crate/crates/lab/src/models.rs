//! Built-in gapped operator paths. Each is checked with `detect_patch` on an
//! evenly spaced sweep of its domain before it is handed out.

use rayon::prelude::*;

use doiflow_core::flow::GappedPath;
use doiflow_core::matrix::pauli;
use doiflow_core::norms::op_norm;
use doiflow_core::perturbation::OperatorPath;
use doiflow_core::random::SplitMix64;
use doiflow_core::{hermitian_eig, ComplexMatrix, EigenDecomposition, Error, HermitianMatrix, Result};

use crate::config::ModelConfig;

pub const SWEEP_SAMPLES: usize = 33;
/// The TFIM gap estimate is the sweep minimum times this factor.
pub const TFIM_GAP_SAFETY: f64 = 0.9;

#[derive(Clone, Debug)]
pub struct Model {
    pub path: GappedPath,
    pub domain: (f64, f64),
    /// Smallest patch-to-rest distance over the validation sweep.
    pub sweep_min_gap: f64,
}

fn sweep_points(domain: (f64, f64)) -> Vec<f64> {
    let (a, b) = domain;
    (0..SWEEP_SAMPLES).map(|k| a + (b - a) * k as f64 / (SWEEP_SAMPLES - 1) as f64).collect()
}

fn sweep_eigs(path: &OperatorPath, domain: (f64, f64)) -> Result<Vec<(f64, HermitianMatrix, EigenDecomposition)>> {
    sweep_points(domain)
        .into_par_iter()
        .map(|s| {
            let h = path.h(s)?;
            let eig = hermitian_eig(&h)?;
            Ok((s, h, eig))
        })
        .collect()
}

fn validate(path: GappedPath, domain: (f64, f64), eigs: Vec<(f64, HermitianMatrix, EigenDecomposition)>) -> Result<Model> {
    let gaps: Vec<f64> = eigs
        .into_par_iter()
        .map(|(s, h, eig)| Ok(path.state_from_eig(s, h, eig, doiflow_core::flow::patch::DEFAULT_CONTOUR_NODES)?.patch.gap))
        .collect::<Result<_>>()?;
    let sweep_min_gap = gaps.into_iter().fold(f64::INFINITY, f64::min);
    Ok(Model { path, domain, sweep_min_gap })
}

fn herm(m: ComplexMatrix) -> HermitianMatrix {
    HermitianMatrix::new(m).expect("built-in matrices are Hermitian")
}

/// `H(s) = σ_z + κsσ_x`; the patch is the lower eigenvalue, `I(s) = [λ₋−¼, λ₋]`, `γ = 2`.
pub fn two_level(kappa: f64, domain: (f64, f64), gamma: Option<f64>) -> Result<Model> {
    let path = OperatorPath::linear(herm(pauli::z()), herm(pauli::x().scale_real(kappa)), domain)?;
    let gp = GappedPath::new("two_level", path, |_, e| (e[0] - 0.25, e[0]), gamma.unwrap_or(2.0));
    let eigs = sweep_eigs(&gp.path, domain)?;
    validate(gp, domain, eigs)
}

/// `U diag(D) U† + sεV`: half the spectrum of `D` in `[−g, −g/2]`, the rest
/// in `[g/2, g]`, `‖V‖_op = 1`. The patch is the lower half, `γ = g/2`.
pub fn random_gapped(dim: usize, gap: f64, epsilon: f64, seed: u64, domain: (f64, f64), gamma: Option<f64>) -> Result<Model> {
    if dim < 2 {
        return Err(Error::InvalidInput(format!("random_gapped needs dim >= 2, got {dim}")));
    }
    let reach = domain.0.abs().max(domain.1.abs());
    if epsilon * reach > 0.25 * gap {
        return Err(Error::InvalidInput(format!("epsilon·max|s| = {} exceeds gap/4", epsilon * reach)));
    }
    let mut rng = SplitMix64::new(seed);
    let low = dim / 2;
    let spectrum: Vec<f64> = (0..dim)
        .map(|k| if k < low { rng.uniform(-gap, -0.5 * gap) } else { rng.uniform(0.5 * gap, gap) })
        .collect();
    let h0 = rng.hermitian_with_spectrum(&spectrum);
    let v = rng.hermitian(dim, 1.0);
    let v = v.scale(epsilon / op_norm(v.as_matrix())?);
    let path = OperatorPath::linear(h0, v, domain)?;
    let gamma = gamma.unwrap_or(0.5 * gap);
    let gp = GappedPath::new("random_gapped", path, move |_, e| (e[0] - 0.25 * gamma, e[low - 1]), gamma);
    let eigs = sweep_eigs(&gp.path, domain)?;
    validate(gp, domain, eigs)
}

/// `−Σ Z_iZ_{i+1}` and `−Σ X_i` on an open chain of `sites` spins.
pub fn tfim_terms(sites: usize) -> (HermitianMatrix, HermitianMatrix) {
    let n = 1usize << sites;
    let z = |state: usize, i: usize| if state >> i & 1 == 0 { 1.0 } else { -1.0 };
    let diag: Vec<f64> = (0..n).map(|b| -(0..sites - 1).map(|i| z(b, i) * z(b, i + 1)).sum::<f64>()).collect();
    let mut x = ComplexMatrix::zeros(n, n);
    for b in 0..n {
        for i in 0..sites {
            x[(b ^ (1 << i), b)] -= 1.0;
        }
    }
    (HermitianMatrix::from_real_diag(&diag), herm(x))
}

/// `H(s) = −Σ Z_iZ_{i+1} − sΣ X_i`. The patch holds the two lowest levels,
/// which merge at `s = 0`; `I(s) = [E₀ − γ/4, E₁]` and `γ` is 0.9 times the
/// smallest `E₂ − E₁` on the sweep.
pub fn tfim(sites: usize, domain: (f64, f64), gamma: Option<f64>) -> Result<Model> {
    if !(2..=8).contains(&sites) {
        return Err(Error::InvalidInput(format!("tfim needs 2..=8 sites, got {sites}")));
    }
    let (h0, v) = tfim_terms(sites);
    let path = OperatorPath::linear(h0, v, domain)?;
    let eigs = sweep_eigs(&path, domain)?;
    let min_gap = eigs.iter().map(|(_, _, e)| e.eigenvalues()[2] - e.eigenvalues()[1]).fold(f64::INFINITY, f64::min);
    let gamma = gamma.unwrap_or(TFIM_GAP_SAFETY * min_gap);
    let gp = GappedPath::new(format!("tfim_{sites}"), path, move |_, e| (e[0] - 0.25 * gamma, e[1]), gamma);
    validate(gp, domain, eigs)
}

pub fn build(model: &ModelConfig, domain: (f64, f64), gamma: Option<f64>, seed: u64) -> Result<Model> {
    match model {
        ModelConfig::TwoLevel(p) => two_level(p.kappa, domain, gamma),
        ModelConfig::RandomGapped(p) => random_gapped(p.dim, p.gap, p.epsilon, seed, domain, gamma),
        ModelConfig::Tfim(p) => tfim(p.sites, domain, gamma),
    }
}
