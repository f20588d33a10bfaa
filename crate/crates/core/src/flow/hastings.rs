//! The Hastings generator
//! `D(s) = ∫ w_γ(t) ∫₀ᵗ e^{iuH(s)} Φ′(s) e^{−iuH(s)} du dt`
//! and the identity `P′(s) = i[D(s), P(s)]`.

use rayon::prelude::*;

use super::patch::{riesz_derivative, riesz_projection, GappedPath, PatchState};
use super::weight::WeightFunction;
use crate::doi::doi_apply;
use crate::eigen::EigenDecomposition;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::matrix::{commutator, ComplexMatrix, HermitianMatrix, C64};
use crate::norms::op_norm;
use crate::perturbation::spectral_pvm;
use crate::pvm::FinitePVM;
use crate::quadrature::QuadratureRule;

/// Gauss–Legendre nodes per gap between consecutive `t`-nodes.
pub const DEFAULT_U_NODES: usize = 8;
/// Largest phase `ω·Δt` the inner rule is trusted with.
const MAX_GAP_PHASE: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HastingsMethod {
    ClosedForm,
    /// Nested Gauss–Legendre: the weight function's `t`-rule outside and
    /// `u_nodes` per gap for the inner integral, accumulated outward from 0.
    Quadrature { u_nodes: usize },
}

/// `W(ω) = (ŵ_γ(ω) − 1)/(iω)`, `W(0) = 0`, evaluated at `ω = x − y`.
pub fn hastings_kernel(wf: &WeightFunction) -> Kernel {
    let wf = wf.clone();
    Kernel::from_fn(format!("hastings(gamma={})", wf.gamma()), move |x, y| hastings_symbol(&wf, x - y))
}

pub fn hastings_symbol(wf: &WeightFunction, omega: f64) -> C64 {
    if omega == 0.0 {
        return C64::new(0.0, 0.0);
    }
    // (ŵ − 1)/(iω) = −i(ŵ − 1)/ω
    C64::new(0.0, -wf.profile_minus_one(omega) / omega)
}

/// `D` from a spectral decomposition of `H` and `Φ′`.
pub fn hastings_generator_at(
    eig: &EigenDecomposition,
    pvm: &FinitePVM,
    dphi: &HermitianMatrix,
    wf: &WeightFunction,
    method: HastingsMethod,
) -> Result<HermitianMatrix> {
    let d = match method {
        HastingsMethod::ClosedForm => doi_apply(&hastings_kernel(wf), pvm, pvm, dphi.as_matrix())?,
        HastingsMethod::Quadrature { u_nodes } => quadrature_generator(eig, dphi, wf, u_nodes)?,
    };
    HermitianMatrix::symmetrized(d)
}

pub fn hastings_generator(path: &GappedPath, s: f64, wf: &WeightFunction, method: HastingsMethod) -> Result<HermitianMatrix> {
    let eig = path.path.eig(s)?;
    let pvm = spectral_pvm(&eig)?;
    hastings_generator_at(&eig, &pvm, &path.path.phi_prime(s)?, wf, method)
}

/// `∫ w(t) ∫₀ᵗ e^{iuω} du dt` for every distinct `ω = λ_j − λ_k`, with the
/// inner integral carried from node to node.
fn quadrature_generator(eig: &EigenDecomposition, dphi: &HermitianMatrix, wf: &WeightFunction, u_nodes: usize) -> Result<ComplexMatrix> {
    if u_nodes < 2 {
        return Err(Error::Quadrature(format!("u_nodes = {u_nodes}, need at least 2")));
    }
    let lambda = eig.eigenvalues();
    let n = lambda.len();
    let diameter = lambda[n - 1] - lambda[0];

    // split the t-rule into the two half-lines, each ordered outward from 0
    let rule = wf.t_rule();
    let mut positive: Vec<(f64, f64)> = Vec::new();
    let mut negative: Vec<(f64, f64)> = Vec::new();
    for ((t, g), w) in rule.iter().zip(wf.t_values()) {
        if t >= 0.0 {
            positive.push((t, g * w));
        } else {
            negative.push((-t, g * w));
        }
    }
    positive.sort_by(|a, b| a.0.total_cmp(&b.0));
    negative.sort_by(|a, b| a.0.total_cmp(&b.0));
    let max_gap = [&positive, &negative]
        .iter()
        .flat_map(|side| side.iter().scan(0.0, |prev, &(t, _)| Some(t - std::mem::replace(prev, t))))
        .fold(0.0, f64::max);
    let phase = max_gap * (wf.gamma() + diameter);
    if phase > MAX_GAP_PHASE {
        return Err(Error::Quadrature(format!(
            "t-node spacing {max_gap} times spectral scale {} is {phase:.3} rad, above {MAX_GAP_PHASE}; \
             raise t-nodes or lower the spectral diameter",
            wf.gamma() + diameter
        )));
    }
    let base = QuadratureRule::gauss_legendre(u_nodes);

    // ∫ w(t) g(ω, t) dt where g(ω, t) = ∫₀ᵗ e^{iuω} du; g(ω, −τ) = −∫₀^τ e^{−iuω} du
    let weighted = |omega: f64| -> C64 {
        let mut total = C64::new(0.0, 0.0);
        for (side, sign) in [(&positive, 1.0), (&negative, -1.0)] {
            let mut acc = C64::new(0.0, 0.0);
            let mut prev = 0.0;
            for &(tau, gw) in side.iter() {
                let half = 0.5 * (tau - prev);
                let mid = 0.5 * (tau + prev);
                for (x, g) in base.iter() {
                    acc += C64::from_polar(half * g, sign * omega * (mid + half * x));
                }
                prev = tau;
                total += acc * (sign * gw);
            }
        }
        total
    };

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))).collect();
    let values: Vec<C64> = pairs.par_iter().map(|&(j, k)| weighted(lambda[j] - lambda[k])).collect();
    let zero = weighted(0.0);
    let mut factor = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        factor[(i, i)] = zero;
    }
    for (&(j, k), &v) in pairs.iter().zip(&values) {
        factor[(j, k)] = v;
        // ω → −ω conjugates the inner integral, w is real
        factor[(k, j)] = v.conj();
    }
    Ok(eig.from_eigenbasis(&eig.to_eigenbasis(dphi.as_matrix()).hadamard(&factor)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FdScheme {
    None,
    /// Fourth-order central difference of the Riesz projection with step `h`.
    Central4 { h: f64 },
}

#[derive(Clone, Debug)]
pub struct CommutatorCheck {
    pub s: f64,
    /// `‖P′_contour − i[D, P]‖_op`.
    pub residual: f64,
    /// `1e-6·(1 + ‖Φ′‖_op)`.
    pub tolerance: f64,
    pub p_prime: ComplexMatrix,
    pub i_commutator: ComplexMatrix,
    /// `‖P′_contour − P′_fd‖_op` when a difference scheme was requested.
    pub fd_residual: Option<f64>,
    pub p_prime_norm: f64,
}

/// `P′(s)` by the resolvent contour formula against `i[D(s), P(s)]`, with
/// `P(s)` itself from the contour.
pub fn commutator_identity_check(
    path: &GappedPath,
    s: f64,
    wf: &WeightFunction,
    contour_nodes: usize,
    fd: FdScheme,
) -> Result<CommutatorCheck> {
    let state = path.state(s, contour_nodes)?;
    let dphi = path.path.phi_prime(s)?;
    let PatchState { h, eig, pvm, contour, .. } = &state;
    let p = riesz_projection(h, eig.eigenvalues(), contour)?;
    let p_prime = riesz_derivative(h, eig.eigenvalues(), &dphi, contour)?;
    let d = hastings_generator_at(eig, pvm, &dphi, wf, HastingsMethod::ClosedForm)?;
    let i_commutator = commutator(d.as_matrix(), &p)?.scale(C64::new(0.0, 1.0));
    let residual = op_norm(&(&p_prime - &i_commutator))?;
    let tolerance = 1e-6 * (1.0 + op_norm(dphi.as_matrix())?);
    let fd_residual = match fd {
        FdScheme::None => None,
        FdScheme::Central4 { h: step } => {
            let proj = |x: f64| -> Result<ComplexMatrix> {
                let st = path.state(x, contour_nodes)?;
                riesz_projection(&st.h, st.eig.eigenvalues(), &st.contour)
            };
            let (p2, p1, m1, m2) = (proj(s + 2.0 * step)?, proj(s + step)?, proj(s - step)?, proj(s - 2.0 * step)?);
            let num = &(&(&m2 - &p2) + &p1.scale_real(8.0)) - &m1.scale_real(8.0);
            let fd_value = num.scale_real(1.0 / (12.0 * step));
            Some(op_norm(&(&fd_value - &p_prime))?)
        }
    };
    let p_prime_norm = op_norm(&p_prime)?;
    Ok(CommutatorCheck { s, residual, tolerance, p_prime, i_commutator, fd_residual, p_prime_norm })
}
