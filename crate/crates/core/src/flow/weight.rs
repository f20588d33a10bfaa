//! The weight function `w_γ`: a real, even function with `∫ w_γ = 1` whose
//! Fourier transform is the bump `ŵ_γ` supported in `[−γ, γ]`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

pub const DEFAULT_SHARPNESS: f64 = 1.0;
pub const DEFAULT_FOURIER_NODES: usize = 600;
pub const DEFAULT_T_MAX_FACTOR: f64 = 400.0;
/// Largest accepted ratio of `∫_{T}^{2T} |t w|` to `∫_{−T}^{T} |t w|`.
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// Gauss–Legendre nodes per `t`-panel; panels are at most `1/γ` wide.
pub const DEFAULT_T_PANEL_ORDER: usize = 16;
/// An `n`-node Fourier rule resolves `cos(ξt)` on `[−γ,γ]` while `γ|t| ≤ 1.5n`;
/// this is the node count per unit of `γ|t|` used for the tail estimate.
const FOURIER_NODES_PER_GAMMA_T: f64 = 1.0 / 1.5;

#[derive(Clone, Debug)]
pub struct WeightFunctionSettings {
    pub sharpness: f64,
    pub fourier_nodes: usize,
    pub t_max_factor: f64,
    pub t_panel_order: usize,
}

impl Default for WeightFunctionSettings {
    fn default() -> Self {
        WeightFunctionSettings {
            sharpness: DEFAULT_SHARPNESS,
            fourier_nodes: DEFAULT_FOURIER_NODES,
            t_max_factor: DEFAULT_T_MAX_FACTOR,
            t_panel_order: DEFAULT_T_PANEL_ORDER,
        }
    }
}

#[derive(Clone, Debug)]
pub struct WeightFunction {
    gamma: f64,
    sharpness: f64,
    /// `(ξ_k, g_k ŵ(ξ_k) / 2π)`.
    fourier: Vec<(f64, f64)>,
    t_rule: QuadratureRule,
    /// `w_γ` at the nodes of `t_rule`.
    t_values: Vec<f64>,
    t_max: f64,
    /// `∫ w_γ dt` by the `t`-rule.
    pub normalization: f64,
    /// `∫ t w_γ dt`.
    pub first_moment: f64,
    /// `∫ |t w_γ| dt`.
    pub abs_first_moment: f64,
    /// `∫_{T}^{2T} |t w_γ| dt` relative to `abs_first_moment`, both sides.
    pub tail_ratio: f64,
}

/// `ŵ(ξ) − 1` for the bump `exp(a(1 − 1/(1 − (ξ/γ)²)))`, accurate near 0.
fn profile_minus_one(xi: f64, gamma: f64, sharpness: f64) -> f64 {
    let u2 = (xi / gamma).powi(2);
    if u2 >= 1.0 {
        return -1.0;
    }
    (-sharpness * u2 / (1.0 - u2)).exp_m1()
}

fn cosine_sum(fourier: &[(f64, f64)], t: f64) -> f64 {
    fourier.iter().map(|&(xi, a)| a * (xi * t).cos()).sum()
}

fn fourier_rule(gamma: f64, sharpness: f64, nodes: usize) -> Vec<(f64, f64)> {
    QuadratureRule::on_interval(nodes, -gamma, gamma)
        .iter()
        .map(|(xi, g)| (xi, g * (1.0 + profile_minus_one(xi, gamma, sharpness)) / (2.0 * PI)))
        .collect()
}

pub fn build_weight_function(gamma: f64, settings: &WeightFunctionSettings) -> Result<WeightFunction> {
    let WeightFunctionSettings { sharpness, fourier_nodes, t_max_factor, t_panel_order } = *settings;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidInput(format!("gamma = {gamma}")));
    }
    if !(sharpness.is_finite() && sharpness > 0.0) {
        return Err(Error::InvalidInput(format!("profile sharpness = {sharpness}")));
    }
    if fourier_nodes < 2 {
        return Err(Error::InvalidInput(format!("fourier_nodes = {fourier_nodes}")));
    }
    if t_panel_order < 2 {
        return Err(Error::InvalidInput(format!("t_panel_order = {t_panel_order}")));
    }
    if !(t_max_factor.is_finite() && t_max_factor > 0.0) {
        return Err(Error::InvalidInput(format!("t_max_factor = {t_max_factor}")));
    }
    let fourier = fourier_rule(gamma, sharpness, fourier_nodes);
    let t_max = t_max_factor / gamma;
    let panels = (2.0 * t_max_factor).ceil() as usize;
    let t_rule = QuadratureRule::composite(-t_max, t_max, panels, t_panel_order);
    let t_values: Vec<f64> = t_rule.nodes.par_iter().map(|&t| cosine_sum(&fourier, t)).collect();

    let mut normalization = 0.0;
    let mut first_moment = 0.0;
    let mut abs_first_moment = 0.0;
    for ((t, g), w) in t_rule.iter().zip(&t_values) {
        normalization += g * w;
        first_moment += g * t * w;
        abs_first_moment += g * (t * w).abs();
    }

    // the tail needs w on [T, 2T], beyond where the main rule is resolved
    let tail_nodes = fourier_nodes.max((2.0 * t_max_factor * FOURIER_NODES_PER_GAMMA_T * 1.2).ceil() as usize);
    let tail_fourier = fourier_rule(gamma, sharpness, tail_nodes);
    let tail_rule = QuadratureRule::composite(t_max, 2.0 * t_max, panels / 2 + 1, t_panel_order);
    let tail: f64 = tail_rule
        .nodes
        .par_iter()
        .zip(tail_rule.weights.par_iter())
        .map(|(&t, &g)| g * (t * cosine_sum(&tail_fourier, t)).abs())
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let tail_ratio = 2.0 * tail / abs_first_moment;
    if tail_ratio > TAIL_TOLERANCE {
        return Err(Error::Truncation(format!(
            "tail of |t w(t)| beyond t_max = {t_max} is {tail_ratio:e} of the total; increase t_max_factor"
        )));
    }

    Ok(WeightFunction {
        gamma,
        sharpness,
        fourier,
        t_rule,
        t_values,
        t_max,
        normalization,
        first_moment,
        abs_first_moment,
        tail_ratio,
    })
}

impl WeightFunction {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// The bump `ŵ_γ(ξ)`, exactly 1 at 0 and 0 for `|ξ| ≥ γ`.
    pub fn profile(&self, xi: f64) -> f64 {
        1.0 + profile_minus_one(xi, self.gamma, self.sharpness)
    }

    /// `ŵ_γ(ξ) − 1` without cancellation near `ξ = 0`.
    pub fn profile_minus_one(&self, xi: f64) -> f64 {
        profile_minus_one(xi, self.gamma, self.sharpness)
    }

    /// `w_γ(t) = (1/2π) ∫ ŵ_γ(ξ) cos(ξt) dξ`.
    pub fn eval(&self, t: f64) -> f64 {
        cosine_sum(&self.fourier, t)
    }

    /// The `t`-quadrature rule on `[−t_max, t_max]`.
    pub fn t_rule(&self) -> &QuadratureRule {
        &self.t_rule
    }

    /// `w_γ` at the nodes of [`Self::t_rule`].
    pub fn t_values(&self) -> &[f64] {
        &self.t_values
    }

    /// `∫ w_γ(t) cos(ξt) dt` by the `t`-rule, which recovers `ŵ_γ(ξ)`.
    pub fn reconstruct(&self, xi: f64) -> f64 {
        self.t_rule.iter().zip(&self.t_values).map(|((t, g), w)| g * w * (xi * t).cos()).sum()
    }

    /// `max |w(t) − w(−t)|` over the quadrature nodes.
    pub fn evenness_defect(&self) -> f64 {
        self.t_rule.nodes.iter().map(|&t| (self.eval(t) - self.eval(-t)).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contract_for_several_gammas() {
        for gamma in [0.5, 1.0, 2.0, 5.0] {
            let wf = build_weight_function(gamma, &WeightFunctionSettings::default()).unwrap();
            assert_eq!(wf.profile(0.0), 1.0);
            assert_eq!(wf.profile(gamma), 0.0);
            assert!((wf.normalization - 1.0).abs() < 1e-8, "{gamma}: {}", wf.normalization);
            assert!(wf.first_moment.abs() < 1e-8);
            assert!(wf.tail_ratio < TAIL_TOLERANCE);
            for k in 0..40 {
                let xi = gamma * (1.05 + k as f64 * (10.0 - 1.05) / 39.0);
                assert!(wf.reconstruct(xi).abs() < 1e-6, "{gamma} {xi}");
            }
            assert!((wf.reconstruct(0.5 * gamma) - wf.profile(0.5 * gamma)).abs() < 1e-8);
        }
    }

    #[test]
    fn profile_near_zero() {
        let wf = build_weight_function(2.0, &WeightFunctionSettings::default()).unwrap();
        let xi = 1e-9;
        let expected = -(xi / 2.0f64).powi(2);
        assert!((wf.profile_minus_one(xi) - expected).abs() < 1e-12 * expected.abs());
        assert_eq!(wf.evenness_defect(), 0.0);
    }

    #[test]
    fn short_truncation_is_rejected() {
        let s = WeightFunctionSettings { t_max_factor: 20.0, ..Default::default() };
        assert!(matches!(build_weight_function(1.0, &s), Err(Error::Truncation(_))));
        assert!(build_weight_function(0.0, &WeightFunctionSettings::default()).is_err());
    }
}
